"""Exception types shared across the package."""


class CapforgeError(Exception):
    """Base class for all capforge errors."""


class ParseError(CapforgeError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DuplicateId(CapforgeError):
    def __init__(self, audio_id: str):
        super().__init__(f"duplicate audio_id: {audio_id!r}")
        self.audio_id = audio_id


class ConfigMismatch(CapforgeError):
    """Checkpoint was written by a run with a different configuration."""


class BackendUnavailable(CapforgeError):
    """Backend did not answer successfully after all retries."""


class MalformedResponse(CapforgeError):
    """Backend answered but the payload violates the wire schema."""


class DimensionMismatch(CapforgeError):
    pass


class NonFinite(CapforgeError):
    pass


class ExtractionEmpty(CapforgeError):
    """Overall description was blank after trimming."""


class EmptyCaption(CapforgeError):
    pass


class MissingDescription(CapforgeError):
    pass


class BadTemplate(CapforgeError):
    pass


class InvalidK(CapforgeError):
    pass


class EmptyClasses(CapforgeError):
    pass


class UnknownRater(CapforgeError):
    pass


class UnknownItem(CapforgeError):
    pass


class InvalidScore(CapforgeError):
    pass


class ZeroProbabilityTarget(Warning):
    """Target token had probability zero; the NLL is +inf."""
