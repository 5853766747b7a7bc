/** DOM wiring: renders the rating flow into the static page shell.
 * Kept intentionally thin — all behavior lives in flow.ts, which is what
 * the test suite exercises.
 */

import { ApiClient } from "./api.js";
import { RATING_QUESTION, RatingFlow, SCORE_LABELS } from "./flow.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function mount(root: Document = document): RatingFlow {
  const flow = new RatingFlow(new ApiClient(""));

  const question = el<HTMLParagraphElement>("question");
  const audio = el<HTMLAudioElement>("audio");
  const annotation = el<HTMLParagraphElement>("annotation");
  const scores = el<HTMLDivElement>("scores");
  const submit = el<HTMLButtonElement>("submit");
  const progress = el<HTMLSpanElement>("progress");
  const panelRating = el<HTMLDivElement>("panel-rating");
  const panelDone = el<HTMLDivElement>("panel-done");
  const panelError = el<HTMLDivElement>("panel-error");
  const errorText = el<HTMLParagraphElement>("error-text");
  const retryButton = el<HTMLButtonElement>("retry");

  question.textContent = RATING_QUESTION;

  scores.replaceChildren(
    ...Object.entries(SCORE_LABELS).map(([value, label]) => {
      const button = root.createElement("button");
      button.type = "button";
      button.className = "score";
      button.dataset.score = value;
      button.textContent = `${value} — ${label}`;
      button.addEventListener("click", () => flow.selectScore(Number(value)));
      return button;
    }),
  );

  audio.addEventListener("play", () => flow.markPlayed());
  submit.addEventListener("click", () => void flow.submit());
  retryButton.addEventListener("click", () => void flow.retry());

  flow.onChange(() => {
    const view = flow.view;
    panelRating.hidden = !(flow.state === "rating" || flow.state === "submitting");
    panelDone.hidden = flow.state !== "done";
    panelError.hidden = flow.state !== "error";
    errorText.textContent = flow.error;
    if (view) {
      if (audio.src !== view.audioUrl) audio.src = view.audioUrl;
      annotation.textContent = view.annotationText;
      progress.textContent = `rated: ${view.rated}`;
      submit.disabled = !view.canSubmit || flow.state === "submitting";
      for (const button of scores.querySelectorAll<HTMLButtonElement>(".score")) {
        button.classList.toggle(
          "selected",
          Number(button.dataset.score) === view.score,
        );
      }
    }
  });

  void flow.start();
  return flow;
}

if (typeof document !== "undefined" && document.getElementById("panel-rating")) {
  mount();
}
