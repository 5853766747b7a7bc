/** End-to-end: drives the real rating service (Python) through the same
 * client + flow the browser uses, then checks the server-side report.
 */
import { ChildProcess, spawn } from "node:child_process";
import { mkdtemp, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { RatingFlow } from "../src/flow.js";

const PORT = 18200 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;

const SERVER_SCRIPT = `
import sys, uvicorn
from capforge.mosvc import RatingStore, create_app, load_items

items_path, log_path, port = sys.argv[1], sys.argv[2], int(sys.argv[3])
store = RatingStore(load_items(items_path), log_path=log_path)
uvicorn.run(create_app(store), host="127.0.0.1", port=port, log_level="warning")
`;

let server: ChildProcess;

async function waitForServer(): Promise<void> {
  const deadline = Date.now() + 20_000;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${BASE}/api/report`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error("rating service did not come up");
}

beforeAll(async () => {
  const dir = await mkdtemp(join(tmpdir(), "rater-ui-e2e-"));
  const items = ["s0", "s1", "s2"].map((sid) => ({
    sample_id: sid,
    audio_uri: `/media/${sid}.wav`,
    annotation_source: "generated",
    annotation_text: `caption for ${sid}`,
  }));
  const itemsPath = join(dir, "items.jsonl");
  await writeFile(itemsPath, items.map((x) => JSON.stringify(x)).join("\n"));

  server = spawn(
    "python3",
    ["-c", SERVER_SCRIPT, itemsPath, join(dir, "ratings.jsonl"), String(PORT)],
    { stdio: ["ignore", "inherit", "inherit"] },
  );
  await waitForServer();
}, 30_000);

afterAll(() => {
  server?.kill();
});

describe("rating flow against the live service", () => {
  it("completes the session; report mean matches the hand-computed mean", async () => {
    const flow = new RatingFlow(new ApiClient(BASE));
    const scores = [4, 3, 5]; // hand-computed mean: 4.0
    await flow.start();

    let step = 0;
    while (flow.state === "rating") {
      expect(flow.view?.audioUrl).toMatch(/\/media\/s\d\.wav/);
      flow.markPlayed();
      flow.selectScore(scores[step] as number);
      if (step === 0) {
        // double click on the first item: exactly one stored rating
        await Promise.all([flow.submit(), flow.submit()]);
      } else {
        await flow.submit();
      }
      step += 1;
      expect(step).toBeLessThanOrEqual(scores.length);
    }

    expect(flow.state).toBe("done");
    expect(step).toBe(3);

    const report = await new ApiClient(BASE).report();
    expect(report.n_ratings).toBe(3); // double submit did not duplicate
    const generated = report.sources.find((s) => s.source === "generated");
    expect(generated?.n_ratings).toBe(3);
    expect(generated?.mean).toBeCloseTo(4.0, 9);
  }, 30_000);
});
