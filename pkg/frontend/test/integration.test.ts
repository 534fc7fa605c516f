/**
 * Scripted end-to-end session against a live backend instance: register,
 * pass the quiz with 8/10, survey, annotate the four training documents and
 * one regular document. Verifies that the spans the server persisted are
 * exactly the token-snapped character spans of the scripted token
 * selections, and that the feedback screen's group counts equal the server
 * payload. Set CROWDSPAN_SKIP_SERVER=1 to skip (e.g. when the Python
 * package is not installed).
 */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { buildFeedbackView } from "../src/feedback.js";
import {
  dragSelect,
  emptyState,
  selectionCharSpans,
  toggleToken,
} from "../src/highlight.js";
import { AnnotatorSession } from "../src/session.js";
import { fullText, tokenize } from "../src/tokens.js";

const SKIP = process.env.CROWDSPAN_SKIP_SERVER === "1";
const PORT = 8600 + (process.pid % 1000);
const BASE = `http://127.0.0.1:${PORT}`;
const CORPUS = fileURLToPath(new URL("./fixtures/corpus.txt", import.meta.url));

// Answer key of the backend's default quiz bank, with the last two flipped
// to score exactly 8/10.
const QUIZ_KEY = [true, false, true, true, false, false, true, false, true, false];
const ANSWERS_8_OF_10 = QUIZ_KEY.map((k, i) => (i < 8 ? k : !k));

let server: ChildProcess | null = null;
let logPath = "";

async function waitForHealth(): Promise<void> {
  for (let i = 0; i < 60; i++) {
    try {
      const response = await fetch(`${BASE}/health`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("backend did not come up");
}

beforeAll(async () => {
  if (SKIP) return;
  logPath = join(mkdtempSync(join(tmpdir(), "crowdspan-ui-")), "events.jsonl");
  server = spawn(
    "python3",
    [
      "-m", "crowdspan.cli", "serve",
      "--corpus", CORPUS,
      "--seed", "5",
      "--port", String(PORT),
      "--log", logPath,
    ],
    { stdio: "ignore" },
  );
  await waitForHealth();
}, 30_000);

afterAll(() => {
  server?.kill();
});

interface SubmittedEvent {
  kind: string;
  payload: {
    worker_id: string;
    doc_id: string;
    spans: [number, number][];
    context: string;
  };
}

function submittedEvents(workerId: string): SubmittedEvent[] {
  return readFileSync(logPath, "utf-8")
    .split("\n")
    .filter((line) => line.trim() !== "")
    .map((line) => JSON.parse(line) as SubmittedEvent)
    .filter((e) => e.kind === "SUBMITTED" && e.payload.worker_id === workerId);
}

describe.skipIf(SKIP)("scripted browser session against a live backend", () => {
  it("round-trips token selections and renders server feedback counts", async () => {
    const session = new AnnotatorSession(new ApiClient(BASE));
    await session.start();
    expect(session.view.screen).toBe("quiz");
    expect(session.view.questions).toHaveLength(10);

    await session.answerQuiz(ANSWERS_8_OF_10);
    expect(session.view.quizResult).toMatchObject({ passed: true });
    expect(session.view.quizResult!.score).toBeCloseTo(0.8, 10);
    expect(session.view.screen).toBe("survey");

    await session.answerSurvey({
      gender: "nonbinary",
      age: "26-35",
      occupation: "technical",
      education: "college",
      motivations: ["help-science", "entertainment"],
    });

    // Scripted selections per document: click token 0, drag tokens 2..4.
    const expected = new Map<string, { start: number; end: number }[]>();
    const contexts: string[] = [];
    for (let round = 0; round < 5; round++) {
      expect(session.view.screen).toBe("annotate");
      const task = session.view.task!;
      contexts.push(task.context);

      session.updateHighlight((s) => toggleToken(s, 0));
      session.updateHighlight((s) => dragSelect(s, 2, 4));
      const tokens = tokenize(fullText(task.title, task.body));
      const reference = emptyState(tokens.length);
      expected.set(
        task.doc_id,
        selectionCharSpans(dragSelect(toggleToken(reference, 0), 2, 4), tokens),
      );

      await session.submit();
      const feedback = session.view.feedback!;
      if (task.context === "TRAINING") {
        expect(feedback.kind).toBe("gold");
      } else {
        expect(["none", "peer"]).toContain(feedback.kind);
      }
      await session.acknowledgeFeedback();
    }
    expect(contexts).toEqual([
      "TRAINING", "TRAINING", "TRAINING", "TRAINING", "REGULAR",
    ]);

    // Server-side spans must equal snap(token selections), read back from
    // the event log the server persisted.
    const events = submittedEvents("w0001");
    expect(events).toHaveLength(5);
    for (const event of events) {
      const want = expected.get(event.payload.doc_id)!;
      expect(event.payload.spans).toEqual(want.map((s) => [s.start, s.end]));
    }

    // Feedback group counts must mirror the raw server payload.
    const client = new ApiClient(BASE);
    const task = session.view.task;
    expect(session.view.screen).toBe("annotate");
    const tokens2 = tokenize(fullText(task!.title, task!.body));
    const spans = selectionCharSpans(
      dragSelect(emptyState(tokens2.length), 1, 3),
      tokens2,
    );
    const payload = await client.submitSpans("w0001", task!.doc_id, spans, "probe-1");
    const view = buildFeedbackView(payload, spans);
    if (payload.kind === "GOLD") {
      expect(view.kind).toBe("gold");
      if (view.kind === "gold") {
        expect(view.incorrect).toHaveLength(payload.false_positives.length);
        expect(view.missed).toHaveLength(payload.false_negatives.length);
        expect(view.correct).toHaveLength(spans.length - payload.false_positives.length);
      }
    } else {
      expect(["NONE", "PEER"]).toContain(payload.kind);
    }
  }, 30_000);
});
