/**
 * Feedback payload parsing and the view model the feedback screen renders.
 * Gold feedback shows three groups (correct, missed, incorrectly marked)
 * plus the F score; peer feedback shows other annotators' highlights as
 * read-only layers; a malformed payload becomes an error banner, never a
 * silent drop.
 */

export interface SpanPayload {
  start: number;
  end: number;
  surface?: string;
}

export interface FeedbackPayload {
  kind: "GOLD" | "PEER" | "NONE";
  f_score: number | null;
  false_positives: SpanPayload[];
  false_negatives: SpanPayload[];
  peer_spans: Record<string, SpanPayload[]>;
  worker_state: string;
}

export type FeedbackView =
  | {
      kind: "gold";
      fScore: number;
      correct: SpanPayload[];
      missed: SpanPayload[];
      incorrect: SpanPayload[];
    }
  | { kind: "peer"; layers: { alias: string; spans: SpanPayload[] }[] }
  | { kind: "none" }
  | { kind: "error"; message: string };

function isSpan(value: unknown): value is SpanPayload {
  return (
    typeof value === "object" &&
    value !== null &&
    Number.isInteger((value as SpanPayload).start) &&
    Number.isInteger((value as SpanPayload).end) &&
    (value as SpanPayload).start < (value as SpanPayload).end
  );
}

function spanList(value: unknown): SpanPayload[] | null {
  if (!Array.isArray(value) || !value.every(isSpan)) return null;
  return [...value].sort((a, b) => a.start - b.start || a.end - b.end);
}

function sameSpan(a: SpanPayload, b: SpanPayload): boolean {
  return a.start === b.start && a.end === b.end;
}

/**
 * Build the screen's view model from the raw server payload. `submitted` is
 * what this annotator sent; correct spans are the submitted ones the server
 * did not flag as false positives.
 */
export function buildFeedbackView(
  payload: unknown,
  submitted: readonly SpanPayload[],
): FeedbackView {
  if (typeof payload !== "object" || payload === null) {
    return { kind: "error", message: "feedback payload is not an object" };
  }
  const raw = payload as Partial<FeedbackPayload>;
  switch (raw.kind) {
    case "GOLD": {
      const incorrect = spanList(raw.false_positives);
      const missed = spanList(raw.false_negatives);
      if (incorrect === null || missed === null || typeof raw.f_score !== "number") {
        return { kind: "error", message: "malformed gold feedback payload" };
      }
      const correct = submitted
        .filter((s) => !incorrect.some((fp) => sameSpan(fp, s)))
        .sort((a, b) => a.start - b.start);
      return { kind: "gold", fScore: raw.f_score, correct, missed, incorrect };
    }
    case "PEER": {
      if (typeof raw.peer_spans !== "object" || raw.peer_spans === null) {
        return { kind: "error", message: "malformed peer feedback payload" };
      }
      const layers: { alias: string; spans: SpanPayload[] }[] = [];
      for (const alias of Object.keys(raw.peer_spans).sort()) {
        const spans = spanList(raw.peer_spans[alias]);
        if (spans === null) {
          return { kind: "error", message: `malformed peer layer ${alias}` };
        }
        layers.push({ alias, spans });
      }
      return { kind: "peer", layers };
    }
    case "NONE":
      return { kind: "none" };
    default:
      return { kind: "error", message: `unknown feedback kind ${String(raw.kind)}` };
  }
}

/** "0.80"-style rendering used next to the gold feedback groups. */
export function formatFScore(fScore: number): string {
  return fScore.toFixed(2);
}
