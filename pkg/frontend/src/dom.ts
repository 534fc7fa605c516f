/** DOM rendering for the annotator screens. Pure logic lives elsewhere. */

import { SurveyFields } from "./api.js";
import { FeedbackView, SpanPayload, formatFScore } from "./feedback.js";
import { HighlightState, TokenRange, beginDrag, endDrag, updateDrag } from "./highlight.js";
import { SessionView } from "./session.js";
import { TokenBoundary } from "./tokens.js";

export interface Handlers {
  onStart: () => void;
  onQuizSubmit: (answers: boolean[]) => void;
  onSurveySubmit: (fields: SurveyFields) => void;
  onHighlightChange: (next: (s: HighlightState) => HighlightState) => void;
  onSubmitSpans: () => void;
  onContinue: () => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

const INSTRUCTIONS: { rule: string; example: string }[] = [
  {
    rule: "Mark every disease name, including its short forms.",
    example: "Both mentions in 'cystic fibrosis (CF)' get their own highlight.",
  },
  {
    rule: "Cover the whole disease phrase, never a fragment.",
    example: "'juvenile idiopathic arthritis' is one highlight; 'arthritis' alone is too little.",
  },
  {
    rule: "A phrase naming several diseases at once stays one highlight.",
    example: "'Tay-Sachs and Gaucher disease' is a single span.",
  },
  {
    rule: "Symptoms count as mentions.",
    example: "Mark 'chronic joint pain' and 'muscle weakness'.",
  },
  {
    rule: "Repeated mentions are marked every time they appear.",
    example: "A disease named three times gets three highlights.",
  },
  {
    rule: "Leave gene names alone.",
    example: "In 'the TP53 gene is linked to sarcoma', only 'sarcoma' is marked.",
  },
];

function renderIntro(root: HTMLElement, handlers: Handlers): void {
  const box = el("div", "panel");
  box.appendChild(el("h1", undefined, "Disease span annotation"));
  box.appendChild(
    el(
      "p",
      undefined,
      "Mark the words and phrases that name a disease, a family of " +
        "diseases, or a symptom. Click a word to highlight it, sweep across " +
        "several words for a phrase, and click a highlight to remove it.",
    ),
  );
  const list = el("ol", "instructions");
  for (const item of INSTRUCTIONS) {
    const li = el("li");
    li.appendChild(el("strong", undefined, item.rule));
    li.appendChild(el("div", "example", item.example));
    list.appendChild(li);
  }
  box.appendChild(list);
  const button = el("button", "primary", "Take the qualification test");
  button.addEventListener("click", handlers.onStart);
  box.appendChild(button);
  root.appendChild(box);
}

function renderQuiz(root: HTMLElement, view: SessionView, handlers: Handlers): void {
  const box = el("div", "panel");
  box.appendChild(el("h1", undefined, "Qualification test"));
  box.appendChild(el("p", undefined, "Mark each statement true or false. You need 80% to qualify."));
  const form = el("form");
  view.questions.forEach((question, i) => {
    const row = el("fieldset", "quiz-row");
    row.appendChild(el("legend", undefined, `${i + 1}. ${question}`));
    for (const value of ["true", "false"]) {
      const label = el("label");
      const input = el("input");
      input.type = "radio";
      input.name = `q${i}`;
      input.value = value;
      if (value === "true") input.checked = true;
      label.appendChild(input);
      label.appendChild(document.createTextNode(value));
      row.appendChild(label);
    }
    form.appendChild(row);
  });
  const button = el("button", "primary", "Submit answers");
  button.type = "submit";
  form.appendChild(button);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const answers = view.questions.map((_, i) => data.get(`q${i}`) === "true");
    handlers.onQuizSubmit(answers);
  });
  box.appendChild(form);
  root.appendChild(box);
}

const SURVEY_FIELDS: { name: keyof SurveyFields & string; label: string; options: string[] }[] = [
  { name: "gender", label: "Gender", options: ["female", "male", "nonbinary", "undisclosed"] },
  { name: "age", label: "Age", options: ["18-25", "26-35", "36-45", "46+"] },
  { name: "occupation", label: "Occupation", options: ["technical", "science", "student", "unemployed", "other"] },
  { name: "education", label: "Education", options: ["high-school", "college", "masters", "phd"] },
];

const MOTIVATIONS = ["earn-money", "help-science", "entertainment"];

function renderSurvey(root: HTMLElement, handlers: Handlers): void {
  const box = el("div", "panel");
  box.appendChild(el("h1", undefined, "A few questions about you"));
  const form = el("form");
  for (const field of SURVEY_FIELDS) {
    const row = el("label", "survey-row", `${field.label}: `);
    const select = el("select");
    select.name = field.name;
    for (const option of field.options) {
      const opt = el("option", undefined, option);
      opt.value = option;
      select.appendChild(opt);
    }
    row.appendChild(select);
    form.appendChild(row);
  }
  const motivationRow = el("fieldset", "survey-row");
  motivationRow.appendChild(el("legend", undefined, "Why are you doing this? (pick at least one)"));
  for (const motivation of MOTIVATIONS) {
    const label = el("label");
    const input = el("input");
    input.type = "checkbox";
    input.name = "motivations";
    input.value = motivation;
    label.appendChild(input);
    label.appendChild(document.createTextNode(motivation));
    motivationRow.appendChild(label);
  }
  form.appendChild(motivationRow);
  const button = el("button", "primary", "Continue");
  button.type = "submit";
  form.appendChild(button);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const motivations = data.getAll("motivations").map(String);
    if (motivations.length === 0) {
      alert("Please pick at least one motivation.");
      return;
    }
    handlers.onSurveySubmit({
      gender: String(data.get("gender")),
      age: String(data.get("age")),
      occupation: String(data.get("occupation")),
      education: String(data.get("education")),
      motivations,
    });
  });
  box.appendChild(form);
  root.appendChild(box);
}

function tokenClass(
  index: number,
  highlight: HighlightState | null,
  marks?: Map<number, string>,
): string {
  const classes = ["token"];
  if (highlight) {
    if (highlight.selected.some((r: TokenRange) => r.first <= index && index <= r.last)) {
      classes.push("selected");
    }
    const drag = highlight.pendingDrag;
    if (drag) {
      const lo = Math.min(drag.anchor, drag.current);
      const hi = Math.max(drag.anchor, drag.current);
      if (lo <= index && index <= hi) classes.push("dragging");
    }
  }
  const mark = marks?.get(index);
  if (mark) classes.push(mark);
  return classes.join(" ");
}

function renderTokens(
  container: HTMLElement,
  text: string,
  tokens: readonly TokenBoundary[],
  highlight: HighlightState | null,
  handlers: Handlers | null,
  marks?: Map<number, string>,
): void {
  tokens.forEach((t, i) => {
    const word = el("span", tokenClass(i, highlight, marks), text.slice(t.start, t.end));
    word.dataset.index = String(i);
    if (handlers && highlight) {
      word.addEventListener("mousedown", (event) => {
        event.preventDefault();
        handlers.onHighlightChange((s) => beginDrag(s, i));
      });
      word.addEventListener("mouseenter", () => {
        handlers.onHighlightChange((s) => updateDrag(s, i));
      });
      word.addEventListener("mouseup", () => {
        handlers.onHighlightChange((s) => endDrag(s));
      });
    }
    container.appendChild(word);
    container.appendChild(document.createTextNode(" "));
  });
}

function markTokens(
  tokens: readonly TokenBoundary[],
  spans: readonly SpanPayload[],
  cls: string,
  into: Map<number, string>,
): void {
  tokens.forEach((t, i) => {
    if (spans.some((s) => t.start < s.end && t.end > s.start) && !into.has(i)) {
      into.set(i, cls);
    }
  });
}

function renderAnnotate(root: HTMLElement, view: SessionView, handlers: Handlers): void {
  const task = view.task;
  if (!task) return;
  const box = el("div", "panel wide");
  box.appendChild(el("h1", undefined, task.context === "TRAINING" ? "Training document" : "Annotate this abstract"));
  const doc = el("div", "document");
  const text = `${task.title} ${task.body}`;
  renderTokens(doc, text, view.tokens, view.highlight, handlers);
  box.appendChild(doc);
  const button = el("button", "primary", "Submit annotations");
  button.addEventListener("click", handlers.onSubmitSpans);
  box.appendChild(button);
  root.appendChild(box);
}

function spanGroup(title: string, cls: string, spans: readonly SpanPayload[]): HTMLElement {
  const group = el("div", `feedback-group ${cls}`);
  group.appendChild(el("h2", undefined, `${title} (${spans.length})`));
  const list = el("ul");
  for (const span of spans) {
    list.appendChild(el("li", undefined, span.surface ?? `[${span.start}, ${span.end})`));
  }
  group.appendChild(list);
  return group;
}

function renderFeedback(root: HTMLElement, view: SessionView, handlers: Handlers): void {
  const feedback = view.feedback;
  const task = view.task;
  if (!feedback || !task) return;
  const box = el("div", "panel wide");
  const text = `${task.title} ${task.body}`;
  switch (feedback.kind) {
    case "gold": {
      box.appendChild(el("h1", undefined, `Your F score: ${formatFScore(feedback.fScore)}`));
      if (feedback.incorrect.length === 0 && feedback.missed.length === 0) {
        box.appendChild(el("p", "all-correct", "Everything correct on this document."));
      }
      const marks = new Map<number, string>();
      markTokens(view.tokens, feedback.incorrect, "mark-incorrect", marks);
      markTokens(view.tokens, feedback.missed, "mark-missed", marks);
      markTokens(view.tokens, feedback.correct, "mark-correct", marks);
      const doc = el("div", "document");
      renderTokens(doc, text, view.tokens, null, null, marks);
      box.appendChild(doc);
      box.appendChild(spanGroup("Correct", "correct", feedback.correct));
      box.appendChild(spanGroup("Missed (false negatives)", "missed", feedback.missed));
      box.appendChild(spanGroup("Incorrectly marked (false positives)", "incorrect", feedback.incorrect));
      break;
    }
    case "peer": {
      box.appendChild(el("h1", undefined, "What other annotators marked"));
      for (const layer of feedback.layers) {
        const marks = new Map<number, string>();
        markTokens(view.tokens, layer.spans, "mark-peer", marks);
        box.appendChild(el("h2", undefined, layer.alias));
        const doc = el("div", "document");
        renderTokens(doc, text, view.tokens, null, null, marks);
        box.appendChild(doc);
      }
      break;
    }
    case "none":
      box.appendChild(el("h1", undefined, "Submission recorded"));
      box.appendChild(el("p", undefined, "You are the first annotator on this document."));
      break;
    case "error":
      box.appendChild(el("div", "error-banner", `Feedback error: ${feedback.message}`));
      break;
  }
  const button = el("button", "primary", "Next document");
  button.addEventListener("click", handlers.onContinue);
  box.appendChild(button);
  root.appendChild(box);
}

function renderTerminal(root: HTMLElement, title: string, message: string): void {
  const box = el("div", "panel");
  box.appendChild(el("h1", undefined, title));
  box.appendChild(el("p", undefined, message));
  root.appendChild(box);
}

export function render(root: HTMLElement, view: SessionView, handlers: Handlers): void {
  root.replaceChildren();
  if (view.error) {
    root.appendChild(el("div", "error-banner", view.error));
  }
  switch (view.screen) {
    case "intro":
      renderIntro(root, handlers);
      break;
    case "quiz":
      renderQuiz(root, view, handlers);
      break;
    case "survey":
      renderSurvey(root, handlers);
      break;
    case "annotate":
      renderAnnotate(root, view, handlers);
      break;
    case "feedback":
      renderFeedback(root, view, handlers);
      break;
    case "rejected":
      renderTerminal(
        root,
        "Qualification not passed",
        `Your score was ${view.quizResult ? formatFScore(view.quizResult.score) : "too low"}; the threshold is 0.80.`,
      );
      break;
    case "blocked":
      renderTerminal(
        root,
        "Annotation stopped",
        "Your recent accuracy on check documents was too low to continue.",
      );
      break;
    case "done":
      renderTerminal(root, "All done", "There are no more documents to annotate. Thank you!");
      break;
  }
}
