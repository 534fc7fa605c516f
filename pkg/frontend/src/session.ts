/**
 * One annotator's session: the client-side state machine that mirrors the
 * server lifecycle. The annotation screen is reachable only after the server
 * reports a TRAINING or ACTIVE task; rejection and blocking are terminal.
 */

import { ApiClient, QuizResult, SurveyFields, TaskPayload } from "./api.js";
import {
  HighlightState,
  emptyState,
  selectionCharSpans,
} from "./highlight.js";
import { FeedbackView, buildFeedbackView } from "./feedback.js";
import { TokenBoundary, fullText, tokenize } from "./tokens.js";

export type Screen =
  | "intro"
  | "quiz"
  | "survey"
  | "annotate"
  | "feedback"
  | "rejected"
  | "blocked"
  | "done";

export interface SessionView {
  screen: Screen;
  workerId: string | null;
  questions: string[];
  quizResult: QuizResult | null;
  task: TaskPayload | null;
  tokens: TokenBoundary[];
  highlight: HighlightState | null;
  feedback: FeedbackView | null;
  error: string | null;
}

function freshView(): SessionView {
  return {
    screen: "intro",
    workerId: null,
    questions: [],
    quizResult: null,
    task: null,
    tokens: [],
    highlight: null,
    feedback: null,
    error: null,
  };
}

let tokenCounter = 0;

function newRequestToken(): string {
  tokenCounter += 1;
  const noise = Math.random().toString(36).slice(2, 10);
  return `req-${Date.now()}-${tokenCounter}-${noise}`;
}

export class AnnotatorSession {
  view: SessionView = freshView();

  constructor(private readonly client: ApiClient) {}

  /** Register and move to the quiz screen. */
  async start(): Promise<SessionView> {
    this.view = freshView();
    this.view.workerId = await this.client.register();
    this.view.questions = await this.client.quizQuestions();
    this.view.screen = "quiz";
    return this.view;
  }

  async answerQuiz(answers: boolean[]): Promise<SessionView> {
    this.requireScreen("quiz");
    const result = await this.client.submitQuiz(this.workerId(), answers);
    this.view.quizResult = result;
    this.view.screen = result.passed ? "survey" : "rejected";
    return this.view;
  }

  async answerSurvey(fields: SurveyFields): Promise<SessionView> {
    this.requireScreen("survey");
    await this.client.submitSurvey(this.workerId(), fields);
    return this.loadTask();
  }

  /** Fetch the next assignment; 204 means the session is complete. */
  async loadTask(): Promise<SessionView> {
    const task = await this.client.nextTask(this.workerId());
    if (task === null) {
      this.view.screen = "done";
      this.view.task = null;
      this.view.highlight = null;
      return this.view;
    }
    this.view.task = task;
    this.view.tokens = tokenize(fullText(task.title, task.body));
    this.view.highlight = emptyState(this.view.tokens.length);
    this.view.feedback = null;
    this.view.screen = "annotate";
    return this.view;
  }

  /** Apply a highlight-state transition (wired to the pointer handlers). */
  updateHighlight(next: (state: HighlightState) => HighlightState): SessionView {
    this.requireScreen("annotate");
    if (this.view.highlight === null) throw new Error("no highlight state");
    this.view.highlight = next(this.view.highlight);
    return this.view;
  }

  /** Submit the current selection and show the feedback screen. */
  async submit(): Promise<SessionView> {
    this.requireScreen("annotate");
    const task = this.view.task;
    const highlight = this.view.highlight;
    if (task === null || highlight === null) throw new Error("nothing to submit");
    const spans = selectionCharSpans(highlight, this.view.tokens);
    const payload = await this.client.submitSpans(
      this.workerId(),
      task.doc_id,
      spans,
      newRequestToken(),
    );
    this.view.feedback = buildFeedbackView(payload, spans);
    if (payload.worker_state === "BLOCKED") {
      this.view.screen = "blocked";
    } else {
      this.view.screen = "feedback";
    }
    return this.view;
  }

  /** Leave the feedback screen for the next task. */
  async acknowledgeFeedback(): Promise<SessionView> {
    this.requireScreen("feedback");
    return this.loadTask();
  }

  private workerId(): string {
    if (this.view.workerId === null) throw new Error("session not started");
    return this.view.workerId;
  }

  private requireScreen(expected: Screen): void {
    if (this.view.screen !== expected) {
      throw new Error(`expected ${expected} screen, on ${this.view.screen}`);
    }
  }
}
