/** Typed client for the annotation service; see the backend's docs/api.md. */

import { CharSpan } from "./tokens.js";
import { FeedbackPayload } from "./feedback.js";

export interface TaskPayload {
  doc_id: string;
  title: string;
  body: string;
  context: "TRAINING" | "GOLD_FEEDBACK" | "REGULAR";
}

export interface QuizResult {
  score: number;
  passed: boolean;
  state: string;
}

export interface SurveyFields {
  gender: string;
  age: string;
  occupation: string;
  education: string;
  motivations: string[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (response.status === 204) {
      return null as T;
    }
    const payload = await response.json().catch(() => null);
    if (!response.ok) {
      const detail =
        payload && typeof payload === "object" && "error" in payload
          ? String((payload as { error: unknown }).error)
          : response.statusText;
      throw new ApiError(response.status, detail);
    }
    return payload as T;
  }

  health(): Promise<{ status: string; documents: number }> {
    return this.request("GET", "/health");
  }

  async register(): Promise<string> {
    const body = await this.request<{ worker_id: string }>("POST", "/workers", {});
    return body.worker_id;
  }

  async quizQuestions(): Promise<string[]> {
    const body = await this.request<{ questions: string[] }>("GET", "/quiz");
    return body.questions;
  }

  submitQuiz(workerId: string, answers: boolean[]): Promise<QuizResult> {
    return this.request("POST", `/workers/${workerId}/quiz`, { answers });
  }

  async submitSurvey(workerId: string, fields: SurveyFields): Promise<string> {
    const body = await this.request<{ state: string }>(
      "POST",
      `/workers/${workerId}/survey`,
      fields,
    );
    return body.state;
  }

  /** null means 204: nothing left to annotate. */
  nextTask(workerId: string): Promise<TaskPayload | null> {
    return this.request("GET", `/workers/${workerId}/next-task`);
  }

  submitSpans(
    workerId: string,
    docId: string,
    spans: readonly CharSpan[],
    requestToken: string,
  ): Promise<FeedbackPayload> {
    return this.request("POST", `/workers/${workerId}/submissions`, {
      request_token: requestToken,
      doc_id: docId,
      spans: spans.map((s) => ({ start: s.start, end: s.end })),
    });
  }
}
