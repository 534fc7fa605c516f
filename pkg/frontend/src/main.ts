/** Browser entry point: wires the session to the DOM renderer. */

import { ApiClient } from "./api.js";
import { Handlers, render } from "./dom.js";
import { AnnotatorSession } from "./session.js";

const API_BASE = new URLSearchParams(window.location.search).get("api") ?? "";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app element");
}

const session = new AnnotatorSession(new ApiClient(API_BASE));

function repaint(): void {
  render(root as HTMLElement, session.view, handlers);
}

function run(action: () => Promise<unknown>): void {
  session.view.error = null;
  action()
    .catch((error: unknown) => {
      session.view.error = error instanceof Error ? error.message : String(error);
    })
    .finally(repaint);
}

const handlers: Handlers = {
  onStart: () => run(() => session.start()),
  onQuizSubmit: (answers) => run(() => session.answerQuiz(answers)),
  onSurveySubmit: (fields) => run(() => session.answerSurvey(fields)),
  onHighlightChange: (next) => {
    session.updateHighlight(next);
    repaint();
  },
  onSubmitSpans: () => run(() => session.submit()),
  onContinue: () => run(() => session.acknowledgeFeedback()),
};

repaint();
