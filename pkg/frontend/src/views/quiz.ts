/** Quiz-taking and report view-models. The question model is built only
 * from fields the redacted wire type carries, so a correct answer cannot
 * leak into the DOM even if the server ever over-shared. */

import type { QuizReportWire, QuizResultWire, QuizWire } from "../types.js";

export type QuizQuestionView = {
  index: number;
  stem: string;
  options: string[];
  picked: number | null;
};

export type QuizView = {
  quizId: string;
  questions: QuizQuestionView[];
  complete: boolean;
};

export function quizView(quiz: QuizWire, picks: Array<number | null>): QuizView {
  const questions = quiz.questions.map((q, index) => ({
    index,
    stem: q.stem,
    options: [...q.options],
    picked: picks[index] ?? null,
  }));
  return {
    quizId: quiz.quiz_id,
    questions,
    complete: questions.every((q) => q.picked !== null),
  };
}

export type ReportView = {
  scoreDisplay: string;
  correct: number;
  total: number;
  areasOfConfusion: string[];
  narrative: string;
};

export function reportView(result: QuizResultWire, report: QuizReportWire): ReportView {
  return {
    scoreDisplay: result.score_display,
    correct: result.score.correct,
    total: result.score.total,
    areasOfConfusion: report.weak_concepts.map((w) => w.concept_tag),
    narrative: report.narrative,
  };
}
