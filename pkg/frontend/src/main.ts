/** Browser entry: wires the API client, state, and view-models to the DOM.
 * Configuration: window.LEARNMATE_API_BASE or ?api= query parameter. */

import { ApiClient, ApiError } from "./api.js";
import { h, replaceChildren } from "./dom.js";
import { AppState, type Route } from "./state.js";
import { adaptReviewView, rejectProposal, submitDecision, undoPlan, type OpToggle } from "./views/adapt.js";
import { calendarView, categoryColor, moveSessionByDrag } from "./views/calendar.js";
import { historyView } from "./views/history.js";
import { buildProfilePayload, emptyDraft, planningView, type Dimension } from "./views/planning.js";
import { quizView, reportView } from "./views/quiz.js";
import { answerView, TIERS } from "./views/session.js";
import type { TierName } from "./types.js";

declare global {
  interface Window {
    LEARNMATE_API_BASE?: string;
  }
}

const apiBase =
  new URLSearchParams(location.search).get("api") ??
  window.LEARNMATE_API_BASE ??
  "http://127.0.0.1:8080";

const client = new ApiClient(apiBase, (url, init) => fetch(url, init));
const state = new AppState();
const draft = emptyDraft("learner");
const picks: Array<number | null> = [];
let videoUrls: Record<string, string | null> = {};
let courseId = "world-history-project";

const root = document.getElementById("app")!;
const toastBox = document.getElementById("toast")!;

function toast(message: string): void {
  toastBox.textContent = message;
  toastBox.classList.add("visible");
  setTimeout(() => toastBox.classList.remove("visible"), 4000);
}

function onApiError(error: unknown): void {
  if (error instanceof ApiError) {
    const detail = error.body.detail as { violations?: Array<{ detail: string }> } | null;
    const extra = detail?.violations?.map((v) => v.detail).join("; ") ?? "";
    toast(`${error.body.code}: ${error.body.message}${extra ? ` (${extra})` : ""}`);
  } else {
    toast(String(error));
  }
}

function nav(route: Route): void {
  state.route = route;
  render();
}

function promptDimension(dimension: Dimension): void {
  if (dimension === "goals") {
    draft.goalsText = window.prompt("What do you want to learn?", draft.goalsText) ?? draft.goalsText;
  } else if (dimension === "time") {
    const raw = window.prompt(
      "Weekly windows as 'weekday start end tz' lines (weekday 0=Mon..6=Sun), e.g.\n6 20:00 21:00 America/Chicago",
      "",
    );
    if (raw) {
      draft.windows = raw
        .split("\n")
        .map((line) => line.trim().split(/\s+/))
        .filter((parts) => parts.length === 4)
        .map(([weekday, start, end, tz]) => ({
          weekday: Number(weekday),
          start_time: start!,
          end_time: end!,
          timezone: tz!,
        }));
    }
  } else if (dimension === "pace") {
    const level = window.prompt("Pace: relaxed, standard, or intensive", "standard");
    if (level === "relaxed" || level === "standard" || level === "intensive") {
      draft.paceLevel = level;
    }
  } else {
    const mode = window.prompt("Path: sequential or custom", "sequential");
    if (mode === "sequential" || mode === "custom") {
      draft.pathMode = mode;
    }
  }
  render();
}

async function createPlan(): Promise<void> {
  try {
    const profile = buildProfilePayload(draft);
    await client.createProfile(profile);
    const plan = await client.createPlan(profile.learner_id, courseId);
    state.applyPlan(plan);
    nav("Calendar");
  } catch (error) {
    onApiError(error);
  }
}

function renderPlanning(): HTMLElement {
  const view = planningView(draft);
  return h(
    "section",
    { class: "panel" },
    h("h2", {}, "Plan your course"),
    h(
      "div",
      { class: "dimension-buttons" },
      ...view.buttons.map((b) =>
        h(
          "button",
          { class: b.filled ? "filled" : "", onclick: () => promptDimension(b.dimension) },
          `${b.label}${b.filled ? " ✓" : ""}`,
        ),
      ),
    ),
    h("label", {}, "Course id: "),
    h("input", {
      value: courseId,
      onchange: (e: Event) => {
        courseId = (e.target as HTMLInputElement).value;
      },
    }),
    h(
      "button",
      { class: "primary", disabled: !view.canSubmit, onclick: () => void createPlan() },
      "Generate plan",
    ),
  );
}

function renderCalendar(): HTMLElement {
  if (!state.planHead) {
    return h("section", { class: "panel" }, "No plan yet.");
  }
  const entries = calendarView(state.planHead);
  const list = h(
    "div",
    { class: "calendar" },
    ...entries.map((entry) =>
      h(
        "div",
        {
          class: "calendar-entry",
          draggable: true,
          style: `border-left: 6px solid ${categoryColor(entry.category)}`,
          ondragstart: (e: DragEvent) =>
            e.dataTransfer?.setData("text/plain", entry.sessionId),
        },
        h("strong", {}, entry.title),
        h("div", {}, `${entry.start} → ${entry.end}`),
        h(
          "button",
          { onclick: () => void openSession(entry.sessionId) },
          "Start session",
        ),
        h(
          "button",
          {
            onclick: async () => {
              const when = window.prompt(
                "New start (ISO with offset), duration preserved:",
                entry.start,
              );
              if (!when) return;
              const duration =
                new Date(entry.end).getTime() - new Date(entry.start).getTime();
              const newEnd = new Date(new Date(when).getTime() + duration).toISOString();
              const outcome = await moveSessionByDrag(
                client,
                state,
                entry.sessionId,
                when,
                newEnd,
              ).catch((error) => {
                onApiError(error);
                return null;
              });
              if (outcome && !outcome.moved) {
                toast(
                  outcome.violations
                    ? outcome.violations.violations.map((v) => v.detail).join("; ")
                    : "plan changed elsewhere; refreshed",
                );
              }
              render();
            },
          },
          "Move",
        ),
      ),
    ),
  );
  return h(
    "section",
    { class: "panel" },
    h("h2", {}, `Plan ${state.planHead.plan_id} (v${state.planHead.version})`),
    list,
    h("button", { onclick: () => void requestAdaptation() }, "Generate Adjusted Plan"),
    h("button", { onclick: () => void doUndo() }, "Undo last change"),
  );
}

async function openSession(sessionId: string): Promise<void> {
  try {
    const info = await client.startSession(sessionId);
    state.applySessionStart(info);
    render();
  } catch (error) {
    onApiError(error);
  }
}

async function ask(text: string): Promise<void> {
  if (!state.session) return;
  try {
    const answer = await client.askQuestion(state.session.info.session_id, text);
    state.applyAnswer(answer);
    render();
  } catch (error) {
    onApiError(error);
  }
}

async function expand(answerId: string, tier: TierName): Promise<void> {
  if (!state.session) return;
  try {
    const expansion = await client.expandAnswer(state.session.info.session_id, answerId, tier);
    const target = state.session.answers.find((a) => a.answer_id === answerId);
    if (target) target.expansions[tier] = expansion;
    render();
  } catch (error) {
    onApiError(error);
  }
}

async function endStudy(): Promise<void> {
  if (!state.session) return;
  try {
    const quiz = await client.endSession(state.session.info.session_id);
    picks.length = 0;
    picks.push(...quiz.questions.map(() => null));
    state.applyQuiz(quiz);
    render();
  } catch (error) {
    onApiError(error);
  }
}

function renderSession(): HTMLElement {
  if (!state.session) return h("section", { class: "panel" }, "No active session.");
  const answers = state.session.answers.map((a) => answerView(a, videoUrls));
  const questionInput = h("input", { placeholder: "Ask a Question" }) as HTMLInputElement;
  return h(
    "section",
    { class: "panel" },
    h("h2", {}, `Session ${state.session.info.session_id}`),
    h("p", { class: "guidance" }, state.session.info.guidance),
    h(
      "div",
      { class: "chat" },
      ...answers.map((a) =>
        h(
          "div",
          { class: a.outOfScope ? "answer out-of-scope" : "answer" },
          a.outOfScope ? h("span", { class: "flag" }, "outside session scope") : null,
          h("p", {}, a.text),
          h(
            "div",
            { class: "chips" },
            ...a.chips.map((chip) =>
              chip.href
                ? h("a", { class: "chip", href: chip.href, target: "_blank" }, chip.label)
                : h("span", { class: "chip" }, chip.label),
            ),
          ),
          h(
            "div",
            { class: "tiers" },
            ...a.buttons.map((b) =>
              h(
                "button",
                {
                  disabled: b.disabled,
                  onclick: () => void expand(a.answerId, b.tier),
                },
                b.label,
              ),
            ),
          ),
          a.details ? h("p", { class: "details" }, a.details) : null,
          ...a.practice.map((p) =>
            h("div", { class: "practice" }, h("strong", {}, p.stem), ...p.options.map((o) => h("div", {}, o))),
          ),
          ...a.resources.map((r) =>
            h(
              "div",
              { class: "resource" },
              h("a", { href: r.url, target: "_blank" }, r.label),
              h("span", { class: `badge ${r.badge}` }, r.badge),
            ),
          ),
        ),
      ),
    ),
    questionInput,
    h(
      "button",
      {
        onclick: () => {
          if (questionInput.value.trim()) void ask(questionInput.value.trim());
          questionInput.value = "";
        },
      },
      "Ask a Question",
    ),
    h("button", { class: "primary", onclick: () => void endStudy() }, "End Study"),
  );
}

async function submitQuizAnswers(): Promise<void> {
  if (!state.quiz || !state.session) return;
  try {
    const { result, report } = await client.submitQuiz(
      state.session.info.session_id,
      picks.map((p) => p ?? 0),
    );
    state.applyQuizOutcome(result, report);
    render();
  } catch (error) {
    onApiError(error);
  }
}

function renderQuiz(): HTMLElement {
  if (!state.quiz) return h("section", { class: "panel" }, "No quiz yet.");
  if (state.result && state.report) {
    const view = reportView(state.result, state.report);
    return h(
      "section",
      { class: "panel" },
      h("h2", {}, `Score: ${view.scoreDisplay} (${view.correct}/${view.total})`),
      h("h3", {}, "Areas of confusion"),
      h("ul", {}, ...view.areasOfConfusion.map((area) => h("li", {}, area))),
      h("p", {}, view.narrative),
      h("button", { class: "primary", onclick: () => void requestAdaptation() }, "Generate Adjusted Plan"),
    );
  }
  const view = quizView(state.quiz, picks);
  return h(
    "section",
    { class: "panel" },
    h("h2", {}, "Quiz"),
    ...view.questions.map((q) =>
      h(
        "div",
        { class: "question" },
        h("strong", {}, `${q.index + 1}. ${q.stem}`),
        ...q.options.map((option, oi) =>
          h(
            "label",
            { class: "option" },
            h("input", {
              type: "radio",
              name: `q${q.index}`,
              checked: q.picked === oi,
              onchange: () => {
                picks[q.index] = oi;
                render();
              },
            }),
            option,
          ),
        ),
      ),
    ),
    h(
      "button",
      { class: "primary", disabled: !view.complete, onclick: () => void submitQuizAnswers() },
      "Submit quiz",
    ),
  );
}

async function requestAdaptation(): Promise<void> {
  if (!state.planHead) return;
  try {
    const proposal = await client.proposeAdaptation(state.planHead.plan_id);
    state.applyProposal(proposal);
    render();
  } catch (error) {
    onApiError(error);
  }
}

let toggles: OpToggle[] = [];

async function doUndo(): Promise<void> {
  if (!state.planHead) return;
  try {
    await undoPlan(client, state, state.planHead.plan_id);
    nav("Calendar");
  } catch (error) {
    onApiError(error);
  }
}

function renderAdaptReview(): HTMLElement {
  if (!state.proposal) return h("section", { class: "panel" }, "No proposal.");
  if (toggles.length !== state.proposal.ops.length) {
    toggles = adaptReviewView(state.proposal);
  }
  return h(
    "section",
    { class: "panel" },
    h("h2", {}, `Proposed changes (against v${state.proposal.base_version})`),
    ...toggles.map((t) =>
      h(
        "div",
        { class: "op" },
        h("label", {},
          h("input", {
            type: "checkbox",
            checked: t.included,
            onchange: () => {
              t.included = !t.included;
              render();
            },
          }),
          ` ${t.summary}`,
        ),
        h("p", { class: "rationale" }, t.rationale),
      ),
    ),
    h(
      "button",
      {
        class: "primary",
        onclick: async () => {
          try {
            await submitDecision(client, state, state.proposal!, toggles);
            toggles = [];
            nav("Calendar");
          } catch (error) {
            onApiError(error);
            if (error instanceof ApiError && error.status === 409) {
              state.applyPlan(await client.getPlan(state.planHead!.plan_id));
              toggles = [];
              nav("Calendar");
            }
          }
        },
      },
      "Accept All / Apply",
    ),
    h(
      "button",
      {
        onclick: async () => {
          try {
            await rejectProposal(client, state, state.proposal!);
            toggles = [];
            nav("Calendar");
          } catch (error) {
            onApiError(error);
          }
        },
      },
      "Reject",
    ),
    h("button", { onclick: () => void doUndo() }, "Undo"),
  );
}

async function renderHistory(): Promise<HTMLElement> {
  if (!state.planHead) return h("section", { class: "panel" }, "No plan yet.");
  const rows = historyView(await client.planHistory(state.planHead.plan_id));
  return h(
    "section",
    { class: "panel" },
    h("h2", {}, "Plan history"),
    h(
      "table",
      {},
      ...rows.map((row) =>
        h(
          "tr",
          {},
          h("td", {}, row.label),
          h("td", {}, row.provenance),
          h("td", {}, row.decidedAt),
          h("td", {}, row.summary),
        ),
      ),
    ),
  );
}

const NAV: Array<[Route, string]> = [
  ["Planning", "Planning"],
  ["Calendar", "Calendar"],
  ["Session", "Session"],
  ["Quiz", "Quiz"],
  ["AdaptReview", "Adjustments"],
  ["History", "History"],
];

function render(): void {
  const navBar = h(
    "nav",
    {},
    ...NAV.map(([route, label]) =>
      h(
        "button",
        { class: state.route === route ? "active" : "", onclick: () => nav(route) },
        label,
      ),
    ),
  );
  const body =
    state.route === "Planning"
      ? renderPlanning()
      : state.route === "Calendar"
        ? renderCalendar()
        : state.route === "Session"
          ? renderSession()
          : state.route === "Quiz"
            ? renderQuiz()
            : state.route === "AdaptReview"
              ? renderAdaptReview()
              : h("section", { class: "panel" }, "Loading history...");
  replaceChildren(root, navBar, body);
  if (state.route === "History") {
    void renderHistory().then((el) => replaceChildren(root, navBar, el));
  }
}

render();
