import { Api, ApiError, ItemView, NetworkError, RubricEntry, SessionInfo } from "./api.js";
import { attemptScore, freshItem, ItemState, progressText, scoreForKey } from "./state.js";

const STORAGE_KEY = "vcrobust.annotator";

const app = document.getElementById("app")!;
const banner = document.getElementById("banner")!;
const api = new Api();

let session: SessionInfo | null = null;
let current: ItemState | null = null;
let busy = false;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  props: Partial<HTMLElementTagNameMap[K]> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const e = Object.assign(document.createElement(tag), props);
  e.append(...children);
  return e;
}

function showBanner(text: string, retry?: () => void): void {
  banner.replaceChildren(text);
  if (retry) {
    banner.append(" ", el("button", { textContent: "Retry", onclick: () => { hideBanner(); retry(); } }));
  }
  banner.hidden = false;
}

function hideBanner(): void {
  banner.hidden = true;
}

function rubricList(rubric: RubricEntry[]): HTMLElement {
  return el("ol", { className: "rubric" }, ...rubric.map((r) => el("li", { value: r.score }, r.description)));
}

async function startScreen(): Promise<void> {
  const rubric = await api.rubric().catch(() => [] as RubricEntry[]);
  const input = el("input", { id: "annotator", placeholder: "your annotator id", autocomplete: "off" });
  const notice = el("p", { className: "notice" });
  const form = el(
    "form",
    {},
    el("label", { htmlFor: "annotator" }, "Annotator id "),
    input,
    " ",
    el("button", { type: "submit" }, "Start"),
  );
  form.onsubmit = (ev) => {
    ev.preventDefault();
    const id = input.value.trim();
    if (!id) {
      notice.textContent = "Enter your annotator id to begin.";
      return;
    }
    void begin(id);
  };
  app.replaceChildren(
    el("h1", {}, "Listening test"),
    el("p", {}, "Rate how each clip sounds using this scale:"),
    rubricList(rubric),
    el("p", {}, "Play the clip, then click a score or press ", el("kbd", {}, "1"), " to ", el("kbd", {}, String(rubric.length || 5)),
      ". Press ", el("kbd", {}, "Space"), " to play or pause."),
    form,
    notice,
  );
  input.focus();
}

async function begin(annotatorId: string): Promise<void> {
  try {
    session = await api.start(annotatorId);
  } catch (e) {
    if (e instanceof NetworkError) return showBanner("Could not reach the server.", () => void begin(annotatorId));
    showBanner((e as Error).message);
    return;
  }
  sessionStorage.setItem(STORAGE_KEY, annotatorId);
  await advance();
}

async function advance(): Promise<void> {
  try {
    const next = await api.next();
    if (next.status === "done") return doneScreen(next.total);
    itemScreen(next, next.index);
  } catch (e) {
    if (e instanceof NetworkError) return showBanner("Could not load the next clip.", () => void advance());
    showBanner((e as Error).message);
  }
}

function itemScreen(item: ItemView, submitted: number): void {
  const state = freshItem(item, submitted);
  current = state;
  const audio = el("audio", { controls: true, preload: "auto", src: item.clip_url });
  const notice = el("p", { className: "notice" });
  const buttons = item.rubric.map((r) =>
    el("button", { type: "button", disabled: true, onclick: () => choose(r.score) }, `${r.score}: ${r.description}`),
  );
  const mark = () => buttons.forEach((b, i) => b.classList.toggle("chosen", item.rubric[i].score === state.chosen));
  audio.addEventListener("ended", () => {
    state.played = true;
    buttons.forEach((b) => (b.disabled = false));
    notice.textContent = "";
  });

  const choose = (score: number) => {
    if (busy || current !== state) return;
    const action = attemptScore(state, score);
    if (action.kind === "blocked") notice.textContent = action.notice;
    if (action.kind !== "submit") return;
    state.chosen = action.score;
    mark();
    void send(state, action.score);
  };

  const children: (Node | string)[] = [
    el("p", { className: "progress" }, progressText(submitted, item.total)),
    el("h1", {}, `Clip ${item.label}`),
    audio,
  ];
  if (item.reference_url) {
    children.push(el("p", {}, "Reference (not scored):"), el("audio", { controls: true, src: item.reference_url }));
  }
  children.push(el("div", { className: "scores" }, ...buttons), notice);
  if (item.index > 0) {
    children.push(el("button", { type: "button", onclick: () => void back(item.index - 1) }, "Back to previous clip"));
  }
  app.replaceChildren(...children);
  mark();

  document.onkeydown = (ev) => {
    if (current !== state || ev.target instanceof HTMLInputElement) return;
    if (ev.key === " ") {
      ev.preventDefault();
      void (audio.paused ? audio.play() : audio.pause());
      return;
    }
    const score = scoreForKey(ev.key, item.rubric.length);
    if (score !== null) choose(score);
  };
}

async function send(state: ItemState, score: number): Promise<void> {
  busy = true;
  try {
    const ack = await api.submit(state.item.index, score);
    busy = false;
    hideBanner();
    if (ack.done) return doneScreen(ack.total);
    await advance();
  } catch (e) {
    busy = false;
    if (e instanceof NetworkError) {
      // the chosen score stays selected; retry resends it
      showBanner("Your score was not saved yet.", () => void send(state, score));
      return;
    }
    const err = e as ApiError;
    showBanner(err.message);
    if (err.status === 409) await advance();
  }
}

async function back(index: number): Promise<void> {
  if (!window.confirm("Go back and change your previous score? The new score replaces the old one.")) return;
  try {
    const item = await api.item(index);
    itemScreen(item, session?.cursor ?? index);
  } catch (e) {
    showBanner((e as Error).message);
  }
}

function doneScreen(total: number): void {
  current = null;
  document.onkeydown = null;
  sessionStorage.removeItem(STORAGE_KEY);
  app.replaceChildren(
    el("h1", {}, "Thank you"),
    el("p", {}, `All ${total} clips are scored.`),
    el("p", { className: "progress" }, `Session ${session?.session_id ?? ""}`),
  );
}

const resume = sessionStorage.getItem(STORAGE_KEY);
if (resume) void begin(resume);
else void startScreen();
