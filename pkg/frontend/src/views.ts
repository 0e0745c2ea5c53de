// DOM views for the two game screens. Rendering only: every number shown
// comes from the server payloads stored in the session state.

import type { CompareRound, Top1Round } from "./api.js";
import {
  accuracy,
  ClientSessionState,
  exactNumber,
  percentageLabels,
  Reveal,
  signedNumber,
} from "./state.js";

export interface Top1Handlers {
  onInput(text: string): void;
  onSubmit(text: string): void;
}

export interface CompareHandlers {
  onSelect(p: number): void;
  onSubmit(p: number): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function contextBlock(text: string): HTMLElement {
  const wrap = el("div", "context");
  wrap.appendChild(el("div", "context-label", "Text so far"));
  const body = el("pre", "context-text");
  body.textContent = text;
  wrap.appendChild(body);
  return wrap;
}

function revealBadges(reveal: Reveal): HTMLElement {
  const row = el("div", "reveal");
  if (reveal.kind === "top1") {
    row.classList.add(reveal.correct ? "correct" : "wrong");
    const token = el("span", "token", reveal.trueToken);
    row.appendChild(el("span", "reveal-label", "answer:"));
    row.appendChild(token);
    row.appendChild(el("span", "verdict", reveal.correct ? "correct" : "missed"));
    if (reveal.excluded) {
      row.appendChild(el("span", "badge excluded", "excluded"));
    }
  } else {
    row.classList.add(reveal.reward >= 0 ? "correct" : "wrong");
    row.appendChild(
      el("span", "reveal-label", `the ${reveal.outcome} candidate was real`)
    );
    const delta = el("span", "reward-delta", signedNumber(reveal.reward));
    delta.dataset.reward = exactNumber(reveal.reward);
    row.appendChild(delta);
  }
  return row;
}

export function renderTop1Screen(
  state: ClientSessionState,
  validation: { text: string; single: boolean; checking: boolean },
  handlers: Top1Handlers
): HTMLElement {
  const round = state.round as Top1Round;
  const root = el("section", "screen top1-screen");
  const stats = accuracy(state);
  const header = el("header", "screen-header");
  header.appendChild(el("h2", undefined, `Guess the next token`));
  header.appendChild(
    el(
      "div",
      "progress",
      `round ${round.index + 1} of ${state.length}`
    )
  );
  const acc = el("div", "accuracy");
  acc.dataset.correct = String(stats.correct);
  acc.dataset.scored = String(stats.scored);
  acc.textContent =
    stats.scored > 0
      ? `accuracy ${stats.correct}/${stats.scored}`
      : "accuracy –";
  header.appendChild(acc);
  root.appendChild(header);
  root.appendChild(contextBlock(round.context_text));

  const form = el("form", "guess-form");
  const input = el("input", "guess-input") as HTMLInputElement;
  input.type = "text";
  input.placeholder = "type the next token (often starts with a space)";
  input.autofocus = true;
  input.value = validation.text;
  const submit = el("button", "submit") as HTMLButtonElement;
  submit.type = "submit";
  submit.textContent = "guess";
  submit.disabled = !validation.single || validation.checking;
  const hint = el("div", "validation-hint");
  if (validation.checking) {
    hint.textContent = "checking token…";
  } else if (validation.text && !validation.single) {
    hint.textContent = "not a single token of the vocabulary";
    hint.classList.add("invalid");
  }
  input.addEventListener("input", () => handlers.onInput(input.value));
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (!submit.disabled) handlers.onSubmit(input.value);
  });
  form.appendChild(input);
  form.appendChild(submit);
  root.appendChild(form);
  root.appendChild(hint);

  const history = el("div", "history");
  for (const reveal of state.reveals.slice(-8).reverse()) {
    history.appendChild(revealBadges(reveal));
  }
  root.appendChild(history);
  return root;
}

const CHECKBOX_KEYS = ["1", "2", "3", "4", "5", "6", "7", "8", "9", "0", "-"];

export function renderCompareScreen(
  state: ClientSessionState,
  selected: number | null,
  handlers: CompareHandlers
): HTMLElement {
  const round = state.round as CompareRound;
  const root = el("section", "screen compare-screen");
  const header = el("header", "screen-header");
  header.appendChild(el("h2", undefined, "Which one is real?"));
  header.appendChild(el("div", "progress", `round ${round.index + 1} of ${state.length}`));
  const score = el("div", "score");
  score.dataset.score = exactNumber(state.score);
  score.textContent = `score ${exactNumber(state.score)}`;
  header.appendChild(score);
  root.appendChild(header);
  root.appendChild(contextBlock(round.context_text));

  const pair = el("div", "candidates");
  const [first, second] = round.candidates;
  const firstCard = el("div", "candidate first");
  firstCard.appendChild(el("div", "candidate-label", "first"));
  firstCard.appendChild(el("span", "token", first));
  const secondCard = el("div", "candidate second");
  secondCard.appendChild(el("div", "candidate-label", "second"));
  secondCard.appendChild(el("span", "token", second));
  pair.appendChild(firstCard);
  pair.appendChild(secondCard);
  root.appendChild(pair);

  root.appendChild(
    el("p", "ask", "How likely is it that the first candidate is the real next token?")
  );

  const form = el("form", "compare-form");
  const boxes = el("div", "checkboxes");
  percentageLabels(round.allowed).forEach(({ value, label }, i) => {
    const wrap = el("label", "checkbox");
    const radio = el("input") as HTMLInputElement;
    radio.type = "radio";
    radio.name = "p";
    radio.value = String(value);
    radio.checked = selected === value;
    radio.addEventListener("change", () => handlers.onSelect(value));
    wrap.appendChild(radio);
    wrap.appendChild(el("span", "checkbox-label", label));
    const key = CHECKBOX_KEYS[i];
    if (key !== undefined) {
      wrap.appendChild(el("kbd", "key-hint", key));
    }
    boxes.appendChild(wrap);
  });
  const submit = el("button", "submit") as HTMLButtonElement;
  submit.type = "submit";
  submit.textContent = "answer";
  submit.disabled = selected === null;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (selected !== null) handlers.onSubmit(selected);
  });
  form.appendChild(boxes);
  form.appendChild(submit);
  root.appendChild(form);

  const last = state.reveals[state.reveals.length - 1];
  if (last && last.kind === "compare") {
    root.appendChild(revealBadges(last));
  }
  return root;
}

export function renderSummary(state: ClientSessionState): HTMLElement {
  const root = el("section", "screen summary-screen");
  root.appendChild(el("h2", undefined, "Set complete"));
  const round = state.round;
  const answered = round && round.done ? round.answered : state.reveals.length;
  root.appendChild(el("div", "summary-rounds", `${answered} rounds answered`));
  if (state.game === "compare") {
    const score = el("div", "summary-score");
    score.dataset.score = exactNumber(state.score);
    score.textContent = `total score ${exactNumber(state.score)}`;
    root.appendChild(score);
  } else {
    const stats = accuracy(state);
    root.appendChild(
      el(
        "div",
        "summary-accuracy",
        `accuracy ${stats.correct}/${stats.scored} (excluded rounds not scored)`
      )
    );
  }
  return root;
}

/** Keyboard shortcut mapping for the compare checkboxes: returns the chosen
 * probability or null. Keys follow the displayed order, highest first. */
export function checkboxForKey(key: string, allowed: number[]): number | null {
  const i = CHECKBOX_KEYS.indexOf(key);
  if (i < 0) return null;
  const ordered = percentageLabels(allowed);
  const entry = ordered[i];
  return entry ? entry.value : null;
}
