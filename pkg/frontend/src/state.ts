// Client-side session state. Mirrors the server: scores and reveals are
// stored exactly as returned, never recomputed locally.

import type {
  CompareResult,
  Game,
  RoundPayload,
  Top1Result,
} from "./api.js";

export interface Top1Reveal {
  kind: "top1";
  index: number;
  guess: string;
  trueToken: string;
  correct: boolean;
  excluded: boolean;
}

export interface CompareReveal {
  kind: "compare";
  index: number;
  p: number;
  outcome: "first" | "second";
  reward: number;
  score: number;
}

export type Reveal = Top1Reveal | CompareReveal;

export interface ClientSessionState {
  sessionId: string;
  participant: string;
  game: Game;
  length: number;
  round: RoundPayload | null;
  score: number;
  reveals: Reveal[];
  done: boolean;
}

export function newSession(
  sessionId: string,
  participant: string,
  game: Game,
  length: number
): ClientSessionState {
  return {
    sessionId,
    participant,
    game,
    length,
    round: null,
    score: 0,
    reveals: [],
    done: false,
  };
}

export function withRound(state: ClientSessionState, round: RoundPayload): ClientSessionState {
  const next = { ...state, round, done: round.done };
  if (round.done || round.game === "compare") {
    // the server reports the authoritative cumulative score on these payloads
    next.score = round.score;
  }
  return next;
}

export function afterTop1(
  state: ClientSessionState,
  guess: string,
  result: Top1Result
): ClientSessionState {
  const reveal: Top1Reveal = {
    kind: "top1",
    index: result.index,
    guess,
    trueToken: result.true_token,
    correct: result.correct,
    excluded: result.excluded,
  };
  return { ...state, reveals: [...state.reveals, reveal] };
}

export function afterCompare(
  state: ClientSessionState,
  p: number,
  result: CompareResult
): ClientSessionState {
  const reveal: CompareReveal = {
    kind: "compare",
    index: result.index,
    p,
    outcome: result.outcome,
    reward: result.reward,
    score: result.score,
  };
  return { ...state, score: result.score, reveals: [...state.reveals, reveal] };
}

/** Running top-1 accuracy over scored (non-excluded) reveals. */
export function accuracy(state: ClientSessionState): { correct: number; scored: number } {
  let correct = 0;
  let scored = 0;
  for (const reveal of state.reveals) {
    if (reveal.kind === "top1" && !reveal.excluded) {
      scored += 1;
      if (reveal.correct) correct += 1;
    }
  }
  return { correct, scored };
}

/** Checkbox labels for an allowed set, shown highest first like 99% ... 1%. */
export function percentageLabels(allowed: number[]): { value: number; label: string }[] {
  return [...allowed]
    .sort((a, b) => b - a)
    .map((value) => ({ value, label: `${Math.round(value * 100)}%` }));
}

/** Exact display of a server-returned number (no reformatting). */
export function exactNumber(value: number): string {
  return String(value);
}

export function signedNumber(value: number): string {
  return value > 0 ? `+${String(value)}` : String(value);
}
