// Typed client for the game service HTTP API. The server is authoritative
// for every score; nothing here recomputes rewards.

export type Game = "top1" | "compare";

export interface SessionInfo {
  session_id: string;
  length: number;
}

export interface Top1Round {
  done: false;
  game: "top1";
  index: number;
  context_text: string;
  context_tokens: number[];
  remaining: number;
}

export interface CompareRound {
  done: false;
  game: "compare";
  index: number;
  context_text: string;
  candidates: [string, string];
  allowed: number[];
  score: number;
  remaining: number;
}

export interface DoneRound {
  done: true;
  game: Game;
  answered: number;
  score: number;
}

export type RoundPayload = Top1Round | CompareRound | DoneRound;

export interface Top1Result {
  index: number;
  true_token: string;
  correct: boolean;
  excluded: boolean;
}

export interface CompareResult {
  index: number;
  outcome: "first" | "second";
  reward: number;
  score: number;
}

export interface TokenizeResult {
  tokens: number[];
  single: boolean;
}

export interface HealthInfo {
  status: string;
  sets: string[];
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(base + path, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    const detail =
      typeof body?.detail === "string" ? body.detail : `request failed (${resp.status})`;
    throw new ApiError(resp.status, detail);
  }
  return body as T;
}

export class GameApi {
  constructor(readonly base: string = "") {}

  health(): Promise<HealthInfo> {
    return request(this.base, "/api/health");
  }

  createSession(participant: string, game: Game, set: string): Promise<SessionInfo> {
    return request(this.base, "/api/session", {
      method: "POST",
      body: JSON.stringify({ participant, game, set }),
    });
  }

  nextRound(sessionId: string): Promise<RoundPayload> {
    return request(this.base, `/api/session/${sessionId}/round`);
  }

  submitTop1(sessionId: string, guess: string): Promise<Top1Result> {
    return request(this.base, `/api/session/${sessionId}/top1`, {
      method: "POST",
      body: JSON.stringify({ guess }),
    });
  }

  submitCompare(sessionId: string, p: number): Promise<CompareResult> {
    return request(this.base, `/api/session/${sessionId}/compare`, {
      method: "POST",
      body: JSON.stringify({ p }),
    });
  }

  tokenize(text: string): Promise<TokenizeResult> {
    return request(this.base, `/api/tokenize?text=${encodeURIComponent(text)}`);
  }
}
