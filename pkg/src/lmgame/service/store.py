"""Durable session store: an append-only event log plus an in-memory index.

Every state change is appended (and fsynced) to a JSON-lines log before it is
acknowledged, so replaying any prefix of the log reconstructs a consistent
store containing every acknowledged response. A corrupt or half-written tail
line (the crash case) is truncated on open.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from lmgame.corpus.bpe import Tokenizer
from lmgame.corpus.filters import is_visually_empty, render_token
from lmgame.corpus.vocab import Vocab
from lmgame.elicitation import AllowedSet, Response, response_to_ratio, reward
from lmgame.records import RatioSample
from lmgame.service.sets import QuestionSet


class NotFoundError(KeyError):
    pass


class ValidationError(ValueError):
    pass


class EndOfSetError(RuntimeError):
    pass


def _checksum(seq: int, kind: str, data: dict) -> str:
    blob = json.dumps({"seq": seq, "type": kind, "data": data}, sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


class EventLog:
    """Append-only JSON-lines log with monotone sequence numbers and checksums."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.events: list[dict] = []
        self._lock = threading.Lock()
        self._recover()
        self._fh = open(self.path, "a", encoding="utf-8")

    def _recover(self) -> None:
        if not self.path.exists():
            self.path.touch()
            return
        good_bytes = 0
        with open(self.path, "rb") as fh:
            for raw in fh:
                if not raw.endswith(b"\n"):
                    break
                try:
                    event = json.loads(raw.decode("utf-8"))
                    expected = _checksum(event["seq"], event["type"], event["data"])
                    if event["checksum"] != expected or event["seq"] != len(self.events):
                        break
                except (json.JSONDecodeError, KeyError, UnicodeDecodeError):
                    break
                self.events.append(event)
                good_bytes += len(raw)
        if good_bytes != self.path.stat().st_size:
            with open(self.path, "r+b") as fh:
                fh.truncate(good_bytes)

    def append(self, kind: str, data: dict) -> dict:
        with self._lock:
            seq = len(self.events)
            event = {"seq": seq, "type": kind, "data": data, "checksum": _checksum(seq, kind, data)}
            self._fh.write(json.dumps(event, sort_keys=True) + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self.events.append(event)
            return event

    def close(self) -> None:
        with self._lock:
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._fh.close()


@dataclass
class SessionState:
    session_id: str
    participant_id: str
    game: str
    set_id: str
    created_at: float
    cursor: int = 0
    score: float = 0.0
    guesses: list[dict] = field(default_factory=list)
    responses: list[dict] = field(default_factory=list)


class Store:
    """Sessions and responses for both games, rebuilt from the log on startup.

    All mutations are serialized through one lock and appended to the log
    before the in-memory index is updated and the call returns.
    """

    def __init__(
        self,
        log: EventLog,
        sets: dict[str, QuestionSet],
        vocab: Vocab,
        tokenizer: Tokenizer,
        allowed: AllowedSet,
    ):
        self.log = log
        self.sets = sets
        self.vocab = vocab
        self.tokenizer = tokenizer
        self.allowed = allowed
        self.sessions: dict[str, SessionState] = {}
        self._session_count = 0
        self._lock = threading.RLock()
        for event in log.events:
            self._apply(event)

    # -- event application (replay path and live path are identical) --------

    def _apply(self, event: dict) -> None:
        kind, data = event["type"], event["data"]
        if kind == "session_created":
            self._session_count += 1
            self.sessions[data["session_id"]] = SessionState(
                session_id=data["session_id"],
                participant_id=data["participant_id"],
                game=data["game"],
                set_id=data["set_id"],
                created_at=data["created_at"],
            )
        elif kind == "top1_guess":
            state = self.sessions[data["session_id"]]
            state.guesses.append(data)
            state.cursor += 1
        elif kind == "compare_response":
            state = self.sessions[data["session_id"]]
            state.responses.append(data)
            state.score += data["reward"]
            state.cursor += 1
        elif kind == "round_served":
            pass  # audit only
        else:
            raise ValueError(f"unknown event type {kind!r}")

    def _record(self, kind: str, data: dict) -> None:
        self.log.append(kind, data)
        self._apply(self.log.events[-1])

    # -- sessions ------------------------------------------------------------

    def create_session(self, participant_id: str, game: str, set_id: str) -> dict:
        with self._lock:
            qs = self.sets.get(set_id)
            if qs is None:
                raise NotFoundError(f"unknown question set {set_id!r}")
            if qs.game != game:
                raise ValidationError(f"set {set_id!r} hosts {qs.game!r}, not {game!r}")
            session_id = f"s{self._session_count:06d}"
            self._record(
                "session_created",
                {
                    "session_id": session_id,
                    "participant_id": participant_id,
                    "game": game,
                    "set_id": set_id,
                    "created_at": time.time(),
                },
            )
            return {"session_id": session_id, "length": len(qs)}

    def _session(self, session_id: str) -> tuple[SessionState, QuestionSet]:
        state = self.sessions.get(session_id)
        if state is None:
            raise NotFoundError(f"unknown session {session_id!r}")
        return state, self.sets[state.set_id]

    def _advance_autos(self, state: SessionState, qs: QuestionSet) -> None:
        """Answer pending x = y rounds server-side (both equally likely, reward 0)."""
        while state.cursor < len(qs.rounds) and qs.rounds[state.cursor].auto:
            self._record(
                "compare_response",
                {
                    "session_id": state.session_id,
                    "index": state.cursor,
                    "p": 0.5,
                    "auto": True,
                    "reward": 0.0,
                    "timestamp": time.time(),
                },
            )

    # -- round delivery -------------------------------------------------------

    def next_round(self, session_id: str) -> dict:
        with self._lock:
            state, qs = self._session(session_id)
            if state.game == "compare":
                self._advance_autos(state, qs)
            length = len(qs)
            if state.cursor >= length:
                return {
                    "done": True,
                    "game": state.game,
                    "answered": state.cursor,
                    "score": state.score,
                }
            self.log.append(
                "round_served", {"session_id": session_id, "index": state.cursor}
            )
            if state.game == "top1":
                prompt = qs.prompts[state.cursor]
                return {
                    "done": False,
                    "game": "top1",
                    "index": state.cursor,
                    "context_text": qs.context_texts[state.cursor],
                    "context_tokens": list(prompt.context),
                    "remaining": length - state.cursor,
                }
            round_ = qs.rounds[state.cursor]
            first, second = round_.first_candidate, round_.second_candidate
            return {
                "done": False,
                "game": "compare",
                "index": state.cursor,
                "context_text": qs.context_texts[state.cursor],
                "candidates": [
                    render_token(first, self.vocab),
                    render_token(second, self.vocab),
                ],
                "allowed": list(self.allowed.values),
                "score": state.score,
                "remaining": length - state.cursor,
            }

    # -- answers ---------------------------------------------------------------

    def submit_top1(self, session_id: str, guess: str) -> dict:
        with self._lock:
            state, qs = self._session(session_id)
            if state.game != "top1":
                raise ValidationError("session is not a top-1 game")
            if state.cursor >= len(qs):
                raise EndOfSetError("question set exhausted")
            try:
                ids = self.tokenizer.encode(guess)
            except KeyError:
                ids = []
            if len(ids) != 1:
                raise ValidationError(
                    f"guess {guess!r} does not resolve to a single vocabulary token"
                )
            prompt = qs.prompts[state.cursor]
            correct = ids[0] == prompt.true_next
            excluded = is_visually_empty(prompt.true_next, self.vocab)
            self._record(
                "top1_guess",
                {
                    "session_id": session_id,
                    "index": state.cursor,
                    "origin": list(prompt.origin),
                    "guess": ids[0],
                    "true": prompt.true_next,
                    "correct": correct,
                    "excluded": excluded,
                    "timestamp": time.time(),
                },
            )
            return {
                "index": state.cursor - 1,
                "true_token": render_token(prompt.true_next, self.vocab),
                "correct": correct,
                "excluded": excluded,
            }

    def submit_compare(self, session_id: str, p: float) -> dict:
        with self._lock:
            state, qs = self._session(session_id)
            if state.game != "compare":
                raise ValidationError("session is not a comparison game")
            self._advance_autos(state, qs)
            if state.cursor >= len(qs):
                raise EndOfSetError("question set exhausted")
            try:
                p = self.allowed.snap(p)
            except ValueError as err:
                raise ValidationError(str(err)) from None
            round_ = qs.rounds[state.cursor]
            outcome = "x" if round_.true_shown_first else "y"
            g_x = round_.g_true if round_.true_shown_first else round_.g_sampled
            g_y = round_.g_sampled if round_.true_shown_first else round_.g_true
            delta = reward(p, outcome, g_x, g_y)
            self._record(
                "compare_response",
                {
                    "session_id": session_id,
                    "index": state.cursor,
                    "p": p,
                    "auto": False,
                    "reward": delta,
                    "timestamp": time.time(),
                },
            )
            return {
                "index": state.cursor - 1,
                "outcome": "first" if round_.true_shown_first else "second",
                "reward": delta,
                "score": state.score,
            }

    # -- export and stats --------------------------------------------------------

    def _ordered_sessions(self) -> list[SessionState]:
        return sorted(
            self.sessions.values(), key=lambda s: (s.participant_id, s.session_id)
        )

    def export_guesses(
        self, set_id: str | None = None, participant: str | None = None
    ) -> Iterator[dict]:
        for state in self._ordered_sessions():
            if state.game != "top1":
                continue
            if set_id and state.set_id != set_id:
                continue
            if participant and state.participant_id != participant:
                continue
            for g in state.guesses:
                yield {
                    "participant_id": state.participant_id,
                    "session_id": state.session_id,
                    "set_id": state.set_id,
                    "origin": g["origin"],
                    "guess": g["guess"],
                    "true": g["true"],
                    "correct": g["correct"],
                    "excluded": g["excluded"],
                    "timestamp": g["timestamp"],
                }

    def export_ratio_samples(
        self, set_id: str | None = None, participant: str | None = None
    ) -> Iterator[RatioSample]:
        for state in self._ordered_sessions():
            if state.game != "compare":
                continue
            if set_id and state.set_id != set_id:
                continue
            if participant and state.participant_id != participant:
                continue
            qs = self.sets[state.set_id]
            for resp in state.responses:
                round_ = qs.rounds[resp["index"]]
                response = Response(
                    round_id=round_.round_id,
                    p=resp["p"],
                    responder_id=state.participant_id,
                    auto=resp["auto"],
                )
                yield response_to_ratio(
                    response, round_, allowed=None if resp["auto"] else self.allowed
                )

    def stats(self) -> dict:
        rows = []
        for state in self._ordered_sessions():
            row = {
                "participant_id": state.participant_id,
                "session_id": state.session_id,
                "game": state.game,
                "set_id": state.set_id,
                "answered": state.cursor,
            }
            if state.game == "top1":
                scored = [g for g in state.guesses if not g["excluded"]]
                correct = sum(1 for g in scored if g["correct"])
                row.update(
                    {
                        "guesses": len(state.guesses),
                        "excluded": len(state.guesses) - len(scored),
                        "correct": correct,
                        "accuracy": correct / len(scored) if scored else None,
                    }
                )
            else:
                row.update({"score": state.score})
            rows.append(row)
        return {"sessions": rows}
