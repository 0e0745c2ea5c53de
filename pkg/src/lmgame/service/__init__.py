"""The live game server: sessions, rounds, scoring, persistence, export."""

from lmgame.service.sets import QuestionSet, build_question_set
from lmgame.service.store import (
    EndOfSetError,
    EventLog,
    NotFoundError,
    Store,
    ValidationError,
)
from lmgame.service.app import create_app

__all__ = [
    "QuestionSet",
    "build_question_set",
    "EventLog",
    "Store",
    "NotFoundError",
    "ValidationError",
    "EndOfSetError",
    "create_app",
]
