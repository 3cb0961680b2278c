"""Shared exception types.

Contract violations that callers can meaningfully handle get their own
class; plain misuse (wrong lengths, mismatched ids) raises ValueError.
"""

from __future__ import annotations


class UiqError(Exception):
    """Base class for harness-specific failures."""


class NotFoundError(UiqError):
    """A referenced entity (session, run, record, subject) does not exist."""


class ConflictError(UiqError):
    """Duplicate id, double submission, or out-of-order submission."""


class CorruptRecordError(UiqError):
    """A persisted record failed its checksum or cannot be decoded."""


class PendingGradingError(UiqError):
    """An operation requires a fully graded transcript but verdicts are pending."""
