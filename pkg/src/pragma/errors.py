"""Shared exception types."""

from __future__ import annotations


class InvalidAction(Exception):
    """An action was applied in a state where it is not legal."""

    def __init__(self, reason: str, index: int | None = None):
        self.reason = reason
        self.index = index
        where = f" at step {index}" if index is not None else ""
        super().__init__(f"invalid action{where}: {reason}")


class Blocked(InvalidAction):
    """A movement hit a missing edge."""

    def __init__(self, at_step: int):
        super().__init__(f"no traversable edge ahead (movement step {at_step})")
        self.at_step = at_step


class UndeterminedOrientation(InvalidAction):
    def __init__(self):
        super().__init__("cannot move with an undetermined orientation")


class DegenerateRoute(Exception):
    """A route with no movement cannot anchor a relative orientation."""


class ParseError(Exception):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class ValidationError(Exception):
    def __init__(self, instance_id: str, message: str):
        self.instance_id = instance_id
        super().__init__(f"instance {instance_id}: {message}")


class GenerationStuck(Exception):
    """The synthetic generator ran out of valid actions and retries."""


class EmptyBeam(Exception):
    """Beam search pruned every candidate before any completed."""
