"""Exception hierarchy for the harmonization pipeline.

Every error carries an ``exit_code`` used by the CLI: 2 for malformed
input, 3 for registry lookups, 4 for violated preconditions, 5 for a
failed conservation check.
"""

from __future__ import annotations


class HarmonizationError(Exception):
    """Base class for all pipeline errors."""

    exit_code = 1


# -- input / parse failures (exit 2) ----------------------------------------


class ParseFailure(HarmonizationError):
    exit_code = 2


class ParseError(ParseFailure):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class NegativeCount(ParseFailure):
    def __init__(self, line: int, value: float):
        super().__init__(f"line {line}: negative count {value!r}")
        self.line = line
        self.value = value


class TotalMismatch(ParseFailure):
    """Declared total deviates from the recomputed bin sum beyond tolerance."""

    def __init__(self, destination, origin, declared: float, computed: float):
        super().__init__(
            f"total mismatch at destination={destination!r} origin={origin!r}: "
            f"declared {declared!r}, computed {computed!r}"
        )
        self.destination = destination
        self.origin = origin
        self.declared = declared
        self.computed = computed


# -- registry failures (exit 3) ----------------------------------------------


class RegistryError(HarmonizationError):
    exit_code = 3


class UnknownName(RegistryError):
    def __init__(self, raw: str):
        super().__init__(f"no registered entity matches name {raw!r}")
        self.raw = raw


class UnknownIndex(RegistryError):
    def __init__(self, index: int, decade: str):
        super().__init__(f"index {index} is not mapped for decade {decade!r}")
        self.index = index
        self.decade = decade


class UnmappableEntity(RegistryError):
    def __init__(self, canonical_id: str):
        super().__init__(f"entity {canonical_id!r} has no index in the target map")
        self.canonical_id = canonical_id


# -- precondition violations (exit 4) ----------------------------------------


class PreconditionError(HarmonizationError):
    exit_code = 4


class AlreadyPresent(PreconditionError):
    def __init__(self, destination: str):
        super().__init__(f"destination {destination!r} already has coverage")
        self.destination = destination


class EmptyDestination(PreconditionError):
    def __init__(self, destination: str):
        super().__init__(
            f"destination {destination!r} has unclassifiable inflow but no "
            "classified inflow to redistribute over"
        )
        self.destination = destination


class InvalidLambda(PreconditionError):
    def __init__(self, value: float):
        super().__init__(f"decay rate must be >= 0, got {value!r}")
        self.value = value


class AxisMismatch(PreconditionError):
    pass


class InvalidSpec(PreconditionError):
    pass


# -- conservation failures (exit 5) -------------------------------------------


class ConservationError(HarmonizationError):
    exit_code = 5
