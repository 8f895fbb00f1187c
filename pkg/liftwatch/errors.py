"""Exceptions raised by liftwatch.

Every error carries a machine-readable ``category`` and the CLI exit code it
maps to, so the command-line layer can report failures without inspecting
messages.
"""

from __future__ import annotations

EXIT_DATA = 3
EXIT_INFEASIBLE = 4
EXIT_INTERNAL = 5


class WatchdogError(Exception):
    """Base exception for liftwatch errors."""

    category = "internal"
    exit_code = EXIT_INTERNAL


class DataError(WatchdogError):
    """Input data or parameters failed validation."""

    category = "data"
    exit_code = EXIT_DATA


class ParseError(DataError):
    """A joint, channel or experiment file could not be parsed."""

    category = "parse_error"


class NegativeEntry(DataError):
    """A probability table holds a negative entry."""

    category = "negative_entry"


class SumNotOne(DataError):
    """A probability table does not sum to one."""

    category = "sum_not_one"


class ZeroMarginal(DataError):
    """Some p(s) or p(x) is zero."""

    category = "zero_marginal"


class DuplicateLabel(DataError):
    """A label appears twice on the same axis."""

    category = "duplicate_label"


class IndexOutOfRange(DataError):
    """A symbol index lies outside its alphabet."""

    category = "index_out_of_range"


class EmptySubset(DataError):
    """An operation that needs a non-empty subset got an empty one."""

    category = "empty_subset"


class InvalidDistribution(DataError):
    """A probability vector is negative somewhere or does not sum to one."""

    category = "invalid_distribution"


class InvalidR(DataError):
    """A custom R(y) is not a distribution on the randomized set."""

    category = "invalid_r"


class InvalidParameter(DataError):
    """A numeric parameter is outside its admissible range."""

    category = "invalid_parameter"


class UnknownSymbol(DataError):
    """A stream symbol is not in the mechanism's alphabet."""

    category = "unknown_symbol"


class DegenerateX(DataError):
    """H(X) = 0, so NMIL is undefined."""

    category = "degenerate_x"


class SingletonOrEmptyRandomizedSet(DataError):
    """Falsification needs at least two randomized symbols."""

    category = "singleton_or_empty_randomized_set"


class AlphabetTooLarge(DataError):
    """Exhaustive enumeration was requested above the configured cap."""

    category = "alphabet_too_large"


class EmptySample(DataError):
    """A CDF query was made on an empty sample."""

    category = "empty_sample"


class Infeasible(WatchdogError):
    """No partition satisfies the requested privacy constraints."""

    category = "infeasible"
    exit_code = EXIT_INFEASIBLE


class DeltaNotAboveDelta0(Infeasible):
    """delta does not exceed the watchdog partition's breach probability."""

    category = "delta_not_above_delta0"

    def __init__(self, delta: float, delta0: float):
        self.delta = delta
        self.delta0 = delta0
        super().__init__(
            f"delta={delta:.12g} must exceed delta0={delta0:.12g} "
            "(breach probability of the pure watchdog partition)"
        )

    def __reduce__(self):
        return (type(self), (self.delta, self.delta0))


class InvariantViolation(WatchdogError):
    """A post-condition of an algorithm did not hold."""

    category = "invariant_violation"


class TrialError(WatchdogError):
    """A Monte Carlo trial failed."""

    category = "trial_error"

    def __init__(self, trial: int, cause: BaseException):
        self.trial = trial
        self.cause = cause
        super().__init__(f"trial {trial} failed: {type(cause).__name__}: {cause}")
        # Keeps the exit code of the underlying error.
        if isinstance(cause, WatchdogError):
            self.exit_code = cause.exit_code

    def __reduce__(self):
        return (type(self), (self.trial, self.cause))
