"""Exception types shared across the package."""


class DmoError(Exception):
    """Base class for all errors raised by distmarket."""


class InvalidCase(DmoError):
    """A market case failed structural validation."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid case: {lines}")


class ParseError(DmoError):
    """A case document could not be read."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class HourOutOfRange(DmoError, IndexError):
    pass


class UnknownBus(DmoError, KeyError):
    pass


class InfeasibleMarket(DmoError):
    """The clearing problem for an hour has no feasible allocation."""

    def __init__(self, hour, reason):
        self.hour = hour
        self.reason = reason
        super().__init__(f"hour {hour}: infeasible market ({reason})")


class HorizonClearingError(DmoError):
    """One or more hours of a horizon failed to clear.

    ``results`` holds the successful ClearingResult per hour (None where the
    hour failed) and ``failures`` maps hour -> exception.
    """

    def __init__(self, results, failures):
        self.results = results
        self.failures = dict(failures)
        first = min(self.failures)
        ok = sum(r is not None for r in results)
        super().__init__(
            f"hour {first} failed: {self.failures[first]} "
            f"({len(self.failures)} failed, {ok} cleared)"
        )


class MalformedProgram(DmoError, ValueError):
    pass


class NumericalBreakdown(DmoError, ArithmeticError):
    pass


class MismatchedInputs(DmoError, ValueError):
    pass


class TooLarge(DmoError, ValueError):
    pass


class DegenerateAtAllTriedEps(DmoError):
    pass
