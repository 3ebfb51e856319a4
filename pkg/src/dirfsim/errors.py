"""Exception hierarchy for the dirfsim package."""


class DirfsimError(Exception):
    """Base class for all package-specific errors."""


# -- geometry / mobility ------------------------------------------------------

class WindowOutsideTrace(DirfsimError):
    """Requested time window is not covered by the mobility trace."""


class DegenerateWindow(DirfsimError):
    """Direction window shorter than the resolvable minimum (1e-6 s)."""


class ZeroDirection(DirfsimError):
    """A zero-length direction vector cannot drive AP selection."""


# -- radio --------------------------------------------------------------------

class ZeroDistance(DirfsimError):
    """Client position coincides with the AP position."""


# -- position estimator -------------------------------------------------------

class DegeneratePair(DirfsimError):
    """Both members of a ranking pair are zero; the ratio is undefined."""


class InsufficientSamples(DirfsimError):
    """Fewer than two distinct sample positions; the loss has no usable geometry."""


class NonFinite(DirfsimError):
    """Gradient-descent iterates diverged to non-finite values."""


# -- scheduler ----------------------------------------------------------------

class ZeroSpeed(DirfsimError):
    """Time-to-switch is undefined for a stationary client."""


class ZeroDenominator(DirfsimError):
    """Throughput model is undefined when loss rate and marking rate are both zero."""


# -- scenario / CLI -----------------------------------------------------------

class ScenarioParseError(DirfsimError):
    """Scenario file could not be parsed; carries line/field context."""


class ScenarioValidationError(DirfsimError):
    """Scenario violates an invariant; message names the offending field."""

    def __init__(self, field: str, problem: str):
        self.field = field
        self.problem = problem
        super().__init__(f"{field}: {problem}")


class InvalidScenario(ScenarioValidationError):
    """Alias kept for the simulator entry point."""


class MismatchedScenarios(DirfsimError):
    """compare() requires scenarios identical except for their mode."""
