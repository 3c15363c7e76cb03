"""Exception types shared across the package."""


class AtomcError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(AtomcError):
    """Malformed circuit or schedule text.

    Carries the 1-based line number when the offending line is known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class QubitRangeError(ParseError):
    """A qubit id in the input is outside the declared qubit count."""


class RegionTooSmallError(AtomcError):
    """The array is too small to be split into two usable regions."""


class InfeasibleError(AtomcError):
    """The constraint system admits no solution (e.g. more qubits than sites)."""

    def __init__(self, message: str, phase: str | None = None):
        self.phase = phase
        if phase:
            message = f"[{phase}] {message}"
        super().__init__(message)


class CompileTimeout(AtomcError):
    """Solver budget exhausted. Carries partial statistics."""

    def __init__(self, message: str, *, wall_time: float = 0.0,
                 solver_calls: int = 0, phase: str | None = None):
        self.wall_time = wall_time
        self.solver_calls = solver_calls
        self.phase = phase
        if phase:
            message = f"[{phase}] {message}"
        super().__init__(message)


class BackendError(AtomcError):
    """The solver backend failed or answered outside its protocol."""


class MergeError(AtomcError):
    """Phase results disagree where they must line up (positions, regions)."""


class ConsistencyError(AtomcError):
    """Solver windows disagree at a shared stage (internal error)."""


class VerificationError(AtomcError):
    """A compiled schedule failed the independent verifier (build-failing event)."""

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)
