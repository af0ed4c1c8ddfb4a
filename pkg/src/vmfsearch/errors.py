"""Exception and warning types raised across the package."""


class VmfSearchError(Exception):
    """Base class for all user-facing errors of this package."""


class DimensionMismatch(VmfSearchError, ValueError):
    pass


class NonHermitian(VmfSearchError, ValueError):
    pass


class ConvergenceFailure(VmfSearchError, RuntimeError):
    pass


class WindowInvalid(VmfSearchError, ValueError):
    pass


class WindowViolation(VmfSearchError, ValueError):
    """A cosine of a scaled phase is negative while strict-bound mode is on."""


class DegenerateSpectrum(VmfSearchError, ValueError):
    """All eigenvalues coincide, so there is nothing to scale (or to find).

    ``value`` holds the common eigenvalue of the constant Hamiltonian.
    """

    def __init__(self, value: float):
        super().__init__(f"spectrum has zero width (constant Hamiltonian, eigenvalue {value!r})")
        self.value = value


class ResultantOutOfRange(VmfSearchError, ValueError):
    pass


class EmptySample(VmfSearchError, ValueError):
    pass


class ZeroKappa(VmfSearchError, ValueError):
    pass


class OrthogonalStart(VmfSearchError, ValueError):
    """The convergence ratio is undefined because the start has no overlap with the target.

    ``prev_norm`` and ``next_norm`` hold the projection magnitudes |target . prev| and
    |target . next| as the fallback diagnostic.
    """

    def __init__(self, prev_norm: float, next_norm: float):
        super().__init__(
            f"start is orthogonal to the target (|t.prev|={prev_norm:.3g}, |t.next|={next_norm:.3g})"
        )
        self.prev_norm = prev_norm
        self.next_norm = next_norm


class NonUnitState(VmfSearchError, ValueError):
    pass


class ProbabilityOutOfRange(VmfSearchError, ValueError):
    pass


class ConfigError(VmfSearchError, ValueError):
    """Bad experiment configuration; ``line`` is the 1-based source line when known."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.message = message
        self.line = line
        self.field = field


class ZeroResultantWarning(UserWarning):
    """Sample mean vanished; the returned mean direction is arbitrary."""


class PermissiveWindowWarning(UserWarning):
    """Phase window extends past pi/2, where the spectral bound on W may fail."""
