"""Exception hierarchy shared by all sawcrystal modules."""


class SawCrystalError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(SawCrystalError, ValueError):
    """Invalid physical or geometric parameter."""


class DegenerateGapError(ParameterError):
    """Lattice without index contrast has a zero-width stop band."""


class DomainError(SawCrystalError, ValueError):
    """Argument outside the domain where a model is valid."""


class PreconditionError(SawCrystalError, ValueError):
    """Input violates a documented precondition (e.g. unnormalized field)."""


class NumericalError(SawCrystalError, RuntimeError):
    """A numerical procedure failed (bracketing, convergence, singularity)."""


class IndexCollisionError(NumericalError):
    """Two quasinormal modes were assigned the same longitudinal index."""


class ResourceError(SawCrystalError, RuntimeError):
    """Requested computation exceeds a configured resource cap."""


class FitError(SawCrystalError, RuntimeError):
    """A fit could not be performed or did not converge."""


class ResolutionError(FitError):
    """Feature is narrower than the sampling grid can resolve."""


class AmbiguityError(FitError):
    """Overlapping features cannot be separated unambiguously."""

    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = list(candidates)


class ConfigError(SawCrystalError, ValueError):
    """Configuration file problem, tagged with the offending key and line."""

    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line
