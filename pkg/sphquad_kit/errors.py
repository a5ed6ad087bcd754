from typing import List, Optional, Tuple


class SphQuadKitError(Exception):
    """Custom exception for errors in SphQuadKit"""
    pass


class DomainError(SphQuadKitError, ValueError):
    """Argument outside the mathematical domain of an operation."""
    pass


class RuleFormatError(SphQuadKitError):
    """Malformed rule file."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class VolumeFormatError(SphQuadKitError):
    """Malformed voxel volume or material table."""
    pass


class MaterialError(VolumeFormatError, DomainError):
    """Material table or label volume with values outside the physical domain."""
    pass


class NonConvergence(SphQuadKitError):
    """Iteration budget exhausted before the moment residual vanished."""

    def __init__(self, message: str, residual: float = float("nan")):
        self.residual = residual
        super().__init__(f"{message} (final residual {residual:.3e})")


class NegativeWeight(SphQuadKitError):
    """A converged rule carries a non-positive weight."""
    pass


class RankDeficiency(SphQuadKitError):
    """Damped Gauss-Newton system is numerically singular."""
    pass


class Divergence(SphQuadKitError):
    """Transport iteration residual kept growing."""

    def __init__(self, message: str, history: Optional[List[Tuple[int, float]]] = None):
        self.history = history or []
        super().__init__(message)


class ProblemTooLarge(SphQuadKitError):
    """Transport problem exceeds the desk-scale unknown cap."""
    pass
