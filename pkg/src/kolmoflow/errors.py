"""Exception types shared across the package."""


class KolmoflowError(Exception):
    """Base class for all package-specific errors."""


class InvalidFieldError(KolmoflowError):
    """Field values are not finite."""


class HermitianSymmetryError(KolmoflowError):
    """Spectral coefficients are not Hermitian-symmetric within tolerance."""

    def __init__(self, max_asymmetry: float):
        self.max_asymmetry = max_asymmetry
        super().__init__(
            f"coefficients violate Hermitian symmetry: max asymmetry {max_asymmetry:.3e}"
        )


class ShapeError(KolmoflowError):
    """Operator/component mismatch or incompatible grids."""


class MeanViolationError(KolmoflowError):
    """Right-hand side of the zero-mean Poisson problem has a nonzero mean."""


class FloorViolationError(KolmoflowError):
    """omega dropped below the configured positivity floor."""


class BlowUpError(KolmoflowError):
    """Non-finite tendency, collapsed time step, or tripped blow-up monitor."""


class InvalidInitialDataError(KolmoflowError):
    """Initial data violates the well-posedness hypotheses; lists violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid initial data: " + "; ".join(self.violations))


class ConfigError(KolmoflowError):
    """Configuration failed to parse or violated a constraint."""


class TrajectoryMismatchError(KolmoflowError):
    """Twin trajectories do not share grid, parameters, or snapshot times."""


class SnapshotIntegrityError(KolmoflowError):
    """Snapshot sidecar is inconsistent with the stored arrays."""
