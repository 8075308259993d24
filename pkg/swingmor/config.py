"""Tolerances and option records shared across swingmor modules."""

from dataclasses import dataclass, field, fields

from .errors import ConfigError


@dataclass(frozen=True)
class Tolerances:
    """Numerical gates used by the reduction and certification code."""

    zero: float = 1e-8  # near-zero pole, relative to ||A||_F
    rank: float = 1e-10  # column drop in the global basis
    residue: float = 1e-10  # relative zero-pole residue deviation
    angle: float = 1e-8  # principal angle for span membership
    interpolation: float = 1e-8
    laplacian_zero: float = 1e-10  # smallest eigenvalue of L_r, relative to ||L_r||
    zero_gap: float = 100.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not value > 0:
                raise ConfigError(f"tolerance {f.name} must be positive, got {value!r}")


@dataclass(frozen=True)
class IrkaOptions:
    """Stopping rule for SOR-IRKA."""

    tol: float = 1e-6
    max_iter: int = 50
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError(f"IRKA tolerance must be positive, got {self.tol!r}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be at least 1, got {self.max_iter!r}")


@dataclass(frozen=True)
class FrequencyGrid:
    """Logarithmic omega grid for frequency sampling and Hinf estimation."""

    omega_min: float = 1e-4
    omega_max: float = 1e4
    points: int = 400
    refine: bool = True

    def __post_init__(self):
        if not 0 < self.omega_min < self.omega_max:
            raise ConfigError(
                f"need 0 < omega_min < omega_max, got {self.omega_min!r}, {self.omega_max!r}"
            )
        if self.points < 2:
            raise ConfigError(f"frequency grid needs at least 2 points, got {self.points!r}")

    def describe(self) -> str:
        refine = "+refine" if self.refine else ""
        return f"logspace({self.omega_min:g},{self.omega_max:g},{self.points}){refine}"


@dataclass(frozen=True)
class CoefficientRanges:
    """Uniform sampling ranges for generated networks."""

    inertia: tuple[float, float] = (1.0, 5.0)
    damping: tuple[float, float] = (0.5, 2.0)
    susceptance: tuple[float, float] = (1.0, 10.0)
    extra_edge_density: float = 0.5  # extra random edges per node for random_connected

    def __post_init__(self):
        for name in ("inertia", "damping", "susceptance"):
            low, high = getattr(self, name)
            if not 0 < low <= high:
                raise ConfigError(f"{name} range must satisfy 0 < low <= high, got ({low}, {high})")
        if self.extra_edge_density < 0:
            raise ConfigError("extra_edge_density must be nonnegative")

    @classmethod
    def fixed(cls, inertia: float = 1.0, damping: float = 1.0, susceptance: float = 1.0) -> "CoefficientRanges":
        return cls((inertia, inertia), (damping, damping), (susceptance, susceptance))
