"""Exception hierarchy for swingmor."""

from typing import Any


class SwingMorError(Exception):
    """Base class for every error raised by swingmor."""


class ModelError(SwingMorError, ValueError):
    """A network or second-order model violates one of its invariants."""


class DisconnectedGraphError(ModelError):
    """The network graph has more than one connected component."""

    def __init__(self, components: list[list[int]]):
        self.components = components
        shown = ", ".join(_format_component(c) for c in components[:5])
        more = f" (+{len(components) - 5} more)" if len(components) > 5 else ""
        super().__init__(
            f"graph is disconnected: {len(components)} components {shown}{more}; "
            "the Laplacian zero eigenvalue would not be simple"
        )


def _format_component(component: list[int]) -> str:
    if len(component) > 8:
        head = ", ".join(map(str, component[:8]))
        return f"{{{head}, ... ({len(component)} nodes)}}"
    return "{" + ", ".join(map(str, component)) + "}"


class ParameterError(ModelError):
    """A parameter vector is unusable (wrong length or nonpositive entries)."""


class SchemaError(SwingMorError, ValueError):
    """A model or ROM file does not match the expected JSON layout."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class CaseParseError(SwingMorError, ValueError):
    """A MATPOWER case file could not be parsed."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class SingularPencilError(SwingMorError, ArithmeticError):
    """s^2 M + s D + L(p) is (numerically) singular at the requested frequency."""

    def __init__(self, s: complex, rcond: float | None = None):
        self.s = s
        self.rcond = rcond
        estimate = f"reciprocal condition estimate {rcond:.3e}" if rcond is not None else "exactly singular"
        super().__init__(f"pencil is singular at s={s}: {estimate} (s at or near a pole)")


class UnstableSystemError(SwingMorError, ArithmeticError):
    """A system expected to be asymptotically stable has a pole with Re >= 0."""


class ResidueMismatchError(SwingMorError, ArithmeticError):
    """Full and reduced residues at the zero pole differ, so the error system is unbounded."""

    def __init__(self, deviation: float, tolerance: float):
        self.deviation = deviation
        self.tolerance = tolerance
        super().__init__(
            f"zero-pole residues differ (relative deviation {deviation:.3e} > {tolerance:.1e}); "
            "the error has a pole at s=0 and its H2/Hinf norms are infinite. "
            "Put the null vector P^-1 1 in span(V) to match the residue."
        )


class ReductionError(SwingMorError):
    """Basis construction or projection failed."""


class ConfigError(SwingMorError, ValueError):
    """Invalid option values or inconsistent run settings."""


class CertificationError(SwingMorError):
    """A reduced model failed certification where a pass was required."""

    def __init__(self, certificate: Any, where: str = ""):
        self.certificate = certificate
        at = f" at {where}" if where else ""
        super().__init__(f"certification failed{at}:\n{certificate}")
