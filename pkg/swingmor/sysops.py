"""Transfer functions, companion realizations, the zero-pole residue and system norms.

Works on any second-order system exposing ``pencil(s, p)``, ``stiffness(p)``,
``mass_matrix``, ``damping_matrix``, ``input_map``, ``output_map`` and
``zero_mode(p)`` (full models from netmodel and reduced models from mor).
"""

import csv
import logging
import re
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any, TextIO

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import splu

from .config import FrequencyGrid, Tolerances
from .errors import (
    ModelError,
    ResidueMismatchError,
    SingularPencilError,
    UnstableSystemError,
)
from .utils import relative_error

logger = logging.getLogger(__name__)

_RCOND = re.compile(r"rcond\s*=\s*([0-9.eE+-]+)")

Parameter = Sequence[float] | np.ndarray


def _as_frequency(s: complex) -> complex | float:
    s = complex(s)
    return s.real if s.imag == 0 else s


def solve_pencil(K: Any, rhs: np.ndarray, s: complex) -> np.ndarray:
    """Solve K X = rhs, turning (numerical) singularity into SingularPencilError."""
    if sp.issparse(K):
        try:
            return splu(K.tocsc()).solve(np.asarray(rhs, dtype=K.dtype))
        except RuntimeError:
            raise SingularPencilError(s, 0.0) from None
    with warnings.catch_warnings():
        warnings.simplefilter("error", la.LinAlgWarning)
        try:
            return la.solve(K, rhs)
        except la.LinAlgWarning as warning:
            match = _RCOND.search(str(warning))
            raise SingularPencilError(s, float(match.group(1)) if match else None) from None
        except la.LinAlgError:
            raise SingularPencilError(s, 0.0) from None


def eval_transfer(system: Any, s: complex, p: Parameter) -> np.ndarray:
    """H(s, p) = C (s^2 M + s D + L(p))^-1 B; real for real s."""
    s = _as_frequency(s)
    K = system.pencil(s, p)
    return system.output_map @ solve_pencil(K, system.input_map, s)


def frequency_response(system: Any, omegas: np.ndarray, p: Parameter) -> np.ndarray:
    """H(i omega, p) stacked along the first axis."""
    return np.array([eval_transfer(system, 1j * w, p) for w in omegas])


@dataclass(frozen=True, eq=False)
class FirstOrderRealization:
    """x' = A x + B u, y = C x; ``mass``/``damping`` record the second-order origin."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    mass: np.ndarray | None = None
    damping: np.ndarray | None = None

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def transfer(self, s: complex) -> np.ndarray:
        s = _as_frequency(s)
        return self.C @ solve_pencil(s * np.eye(self.order) - self.A, self.B, s)

    def poles(self) -> np.ndarray:
        return la.eigvals(self.A)

    def spectral_abscissa(self) -> float:
        return float(np.max(self.poles().real)) if self.order else -np.inf


def companion_form(system: Any, p: Parameter) -> FirstOrderRealization:
    """A = [[0, I], [-M^-1 L(p), -M^-1 D]], B = [0; M^-1 B], C = [C, 0]."""
    M = system.mass_matrix
    D = system.damping_matrix
    L = system.stiffness(p)
    L = L.toarray() if sp.issparse(L) else L
    n = M.shape[0]
    factor = la.cho_factor(M)
    minv_l = la.cho_solve(factor, L)
    minv_d = la.cho_solve(factor, D)
    minv_b = la.cho_solve(factor, system.input_map)
    A = np.block([[np.zeros((n, n)), np.eye(n)], [-minv_l, -minv_d]])
    B = np.vstack([np.zeros_like(minv_b), minv_b])
    C = np.hstack([system.output_map, np.zeros_like(system.output_map)])
    return FirstOrderRealization(A, B, C, mass=M, damping=D)


@dataclass(frozen=True, eq=False)
class ResidueData:
    """Residue phi0 = (C u)(u^T B) / alpha_D of the pole at s = 0, alpha_D = u^T D u."""

    alpha_D: float
    phi0: np.ndarray
    upsilon: np.ndarray

    def eigenvectors(self, mass: np.ndarray, damping: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Right/left zero eigenvectors of the companion matrix: q1 = [u; 0], q1~ = [D u; M u] / alpha_D."""
        u = self.upsilon
        q1 = np.concatenate([u, np.zeros_like(u)])
        q1_left = np.concatenate([damping @ u, mass @ u]) / self.alpha_D
        return q1, q1_left


def _apply(matrix: np.ndarray, x: np.ndarray) -> np.ndarray:
    return matrix * x if matrix.ndim == 1 else matrix @ x


def zero_residue(C: np.ndarray, B: np.ndarray, D: np.ndarray, upsilon: np.ndarray) -> ResidueData:
    """Residue at the zero pole; D is a diagonal (as vector) or full damping matrix.

    Invariant under scaling of upsilon. For a reduced model pass (C_r, B_r, D_r, V^T u).
    """
    upsilon = np.asarray(upsilon, dtype=float)
    if not np.any(upsilon):
        raise ModelError("zero-pole residue needs a nonzero null vector")
    alpha = float(upsilon @ _apply(np.asarray(D), upsilon))
    if not alpha > 0:
        raise ModelError(f"u^T D u = {alpha!r} must be positive (damping not positive definite)")
    phi0 = np.outer(C @ upsilon, upsilon @ B) / alpha
    return ResidueData(alpha, phi0, upsilon)


def system_residue(system: Any, p: Parameter) -> ResidueData | None:
    """Zero-pole residue of a second-order system at p, or None without a zero pole."""
    upsilon = system.zero_mode(p)
    if upsilon is None:
        return None
    return zero_residue(system.output_map, system.input_map, system.damping_matrix, upsilon)


@dataclass(frozen=True, eq=False)
class SpectralSplit:
    """H(s) = phi0 / s + H_a(s) with H_a realized by the strictly stable part."""

    stable: FirstOrderRealization
    residue: ResidueData | None
    stable_poles: np.ndarray

    @property
    def phi0(self) -> np.ndarray:
        if self.residue is None:
            return np.zeros((self.stable.C.shape[0], self.stable.B.shape[1]))
        return self.residue.phi0

    def transfer(self, s: complex) -> np.ndarray:
        """Recombined phi0 / s + H_a(s)."""
        return self.phi0 / s + self.stable.transfer(s)


def _check_stable(poles: np.ndarray, what: str) -> None:
    if len(poles) and np.max(poles.real) >= 0:
        worst = poles[np.argmax(poles.real)]
        raise UnstableSystemError(f"{what} has a pole at {worst:.6g} with nonnegative real part")


def deflate_zero_mode(
    real: FirstOrderRealization,
    residue: ResidueData | None,
    tolerances: Tolerances | None = None,
) -> SpectralSplit:
    """Remove the simple zero pole through the projector I - q1 q1~^T.

    range(I - q1 q1~^T) is the orthogonal complement of q1~ and is A-invariant, so an
    orthonormal basis U of it gives H_a(s) = C U (sI - U^T A U)^-1 U^T (I - q1 q1~^T) B.
    """
    tol = tolerances or Tolerances()
    if residue is None:
        poles = real.poles()
        _check_stable(poles, "realization without zero pole")
        return SpectralSplit(real, None, poles)

    eigenvalues = np.sort(np.abs(real.poles()))
    tol0 = tol.zero * np.linalg.norm(real.A)
    if eigenvalues[0] > tol0:
        raise ModelError(f"no eigenvalue within {tol0:.3e} of zero; the residue does not belong to this realization")
    if len(eigenvalues) > 1 and eigenvalues[1] <= 10 * tol0:
        raise ModelError(
            f"multiple near-zero eigenvalues ({eigenvalues[0]:.3e}, {eigenvalues[1]:.3e}); "
            "the model is disconnected or degenerate"
        )
    if real.mass is None or real.damping is None:
        raise ModelError("deflation needs a realization built by companion_form")

    q1, q1_left = residue.eigenvectors(real.mass, real.damping)
    U = la.null_space(q1_left[None, :])
    projected_b = real.B - np.outer(q1, q1_left @ real.B)
    stable = FirstOrderRealization(U.T @ real.A @ U, U.T @ projected_b, real.C @ U)
    poles = stable.poles()
    _check_stable(poles, "deflated realization")
    return SpectralSplit(stable, residue, poles)


def spectral_split(system: Any, p: Parameter, tolerances: Tolerances | None = None) -> SpectralSplit:
    """companion_form + zero_residue + deflate_zero_mode at parameter p."""
    return deflate_zero_mode(companion_form(system, p), system_residue(system, p), tolerances)


def error_split(
    full: SpectralSplit,
    reduced: SpectralSplit,
    tolerances: Tolerances | None = None,
) -> FirstOrderRealization:
    """Stable realization of H_a - H_ra; refuses when the zero-pole residues differ."""
    tol = tolerances or Tolerances()
    deviation = relative_error(reduced.phi0, full.phi0)
    if deviation > tol.residue:
        raise ResidueMismatchError(deviation, tol.residue)
    a, b = full.stable, reduced.stable
    return FirstOrderRealization(
        la.block_diag(a.A, b.A),
        np.vstack([a.B, b.B]),
        np.hstack([a.C, -b.C]),
    )


def h2_norm(system: SpectralSplit | FirstOrderRealization) -> float:
    """H2 norm from the controllability Gramian: sqrt(trace(C P C^T)), A P + P A^T + B B^T = 0.

    For a SpectralSplit this is the norm of the stable part H_a; H itself has a pole at
    zero and no finite H2 norm.
    """
    real = system.stable if isinstance(system, SpectralSplit) else system
    _check_stable(real.poles(), "system")
    gramian = la.solve_continuous_lyapunov(real.A, -real.B @ real.B.T)
    value = np.trace(real.C @ gramian @ real.C.T)
    return float(np.sqrt(max(value.real, 0.0)))


def h2_error(full: SpectralSplit, reduced: SpectralSplit, tolerances: Tolerances | None = None) -> float:
    """||H - H_r||_H2 for matched residues (the common phi0/s term cancels)."""
    return h2_norm(error_split(full, reduced, tolerances))


def h2_norm_quadrature(system: SpectralSplit | FirstOrderRealization, epsrel: float = 1e-8) -> float:
    """Independent H2 oracle: (1/pi) * integral over omega > 0 of ||H(i omega)||_F^2.

    Integrates in log-frequency on segments split at the pole magnitudes, with
    constant (low end) and 1/omega^2 (high end) tails.
    """
    real = system.stable if isinstance(system, SpectralSplit) else system
    poles = real.poles()
    _check_stable(poles, "system")
    if real.order == 0:
        return 0.0
    evaluate = _modal_evaluator(real)

    def integrand(t: float) -> float:
        w = np.exp(t)
        return float(np.linalg.norm(evaluate(1j * w)) ** 2 * w)

    magnitudes = np.abs(poles)
    lo = np.log(max(np.min(magnitudes), 1e-12) * 1e-4)
    hi = np.log(np.max(magnitudes) * 1e4)
    breaks = np.unique(np.clip(np.log(magnitudes[magnitudes > 0]), lo, hi))
    edges = np.concatenate([[lo], breaks, [hi]])
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            total += quad(integrand, a, b, limit=200, epsrel=epsrel, epsabs=0.0)[0]
    total += integrand(lo) + integrand(hi)  # tails: f(w_lo) * w_lo and f(w_hi) * w_hi
    return float(np.sqrt(total / np.pi))


def _modal_evaluator(real: FirstOrderRealization) -> Callable[[complex], np.ndarray]:
    """Diagonalized evaluation s -> C X (sI - Lambda)^-1 X^-1 B, falling back to solves."""
    lam, X = la.eig(real.A)
    if np.linalg.cond(X) > 1e8:
        return real.transfer
    CX = real.C @ X
    XB = la.solve(X, real.B)
    return lambda s: (CX / (s - lam)[None, :]) @ XB


def _sigma_max(values: np.ndarray) -> np.ndarray:
    """Largest singular value of each stacked matrix."""
    return np.linalg.norm(values, ord=2, axis=(-2, -1))


def omega_grid(grid: FrequencyGrid) -> np.ndarray:
    return np.logspace(np.log10(grid.omega_min), np.log10(grid.omega_max), grid.points)


def hinf_norm(
    transfer: Callable[[complex], np.ndarray],
    grid: FrequencyGrid | None = None,
    samples: np.ndarray | None = None,
) -> tuple[float, float]:
    """Peak of sigma_max(H(i omega)) over a log grid with bounded refinement at the argmax.

    The result is a lower bound of the true Hinf norm by construction. ``samples`` may hold
    H already evaluated on the grid.
    """
    grid = grid or FrequencyGrid()
    omegas = omega_grid(grid)
    if samples is None:
        samples = np.array([transfer(1j * w) for w in omegas])
    sigma = _sigma_max(samples)
    k = int(np.argmax(sigma))
    best, best_omega = float(sigma[k]), float(omegas[k])
    if grid.refine:
        logs = np.log10(omegas)
        bounds = (logs[max(k - 1, 0)], logs[min(k + 1, len(logs) - 1)])
        result = minimize_scalar(
            lambda t: -float(_sigma_max(transfer(1j * 10.0**t))),
            bounds=bounds,
            method="bounded",
            options={"xatol": 1e-6},
        )
        if -result.fun > best:
            best, best_omega = float(-result.fun), float(10.0**result.x)
    return best, best_omega


def hinf_error(
    model: Any,
    reduced: Any,
    p: Parameter,
    grid: FrequencyGrid | None = None,
    check_residue: bool = True,
    tolerances: Tolerances | None = None,
) -> tuple[float, float]:
    """Grid Hinf estimate of H(., p) - H_r(., p); by default refuses unmatched residues."""
    tol = tolerances or Tolerances()
    if check_residue:
        full_residue = system_residue(model, p)
        reduced_residue = system_residue(reduced, p)
        phi0 = full_residue.phi0 if full_residue is not None else 0.0
        phi0r = reduced_residue.phi0 if reduced_residue is not None else np.zeros_like(phi0)
        deviation = relative_error(phi0r, phi0)
        if deviation > tol.residue:
            raise ResidueMismatchError(deviation, tol.residue)
    return hinf_norm(lambda s: eval_transfer(model, s, p) - eval_transfer(reduced, s, p), grid)


def write_frequency_csv(
    stream: TextIO,
    omegas: np.ndarray,
    responses: np.ndarray,
    entries: bool = False,
    label: str = "H",
) -> None:
    """CSV with omega, sigma_max and Frobenius norm; optionally every entry's real/imag part."""
    q, m = responses.shape[1:]
    writer = csv.writer(stream, lineterminator="\n")
    header = ["omega", f"sigma_max_{label}", f"fro_{label}"]
    if entries:
        for i in range(q):
            for j in range(m):
                header += [f"re_{label}_{i}_{j}", f"im_{label}_{i}_{j}"]
    writer.writerow(header)
    for w, value in zip(omegas, responses):
        row = [repr(float(w)), repr(float(_sigma_max(value))), repr(float(np.linalg.norm(value)))]
        if entries:
            for z in value.ravel():
                row += [repr(float(z.real)), repr(float(z.imag))]
        writer.writerow(row)
