"""Structure-preserving parametric reduction by interpolatory Galerkin projection.

Local bases come from a second-order IRKA run per parameter sample in which the
pole at zero is handled by the null vector P^-1 1 instead of a solve at s = 0.
The local bases are concatenated and orthonormalized into one global basis V, and
the reduced matrices are V^T M V, V^T D V, V^T B, C V and (P V)^T L (P V).
"""

import json
import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import scipy.linalg as la

from .config import IrkaOptions, Tolerances
from .errors import ConfigError, ReductionError, SchemaError
from .netmodel import Matrix, ParameterSpace, SecondOrderModel, model_digest, null_vector, spectral_interval
from .sysops import ResidueData, companion_form, eval_transfer, solve_pencil, system_residue
from .utils import hausdorff_distance, principal_angle, relative_error, symmetrize

logger = logging.getLogger(__name__)

ENRICH_MODES = ("blocks", "samples", "per-p")
ROM_FORMAT = "swingmor-rom"

Parameter = Sequence[float] | np.ndarray


@dataclass(frozen=True)
class ColumnTag:
    """Where a basis column came from."""

    kind: str  # "shift", "null-vector", "e_k", "augment" or "extra"
    sample: int | None = None
    shift: complex | None = None
    part: str | None = None  # "re" / "im" for realified conjugate pairs
    block: int | None = None
    parameter: tuple[float, ...] | None = None

    def __str__(self) -> str:
        where = f"sample {self.sample}" if self.sample is not None else "global"
        if self.kind == "shift":
            part = f" ({self.part})" if self.part else ""
            return f"{where}: shift {self.shift:.6g}{part}"
        if self.kind == "e_k":
            return f"{where}: e_{self.block} enrichment"
        if self.kind == "augment":
            return f"{where}: null-vector augmentation at p={list(self.parameter or ())}"
        return f"{where}: {self.kind}"

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"kind": self.kind}
        if self.sample is not None:
            data["sample"] = self.sample
        if self.shift is not None:
            data["shift"] = [self.shift.real, self.shift.imag]
        if self.part is not None:
            data["part"] = self.part
        if self.block is not None:
            data["block"] = self.block
        if self.parameter is not None:
            data["parameter"] = list(self.parameter)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ColumnTag":
        shift = data.get("shift")
        parameter = data.get("parameter")
        return cls(
            kind=data["kind"],
            sample=data.get("sample"),
            shift=complex(*shift) if shift is not None else None,
            part=data.get("part"),
            block=data.get("block"),
            parameter=tuple(parameter) if parameter is not None else None,
        )


@dataclass(frozen=True, eq=False)
class InterpolationSet:
    """Nonzero shifts with tangent directions, closed under conjugation.

    ``zero_pole`` stands in for the shift at zero: the basis then carries P^-1 1.
    """

    shifts: np.ndarray
    directions: np.ndarray
    zero_pole: bool = False

    def __post_init__(self):
        shifts = np.asarray(self.shifts, dtype=complex).ravel()
        directions = np.asarray(self.directions, dtype=complex)
        if directions.ndim == 1:
            directions = directions[:, None]
        if directions.shape[0] != len(shifts):
            raise ConfigError(f"{len(shifts)} shifts but {directions.shape[0]} directions")
        if np.any(shifts == 0):
            raise ConfigError("shift 0 is not allowed; set zero_pole instead")
        for sigma, b in zip(shifts, directions):
            if sigma.imag == 0:
                continue
            partner = np.flatnonzero(shifts == np.conj(sigma))
            if not any(np.array_equal(directions[k], np.conj(b)) for k in partner):
                raise ConfigError(f"shift {sigma} has no conjugate partner with conjugate direction")
        object.__setattr__(self, "shifts", shifts)
        object.__setattr__(self, "directions", directions)

    def __len__(self) -> int:
        return len(self.shifts)

    def representatives(self) -> list[tuple[complex, np.ndarray]]:
        """One (shift, direction) per real shift and per conjugate pair (upper half plane)."""
        return [(s, b) for s, b in zip(self.shifts, self.directions) if s.imag >= 0]

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[complex, np.ndarray]], zero_pole: bool = False) -> "InterpolationSet":
        """Close (shift, direction) pairs under conjugation; real shifts get real directions."""
        shifts, directions = [], []
        for sigma, b in pairs:
            sigma = complex(sigma)
            b = np.atleast_1d(np.asarray(b, dtype=complex))
            if sigma.imag == 0:
                shifts.append(sigma)
                directions.append(_real_direction(b))
            else:
                sigma = sigma if sigma.imag > 0 else np.conj(sigma)
                shifts += [sigma, np.conj(sigma)]
                directions += [b, np.conj(b)]
        return cls(np.array(shifts), np.array(directions), zero_pole)


def _real_direction(b: np.ndarray) -> np.ndarray:
    """Remove the global phase of a direction that belongs to a real shift."""
    k = int(np.argmax(np.abs(b)))
    if b[k] == 0:
        return b.real.astype(complex)
    return (b * np.exp(-1j * np.angle(b[k]))).real.astype(complex)


@dataclass(frozen=True, eq=False)
class LocalBasis:
    """Real (not yet orthonormal) basis columns with their provenance."""

    vectors: np.ndarray
    tags: tuple[ColumnTag, ...]

    @property
    def columns(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True, eq=False)
class ReductionBasis:
    """Orthonormal global basis V with a provenance tag per column."""

    V: np.ndarray
    provenance: tuple[ColumnTag, ...]

    def __post_init__(self):
        V = np.array(self.V, dtype=float)
        if V.ndim != 2 or V.shape[1] != len(self.provenance):
            raise ReductionError("basis needs one provenance tag per column")
        r = V.shape[1]
        deviation = np.linalg.norm(V.T @ V - np.eye(r)) if r else 0.0
        if deviation > 1e-12 * max(r, 1):
            raise ReductionError(f"basis is not orthonormal (||V^T V - I|| = {deviation:.3e})")
        V.setflags(write=False)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "provenance", tuple(self.provenance))

    @property
    def r(self) -> int:
        return self.V.shape[1]

    @property
    def n(self) -> int:
        return self.V.shape[0]

    def angle(self, x: np.ndarray) -> float:
        return principal_angle(self.V, x)

    def contains(self, x: np.ndarray, tol: float = 1e-8) -> bool:
        return self.angle(x) <= tol


@dataclass(frozen=True, eq=False)
class ReducedModel:
    """Projected second-order model; L_r(p) is assembled online from the shared full L."""

    mass: np.ndarray
    damping: np.ndarray
    input_map: np.ndarray
    output_map: np.ndarray
    basis: ReductionBasis
    laplacian: Matrix
    param_space: ParameterSpace
    mass_basis: np.ndarray  # M V, offline
    damping_basis: np.ndarray  # D V, offline
    enrichment: str = "none"
    zero_pole: bool = True
    source_digest: str | None = None
    full_data: tuple[np.ndarray, ...] | None = field(default=None, repr=False)  # M, D diagonals, B, C
    tolerances: Tolerances = field(default_factory=Tolerances)

    @property
    def r(self) -> int:
        return self.basis.r

    @property
    def mass_matrix(self) -> np.ndarray:
        return self.mass

    @property
    def damping_matrix(self) -> np.ndarray:
        return self.damping

    @property
    def augmentable(self) -> bool:
        return self.enrichment == "per-p"

    def stiffness(self, p: Parameter) -> np.ndarray:
        return assemble_Lr(self, None, p)

    def pencil(self, s: complex, p: Parameter) -> np.ndarray:
        return s * s * self.mass + s * self.damping + self.stiffness(p)

    def zero_mode(self, p: Parameter) -> np.ndarray | None:
        """Null vector of L_r(p): V^T P^-1 1 when it lies in span(V), else from L_r itself."""
        if not self.zero_pole:
            return None
        upsilon = null_vector(self.param_space, p)
        if self.basis.contains(upsilon, self.tolerances.angle):
            return self.basis.V.T @ upsilon
        eigenvalues, vectors = la.eigh(self.stiffness(p))
        threshold = self.tolerances.laplacian_zero * max(np.max(np.abs(eigenvalues)), np.finfo(float).tiny)
        simple = len(eigenvalues) == 1 or eigenvalues[1] > self.tolerances.zero_gap * threshold
        if abs(eigenvalues[0]) <= threshold and simple:
            return vectors[:, 0]
        return None

    def at(self, p: Parameter) -> "ReducedModel":
        """This model with its basis augmented by P^-1 1 when the enrichment mode asks for it."""
        if not self.augmentable:
            return self
        return augment_for_parameter(self, None, p)


def assemble_Lr(reduced: ReducedModel, model: SecondOrderModel | None, p: Parameter) -> np.ndarray:
    """L_r(p) = (P V)^T L (P V), recomputed per parameter (L(p) is not affine in p)."""
    L = reduced.laplacian if model is None else model.base_laplacian
    space = reduced.param_space if model is None else model.param_space
    W = space.expand(p)[:, None] * reduced.basis.V
    return symmetrize(W.T @ (L @ W))


def local_basis(
    model: SecondOrderModel,
    p: Parameter,
    interp: InterpolationSet,
    sample: int | None = None,
) -> LocalBasis:
    """Columns K(sigma_j, p)^-1 B b_j, conjugate pairs realified, plus P^-1 1 for the zero pole."""
    columns, tags = [], []
    for sigma, b in interp.representatives():
        s = sigma.real if sigma.imag == 0 else sigma
        x = solve_pencil(model.pencil(s, p), model.input_map @ b, s)
        if sigma.imag == 0 and not np.any(np.imag(x)):
            columns.append(np.real(x))
            tags.append(ColumnTag("shift", sample, sigma))
        else:
            columns += [np.real(x), np.imag(x)]
            tags += [ColumnTag("shift", sample, sigma, "re"), ColumnTag("shift", sample, sigma, "im")]
    if interp.zero_pole:
        columns.append(null_vector(model.param_space, p))
        tags.append(ColumnTag("null-vector", sample, parameter=tuple(np.asarray(p, dtype=float).tolist())))
    vectors = np.column_stack(columns) if columns else np.zeros((model.n, 0))
    return LocalBasis(vectors, tuple(tags))


def _orthonormalize(columns: np.ndarray, rank_tol: float) -> tuple[np.ndarray, list[int]]:
    """Classical Gram-Schmidt with one reorthogonalization, dropping dependent columns."""
    n, k = columns.shape
    Q = np.zeros((n, k))
    kept: list[int] = []
    for idx in range(k):
        v = np.array(columns[:, idx], dtype=float)
        norm0 = np.linalg.norm(v)
        if norm0 == 0:
            continue
        basis = Q[:, : len(kept)]
        for _ in range(2):
            v -= basis @ (basis.T @ v)
        residual = np.linalg.norm(v)
        if residual <= rank_tol * norm0:
            continue
        Q[:, len(kept)] = v / residual
        kept.append(idx)
    return Q[:, : len(kept)], kept


def global_basis(
    local_bases: Sequence[LocalBasis | np.ndarray],
    extras: Sequence[np.ndarray] = (),
    rank_tol: float = 1e-10,
    extra_tags: Sequence[ColumnTag] | None = None,
    span_tol: float = 1e-8,
) -> ReductionBasis:
    """orth([V^(1) ... V^(m) extras]) with rank-revealing column drops and provenance."""
    blocks, tags = [], []
    for k, item in enumerate(local_bases):
        if isinstance(item, LocalBasis):
            blocks.append(item.vectors)
            tags += item.tags
        else:
            item = np.atleast_2d(np.asarray(item, dtype=float))
            blocks.append(item)
            tags += [ColumnTag("shift", k)] * item.shape[1]
    extras = [np.asarray(x, dtype=float) for x in extras]
    if extras:
        blocks.append(np.column_stack(extras))
        tags += list(extra_tags) if extra_tags is not None else [ColumnTag("extra")] * len(extras)
    if not blocks or sum(b.shape[1] for b in blocks) == 0:
        raise ReductionError("global basis needs at least one column")
    if len({b.shape[0] for b in blocks}) != 1:
        raise ReductionError("all basis blocks must have the same number of rows")

    V, kept = _orthonormalize(np.hstack(blocks), rank_tol)
    basis = ReductionBasis(V, tuple(tags[i] for i in kept))
    for x in extras:
        if not basis.contains(x, span_tol):
            raise ReductionError(f"enrichment vector left span(V) (angle {basis.angle(x):.3e})")
    logger.debug("global basis: %d columns kept of %d", basis.r, len(tags))
    return basis


def enrich_for_blocks(param_space: ParameterSpace) -> list[np.ndarray]:
    """Indicator vectors e_k (ones on block k); P^-1 1 = sum_k e_k / p_k for every p."""
    index = param_space.block_index
    return [(index == k).astype(float) for k in range(param_space.nu)]


def reduce(
    model: SecondOrderModel,
    basis: ReductionBasis,
    enrichment: str = "none",
    tolerances: Tolerances | None = None,
) -> ReducedModel:
    """Galerkin projection; M V and D V are cached for augmentation."""
    if basis.n != model.n:
        raise ReductionError(f"basis has {basis.n} rows, model has n={model.n}")
    V = basis.V
    MV = model.inertia[:, None] * V
    DV = model.damping[:, None] * V
    return ReducedModel(
        mass=symmetrize(V.T @ MV),
        damping=symmetrize(V.T @ DV),
        input_map=V.T @ model.input_map,
        output_map=model.output_map @ V,
        basis=basis,
        laplacian=model.base_laplacian,
        param_space=model.param_space,
        mass_basis=MV,
        damping_basis=DV,
        enrichment=enrichment,
        zero_pole=model.has_zero_pole,
        full_data=(model.inertia, model.damping, model.input_map, model.output_map),
        tolerances=tolerances or Tolerances(),
    )


def augment_for_parameter(reduced: ReducedModel, model: SecondOrderModel | None, p_new: Parameter) -> ReducedModel:
    """Append P^-1 1 at p_new to the basis unless it is already in span(V).

    Only products with the new column are formed; M and D come from the cached
    M V / D V when ``model`` is None (they are diagonal, recovered row-wise).
    """
    upsilon = null_vector(reduced.param_space, p_new)
    if reduced.basis.contains(upsilon, reduced.tolerances.angle):
        return reduced
    V = reduced.basis.V
    w = upsilon - V @ (V.T @ upsilon)
    w -= V @ (V.T @ w)
    w /= np.linalg.norm(w)

    inertia, damping, B, C = _diagonal_data(reduced, model)
    Mw, Dw = inertia * w, damping * w
    mass = _bordered(reduced.mass, reduced.mass_basis.T @ w, w @ Mw)
    damp = _bordered(reduced.damping, reduced.damping_basis.T @ w, w @ Dw)
    tag = ColumnTag("augment", parameter=tuple(np.asarray(p_new, dtype=float).tolist()))
    basis = ReductionBasis(np.column_stack([V, w]), reduced.basis.provenance + (tag,))
    return replace(
        reduced,
        mass=mass,
        damping=damp,
        input_map=np.vstack([reduced.input_map, w @ B]),
        output_map=np.column_stack([reduced.output_map, C @ w]),
        basis=basis,
        mass_basis=np.column_stack([reduced.mass_basis, Mw]),
        damping_basis=np.column_stack([reduced.damping_basis, Dw]),
    )


def _bordered(block: np.ndarray, column: np.ndarray, corner: float) -> np.ndarray:
    return np.block([[block, column[:, None]], [column[None, :], np.array([[corner]])]])


def _diagonal_data(reduced: ReducedModel, model: SecondOrderModel | None) -> tuple[np.ndarray, ...]:
    if model is not None:
        return model.inertia, model.damping, model.input_map, model.output_map
    if reduced.full_data is None:
        raise ReductionError("augmentation needs the full-order model")
    return reduced.full_data


# SOR-IRKA


@dataclass(frozen=True, eq=False)
class IrkaResult:
    """Converged (or best) SOR-IRKA iterate for one parameter sample."""

    parameter: np.ndarray
    interpolation: InterpolationSet
    basis: LocalBasis
    reduced: ReducedModel
    iterations: int
    converged: bool
    history: tuple[float, ...]
    sample: int | None = None

    @property
    def movement(self) -> float:
        return self.history[-1] if self.history else float("nan")

    def summary(self) -> str:
        state = "converged" if self.converged else "NOT converged"
        where = f"sample {self.sample}" if self.sample is not None else "sample"
        return (
            f"{where} p={np.round(self.parameter, 6).tolist()}: {state} after {self.iterations} "
            f"iterations, shift movement {self.movement:.2e}, local order {self.basis.columns}"
        )


def initial_interpolation(model: SecondOrderModel, p: Parameter, count: int, zero_pole: bool) -> InterpolationSet:
    """count shifts log-spaced on i*[sqrt(l2)/10, sqrt(lmax/min M)*10] as conjugate pairs.

    An odd count adds the real shift at the lower end. Directions are the dominant right
    singular vector of B.
    """
    l2, lmax = spectral_interval(model, p)
    lo = np.sqrt(l2) / 10.0
    hi = np.sqrt(lmax / np.min(model.inertia)) * 10.0
    direction = la.svd(model.input_map, full_matrices=False)[2][0]
    pairs = [(1j * w, direction) for w in np.logspace(np.log10(lo), np.log10(hi), count // 2)]
    if count % 2:
        pairs.append((lo, direction))
    return InterpolationSet.from_pairs(pairs, zero_pole)


def _next_interpolation(rom: ReducedModel, p: Parameter, count: int, tolerances: Tolerances) -> InterpolationSet:
    """Mirror images of the dominant reduced poles with residue input directions."""
    real = companion_form(rom, p)
    lam, left, right = la.eig(real.A, left=True, right=True)
    tol0 = tolerances.zero * np.linalg.norm(real.A)
    near_zero = np.abs(lam) < tol0
    if np.count_nonzero(near_zero) > 1:
        logger.warning("reduced model has %d poles within %.2e of zero", np.count_nonzero(near_zero), tol0)
    zero_pole = bool(np.any(near_zero))
    stable = ~near_zero & (lam.real < 0)
    if not np.any(stable):
        raise ReductionError("all nonzero reduced poles are unstable; the projection is broken")
    slots = count - int(zero_pole)

    outputs = real.C @ right
    inputs = left.conj().T @ real.B
    scale = np.abs(np.sum(left.conj() * right, axis=0))
    dominance = np.linalg.norm(outputs, axis=0) * np.linalg.norm(inputs, axis=1) / scale / np.abs(lam.real)
    is_real = np.abs(lam.imag) <= 1e-10 * np.abs(lam)
    candidates = np.flatnonzero(stable & (is_real | (lam.imag > 0)))
    pairs = []
    for j in candidates[np.argsort(-dominance[candidates], kind="stable")]:
        need = 1 if is_real[j] else 2
        if need > slots:
            continue
        sigma = -lam[j].real if is_real[j] else -lam[j]
        b = inputs[j].conj()
        pairs.append((sigma, b / np.linalg.norm(b)))
        slots -= need
        if slots == 0:
            break
    if slots == 1:
        # no real pole left for the odd slot: use the modulus of the best unused complex pole
        used = {complex(-s) for s, _ in pairs}
        for j in candidates[np.argsort(-dominance[candidates], kind="stable")]:
            if not is_real[j] and complex(lam[j]) not in used:
                b = inputs[j].conj()
                pairs.append((abs(lam[j]), b / np.linalg.norm(b)))
                break

    guard = 10 * tol0
    kept = [(s, b) for s, b in pairs if abs(s) >= guard]
    if len(kept) < len(pairs):
        zero_pole = True
    return InterpolationSet.from_pairs(kept, zero_pole)


def sor_irka(
    model: SecondOrderModel,
    p_sample: Parameter,
    r: int,
    opts: IrkaOptions | None = None,
    sample: int | None = None,
) -> IrkaResult:
    """Second-order IRKA at a fixed parameter with the zero pole matched by P^-1 1.

    The structural zero pole is reserved from the start (one of the r columns is the null
    vector), which is the fixed point the shift iteration drives one shift to.
    """
    opts = opts or IrkaOptions()
    tol = opts.tolerances
    if r < 1:
        raise ConfigError(f"local order must be at least 1, got {r}")
    p = model.param_space.check(p_sample)
    zero = model.has_zero_pole
    interp = initial_interpolation(model, p, r - int(zero), zero)

    history: list[float] = []
    best: tuple[float, int, InterpolationSet, LocalBasis, ReducedModel] | None = None
    converged = False
    for iteration in range(1, opts.max_iter + 1):
        local = local_basis(model, p, interp, sample)
        rom = reduce(model, global_basis([local], rank_tol=tol.rank), tolerances=tol)
        proposed = _next_interpolation(rom, p, r, tol)
        if len(proposed) and len(interp):
            movement = hausdorff_distance(interp.shifts, proposed.shifts) / np.max(np.abs(proposed.shifts))
        else:
            movement = 0.0 if len(proposed) == len(interp) else np.inf
        history.append(float(movement))
        logger.debug("sample %s iteration %d: shift movement %.3e", sample, iteration, movement)
        if best is None or movement <= best[0]:
            best = (movement, iteration, interp, local, rom)
        if movement <= opts.tol:
            converged = True
            break
        interp = proposed

    movement, iteration, interp, local, rom = best
    if not converged:
        logger.warning(
            "SOR-IRKA did not converge for sample %s after %d iterations (final shift movement %.3e); "
            "returning iterate %d", sample, opts.max_iter, history[-1], iteration,
        )
    return IrkaResult(p, interp, local, rom, len(history), converged, tuple(history), sample)


def interpolation_residuals(
    model: SecondOrderModel,
    reduced: ReducedModel,
    p: Parameter,
    interp: InterpolationSet,
) -> list[float]:
    """||(H - H_r)(sigma_j, p) b_j|| / ||H(sigma_j, p) b_j|| for every shift."""
    residuals = []
    for sigma, b in zip(interp.shifts, interp.directions):
        s = sigma.real if sigma.imag == 0 else sigma
        full = eval_transfer(model, s, p) @ b
        red = eval_transfer(reduced, s, p) @ b
        residuals.append(relative_error(red, full))
    return residuals


def build_parametric_rom(
    model: SecondOrderModel,
    samples: Sequence[Parameter],
    orders: int | Sequence[int],
    enrich: str = "samples",
    opts: IrkaOptions | None = None,
    workers: int = 1,
) -> tuple[ReducedModel, list[IrkaResult]]:
    """Per-sample SOR-IRKA, global basis, enrichment and Galerkin projection."""
    opts = opts or IrkaOptions()
    space = model.param_space
    if enrich not in ENRICH_MODES:
        raise ConfigError(f"unknown enrichment {enrich!r}; choose from {', '.join(ENRICH_MODES)}")
    samples = [space.check(s) for s in samples]
    if not samples:
        raise ConfigError("at least one parameter sample is required")
    if enrich == "samples" and len(samples) < space.nu:
        raise ConfigError(
            f"enrich=samples needs at least nu={space.nu} parameter samples "
            f"(their null vectors must span the block indicators), got {len(samples)}"
        )
    orders = [orders] * len(samples) if isinstance(orders, int) else list(orders)
    if len(orders) != len(samples):
        raise ConfigError(f"{len(orders)} orders given for {len(samples)} samples")

    jobs = list(enumerate(zip(samples, orders)))

    def run(job: tuple[int, tuple[np.ndarray, int]]) -> IrkaResult:
        k, (p, r) = job
        return sor_irka(model, p, r, opts, sample=k)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]
    for result in results:
        logger.info(result.summary())

    extras: list[np.ndarray] = []
    extra_tags = None
    if enrich == "blocks":
        extras = enrich_for_blocks(space)
        extra_tags = [ColumnTag("e_k", block=k) for k in range(space.nu)]
    basis = global_basis([res.basis for res in results], extras, opts.tolerances.rank, extra_tags)
    if enrich == "samples" and model.has_zero_pole:
        missing = [k for k, e in enumerate(enrich_for_blocks(space)) if not basis.contains(e, opts.tolerances.angle)]
        if missing:
            logger.warning(
                "sample null vectors do not span block indicators %s; residues match only at the samples",
                missing,
            )
    rom = reduce(model, basis, enrichment=enrich, tolerances=opts.tolerances)
    rom = replace(rom, source_digest=model_digest(model))
    logger.info("reduced model of order r=%d from %d samples (enrich=%s)", rom.r, len(samples), enrich)
    return rom, results


# ROM files


def reduced_to_dict(rom: ReducedModel) -> dict[str, Any]:
    return {
        "format": ROM_FORMAT,
        "version": 1,
        "r": rom.r,
        "M_r": rom.mass.tolist(),
        "D_r": rom.damping.tolist(),
        "B_r": rom.input_map.tolist(),
        "C_r": rom.output_map.tolist(),
        "V": rom.basis.V.tolist(),
        "provenance": [tag.to_dict() for tag in rom.basis.provenance],
        "param_blocks": list(rom.param_space.block_sizes),
        "enrichment": rom.enrichment,
        "model_digest": rom.source_digest,
    }


def save_reduced(rom: ReducedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(reduced_to_dict(rom), indent=1) + "\n")


def load_reduced(path: str | Path, model: SecondOrderModel, tolerances: Tolerances | None = None) -> ReducedModel:
    """Read a ROM file; L, M and D are taken from the model the file references by digest."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(data, dict) or data.get("format") != ROM_FORMAT:
        raise SchemaError("$.format", f"expected {ROM_FORMAT!r}")
    digest = data.get("model_digest")
    if digest is not None and digest != model_digest(model):
        raise SchemaError("$.model_digest", "ROM was built from a different full-order model")
    if data.get("param_blocks") != list(model.param_space.block_sizes):
        raise SchemaError("$.param_blocks", "parameter blocks differ from the model's")
    try:
        V = np.array(data["V"], dtype=float)
        provenance = tuple(ColumnTag.from_dict(t) for t in data["provenance"])
        arrays = {key: np.array(data[key], dtype=float) for key in ("M_r", "D_r", "B_r", "C_r")}
    except KeyError as exc:
        raise SchemaError(f"$.{exc.args[0]}", "missing required field") from None
    except (TypeError, ValueError) as exc:
        raise SchemaError("$", f"malformed matrix data ({exc})") from None
    if V.ndim != 2 or V.shape != (model.n, data.get("r")):
        raise SchemaError("$.V", f"expected shape ({model.n}, {data.get('r')}), got {V.shape}")
    r = V.shape[1]
    expected = {"M_r": (r, r), "D_r": (r, r), "B_r": (r, model.inputs), "C_r": (model.outputs, r)}
    for key, shape in expected.items():
        if arrays[key].shape != shape:
            raise SchemaError(f"$.{key}", f"expected shape {shape}, got {arrays[key].shape}")
    enrichment = data.get("enrichment", "none")
    basis = ReductionBasis(V, provenance)
    rom = reduce(model, basis, enrichment=enrichment, tolerances=tolerances)
    return replace(
        rom,
        mass=arrays["M_r"],
        damping=arrays["D_r"],
        input_map=arrays["B_r"],
        output_map=arrays["C_r"],
        source_digest=digest,
    )


def reduced_residue(reduced: ReducedModel, p: Parameter) -> ResidueData | None:
    """phi0_r(p) = (C_r u_r)(u_r^T B_r) / (u_r^T D_r u_r) for the reduced null vector u_r."""
    return system_residue(reduced, p)
