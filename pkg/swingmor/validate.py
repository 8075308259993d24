"""Certificates and parameter sweeps for reduced models."""

import csv
import itertools
import logging
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np
import scipy.linalg as la

from . import __version__
from .config import FrequencyGrid, IrkaOptions, Tolerances
from .errors import CertificationError, ConfigError, ModelError
from .mor import IrkaResult, ReducedModel, build_parametric_rom, interpolation_residuals
from .netmodel import ParameterSpace, SecondOrderModel, null_vector
from .sysops import (
    companion_form,
    eval_transfer,
    frequency_response,
    h2_error,
    h2_norm,
    hinf_norm,
    omega_grid,
    spectral_split,
    system_residue,
)
from .utils import distinct, relative_error

logger = logging.getLogger(__name__)

NORMALIZATIONS = ("grid", "stable")


@dataclass(frozen=True)
class Certificate:
    """Numeric evidence at one parameter; every pass/fail flag is derived from it."""

    parameter: tuple[float, ...]
    expects_zero: bool
    angle: float
    residue_deviation: float
    laplacian_eigenvalues: tuple[float, float]
    laplacian_scale: float
    spectral_abscissa: float
    near_zero_poles: int
    interpolation: tuple[float, ...] = ()
    tolerances: Tolerances = field(default_factory=Tolerances)

    @property
    def residue_match(self) -> bool:
        return self.residue_deviation <= self.tolerances.residue

    @property
    def zero_threshold(self) -> float:
        return self.tolerances.laplacian_zero * self.laplacian_scale

    @property
    def zero_simple(self) -> bool:
        smallest, second = self.laplacian_eigenvalues
        if not self.expects_zero:
            return smallest > self.zero_threshold
        return abs(smallest) <= self.zero_threshold and second > self.tolerances.zero_gap * self.zero_threshold

    @property
    def stable_poles(self) -> bool:
        return self.spectral_abscissa < 0 and self.near_zero_poles <= int(self.expects_zero)

    @property
    def interpolates(self) -> bool:
        return all(res <= self.tolerances.interpolation for res in self.interpolation)

    @property
    def passed(self) -> bool:
        return self.residue_match and self.zero_simple and self.stable_poles and self.interpolates

    def lines(self) -> list[str]:
        def mark(ok: bool) -> str:
            return "PASS" if ok else "FAIL"

        smallest, second = self.laplacian_eigenvalues
        lines = [
            f"certificate at p = {list(self.parameter)}",
            f"{mark(self.residue_match)} residue match: relative deviation {self.residue_deviation:.3e} "
            f"(tol {self.tolerances.residue:.1e}), null-vector angle {self.angle:.3e}",
            f"{mark(self.zero_simple)} simple zero eigenvalue of L_r(p): {smallest:.3e}, next {second:.3e} "
            f"(threshold {self.zero_threshold:.3e}, gap x{self.tolerances.zero_gap:g})",
            f"{mark(self.stable_poles)} reduced poles: spectral abscissa of nonzero modes "
            f"{self.spectral_abscissa:.3e}, {self.near_zero_poles} near zero",
        ]
        if self.interpolation:
            lines.append(
                f"{mark(self.interpolates)} interpolation: {len(self.interpolation)} shifts, "
                f"max relative residual {max(self.interpolation):.3e}"
            )
        return lines

    def __str__(self) -> str:
        return "\n".join(self.lines())


def certify(
    model: SecondOrderModel,
    reduced: ReducedModel,
    p: Sequence[float] | np.ndarray,
    irka_results: Sequence[IrkaResult] = (),
    tolerances: Tolerances | None = None,
) -> Certificate:
    """Residue, zero-eigenvalue, stability and interpolation checks at p; never raises on failure.

    Interpolation residuals are evaluated at each IRKA result's own sample parameter.
    """
    tol = tolerances or reduced.tolerances
    p = model.param_space.check(p)

    if model.has_zero_pole:
        angle = reduced.basis.angle(null_vector(model.param_space, p))
        full = system_residue(model, p).phi0
        try:
            reduced_res = system_residue(reduced, p)
        except ModelError as exc:
            logger.warning("reduced residue unavailable at p=%s: %s", p.tolist(), exc)
            reduced_res = None
        phi0r = reduced_res.phi0 if reduced_res is not None else np.zeros_like(full)
        deviation = relative_error(phi0r, full)
    else:
        angle, deviation = 0.0, 0.0

    eigenvalues = la.eigvalsh(reduced.stiffness(p))
    scale = float(np.max(np.abs(eigenvalues)))
    pair = (float(eigenvalues[0]), float(eigenvalues[1]) if len(eigenvalues) > 1 else np.inf)

    real = companion_form(reduced, p)
    poles = real.poles()
    tol0 = tol.zero * np.linalg.norm(real.A)
    near_zero = np.abs(poles) < tol0
    nonzero = poles[~near_zero]
    abscissa = float(np.max(nonzero.real)) if len(nonzero) else -np.inf

    residuals = tuple(
        itertools.chain.from_iterable(
            interpolation_residuals(model, reduced, res.parameter, res.interpolation) for res in irka_results
        )
    )
    return Certificate(
        parameter=tuple(p.tolist()),
        expects_zero=model.has_zero_pole,
        angle=angle,
        residue_deviation=deviation,
        laplacian_eigenvalues=pair,
        laplacian_scale=scale,
        spectral_abscissa=abscissa,
        near_zero_poles=int(np.count_nonzero(near_zero)),
        interpolation=residuals,
        tolerances=tol,
    )


@dataclass(frozen=True, eq=False)
class ParameterGrid:
    """Parameter points to sweep, one per row."""

    points: np.ndarray
    kind: str = "points"

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if points.size == 0:
            raise ConfigError("parameter grid is empty")
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return self.points.shape[0]

    def __iter__(self):
        return iter(self.points)

    @classmethod
    def tensor(cls, space: ParameterSpace, counts: int | Sequence[int]) -> "ParameterGrid":
        """Tensor grid with counts[k] equispaced values per axis, box corners included."""
        counts = [counts] * space.nu if isinstance(counts, int) else list(counts)
        if len(counts) != space.nu or any(c < 2 for c in counts):
            raise ConfigError(f"need {space.nu} per-axis counts, each at least 2, got {counts}")
        axes = [np.linspace(lo, hi, c) for lo, hi, c in zip(space.lower, space.upper, counts)]
        return cls(np.array(list(itertools.product(*axes))), "tensor")

    @classmethod
    def random(cls, space: ParameterSpace, count: int, seed: int) -> "ParameterGrid":
        """count uniform samples in the box, deterministic in seed."""
        if count < 1:
            raise ConfigError(f"random grid needs at least one point, got {count}")
        rng = np.random.default_rng(seed)
        return cls(rng.uniform(space.lower, space.upper, size=(count, space.nu)), "random")

    def describe(self) -> str:
        return f"{self.kind} grid, {len(self)} points"


@dataclass(frozen=True)
class SweepPoint:
    parameter: tuple[float, ...]
    rel_hinf: float
    argmax_omega: float
    rel_h2: float | None
    seconds: float


@dataclass(frozen=True)
class SweepReport:
    """Relative error surface over a parameter grid."""

    points: tuple[SweepPoint, ...]
    normalization: str
    frequency: FrequencyGrid
    h2: bool = False

    @property
    def rel_hinf(self) -> np.ndarray:
        return np.array([pt.rel_hinf for pt in self.points])

    @property
    def rel_h2(self) -> np.ndarray | None:
        if not self.h2:
            return None
        return np.array([pt.rel_h2 for pt in self.points])

    @property
    def worst(self) -> SweepPoint:
        return self.points[int(np.argmax(self.rel_hinf))]

    @property
    def all_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.rel_hinf)))

    def summary(self) -> str:
        errors = self.rel_hinf
        return (
            f"{len(errors)} points: max rel Hinf {np.max(errors):.3e} at p={list(self.worst.parameter)}, "
            f"median {np.median(errors):.3e}, {sum(pt.seconds for pt in self.points):.2f}s"
        )

    def to_csv(self, stream: TextIO) -> None:
        """Header comments, then p_1..p_nu, rel_hinf, argmax_omega[, rel_h2]; wall times are left out."""
        nu = len(self.points[0].parameter) if self.points else 0
        stream.write(f"# swingmor {__version__}\n")
        stream.write(f"# normalization: {self.normalization}\n")
        stream.write(f"# omega grid: {self.frequency.describe()}\n")
        writer = csv.writer(stream, lineterminator="\n")
        header = [f"p_{k + 1}" for k in range(nu)] + ["rel_hinf", "argmax_omega"]
        if self.h2:
            header.append("rel_h2")
        writer.writerow(header)
        for pt in self.points:
            row = [repr(v) for v in pt.parameter] + [repr(pt.rel_hinf), repr(pt.argmax_omega)]
            if self.h2:
                row.append(repr(pt.rel_h2))
            writer.writerow(row)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as stream:
            self.to_csv(stream)


MAX_CORNERS = 64


def _certification_points(space: ParameterSpace) -> np.ndarray:
    """All box corners, or only the lower and upper vertex when there are too many."""
    if 2**space.nu <= MAX_CORNERS:
        return space.corners()
    logger.info("nu=%d: certifying the lower and upper box vertices only", space.nu)
    return np.array([space.lower, space.upper])


def _sweep_point(
    model: SecondOrderModel,
    reduced: ReducedModel,
    p: np.ndarray,
    freq: FrequencyGrid,
    h2: bool,
    normalization: str,
) -> SweepPoint:
    start = time.perf_counter()
    rom = reduced.at(p)
    omegas = omega_grid(freq)
    full = frequency_response(model, omegas, p)
    error, argmax = hinf_norm(
        lambda s: eval_transfer(model, s, p) - eval_transfer(rom, s, p),
        freq,
        samples=full - frequency_response(rom, omegas, p),
    )
    split = spectral_split(model, p, reduced.tolerances) if (h2 or normalization == "stable") else None
    if normalization == "stable":
        reference = hinf_norm(split.stable.transfer, freq)[0]
    else:
        reference = hinf_norm(lambda s: eval_transfer(model, s, p), freq, samples=full)[0]
    rel_h2 = None
    if h2:
        reduced_split = spectral_split(rom, p, reduced.tolerances)
        rel_h2 = h2_error(split, reduced_split, reduced.tolerances) / h2_norm(split)
    elapsed = time.perf_counter() - start
    logger.debug("p=%s: rel Hinf %.3e at omega %.3e (%.3fs)", p.tolist(), error / reference, argmax, elapsed)
    return SweepPoint(tuple(p.tolist()), error / reference, argmax, rel_h2, elapsed)


def sweep(
    model: SecondOrderModel,
    reduced: ReducedModel,
    grid: ParameterGrid,
    freq: FrequencyGrid | None = None,
    h2: bool = False,
    normalization: str = "grid",
    workers: int = 1,
) -> SweepReport:
    """Relative Hinf (and optionally H2) error at every grid point, certified at the box corners first.

    ``normalization`` "grid" divides by the grid Hinf value of H(., p) itself, "stable" by that of
    its stable part H_a(., p) (H has a 1/s term, so "grid" depends on omega_min).
    """
    freq = freq or FrequencyGrid()
    if normalization not in NORMALIZATIONS:
        raise ConfigError(f"unknown normalization {normalization!r}; choose from {', '.join(NORMALIZATIONS)}")
    for corner in _certification_points(model.param_space):
        certificate = certify(model, reduced.at(corner), corner)
        if not certificate.passed:
            raise CertificationError(certificate, where=f"corner p={corner.tolist()}")

    points = [model.param_space.check(p) for p in grid]

    def run(p: np.ndarray) -> SweepPoint:
        return _sweep_point(model, reduced, p, freq, h2, normalization)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = tuple(pool.map(run, points))
    else:
        results = tuple(run(p) for p in points)
    report = SweepReport(results, normalization, freq, h2)
    logger.info("sweep over %s: %s", grid.describe(), report.summary())
    return report


@dataclass(frozen=True)
class StudyRow:
    order: int
    r: int
    median: float
    max: float


def convergence_study(
    model: SecondOrderModel,
    samples: Sequence[Sequence[float]],
    orders: Sequence[int],
    grid: ParameterGrid,
    freq: FrequencyGrid | None = None,
    enrich: str = "samples",
    opts: IrkaOptions | None = None,
    workers: int = 1,
) -> list[StudyRow]:
    """Full pipeline per local order; reports median/max sweep error per resulting r."""
    unique = list(distinct(int(o) for o in orders))
    if len(unique) < len(orders):
        logger.warning("duplicate orders in %s ignored", list(orders))
    rows = []
    for order in unique:
        rom, _ = build_parametric_rom(model, samples, order, enrich, opts, workers)
        report = sweep(model, rom, grid, freq, workers=workers)
        errors = report.rel_hinf
        rows.append(StudyRow(order, rom.r, float(np.median(errors)), float(np.max(errors))))
        logger.info("order %d: r=%d, median %.3e, max %.3e", order, rom.r, rows[-1].median, rows[-1].max)
    medians = [row.median for row in rows]
    if any(b > a for a, b in zip(medians, medians[1:])):
        logger.info("median error is not monotone in the order: %s", medians)
    return rows


def write_study_csv(stream: TextIO, rows: Sequence[StudyRow]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["order", "r", "median_rel_hinf", "max_rel_hinf"])
    for row in rows:
        writer.writerow([row.order, row.r, repr(row.median), repr(row.max)])
