"""Expose swingmor's reduction pipeline for scripting and the command line."""

from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .config import FrequencyGrid, IrkaOptions, Tolerances
from .mor import IrkaResult, ReducedModel, build_parametric_rom, load_reduced, save_reduced
from .netmodel import SecondOrderModel, load_model
from .sysops import eval_transfer, frequency_response
from .validate import Certificate, ParameterGrid, SweepReport, certify, sweep


class API:
    """Main API for parametric reduced swing models.

    Usage:
        api = API.from_file("model.json")
        api.reduce([[0.9572, 0.93399], [1.1, 0.9]], orders=20)

        # Evaluation (per-p augmentation happens on demand)
        api.transfer(1j, [1.0, 1.0])             # -> H_r(i, p)
        api.transfer(1j, [1.0, 1.0], full=True)  # -> H(i, p)

        # Validation
        api.certify([0.95, 1.05]).passed         # -> True
    """

    def __init__(
        self,
        model: SecondOrderModel,
        reduced: ReducedModel | None = None,
        tolerances: Tolerances | None = None,
    ):
        self.model = model
        self.tolerances = tolerances or Tolerances()
        self.results: list[IrkaResult] = []
        self.set_reduced(reduced)

    @classmethod
    def from_file(cls, model_path: str | Path, rom_path: str | Path | None = None, tolerances: Tolerances | None = None) -> "API":
        model = load_model(model_path)
        reduced = load_reduced(rom_path, model, tolerances) if rom_path is not None else None
        return cls(model, reduced, tolerances)

    def set_reduced(self, reduced: ReducedModel | None) -> None:
        """Replace the reduced model and drop the per-parameter cache."""
        self.reduced = reduced
        self._augmented: dict[tuple[float, ...], ReducedModel] = {}

    def reduce(
        self,
        samples: Sequence[Sequence[float]],
        orders: int | Sequence[int] = 20,
        enrich: str = "samples",
        opts: IrkaOptions | None = None,
        workers: int = 1,
    ) -> ReducedModel:
        """Run the parametric pipeline and keep its result."""
        opts = opts or IrkaOptions(tolerances=self.tolerances)
        reduced, self.results = build_parametric_rom(self.model, samples, orders, enrich, opts, workers)
        self.set_reduced(reduced)
        return reduced

    def _require_reduced(self) -> ReducedModel:
        if self.reduced is None:
            raise RuntimeError("no reduced model; call reduce() or load one first")
        return self.reduced

    def reduced_at(self, p: Sequence[float]) -> ReducedModel:
        """Reduced model usable at p, augmented by P^-1 1 for per-p ROMs (cached)."""
        reduced = self._require_reduced()
        key = tuple(self.model.param_space.check(p).tolist())
        if key not in self._augmented:
            self._augmented[key] = reduced.at(key)
        return self._augmented[key]

    def transfer(self, s: complex, p: Sequence[float], full: bool = False) -> np.ndarray:
        system = self.model if full else self.reduced_at(p)
        return eval_transfer(system, s, p)

    def response(self, omegas: np.ndarray, p: Sequence[float], full: bool = False) -> np.ndarray:
        system = self.model if full else self.reduced_at(p)
        return frequency_response(system, omegas, p)

    def certify(self, p: Sequence[float], with_interpolation: bool = False) -> Certificate:
        results = self.results if with_interpolation else ()
        return certify(self.model, self.reduced_at(p), p, results, self.tolerances)

    def sweep(
        self,
        grid: ParameterGrid,
        freq: FrequencyGrid | None = None,
        h2: bool = False,
        normalization: str = "grid",
        workers: int = 1,
    ) -> SweepReport:
        return sweep(self.model, self._require_reduced(), grid, freq, h2, normalization, workers)

    def save_reduced(self, path: str | Path) -> None:
        save_reduced(self._require_reduced(), path)
