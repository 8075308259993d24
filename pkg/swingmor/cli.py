"""Command line entry point: swingmor {gen,import,reduce,check,eval,sweep,study}.

Exit codes: 0 success, 1 validation failure or runtime error, 2 usage error.
"""

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import TextIO

import numpy as np

from . import __version__
from .api import API
from .config import FrequencyGrid, IrkaOptions, Tolerances
from .errors import CertificationError, ConfigError, SwingMorError
from .mor import ENRICH_MODES
from .netmodel import (
    GENERATOR_KINDS,
    ParameterSpace,
    SecondOrderModel,
    dumps_model,
    generate_network,
    parse_matpower_case,
    spectral_interval,
)
from .sysops import frequency_response, omega_grid, write_frequency_csv
from .validate import NORMALIZATIONS, ParameterGrid, convergence_study, write_study_csv

logger = logging.getLogger(__name__)

SAMPLE_TABLES = {"two-block": "two_block_samples.json", "four-block": "four_block_samples.json"}


class UsageError(SwingMorError):
    """Flags are individually valid but do not fit together."""


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by all subcommands, taken from the global flags."""

    command: str
    seed: int | None
    tolerances: Tolerances
    frequency: FrequencyGrid
    out: Path | None
    format: str
    workers: int

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        tolerances = Tolerances(zero=args.tol_zero, rank=args.tol_rank)
        frequency = FrequencyGrid(args.omega_min, args.omega_max, args.omega_points)
        if args.workers < 1:
            raise ConfigError(f"--workers must be at least 1, got {args.workers}")
        out = Path(args.out) if args.out else None
        return cls(args.command, args.seed, tolerances, frequency, out, args.format, args.workers)

    def require_seed(self, what: str) -> int:
        if self.seed is None:
            raise UsageError(f"{what} is randomized and needs --seed")
        return self.seed

    def require_out(self) -> Path:
        if self.out is None:
            raise UsageError(f"{self.command} writes a file and needs --out")
        return self.out


def _floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def read_samples(inline: Sequence[Sequence[float]] | None, path: str | None) -> list[list[float]]:
    """Samples from repeated --sample flags and/or a JSON list file (or a shipped table name)."""
    samples = [list(s) for s in inline or ()]
    if path is not None:
        if path in SAMPLE_TABLES:
            text = resources.files("swingmor").joinpath("data").joinpath(SAMPLE_TABLES[path]).read_text()
        else:
            text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from None
        if not isinstance(data, list) or not all(isinstance(row, list) for row in data):
            raise ConfigError(f"{path}: expected a JSON list of parameter lists")
        samples += [[float(v) for v in row] for row in data]
    if not samples:
        raise UsageError("no parameter samples given (use --sample or --samples-file)")
    return samples


def _io_indices(args: argparse.Namespace) -> dict:
    if args.io == "identity":
        return {"inputs": None, "outputs": None}
    return {"inputs": args.inputs, "outputs": args.outputs}


def _param_space(args: argparse.Namespace, n: int) -> ParameterSpace:
    if args.blocks == "full":
        return ParameterSpace.full(n, args.alpha)
    try:
        nu = int(args.blocks)
    except ValueError:
        raise UsageError(f"--blocks must be an integer or 'full', got {args.blocks!r}") from None
    return ParameterSpace.uniform_blocks(n, nu, args.alpha)


def _summary(model: SecondOrderModel) -> str:
    l2, lmax = spectral_interval(model, np.ones(model.param_space.nu))
    edges = len(model.network.edges) if model.network is not None else "-"
    return (
        f"n={model.n} |E|={edges} nu={model.param_space.nu} m={model.inputs} q={model.outputs} "
        f"lambda_2={l2:.6g} lambda_max={lmax:.6g}"
    )


def _write(config: RunConfig, emit) -> None:
    if config.out is None:
        emit(sys.stdout)
        return
    with open(config.out, "w", newline="") as stream:
        emit(stream)


def _emit_model(config: RunConfig, model: SecondOrderModel) -> None:
    """Model JSON to --out, or to stdout with the summary moved to stderr."""
    _write(config, lambda stream: stream.write(dumps_model(model)))
    print(_summary(model), file=sys.stdout if config.out is not None else sys.stderr)


def cmd_gen(args: argparse.Namespace, config: RunConfig) -> int:
    net = generate_network(args.kind, args.n, config.require_seed("gen"), **_io_indices(args))
    model = SecondOrderModel.from_network(net, _param_space(args, net.n))
    _emit_model(config, model)
    return 0


def cmd_import(args: argparse.Namespace, config: RunConfig) -> int:
    net = parse_matpower_case(Path(args.case).read_text(), args.inertia, args.damping, **_io_indices(args))
    model = SecondOrderModel.from_network(net, _param_space(args, net.n))
    _emit_model(config, model)
    return 0


def cmd_reduce(args: argparse.Namespace, config: RunConfig) -> int:
    out = config.require_out()
    api = API.from_file(args.model, tolerances=config.tolerances)
    if args.random_samples:
        rng = np.random.default_rng(config.require_seed("--random-samples"))
        space = api.model.param_space
        samples = rng.uniform(space.lower, space.upper, size=(args.random_samples, space.nu)).tolist()
        samples = read_samples(samples + (args.sample or []), args.samples_file)
    else:
        samples = read_samples(args.sample, args.samples_file)
    orders = args.order if len(args.order) > 1 else args.order[0]
    opts = IrkaOptions(args.irka_tol, args.max_iter, config.tolerances)
    reduced = api.reduce(samples, orders, args.enrich, opts, config.workers)
    api.save_reduced(out)
    for result in api.results:
        print(result.summary())
    stalled = sum(not result.converged for result in api.results)
    if stalled:
        logger.warning("%d of %d samples stopped at --max-iter %d without converging", stalled, len(api.results), args.max_iter)
    print(f"reduced order r={reduced.r} (enrich={reduced.enrichment}) written to {out}")
    return 0


def _check_points(args: argparse.Namespace, config: RunConfig, space: ParameterSpace) -> list[list[float]]:
    points = [list(p) for p in args.param or ()]
    if args.random:
        points += ParameterGrid.random(space, args.random, config.require_seed("--random")).points.tolist()
    if not points:
        points = [space.center().tolist()]
    return points


def cmd_check(args: argparse.Namespace, config: RunConfig) -> int:
    api = API.from_file(args.model, args.rom, config.tolerances)
    failed = 0
    for p in _check_points(args, config, api.model.param_space):
        certificate = api.certify(p)
        print(certificate)
        failed += not certificate.passed
    if failed:
        logger.error("%d parameter point(s) failed certification", failed)
        return 1
    return 0


def cmd_eval(args: argparse.Namespace, config: RunConfig) -> int:
    api = API.from_file(args.model, args.rom, config.tolerances)
    p = args.param or api.model.param_space.center().tolist()
    omegas = omega_grid(config.frequency)
    if args.rom is None:
        responses, label = frequency_response(api.model, omegas, p), "H"
    else:
        responses, label = api.response(omegas, p), "H_r"

    def emit(stream: TextIO) -> None:
        if config.format == "json":
            data = {
                "parameter": list(p),
                "omega": omegas.tolist(),
                "re": responses.real.tolist(),
                "im": responses.imag.tolist(),
            }
            stream.write(json.dumps(data) + "\n")
        else:
            write_frequency_csv(stream, omegas, responses, entries=args.entries, label=label)

    _write(config, emit)
    return 0


def _grid(args: argparse.Namespace, config: RunConfig, space: ParameterSpace) -> ParameterGrid:
    if args.random:
        return ParameterGrid.random(space, args.random, config.require_seed("--random"))
    return ParameterGrid.tensor(space, args.grid if len(args.grid) > 1 else args.grid[0])


def cmd_sweep(args: argparse.Namespace, config: RunConfig) -> int:
    api = API.from_file(args.model, args.rom, config.tolerances)
    grid = _grid(args, config, api.model.param_space)
    report = api.sweep(grid, config.frequency, args.h2, args.normalization, config.workers)

    def emit(stream: TextIO) -> None:
        if config.format == "json":
            rows = [
                {"p": list(pt.parameter), "rel_hinf": pt.rel_hinf, "argmax_omega": pt.argmax_omega, "rel_h2": pt.rel_h2}
                for pt in report.points
            ]
            stream.write(json.dumps({"normalization": report.normalization, "points": rows}) + "\n")
        else:
            report.to_csv(stream)

    _write(config, emit)
    logger.info(report.summary())
    return 0 if report.all_finite else 1


def cmd_study(args: argparse.Namespace, config: RunConfig) -> int:
    api = API.from_file(args.model, tolerances=config.tolerances)
    samples = read_samples(args.sample, args.samples_file)
    grid = _grid(args, config, api.model.param_space)
    opts = IrkaOptions(args.irka_tol, args.max_iter, config.tolerances)
    rows = convergence_study(api.model, samples, args.orders, grid, config.frequency, args.enrich, opts, config.workers)
    _write(config, lambda stream: write_study_csv(stream, rows))
    return 0


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="seed for every randomized step")
    common.add_argument("--tol-zero", type=float, default=Tolerances.zero, help="near-zero pole tolerance (relative)")
    common.add_argument("--tol-rank", type=float, default=Tolerances.rank, help="basis column drop tolerance")
    common.add_argument("--omega-min", type=float, default=FrequencyGrid.omega_min)
    common.add_argument("--omega-max", type=float, default=FrequencyGrid.omega_max)
    common.add_argument("--omega-points", type=int, default=FrequencyGrid.points)
    common.add_argument("--out", "-o", help="output file (stdout when omitted, where allowed)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--workers", type=int, default=1, help="threads for samples and sweep points")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true")
    verbosity.add_argument("--quiet", "-q", action="store_true")
    return common


def _network_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--blocks", default="1", help="number of parameter blocks nu, or 'full'")
    parser.add_argument("--alpha", type=float, default=0.15, help="parameter box [1 - alpha, 1 + alpha]")
    parser.add_argument("--io", choices=("selector", "identity"), default="selector")
    parser.add_argument("--inputs", type=_ints, default=[0], help="input buses (selector io)")
    parser.add_argument("--outputs", type=_ints, default=None, help="output buses (default: the inputs)")


def _sample_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--sample", type=_floats, action="append", help="parameter sample, e.g. 0.9572,0.93399")
    parser.add_argument(
        "--samples-file",
        help=f"JSON list of samples, or one of the shipped tables: {', '.join(SAMPLE_TABLES)}",
    )
    parser.add_argument("--enrich", choices=ENRICH_MODES, default="samples")
    parser.add_argument("--irka-tol", type=float, default=IrkaOptions.tol)
    parser.add_argument("--max-iter", type=int, default=IrkaOptions.max_iter)


def _grid_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid", type=_ints, default=[10], help="tensor grid points per axis")
    parser.add_argument("--random", type=int, default=0, help="random grid with this many points (needs --seed)")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="swingmor", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", parents=[common], help="generate a synthetic network model")
    gen.add_argument("--kind", choices=GENERATOR_KINDS, required=True)
    gen.add_argument("--n", type=int, required=True)
    _network_flags(gen)
    gen.set_defaults(handler=cmd_gen)

    imp = commands.add_parser("import", parents=[common], help="import a MATPOWER case file")
    imp.add_argument("case")
    imp.add_argument("--inertia", type=float, default=1.0)
    imp.add_argument("--damping", type=float, default=1.0)
    _network_flags(imp)
    imp.set_defaults(handler=cmd_import)

    red = commands.add_parser("reduce", parents=[common], help="build a parametric reduced model")
    red.add_argument("--model", required=True)
    red.add_argument("--order", type=_ints, default=[20], help="local order, or one per sample")
    red.add_argument("--random-samples", type=int, default=0, help="draw this many samples from the box (needs --seed)")
    _sample_flags(red)
    red.set_defaults(handler=cmd_reduce)

    check = commands.add_parser("check", parents=[common], help="certify a reduced model")
    check.add_argument("--model", required=True)
    check.add_argument("--rom", required=True)
    check.add_argument("--param", type=_floats, action="append")
    check.add_argument("--random", type=int, default=0, help="also check this many random parameters (needs --seed)")
    check.set_defaults(handler=cmd_check)

    ev = commands.add_parser("eval", parents=[common], help="frequency response of a model or reduced model")
    ev.add_argument("--model", required=True)
    ev.add_argument("--rom")
    ev.add_argument("--param", type=_floats)
    ev.add_argument("--entries", action="store_true", help="also write every entry of H")
    ev.set_defaults(handler=cmd_eval)

    sw = commands.add_parser("sweep", parents=[common], help="relative error over a parameter grid")
    sw.add_argument("--model", required=True)
    sw.add_argument("--rom", required=True)
    sw.add_argument("--h2", action="store_true", help="also compute the relative H2 error")
    sw.add_argument("--normalization", choices=NORMALIZATIONS, default="grid")
    _grid_flags(sw)
    sw.set_defaults(handler=cmd_sweep)

    study = commands.add_parser("study", parents=[common], help="error against reduced order")
    study.add_argument("--model", required=True)
    study.add_argument("--orders", type=_ints, required=True)
    _sample_flags(study)
    _grid_flags(study)
    study.set_defaults(handler=cmd_study)
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.WARNING
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger("swingmor").setLevel(level)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_logging(args)
    try:
        config = RunConfig.from_args(args)
        return args.handler(args, config)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"swingmor {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except CertificationError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (SwingMorError, OSError) as exc:
        print(f"swingmor {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
