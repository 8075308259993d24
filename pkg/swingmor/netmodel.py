"""Parametric second-order swing models of power networks.

A network (buses, lines with susceptances b_ij, inertia M_i, damping D_i and
input/output selections) becomes the parametric second-order system

    M x'' + D x' + L(p) x = B u,    y = C x,    L(p) = P L P,

where L is the susceptance Laplacian and P = diag(p_1 I_{n_1}, ..., p_nu I_{n_nu})
scales blocks of buses (per-block voltage magnitudes around 1).
"""

import hashlib
import itertools
import json
import logging
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh
from scipy.sparse.linalg import norm as sparse_norm

from .config import CoefficientRanges
from .errors import (
    CaseParseError,
    ConfigError,
    DisconnectedGraphError,
    ModelError,
    ParameterError,
    SchemaError,
)
from .utils import as_float_vector, selector_indices, unit_selector

logger = logging.getLogger(__name__)

DENSE_LIMIT = 2000  # above this node count the Laplacian is stored as CSR
DEFAULT_ALPHA = 0.15
MODEL_FORMAT = "swingmor-model"
GENERATOR_KINDS = ("path", "ring", "random_connected")

Edge = tuple[int, int, float]
Matrix = np.ndarray | sp.csr_matrix


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def _matrices_equal(a: Matrix, b: Matrix) -> bool:
    if sp.issparse(a) or sp.issparse(b):
        if not (sp.issparse(a) and sp.issparse(b)) or a.shape != b.shape:
            return False
        return (a != b).nnz == 0
    return a.shape == b.shape and bool(np.array_equal(a, b))


@dataclass(frozen=True, eq=False)
class NetworkModel:
    """Graph of buses and lines with the physical coefficients of the swing model."""

    n: int
    edges: tuple[Edge, ...]
    inertia: np.ndarray
    damping: np.ndarray
    input_map: np.ndarray
    output_map: np.ndarray

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ModelError(f"a network needs at least 2 buses, got n={self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "edges", self._checked_edges(self.edges, self.n))
        for name in ("inertia", "damping"):
            values = _frozen(as_float_vector(getattr(self, name), name))
            if values.shape != (self.n,):
                raise ModelError(f"{name} must have length n={self.n}, got {values.shape[0]}")
            bad = np.flatnonzero(~(values > 0))
            if len(bad):
                raise ModelError(f"{name}[{bad[0]}] = {values[bad[0]]!r} must be strictly positive")
            object.__setattr__(self, name, values)

        input_map = _frozen(np.atleast_2d(self.input_map))
        output_map = _frozen(np.atleast_2d(self.output_map))
        if input_map.shape[0] != self.n:
            raise ModelError(f"input_map must have n={self.n} rows, got shape {input_map.shape}")
        if output_map.shape[1] != self.n:
            raise ModelError(f"output_map must have n={self.n} columns, got shape {output_map.shape}")
        object.__setattr__(self, "input_map", input_map)
        object.__setattr__(self, "output_map", output_map)

    @staticmethod
    def _checked_edges(edges: Iterable[Sequence], n: int) -> tuple[Edge, ...]:
        seen: dict[tuple[int, int], int] = {}
        checked = []
        for k, edge in enumerate(edges):
            i, j, b = int(edge[0]), int(edge[1]), float(edge[2])
            label = f"edge {k} ({i}-{j})"
            if not (0 <= i < n and 0 <= j < n):
                raise ModelError(f"{label}: node index out of range for n={n}")
            if i == j:
                raise ModelError(f"{label}: self-loop")
            if not (b > 0 and np.isfinite(b)):
                raise ModelError(f"{label}: susceptance {b!r} must be strictly positive")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ModelError(f"{label}: duplicates edge {seen[key]} (merge parallel lines first)")
            seen[key] = k
            checked.append((i, j, b))
        return tuple(checked)

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, NetworkModel):
            return NotImplemented
        return (
            self.n == other.n
            and self.edges == other.edges
            and all(
                _matrices_equal(getattr(self, f), getattr(other, f))
                for f in ("inertia", "damping", "input_map", "output_map")
            )
        )

    def components(self) -> list[list[int]]:
        """Connected components (sorted node lists) by union-find."""
        uf = nx.utils.UnionFind(range(self.n))
        for i, j, _ in self.edges:
            uf.union(i, j)
        return sorted((sorted(c) for c in uf.to_sets()), key=lambda c: c[0])

    @property
    def is_connected(self) -> bool:
        return len(self.components()) == 1


@dataclass(frozen=True, eq=False)
class ParameterSpace:
    """Block structure of the scaling P and the admissible box Omega."""

    block_sizes: tuple[int, ...]
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        if not sizes or any(s < 1 for s in sizes):
            raise ModelError(f"block sizes must be positive integers, got {list(self.block_sizes)}")
        lower = _frozen(as_float_vector(self.lower, "lower"))
        upper = _frozen(as_float_vector(self.upper, "upper"))
        if lower.shape != (len(sizes),) or upper.shape != (len(sizes),):
            raise ModelError(f"box bounds must have length nu={len(sizes)}")
        if not (np.all(lower > 0) and np.all(lower <= upper)):
            raise ModelError("parameter box needs 0 < lower_k <= upper_k for every block")
        object.__setattr__(self, "block_sizes", sizes)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform_blocks(cls, n: int, nu: int = 1, alpha: float = DEFAULT_ALPHA) -> "ParameterSpace":
        """nu contiguous blocks of near-equal size and the box [1 - alpha, 1 + alpha]^nu."""
        if not 1 <= nu <= n:
            raise ModelError(f"need 1 <= nu <= n, got nu={nu}, n={n}")
        if not 0 <= alpha < 1:
            raise ModelError(f"alpha must lie in [0, 1), got {alpha}")
        base, extra = divmod(n, nu)
        sizes = tuple(base + 1 if k < extra else base for k in range(nu))
        return cls(sizes, np.full(nu, 1.0 - alpha), np.full(nu, 1.0 + alpha))

    @classmethod
    def full(cls, n: int, alpha: float = DEFAULT_ALPHA) -> "ParameterSpace":
        """One parameter per bus (nu = n, unit blocks)."""
        return cls.uniform_blocks(n, n, alpha)

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, ParameterSpace):
            return NotImplemented
        return (
            self.block_sizes == other.block_sizes
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
        )

    @property
    def nu(self) -> int:
        return len(self.block_sizes)

    @property
    def n(self) -> int:
        return sum(self.block_sizes)

    @cached_property
    def block_index(self) -> np.ndarray:
        """Block number of every node."""
        return np.repeat(np.arange(self.nu), self.block_sizes)

    def check(self, p: Sequence[float] | np.ndarray) -> np.ndarray:
        """Validate p: right length and strictly positive; warn when outside the box."""
        p = as_float_vector(p, "parameter")
        if p.shape != (self.nu,):
            raise ParameterError(f"parameter must have length nu={self.nu}, got {p.shape[0]}")
        if not np.all(p > 0):
            raise ParameterError(f"parameters must be strictly positive (P singular otherwise), got {p.tolist()}")
        if not self.contains(p):
            logger.warning("parameter %s lies outside the box [%s, %s]", p.tolist(), self.lower.tolist(), self.upper.tolist())
        return p

    def contains(self, p: np.ndarray) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lower) and np.all(p <= self.upper))

    def expand(self, p: Sequence[float] | np.ndarray) -> np.ndarray:
        """Diagonal of P for parameter p."""
        return np.repeat(self.check(p), self.block_sizes)

    def corners(self) -> np.ndarray:
        """All 2^nu vertices of the box, one per row."""
        return np.array(list(itertools.product(*zip(self.lower, self.upper))), dtype=float)

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)


@dataclass(frozen=True, eq=False)
class SecondOrderModel:
    """The parametric triple (M, D, L(.)) with input and output maps.

    ``network`` is set for models built from a graph; models built directly from a
    stiffness matrix (any symmetric positive semidefinite L) leave it as None.
    """

    base_laplacian: Matrix
    inertia: np.ndarray
    damping: np.ndarray
    input_map: np.ndarray
    output_map: np.ndarray
    param_space: ParameterSpace
    network: NetworkModel | None = None

    def __post_init__(self):
        L = self.base_laplacian
        if not sp.issparse(L):
            L = _frozen(np.atleast_2d(L))
        n = L.shape[0]
        if L.shape != (n, n):
            raise ModelError(f"stiffness must be square, got shape {L.shape}")
        size = L.nnz if sp.issparse(L) else L.size
        asym = abs(L - L.T).max() if size else 0.0
        scale = abs(L).max() if size else 0.0
        if asym > 1e-12 * max(scale, 1.0):
            raise ModelError(f"stiffness is not symmetric (max asymmetry {asym:.3e})")
        object.__setattr__(self, "base_laplacian", L)
        for name in ("inertia", "damping"):
            values = _frozen(as_float_vector(getattr(self, name), name))
            if values.shape != (n,) or not np.all(values > 0):
                raise ModelError(f"{name} must be a positive vector of length {n}")
            object.__setattr__(self, name, values)
        input_map = _frozen(np.atleast_2d(self.input_map))
        output_map = _frozen(np.atleast_2d(self.output_map))
        if input_map.shape[0] != n or output_map.shape[1] != n:
            raise ModelError(f"input/output maps do not match n={n}")
        object.__setattr__(self, "input_map", input_map)
        object.__setattr__(self, "output_map", output_map)
        if self.param_space.n != n:
            raise ModelError(f"parameter blocks cover {self.param_space.n} nodes, model has n={n}")

    @classmethod
    def from_network(cls, net: NetworkModel, param_space: ParameterSpace | None = None) -> "SecondOrderModel":
        if param_space is None:
            param_space = ParameterSpace.uniform_blocks(net.n, 1)
        return cls(
            base_laplacian=build_laplacian(net),
            inertia=net.inertia,
            damping=net.damping,
            input_map=net.input_map,
            output_map=net.output_map,
            param_space=param_space,
            network=net,
        )

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, SecondOrderModel):
            return NotImplemented
        return (
            _matrices_equal(self.base_laplacian, other.base_laplacian)
            and all(
                _matrices_equal(getattr(self, f), getattr(other, f))
                for f in ("inertia", "damping", "input_map", "output_map")
            )
            and self.param_space == other.param_space
            and self.network == other.network
        )

    @property
    def n(self) -> int:
        return self.base_laplacian.shape[0]

    @property
    def inputs(self) -> int:
        return self.input_map.shape[1]

    @property
    def outputs(self) -> int:
        return self.output_map.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.base_laplacian)

    @cached_property
    def has_zero_pole(self) -> bool:
        """Does the stiffness annihilate the ones vector (Laplacian structure)?"""
        residual = np.linalg.norm(self.base_laplacian @ np.ones(self.n))
        scale = sparse_norm(self.base_laplacian) if self.is_sparse else np.linalg.norm(self.base_laplacian)
        return bool(residual <= 1e-12 * max(scale, 1.0))

    @property
    def mass_matrix(self) -> np.ndarray:
        return np.diag(self.inertia)

    @property
    def damping_matrix(self) -> np.ndarray:
        return np.diag(self.damping)

    def stiffness(self, p: Sequence[float] | np.ndarray) -> Matrix:
        return scale_laplacian(self, p)

    def zero_mode(self, p: Sequence[float] | np.ndarray) -> np.ndarray | None:
        """Null vector of L(p), or None when the stiffness is nonsingular."""
        return null_vector(self.param_space, p) if self.has_zero_pole else None

    def pencil(self, s: complex, p: Sequence[float] | np.ndarray) -> Matrix:
        """K(s, p) = s^2 M + s D + L(p)."""
        diag = s * s * self.inertia + s * self.damping
        L = self.stiffness(p)
        if self.is_sparse:
            return (L + sp.diags(diag)).tocsc()
        K = L.astype(np.result_type(L, diag))
        K[np.diag_indices(self.n)] += diag
        return K


def _weighted_laplacian(n: int, edges: Sequence[Edge], weights: np.ndarray) -> Matrix:
    i = np.array([e[0] for e in edges], dtype=int)
    j = np.array([e[1] for e in edges], dtype=int)
    if n > DENSE_LIMIT:
        off = sp.coo_matrix((-weights, (i, j)), shape=(n, n))
        off = (off + off.T).tocsr()
        degree = -np.asarray(off.sum(axis=1)).ravel()
        return (off + sp.diags(degree)).tocsr()
    L = np.zeros((n, n))
    L[i, j] = -weights
    L[j, i] = -weights
    L[np.diag_indices(n)] = -L.sum(axis=1)
    return L


def build_laplacian(net: NetworkModel) -> Matrix:
    """Susceptance Laplacian: -b_ij off the diagonal, row sums of b on it."""
    components = net.components()
    if len(components) > 1:
        raise DisconnectedGraphError(components)
    weights = np.array([b for _, _, b in net.edges])
    return _weighted_laplacian(net.n, net.edges, weights)


def operating_point_laplacian(
    net: NetworkModel,
    angles: Sequence[float] | np.ndarray,
    voltages: Sequence[float] | np.ndarray | None = None,
) -> Matrix:
    """Laplacian of the line flows E_i E_j b_ij sin(d_i - d_j) linearized at angles d*.

    Edge weights become b_ij cos(d_i* - d_j*); voltages E scale it to diag(E) L diag(E).
    With zero angles this is scale_laplacian with one parameter per bus.
    """
    angles = as_float_vector(angles, "angles")
    if angles.shape != (net.n,):
        raise ModelError(f"angles must have length n={net.n}")
    components = net.components()
    if len(components) > 1:
        raise DisconnectedGraphError(components)
    i = np.array([e[0] for e in net.edges], dtype=int)
    j = np.array([e[1] for e in net.edges], dtype=int)
    cosines = np.cos(angles[i] - angles[j])
    if np.any(cosines <= 0):
        k = int(np.flatnonzero(cosines <= 0)[0])
        raise ModelError(
            f"edge {k} ({i[k]}-{j[k]}): angle difference reaches pi/2, linearized weight is not positive"
        )
    weights = np.array([b for _, _, b in net.edges]) * cosines
    L = _weighted_laplacian(net.n, net.edges, weights)
    if voltages is None:
        return L
    e = as_float_vector(voltages, "voltages")
    if e.shape != (net.n,) or not np.all(e > 0):
        raise ParameterError(f"voltages must be a positive vector of length n={net.n}")
    if sp.issparse(L):
        return (sp.diags(e) @ L @ sp.diags(e)).tocsr()
    return e[:, None] * L * e[None, :]


def scale_laplacian(model: SecondOrderModel, p: Sequence[float] | np.ndarray) -> Matrix:
    """L(p) = P L P with P the block expansion of p."""
    d = model.param_space.expand(p)
    L = model.base_laplacian
    if sp.issparse(L):
        P = sp.diags(d)
        return (P @ L @ P).tocsr()
    return d[:, None] * L * d[None, :]


def null_vector(param_space: ParameterSpace, p: Sequence[float] | np.ndarray) -> np.ndarray:
    """Closed-form zero eigenvector P^-1 1 of L(p) (not normalized)."""
    return 1.0 / param_space.expand(p)


def spectral_interval(model: SecondOrderModel, p: Sequence[float] | np.ndarray) -> tuple[float, float]:
    """Smallest nonzero and largest eigenvalue of L(p)."""
    L = model.stiffness(p)
    if sp.issparse(L):
        largest = eigsh(L, k=1, which="LA", return_eigenvectors=False)[0]
        smallest = np.sort(eigsh(L, k=2, sigma=-1.0, which="LM", return_eigenvectors=False))
    else:
        w = np.linalg.eigvalsh(L)
        largest, smallest = w[-1], w[:2]
    nonzero = smallest[1] if model.has_zero_pole else smallest[0]
    return max(float(nonzero), np.finfo(float).eps * float(largest)), float(largest)


def _io_maps(n: int, inputs: Sequence[int] | None, outputs: Sequence[int] | None) -> tuple[np.ndarray, np.ndarray]:
    """Selector maps; None inputs means B = I, None outputs means C = B^T."""
    B = np.eye(n) if inputs is None else unit_selector(inputs, n)
    C = B.T.copy() if outputs is None else unit_selector(outputs, n).T
    return B, C


def generate_network(
    kind: str,
    n: int,
    seed: int,
    ranges: CoefficientRanges | None = None,
    inputs: Sequence[int] | None = (0,),
    outputs: Sequence[int] | None = None,
) -> NetworkModel:
    """Connected synthetic network with uniformly drawn coefficients, deterministic in seed."""
    if kind not in GENERATOR_KINDS:
        raise ConfigError(f"unknown network kind {kind!r}; choose from {', '.join(GENERATOR_KINDS)}")
    if n < 2:
        raise ModelError(f"a network needs at least 2 buses, got n={n}")
    ranges = ranges or CoefficientRanges()
    rng = np.random.default_rng(seed)

    if kind == "path" or n == 2:
        pairs = [(k, k + 1) for k in range(n - 1)]
    elif kind == "ring":
        pairs = [(k, k + 1) for k in range(n - 1)] + [(0, n - 1)]
    else:
        pairs = _random_connected_pairs(n, ranges.extra_edge_density, rng)

    b = rng.uniform(*ranges.susceptance, size=len(pairs))
    inertia = rng.uniform(*ranges.inertia, size=n)
    damping = rng.uniform(*ranges.damping, size=n)
    B, C = _io_maps(n, inputs, outputs)
    edges = tuple((i, j, float(bij)) for (i, j), bij in zip(pairs, b))
    net = NetworkModel(n, edges, inertia, damping, B, C)
    logger.debug("generated %s network: n=%d, %d edges", kind, n, len(edges))
    return net


def _random_connected_pairs(n: int, density: float, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniform spanning tree (random Pruefer sequence) plus round(density * n) extra edges."""
    prufer = rng.integers(0, n, size=n - 2).tolist()
    tree = nx.from_prufer_sequence(prufer)
    pairs = {(min(i, j), max(i, j)) for i, j in tree.edges()}
    wanted = min(round(density * n), n * (n - 1) // 2 - len(pairs))
    target = len(pairs) + wanted
    while len(pairs) < target:
        i, j = rng.integers(0, n, size=2)
        if i != j:
            pairs.add((int(min(i, j)), int(max(i, j))))
    return sorted(pairs)


# MATPOWER case files

_CASE_FIELDS = frozenset({
    "version", "baseMVA", "bus", "gen", "branch", "gencost", "areas", "bus_name",
    "gentype", "genfuel", "dcline", "dclinecost", "bus_geo",
})
_ASSIGN = re.compile(r"^\s*mpc\.(\w+)\s*=\s*(.*)$")
_READ_TABLES = frozenset({"bus", "branch"})
_BRANCH_X = 3
_BRANCH_STATUS = 10


def _read_case_tables(text: str) -> dict[str, list[tuple[int, list[float]]]]:
    """Collect the bus and branch matrix literals as rows tagged with line numbers.

    Other tables (gen, gencost, ...) are only scanned for their closing bracket.
    """
    tables: dict[str, list[tuple[int, list[float]]]] = {}
    current: str | None = None
    skipping_cell = False
    start_line = 0

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].replace("...", " ")
        if skipping_cell:
            skipping_cell = "}" not in line
            continue
        if current is None:
            match = _ASSIGN.match(line)
            if not match:
                continue
            name, rest = match.groups()
            if name not in _CASE_FIELDS:
                logger.warning("line %d: ignoring unknown case field mpc.%s", line_no, name)
            rest = rest.strip()
            if rest.startswith("{"):
                skipping_cell = "}" not in rest
                continue
            if not rest.startswith("["):
                continue
            current, start_line = name, line_no
            if name in _READ_TABLES:
                tables[name] = []
            line = rest[1:]

        body, closed = line, False
        if "]" in line:
            body, closed = line.split("]", 1)[0], True
        if current not in _READ_TABLES:
            if closed:
                current = None
            continue
        for chunk in body.split(";"):
            tokens = chunk.replace(",", " ").split()
            if not tokens:
                continue
            try:
                row = [float(tok) for tok in tokens]
            except ValueError:
                bad = next(tok for tok in tokens if not _is_number(tok))
                raise CaseParseError(line_no, f"malformed number {bad!r} in mpc.{current}") from None
            rows = tables[current]
            if rows and len(row) != len(rows[0][1]):
                raise CaseParseError(line_no, f"mpc.{current} row has {len(row)} columns, expected {len(rows[0][1])}")
            rows.append((line_no, row))
        if closed:
            current = None

    if current is not None:
        raise CaseParseError(start_line, f"matrix literal mpc.{current} is never closed with ']'")
    return tables


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def parse_matpower_case(
    text: str,
    inertia: float = 1.0,
    damping: float = 1.0,
    overrides: Mapping[int, Mapping[str, float]] | None = None,
    inputs: Sequence[int] | None = (0,),
    outputs: Sequence[int] | None = None,
) -> NetworkModel:
    """Build a network from the bus and branch tables of a MATPOWER case.

    Buses become nodes in row order, in-service branches with x > 0 become edges with
    b = 1/x (parallel branches summed). ``overrides`` maps a MATPOWER bus number to
    {"inertia": ..., "damping": ...}.
    """
    tables = _read_case_tables(text)
    if "bus" not in tables:
        raise CaseParseError(0, "case has no mpc.bus table")
    bus_rows = tables["bus"]
    index = {}
    for line_no, row in bus_rows:
        bus_id = int(row[0])
        if bus_id in index:
            raise CaseParseError(line_no, f"bus {bus_id} listed twice")
        index[bus_id] = len(index)
    n = len(index)
    if n < 2:
        raise ModelError(f"case has {n} bus(es); a swing network needs at least 2 connected buses")

    susceptance: dict[tuple[int, int], float] = {}
    for line_no, row in tables.get("branch", []):
        if len(row) <= _BRANCH_X:
            raise CaseParseError(line_no, "branch row needs at least 4 columns (fbus tbus r x)")
        f, t = int(row[0]), int(row[1])
        for bus_id in (f, t):
            if bus_id not in index:
                raise CaseParseError(line_no, f"branch refers to unknown bus {bus_id}")
        if len(row) > _BRANCH_STATUS and row[_BRANCH_STATUS] == 0:
            logger.debug("line %d: skipping out-of-service branch %d-%d", line_no, f, t)
            continue
        x = row[_BRANCH_X]
        if x <= 0:
            logger.warning("line %d: skipping branch %d-%d with reactance x=%g <= 0", line_no, f, t, x)
            continue
        i, j = index[f], index[t]
        if i == j:
            logger.warning("line %d: skipping branch %d-%d that loops on one bus", line_no, f, t)
            continue
        key = (min(i, j), max(i, j))
        susceptance[key] = susceptance.get(key, 0.0) + 1.0 / x

    M = np.full(n, float(inertia))
    D = np.full(n, float(damping))
    for bus_id, values in (overrides or {}).items():
        if int(bus_id) not in index:
            raise ModelError(f"override for unknown bus {bus_id}")
        k = index[int(bus_id)]
        M[k] = values.get("inertia", M[k])
        D[k] = values.get("damping", D[k])

    B, C = _io_maps(n, inputs, outputs)
    edges = tuple((i, j, b) for (i, j), b in sorted(susceptance.items()))
    net = NetworkModel(n, edges, M, D, B, C)
    components = net.components()
    if len(components) > 1:
        raise DisconnectedGraphError(components)
    logger.info("parsed case: %d buses, %d lines", n, len(edges))
    return net


def format_matpower_case(net: NetworkModel, name: str = "case_swingmor") -> str:
    """Write the case subset read by parse_matpower_case (x = 1/b, buses numbered from 1)."""
    lines = [
        f"function mpc = {name}",
        "mpc.version = '2';",
        "mpc.baseMVA = 100;",
        "%% bus data",
        "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin",
        "mpc.bus = [",
    ]
    lines += [f"\t{k + 1}\t1\t0\t0\t0\t0\t1\t1\t0\t1\t1\t1.1\t0.9;" for k in range(net.n)]
    lines += [
        "];",
        "%% branch data",
        "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax",
        "mpc.branch = [",
    ]
    lines += [f"\t{i + 1}\t{j + 1}\t0\t{1.0 / b!r}\t0\t0\t0\t0\t0\t0\t1\t-360\t360;" for i, j, b in net.edges]
    lines.append("];")
    return "\n".join(lines) + "\n"


# JSON model files


def _map_to_json(matrix: np.ndarray, transpose: bool = False) -> Any:
    """Selector shorthand when possible; output maps are selections of rows."""
    indices = selector_indices(matrix.T if transpose else matrix)
    if indices is not None:
        return {"selector": indices}
    return matrix.tolist()


def _map_from_json(value: Any, n: int, path: str, transpose: bool) -> np.ndarray:
    if isinstance(value, dict):
        indices = value.get("selector")
        if not isinstance(indices, list) or not all(isinstance(i, int) for i in indices):
            raise SchemaError(f"{path}.selector", "expected a list of integer node indices")
        try:
            sel = unit_selector(indices, n)
        except IndexError as exc:
            raise SchemaError(f"{path}.selector", str(exc)) from None
        return sel.T if transpose else sel
    try:
        matrix = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(path, "expected a dense matrix or {\"selector\": [...]}") from None
    if matrix.ndim != 2:
        raise SchemaError(path, f"expected a 2-d matrix, got {matrix.ndim} dimensions")
    return matrix


def _required(data: Mapping, key: str, path: str) -> Any:
    if not isinstance(data, Mapping):
        raise SchemaError(path, "expected an object")
    if key not in data:
        raise SchemaError(f"{path}.{key}", "missing required field")
    return data[key]


def _number_list(value: Any, path: str, length: int | None = None) -> list[float]:
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise SchemaError(path, "expected a list of numbers")
    if length is not None and len(value) != length:
        raise SchemaError(path, f"expected {length} entries, got {len(value)}")
    return [float(v) for v in value]


def model_to_dict(model: SecondOrderModel) -> dict[str, Any]:
    """JSON-ready description of a network-backed model."""
    net = model.network
    if net is None:
        raise ModelError("only models built from a network can be serialized")
    return {
        "format": MODEL_FORMAT,
        "version": 1,
        "n": net.n,
        "edges": [[i, j, b] for i, j, b in net.edges],
        "inertia": net.inertia.tolist(),
        "damping": net.damping.tolist(),
        "input_map": _map_to_json(net.input_map),
        "output_map": _map_to_json(net.output_map, transpose=True),
        "param_blocks": list(model.param_space.block_sizes),
        "param_box": {
            "lower": model.param_space.lower.tolist(),
            "upper": model.param_space.upper.tolist(),
        },
    }


def model_from_dict(data: Mapping[str, Any], path: str = "$") -> SecondOrderModel:
    """Inverse of model_to_dict with schema checks reporting JSON paths."""
    fmt = data.get("format", MODEL_FORMAT) if isinstance(data, Mapping) else None
    if fmt != MODEL_FORMAT:
        raise SchemaError(f"{path}.format", f"expected {MODEL_FORMAT!r}, got {fmt!r}")
    n = _required(data, "n", path)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise SchemaError(f"{path}.n", "expected a positive integer")

    raw_edges = _required(data, "edges", path)
    if not isinstance(raw_edges, list):
        raise SchemaError(f"{path}.edges", "expected a list of [i, j, b] triples")
    edges = []
    for k, edge in enumerate(raw_edges):
        where = f"{path}.edges[{k}]"
        if not (isinstance(edge, list) and len(edge) == 3):
            raise SchemaError(where, "expected [i, j, b]")
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in edge[:2]):
            raise SchemaError(where, "node indices must be integers")
        edges.append((edge[0], edge[1], _number_list(edge[2:], where)[0]))

    inertia = _number_list(_required(data, "inertia", path), f"{path}.inertia", n)
    damping = _number_list(_required(data, "damping", path), f"{path}.damping", n)
    B = _map_from_json(_required(data, "input_map", path), n, f"{path}.input_map", transpose=False)
    C = _map_from_json(_required(data, "output_map", path), n, f"{path}.output_map", transpose=True)
    if B.shape[0] != n:
        raise SchemaError(f"{path}.input_map", f"expected {n} rows, got {B.shape[0]}")
    if C.shape[1] != n:
        raise SchemaError(f"{path}.output_map", f"expected {n} columns, got {C.shape[1]}")

    blocks = data.get("param_blocks", [n])
    if not isinstance(blocks, list) or not all(isinstance(b, int) and not isinstance(b, bool) and b > 0 for b in blocks) or not blocks:
        raise SchemaError(f"{path}.param_blocks", "expected a nonempty list of positive integers")
    if sum(blocks) != n:
        raise SchemaError(f"{path}.param_blocks", f"block sizes sum to {sum(blocks)}, expected n={n}")
    box = data.get("param_box")
    if box is None:
        lower = [1.0 - DEFAULT_ALPHA] * len(blocks)
        upper = [1.0 + DEFAULT_ALPHA] * len(blocks)
    else:
        lower = _number_list(_required(box, "lower", f"{path}.param_box"), f"{path}.param_box.lower", len(blocks))
        upper = _number_list(_required(box, "upper", f"{path}.param_box"), f"{path}.param_box.upper", len(blocks))

    net = NetworkModel(n, tuple(edges), np.array(inertia), np.array(damping), B, C)
    space = ParameterSpace(tuple(blocks), np.array(lower), np.array(upper))
    return SecondOrderModel.from_network(net, space)


def dumps_model(model: SecondOrderModel) -> str:
    return json.dumps(model_to_dict(model), indent=1) + "\n"


def save_model(model: SecondOrderModel, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model))


def load_model(path: str | Path) -> SecondOrderModel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return model_from_dict(data)


def model_digest(model: SecondOrderModel) -> str:
    """SHA-256 identifying the full-order model a ROM was built from."""
    if model.network is not None:
        canonical = json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()
    h = hashlib.sha256()
    L = model.base_laplacian.toarray() if model.is_sparse else model.base_laplacian
    for arr in (L, model.inertia, model.damping, model.input_map, model.output_map):
        h.update(np.ascontiguousarray(arr).tobytes())
    h.update(json.dumps(list(model.param_space.block_sizes)).encode())
    return h.hexdigest()
