"""Euclidean TSP instances: generation, parsing, distances, tour length."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

DEFAULT_TAU = 0.1

INSTANCE_HEADER = "UTSP-INSTANCE v1"


class TsplibParseError(ValueError):
    """Raised when a TSPLIB document cannot be parsed; message names the line."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Instance:
    """A set of city coordinates on the plane.

    Generated instances live on the unit square; parsed instances keep their
    coordinates as written. Immutable and safe to share across workers.
    """

    coords: np.ndarray
    name: Optional[str] = None

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValueError(f"coords must have shape (n, 2), got {coords.shape}")
        if coords.shape[0] < 3:
            raise ValueError(f"an instance needs at least 3 cities, got {coords.shape[0]}")
        if not np.isfinite(coords).all():
            raise ValueError("coords must be finite")
        object.__setattr__(self, "coords", _readonly(coords))

    @property
    def n(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True)
class Tour:
    """A cyclic visiting order plus its inverse (city -> index) lookup."""

    order: np.ndarray
    position: np.ndarray = field(repr=False)

    @classmethod
    def from_order(cls, order) -> "Tour":
        order = np.asarray(order, dtype=np.int64)
        n = order.shape[0]
        if order.ndim != 1 or n < 3:
            raise ValueError("tour order must be a 1-d sequence of at least 3 cities")
        position = np.empty(n, dtype=np.int64)
        if np.any(np.sort(order) != np.arange(n)):
            raise ValueError("tour order must be a permutation of 0..n-1")
        position[order] = np.arange(n)
        order = order.copy()
        order.setflags(write=False)
        position.setflags(write=False)
        return cls(order=order, position=position)

    @property
    def n(self) -> int:
        return self.order.shape[0]


def generate_random(n: int, seed: int) -> Instance:
    """Draw n cities i.i.d. uniform on the unit square.

    Uses numpy's PCG64 generator so identical (n, seed) pairs reproduce
    bit-identically across platforms.
    """
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    rng = np.random.default_rng(seed)
    coords = rng.random((n, 2))
    return Instance(coords=coords, name=f"random-n{n}-s{seed}")


def distance_matrix(inst: Instance, tsplib_rounding: bool = False) -> np.ndarray:
    """Full symmetric Euclidean distance matrix.

    With tsplib_rounding, entries are rounded to the nearest integer for
    comparability with published TSPLIB tour values; evaluation elsewhere in
    this package always uses exact distances.
    """
    c = inst.coords
    diff = c[:, None, :] - c[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=2))
    # enforce exact symmetry and zero diagonal regardless of float noise
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    if tsplib_rounding:
        d = np.rint(d)
    return d


def adjacency_weights(d: np.ndarray, tau: float = DEFAULT_TAU) -> np.ndarray:
    """Gaussian-free edge weights exp(-d/tau); tau is the temperature."""
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    return np.exp(-np.asarray(d, dtype=np.float64) / tau)


def tour_length(d: np.ndarray, tour: Tour) -> float:
    """Total cycle length of the tour under distance matrix d."""
    order = tour.order
    if order.shape[0] != d.shape[0]:
        raise ValueError(f"tour has {order.shape[0]} cities, matrix has {d.shape[0]}")
    return float(d[order, np.roll(order, -1)].sum())


def order_length(d: np.ndarray, order: np.ndarray) -> float:
    """tour_length for a raw order array (used by the search internals)."""
    return float(d[order, np.roll(order, -1)].sum())


# ---------------------------------------------------------------------------
# TSPLIB (EUC_2D subset)
# ---------------------------------------------------------------------------

def parse_tsplib(text: str) -> Instance:
    """Parse the EUC_2D subset of TSPLIB (NODE_COORD_SECTION documents).

    Coordinates are taken as written; 1-based city indices in the file map to
    0-based cities. Unsupported weight types and dimension mismatches raise
    TsplibParseError naming the offending line.
    """
    dimension: Optional[int] = None
    weight_type: Optional[str] = None
    name: Optional[str] = None
    lines = text.splitlines()
    i = 0
    coord_rows: list[tuple[int, float, float]] = []
    in_coords = False
    for i, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if in_coords:
            if line == "EOF":
                in_coords = False
                continue
            parts = line.split()
            if len(parts) != 3:
                raise TsplibParseError(f"line {i}: expected 'index x y', got {raw!r}")
            try:
                idx = int(parts[0])
                x, y = float(parts[1]), float(parts[2])
            except ValueError:
                raise TsplibParseError(f"line {i}: malformed coordinate row {raw!r}") from None
            coord_rows.append((idx, x, y))
            continue
        key, _, value = line.partition(":")
        key = key.strip().upper()
        value = value.strip()
        if key == "NAME":
            name = value or None
        elif key == "DIMENSION":
            try:
                dimension = int(value)
            except ValueError:
                raise TsplibParseError(f"line {i}: DIMENSION is not an integer: {raw!r}") from None
        elif key == "EDGE_WEIGHT_TYPE":
            weight_type = value.upper()
            if weight_type != "EUC_2D":
                raise TsplibParseError(
                    f"line {i}: unsupported EDGE_WEIGHT_TYPE {value!r} (only EUC_2D)"
                )
        elif key == "NODE_COORD_SECTION":
            in_coords = True
    if dimension is None:
        raise TsplibParseError("missing DIMENSION header")
    if weight_type is None:
        raise TsplibParseError("missing EDGE_WEIGHT_TYPE header")
    if not coord_rows:
        raise TsplibParseError("missing NODE_COORD_SECTION")
    if len(coord_rows) != dimension:
        raise TsplibParseError(
            f"DIMENSION is {dimension} but NODE_COORD_SECTION has {len(coord_rows)} rows"
        )
    coords = np.zeros((dimension, 2), dtype=np.float64)
    seen = np.zeros(dimension, dtype=bool)
    for idx, x, y in coord_rows:
        if not 1 <= idx <= dimension:
            raise TsplibParseError(f"city index {idx} outside 1..{dimension}")
        coords[idx - 1] = (x, y)
        seen[idx - 1] = True
    if not seen.all():
        missing = int(np.flatnonzero(~seen)[0]) + 1
        raise TsplibParseError(f"no coordinate row for city {missing}")
    return Instance(coords=coords, name=name)


# ---------------------------------------------------------------------------
# Native instance format
# ---------------------------------------------------------------------------

def format_instance(inst: Instance) -> str:
    """Serialize to the versioned native text format (round-trips bit-exactly)."""
    rows = [INSTANCE_HEADER, str(inst.n)]
    for x, y in inst.coords:
        rows.append(f"{float(x)!r} {float(y)!r}")
    return "\n".join(rows) + "\n"


def parse_instance(text: str) -> Instance:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != INSTANCE_HEADER:
        raise ValueError(f"not a {INSTANCE_HEADER} document")
    n = int(lines[1])
    if len(lines) != 2 + n:
        raise ValueError(f"expected {n} coordinate rows, found {len(lines) - 2}")
    coords = np.array([[float(v) for v in ln.split()] for ln in lines[2:]])
    return Instance(coords=coords)


def read_instance_file(path: str) -> Instance:
    """Load an instance from disk, sniffing native vs TSPLIB format."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    first = text.lstrip().splitlines()[0].strip() if text.strip() else ""
    if first == INSTANCE_HEADER:
        return parse_instance(text)
    return parse_tsplib(text)
