"""Soft indicator matrices, the cyclic heat-map transformation, and the
surrogate loss with its analytic gradient.

The central object is a column-stochastic matrix ``t`` whose column k is a
probability distribution over which city occupies position k of the cycle.
The heat map ``h = t @ shift @ t.T`` (shift = the cyclic permutation operator)
scores each directed edge by the probability that consecutive positions are
occupied by its endpoints. When ``t`` is an exact permutation matrix, ``h``
is the adjacency matrix of a single Hamiltonian cycle; the verification
helpers at the bottom make that statement executable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HEATMAP_HEADER = "UTSP-HEATMAP v1"

# agreement required between the two algebraic forms of the loss
_FORM_TOL = 1e-12


class NumericError(RuntimeError):
    """A numeric computation produced NaN/inf instead of failing silently."""


def column_softmax(logits: np.ndarray) -> np.ndarray:
    """Column-wise softmax with per-column max subtraction for stability.

    Every output entry is strictly positive and every column sums to 1.
    """
    s = np.asarray(logits, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"logits must be square, got shape {s.shape}")
    if not np.isfinite(s).all():
        raise ValueError("logits must be finite")
    z = s - s.max(axis=0, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=0, keepdims=True)


def shift_matrix(n: int) -> np.ndarray:
    """The n x n cyclic shift operator: ones on the superdiagonal and corner."""
    v = np.zeros((n, n))
    v[np.arange(n), (np.arange(n) + 1) % n] = 1.0
    return v


def indicator_to_heatmap(t: np.ndarray) -> np.ndarray:
    """Map a soft indicator matrix to its heat map.

    h[i, j] = sum_k t[i, k] * t[j, (k+1) mod n]: the probability that city i
    sits at some position whose cyclic successor position holds city j.
    Equivalent to the sum of outer products of cyclically adjacent columns,
    and to t @ shift_matrix(n) @ t.T.
    """
    t = np.asarray(t, dtype=np.float64)
    return t @ np.roll(t, -1, axis=1).T


@dataclass(frozen=True)
class LossBreakdown:
    """The three surrogate-loss components plus their weighted total.

    row_penalty and self_loop are stored unweighted; total applies the
    lambda weights: total = lambda1 * row_penalty + lambda2 * self_loop
    + expected_length.
    """

    row_penalty: float
    self_loop: float
    expected_length: float
    total: float


def surrogate_loss(
    t: np.ndarray,
    h: np.ndarray,
    d: np.ndarray,
    lambda1: float,
    lambda2: float,
) -> LossBreakdown:
    """Evaluate the surrogate objective and return its component breakdown.

    The objective combines a row-stochasticity penalty sum_i (row_sum_i - 1)^2
    (columns are already normalized, so driving rows to 1 makes t doubly
    stochastic), a self-loop penalty trace(h), and the expected cycle length
    <d, h>. The same value is recomputed in the compact form
    lambda1 * row_penalty + <d + lambda2*I, h> and the two must agree to
    within 1e-12; a mismatch means a transcription bug in one of the forms.
    """
    t = np.asarray(t, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    n = t.shape[0]
    if h.shape != (n, n) or d.shape != (n, n):
        raise ValueError(
            f"dimension mismatch: t {t.shape}, h {h.shape}, d {d.shape}"
        )
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("lambda1 and lambda2 must be >= 0")
    row_penalty = float(((t.sum(axis=1) - 1.0) ** 2).sum())
    self_loop = float(np.trace(h))
    expected_length = float((d * h).sum())
    total = lambda1 * row_penalty + lambda2 * self_loop + expected_length
    compact = lambda1 * row_penalty + float(
        ((d + lambda2 * np.eye(n)) * h).sum()
    )
    if abs(total - compact) > _FORM_TOL * max(1.0, abs(total)):
        raise NumericError(
            f"loss forms disagree: {total!r} vs {compact!r}"
        )
    return LossBreakdown(
        row_penalty=row_penalty,
        self_loop=self_loop,
        expected_length=expected_length,
        total=total,
    )


def loss_total(logits: np.ndarray, d: np.ndarray, lambda1: float, lambda2: float) -> float:
    """Total surrogate loss as a function of raw logits (finite-difference
    oracle target; shares no code path with loss_gradient's chain rule)."""
    t = column_softmax(logits)
    h = indicator_to_heatmap(t)
    n = t.shape[0]
    row_penalty = ((t.sum(axis=1) - 1.0) ** 2).sum()
    return float(lambda1 * row_penalty + ((d + lambda2 * np.eye(n)) * h).sum())


def loss_gradient(
    logits: np.ndarray, d: np.ndarray, lambda1: float, lambda2: float
) -> np.ndarray:
    """Exact gradient of total surrogate loss with respect to each logit.

    Chain: (a) for the bilinear term, d<A, t V t.T>/dt = A t V.T + A.T t V
    with A = d + lambda2*I and V the cyclic shift (column rolls implement the
    V products); (b) the row penalty contributes 2*lambda1*(row_sum - 1)
    broadcast over each row; (c) the column-wise softmax Jacobian maps the
    t-gradient back to logit space.
    """
    s = np.asarray(logits, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    n = s.shape[0]
    if d.shape != (n, n):
        raise ValueError(f"dimension mismatch: logits {s.shape}, d {d.shape}")
    t = column_softmax(s)
    a = d + lambda2 * np.eye(n)
    # t @ V.T rolls columns left; t @ V rolls columns right
    g_t = a @ np.roll(t, -1, axis=1) + a.T @ np.roll(t, 1, axis=1)
    g_t += 2.0 * lambda1 * (t.sum(axis=1) - 1.0)[:, None]
    # softmax backward, one column at a time (vectorized across columns)
    dots = (g_t * t).sum(axis=0)
    grad = t * (g_t - dots[None, :])
    if not np.isfinite(grad).all():
        raise NumericError("gradient evaluation produced non-finite values")
    return grad


# ---------------------------------------------------------------------------
# Exact-permutation verification
# ---------------------------------------------------------------------------

def is_permutation_matrix(t: np.ndarray, tol: float = 1e-9) -> bool:
    """True when t is within tol of a 0/1 matrix with one 1 per row/column."""
    t = np.asarray(t, dtype=np.float64)
    n = t.shape[0]
    near_one = np.abs(t - 1.0) <= tol
    near_zero = np.abs(t) <= tol
    if not np.all(near_one | near_zero):
        return False
    ones = near_one.astype(np.int64)
    return bool((ones.sum(axis=0) == 1).all() and (ones.sum(axis=1) == 1).all())


def permutation_to_cycle(t: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Extract the city visiting order encoded by a permutation matrix.

    Entry k of the result is the city occupying cycle position k (the row
    index of the unit entry in column k). The heat map of t contains exactly
    the directed edges result[k] -> result[k+1] (cyclically).
    """
    t = np.asarray(t, dtype=np.float64)
    if not is_permutation_matrix(t, tol=tol):
        raise ValueError("matrix is not a permutation matrix within tolerance")
    return np.argmax(t, axis=0)


def verify_hamiltonian_heatmap(h: np.ndarray, tol: float = 1e-9):
    """Check whether a heat map is exactly one Hamiltonian cycle.

    Returns (True, cycle) when every row and column holds exactly one unit
    entry, the diagonal is zero, and following successors from city 0 returns
    to city 0 after exactly n steps; (False, None) otherwise. The returned
    cycle lists cities in visiting order starting from city 0.
    """
    h = np.asarray(h, dtype=np.float64)
    n = h.shape[0]
    if h.shape != (n, n):
        return False, None
    near_one = np.abs(h - 1.0) <= tol
    near_zero = np.abs(h) <= tol
    if not np.all(near_one | near_zero):
        return False, None
    if not np.all(near_zero[np.arange(n), np.arange(n)]):
        return False, None
    ones = near_one.astype(np.int64)
    if not ((ones.sum(axis=1) == 1).all() and (ones.sum(axis=0) == 1).all()):
        return False, None
    succ = np.argmax(ones, axis=1)
    cycle = np.empty(n, dtype=np.int64)
    city = 0
    for k in range(n):
        cycle[k] = city
        city = int(succ[city])
        if city == 0 and k != n - 1:
            return False, None  # premature return: disjoint sub-cycles
    if city != 0:
        return False, None
    return True, cycle


# ---------------------------------------------------------------------------
# Heat-map file format
# ---------------------------------------------------------------------------

def format_heatmap(h: np.ndarray) -> str:
    h = np.asarray(h, dtype=np.float64)
    n = h.shape[0]
    rows = [HEATMAP_HEADER, str(n)]
    for i in range(n):
        rows.append(" ".join(repr(float(v)) for v in h[i]))
    return "\n".join(rows) + "\n"


def parse_heatmap(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != HEATMAP_HEADER:
        raise ValueError(f"not a {HEATMAP_HEADER} document")
    n = int(lines[1])
    if len(lines) != 2 + n:
        raise ValueError(f"expected {n} matrix rows, found {len(lines) - 2}")
    h = np.array([[float(v) for v in ln.split()] for ln in lines[2:]])
    if h.shape != (n, n):
        raise ValueError(f"expected an {n}x{n} matrix, got {h.shape}")
    return h
