"""Convex geometry on the probability simplex.

All hyperplanes use the gauge ``sum(alpha) == 0`` and ``||alpha|| == 1``.
On the simplex an affine functional ``alpha . x - beta`` is only determined up
to adding a constant ``c`` to every entry of ``alpha`` and to ``beta``; the
gauge fixes that freedom.

Hull computations enumerate faces exhaustively, which is exact and fast for
the handful of generators a finite signal produces.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from . import errors

PIVOT_TOL = 1e-9
INSIDE_TOL = 1e-9
MIN_MARGIN = 1e-9  # weakest separation an Outside certificate may claim
GAUGE_TOL = 1e-12
WEIGHT_TOL = 1e-12


def _as_points(points) -> np.ndarray:
    P = np.array([np.asarray(p, dtype=float) for p in points], dtype=float)
    if P.shape[0] == 0:
        raise errors.EmptyGenerators("need at least one generator")
    if P.ndim != 2:
        raise errors.DimensionMismatch("points must share one dimension")
    return P


def matrix_rank(M: np.ndarray, pivot_tol: float = PIVOT_TOL) -> int:
    """Rank by Gaussian elimination with partial pivoting."""
    A = np.array(M, dtype=float)
    rows, cols = A.shape
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        p = rank + int(np.argmax(np.abs(A[rank:, c])))
        if abs(A[p, c]) <= pivot_tol:
            continue
        A[[rank, p]] = A[[p, rank]]
        A[rank + 1:] -= np.outer(A[rank + 1:, c] / A[rank, c], A[rank])
        rank += 1
    return rank


def affinely_independent(points, pivot_tol: float = PIVOT_TOL) -> bool:
    """True iff the difference vectors ``points[i] - points[0]`` have full rank.

    More than ``n`` points of an ``(n-1)``-simplex are never independent, so
    that case returns False instead of raising.
    """
    P = _as_points(points) if not isinstance(points, np.ndarray) else np.asarray(points, dtype=float)
    if P.shape[0] == 0:
        raise errors.EmptyGenerators("affine independence of an empty point set is undefined")
    k, n = P.shape
    if k > n:
        return False
    if k == 1:
        return True
    return matrix_rank(P[1:] - P[0], pivot_tol) == k - 1


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """``{x : alpha . x = beta}`` in the gauge ``sum(alpha) = 0, ||alpha|| = 1``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = np.array(self.normal, dtype=float)
        if abs(a.sum()) > GAUGE_TOL or abs(np.linalg.norm(a) - 1.0) > GAUGE_TOL:
            raise errors.ModelError(
                "hyperplane normal violates the gauge sum(alpha)=0, ||alpha||=1; use Hyperplane.from_affine"
            )
        a.setflags(write=False)
        object.__setattr__(self, "normal", a)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_affine(cls, alpha, beta: float) -> "Hyperplane":
        """Re-gauge an arbitrary affine functional ``alpha . x - beta`` on the simplex."""
        a = np.asarray(alpha, dtype=float)
        c = a.mean()
        a = a - c
        b = float(beta) - c
        norm = np.linalg.norm(a)
        if norm <= GAUGE_TOL:
            raise errors.ModelError("affine functional is constant on the simplex")
        a = a / norm
        # second pass removes the residual sum left by the division
        a = a - a.mean()
        return cls(a, b / norm)

    @property
    def alpha(self) -> np.ndarray:
        return self.normal

    @property
    def beta(self) -> float:
        return self.offset

    def value(self, x) -> float | np.ndarray:
        """Signed value ``alpha . x - beta`` (vectorised over rows)."""
        return np.asarray(x, dtype=float) @ self.normal - self.offset

    def to_dict(self) -> dict:
        return {"alpha": self.normal.tolist(), "beta": self.offset}


@dataclass(frozen=True, eq=False)
class HullCertificate:
    verdict: str  # "inside" | "outside"
    weights: Optional[np.ndarray] = None
    separator: Optional[Hyperplane] = None
    margin: Optional[float] = None
    distance: float = 0.0
    nearest: Optional[np.ndarray] = None

    @property
    def inside(self) -> bool:
        return self.verdict == "inside"

    @property
    def outside(self) -> bool:
        return self.verdict == "outside"

    def to_dict(self) -> dict:
        if self.inside:
            return {"verdict": "inside", "weights": self.weights.tolist(), "distance": self.distance}
        return {
            "verdict": "outside",
            "alpha": self.separator.normal.tolist(),
            "beta": self.separator.offset,
            "margin": self.margin,
            "distance": self.distance,
        }


def project_to_hull(query, generators) -> tuple[np.ndarray, float, np.ndarray]:
    """Euclidean projection of ``query`` onto ``conv(generators)``.

    Every nonempty subset of affinely independent generators is tried: the
    projection onto its affine hull is computed by least squares, kept when
    the affine weights are (numerically) nonnegative, and the closest feasible
    candidate wins.

    Returns
    -------
    nearest : ndarray, shape (n,)
    distance : float
    weights : ndarray, shape (k,)
        Convex weights over *all* generators, zero off the optimal face.
    """
    G = _as_points(generators)
    q = np.asarray(query, dtype=float)
    if q.shape != G.shape[1:]:
        raise errors.DimensionMismatch(f"query has shape {q.shape}, generators {G.shape}")

    k = G.shape[0]
    best_d = np.inf
    best_w = None
    for size in range(1, k + 1):
        for idx in combinations(range(k), size):
            face = G[list(idx)]
            base = face[0]
            if size == 1:
                c = np.zeros(0)
            else:
                D = (face[1:] - base).T
                c, _, rank, _ = np.linalg.lstsq(D, q - base, rcond=None)
                if rank < size - 1:
                    continue
            w_face = np.concatenate(([1.0 - c.sum()], c))
            if np.any(w_face < -WEIGHT_TOL):
                continue
            point = w_face @ face
            d = float(np.linalg.norm(q - point))
            if d < best_d:
                best_d = d
                best_w = np.zeros(k)
                best_w[list(idx)] = w_face
    w = np.clip(best_w, 0.0, None)
    w /= w.sum()
    nearest = w @ G
    return nearest, float(np.linalg.norm(q - nearest)), w


def hull_membership(query, generators) -> HullCertificate:
    """Decide ``query in conv(generators)`` and return a certificate.

    Inside certificates carry convex weights; Outside certificates carry a
    gauged separating hyperplane placed at the midpoint between the query and
    its projection. The reported margin is the smaller of the two realised
    slacks, which equals half the distance up to round-off; this way both
    certificate inequalities hold exactly as stated. Points too close to
    separate with margin ``MIN_MARGIN`` count as boundary points and resolve
    Inside.
    """
    q = np.asarray(query, dtype=float)
    G = _as_points(generators)
    nearest, dist, w = project_to_hull(q, G)
    if dist <= INSIDE_TOL:
        return HullCertificate("inside", weights=w, distance=dist, nearest=nearest)
    alpha = q - nearest
    beta = alpha @ (q + nearest) / 2.0
    sep = Hyperplane.from_affine(alpha, beta)
    margin = min(float(sep.value(q)), float(-np.max(sep.value(G))))
    if margin < MIN_MARGIN:
        return HullCertificate("inside", weights=w, distance=dist, nearest=nearest)
    return HullCertificate("outside", separator=sep, margin=margin, distance=dist, nearest=nearest)


def exposing_hyperplane(generators, index: int) -> Hyperplane:
    """Supporting hyperplane touching ``conv(generators)`` only at ``generators[index]``.

    Solves ``alpha . x_i - beta = 0``, ``alpha . x_j - beta = -1`` for
    ``j != i`` and ``sum(alpha) = 0`` (minimum-norm solution), then re-gauges.
    """
    G = _as_points(generators)
    k, n = G.shape
    if k == 0:
        raise errors.EmptyGenerators("no generators")
    if not 0 <= index < k:
        raise IndexError(f"generator index {index} out of range 0..{k - 1}")
    if not affinely_independent(G):
        raise errors.AffineDependence("exposing hyperplanes need affinely independent generators")
    if k == 1:
        alpha = np.zeros(n)
        alpha[0], alpha[1] = 1.0, -1.0
        return Hyperplane.from_affine(alpha, alpha @ G[0])
    # unknowns: alpha (n entries) then beta
    A = np.zeros((k + 1, n + 1))
    A[:k, :n] = G
    A[:k, n] = -1.0
    A[k, :n] = 1.0
    rhs = np.full(k + 1, -1.0)
    rhs[index] = 0.0
    rhs[k] = 0.0
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    if np.max(np.abs(A @ sol - rhs)) > 1e-8:
        raise errors.AffineDependence("exposing hyperplane system is inconsistent")
    return Hyperplane.from_affine(sol[:n], sol[n])
