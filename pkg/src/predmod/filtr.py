"""Filtrations of local models: jump graphs, compatibility, weights, gradings.

Index conventions: a flag ``0 = F_0 < F_1 < ... < F_l = ambient`` is stored
by its nonzero steps ``F_1, ..., F_l``; the zero step is implicit. For a
map ``f : A -> B`` and flags on both sides, ``k(j)`` is the least ``k`` with
``f(F_j A) in F_k B``. A jump point is ``(j, k(j))`` with ``k(j-1) < k(j)``;
``(0, 0)`` always counts as a jump.
"""
from __future__ import annotations

import math
from itertools import combinations
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .localmodel import LocalModel, _norm
from .matfun import DEFAULT_TOL, NumericalAmbiguityWarning, as_matrix

__all__ = [
    "Flag",
    "JumpGraph",
    "PolygonalWeights",
    "jump_graph",
    "compatible",
    "polygonal_weights",
    "brute_force_weights",
    "adapted_basis",
    "graded",
    "deform",
    "slope_special_check",
]


@dataclass(eq=False)
class Flag:
    """Increasing chain of subspaces given by column bases.

    ``decorations`` optionally attaches ``(rank, degree)`` slope data to each
    nonzero step.
    """

    ambient: int
    steps: list[np.ndarray]
    decorations: list[tuple[int, Fraction]] | None = None

    def __post_init__(self):
        steps = []
        for i, B in enumerate(self.steps):
            B = np.array(B, dtype=complex)
            if B.ndim == 1 and B.size == 0:
                B = B.reshape(self.ambient, 0)
            B = as_matrix(B, name=f"step {i}")
            if B.shape[0] != self.ambient:
                raise ValueError(f"step {i} has {B.shape[0]} rows, ambient dimension is {self.ambient}")
            steps.append(B)
        # an explicit zero step is the implicit F_0
        if steps and steps[0].shape[1] == 0:
            steps = steps[1:]
            if self.decorations:
                self.decorations = self.decorations[1:]
        self.steps = steps
        if self.decorations is not None:
            if len(self.decorations) != len(self.steps):
                raise ValueError("one (rank, degree) decoration per nonzero step is required")
            self.decorations = [(int(r), Fraction(d)) for r, d in self.decorations]
        self._check()

    def _check(self, tol: float = 1e-8):
        prev = np.zeros((self.ambient, 0), dtype=complex)
        prev_rank = 0
        for i, B in enumerate(self.steps):
            r = np.linalg.matrix_rank(B, tol=tol * max(1.0, _norm(B))) if B.size else 0
            if r != B.shape[1]:
                raise ValueError(f"columns of step {i + 1} are dependent")
            if prev.shape[1] and _residual(B, prev) > tol * max(1.0, _norm(prev)):
                raise ValueError(f"step {i} is not contained in step {i + 1}")
            if r <= prev_rank:
                raise ValueError(f"step {i + 1} does not enlarge step {i}")
            prev, prev_rank = B, r
        if self.ambient and (not self.steps or self.steps[-1].shape[1] != self.ambient):
            raise ValueError("the last step of a flag must be the ambient space")

    @property
    def length(self) -> int:
        return len(self.steps)

    def dims(self) -> list[int]:
        return [0] + [B.shape[1] for B in self.steps]

    def step(self, j: int) -> np.ndarray:
        return np.zeros((self.ambient, 0), dtype=complex) if j == 0 else self.steps[j - 1]

    @classmethod
    def standard(cls, dims: Sequence[int], ambient: int | None = None) -> "Flag":
        """Coordinate flag with steps spanned by the first ``d`` basis vectors."""
        n = dims[-1] if ambient is None else ambient
        eye = np.eye(n, dtype=complex)
        return cls(n, [eye[:, :d] for d in dims if d > 0])

    @classmethod
    def trivial(cls, n: int) -> "Flag":
        return cls(n, [np.eye(n, dtype=complex)] if n else [])


def _orth(B: np.ndarray) -> np.ndarray:
    if B.shape[1] == 0:
        return B
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    return U[:, s > 1e-12 * max(1.0, s[0])]


def _residual(sub: np.ndarray, X: np.ndarray) -> float:
    """Norm of the part of ``X`` outside the span of ``sub``."""
    if X.size == 0:
        return 0.0
    Q = _orth(sub)
    return _norm(X - Q @ (Q.conj().T @ X))


# ---------------------------------------------------------------------------
# jump graphs


@dataclass(frozen=True)
class JumpGraph:
    """Monotone map ``j -> k(j)`` for ``j = 0..len(points)-1`` into ``0..target``."""

    points: tuple[int, ...]
    target: int

    def __post_init__(self):
        pts = tuple(int(k) for k in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ValueError("a jump graph has at least the point j = 0")
        if any(b < a for a, b in zip(pts, pts[1:])):
            raise ValueError(f"jump graph is not monotone: {pts}")
        if pts[0] < 0 or pts[-1] > self.target:
            raise ValueError(f"values must lie in 0..{self.target}")

    @property
    def source(self) -> int:
        return len(self.points) - 1

    @property
    def jumps(self) -> list[tuple[int, int]]:
        out = [(0, self.points[0])]
        for j in range(1, len(self.points)):
            if self.points[j - 1] < self.points[j]:
                out.append((j, self.points[j]))
        return out


def jump_graph(f, flagA: Flag, flagB: Flag, tol: float = DEFAULT_TOL) -> JumpGraph:
    """``k(j)`` = least ``k`` with ``f(F_j A)`` inside ``F_k B``.

    Examples
    --------
    >>> E = Flag.standard([1, 2]); F = Flag.standard([0, 1])
    >>> jump_graph(np.array([[0, 1]]), E, F).points
    (0, 0, 1)
    """
    f = as_matrix(f, name="map")
    if f.shape != (flagB.ambient, flagA.ambient):
        raise ValueError(f"map has shape {f.shape}, flags need {(flagB.ambient, flagA.ambient)}")
    scale = max(1.0, _norm(f))
    ks = []
    for j in range(flagA.length + 1):
        X = f @ flagA.step(j)
        k = 0
        for k in range(flagB.length + 1):
            res = _residual(flagB.step(k), X) if k else _norm(X)
            if res <= tol * scale:
                break
            if res < 10 * tol * scale:
                warnings.warn(
                    f"containment of f(F_{j}) in F_{k} is ambiguous (residual {res:.3e})",
                    NumericalAmbiguityWarning,
                    stacklevel=2,
                )
        ks.append(k)
    return JumpGraph(tuple(ks), flagB.length)


def compatible(Gs: JumpGraph, Gt: JumpGraph) -> bool:
    """``G_s = {k <= k(j)}`` and ``G_t = {j <= j(k)}`` meet only at common jumps.

    ``Gs`` maps ``j -> k`` and ``Gt`` maps ``k -> j`` on the same grid.
    """
    if Gs.source != Gt.target or Gt.source != Gs.target:
        raise ValueError("the two jump graphs live on different grids")
    common = set(Gs.jumps) & {(j, k) for k, j in Gt.jumps}
    for j, kj in enumerate(Gs.points):
        for k in range(kj + 1):
            if j <= Gt.points[k] and (j, k) not in common:
                return False
    return True


@dataclass(frozen=True)
class PolygonalWeights:
    """Weights ``p`` on E-indices and ``q`` on F-indices with their line.

    ``vertices`` are the points ``(j, line(j))`` of the increasing polygonal
    line through the jumps of ``G_s``.
    """

    p: tuple[Fraction, ...]
    q: tuple[Fraction, ...]
    vertices: tuple[tuple[Fraction, Fraction], ...]

    def line(self, j: int) -> Fraction:
        return self.vertices[j][1]

    def integer_scaled(self) -> tuple[list[int], list[int]]:
        """``(p, q)`` multiplied by the least common denominator."""
        den = math.lcm(*(x.denominator for x in self.p + self.q))
        return [int(x * den) for x in self.p], [int(x * den) for x in self.q]


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


def polygonal_weights(Gs: JumpGraph, Gt: JumpGraph) -> PolygonalWeights | None:
    """Weights realizing the polygonal-line construction, or ``None``.

    The line is the lowest increasing polygonal line through every jump of
    ``Gs`` among those with integer-grid vertices: between consecutive jumps
    ``(J, k(J))`` and the next, it rises by ``1/(l_0 + 1)`` per step. Each
    jump of ``Gt`` must lie on or above it; otherwise no line exists and
    ``None`` is returned (this happens exactly when the graphs are not
    compatible). On success ``p(j) = line(j)`` and ``q(k) = k``, so that
    ``p(j) - q(k)`` vanishes on the line, is negative above and positive
    below. The sign table is verified on the whole grid before returning.

    Examples
    --------
    >>> w = polygonal_weights(JumpGraph((0, 1), 1), JumpGraph((0, 1), 1))
    >>> [str(x) for x in w.p], [str(x) for x in w.q]
    (['0', '1'], ['0', '1'])
    """
    if Gs.source != Gt.target or Gt.source != Gs.target:
        raise ValueError("the two jump graphs live on different grids")
    l0, l1 = Gs.source, Gs.target
    rise = Fraction(1, l0 + 1)
    line = []
    last_jump = 0
    for j in range(l0 + 1):
        if j == 0 or Gs.points[j - 1] < Gs.points[j]:
            last_jump = j
        line.append(Gs.points[last_jump] + rise * (j - last_jump))
    for k, j in Gt.jumps:
        if k < line[j]:
            return None
    p = tuple(line)
    q = tuple(Fraction(k) for k in range(l1 + 1))
    for j in range(l0 + 1):
        for k in range(l1 + 1):
            if _sign(p[j] - q[k]) != _sign(line[j] - k):
                raise AssertionError(f"sign contract violated at ({j}, {k})")
    if any(b <= a for a, b in zip(p, p[1:])) or any(b <= a for a, b in zip(q, q[1:])):
        raise AssertionError("weights are not increasing")
    return PolygonalWeights(p, q, tuple((Fraction(j), line[j]) for j in range(l0 + 1)))


def brute_force_weights(Gs: JumpGraph, Gt: JumpGraph):
    """Exhaustive search (small grids only) for integer weights making ``s`` and ``t`` filtered.

    Looks for strictly increasing ``p`` on ``0..l_0`` and ``q`` on ``0..l_1``
    with ``q(k(j)) <= p(j)`` for all ``j`` and ``p(j(k)) <= q(k)`` for all
    ``k``. These are difference constraints on ``l_0 + l_1 + 2`` unknowns, so
    whenever a solution exists one exists with values in
    ``0..l_0 + l_1 + 1``; the search covers that range completely.
    Returns one solution ``(p, q)`` or ``None``.
    """
    l0, l1 = Gs.source, Gs.target
    top = l0 + l1 + 2
    if math.comb(top, l0 + 1) * math.comb(top, l1 + 1) > 10**7:
        raise ValueError("grid too large for exhaustive search")
    P = np.array(list(combinations(range(top), l0 + 1)))
    Q = np.array(list(combinations(range(top), l1 + 1)))
    ks = np.array(Gs.points)
    js = np.array(Gt.points)
    # q(k(j)) <= p(j) for all j; p(j(k)) <= q(k) for all k
    ok = np.all(Q[None, :, ks] <= P[:, None, :], axis=2) & np.all(P[:, None, js] <= Q[None, :, :], axis=2)
    hits = np.argwhere(ok)
    if not hits.size:
        return None
    a, b = hits[0]
    return [int(x) for x in P[a]], [int(x) for x in Q[b]]


# ---------------------------------------------------------------------------
# gradings


def adapted_basis(flag: Flag, weights: Sequence) -> tuple[np.ndarray, np.ndarray]:
    """Basis adapted to ``flag`` and the weight of each basis vector.

    ``weights[i]`` is the weight of step ``i + 1``; the vectors added at a
    step carry its weight.
    """
    if len(weights) != flag.length:
        raise ValueError(f"{flag.length} weights needed, got {len(weights)}")
    cols, w = [], []
    prev = np.zeros((flag.ambient, 0), dtype=complex)
    for B, wt in zip(flag.steps, weights):
        Qp = _orth(prev)
        extra = B - Qp @ (Qp.conj().T @ B)
        new = _orth(extra)[:, : B.shape[1] - prev.shape[1]]
        cols.append(new)
        w.extend([wt] * new.shape[1])
        prev = B
    basis = np.hstack(cols) if cols else np.zeros((flag.ambient, 0), dtype=complex)
    return basis, np.array(w, dtype=object)


def _int_weights(pE, pF) -> tuple[np.ndarray, np.ndarray]:
    fr = [Fraction(x) for x in list(pE) + list(pF)]
    den = math.lcm(*(x.denominator for x in fr)) if fr else 1
    return (
        np.array([int(Fraction(x) * den) for x in pE], dtype=int),
        np.array([int(Fraction(x) * den) for x in pF], dtype=int),
    )


def _setup(model: LocalModel, flagE: Flag, flagF: Flag, weights):
    if flagE.ambient != model.n or flagF.ambient != model.m:
        raise ValueError("flag ambient dimensions do not match the model")
    if weights is None:
        weights = (list(range(1, flagE.length + 1)), list(range(1, flagF.length + 1)))
    pE, pF = weights
    BE, wE = adapted_basis(flagE, pE)
    BF, wF = adapted_basis(flagF, pF)
    wE, wF = _int_weights(wE, wF)
    iE = np.linalg.inv(BE) if model.n else BE
    iF = np.linalg.inv(BF) if model.m else BF
    maps = {
        "R": (iE @ model.R @ BE, wE, wE),
        "thetaF": (iF @ model.thetaF @ BF, wF, wF),
        "t": (iF @ model.t @ BE, wF, wE),
        "s": (iE @ model.s @ BF, wE, wF),
    }
    return BE, BF, iE, iF, maps


def _filtered_or_raise(maps, tol, scale):
    for name, (X, wt, ws) in maps.items():
        bad = (wt[:, None] > ws[None, :]) if X.size else np.zeros(X.shape, bool)
        if X.size and np.any(np.abs(X[bad]) > tol * scale):
            raise ValueError(f"{name} does not respect the filtrations")


def deform(model: LocalModel, flagE: Flag, flagF: Flag, tau: complex, weights=None, tol: float = DEFAULT_TOL):
    """Rescale the model along the weight grading by ``tau``.

    In the adapted basis an entry from weight ``a`` to weight ``b`` is
    multiplied by ``tau^(a - b)``; filtered maps only have ``a >= b``, so
    ``tau = 0`` keeps exactly the equal-weight blocks. ``weights`` is a pair
    (E-step weights, F-step weights), defaulting to the step indices; rational
    weights are scaled to integers.
    """
    BE, BF, iE, iF, maps = _setup(model, flagE, flagF, weights)
    scale = max(1.0, _norm(model.R), _norm(model.thetaF), _norm(model.s), _norm(model.t))
    _filtered_or_raise(maps, tol * max(1.0, np.linalg.cond(BE) if model.n else 1.0), scale)
    out = {}
    for name, (X, wt, ws) in maps.items():
        expo = ws[None, :] - wt[:, None]
        if tau == 0:
            factor = (expo == 0).astype(complex)
        else:
            factor = np.where(expo >= 0, complex(tau) ** np.maximum(expo, 0).astype(float), 0)
        out[name] = X * factor
    return LocalModel(
        BE @ out["R"] @ iE,
        BF @ out["thetaF"] @ iF,
        BF @ out["t"] @ iE,
        BE @ out["s"] @ iF,
    )


def graded(model: LocalModel, flagE: Flag, flagF: Flag, weights=None, tol: float = DEFAULT_TOL) -> LocalModel:
    """Associated graded model: the strictly weight-lowering blocks are dropped.

    Examples
    --------
    >>> m = LocalModel([[0, 1], [0, 0]], np.zeros((0, 0)), np.zeros((0, 2)), np.zeros((2, 0)))
    >>> g = graded(m, Flag.standard([1, 2]), Flag.trivial(0))
    >>> bool(np.all(g.R == 0))
    True
    """
    return deform(model, flagE, flagF, 0, weights, tol)


def slope_special_check(flag: Flag) -> bool:
    """True iff every step has the slope ``degree / rank`` of the ambient."""
    if flag.decorations is None:
        raise ValueError("slope check needs (rank, degree) decorations on every step")
    slopes = []
    for rank, deg in flag.decorations:
        if rank <= 0:
            raise ValueError("decorated steps must have positive rank")
        slopes.append(Fraction(deg) / rank)
    return all(x == slopes[-1] for x in slopes)
