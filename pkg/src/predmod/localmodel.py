"""Fiber-level pre-D-modules and their reduced modules.

A :class:`LocalModel` is the datum ``(R, thetaF, t, s)`` over one point of
one component of the divisor: ``t : E|S -> F`` and ``s : F -> E|S`` with
``s t = R`` (the residue) and ``t s = thetaF``. Maps follow the first-kind
directions throughout.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .fields import NumericField
from .intertwine import find_invertible, intertwiner_basis
from .matfun import DEFAULT_TOL, NumericalAmbiguityWarning, as_matrix

__all__ = [
    "LocalModel",
    "ValidationReport",
    "ReducedModule",
    "NotDecomposableError",
    "validate",
    "canonical_from_residue",
    "reduce",
    "factor",
    "isomorphic",
    "conjugate",
    "rescale",
    "direct_sum",
]


@dataclass(eq=False)
class LocalModel:
    R: np.ndarray
    thetaF: np.ndarray
    t: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        self.R = as_matrix(self.R, square=True, name="R")
        self.thetaF = as_matrix(self.thetaF, square=True, name="thetaF")
        n, m = self.R.shape[0], self.thetaF.shape[0]
        self.t = _shaped(self.t, (m, n), "t")
        self.s = _shaped(self.s, (n, m), "s")

    @property
    def n(self) -> int:
        return self.R.shape[0]

    @property
    def m(self) -> int:
        return self.thetaF.shape[0]

    def copy(self) -> "LocalModel":
        return LocalModel(self.R.copy(), self.thetaF.copy(), self.t.copy(), self.s.copy())

    def allclose(self, other: "LocalModel", atol: float) -> bool:
        if (self.n, self.m) != (other.n, other.m):
            return False
        return all(
            np.allclose(a, b, rtol=0, atol=atol)
            for a, b in zip(
                (self.R, self.thetaF, self.t, self.s), (other.R, other.thetaF, other.t, other.s)
            )
        )


def _shaped(x, shape, name):
    a = np.array(x, dtype=complex)
    if a.size == 0:
        a = a.reshape(shape)
    a = as_matrix(a, name=name)
    if a.shape != shape:
        raise ValueError(f"{name} has shape {a.shape}, expected {shape}")
    return a


def _norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a)) if a.size else 0.0


def _scale(model: LocalModel) -> float:
    return max(1.0, _norm(model.s) * _norm(model.t), _norm(model.R), _norm(model.thetaF))


@dataclass
class ValidationReport:
    ok: bool
    residuals: dict[str, float]
    tol: float

    def __bool__(self):
        return self.ok


def validate(model: LocalModel, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check ``s t = R`` and ``t s = thetaF`` and the derived intertwinings."""
    res = {
        "st-R": _norm(model.s @ model.t - model.R),
        "ts-thetaF": _norm(model.t @ model.s - model.thetaF),
        "tR-thetaFt": _norm(model.t @ model.R - model.thetaF @ model.t),
        "sthetaF-Rs": _norm(model.s @ model.thetaF - model.R @ model.s),
    }
    bound = tol * _scale(model)
    ok = res["st-R"] <= bound and res["ts-thetaF"] <= bound
    return ValidationReport(ok, res, bound)


def canonical_from_residue(R, kind: str, tol: float = DEFAULT_TOL) -> LocalModel:
    """The three functorial models attached to a residue.

    ``meromorphic``: F = E|S, t = R, s = id. ``torsion``: F = E|S, t = id,
    s = R. ``minimal``: F = image of R, t = R corestricted, s = inclusion.
    """
    R = as_matrix(R, square=True, name="R")
    n = R.shape[0]
    eye = np.eye(n, dtype=complex)
    if kind == "meromorphic":
        return LocalModel(R, R.copy(), R.copy(), eye)
    if kind == "torsion":
        return LocalModel(R, R.copy(), eye, R.copy())
    if kind != "minimal":
        raise ValueError(f"unknown canonical kind {kind!r}")
    if n == 0:
        return LocalModel(R, np.zeros((0, 0)), np.zeros((0, 0)), np.zeros((0, 0)))
    U, sv, _ = np.linalg.svd(R)
    thresh = tol * max(1.0, sv[0])
    if np.any((sv > thresh) & (sv < 10 * thresh)):
        warnings.warn(
            "rank of the residue is ambiguous at this tolerance", NumericalAmbiguityWarning, stacklevel=2
        )
    r = int(np.sum(sv > thresh))
    B = U[:, :r]
    # fix the phase of each basis column: largest entry real positive
    for j in range(r):
        k = int(np.argmax(np.abs(B[:, j])))
        B[:, j] *= np.conj(B[k, j]) / abs(B[k, j])
    t = B.conj().T @ R
    return LocalModel(R, t @ B, t, B)


# ---------------------------------------------------------------------------
# reduced modules


def _mu0(u: np.ndarray, n: int, m: int) -> np.ndarray:
    # u[(i,k),(l,j)] = s[i,k] t[l,j];  (st)[i,j] = sum_k u[(i,k),(k,j)]
    return np.einsum("ikkj->ij", u.reshape(n, m, m, n))


def _mu1(u: np.ndarray, n: int, m: int) -> np.ndarray:
    # (ts)[l,k] = sum_j t[l,j] s[j,k] = sum_j u[(j,k),(l,j)]
    return np.einsum("jklj->lk", u.reshape(n, m, m, n))


def max_minor(u: np.ndarray) -> float:
    """Largest absolute 2x2 minor of ``u`` (zero iff rank < 2)."""
    if u.shape[0] < 2 or u.shape[1] < 2:
        return 0.0
    minors = u[:, None, :, None] * u[None, :, None, :] - u[:, None, None, :] * u[None, :, :, None]
    return float(np.max(np.abs(minors)))


@dataclass(eq=False)
class ReducedModule:
    R: np.ndarray
    thetaF: np.ndarray
    u: np.ndarray
    certificate: float = field(default=0.0)

    @property
    def n(self) -> int:
        return self.R.shape[0]

    @property
    def m(self) -> int:
        return self.thetaF.shape[0]

    def mu0(self) -> np.ndarray:
        return _mu0(self.u, self.n, self.m)

    def mu1(self) -> np.ndarray:
        return _mu1(self.u, self.n, self.m)


class NotDecomposableError(ValueError):
    """The tensor has a nonvanishing 2x2 minor."""


def reduce(model: LocalModel) -> ReducedModule:
    """The reduced module ``(R, thetaF, vec(s) vec(t)^T)``."""
    u = np.outer(model.s.reshape(-1), model.t.reshape(-1))
    return ReducedModule(model.R.copy(), model.thetaF.copy(), u, max_minor(u))


def factor(red: ReducedModule, tol: float = DEFAULT_TOL):
    """Recover ``(s, t)`` from ``u`` up to ``(lambda s, t / lambda)``.

    Returns ``None`` when ``u = 0`` (factors are not recoverable). The gauge
    is fixed by making the first non-negligible entry of ``vec(t)`` equal 1.
    """
    u = np.asarray(red.u, dtype=complex)
    n, m = red.n, red.m
    unorm = _norm(u)
    if unorm <= tol:
        return None
    if max_minor(u) > tol * max(1.0, unorm) ** 2:
        raise NotDecomposableError(f"u has a 2x2 minor of size {max_minor(u):.3e}")
    U, sv, Vh = np.linalg.svd(u)
    vs = sv[0] * U[:, 0]
    vt = Vh[0].copy()
    k = int(np.flatnonzero(np.abs(vt) > tol * np.max(np.abs(vt)))[0])
    lam = vt[k]
    vt = vt / lam
    vs = vs * lam
    return vs.reshape(n, m), vt.reshape(m, n)


# ---------------------------------------------------------------------------
# morphisms


def conjugate(model: LocalModel, gE, gF) -> LocalModel:
    """Transport ``model`` along the isomorphism ``(gE, gF)``."""
    gE = as_matrix(gE, square=True)
    gF = as_matrix(gF, square=True)
    iE = np.linalg.inv(gE) if gE.size else gE
    iF = np.linalg.inv(gF) if gF.size else gF
    return LocalModel(gE @ model.R @ iE, gF @ model.thetaF @ iF, gF @ model.t @ iE, gE @ model.s @ iF)


def rescale(model: LocalModel, lam: complex) -> LocalModel:
    """The GL(1)-action ``(s, t) -> (lam s, t / lam)``."""
    return LocalModel(model.R, model.thetaF, model.t / lam, model.s * lam)


def direct_sum(a: LocalModel, b: LocalModel) -> LocalModel:
    def blk(x, y):
        out = np.zeros((x.shape[0] + y.shape[0], x.shape[1] + y.shape[1]), dtype=complex)
        out[: x.shape[0], : x.shape[1]] = x
        out[x.shape[0]:, x.shape[1]:] = y
        return out

    return LocalModel(blk(a.R, b.R), blk(a.thetaF, b.thetaF), blk(a.t, b.t), blk(a.s, b.s))


def isomorphic(m1: LocalModel, m2: LocalModel, tol: float = DEFAULT_TOL, seed: int = 0, attempts: int = 32):
    """Search for an isomorphism ``(gE, gF)`` from ``m1`` to ``m2``.

    The witness satisfies ``gE R1 = R2 gE``, ``gF thetaF1 = thetaF2 gF``,
    ``gF t1 = t2 gE`` and ``gE s1 = s2 gF``. Returns ``None`` when the
    intertwiner space has no invertible element.
    """
    if (m1.n, m1.m) != (m2.n, m2.m):
        raise ValueError(f"dimension mismatch: {(m1.n, m1.m)} vs {(m2.n, m2.m)}")
    n, m = m1.n, m1.m
    In, Im = np.eye(n), np.eye(m)
    if m1.allclose(m2, tol * max(_scale(m1), _scale(m2))):
        return In.astype(complex), Im.astype(complex)
    eqs = [
        [(In, 0, m1.R), (-m2.R, 0, In)],
        [(Im, 1, m1.thetaF), (-m2.thetaF, 1, Im)],
        [(Im, 1, m1.t), (-m2.t, 0, In)],
        [(In, 0, m1.s), (-m2.s, 1, Im)],
    ]
    field_ = NumericField(tol)
    shapes = [(n, n), (m, m)]
    basis = intertwiner_basis(field_, shapes, eqs)
    return find_invertible(field_, basis, shapes, np.random.default_rng(seed), attempts)
