"""Eigenvalue shearing of local models at fixed monodromy.

``shift_down(alpha)`` lowers the generalized eigenvalue ``alpha`` of both
``R`` and ``thetaF`` by one; ``shift_up(alpha)`` raises it by one. Both
leave ``exp(-2 pi i R)`` unchanged because spectral projectors are
idempotent. ``make_good`` removes all integer resonances from ``R`` while
never lowering the multiplicity of the eigenvalue 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .localmodel import LocalModel, _norm, validate
from .matfun import CLUSTER_TOL, DEFAULT_TOL, expm2pi, resonance_report, spectral_split

__all__ = ["ShearMove", "MakeGoodResult", "shift_down", "shift_up", "make_good", "zero_multiplicity"]


@dataclass(frozen=True)
class ShearMove:
    direction: str
    alpha: complex
    multiplicity: int

    def __post_init__(self):
        if self.direction not in ("down", "up"):
            raise ValueError(f"direction must be 'down' or 'up', got {self.direction!r}")
        if self.alpha == 0:
            raise ValueError("shearing along the eigenvalue 0 is not allowed")


def _cluster_tol(A: np.ndarray) -> float:
    return CLUSTER_TOL * max(1.0, float(np.linalg.norm(A, 1)))


def zero_multiplicity(R: np.ndarray) -> int:
    """Algebraic multiplicity of the eigenvalue 0."""
    cl = spectral_split(R).find(0.0, _cluster_tol(R))
    return 0 if cl is None else cl.multiplicity


def _projectors(model: LocalModel, alpha: complex, tol: float):
    """Spectral projectors ``P`` of ``R`` and ``Q`` of ``thetaF`` at ``alpha``."""
    if abs(alpha) <= _cluster_tol(model.R):
        raise ValueError("shearing along the eigenvalue 0 is not allowed")
    cR = spectral_split(model.R).find(alpha, _cluster_tol(model.R))
    if cR is None:
        raise ValueError(f"{alpha} is not an eigenvalue of R")
    cF = spectral_split(model.thetaF).find(alpha, _cluster_tol(model.thetaF)) if model.m else None
    if cF is None or cF.multiplicity != cR.multiplicity:
        # nonzero spectra of st and ts agree, so this means the model is invalid
        raise AssertionError(f"eigenvalue {alpha} of R is not matched in thetaF")
    P, Q = cR.projector, cF.projector
    scale = max(1.0, _norm(model.s), _norm(model.t)) * max(1.0, _norm(P), _norm(Q))
    err = max(_norm(model.t @ P - Q @ model.t), _norm(model.s @ Q - P @ model.s))
    if err > max(tol, 1e-7) * scale:
        raise AssertionError(f"spectral projectors do not intertwine t and s (residual {err:.3e})")
    return P, Q, cR.multiplicity


def _block_inverse(theta: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """``W = f(theta)`` with ``f = 1/z`` on the range of ``Q`` and 0 elsewhere."""
    m = theta.shape[0]
    core = theta @ Q + (np.eye(m) - Q)
    sv = np.linalg.svd(core, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise AssertionError("thetaF is singular on the sheared block")
    return Q @ np.linalg.inv(core) @ Q


def _check(model: LocalModel, old: LocalModel, tol: float) -> LocalModel:
    rep = validate(model, tol)
    if not rep.ok:
        raise AssertionError(f"sheared model fails st = R, ts = thetaF: {rep.residuals}")
    T0, T1 = expm2pi(old.R), expm2pi(model.R)
    # the monodromy error grows with |exp(-2 pi i z)| over the spectrum
    bound = max(tol, 1e-8) * max(1.0, _norm(T0)) * max(1.0, _norm(old.R))
    if _norm(T1 - T0) > bound:
        raise AssertionError(f"monodromy changed by {_norm(T1 - T0):.3e}")
    return model


def shift_down(model: LocalModel, alpha: complex, tol: float = DEFAULT_TOL) -> LocalModel:
    """Lower the generalized eigenvalue ``alpha != 0`` by one.

    ``R' = R - P``, ``thetaF' = thetaF - Q``, ``t' = t`` and
    ``s' = s (I - Q + (thetaF - I) W)`` with ``W`` the inverse of ``thetaF``
    on the ``alpha`` block.

    Examples
    --------
    >>> m = shift_down(LocalModel([[1]], [[1]], [[1]], [[1]]), 1)
    >>> np.round(m.R.real, 12), np.round(m.s.real, 12)
    (array([[0.]]), array([[0.]]))
    """
    P, Q, _ = _projectors(model, alpha, tol)
    m = model.m
    W = _block_inverse(model.thetaF, Q)
    s_new = model.s @ (np.eye(m) - Q + (model.thetaF - np.eye(m)) @ W)
    out = LocalModel(model.R - P, model.thetaF - Q, model.t.copy(), s_new)
    return _check(out, model, tol)


def shift_up(model: LocalModel, alpha: complex, tol: float = DEFAULT_TOL) -> LocalModel:
    """Raise the generalized eigenvalue ``alpha != 0`` by one.

    ``R' = R + P``, ``thetaF' = thetaF + Q``, ``s' = s`` and
    ``t' = (I - Q + (thetaF + I) W) t``.
    """
    P, Q, _ = _projectors(model, alpha, tol)
    m = model.m
    W = _block_inverse(model.thetaF, Q)
    t_new = (np.eye(m) - Q + (model.thetaF + np.eye(m)) @ W) @ model.t
    out = LocalModel(model.R + P, model.thetaF + Q, t_new, model.s.copy())
    return _check(out, model, tol)


@dataclass
class MakeGoodResult:
    model: LocalModel
    moves: list[ShearMove]
    zero_trace: list[int] = field(default_factory=list)


def _is_int(z: complex, eps: float) -> bool:
    return abs(z.imag) < eps and abs(z.real - round(z.real)) < eps


def _next_move(R: np.ndarray):
    rep = resonance_report(R)
    if rep.good:
        return None
    eps = _cluster_tol(R)
    # pairs whose integer chain lo, lo + 1, ..., hi passes through 0 come first
    through_zero = [
        p for p in rep.pairs if _is_int(p.lo, eps) and round(p.lo.real) <= 0 <= round(p.hi.real)
    ]
    pair = (through_zero or rep.pairs)[0]
    if through_zero and abs(pair.hi) > eps:
        # lo = 0, or 0 strictly between: bring hi down towards 0
        return "down", pair.hi
    return "up", pair.lo


def make_good(model: LocalModel, tol: float = DEFAULT_TOL) -> MakeGoodResult:
    """Shear until no two eigenvalues of ``R`` differ by a nonzero integer.

    Pairs whose chain of integer steps contains 0 are treated first: the
    upper end is lowered until it reaches 0, then the lower end is raised
    to 0. Other pairs have their lower end raised. The eigenvalue 0 is
    never moved, so its multiplicity never decreases.
    """
    rep = validate(model, tol)
    if not rep.ok:
        raise ValueError(f"model does not satisfy st = R, ts = thetaF: {rep.residuals}")
    initial = resonance_report(model.R)
    budget = sum(p.k for p in initial.pairs) + model.n + 1
    current = model.copy()
    moves: list[ShearMove] = []
    trace = [zero_multiplicity(current.R)]
    while True:
        nxt = _next_move(current.R)
        if nxt is None:
            break
        if len(moves) >= budget:
            raise RuntimeError(f"make_good did not terminate within {budget} moves")
        direction, alpha = nxt
        mult = spectral_split(current.R).find(alpha, _cluster_tol(current.R)).multiplicity
        current = (shift_down if direction == "down" else shift_up)(current, alpha, tol)
        moves.append(ShearMove(direction, complex(alpha), mult))
        trace.append(zero_multiplicity(current.R))
        if trace[-1] < trace[-2]:
            raise AssertionError("multiplicity of the eigenvalue 0 decreased")
    return MakeGoodResult(current, moves, trace)
