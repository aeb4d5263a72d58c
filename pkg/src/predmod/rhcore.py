"""The local de Rham functor, its inverse and the rigidity differential.

At one point of a divisor component, a local model ``(R, thetaF, t, s)`` is
sent to gluing data ``(T_E, T_F, C, V)`` with

    T_E = exp(-2 pi i R),  T_F = exp(-2 pi i thetaF),  C = t phi(R),  V = s,

where ``phi(z) = (exp(-2 pi i z) - 1) / z``. The relations ``V C = T_E - I``
and ``C V = T_F - I`` follow from ``s t = R`` and ``t s = thetaF``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import NumericField
from .intertwine import find_invertible, intertwiner_basis
from .localmodel import LocalModel, _norm, _shaped, validate
from .matfun import DEFAULT_TOL, BranchSection, apply_entire, as_matrix, branch_log, expm2pi, phi_m2pi

__all__ = [
    "LocalRHData",
    "RHValidationReport",
    "RigidityResult",
    "validate_rh",
    "rh_local",
    "inv_rh_local",
    "rh_isomorphic",
    "tangent_basis",
    "rigidity_differential",
    "rigidity_map",
]


@dataclass(eq=False)
class LocalRHData:
    T_E: np.ndarray
    T_F: np.ndarray
    C: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        self.T_E = as_matrix(self.T_E, square=True, name="T_E")
        self.T_F = as_matrix(self.T_F, square=True, name="T_F")
        n, m = self.T_E.shape[0], self.T_F.shape[0]
        self.C = _shaped(self.C, (m, n), "C")
        self.V = _shaped(self.V, (n, m), "V")

    @property
    def n(self) -> int:
        return self.T_E.shape[0]

    @property
    def m(self) -> int:
        return self.T_F.shape[0]

    def allclose(self, other: "LocalRHData", atol: float) -> bool:
        if (self.n, self.m) != (other.n, other.m):
            return False
        pairs = zip((self.T_E, self.T_F, self.C, self.V), (other.T_E, other.T_F, other.C, other.V))
        return all(np.allclose(a, b, rtol=0, atol=atol) for a, b in pairs)


@dataclass
class RHValidationReport:
    ok: bool
    residuals: dict[str, float]
    tol: float

    def __bool__(self):
        return self.ok


def _data_scale(d: LocalRHData) -> float:
    return max(1.0, _norm(d.V) * _norm(d.C), _norm(d.T_E), _norm(d.T_F))


def validate_rh(data: LocalRHData, tol: float = DEFAULT_TOL) -> RHValidationReport:
    """Check ``V C = T_E - I`` and ``C V = T_F - I``."""
    n, m = data.n, data.m
    res = {
        "VC-(T_E-I)": _norm(data.V @ data.C - data.T_E + np.eye(n)),
        "CV-(T_F-I)": _norm(data.C @ data.V - data.T_F + np.eye(m)),
    }
    bound = tol * _data_scale(data)
    return RHValidationReport(all(r <= bound for r in res.values()), res, bound)


def rh_local(model: LocalModel, tol: float = DEFAULT_TOL) -> LocalRHData:
    """Gluing data of a valid local model.

    Examples
    --------
    >>> d = rh_local(LocalModel([[0.5]], [[0.5]], [[1]], [[0.5]]))
    >>> np.round(d.C.real, 12), np.round(d.T_E.real, 12)
    (array([[-4.]]), array([[-1.]]))
    """
    rep = validate(model, tol)
    if not rep.ok:
        raise ValueError(f"model does not satisfy st = R, ts = thetaF: {rep.residuals}")
    return LocalRHData(expm2pi(model.R), expm2pi(model.thetaF), model.t @ phi_m2pi(model.R), model.s.copy())


def inv_rh_local(
    data: LocalRHData,
    section: BranchSection = BranchSection(),
    tol: float = DEFAULT_TOL,
    *,
    report: bool = False,
):
    """Local model whose gluing data is ``data``.

    ``R`` is the logarithm of ``T_E`` selected by ``section``, ``t`` solves
    ``t phi(R) = C``, ``s = V`` and ``thetaF = t s``. Because the strip holds
    no nonzero integer, ``phi(R)`` is invertible. The result always has
    ``exp(-2 pi i thetaF) = I + C V``; that this equals ``T_F`` is checked
    and a mismatch raises.

    With ``report=True`` returns ``(model, residuals)``.
    """
    if not section.fixes_one:
        raise ValueError(f"section with anchor {section.anchor} does not send 1 to 0")
    rep = validate_rh(data, tol)
    if not rep.ok:
        raise ValueError(f"data does not satisfy VC = T_E - I, CV = T_F - I: {rep.residuals}")
    R = branch_log(data.T_E, section, tol)
    Phi = phi_m2pi(R)
    if data.n:
        sv = np.linalg.svd(Phi, compute_uv=False)
        # phi vanishes only at nonzero integers, which the strip excludes
        if sv[-1] <= 1e3 * np.finfo(float).eps * sv[0]:
            raise np.linalg.LinAlgError("phi(R) is numerically singular; logarithm lies too near a nonzero integer")
        t = np.linalg.solve(Phi.T, data.C.T).T
    else:
        t = np.zeros((data.m, 0), dtype=complex)
    s = data.V.copy()
    model = LocalModel(R, t @ s, t, s)
    resid = {
        "expm2pi(R)-T_E": _norm(expm2pi(R) - data.T_E),
        "expm2pi(thetaF)-T_F": _norm(expm2pi(model.thetaF) - data.T_F),
    }
    scale = _data_scale(data)
    # the computed log and the solve amplify rounding by the conditioning of phi(R)
    kappa = float(np.linalg.cond(Phi)) if data.n else 1.0
    if resid["expm2pi(thetaF)-T_F"] > max(tol, 1e3 * kappa * np.finfo(float).eps) * scale:
        raise ValueError(f"T_F is inconsistent with the reconstructed thetaF: {resid}")
    return (model, resid) if report else model


def rh_isomorphic(d1: LocalRHData, d2: LocalRHData, tol: float = DEFAULT_TOL, seed: int = 0, attempts: int = 32):
    """Isomorphism ``(gE, gF)`` of gluing data, or ``None``.

    The witness satisfies ``gE T_E1 = T_E2 gE``, ``gF T_F1 = T_F2 gF``,
    ``gF C1 = C2 gE`` and ``gE V1 = V2 gF``.
    """
    if (d1.n, d1.m) != (d2.n, d2.m):
        raise ValueError(f"dimension mismatch: {(d1.n, d1.m)} vs {(d2.n, d2.m)}")
    n, m = d1.n, d1.m
    In, Im = np.eye(n), np.eye(m)
    if d1.allclose(d2, tol * max(_data_scale(d1), _data_scale(d2))):
        return In.astype(complex), Im.astype(complex)
    eqs = [
        [(In, 0, d1.T_E), (-d2.T_E, 0, In)],
        [(Im, 1, d1.T_F), (-d2.T_F, 1, Im)],
        [(Im, 1, d1.C), (-d2.C, 0, In)],
        [(In, 0, d1.V), (-d2.V, 1, Im)],
    ]
    field_ = NumericField(tol)
    shapes = [(n, n), (m, m)]
    basis = intertwiner_basis(field_, shapes, eqs)
    return find_invertible(field_, basis, shapes, np.random.default_rng(seed), attempts)


# ---------------------------------------------------------------------------
# rigidity


@dataclass
class RigidityResult:
    image: tuple[np.ndarray, np.ndarray]
    injective: bool
    tangent_dim: int
    image_rank: int


def rigidity_map(s: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(s, t) -> (s, t f(st))`` with ``f(z) = (e^z - 1)/z``."""
    return s, t @ apply_entire(s @ t, "phi_plain")


def _tangency_matrix(model: LocalModel) -> np.ndarray:
    # linear map (a, b) -> (a t + s b, t a + b s), on row-major vec(a) ++ vec(b)
    n, m = model.n, model.m
    s, t = model.s, model.t
    In, Im = np.eye(n), np.eye(m)
    top = np.hstack([np.kron(In, t.T), np.kron(s, In)])
    bot = np.hstack([np.kron(t, Im), np.kron(Im, s.T)])
    return np.vstack([top, bot])


def tangent_basis(model: LocalModel, tol: float = DEFAULT_TOL) -> list[tuple[np.ndarray, np.ndarray]]:
    """Orthonormal basis of the Zariski tangent space at ``(s, t)``.

    The tangent space of ``{st = R, ts = thetaF}`` is the kernel of
    ``(a, b) -> (a t + s b, t a + b s)``.
    """
    n, m = model.n, model.m
    K = _tangency_matrix(model)
    scale = max(1.0, _norm(model.s), _norm(model.t))
    null = NumericField(tol).nullspace(K, scale=scale) if K.size else np.eye(2 * n * m, dtype=complex)
    return [(v[: n * m].reshape(n, m), v[n * m:].reshape(m, n)) for v in null.T]


def rigidity_differential(model: LocalModel, tangent, tol: float = DEFAULT_TOL) -> RigidityResult:
    """Differential of ``(s, t) -> (s, t f(st))`` along a tangent vector.

    ``tangent = (a, b)`` with ``a`` shaped like ``s`` and ``b`` like ``t``.
    Injectivity is decided by the numeric rank of the differential on a
    basis of the tangent space (threshold ``1e-7`` times the basis norm).
    """
    a = _shaped(tangent[0], model.s.shape, "a")
    b = _shaped(tangent[1], model.t.shape, "b")
    scale = max(1.0, _norm(model.s), _norm(model.t)) * max(1.0, _norm(a), _norm(b))
    viol = max(_norm(a @ model.t + model.s @ b), _norm(model.t @ a + b @ model.s))
    if viol > tol * scale:
        raise ValueError(f"(a, b) is not tangent: residual {viol:.3e}")
    f = apply_entire(model.s @ model.t, "phi_plain")
    image = (a.copy(), b @ f)

    basis = tangent_basis(model, tol)
    if basis:
        src = np.array([np.concatenate([x.reshape(-1), y.reshape(-1)]) for x, y in basis]).T
        img = np.array([np.concatenate([x.reshape(-1), (y @ f).reshape(-1)]) for x, y in basis]).T
        sv = np.linalg.svd(img, compute_uv=False)
        rank = int(np.sum(sv > 1e-7 * np.linalg.norm(src, 2)))
    else:
        rank = 0
    return RigidityResult(image, rank == len(basis), len(basis), rank)
