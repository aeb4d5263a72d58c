"""Fuchsian systems on the punctured sphere: transport, monodromy, assembly.

Flat sections solve ``dy/dz = -sum_a A_a / (z - p_a) y``, so a positive loop
around ``p_a`` acts, in a suitable local frame, by ``exp(-2 pi i A_a)``.
The residue at infinity is ``-sum_a A_a``.

Transport along a path is the matrix ``T`` with ``y(end) = T y(start)``. It
is an anti-homomorphism: ``transport(g1 . g2) = transport(g2) transport(g1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_sylvester

from .findesc import FiniteDescription, PunctureData, SurfaceData
from .localmodel import LocalModel, _norm, validate
from .matfun import DEFAULT_TOL, apply_entire, as_matrix, expm2pi, resonance_report
from .rhcore import rh_local

__all__ = [
    "Arc",
    "FuchsianSystem",
    "LoopBasket",
    "MonodromyResult",
    "transport",
    "default_basket",
    "monodromy",
    "local_frame",
    "assemble_fd",
    "winding_number",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Arc:
    """Circular piece of a path: turn around ``center`` by ``sweep`` radians.

    The arc starts at the current point of the path, so its radius is the
    distance from that point to ``center``. Positive ``sweep`` is
    counterclockwise.
    """

    center: complex
    sweep: float = 2 * math.pi


PathItem = Union[complex, Arc]


@dataclass(eq=False)
class FuchsianSystem:
    punctures: np.ndarray
    residues: list[np.ndarray]
    base: complex
    closed: bool = False

    def __post_init__(self):
        self.punctures = np.asarray(self.punctures, dtype=complex).reshape(-1)
        self.residues = [as_matrix(A, square=True, name=f"A[{a + 1}]").astype(complex) for a, A in enumerate(self.residues)]
        self.base = complex(self.base)
        k = len(self.punctures)
        if k == 0:
            raise ValueError("at least one puncture is required")
        if len(self.residues) != k:
            raise ValueError(f"{k} punctures but {len(self.residues)} residues")
        n = self.residues[0].shape[0]
        for a, A in enumerate(self.residues):
            if A.shape != (n, n):
                raise ValueError(f"residue {a + 1} has shape {A.shape}, expected {(n, n)}")
        gaps = np.abs(self.punctures[:, None] - self.punctures[None, :]) + np.eye(k)
        if np.min(gaps) == 0:
            raise ValueError("punctures must be pairwise distinct")
        if np.min(np.abs(self.punctures - self.base)) == 0:
            raise ValueError("the base point must differ from every puncture")
        if self.closed and self.has_infinity():
            raise ValueError(
                f"declared closed but the residues sum to {_norm(self.residue_at_infinity):.3e}, not 0"
            )

    @property
    def n(self) -> int:
        return self.residues[0].shape[0]

    @property
    def k(self) -> int:
        return len(self.punctures)

    @property
    def residue_at_infinity(self) -> np.ndarray:
        return -sum(self.residues)

    def scale(self) -> float:
        return max([1.0] + [_norm(A) for A in self.residues])

    def has_infinity(self, tol: float = DEFAULT_TOL) -> bool:
        return _norm(self.residue_at_infinity) > tol * self.scale()

    def connection(self, z: complex) -> np.ndarray:
        """``sum_a A_a / (z - p_a)``."""
        w = 1.0 / (z - self.punctures)
        return np.tensordot(w, self._stack, axes=1)

    @property
    def _stack(self) -> np.ndarray:
        return np.array(self.residues)


# ---------------------------------------------------------------------------
# transport


def _pieces(path: Sequence[PathItem]):
    """Split a path into ``("seg", z0, z1)`` and ``("arc", center, z0, sweep)``."""
    out = []
    cur = None
    for item in path:
        if isinstance(item, Arc):
            if cur is None:
                raise ValueError("a path cannot start with an arc")
            out.append(("arc", complex(item.center), cur, float(item.sweep)))
            cur = item.center + (cur - item.center) * np.exp(1j * item.sweep)
        else:
            z = complex(item)
            if cur is not None and z != cur:
                out.append(("seg", cur, z))
            cur = z
    return out


def _segment_distance(z0: complex, z1: complex, p: np.ndarray) -> np.ndarray:
    d = z1 - z0
    if d == 0:
        return np.abs(p - z0)
    u = np.clip(((p - z0) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return np.abs(p - (z0 + u * d))


def _piece_distance(piece, p: np.ndarray) -> np.ndarray:
    if piece[0] == "seg":
        return _segment_distance(piece[1], piece[2], p)
    _, c, z0, sweep = piece
    r = abs(z0 - c)
    if abs(sweep) >= 2 * math.pi:
        return np.abs(np.abs(p - c) - r)
    # sample the arc finely; exact enough for a clearance check
    th = np.linspace(0.0, sweep, max(8, int(64 * abs(sweep))))
    pts = c + (z0 - c) * np.exp(1j * th)
    return np.min(np.abs(p[:, None] - pts[None, :]), axis=1)


def _subdivide(piece, p: np.ndarray, max_ratio: float = 2.0):
    """Cut a piece so that no part is longer than ``max_ratio`` times its puncture distance."""
    if piece[0] == "arc":
        _, c, z0, sweep = piece
        length = abs(sweep) * abs(z0 - c)
    else:
        length = abs(piece[2] - piece[1])
    d = float(np.min(_piece_distance(piece, p)))
    if length <= max_ratio * d or length < 1e-14:
        return [piece]
    if piece[0] == "seg":
        mid = 0.5 * (piece[1] + piece[2])
        halves = [("seg", piece[1], mid), ("seg", mid, piece[2])]
    else:
        _, c, z0, sweep = piece
        mid = c + (z0 - c) * np.exp(0.5j * sweep)
        halves = [("arc", c, z0, 0.5 * sweep), ("arc", c, mid, 0.5 * sweep)]
    return _subdivide(halves[0], p, max_ratio) + _subdivide(halves[1], p, max_ratio)


def _integrate(sys: FuchsianSystem, piece, Y0: np.ndarray, tol: float) -> np.ndarray:
    n = sys.n
    if piece[0] == "seg":
        z0, dz = piece[1], piece[2] - piece[1]

        def zeta(u):
            return z0 + u * dz, dz
    else:
        _, c, start, sweep = piece
        w0 = start - c

        def zeta(u):
            w = w0 * np.exp(1j * sweep * u)
            return c + w, 1j * sweep * w

    def rhs(u, y):
        z, dzdu = zeta(u)
        return (-(sys.connection(z) * dzdu) @ y.reshape(n, n)).reshape(-1)

    rtol = max(0.1 * tol, 100 * _EPS)
    sol = solve_ivp(rhs, (0.0, 1.0), Y0.reshape(-1), method="DOP853", rtol=rtol, atol=0.01 * rtol)
    if not sol.success:
        raise RuntimeError(f"integration failed ({sol.message}); the path may pass too close to a puncture")
    return sol.y[:, -1].reshape(n, n)


def transport(
    sys: FuchsianSystem,
    path: Sequence[PathItem],
    tol: float = DEFAULT_TOL,
    clearance: float = 1e-3,
) -> np.ndarray:
    """Transport matrix of flat sections along a polyline.

    ``path`` is a sequence of points; an :class:`Arc` item inserts a circular
    piece starting at the current point. Every piece must keep at least
    ``clearance`` away from the punctures.

    Examples
    --------
    >>> sys = FuchsianSystem([0, 1], [[[0.25]], [[-0.25]]], base=0.5j)
    >>> T = transport(sys, [0.5j, Arc(0)])
    >>> bool(abs(T[0, 0] - np.exp(-0.5j * np.pi)) < 1e-8)
    True
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    Y = np.eye(sys.n, dtype=complex)
    for piece in _pieces(path):
        d = _piece_distance(piece, sys.punctures)
        if np.min(d) < clearance:
            a = int(np.argmin(d))
            raise ValueError(
                f"path piece passes within {np.min(d):.3e} of puncture {a + 1} (clearance {clearance:.1e})"
            )
        for part in _subdivide(piece, sys.punctures):
            Y = _integrate(sys, part, Y, tol)
    return Y


def winding_number(path: Sequence[PathItem], point: complex) -> int:
    """Winding number of a closed path around ``point``."""
    total = 0.0
    for piece in _pieces(path):
        if piece[0] == "seg":
            total += np.angle((piece[2] - point) / (piece[1] - point))
        else:
            _, c, z0, sweep = piece
            # split into small sub-arcs so that each angle increment is below pi
            steps = max(4, int(math.ceil(abs(sweep) / 0.5)))
            pts = c + (z0 - c) * np.exp(1j * np.linspace(0.0, sweep, steps + 1))
            total += float(np.sum(np.angle((pts[1:] - point) / (pts[:-1] - point))))
    return int(round(total / (2 * math.pi)))


# ---------------------------------------------------------------------------
# loops


@dataclass
class LoopBasket:
    """Based loops, one per singular point, and the order of the product relation.

    Loop ``i`` follows ``paths[i]`` from the base point, turns once around
    ``centers[i]`` (``orientation[i] = +1`` counterclockwise, ``-1``
    clockwise) and returns along the same polyline. Indices ``0 .. k-1``
    are the finite punctures; index ``k``, when present, is the loop around
    infinity. The monodromies satisfy ``M[order[0]] M[order[1]] ... = I``.
    """

    paths: list[np.ndarray]
    centers: list[complex]
    orientation: list[int]
    order: list[int]
    clearance: float

    def loop(self, i: int) -> list[PathItem]:
        p = [complex(z) for z in self.paths[i]]
        return p + [Arc(self.centers[i], 2 * math.pi * self.orientation[i])] + p[::-1]

    @property
    def size(self) -> int:
        return len(self.paths)

    def check(self, sys: FuchsianSystem) -> None:
        """Raise ``ValueError`` unless every loop is valid for ``sys``."""
        k = sys.k
        if self.size not in (k, k + 1):
            raise ValueError(f"basket has {self.size} loops for {k} punctures")
        if sorted(self.order) != list(range(self.size)):
            raise ValueError(f"order {self.order} is not a permutation of the loops")
        if sys.has_infinity() and self.size != k + 1:
            raise ValueError("the residues do not sum to 0, so a loop around infinity is required")
        for i in range(self.size):
            path = self.paths[i]
            if abs(complex(path[0]) - sys.base) > 1e-12 * max(1.0, abs(sys.base)):
                raise ValueError(f"loop {i + 1} does not start at the base point")
            for piece in _pieces(self.loop(i)):
                d = _piece_distance(piece, sys.punctures)
                if np.min(d) < self.clearance:
                    raise ValueError(f"loop {i + 1} passes within {np.min(d):.3e} of puncture {int(np.argmin(d)) + 1}")
            loop = self.loop(i)
            wind = [winding_number(loop, p) for p in sys.punctures]
            if i < k:
                want = [int(b == i) for b in range(k)]
            else:
                want = [-1] * k
            if wind != want:
                raise ValueError(f"loop {i + 1} has winding numbers {wind}, expected {want}")


def default_basket(sys: FuchsianSystem, tol: float = DEFAULT_TOL) -> LoopBasket:
    """Star-shaped basket: straight rays from the base point and small circles.

    The circle around ``p_a`` has a quarter of the distance from ``p_a`` to the
    nearest other puncture or base point as radius. Loops are swept
    counterclockwise starting from the widest angular gap; since transport
    reverses products, the relation order is the reverse sweep order, with
    infinity first when it is singular.
    """
    z0, p, k = sys.base, sys.punctures, sys.k
    d = np.abs(p - z0)
    gaps = np.abs(p[:, None] - p[None, :]) + np.diag(np.full(k, np.inf))
    near = np.minimum(np.min(gaps, axis=1), d)
    radii = 0.25 * near
    clearance = 0.5 * float(np.min(radii))
    theta = np.angle(p - z0)
    srt = np.sort(theta)
    gap = np.diff(np.concatenate([srt, [srt[0] + 2 * math.pi]]))
    j = int(np.argmax(gap))
    cut = srt[j] + 0.5 * gap[j]
    sweep = sorted(range(k), key=lambda a: (theta[a] - cut) % (2 * math.pi))

    paths = [np.array([z0, p[a] - radii[a] * np.exp(1j * theta[a])]) for a in range(k)]
    centers = [complex(c) for c in p]
    orientation = [1] * k
    order = sweep[::-1]
    if sys.has_infinity(tol):
        R = 2.0 * float(np.max(d))
        paths.append(np.array([z0, z0 + R * np.exp(1j * cut)]))
        centers.append(z0)
        orientation.append(-1)
        order = [k] + order
    basket = LoopBasket(paths, centers, orientation, order, clearance)
    try:
        basket.check(sys)
    except ValueError as exc:
        raise ValueError(f"default basket is invalid ({exc}); choose another base point") from None
    return basket


@dataclass
class MonodromyResult:
    M: list[np.ndarray]
    M_inf: np.ndarray | None
    order: list[int]
    residual: float
    charpoly_distance: list[float]
    path_transports: list[np.ndarray] = field(default_factory=list)

    def all(self) -> list[np.ndarray]:
        return self.M + ([self.M_inf] if self.M_inf is not None else [])

    def product(self) -> np.ndarray:
        mats = self.all()
        P = np.eye(mats[0].shape[0], dtype=complex)
        for i in self.order:
            P = P @ mats[i]
        return P


def _charpoly_distance(M: np.ndarray, A: np.ndarray) -> float:
    return float(np.max(np.abs(np.poly(M) - np.poly(expm2pi(A))))) if M.size else 0.0


def monodromy(
    sys: FuchsianSystem,
    basket: LoopBasket | None = None,
    tol: float = DEFAULT_TOL,
    max_residual: float | None = None,
) -> MonodromyResult:
    """Monodromy of every loop in ``basket`` and the residual of the product relation.

    Raises ``RuntimeError`` when the relation residual exceeds ``max_residual``
    (default ``1e4 tol`` times the product of the monodromy norms) or when a
    monodromy has the wrong characteristic polynomial.

    Examples
    --------
    >>> sys = FuchsianSystem([0, 1], [[[1 / 3]], [[-1 / 3]]], base=0.5j)
    >>> res = monodromy(sys)
    >>> bool(abs(res.M[0][0, 0] - np.exp(-2j * np.pi / 3)) < 1e-8)
    True
    """
    if basket is None:
        basket = default_basket(sys, tol)
    else:
        basket.check(sys)
    k = sys.k
    mats, paths, dist = [], [], []
    residues = sys.residues + ([sys.residue_at_infinity] if basket.size > k else [])
    for i in range(basket.size):
        Tp = transport(sys, basket.paths[i], tol, basket.clearance)
        start = complex(basket.paths[i][-1])
        Tc = transport(sys, [start, Arc(basket.centers[i], 2 * math.pi * basket.orientation[i])], tol, basket.clearance)
        M = np.linalg.solve(Tp, Tc @ Tp)
        mats.append(M)
        paths.append(Tp)
        dist.append(_charpoly_distance(M, residues[i]))
    res = MonodromyResult(mats[:k], mats[k] if basket.size > k else None, list(basket.order), 0.0, dist, paths)
    scale = math.prod(max(1.0, _norm(M)) for M in mats)
    res.residual = _norm(res.product() - np.eye(sys.n))
    bound = max_residual if max_residual is not None else 1e4 * tol * scale
    if res.residual > bound:
        raise RuntimeError(
            f"product relation residual {res.residual:.3e} exceeds {bound:.3e}; "
            f"loop order {res.order}, characteristic polynomial distances {[f'{x:.1e}' for x in dist]}"
        )
    cp_bound = 1e4 * tol * scale
    bad = [i for i, x in enumerate(dist) if x > cp_bound]
    if bad:
        raise RuntimeError(f"monodromy of loops {[i + 1 for i in bad]} is not similar to exp(-2 pi i A)")
    return res


# ---------------------------------------------------------------------------
# local frames and assembly


def local_frame(sys: FuchsianSystem, a: int, q: complex, tol: float = DEFAULT_TOL, max_terms: int = 400) -> np.ndarray:
    """Value at ``q`` of the fundamental solution ``H(z) (z - p_a)^(-A_a)`` near ``p_a``.

    ``H`` is holomorphic with ``H(p_a) = I``; its Taylor coefficients solve
    ``(A + j) H_j - H_j A = -sum_i B_(j-1-i) H_i`` where ``B`` is the regular
    part of the connection. Requires ``A_a`` non-resonant and ``q`` inside
    the disc of convergence.
    """
    p, A = sys.punctures[a], sys.residues[a]
    n = sys.n
    others = [b for b in range(sys.k) if b != a]
    rho = min([abs(sys.punctures[b] - p) for b in others] or [np.inf])
    w = q - p
    if not abs(w) < rho:
        raise ValueError(f"point {q} lies outside the convergence disc of puncture {a + 1}")
    ev = np.linalg.eigvals(A)
    sep = np.abs(ev[:, None] - ev[None, :])
    scale = max(1.0, _norm(A))

    def coeffB(j):
        return -sum(sys.residues[b] / (sys.punctures[b] - p) ** (j + 1) for b in others) if others else np.zeros((n, n))

    Bs, Hs = [], [np.eye(n, dtype=complex)]
    H = np.eye(n, dtype=complex)
    small = 0
    for j in range(1, max_terms + 1):
        Bs.append(coeffB(j - 1))
        rhs = -sum(Bs[j - 1 - i] @ Hs[i] for i in range(j))
        gap = np.min(np.abs(sep - j)) if n else 1.0
        if gap < 1e-8 * scale:
            raise ValueError(f"residue at puncture {a + 1} is resonant: eigenvalues differ by {j}")
        Hj = solve_sylvester(A + j * np.eye(n), -A, rhs)
        Hs.append(Hj)
        term = Hj * w**j
        H = H + term
        small = small + 1 if _norm(term) <= _EPS * max(1.0, _norm(H)) else 0
        if small >= 3:
            break
    else:
        raise RuntimeError(f"local series at puncture {a + 1} did not converge in {max_terms} terms")
    return H @ apply_entire(-A * np.log(w), "exp_plain")


def assemble_fd(
    sys: FuchsianSystem,
    models: Sequence[LocalModel],
    basket: LoopBasket | None = None,
    tol: float = DEFAULT_TOL,
) -> FiniteDescription:
    """Finite description glued from the monodromy of ``sys`` and local models.

    ``models[a]`` lives on the fiber at ``p_a`` in the coordinates of the
    residue ``A_a``; its ``R`` must be a logarithm of the local monodromy,
    normally ``A_a`` itself (a sheared model with the same ``exp(-2 pi i R)``
    is accepted). With ``P_a`` the transport from the base point into the
    local frame at ``p_a``,

        rho(c) = P_a^-1 exp(-2 pi i A_a) P_a,  C_a = C P_a,  V_a = P_a^-1 V,

    and ``tauF_a = T_F`` where ``(T_E, T_F, C, V) = rh_local(models[a])``.
    The punctures of the result follow ``basket.order``.
    """
    if sys.has_infinity(tol):
        raise ValueError("assembly needs the residues to sum to 0 (no singularity at infinity)")
    if len(models) != sys.k:
        raise ValueError(f"{sys.k} local models expected, got {len(models)}")
    for a, (m, A) in enumerate(zip(models, sys.residues)):
        if m.n != sys.n:
            raise ValueError(f"local model {a + 1} has rank {m.n}, expected {sys.n}")
        rep = validate(m, tol)
        if not rep.ok:
            raise ValueError(f"local model {a + 1} fails st = R, ts = thetaF: {rep.residuals}")
        if not resonance_report(A).good:
            raise ValueError(f"residue at puncture {a + 1} is resonant; apply modify.make_good first")
        TE = expm2pi(A)
        err = _norm(expm2pi(m.R) - TE)
        if err > 1e3 * tol * max(1.0, _norm(TE)) * max(1.0, _norm(m.R)):
            raise ValueError(f"local model {a + 1} has monodromy different from exp(-2 pi i A) (error {err:.3e})")
    if basket is None:
        basket = default_basket(sys, tol)
    mono = monodromy(sys, basket, tol)
    rho, local = {}, []
    for pos, a in enumerate(basket.order):
        q = complex(basket.paths[a][-1])
        G = local_frame(sys, a, q, tol)
        P = np.linalg.solve(G, mono.path_transports[a])
        if np.linalg.cond(P) > 1e8:
            raise RuntimeError(f"frame at puncture {a + 1} is ill-conditioned (cond {np.linalg.cond(P):.1e})")
        TE = expm2pi(sys.residues[a])
        M = np.linalg.solve(P, TE @ P)
        # the closed-form monodromy must agree with the integrated one
        err = _norm(M - mono.M[a])
        if err > 1e4 * tol * max(1.0, _norm(M)) * np.linalg.cond(P):
            raise RuntimeError(f"frame alignment at puncture {a + 1} failed (mismatch {err:.3e})")
        d = rh_local(models[a], tol)
        rho[f"c{pos + 1}"] = M
        local.append(PunctureData(d.T_F, d.C @ P, np.linalg.solve(P, d.V)))
    return FiniteDescription(SurfaceData(0, sys.k), rho, local)
