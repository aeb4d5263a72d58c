"""Finite descriptions: surface-group representations glued to puncture data.

A finite description over a surface of genus ``g`` with ``k`` punctures is a
representation ``rho`` of the generators ``a_i, b_i, c_a`` on ``E`` with

    [rho(a_1), rho(b_1)] ... [rho(a_g), rho(b_g)] rho(c_1) ... rho(c_k) = I,

together with, for every puncture, a space ``F_a`` carrying ``tauF_a`` and
maps ``C_a : E -> F_a``, ``V_a : F_a -> E`` such that ``V_a C_a =
rho(c_a) - I`` and ``C_a V_a = tauF_a - I``. Here ``[x, y] = x y x^-1 y^-1``.

All module-theoretic questions (subobjects, Jordan-Hoelder factors,
isomorphism) are reduced to linear algebra on ``W = E + F_1 + ... + F_k``
with the structure maps written as block operators. Every routine works in
floating complex arithmetic (``mode="numeric"``) or exactly over the
Gaussian rationals (``mode="exact"``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fields import get_field
from .intertwine import find_invertible, intertwiner_basis
from .matfun import DEFAULT_TOL

__all__ = [
    "SurfaceData",
    "PunctureData",
    "FiniteDescription",
    "SubObject",
    "FDReport",
    "JHResult",
    "JHUnresolved",
    "validate_fd",
    "act",
    "spin",
    "restrict",
    "quotient",
    "jordan_holder",
    "s_equivalent",
    "fd_isomorphic",
    "degenerate_family",
    "direct_sum_fd",
    "coerce_fd",
    "disc_description",
]


@dataclass(frozen=True)
class SurfaceData:
    """Genus, number of punctures and whether the surface relation holds.

    ``closed=False`` drops the relation (a surface with extra boundary, whose
    fundamental group is free on the listed generators).
    """

    genus: int
    punctures: int
    closed: bool = True

    def __post_init__(self):
        if self.genus < 0:
            raise ValueError("genus must be nonnegative")
        if self.punctures < 1:
            raise ValueError("at least one puncture is required")

    @property
    def labels(self) -> list[str]:
        out = []
        for i in range(1, self.genus + 1):
            out += [f"a{i}", f"b{i}"]
        return out + self.boundary_labels

    @property
    def boundary_labels(self) -> list[str]:
        return [f"c{a}" for a in range(1, self.punctures + 1)]


@dataclass(eq=False)
class PunctureData:
    tauF: np.ndarray
    C: np.ndarray
    V: np.ndarray

    @property
    def dim(self) -> int:
        return self.tauF.shape[0]


@dataclass(eq=False)
class FiniteDescription:
    surface: SurfaceData
    rho: dict[str, np.ndarray]
    local: list[PunctureData]

    def __post_init__(self):
        labels = self.surface.labels
        missing = [x for x in labels if x not in self.rho]
        extra = [x for x in self.rho if x not in labels]
        if missing or extra:
            raise ValueError(f"generator labels mismatch: missing {missing}, unexpected {extra}")
        self.rho = {x: np.asarray(self.rho[x]) for x in labels}
        n = self.rho[labels[0]].shape[0]
        for x, M in self.rho.items():
            if M.shape != (n, n):
                raise ValueError(f"rho[{x}] has shape {M.shape}, expected {(n, n)}")
        if len(self.local) != self.surface.punctures:
            raise ValueError(f"{self.surface.punctures} puncture blocks expected, got {len(self.local)}")
        for a, loc in enumerate(self.local):
            na = loc.tauF.shape[0]
            if loc.tauF.shape != (na, na) or loc.C.shape != (na, n) or loc.V.shape != (n, na):
                raise ValueError(
                    f"puncture {a + 1}: tauF {loc.tauF.shape}, C {loc.C.shape}, V {loc.V.shape} "
                    f"inconsistent with n = {n}"
                )

    @property
    def n(self) -> int:
        return next(iter(self.rho.values())).shape[0]

    @property
    def dims(self) -> list[int]:
        return [loc.dim for loc in self.local]

    @property
    def total_dim(self) -> int:
        return self.n + sum(self.dims)

    def tau(self, a: int) -> np.ndarray:
        return self.rho[f"c{a + 1}"]

    def matrices(self):
        """All stored matrices with a readable name."""
        for x, M in self.rho.items():
            yield f"rho[{x}]", M
        for a, loc in enumerate(self.local):
            yield f"tauF[{a + 1}]", loc.tauF
            yield f"C[{a + 1}]", loc.C
            yield f"V[{a + 1}]", loc.V


def coerce_fd(fd: FiniteDescription, fld) -> FiniteDescription:
    """Copy of ``fd`` with every matrix converted into the arithmetic of ``fld``."""

    def cv(M, shape):
        A = fld.asarray(M)
        return A.reshape(shape) if A.size == 0 else A

    n = fd.n
    return FiniteDescription(
        fd.surface,
        {x: cv(M, (n, n)) for x, M in fd.rho.items()},
        [
            PunctureData(cv(l.tauF, (l.dim, l.dim)), cv(l.C, (l.dim, n)), cv(l.V, (n, l.dim)))
            for l in fd.local
        ],
    )


def disc_description(data) -> FiniteDescription:
    """Gluing data ``(T_E, T_F, C, V)`` at one point as a description over a punctured disc.

    The disc has free fundamental group generated by the loop ``c1``, so no
    surface relation is imposed.
    """
    return FiniteDescription(
        SurfaceData(0, 1, closed=False),
        {"c1": np.array(data.T_E)},
        [PunctureData(np.array(data.T_F), np.array(data.C), np.array(data.V))],
    )


def _norm(fld, A) -> float:
    return fld.residual(A)


def _scale(fd: FiniteDescription, fld) -> float:
    return max([1.0] + [_norm(fld, M) for _, M in fd.matrices()])


@dataclass
class FDReport:
    ok: bool
    residuals: dict[str, float]
    tol: float

    def __bool__(self):
        return self.ok


def _relation(fd: FiniteDescription, fld):
    n = fd.n
    P = fld.eye(n)
    for i in range(1, fd.surface.genus + 1):
        A, B = fd.rho[f"a{i}"], fd.rho[f"b{i}"]
        P = fld.mm(P, fld.mm(fld.mm(A, B), fld.mm(fld.inv(A), fld.inv(B))))
    for x in fd.surface.boundary_labels:
        P = fld.mm(P, fd.rho[x])
    return P


def validate_fd(fd: FiniteDescription, tol: float = DEFAULT_TOL, mode: str = "numeric") -> FDReport:
    """Check the surface relation, invertibility and the gluing relations.

    In exact mode every residual must vanish; in numeric mode residuals are
    compared with ``tol`` times the square of the largest matrix norm (the
    relations are quadratic in the data).
    """
    fld = get_field(mode, tol)
    fd = coerce_fd(fd, fld)
    n = fd.n
    res: dict[str, float] = {}
    singular = [name for name, M in fd.matrices() if name.startswith(("rho", "tauF")) and not fld.is_invertible(M)]
    for name in singular:
        res[f"singular {name}"] = 1.0
    if fd.surface.closed and not singular:
        res["relation"] = _norm(fld, _relation(fd, fld) - fld.eye(n))
    for a, loc in enumerate(fd.local):
        T = fd.tau(a)
        I_a = fld.eye(loc.dim)
        res[f"VC-(rho-I)[{a + 1}]"] = _norm(fld, fld.mm(loc.V, loc.C) - T + fld.eye(n))
        res[f"CV-(tauF-I)[{a + 1}]"] = _norm(fld, fld.mm(loc.C, loc.V) - loc.tauF + I_a)
        res[f"C rho-tauF C[{a + 1}]"] = _norm(fld, fld.mm(loc.C, T) - fld.mm(loc.tauF, loc.C))
        res[f"V tauF-rho V[{a + 1}]"] = _norm(fld, fld.mm(loc.V, loc.tauF) - fld.mm(T, loc.V))
    bound = 0.0 if fld.exact else tol * _scale(fd, fld) ** 2
    ok = not singular and all(r <= bound for r in res.values())
    return FDReport(ok, res, bound)


def act(fd: FiniteDescription, g, g_a: Sequence, mode: str = "numeric") -> FiniteDescription:
    """Right action: ``rho -> g^-1 rho g``, ``tauF_a -> g_a^-1 tauF_a g_a``,
    ``C_a -> g_a^-1 C_a g`` and ``V_a -> g^-1 V_a g_a``."""
    fld = get_field(mode)
    fd = coerce_fd(fd, fld)
    g = fld.asarray(g)
    g_a = [fld.asarray(x).reshape(l.dim, l.dim) for x, l in zip(g_a, fd.local)]
    if len(g_a) != len(fd.local):
        raise ValueError("one group element per puncture is required")
    for M in [g] + g_a:
        if not fld.is_invertible(M):
            raise ValueError("group elements must be invertible")
    gi = fld.inv(g) if fd.n else g
    rho = {x: fld.mm(fld.mm(gi, M), g) for x, M in fd.rho.items()}
    local = []
    for loc, h in zip(fd.local, g_a):
        hi = fld.inv(h) if loc.dim else h
        local.append(
            PunctureData(fld.mm(fld.mm(hi, loc.tauF), h), fld.mm(fld.mm(hi, loc.C), g), fld.mm(fld.mm(gi, loc.V), h))
        )
    return FiniteDescription(fd.surface, rho, local)


def direct_sum_fd(fds: Sequence[FiniteDescription], mode: str = "numeric") -> FiniteDescription:
    fld = get_field(mode)
    fds = [coerce_fd(f, fld) for f in fds]
    if not fds:
        raise ValueError("empty direct sum")
    surf = fds[0].surface
    if any(f.surface != surf for f in fds):
        raise ValueError("direct sum of descriptions over different surfaces")

    def blk(mats):
        r = sum(M.shape[0] for M in mats)
        c = sum(M.shape[1] for M in mats)
        out = fld.zeros(r, c)
        i = j = 0
        for M in mats:
            out[i:i + M.shape[0], j:j + M.shape[1]] = M
            i += M.shape[0]
            j += M.shape[1]
        return out

    rho = {x: blk([f.rho[x] for f in fds]) for x in surf.labels}
    local = [
        PunctureData(blk([f.local[a].tauF for f in fds]), blk([f.local[a].C for f in fds]), blk([f.local[a].V for f in fds]))
        for a in range(surf.punctures)
    ]
    return FiniteDescription(surf, rho, local)


# ---------------------------------------------------------------------------
# the module on W = E + F_1 + ... + F_k


def _offsets(fd: FiniteDescription) -> list[int]:
    return list(np.cumsum([0, fd.n] + fd.dims))


def _operators(fd: FiniteDescription, fld) -> list[np.ndarray]:
    """Block operators on ``W`` generating the algebra whose submodules are subobjects."""
    off = _offsets(fd)
    N = off[-1]
    E = slice(off[0], off[1])
    Fs = [slice(off[a + 1], off[a + 2]) for a in range(len(fd.local))]
    ops = []

    def put(block, rows, cols):
        op = fld.zeros(N, N)
        op[rows, cols] = block
        return op

    for M in fd.rho.values():
        ops.append(put(M, E, E))
        if fd.n:
            ops.append(put(fld.inv(M), E, E))
    for loc, Fa in zip(fd.local, Fs):
        if loc.dim == 0:
            continue
        ops.append(put(loc.tauF, Fa, Fa))
        ops.append(put(fld.inv(loc.tauF), Fa, Fa))
        if fd.n:
            ops.append(put(loc.C, Fa, E))
            ops.append(put(loc.V, E, Fa))
    # projections onto the summands make every submodule split along W
    for sl in [E] + Fs:
        if sl.stop > sl.start:
            ops.append(put(fld.eye(sl.stop - sl.start), sl, sl))
    return ops


class _Span:
    """Incrementally grown subspace with a membership test."""

    def __init__(self, fld, N: int, thresh: float):
        self.fld = fld
        self.N = N
        self.thresh = thresh
        self.vecs: list[np.ndarray] = []
        self.pivots: list[int] = []

    @property
    def dim(self) -> int:
        return len(self.vecs)

    def add(self, v: np.ndarray) -> np.ndarray | None:
        """Add ``v``; returns the new basis vector or ``None`` if ``v`` is in the span."""
        if self.fld.exact:
            v = v.copy()
            # QQ_I elements compare unequal to the int 0, so test truthiness
            for q, p in zip(self.vecs, self.pivots):
                if v[p]:
                    v = v - q * v[p]
            nz = [i for i, e in enumerate(v) if e]
            if not nz:
                return None
            p = nz[0]
            v = np.array([e / v[p] for e in v], dtype=object)
            # keep the basis reduced so pivot columns are unit vectors
            for i, q in enumerate(self.vecs):
                if q[p]:
                    self.vecs[i] = q - v * q[p]
            self.vecs.append(v)
            self.pivots.append(p)
            return v
        r = v.astype(complex)
        for _ in range(2):
            for q in self.vecs:
                r = r - q * np.vdot(q, r)
        nr = float(np.linalg.norm(r))
        if nr <= self.thresh:
            return None
        q = r / nr
        self.vecs.append(q)
        return q

    def basis(self) -> np.ndarray:
        if not self.vecs:
            return self.fld.zeros(self.N, 0)
        return np.array(self.vecs).T


def _spin_space(ops, seeds: np.ndarray, fld, thresh: float) -> np.ndarray:
    N = seeds.shape[0]
    span = _Span(fld, N, thresh)
    queue = []
    for v in seeds.T:
        if not fld.exact:
            nv = float(np.linalg.norm(v))
            if nv <= thresh:
                continue
            v = v / nv
        q = span.add(v)
        if q is not None:
            queue.append(q)
    while queue and span.dim < N:
        q = queue.pop()
        for op in ops:
            w = span.add(op @ q)
            if w is not None:
                queue.append(w)
    return span.basis()


@dataclass(eq=False)
class SubObject:
    """Subspaces of ``E`` and of every ``F_a``, given by column bases."""

    E: np.ndarray
    F: list[np.ndarray]

    @property
    def dims(self) -> tuple[int, list[int]]:
        return self.E.shape[1], [B.shape[1] for B in self.F]

    @property
    def total_dim(self) -> int:
        return self.E.shape[1] + sum(B.shape[1] for B in self.F)


def _split(fd: FiniteDescription, basis: np.ndarray, fld) -> SubObject:
    off = _offsets(fd)
    parts = [fld.colspace(basis[off[i]:off[i + 1], :]) for i in range(len(off) - 1)]
    return SubObject(parts[0], parts[1:])


def _threshold(fd, fld, tol) -> float:
    return 0.0 if fld.exact else tol * _scale(fd, fld)


def spin(fd: FiniteDescription, seeds, mode: str = "numeric", tol: float = DEFAULT_TOL) -> SubObject:
    """Smallest subobject containing the seed vectors of ``W``.

    ``seeds`` is a vector of length ``dim W`` or a matrix with one seed per
    column; ``W`` lists the coordinates of ``E`` first, then ``F_1``, ...
    """
    fld = get_field(mode, tol)
    fd = coerce_fd(fd, fld)
    S = fld.asarray(seeds)
    if S.ndim == 1:
        S = S.reshape(-1, 1)
    if S.shape[0] != fd.total_dim:
        raise ValueError(f"seeds must have {fd.total_dim} rows")
    basis = _spin_space(_operators(fd, fld), S, fld, _threshold(fd, fld, tol))
    return _split(fd, basis, fld)


def _change_basis(fd: FiniteDescription, fld, bases):
    """Matrices of ``fd`` in new bases (list: E basis, then one per puncture)."""
    inv = [fld.inv(B) if B.shape[0] else B for B in bases]
    BE, iE = bases[0], inv[0]
    rho = {x: fld.mm(fld.mm(iE, M), BE) for x, M in fd.rho.items()}
    local = []
    for loc, B, iB in zip(fd.local, bases[1:], inv[1:]):
        local.append(
            PunctureData(fld.mm(fld.mm(iB, loc.tauF), B), fld.mm(fld.mm(iB, loc.C), BE), fld.mm(fld.mm(iE, loc.V), B))
        )
    return rho, local


def _full_bases(fd, sub: SubObject, fld):
    out = []
    for S, dim in zip([sub.E] + sub.F, [fd.n] + fd.dims):
        out.append(np.hstack([S, fld.complete_basis(S, dim)]) if dim else fld.zeros(0, 0))
    return out


def _corner(M, r0, c0, lower: bool):
    return M[r0:, c0:] if lower else M[:r0, :c0]


def _piece(fd: FiniteDescription, sub: SubObject, fld, lower: bool) -> FiniteDescription:
    bases = _full_bases(fd, sub, fld)
    rho, local = _change_basis(fd, fld, bases)
    r = sub.E.shape[1]
    rs = [B.shape[1] for B in sub.F]
    rho2 = {x: _corner(M, r, r, lower) for x, M in rho.items()}
    local2 = [
        PunctureData(_corner(l.tauF, ra, ra, lower), _corner(l.C, ra, r, lower), _corner(l.V, r, ra, lower))
        for l, ra in zip(local, rs)
    ]
    return FiniteDescription(fd.surface, rho2, local2)


def restrict(fd: FiniteDescription, sub: SubObject, mode: str = "numeric") -> FiniteDescription:
    """The subobject as a finite description (in the coordinates of its bases)."""
    fld = get_field(mode)
    return _piece(coerce_fd(fd, fld), sub, fld, lower=False)


def quotient(fd: FiniteDescription, sub: SubObject, mode: str = "numeric") -> FiniteDescription:
    fld = get_field(mode)
    return _piece(coerce_fd(fd, fld), sub, fld, lower=True)


# ---------------------------------------------------------------------------
# Jordan-Hoelder


class JHUnresolved(RuntimeError):
    """The simplicity search exhausted its budget without a certificate."""


@dataclass
class JHResult:
    factors: list[FiniteDescription]
    status: str
    series: list[SubObject] = field(default_factory=list)

    @property
    def resolved(self) -> bool:
        return self.status == "ok"


def _random_element(ops, fld, rng, products: int = 4):
    N = ops[0].shape[0]
    A = fld.zeros(N, N)
    for op, c in zip(ops, fld.random(rng, (len(ops),))):
        A = A + op * c
    for _ in range(products):
        i, j = rng.integers(0, len(ops), size=2)
        A = A + fld.mm(ops[i], ops[j]) * fld.random(rng, (1,))[0]
    return A


def _proper(basis, N) -> bool:
    return 0 < basis.shape[1] < N


def _find_submodule(fd, fld, tol, rng, attempts: int):
    """A proper nonzero invariant subspace of ``W``, or ``None`` with a simplicity flag."""
    ops = _operators(fd, fld)
    N = fd.total_dim
    if N <= 1:
        return None, True
    thresh = _threshold(fd, fld, tol)
    eye = fld.eye(N)
    for i in range(N):
        B = _spin_space(ops, eye[:, i:i + 1], fld, thresh)
        if _proper(B, N):
            return B, False
    for _ in range(16):
        B = _spin_space(ops, fld.random(rng, (N, 1)), fld, thresh)
        if _proper(B, N):
            return B, False
    dual = [op.T for op in ops]
    for _ in range(attempts):
        A = _random_element(ops, fld, rng)
        for K, Kt, certified in fld.kernel_candidates(A, rng):
            for v in K.T:
                B = _spin_space(ops, v.reshape(-1, 1), fld, thresh)
                if _proper(B, N):
                    return B, False
            if not certified or K.shape[1] == 0 or Kt.shape[1] == 0:
                continue
            U = _spin_space(dual, Kt[:, :1], fld, thresh)
            if _proper(U, N):
                # the annihilator of a dual submodule is a submodule
                return fld.nullspace(U.T), False
            # a vector of a minimal kernel spins to everything in both the
            # module and its dual: the module is simple
            return None, True
    return None, False


def _lift(fd, sub: SubObject, fld, series_q: list[SubObject]) -> list[SubObject]:
    """Map subobjects of the quotient by ``sub`` back to subobjects containing ``sub``."""
    bases = _full_bases(fd, sub, fld)
    out = []
    for q in series_q:
        parts = []
        for S, B, Q in zip([sub.E] + sub.F, bases, [q.E] + q.F):
            comp = B[:, S.shape[1]:]
            parts.append(np.hstack([S, fld.mm(comp, Q)]) if B.shape[0] else S)
        out.append(SubObject(parts[0], parts[1:]))
    return out


def _push(sub_of_sub: list[SubObject], sub: SubObject, fd, fld) -> list[SubObject]:
    """Express subobjects of ``restrict(fd, sub)`` in the coordinates of ``fd``."""
    out = []
    for s in sub_of_sub:
        parts = [fld.mm(B, X) if B.shape[0] else X for B, X in zip([sub.E] + sub.F, [s.E] + s.F)]
        out.append(SubObject(parts[0], parts[1:]))
    return out


def _jh(fd, fld, tol, rng, attempts):
    if fd.total_dim == 0:
        return [], "ok", []
    basis, simple = _find_submodule(fd, fld, tol, rng, attempts)
    if basis is None:
        full = SubObject(fld.eye(fd.n), [fld.eye(d) for d in fd.dims])
        return [fd], ("ok" if simple else "unresolved"), [full]
    sub = _split(fd, basis, fld)
    S = _piece(fd, sub, fld, lower=False)
    Q = _piece(fd, sub, fld, lower=True)
    fs, st1, ser_s = _jh(S, fld, tol, rng, attempts)
    fq, st2, ser_q = _jh(Q, fld, tol, rng, attempts)
    series = _push(ser_s, sub, fd, fld) + _lift(fd, sub, fld, ser_q)
    status = "ok" if st1 == st2 == "ok" else "unresolved"
    return fs + fq, status, series


def jordan_holder(
    fd: FiniteDescription,
    mode: str = "exact",
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    attempts: int = 8,
    max_dim: int = 12,
) -> JHResult:
    """Composition factors of ``fd`` and a composition series.

    The factors are found by spinning standard and random vectors and the
    kernels of random algebra elements. A factor is declared simple only
    with a certificate: some irreducible factor ``f`` of the characteristic
    polynomial of a random algebra element has ``dim ker f(A) = deg f`` and
    a kernel vector spins to the whole module, and likewise for the dual
    module. Without a certificate after ``attempts`` random elements the
    status is ``"unresolved"``.

    ``series`` lists the nonzero terms of the composition series as
    subobjects of ``fd``.
    """
    fld = get_field(mode, tol)
    fd = coerce_fd(fd, fld)
    if fd.n > max_dim:
        raise ValueError(f"dim E = {fd.n} exceeds the bound {max_dim}")
    factors, status, series = _jh(fd, fld, tol, np.random.default_rng(seed), attempts)
    return JHResult(factors, status, series)


def fd_isomorphic(
    fd1: FiniteDescription,
    fd2: FiniteDescription,
    mode: str = "numeric",
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    attempts: int = 32,
):
    """Isomorphism ``(h, [h_a])`` from ``fd1`` to ``fd2``, or ``None``.

    The witness satisfies ``h rho1 = rho2 h``, ``h_a tauF1_a = tauF2_a h_a``,
    ``h_a C1_a = C2_a h`` and ``h V1_a = V2_a h_a``.
    """
    fld = get_field(mode, tol)
    fd1, fd2 = coerce_fd(fd1, fld), coerce_fd(fd2, fld)
    if fd1.surface != fd2.surface:
        raise ValueError("descriptions live over different surfaces")
    if fd1.n != fd2.n or fd1.dims != fd2.dims:
        return None
    n = fd1.n
    In = fld.eye(n)
    eqs = [[(In, 0, fd1.rho[x]), (-fd2.rho[x], 0, In)] for x in fd1.surface.labels]
    for a, (l1, l2) in enumerate(zip(fd1.local, fd2.local)):
        Ia = fld.eye(l1.dim)
        i = a + 1
        eqs += [
            [(Ia, i, l1.tauF), (-l2.tauF, i, Ia)],
            [(Ia, i, l1.C), (-l2.C, 0, In)],
            [(In, 0, l1.V), (-l2.V, i, Ia)],
        ]
    if not fld.exact:
        # rescale so the nullspace threshold is relative to the data
        s = _scale(fd1, fld)
        eqs = [[(L, i, R / s) for L, i, R in eq] for eq in eqs]
    shapes = [(n, n)] + [(d, d) for d in fd1.dims]
    basis = intertwiner_basis(fld, shapes, eqs)
    w = find_invertible(fld, basis, shapes, np.random.default_rng(seed), attempts)
    if w is None:
        return None
    return w[0], list(w[1:])


def s_equivalent(
    fd1: FiniteDescription,
    fd2: FiniteDescription,
    mode: str = "exact",
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> bool:
    """True iff the Jordan-Hoelder factors agree up to isomorphism with multiplicity.

    Raises :class:`JHUnresolved` when either decomposition is unresolved.
    """
    if fd1.surface != fd2.surface:
        raise ValueError("descriptions live over different surfaces")
    if fd1.n != fd2.n or fd1.dims != fd2.dims:
        return False
    jh1 = jordan_holder(fd1, mode, tol, seed)
    jh2 = jordan_holder(fd2, mode, tol, seed)
    for jh in (jh1, jh2):
        if not jh.resolved:
            raise JHUnresolved("Jordan-Hoelder decomposition is unresolved")
    pool = list(jh2.factors)
    for f in jh1.factors:
        for i, g in enumerate(pool):
            if f.n == g.n and f.dims == g.dims and fd_isomorphic(f, g, mode, tol, seed) is not None:
                del pool[i]
                break
        else:
            return False
    return not pool


def degenerate_family(
    fd: FiniteDescription,
    series: Sequence[SubObject],
    tau,
    mode: str = "numeric",
    tol: float = DEFAULT_TOL,
) -> FiniteDescription:
    """Rescale ``fd`` along an increasing chain of subobjects by ``tau``.

    In a basis adapted to the chain, an entry from level ``a`` to level
    ``b <= a`` is multiplied by ``tau^(a - b)``. For ``tau != 0`` this is
    conjugation by ``diag(tau^level)``; at ``tau = 0`` only the diagonal
    blocks survive, giving the associated graded. The result is expressed in
    the original coordinates.
    """
    fld = get_field(mode, tol)
    fd = coerce_fd(fd, fld)
    dims = [fd.n] + fd.dims
    chain = list(series)
    levels_all = []
    bases = []
    for blk, dim in enumerate(dims):
        cols, levels = [], []
        prev = fld.zeros(dim, 0)
        for lev, sub in enumerate(chain, start=1):
            if dim == 0:
                break
            S = fld.asarray(([sub.E] + sub.F)[blk]).reshape(dim, -1)
            if fld.rank(np.hstack([S, prev])) != fld.rank(S):
                raise ValueError("the chain of subobjects is not increasing")
            extra = fld.complete_basis(prev, dim)
            # the part of S outside prev, written in a complement of prev
            coords = fld.solve(np.hstack([prev, extra]), S) if S.shape[1] else fld.zeros(dim, 0)
            new = fld.colspace(fld.mm(extra, coords[prev.shape[1]:, :]))
            if new.shape[1]:
                cols.append(new)
                levels += [lev] * new.shape[1]
            prev = np.hstack([prev, new])
        if dim and prev.shape[1] < dim:
            cols.append(fld.complete_basis(prev, dim))
            levels += [len(chain) + 1] * (dim - prev.shape[1])
        bases.append(np.hstack(cols) if cols else fld.zeros(dim, 0))
        levels_all.append(np.array(levels, dtype=int))
    rho, local = _change_basis(fd, fld, bases)
    scale = _scale(fd, fld)

    def rescale(M, lt, ls):
        if M.size == 0:
            return M
        expo = ls[None, :] - lt[:, None]
        bad = expo < 0
        if fld.exact:
            if any(bool(e) for e in M[bad]):
                raise ValueError("the chain is not made of subobjects")
        elif bad.any() and np.max(np.abs(M[bad])) > tol * scale * 1e3:
            raise ValueError("the chain is not made of subobjects")
        out = fld.zeros(*M.shape)
        t = fld.scalar(tau)
        for idx in np.ndindex(M.shape):
            e = expo[idx]
            if e == 0:
                out[idx] = M[idx]
            elif e > 0 and t:
                out[idx] = M[idx] * t**int(e)
        return out

    lE = levels_all[0]
    rho = {x: rescale(M, lE, lE) for x, M in rho.items()}
    new_local = []
    for loc, la in zip(local, levels_all[1:]):
        new_local.append(PunctureData(rescale(loc.tauF, la, la), rescale(loc.C, la, lE), rescale(loc.V, lE, la)))
    graded_fd = FiniteDescription(fd.surface, rho, new_local)
    inv = [fld.inv(B) if B.shape[0] else B for B in bases]
    rho_o, local_o = _change_basis(graded_fd, fld, inv)
    return FiniteDescription(fd.surface, rho_o, local_o)
