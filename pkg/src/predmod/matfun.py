"""Matrix functional calculus and spectral utilities.

Every analytic formula in the package goes through this module: the
monodromy exponential ``z -> exp(-2 pi i z)``, the gluing factor
``z -> (exp(-2 pi i z) - 1) / z``, their unnormalised counterparts, branch
logarithms of monodromy matrices, spectral projectors and the integer
resonance test on residue spectra.

Primary matrix functions are evaluated with a complex Schur decomposition,
reordered so that clustered eigenvalues are contiguous, followed by the block
Parlett recurrence. Diagonal blocks are handled by Taylor expansion about the
block mean.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

__all__ = [
    "DEFAULT_TOL",
    "CLUSTER_TOL",
    "FKINDS",
    "NumericalAmbiguityWarning",
    "BranchSection",
    "Cluster",
    "SpectralSplit",
    "ResonantPair",
    "ResonanceReport",
    "as_matrix",
    "apply_entire",
    "expm2pi",
    "phi_m2pi",
    "branch_log",
    "spectral_split",
    "resonance_report",
    "scalar_entire",
]

DEFAULT_TOL = 1e-9
# Eigenvalue clustering threshold (relative to max(1, ||A||_1)). Looser than
# DEFAULT_TOL because defective eigenvalues split at roughly sqrt(eps).
CLUSTER_TOL = 1e-6
# Blocking parameter for the Schur-Parlett recurrence.
PARLETT_DELTA = 0.1

TWO_PI_I = 2j * math.pi

# fkind -> scale c of the exponent; phi kinds compute (exp(c z) - 1) / z
FKINDS = {
    "expm2pi": (-TWO_PI_I, False),
    "phi_m2pi": (-TWO_PI_I, True),
    "exp_plain": (1.0 + 0j, False),
    "phi_plain": (1.0 + 0j, True),
}

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(128)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


class NumericalAmbiguityWarning(UserWarning):
    """A rank or clustering decision fell inside the ambiguity band."""


def as_matrix(A, *, square: bool = False, name: str = "matrix") -> np.ndarray:
    """Coerce ``A`` to a finite complex 2-D array."""
    M = np.array(A, dtype=complex)
    if M.ndim == 1 and M.size == 0:
        M = M.reshape(0, 0)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {M.shape}")
    if square and M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def _scale(A: np.ndarray) -> float:
    return max(1.0, float(np.linalg.norm(A, 1))) if A.size else 1.0


# ---------------------------------------------------------------------------
# scalar kernels


def scalar_entire(z: complex, fkind: str) -> complex:
    """Evaluate one of the four scalar functions at ``z``."""
    c, is_phi = FKINDS[fkind]
    w = c * z
    if not is_phi:
        return complex(np.exp(w))
    if w == 0:
        return complex(c)
    return complex(c * np.expm1(w) / w)


def _taylor_coefficients(sigma: complex, fkind: str, count: int) -> np.ndarray:
    """f^(k)(sigma)/k! for k < count."""
    c, is_phi = FKINDS[fkind]
    k = np.arange(count)
    log_fact = np.array([math.lgamma(j + 1) for j in range(count)])
    if not is_phi:
        # c^k e^{c sigma} / k!
        with np.errstate(under="ignore"):
            mags = np.exp(k * math.log(abs(c)) - log_fact)
        return mags * (c / abs(c)) ** k * np.exp(c * sigma)
    # phi(z) = c * int_0^1 e^{c z u} du, so phi^(k)(sigma) = c^{k+1} int u^k e^{c sigma u} du
    w = c * sigma
    integrand = np.exp(w * _GL_NODES)[None, :] * _GL_NODES[None, :] ** k[:, None]
    moments = integrand @ _GL_WEIGHTS
    with np.errstate(under="ignore"):
        mags = np.exp((k + 1) * math.log(abs(c)) - log_fact)
    return mags * (c / abs(c)) ** (k + 1) * moments


def _taylor_block(T: np.ndarray, fkind: str) -> np.ndarray:
    m = T.shape[0]
    if m == 1:
        return np.array([[scalar_entire(T[0, 0], fkind)]])
    sigma = np.trace(T) / m
    N = T - sigma * np.eye(m)
    max_terms = 400
    coeffs = _taylor_coefficients(sigma, fkind, max_terms)
    F = coeffs[0] * np.eye(m, dtype=complex)
    P = np.eye(m, dtype=complex)
    small = 0
    for k in range(1, max_terms):
        P = P @ N
        term = coeffs[k] * P
        F = F + term
        if k >= m and np.linalg.norm(term, 1) <= 1e-17 * max(1.0, np.linalg.norm(F, 1)):
            small += 1
            if small >= 2:
                break
        else:
            small = 0
        if not np.any(P):
            break
    return F


# ---------------------------------------------------------------------------
# Schur reordering and the block Parlett recurrence


def _single_linkage(values: Sequence[complex], threshold: float) -> list[int]:
    """Cluster labels: values closer than ``threshold`` (transitively) share a label."""
    n = len(values)
    labels = list(range(n))

    def find(i):
        while labels[i] != i:
            labels[i] = labels[labels[i]]
            i = labels[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) < threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    labels[max(ri, rj)] = min(ri, rj)
    roots = [find(i) for i in range(n)]
    order = {r: idx for idx, r in enumerate(dict.fromkeys(roots))}
    return [order[r] for r in roots]


def _swap_adjacent(T: np.ndarray, Q: np.ndarray, k: int) -> None:
    """Swap diagonal entries k, k+1 of upper-triangular T in place, updating Q."""
    t11, t22, t12 = T[k, k], T[k + 1, k + 1], T[k, k + 1]
    x = np.array([t12, t22 - t11])
    nx = np.linalg.norm(x)
    if nx == 0:
        return
    x = x / nx
    Z = np.array([[x[0], -np.conj(x[1])], [x[1], np.conj(x[0])]])
    T[k:k + 2, :] = Z.conj().T @ T[k:k + 2, :]
    T[:, k:k + 2] = T[:, k:k + 2] @ Z
    Q[:, k:k + 2] = Q[:, k:k + 2] @ Z
    T[k + 1, k] = 0.0
    T[k, k], T[k + 1, k + 1] = t22, t11


def _ordered_schur(A: np.ndarray, labeler: Callable[[np.ndarray], list[int]]):
    """Complex Schur form with equal labels made contiguous.

    Returns (T, Q, blocks) where blocks is a list of (start, stop, label).
    """
    T, Q = sla.schur(A, output="complex")
    T = np.triu(T)
    labels = labeler(np.diag(T).copy())
    n = len(labels)
    # bubble sort by label using adjacent swaps
    for sweep in range(n):
        swapped = False
        for k in range(n - 1):
            if labels[k] > labels[k + 1]:
                _swap_adjacent(T, Q, k)
                labels[k], labels[k + 1] = labels[k + 1], labels[k]
                swapped = True
        if not swapped:
            break
    blocks = []
    start = 0
    for k in range(1, n + 1):
        if k == n or labels[k] != labels[start]:
            blocks.append((start, k, labels[start]))
            start = k
    return T, Q, blocks


def _block_parlett(T: np.ndarray, blocks, diag_fun) -> np.ndarray:
    n = T.shape[0]
    F = np.zeros((n, n), dtype=complex)
    sl = [slice(a, b) for a, b, _ in blocks]
    for j, (a, b, lab) in enumerate(blocks):
        F[sl[j], sl[j]] = diag_fun(T[sl[j], sl[j]], lab)
    nb = len(blocks)
    for j in range(1, nb):
        for i in range(j - 1, -1, -1):
            Si, Sj = sl[i], sl[j]
            rhs = F[Si, Si] @ T[Si, Sj] - T[Si, Sj] @ F[Sj, Sj]
            for k in range(i + 1, j):
                Sk = sl[k]
                rhs += F[Si, Sk] @ T[Sk, Sj] - T[Si, Sk] @ F[Sk, Sj]
            F[Si, Sj] = sla.solve_sylvester(T[Si, Si], -T[Sj, Sj], rhs)
    return F


def _primary_function(A, labeler, diag_fun) -> np.ndarray:
    if A.shape[0] == 0:
        return A.copy()
    T, Q, blocks = _ordered_schur(A, labeler)
    F = _block_parlett(T, blocks, diag_fun)
    return Q @ F @ Q.conj().T


# ---------------------------------------------------------------------------
# public operations


def apply_entire(A, fkind: str) -> np.ndarray:
    """Primary matrix function ``f(A)`` for one of the four entire kernels.

    ``fkind`` is one of ``expm2pi`` (exp(-2 pi i z)), ``phi_m2pi``
    ((exp(-2 pi i z) - 1)/z), ``exp_plain`` (exp z) and ``phi_plain``
    ((exp z - 1)/z). The phi kernels take the values -2 pi i and 1 at z = 0.
    """
    if fkind not in FKINDS:
        raise ValueError(f"unknown fkind {fkind!r}; expected one of {sorted(FKINDS)}")
    A = as_matrix(A, square=True, name="A")
    return _primary_function(
        A,
        lambda ev: _single_linkage(ev, PARLETT_DELTA),
        lambda block, _lab: _taylor_block(block, fkind),
    )


def expm2pi(A) -> np.ndarray:
    return apply_entire(A, "expm2pi")


def phi_m2pi(A) -> np.ndarray:
    return apply_entire(A, "phi_m2pi")


@dataclass(frozen=True)
class BranchSection:
    """Set-theoretic section of ``z -> exp(-2 pi i z)``.

    The image is the half-open strip ``anchor <= Re z < anchor + 1``.
    """

    anchor: float = 0.0
    kind: str = "half-open-strip"

    def __post_init__(self):
        if self.kind != "half-open-strip":
            raise ValueError(f"unsupported section kind {self.kind!r}")
        if not math.isfinite(self.anchor):
            raise ValueError("section anchor must be finite")

    @property
    def fixes_one(self) -> bool:
        """True when sigma(1) = 0, i.e. 0 is the only integer in the strip."""
        return -1.0 < self.anchor <= 0.0

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return self.anchor - slack <= z.real < self.anchor + 1.0 + slack

    def __call__(self, mu: complex, snap: float = 0.0) -> complex:
        """``sigma(mu)``; values within ``snap`` of the open edge go to the closed one."""
        mu = complex(mu)
        if mu == 0:
            raise ValueError("sigma is undefined at 0")
        z = complex(-np.angle(mu) / (2 * math.pi), math.log(abs(mu)) / (2 * math.pi))
        shift = math.ceil(self.anchor - z.real)
        z += shift
        if z.real >= self.anchor + 1.0 - snap:
            z -= 1.0
        return z


def branch_log(M, section: BranchSection = BranchSection(), tol: float = DEFAULT_TOL) -> np.ndarray:
    """Logarithm ``L`` of ``M`` with ``expm2pi(L) = M`` and spectrum in the strip.

    ``L`` is a primary function of ``M``. Eigenvalues of ``M`` are mapped
    through ``section`` individually and clustered in the logarithmic plane,
    so nearby eigenvalues on opposite sides of the cut get distinct branches.
    """
    M = as_matrix(M, square=True, name="M")
    n = M.shape[0]
    if n == 0:
        return M.copy()
    ev = np.linalg.eigvals(M)
    floor = tol * _scale(M)
    if np.min(np.abs(ev)) <= floor:
        raise np.linalg.LinAlgError(
            f"matrix is singular or too close to singular for a logarithm "
            f"(min |eigenvalue| = {np.min(np.abs(ev)):.3e})"
        )

    cluster_sigma: dict[int, complex] = {}

    def labeler(diag):
        # perturbed eigenvalues just across the closed edge belong on it
        sig = [section(mu, snap=CLUSTER_TOL) for mu in diag]
        labels = _single_linkage(sig, PARLETT_DELTA)
        for lab in set(labels):
            members = [s for s, l in zip(sig, labels) if l == lab]
            cluster_sigma[lab] = sum(members) / len(members)
        return labels

    def diag_fun(block, lab):
        if block.shape[0] == 1:
            return np.array([[cluster_sigma[lab]]])
        s0 = cluster_sigma[lab]
        mu0 = np.exp(-TWO_PI_I * s0)
        return s0 * np.eye(block.shape[0]) + (1j / (2 * math.pi)) * sla.logm(block / mu0)

    L = _primary_function(M, labeler, diag_fun)
    return L


@dataclass
class Cluster:
    value: complex
    multiplicity: int
    basis: np.ndarray
    projector: np.ndarray


@dataclass
class SpectralSplit:
    clusters: list[Cluster]
    warnings: list[str] = field(default_factory=list)

    def find(self, alpha: complex, tol: float) -> Cluster | None:
        best = None
        for c in self.clusters:
            d = abs(c.value - alpha)
            if d < tol and (best is None or d < abs(best.value - alpha)):
                best = c
        return best


def spectral_split(A, tol: float = CLUSTER_TOL) -> SpectralSplit:
    """Generalized eigenspace decomposition with spectral projectors.

    Eigenvalues within ``tol * max(1, ||A||_1)`` of each other (transitively)
    form one cluster. Clusters whose separation is less than ten times that
    threshold are reported in ``warnings``.
    """
    A = as_matrix(A, square=True, name="A")
    n = A.shape[0]
    if n == 0:
        return SpectralSplit([])
    thresh = tol * _scale(A)
    T, Q, blocks = _ordered_schur(A, lambda ev: _single_linkage(ev, thresh))
    diag = np.diag(T)
    clusters = []
    for a, b, lab in blocks:
        P_tri = _block_parlett(
            T, blocks, lambda blk, l, lab=lab: np.eye(blk.shape[0]) if l == lab else np.zeros_like(blk)
        )
        P = Q @ P_tri @ Q.conj().T
        m = b - a
        U, _, _ = np.linalg.svd(P)
        clusters.append(Cluster(complex(np.mean(diag[a:b])), m, U[:, :m], P))
    notes = []
    for i in range(len(clusters)):
        for j in range(i + 1, len(clusters)):
            d = abs(clusters[i].value - clusters[j].value)
            if d < 10 * thresh:
                msg = (
                    f"eigenvalue clusters {clusters[i].value:.6g} and {clusters[j].value:.6g} "
                    f"are {d:.3e} apart, within the ambiguity band ({thresh:.1e}, {10 * thresh:.1e})"
                )
                notes.append(msg)
                warnings.warn(msg, NumericalAmbiguityWarning, stacklevel=2)
    return SpectralSplit(clusters, notes)


@dataclass(frozen=True)
class ResonantPair:
    hi: complex
    lo: complex
    k: int


@dataclass
class ResonanceReport:
    good: bool
    pairs: list[ResonantPair]


def resonance_report(A, tol: float = CLUSTER_TOL) -> ResonanceReport:
    """Report pairs of eigenvalue clusters differing by a nonzero integer."""
    A = as_matrix(A, square=True, name="A")
    split = spectral_split(A, tol)
    thresh = tol * _scale(A)
    pairs = []
    vals = [c.value for c in split.clusters]
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            d = vals[i] - vals[j]
            k = round(d.real)
            if k != 0 and abs(d - k) < thresh:
                hi, lo = (vals[i], vals[j]) if k > 0 else (vals[j], vals[i])
                pairs.append(ResonantPair(hi, lo, abs(k)))
    pairs.sort(key=lambda p: (p.k, p.lo.real, p.lo.imag))
    return ResonanceReport(not pairs, pairs)
