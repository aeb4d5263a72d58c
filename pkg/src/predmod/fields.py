"""Scalar backends: floating complex and exact Gaussian rationals.

Both backends store matrices as numpy arrays (``complex`` dtype for the
numeric field, ``object`` arrays of ``QQ_I`` elements for the exact one), so
algorithms can use ``@``, slicing and stacking uniformly. Only the
rank-sensitive primitives differ and live on the field object.
"""
from __future__ import annotations

import warnings
from fractions import Fraction

import numpy as np
import sympy
from sympy import QQ_I
from sympy.polys.matrices import DomainMatrix

from .matfun import DEFAULT_TOL, NumericalAmbiguityWarning

__all__ = ["NumericField", "ExactField", "get_field", "parse_rational", "qq"]


def parse_rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    if hasattr(x, "numerator") and hasattr(x, "denominator"):
        return Fraction(int(x.numerator), int(x.denominator))
    raise TypeError(f"cannot read {x!r} as a rational number")


def qq(x):
    """Convert a scalar to a ``QQ_I`` element."""
    if isinstance(x, QQ_I.dtype):
        return x
    if isinstance(x, (list, tuple)) and len(x) == 2:
        re, im = (parse_rational(v) for v in x)
    elif isinstance(x, complex):
        re, im = Fraction(x.real), Fraction(x.imag)
    elif isinstance(x, sympy.Basic):
        return QQ_I.from_sympy(x)
    else:
        re, im = parse_rational(x), Fraction(0)
    return QQ_I(sympy.Rational(re.numerator, re.denominator), sympy.Rational(im.numerator, im.denominator))


def _as_complex(e) -> complex:
    if isinstance(e, QQ_I.dtype):
        return complex(float(e.x), float(e.y))
    return complex(e)


class NumericField:
    """Floating complex arithmetic with tolerance-based rank decisions."""

    exact = False
    name = "numeric"

    def __init__(self, tol: float = DEFAULT_TOL):
        if tol <= 0:
            raise ValueError("tol must be positive")
        self.tol = tol

    # construction -------------------------------------------------------
    def asarray(self, x) -> np.ndarray:
        a = np.asarray(x)
        if a.dtype == object:
            # exact entries, e.g. a series computed in exact mode
            a = np.array([_as_complex(e) for e in a.reshape(-1)], dtype=complex).reshape(a.shape)
        else:
            a = a.astype(complex)
        if a.ndim == 1 and a.size == 0:
            a = a.reshape(0, 0)
        return a

    def zeros(self, r: int, c: int) -> np.ndarray:
        return np.zeros((r, c), dtype=complex)

    def eye(self, n: int) -> np.ndarray:
        return np.eye(n, dtype=complex)

    def scalar(self, x):
        return complex(x)

    def mm(self, a, b):
        return a @ b

    def random(self, rng: np.random.Generator, shape) -> np.ndarray:
        return rng.normal(size=shape) + 1j * rng.normal(size=shape)

    def to_complex(self, a) -> np.ndarray:
        return np.asarray(a, dtype=complex)

    # rank-sensitive primitives -----------------------------------------
    def _threshold(self, s: np.ndarray, scale: float | None = None) -> float:
        top = s[0] if s.size else 0.0
        return self.tol * max(1.0, top if scale is None else scale)

    def _flag(self, s, thresh):
        band = s[(s > thresh) & (s < 10 * thresh)]
        if band.size:
            warnings.warn(
                f"singular value {band[0]:.3e} inside rank ambiguity band ({thresh:.1e}, {10 * thresh:.1e})",
                NumericalAmbiguityWarning,
                stacklevel=3,
            )

    def rank(self, a) -> int:
        if a.size == 0:
            return 0
        s = np.linalg.svd(a, compute_uv=False)
        thresh = self._threshold(s)
        self._flag(s, thresh)
        return int(np.sum(s > thresh))

    def colspace(self, a) -> np.ndarray:
        r, c = a.shape
        if a.size == 0:
            return np.zeros((r, 0), dtype=complex)
        U, s, _ = np.linalg.svd(a, full_matrices=False)
        thresh = self._threshold(s)
        self._flag(s, thresh)
        return U[:, : int(np.sum(s > thresh))]

    def nullspace(self, a, scale: float | None = None) -> np.ndarray:
        r, c = a.shape
        if c == 0:
            return np.zeros((0, 0), dtype=complex)
        if r == 0:
            return np.eye(c, dtype=complex)
        _, s, Vh = np.linalg.svd(a, full_matrices=True)
        thresh = self._threshold(s, scale)
        self._flag(s, thresh)
        rank = int(np.sum(s > thresh))
        return Vh[rank:].conj().T

    def solve(self, basis, vecs) -> np.ndarray:
        """Coordinates X with ``basis @ X = vecs`` (basis has independent columns)."""
        if basis.shape[1] == 0:
            return np.zeros((0, vecs.shape[1]), dtype=complex)
        X, *_ = np.linalg.lstsq(basis, vecs, rcond=None)
        return X

    def inv(self, a) -> np.ndarray:
        return np.linalg.inv(a)

    def is_invertible(self, a) -> bool:
        if a.shape[0] != a.shape[1]:
            return False
        if a.shape[0] == 0:
            return True
        s = np.linalg.svd(a, compute_uv=False)
        return s[-1] > max(self.tol, 1e-7) * max(1.0, s[0])

    def is_zero(self, a, scale: float = 1.0) -> bool:
        return a.size == 0 or float(np.max(np.abs(a))) <= self.tol * max(1.0, scale)

    def residual(self, a) -> float:
        return float(np.linalg.norm(a)) if a.size else 0.0

    def complete_basis(self, sub, n: int) -> np.ndarray:
        """Columns extending ``sub`` (independent columns) to a basis of the ambient space."""
        k = sub.shape[1]
        if k == 0:
            return np.eye(n, dtype=complex)
        U, _, _ = np.linalg.svd(sub, full_matrices=True)
        return U[:, k:]

    def kernel_candidates(self, A, rng) -> list[tuple[np.ndarray, np.ndarray, bool]]:
        """Kernels of ``A - lambda`` and ``(A - lambda)^T`` per eigenvalue.

        The flag is True when ``lambda`` is a simple, well-isolated eigenvalue,
        so that both kernels are certainly 1-dimensional.
        """
        n = A.shape[0]
        if n == 0:
            return []
        ev = np.linalg.eigvals(A)
        scale = max(1.0, float(np.linalg.norm(A, 2)))
        out = []
        seen: list[complex] = []
        for lam in ev:
            if any(abs(lam - m) < 1e-6 * scale for m in seen):
                continue
            seen.append(lam)
            others = [m for m in ev if abs(lam - m) >= 1e-6 * scale]
            mult = len(ev) - len(others)
            isolated = all(abs(lam - m) > 1e-3 * scale for m in others)
            M = A - lam * np.eye(n)
            dim = max(1, int(np.sum(np.linalg.svd(M, compute_uv=False) <= 1e-7 * scale)))
            K = np.linalg.svd(M)[2][n - dim:].conj().T
            Kt = np.linalg.svd(M.T)[2][n - dim:].conj().T
            out.append((K, Kt, dim == 1 and mult == 1 and isolated))
        return out


class ExactField:
    """Exact arithmetic over the Gaussian rationals Q(i)."""

    exact = True
    name = "exact"
    tol = 0.0

    def asarray(self, x) -> np.ndarray:
        src = x if isinstance(x, np.ndarray) else np.array(x, dtype=object)
        if src.ndim == 1 and src.size == 0:
            return np.empty((0, 0), dtype=object)
        if src.dtype != object and np.iscomplexobj(src):
            src = src.astype(object)
        out = np.empty(src.shape, dtype=object)
        for idx in np.ndindex(src.shape):
            out[idx] = qq(src[idx])
        return out

    def zeros(self, r: int, c: int) -> np.ndarray:
        out = np.empty((r, c), dtype=object)
        out.fill(QQ_I.zero)
        return out

    def eye(self, n: int) -> np.ndarray:
        out = self.zeros(n, n)
        for i in range(n):
            out[i, i] = QQ_I.one
        return out

    def scalar(self, x):
        return qq(x)

    def mm(self, a, b):
        if a.shape[1] == 0:
            return self.zeros(a.shape[0], b.shape[1])
        return a @ b

    def random(self, rng: np.random.Generator, shape) -> np.ndarray:
        re = rng.integers(-3, 4, size=shape)
        im = rng.integers(-3, 4, size=shape)
        out = np.empty(shape, dtype=object)
        for idx in np.ndindex(*shape):
            out[idx] = QQ_I(int(re[idx]), int(im[idx]))
        return out

    def to_complex(self, a) -> np.ndarray:
        out = np.zeros(a.shape, dtype=complex)
        for idx in np.ndindex(a.shape):
            e = a[idx]
            out[idx] = complex(float(e.x), float(e.y))
        return out

    def _dm(self, a) -> DomainMatrix:
        return DomainMatrix([list(row) for row in a], a.shape, QQ_I)

    def _np(self, dm: DomainMatrix) -> np.ndarray:
        r, c = dm.shape
        out = self.zeros(r, c)
        for i, row in enumerate(dm.to_list()):
            for j, e in enumerate(row):
                out[i, j] = e
        return out

    def rank(self, a) -> int:
        if a.size == 0:
            return 0
        return self._dm(a).rank()

    def colspace(self, a) -> np.ndarray:
        r, c = a.shape
        if a.size == 0:
            return self.zeros(r, 0)
        _, pivots = self._dm(a).rref()
        return a[:, list(pivots)]

    def nullspace(self, a, scale=None) -> np.ndarray:
        r, c = a.shape
        if c == 0:
            return self.zeros(0, 0)
        if r == 0:
            return self.eye(c)
        ns = self._dm(a).nullspace()
        if ns.shape[0] == 0:
            return self.zeros(c, 0)
        return self._np(ns).T

    def solve(self, basis, vecs) -> np.ndarray:
        k = basis.shape[1]
        if k == 0:
            return self.zeros(0, vecs.shape[1])
        aug = np.hstack([basis, vecs])
        R, pivots = self._dm(aug).rref()
        if any(p >= k for p in pivots):
            raise ValueError("vectors are not in the span of the basis")
        Rn = self._np(R)
        return Rn[:k, k:]

    def inv(self, a) -> np.ndarray:
        return self._np(self._dm(a).inv())

    def is_invertible(self, a) -> bool:
        if a.shape[0] != a.shape[1]:
            return False
        if a.shape[0] == 0:
            return True
        return self._dm(a).rank() == a.shape[0]

    def is_zero(self, a, scale: float = 1.0) -> bool:
        return all(e == QQ_I.zero for e in a.flat)

    def residual(self, a) -> float:
        return float(np.linalg.norm(self.to_complex(a))) if a.size else 0.0

    def complete_basis(self, sub, n: int) -> np.ndarray:
        aug = np.hstack([sub, self.eye(n)])
        _, pivots = self._dm(aug).rref()
        k = sub.shape[1]
        return aug[:, [p for p in pivots if p >= k]]

    def charpoly_factors(self, A) -> list[tuple[list, int]]:
        """Irreducible factors over Q(i) of the characteristic polynomial."""
        z = sympy.Symbol("z")
        coeffs = self._dm(A).charpoly()
        poly = sympy.Poly([QQ_I.to_sympy(c) for c in coeffs], z, domain=QQ_I)
        _, facs = poly.factor_list()
        return [([qq(c) for c in f.all_coeffs()], e) for f, e in facs]

    def poly_eval(self, coeffs, A) -> np.ndarray:
        n = A.shape[0]
        out = self.zeros(n, n)
        for c in coeffs:
            out = self.mm(out, A) + self.eye(n) * c
        return out

    def kernel_candidates(self, A, rng) -> list[tuple[np.ndarray, np.ndarray, bool]]:
        """Kernels of ``f(A)`` and ``f(A)^T`` for each irreducible factor ``f``.

        The flag is True when the nullity equals ``deg f``.
        """
        out = []
        for coeffs, _ in self.charpoly_factors(A):
            M = self.poly_eval(coeffs, A)
            K = self.nullspace(M)
            out.append((K, self.nullspace(M.T), K.shape[1] == len(coeffs) - 1))
        return out


def get_field(mode: str, tol: float = DEFAULT_TOL):
    if mode == "exact":
        return ExactField()
    if mode == "numeric":
        return NumericField(tol)
    raise ValueError(f"unknown arithmetic mode {mode!r}")

