"""Linear intertwiner systems and the search for invertible solutions."""
from __future__ import annotations

import warnings

import numpy as np

from .matfun import NumericalAmbiguityWarning


def _kron(field, L, R):
    if field.exact:
        out = field.zeros(L.shape[0] * R.shape[0], L.shape[1] * R.shape[1])
        for i in range(L.shape[0]):
            for j in range(L.shape[1]):
                out[i * R.shape[0]:(i + 1) * R.shape[0], j * R.shape[1]:(j + 1) * R.shape[1]] = R * L[i, j]
        return out
    return np.kron(L, R)


def intertwiner_basis(field, shapes, equations):
    """Basis of solutions of a homogeneous system of matrix equations.

    ``shapes`` lists the unknown block shapes ``(p_i, q_i)``. Each equation is
    a list of terms ``(L, i, R)`` standing for ``L @ X_i @ R``; the terms of
    one equation are summed and set to zero. Returns a list of tuples of
    matrices, one tuple per basis vector.
    """
    sizes = [p * q for p, q in shapes]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    total = int(offsets[-1])
    rows = []
    for eq in equations:
        block = None
        for L, i, R in eq:
            # row-major vec(L X R) = kron(L, R^T) vec(X)
            K = _kron(field, L, R.T)
            if block is None:
                block = field.zeros(K.shape[0], total)
            block[:, offsets[i]:offsets[i + 1]] = block[:, offsets[i]:offsets[i + 1]] + K
        if block is not None and block.shape[0]:
            rows.append(block)
    system = np.vstack(rows) if rows else field.zeros(0, total)
    null = field.nullspace(system)
    basis = []
    for c in range(null.shape[1]):
        vec = null[:, c]
        basis.append(tuple(vec[offsets[i]:offsets[i + 1]].reshape(shapes[i]) for i in range(len(shapes))))
    return basis


def find_invertible(field, basis, shapes, rng: np.random.Generator, attempts: int = 32):
    """Random combinations of ``basis`` until every square block is invertible.

    Returns the tuple of blocks or ``None``; warns when the solution space is
    nonzero but no invertible element was found.
    """
    if not basis:
        if all(p * q == 0 for p, q in shapes):
            return tuple(field.zeros(p, q) for p, q in shapes)
        return None
    for _ in range(attempts):
        coeffs = field.random(rng, (len(basis),))
        blocks = []
        for i, (p, q) in enumerate(shapes):
            acc = field.zeros(p, q)
            for c, b in zip(coeffs, basis):
                acc = acc + b[i] * c
            blocks.append(acc)
        if all(field.is_invertible(b) for b in blocks):
            return tuple(blocks)
    warnings.warn(
        f"intertwiner space of dimension {len(basis)} has no invertible element after {attempts} draws",
        NumericalAmbiguityWarning,
        stacklevel=2,
    )
    return None
