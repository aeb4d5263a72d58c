"""Seeded random instances for tests, benchmarks and the ``gen`` command."""
from __future__ import annotations

import numpy as np

from .fuchsian import FuchsianSystem
from .localmodel import LocalModel
from .rhcore import LocalRHData

__all__ = [
    "crandn",
    "random_invertible",
    "random_model",
    "model_with_spectrum",
    "random_strip_model",
    "random_resonant_model",
    "random_rh_data",
    "random_fuchsian",
]


def crandn(rng: np.random.Generator, *shape) -> np.ndarray:
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_invertible(rng: np.random.Generator, n: int, max_cond: float = 1e3) -> np.ndarray:
    while True:
        g = crandn(rng, n, n)
        if n == 0 or np.linalg.cond(g) < max_cond:
            return g


def random_model(rng: np.random.Generator, n: int, m: int, scale: float = 1.0) -> LocalModel:
    """Random ``t, s`` with ``R := s t`` and ``thetaF := t s``."""
    t = scale * crandn(rng, m, n)
    s = scale * crandn(rng, n, m)
    return LocalModel(s @ t, t @ s, t, s)


def model_with_spectrum(
    rng: np.random.Generator,
    blocks: list[tuple[complex, int]],
    n0: int = 0,
    m0: int = 0,
    *,
    nilpotent: bool = True,
    conjugate: bool = True,
) -> LocalModel:
    """Model whose residue has the prescribed nonzero generalized eigenvalues.

    ``blocks`` lists ``(alpha, size)`` with ``alpha != 0``; each block carries
    ``J = alpha I + N`` with ``N`` a random nilpotent with ``N^2 = 0`` (when
    ``nilpotent``) and factors as ``s = J t^{-1}``, ``t`` invertible. The
    generalized 0-eigenspaces have dimensions ``n0`` (in E) and ``m0`` (in F)
    with one of ``s``, ``t`` vanishing there.
    """
    Rb, tb, sb = [], [], []
    for alpha, k in blocks:
        if alpha == 0:
            raise ValueError("nonzero eigenvalues only; use n0, m0 for the 0 block")
        J = alpha * np.eye(k, dtype=complex)
        if nilpotent and k > 1:
            # Jordan chains of length <= 2: longer ones split past the clustering threshold
            J[np.arange(0, k - 1, 2), np.arange(1, k, 2)] = 0.5 * crandn(rng, len(range(0, k - 1, 2)))
        t = random_invertible(rng, k)
        Rb.append(J)
        tb.append(t)
        sb.append(J @ np.linalg.inv(t))
    if n0 or m0:
        Z = crandn(rng, m0, n0)
        if rng.random() < 0.5:
            t0, s0 = Z, np.zeros((n0, m0), dtype=complex)
        else:
            t0, s0 = np.zeros((m0, n0), dtype=complex), Z.conj().T
        Rb.append(np.zeros((n0, n0)))
        tb.append(t0)
        sb.append(s0)
    n = sum(b.shape[0] for b in Rb)
    m = sum(b.shape[0] for b in tb)
    R = _embed(Rb, n, n)
    t = _embed(tb, m, n)
    s = _embed(sb, n, m)
    model = LocalModel(R, t @ s, t, s)
    if conjugate:
        gE, gF = random_invertible(rng, n), random_invertible(rng, m)
        iE, iF = np.linalg.inv(gE), np.linalg.inv(gF)
        model = LocalModel(gE @ R @ iE, gF @ (t @ s) @ iF, gF @ t @ iE, gE @ s @ iF)
    return model


def _embed(blocks, rows: int, cols: int) -> np.ndarray:
    out = np.zeros((rows, cols), dtype=complex)
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def random_strip_model(rng: np.random.Generator, n: int, m: int, anchor: float = 0.0, margin: float = 0.05) -> LocalModel:
    """Random model whose residue spectrum lies inside the strip at ``anchor``."""
    k = min(n, m)
    sizes = []
    left = k
    while left:
        sizes.append(int(rng.integers(1, left + 1)))
        left -= sizes[-1]
    blocks = []
    for size in sizes:
        re = rng.uniform(anchor + margin, anchor + 1 - margin)
        alpha = complex(re, rng.uniform(-0.3, 0.3))
        blocks.append((alpha, size))
    return model_with_spectrum(rng, blocks, n - k, m - k)


def random_resonant_model(rng: np.random.Generator, max_dim: int = 5, max_gap: int = 3) -> LocalModel:
    """Random model with at least one pair of residue eigenvalues differing by an integer."""
    while True:
        n = int(rng.integers(2, max_dim + 1))
        if rng.random() < 0.5:
            base = complex(0.0)
        else:
            base = complex(round(rng.uniform(-1, 1), 3), round(rng.uniform(-0.3, 0.3), 3) * (rng.random() < 0.5))
        offsets = [0]
        for _ in range(n - 1):
            offsets.append(offsets[-1] + int(rng.integers(0, max_gap + 1)) * int(rng.choice([-1, 1])))
        values = [base + o for o in offsets]
        if len({round(v.real, 9) for v in values}) < 2:
            continue
        rng.shuffle(values)
        blocks, n0 = [], 0
        for v in values:
            if abs(v) < 1e-12:
                n0 += 1
            else:
                blocks.append((v, 1))
        # merge equal values into Jordan-capable blocks
        merged: dict[complex, int] = {}
        for v, k in blocks:
            merged[v] = merged.get(v, 0) + k
        blocks = list(merged.items())
        m0 = int(rng.integers(0, 2)) if n0 else 0
        return model_with_spectrum(rng, blocks, n0, m0)


def random_rh_data(rng: np.random.Generator, n: int, m: int, scale: float = 1.0) -> LocalRHData:
    """Random gluing data: ``T_E := I + V C`` and ``T_F := I + C V``."""
    C = scale * crandn(rng, m, n)
    V = scale * crandn(rng, n, m)
    return LocalRHData(np.eye(n) + V @ C, np.eye(m) + C @ V, C, V)


def random_fuchsian(rng: np.random.Generator, k: int = 3, n: int = 2, norm: float = 1.0) -> FuchsianSystem:
    """Closed system (residues summing to 0) with every residue of 2-norm at most ``norm``.

    The base point is 0 and the punctures sit on well separated rays, so the
    default star-shaped basket is valid.
    """
    if k < 2:
        raise ValueError("a closed system needs at least two punctures")
    res = []
    for _ in range(k - 1):
        A = crandn(rng, n, n)
        res.append(A * (rng.uniform(0.2, 1.0) * norm / (k - 1) / np.linalg.norm(A, 2)))
    res.append(-sum(res))
    angles = 2 * np.pi * (np.arange(k) + rng.uniform(-0.25, 0.25, size=k)) / k
    radii = rng.uniform(0.5, 1.5, size=k)
    return FuchsianSystem(radii * np.exp(1j * angles), res, 0.0, closed=True)
