import numpy as np
import pytest
from hypothesis import given, strategies as st

from predmod.generators import random_model
from predmod.localmodel import (
    LocalModel,
    NotDecomposableError,
    ReducedModule,
    canonical_from_residue,
    conjugate,
    factor,
    isomorphic,
    max_minor,
    reduce,
    rescale,
    validate,
)
from predmod.matfun import apply_entire, spectral_split

from conftest import crandn

HALF = LocalModel([[0.5]], [[0.5]], [[1]], [[0.5]])
TWO_ONE = LocalModel(np.diag([0, 1]), [[1]], [[0, 1]], [[0], [1]])


def is_witness(m1, m2, gE, gF, tol=1e-8):
    return (
        np.allclose(gE @ m1.R, m2.R @ gE, atol=tol)
        and np.allclose(gF @ m1.thetaF, m2.thetaF @ gF, atol=tol)
        and np.allclose(gF @ m1.t, m2.t @ gE, atol=tol)
        and np.allclose(gE @ m1.s, m2.s @ gF, atol=tol)
        and abs(np.linalg.det(gE)) > 1e-8
        and (gF.size == 0 or abs(np.linalg.det(gF)) > 1e-8)
    )


def test_validate_scalar():
    assert validate(HALF).ok


def test_validate_block():
    rep = validate(TWO_ONE)
    assert rep.ok
    assert max(rep.residuals.values()) <= 1e-12


def test_validate_contradiction():
    rep = validate(LocalModel([[1]], [[0]], [[1]], [[1]]))
    assert not rep.ok
    assert rep.residuals["ts-thetaF"] == pytest.approx(1.0)
    assert rep.residuals["st-R"] == 0


def test_shape_mismatch():
    with pytest.raises(ValueError):
        LocalModel(np.eye(2), np.eye(1), np.ones((1, 3)), np.ones((2, 1)))


def test_canonical_meromorphic_zero():
    m = canonical_from_residue([[0]], "meromorphic")
    assert np.array_equal(m.t, [[0]]) and np.array_equal(m.s, [[1]]) and np.array_equal(m.thetaF, [[0]])


def test_canonical_torsion():
    m = canonical_from_residue([[2]], "torsion")
    assert np.array_equal(m.t, [[1]]) and np.array_equal(m.s, [[2]]) and np.array_equal(m.thetaF, [[2]])


def test_canonical_minimal():
    m = canonical_from_residue(np.diag([0, 3]), "minimal")
    assert m.m == 1
    assert np.allclose(m.thetaF, [[3]])
    assert np.allclose(m.t, [[0, 3]])
    assert np.allclose(m.s, [[0], [1]])


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.sampled_from(["meromorphic", "torsion", "minimal"]))
def test_canonical_models_validate(seed, n, kind):
    rng = np.random.default_rng(seed)
    R = crandn(rng, n, n)
    if rng.random() < 0.5:
        # drop rank so the minimal model is smaller than E
        R[:, 0] = 0
    assert validate(canonical_from_residue(R, kind)).ok


def test_reduce_scalar():
    red = reduce(HALF)
    assert np.allclose(red.u, [[0.5]])
    assert np.allclose(red.mu0(), [[0.5]])


def test_reduce_zero():
    m = LocalModel(np.zeros((2, 2)), np.zeros((1, 1)), np.zeros((1, 2)), np.zeros((2, 1)))
    assert not np.any(reduce(m).u)
    assert factor(reduce(m)) is None


def test_reduce_block():
    red = reduce(TWO_ONE)
    assert red.u.shape == (2, 2)
    assert np.allclose(red.u, np.outer([0, 1], [0, 1]))
    assert max_minor(red.u) == 0
    assert np.allclose(red.mu0(), TWO_ONE.R) and np.allclose(red.mu1(), TWO_ONE.thetaF)


def test_factor_scalar():
    s, t = factor(reduce(HALF))
    assert np.allclose(s @ t, [[0.5]])
    assert np.allclose(np.outer(s.reshape(-1), t.reshape(-1)), [[0.5]])


def test_factor_non_decomposable():
    red = ReducedModule(np.zeros((2, 2)), np.zeros((1, 1)), np.eye(2))
    with pytest.raises(NotDecomposableError):
        factor(red)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4))
def test_reduce_factor_reduce(seed, n, m):
    model = random_model(np.random.default_rng(seed), n, m)
    red = reduce(model)
    s, t = factor(red)
    # first nonzero entry of vec(t) is the gauge
    flat = t.reshape(-1)
    assert flat[np.flatnonzero(np.abs(flat) > 1e-9)[0]] == pytest.approx(1)
    again = reduce(LocalModel(s @ t, t @ s, t, s))
    assert np.allclose(again.u, red.u, atol=1e-9 * max(1, np.abs(red.u).max()))


@given(st.integers(0, 2**32 - 1), st.complex_numbers(min_magnitude=0.1, max_magnitude=10))
def test_scaling_action(seed, lam):
    model = random_model(np.random.default_rng(seed), 2, 3)
    scaled = rescale(model, lam)
    assert validate(scaled).ok
    assert np.allclose(reduce(scaled).u, reduce(model).u, atol=1e-9 * max(1, np.abs(reduce(model).u).max()))


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(0, 4))
def test_power_series_intertwining(seed, n, m):
    model = random_model(np.random.default_rng(seed), n, m, scale=0.6)
    for kind in ("expm2pi", "phi_m2pi", "exp_plain", "phi_plain"):
        lhs = model.t @ apply_entire(model.s @ model.t, kind)
        rhs = apply_entire(model.t @ model.s, kind) @ model.t
        assert np.allclose(lhs, rhs, rtol=0, atol=1e-9 * max(1, np.abs(lhs).max(initial=0)))


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4))
def test_nonzero_spectra_agree(seed, n, m):
    model = random_model(np.random.default_rng(seed), n, m)
    ev = lambda A: sorted(
        ((round(c.value.real, 5), round(c.value.imag, 5)), c.multiplicity)
        for c in spectral_split(A).clusters
        if abs(c.value) > 1e-5
    )
    assert ev(model.R) == ev(model.thetaF)


def test_isomorphic_self():
    gE, gF = isomorphic(TWO_ONE, TWO_ONE)
    assert np.allclose(gE, np.eye(2)) and np.allclose(gF, np.eye(1))


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3))
def test_isomorphic_conjugate(seed, n, m):
    rng = np.random.default_rng(seed)
    model = random_model(rng, n, m)
    gE, gF = crandn(rng, n, n), crandn(rng, m, m)
    other = conjugate(model, gE, gF)
    w = isomorphic(model, other)
    assert w is not None
    assert is_witness(model, other, *w, tol=1e-6 * max(1, np.abs(other.R).max()))


def test_meromorphic_vs_torsion_at_zero():
    a = canonical_from_residue([[0]], "meromorphic")
    b = canonical_from_residue([[0]], "torsion")
    assert isomorphic(a, b) is None


def test_isomorphic_dimension_mismatch():
    with pytest.raises(ValueError):
        isomorphic(HALF, TWO_ONE)
