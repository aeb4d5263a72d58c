import numpy as np
import pytest
from hypothesis import given, strategies as st

from predmod.generators import random_model, random_rh_data, random_strip_model
from predmod.localmodel import LocalModel, canonical_from_residue, conjugate, direct_sum, rescale
from predmod.matfun import BranchSection, apply_entire
from predmod.rhcore import (
    LocalRHData,
    inv_rh_local,
    rh_isomorphic,
    rh_local,
    rigidity_differential,
    rigidity_map,
    tangent_basis,
    validate_rh,
)

from conftest import crandn


def test_rh_scalar():
    d = rh_local(LocalModel([[0.5]], [[0.5]], [[1]], [[0.5]]))
    assert np.allclose(d.T_E, [[-1]]) and np.allclose(d.T_F, [[-1]])
    assert np.allclose(d.C, [[-4]]) and np.allclose(d.V, [[0.5]])
    assert np.allclose(d.V @ d.C, [[-2]])


def test_rh_zero_model():
    z = np.zeros((1, 1))
    d = rh_local(LocalModel(z, z, z, z))
    assert np.allclose(d.T_E, 1) and np.allclose(d.T_F, 1)
    assert not np.any(d.C) and not np.any(d.V)


def test_rh_torsion_at_integer():
    d = rh_local(canonical_from_residue([[2]], "torsion"))
    assert abs(d.C[0, 0]) < 1e-12
    assert np.allclose(d.V, [[2]]) and np.allclose(d.T_E, [[1]])
    assert validate_rh(d).ok


def test_rh_rejects_invalid_model():
    with pytest.raises(ValueError):
        rh_local(LocalModel([[1]], [[0]], [[1]], [[1]]))


def test_inv_rh_scalar():
    m = inv_rh_local(LocalRHData([[-1]], [[-1]], [[-4]], [[0.5]]), BranchSection(0.0))
    assert np.allclose(m.R, [[0.5]]) and np.allclose(m.t, [[1]])
    assert np.allclose(m.s, [[0.5]]) and np.allclose(m.thetaF, [[0.5]])


def test_inv_rh_identity_data():
    m = inv_rh_local(LocalRHData(np.eye(2), np.eye(1), np.zeros((1, 2)), np.zeros((2, 1))))
    assert not np.any(np.abs(m.R) > 1e-14) and not np.any(m.t) and not np.any(m.s)


def test_inv_rh_only_v():
    m = inv_rh_local(LocalRHData([[1]], [[1]], [[0]], [[3]]))
    assert np.allclose(m.R, 0) and np.allclose(m.t, 0)
    assert np.allclose(m.s, [[3]]) and np.allclose(m.thetaF, 0)


def test_inv_rh_requires_section_through_zero():
    with pytest.raises(ValueError):
        inv_rh_local(LocalRHData([[-1]], [[-1]], [[-4]], [[0.5]]), BranchSection(0.5))


def test_inv_rh_rejects_inconsistent_tf():
    # V C = T_E - I holds but C V = T_F - I fails
    with pytest.raises(ValueError):
        inv_rh_local(LocalRHData([[-1]], [[1]], [[-4]], [[0.5]]))


def test_inv_rh_report():
    _, res = inv_rh_local(LocalRHData([[-1]], [[-1]], [[-4]], [[0.5]]), report=True)
    assert max(res.values()) < 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(0, 4))
def test_relations_hold(seed, n, m):
    d = rh_local(random_model(np.random.default_rng(seed), n, m, scale=0.7))
    scale = max(1, np.abs(d.T_E).max(), np.abs(d.T_F).max(initial=0))
    assert np.allclose(d.V @ d.C, d.T_E - np.eye(n), rtol=0, atol=1e-9 * scale)
    assert np.allclose(d.C @ d.V, d.T_F - np.eye(m), rtol=0, atol=1e-9 * scale)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4), st.floats(-0.9, 0.0))
def test_round_trip_model(seed, n, m, anchor):
    model = random_strip_model(np.random.default_rng(seed), n, m, anchor=anchor)
    back = inv_rh_local(rh_local(model), BranchSection(anchor))
    assert back.allclose(model, 1e-7 * max(1, np.abs(model.t).max(), np.abs(model.s).max()))


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4))
def test_round_trip_data(seed, n, m):
    d = random_rh_data(np.random.default_rng(seed), n, m, scale=0.5)
    again = rh_local(inv_rh_local(d))
    assert again.allclose(d, 1e-7 * max(1, np.abs(d.T_E).max(), np.abs(d.T_F).max()))


@given(st.integers(0, 2**32 - 1))
def test_functorial_under_conjugation(seed):
    rng = np.random.default_rng(seed)
    model = random_model(rng, 3, 2, scale=0.6)
    gE, gF = crandn(rng, 3, 3), crandn(rng, 2, 2)
    d1 = rh_local(model)
    d2 = rh_local(conjugate(model, gE, gF))
    iE, iF = np.linalg.inv(gE), np.linalg.inv(gF)
    scale = max(1, np.abs(d2.T_E).max(), np.abs(d2.C).max())
    assert np.allclose(d2.T_E, gE @ d1.T_E @ iE, atol=1e-8 * scale)
    assert np.allclose(d2.C, gF @ d1.C @ iE, atol=1e-8 * scale)
    assert np.allclose(d2.V, gE @ d1.V @ iF, atol=1e-8 * scale)


def test_direct_sum_exactness(rng):
    a, b = random_model(rng, 2, 1, 0.5), random_model(rng, 1, 2, 0.5)
    ds = rh_local(direct_sum(a, b))
    da, db = rh_local(a), rh_local(b)
    assert np.allclose(ds.T_E[:2, :2], da.T_E) and np.allclose(ds.T_E[2:, 2:], db.T_E)
    assert np.allclose(ds.T_E[:2, 2:], 0, atol=1e-12) and np.allclose(ds.C[1:, :2], 0, atol=1e-12)
    assert np.allclose(ds.C[:1, :2], da.C) and np.allclose(ds.V[2:, 1:], db.V)


@given(st.integers(0, 2**32 - 1), st.complex_numbers(min_magnitude=0.2, max_magnitude=5))
def test_scaling_equivariance(seed, lam):
    model = random_model(np.random.default_rng(seed), 2, 2, 0.5)
    d1, d2 = rh_local(model), rh_local(rescale(model, lam))
    assert np.allclose(d2.V, lam * d1.V) and np.allclose(d2.C, d1.C / lam)
    # witness (id, id / lam): gF C1 = C2 gE and gE V1 = V2 gF
    gF = np.eye(2) / lam
    assert np.allclose(gF @ d1.C, d2.C) and np.allclose(d1.V, d2.V @ gF)
    assert rh_isomorphic(d1, d2) is not None


# rigidity


def test_rigidity_zero_tangent(rng):
    model = random_model(rng, 2, 2)
    res = rigidity_differential(model, (np.zeros((2, 2)), np.zeros((2, 2))))
    assert not np.any(res.image[0]) and not np.any(res.image[1])


def test_rigidity_scalar():
    model = LocalModel([[1]], [[1]], [[1]], [[1]])
    a = 0.3 - 0.1j
    res = rigidity_differential(model, ([[a]], [[-a]]))
    assert np.allclose(res.image[0], [[a]])
    assert np.allclose(res.image[1], [[-a * (np.e - 1)]])
    assert res.injective and res.tangent_dim == 1


def test_rigidity_rejects_non_tangent():
    model = LocalModel([[1]], [[1]], [[1]], [[1]])
    with pytest.raises(ValueError):
        rigidity_differential(model, ([[1]], [[1]]))


def finite_difference(s, t, a, b, h=1e-5):
    fp = rigidity_map(s + h * a, t + h * b)
    fm = rigidity_map(s - h * a, t - h * b)
    return (fp[0] - fm[0]) / (2 * h), (fp[1] - fm[1]) / (2 * h)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4))
def test_rigidity_matches_finite_differences(seed, n, m):
    rng = np.random.default_rng(seed)
    model = random_model(rng, n, m, scale=0.5)
    basis = tangent_basis(model)
    coeffs = crandn(rng, len(basis))
    a = sum((c * x for c, (x, _) in zip(coeffs, basis)), np.zeros((n, m), complex))
    b = sum((c * y for c, (_, y) in zip(coeffs, basis)), np.zeros((m, n), complex))
    res = rigidity_differential(model, (a, b))
    fa, fb = finite_difference(model.s, model.t, a, b)
    assert np.allclose(res.image[0], fa, atol=1e-6) and np.allclose(res.image[1], fb, atol=1e-6)
    assert res.injective


def test_tangent_space_is_kernel(rng):
    model = random_model(rng, 3, 2)
    for a, b in tangent_basis(model):
        assert np.allclose(a @ model.t + model.s @ b, 0, atol=1e-9)
        assert np.allclose(model.t @ a + b @ model.s, 0, atol=1e-9)
    # the GL(1) orbit direction (s, -t) is always tangent
    res = rigidity_differential(model, (model.s, -model.t))
    assert np.allclose(res.image[1], -model.t @ apply_entire(model.s @ model.t, "phi_plain"))
