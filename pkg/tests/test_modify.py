import numpy as np
import pytest
from hypothesis import given, strategies as st

from predmod.findesc import disc_description, s_equivalent
from predmod.generators import model_with_spectrum, random_resonant_model
from predmod.localmodel import LocalModel, canonical_from_residue, isomorphic, reduce, validate
from predmod.matfun import expm2pi, resonance_report
from predmod.modify import ShearMove, make_good, shift_down, shift_up, zero_multiplicity
from predmod.rhcore import rh_isomorphic, rh_local

ONE = LocalModel([[1]], [[1]], [[1]], [[1]])
BLOCK = LocalModel(np.diag([0, 1]), [[1]], [[0, 1]], [[0], [1]])
HALF = LocalModel([[0.5]], [[0.5]], [[1]], [[0.5]])


def charpoly(A):
    return np.poly(A) if A.size else np.array([1.0])


def test_shift_down_scalar():
    m = shift_down(ONE, 1)
    assert np.allclose(m.R, 0) and np.allclose(m.thetaF, 0)
    assert np.allclose(m.t, 1) and np.allclose(m.s, 0)
    assert validate(m).ok
    assert np.allclose(expm2pi(m.R), expm2pi(ONE.R))


def test_shift_down_block():
    m = shift_down(BLOCK, 1)
    assert np.allclose(m.R, 0, atol=1e-12) and np.allclose(m.thetaF, 0, atol=1e-12)
    assert np.allclose(m.s, 0, atol=1e-12)
    assert (zero_multiplicity(BLOCK.R), zero_multiplicity(m.R)) == (1, 2)


def test_shift_down_half():
    m = shift_down(HALF, 0.5)
    assert np.allclose(m.R, [[-0.5]])
    assert np.allclose(expm2pi(m.R), [[-1]]) and np.allclose(expm2pi(HALF.R), [[-1]])


def test_shift_up_inverts_down():
    low = shift_down(HALF, 0.5)
    back = shift_up(low, -0.5)
    # equal up to the GL(1) action: same R, thetaF and tensor u = s (x) t
    assert np.allclose(back.R, HALF.R) and np.allclose(back.thetaF, HALF.thetaF)
    assert np.allclose(reduce(back).u, reduce(HALF).u)
    assert isomorphic(back, HALF) is not None


def test_shift_up_torsion():
    m = shift_up(canonical_from_residue([[2]], "torsion"), 2)
    assert np.allclose(m.R, [[3]]) and np.allclose(m.thetaF, [[3]])
    assert np.allclose(m.t, [[1.5]]) and np.allclose(m.s, [[2]])


def test_zero_model_cannot_shear():
    z = np.zeros((1, 1))
    zero = LocalModel(z, z, z, z)
    with pytest.raises(ValueError):
        shift_up(zero, 1)
    with pytest.raises(ValueError):
        shift_down(zero, 0)


def test_move_rejects_zero():
    with pytest.raises(ValueError):
        ShearMove("down", 0, 1)


def test_make_good_block():
    res = make_good(BLOCK)
    assert [(m.direction, m.alpha) for m in res.moves] == [("down", pytest.approx(1))]
    assert np.allclose(res.model.R, 0, atol=1e-12)
    assert resonance_report(res.model.R).good


def test_make_good_already_good():
    res = make_good(HALF)
    assert res.moves == [] and res.model.allclose(HALF, 0)


def test_make_good_gap_three(rng):
    model = model_with_spectrum(rng, [(2, 1), (-1, 1)])
    res = make_good(model)
    moves = [(m.direction, round(m.alpha.real, 6)) for m in res.moves]
    assert moves == [("down", 2), ("down", 1), ("up", -1)]
    assert res.zero_trace == [0, 0, 1, 2]
    assert np.allclose(res.model.R, 0, atol=1e-8)


@given(st.integers(0, 2**32 - 1))
def test_shift_preserves_relations_and_monodromy(seed):
    rng = np.random.default_rng(seed)
    alpha = complex(rng.uniform(-2, 2), rng.uniform(-0.3, 0.3))
    model = model_with_spectrum(rng, [(alpha, int(rng.integers(1, 3))), (alpha + 0.37, 1)], 1, int(rng.integers(0, 2)))
    for fn in (shift_down, shift_up):
        out = fn(model, alpha)
        assert validate(out).ok
        assert np.allclose(charpoly(expm2pi(out.R)), charpoly(expm2pi(model.R)), atol=1e-8)
        assert np.allclose(charpoly(expm2pi(out.thetaF)), charpoly(expm2pi(model.thetaF)), atol=1e-8)


@given(st.integers(0, 2**32 - 1))
def test_make_good_random(seed):
    model = random_resonant_model(np.random.default_rng(seed), max_dim=5)
    res = make_good(model)
    assert validate(res.model).ok
    assert resonance_report(res.model.R).good
    assert np.allclose(charpoly(expm2pi(res.model.R)), charpoly(expm2pi(model.R)), atol=1e-8)
    assert all(b >= a for a, b in zip(res.zero_trace, res.zero_trace[1:]))
    gaps = sum(p.k for p in resonance_report(model.R).pairs)
    assert len(res.moves) <= gaps + model.n


@given(st.integers(0, 2**32 - 1))
def test_rh_of_sheared_is_isomorphic_off_integers(seed):
    # with no integer eigenvalue the gluing data is unchanged up to isomorphism
    rng = np.random.default_rng(seed)
    base = complex(rng.uniform(0.1, 0.9), rng.uniform(-0.2, 0.2))
    model = model_with_spectrum(rng, [(base, 1), (base + 1, 1), (base - 2, 1)], 0, 0)
    res = make_good(model)
    w = rh_isomorphic(rh_local(model), rh_local(res.model), tol=1e-7)
    assert w is not None


def test_rh_of_sheared_at_integer_is_only_s_equivalent():
    d1, d2 = rh_local(BLOCK), rh_local(make_good(BLOCK).model)
    # V vanishes after shearing but not before, so no isomorphism exists
    assert rh_isomorphic(d1, d2) is None
    assert s_equivalent(disc_description(d1), disc_description(d2), mode="numeric")
