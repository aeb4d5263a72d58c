import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from predmod.filtr import (
    Flag,
    JumpGraph,
    brute_force_weights,
    compatible,
    deform,
    graded,
    jump_graph,
    polygonal_weights,
    slope_special_check,
)
from predmod.localmodel import LocalModel, isomorphic, validate

from conftest import crandn

# eleven-by-nine staircase: s-jumps at (3,4), (6,6), (8,8); t-jumps at (1,1), (2,3), (3,4), (5,5), (7,7)
STAIR_S = JumpGraph((0, 0, 0, 4, 4, 4, 6, 6, 8, 8, 8), 8)
STAIR_T = JumpGraph((0, 1, 1, 2, 3, 5, 5, 7, 7), 10)


def difference_constraints_feasible(Gs, Gt):
    """Bellman-Ford on x_v - x_u >= w: strictly increasing p, q with s and t filtered."""
    l0, l1 = Gs.source, Gs.target
    nodes = [("p", j) for j in range(l0 + 1)] + [("q", k) for k in range(l1 + 1)]
    cons = []  # (u, v, w): x_v - x_u >= w
    cons += [(("p", j), ("p", j + 1), 1) for j in range(l0)]
    cons += [(("q", k), ("q", k + 1), 1) for k in range(l1)]
    cons += [(("q", Gs.points[j]), ("p", j), 0) for j in range(l0 + 1)]
    cons += [(("p", Gt.points[k]), ("q", k), 0) for k in range(l1 + 1)]
    # x_u <= x_v - w: shortest paths on edges v -> u with weight -w
    dist = {v: 0 for v in nodes}
    for _ in range(len(nodes)):
        changed = False
        for u, v, w in cons:
            if dist[v] - w < dist[u]:
                dist[u] = dist[v] - w
                changed = True
        if not changed:
            return True
    return False


def check_sign_table(w, Gs):
    for j in range(Gs.source + 1):
        for k in range(Gs.target + 1):
            d = w.p[j] - w.q[k]
            line = w.line(j)
            assert (d > 0) == (k < line) and (d < 0) == (k > line) and (d == 0) == (k == line)


# jump graphs


def test_jump_graph_zero_map():
    E, F = Flag.standard([1, 2]), Flag.standard([1, 3])
    assert jump_graph(np.zeros((3, 2)), E, F).points == (0, 0, 0)


def test_jump_graph_identity():
    E = Flag.standard([1, 2, 4])
    assert jump_graph(np.eye(4), E, E).points == (0, 1, 2, 3)


def test_jump_graph_example():
    G = jump_graph(np.array([[0, 1]]), Flag.standard([1, 2]), Flag.standard([0, 1]))
    assert G.points == (0, 0, 1)
    assert G.jumps == [(0, 0), (2, 1)]


def test_flag_validation():
    with pytest.raises(ValueError):
        Flag(2, [np.array([[1], [0]]), np.array([[0], [1]])])
    with pytest.raises(ValueError):
        Flag(2, [np.array([[1, 2], [1, 2]])])


# compatibility and weights


def test_diagonal_graphs_compatible():
    G = JumpGraph((0, 1, 2), 2)
    assert compatible(G, G)


def test_maximal_graphs_share_non_jump_cell():
    full = JumpGraph((0, 2, 2), 2)
    # (1, 1) lies under the s-graph and left of the t-graph without being a jump
    assert not compatible(full, full)


def test_zero_maps_compatible():
    zero = JumpGraph((0, 0, 0), 2)
    assert compatible(zero, zero)


def test_staircase_compatible():
    assert compatible(STAIR_S, STAIR_T)
    assert [(k, j) for k, j in STAIR_T.jumps[1:]] == [(1, 1), (3, 2), (4, 3), (5, 5), (7, 7)]


def test_staircase_weights():
    w = polygonal_weights(STAIR_S, STAIR_T)
    assert w is not None
    check_sign_table(w, STAIR_S)
    want = [0, Fraction(1, 11), Fraction(2, 11), 4, Fraction(45, 11), Fraction(46, 11), 6,
            Fraction(67, 11), 8, Fraction(89, 11), Fraction(90, 11)]
    assert list(w.p) == want
    assert list(w.q) == list(range(9))
    assert difference_constraints_feasible(STAIR_S, STAIR_T)


def test_single_jump_weights():
    G = JumpGraph((0, 1), 1)
    w = polygonal_weights(G, G)
    assert list(w.p) == [0, 1] and list(w.q) == [0, 1]
    check_sign_table(w, G)


def test_t_jump_below_forced_line():
    Gs = JumpGraph((0, 2, 2), 2)
    Gt = JumpGraph((0, 1, 1), 2)
    assert polygonal_weights(Gs, Gt) is None
    assert not compatible(Gs, Gt)


def test_grid_mismatch_rejected():
    with pytest.raises(ValueError):
        compatible(JumpGraph((0, 1), 1), JumpGraph((0, 1, 1), 1))


def all_graphs(source, target):
    for tail in itertools.combinations_with_replacement(range(target + 1), source):
        yield JumpGraph((0,) + tail, target)


def test_exhaustive_equivalence():
    count = 0
    for l0, l1 in itertools.product(range(1, 4), repeat=2):
        for Gs in all_graphs(l0, l1):
            for Gt in all_graphs(l1, l0):
                comp = compatible(Gs, Gt)
                w = polygonal_weights(Gs, Gt)
                assert comp == (w is not None) == (brute_force_weights(Gs, Gt) is not None)
                assert comp == difference_constraints_feasible(Gs, Gt)
                if w is not None:
                    check_sign_table(w, Gs)
                count += 1
    assert count > 600


def random_flag(rng, dims, g):
    return Flag(g.shape[0], [g[:, :d] for d in dims])


@given(st.integers(0, 2**32 - 1))
def test_random_filtered_maps(seed):
    # jump graphs of actual maps, then the weights must make s and t filtered
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(2, 5)), int(rng.integers(2, 5))
    dE = sorted(rng.choice(np.arange(1, n), size=min(int(rng.integers(1, 3)), n - 1), replace=False).tolist()) + [n]
    dF = sorted(rng.choice(np.arange(1, m), size=min(int(rng.integers(1, 3)), m - 1), replace=False).tolist()) + [m]
    gE, gF = crandn(rng, n, n), crandn(rng, m, m)
    flagE, flagF = random_flag(rng, dE, gE), random_flag(rng, dF, gF)
    s, t = crandn(rng, n, m), crandn(rng, m, n)
    # sparsify in the adapted coordinates so that graphs vary
    s = gE @ (np.linalg.inv(gE) @ s @ gF * (rng.random((n, m)) < 0.4)) @ np.linalg.inv(gF)
    t = gF @ (np.linalg.inv(gF) @ t @ gE * (rng.random((m, n)) < 0.4)) @ np.linalg.inv(gE)
    Gs = jump_graph(s, flagF, flagE, tol=1e-8)
    Gt = jump_graph(t, flagE, flagF, tol=1e-8)
    w = polygonal_weights(Gs, Gt)
    assert compatible(Gs, Gt) == (w is not None) == (brute_force_weights(Gs, Gt) is not None)
    if w is None:
        return
    # s(F_j F) lands in the E-step of largest weight <= p(j); t(F_k E) in the F-step of weight <= q(k)
    for j in range(Gs.source + 1):
        k = max(k for k in range(Gs.target + 1) if w.q[k] <= w.p[j])
        X = s @ flagF.step(j)
        B = flagE.step(k)
        resid = X - B @ np.linalg.lstsq(B, X, rcond=None)[0] if B.shape[1] else X
        assert np.abs(resid).max(initial=0) < 1e-6 * max(1, np.abs(s).max())
    for k in range(Gt.source + 1):
        j = max(j for j in range(Gt.target + 1) if w.p[j] <= w.q[k])
        X = t @ flagE.step(k)
        B = flagF.step(j)
        resid = X - B @ np.linalg.lstsq(B, X, rcond=None)[0] if B.shape[1] else X
        assert np.abs(resid).max(initial=0) < 1e-6 * max(1, np.abs(t).max())


# gradings


def filtered_model(rng, dE, dF):
    """Random model filtered for coordinate flags with step-index weights, then conjugated."""
    n, m = dE[-1], dF[-1]
    wE = np.searchsorted(dE, np.arange(n), side="right") + 1
    wF = np.searchsorted(dF, np.arange(m), side="right") + 1
    t = crandn(rng, m, n) * (wF[:, None] <= wE[None, :])
    s = crandn(rng, n, m) * (wE[:, None] <= wF[None, :])
    gE, gF = crandn(rng, n, n), crandn(rng, m, m)
    iE, iF = np.linalg.inv(gE), np.linalg.inv(gF)
    model = LocalModel(gE @ s @ t @ iE, gF @ t @ s @ iF, gF @ t @ iE, gE @ s @ iF)
    return model, Flag(n, [gE[:, :d] for d in dE]), Flag(m, [gF[:, :d] for d in dF])


def test_graded_trivial_flag(rng):
    model, _, _ = filtered_model(rng, [3], [2])
    out = graded(model, Flag.trivial(3), Flag.trivial(2))
    assert out.allclose(model, 1e-9)


def test_graded_kills_nilpotent():
    m = LocalModel([[0, 1], [0, 0]], np.zeros((0, 0)), np.zeros((0, 2)), np.zeros((2, 0)))
    g = graded(m, Flag.standard([1, 2]), Flag.trivial(0))
    assert np.allclose(g.R, 0)


def test_graded_rejects_unfiltered():
    m = LocalModel([[0, 0], [1, 0]], np.zeros((0, 0)), np.zeros((0, 2)), np.zeros((2, 0)))
    with pytest.raises(ValueError):
        graded(m, Flag.standard([1, 2]), Flag.trivial(0))


@given(st.integers(0, 2**32 - 1))
def test_deform_family(seed):
    rng = np.random.default_rng(seed)
    model, fE, fF = filtered_model(rng, [1, 3], [1, 2])
    assert deform(model, fE, fF, 1).allclose(model, 1e-8 * max(1, np.abs(model.R).max()))
    tau = complex(rng.uniform(0.3, 2), rng.uniform(-1, 1))
    out = deform(model, fE, fF, tau)
    assert validate(out).ok
    assert isomorphic(model, out, tol=1e-7) is not None
    g = graded(model, fE, fF)
    near = deform(model, fE, fF, 1e-7)
    assert near.allclose(g, 1e-5 * max(1, np.abs(model.R).max(), np.abs(model.t).max(), np.abs(model.s).max()))


@given(st.integers(0, 2**32 - 1))
def test_graded_idempotent_and_valid(seed):
    rng = np.random.default_rng(seed)
    model, fE, fF = filtered_model(rng, [1, 2, 4], [2, 3])
    g = graded(model, fE, fF)
    assert validate(g).ok
    assert graded(g, fE, fF).allclose(g, 1e-8 * max(1, np.abs(g.R).max()))


# slopes


def test_slope_checks():
    assert slope_special_check(Flag(2, [np.eye(2)], [(2, 0)]))
    assert slope_special_check(Flag(2, [np.eye(2)[:, :1], np.eye(2)], [(1, 0), (2, 0)]))
    assert not slope_special_check(Flag(2, [np.eye(2)[:, :1], np.eye(2)], [(1, 1), (2, 0)]))
    with pytest.raises(ValueError):
        slope_special_check(Flag.standard([1, 2]))
