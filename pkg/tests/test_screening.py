import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fbis.datagen import SimSpec, g1, gen_example
from fbis.errors import DegenerateFit, DegenerateResponse, EmptyData, InvalidDimension
from fbis.kernels import INF, Kernel
from fbis.screening import (
    Dataset,
    Rate,
    ScreeningConfig,
    fbis_hard_select,
    fbis_rank,
    fbis_screen,
    h_star,
    ic,
    ic_infinity,
    importance_measure,
    importance_measures,
    lower_quantile,
    penalty_scale,
    permutation_threshold,
    rescale_unit,
    sis_rank,
)

from . import oracles

GAUSS = ScreeningConfig(kernel=Kernel.GAUSSIAN)


def _data(rng, n=60, p=8, signal=True):
    X = rng.uniform(size=(n, p))
    y = rng.normal(size=n)
    if signal:
        y = y + 4 * g1(X[:, 0])
    return Dataset(y=y, X=X)


# --- scalar formulas ---------------------------------------------------


def test_h_star_examples():
    assert h_star(400, 1000) == pytest.approx((math.log(1000) / 400) ** 0.2, abs=1e-15)
    # (6.907755 / 400) ** 0.2 and (4.605170 / 100) ** 0.2
    assert h_star(400, 1000) == pytest.approx(0.444074, abs=1e-6)
    assert h_star(100, 100, Rate.LOGN) == pytest.approx(0.540318, abs=1e-6)
    n = 30
    assert h_star(n, math.exp(n)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(InvalidDimension):
        h_star(100, 1)


def test_monotone_p_penalty():
    hs = [h_star(400, p) for p in (10, 100, 1000, 10_000)]
    assert hs == sorted(hs) and len(set(hs)) == 4
    pens = [penalty_scale(400, p, 0.4) for p in (10, 100, 1000, 10_000)]
    assert pens == sorted(pens) and len(set(pens)) == 4


def test_ic_infinity_examples():
    assert ic_infinity([0, 1, 2]) == pytest.approx(math.log(2 / 3), abs=1e-15)
    assert ic_infinity([0, 1, 2]) == pytest.approx(-0.405465, abs=1e-6)
    with pytest.raises(DegenerateResponse):
        ic_infinity([3.0, 3.0, 3.0])


@given(a=st.floats(0.1, 10) | st.floats(-10, -0.1), c=st.floats(-50, 50))
def test_ic_infinity_scale_identity(a, c):
    y0 = np.array([0.3, -1.2, 2.5, 0.7, 1.1])
    assert ic_infinity(a * y0 + c) == pytest.approx(ic_infinity(y0) + 2 * math.log(abs(a)), abs=1e-10)


def test_ic_examples(rng):
    x, y = rng.uniform(size=5), rng.normal(size=5)
    assert ic(x, y, INF, GAUSS, p=10) == ic_infinity(y)
    untaxed = ScreeningConfig(tau=1e-300, kernel=Kernel.GAUSSIAN)
    s = np.mean((y - oracles_fit(x, y, 0.4)) ** 2)
    assert ic(x, y, 0.4, untaxed, p=10) == pytest.approx(math.log(s), abs=1e-12)
    cfg = ScreeningConfig(tau=1.7, kernel=Kernel.GAUSSIAN)
    want = oracles.ic_oracle(x.tolist(), y.tolist(), 0.4, 1.7, math.log(10))
    assert ic(x, y, 0.4, cfg, p=10) == pytest.approx(want, abs=1e-12)


def oracles_fit(x, y, h):
    return np.array([oracles.nw_point(x.tolist(), y.tolist(), h, e) for e in x.tolist()])


def test_ic_rejects_interpolation():
    x = np.array([0.0, 1.0, 2.0])
    with pytest.raises(DegenerateResponse):
        ic(x, np.array([0.0, 1.0, 5.0]), 1e-3, GAUSS, p=10)


def test_importance_measure_transcription(rng):
    x, y = rng.uniform(size=6), rng.normal(size=6)
    for kernel, k in ((Kernel.GAUSSIAN, oracles.gauss), (Kernel.EPANECHNIKOV, oracles.epan)):
        cfg = ScreeningConfig(kernel=kernel)
        want = oracles.im_oracle(x.tolist(), y.tolist(), 0.5, math.log(50), k)
        assert importance_measure(x, y, 0.5, 50, cfg) == pytest.approx(want, abs=1e-12)


def test_importance_measure_uses_trace_not_trace_minus_one(rng):
    x, y = rng.uniform(size=40), rng.normal(size=40)
    im, tr = importance_measures(x[:, None], y, 0.3, 100, GAUSS)
    drop = ic_infinity(y) - math.log(np.mean((y - oracles_fit(x, y, 0.3)) ** 2))
    assert im[0] * tr[0] * penalty_scale(40, 100, 0.3) == pytest.approx(drop, abs=1e-12)


def test_importance_measure_constant_column(rng):
    y = rng.normal(size=10)
    assert importance_measure(np.full(10, 0.3), y, 0.5, 20) == 0.0


def test_importance_measure_degenerate_fit():
    x = np.array([0.0, 1.0, 2.0, 3.0])
    y = np.array([0.0, 1.0, 0.0, 1.0])
    with pytest.raises(DegenerateFit) as err:
        importance_measures(np.column_stack([x, x]), y, 1e-3, 10, GAUSS)
    assert err.value.variables == [0, 1]


@given(a=st.floats(0.1, 10) | st.floats(-10, -0.1), c=st.floats(-50, 50))
def test_importance_measure_affine_invariance(a, c):
    rng = np.random.default_rng(1)
    x, y = rng.uniform(size=25), rng.normal(size=25)
    base = importance_measure(x, y, 0.4, 30)
    assert importance_measure(x, a * y + c, 0.4, 30) == pytest.approx(base, abs=1e-10)


# --- dataset -----------------------------------------------------------


def test_dataset_validation():
    with pytest.raises(DegenerateResponse):
        Dataset(y=np.ones(5), X=np.zeros((5, 2)))
    with pytest.raises(EmptyData):
        Dataset(y=np.array([]), X=np.zeros((0, 2)))
    d = Dataset(y=[1, 2, 3], X=[[1, 2], [3, 4], [5, 6]], truth=[1, 0])
    assert d.truth == (0, 1) and d.p == 2


def test_rescale_unit_maps_to_unit_interval(rng):
    X = rng.normal(size=(30, 4)) * 5 + 2
    X[:, 2] = 7.0
    Z, const = rescale_unit(X)
    assert const.tolist() == [False, False, True, False]
    assert np.allclose(Z[:, [0, 1, 3]].min(axis=0), 0) and np.allclose(Z[:, [0, 1, 3]].max(axis=0), 1)
    assert np.all(Z[:, 2] == 0)


# --- selection rules ---------------------------------------------------


def test_hard_select_pure_noise_large_tau():
    rng = np.random.default_rng(2)
    data = _data(rng, n=200, p=20, signal=False)
    assert fbis_hard_select(data, ScreeningConfig(tau=100)).size == 0


def test_hard_select_finds_quadratic():
    rng = np.random.default_rng(3)
    X = rng.uniform(size=(400, 10))
    y = g1(X[:, 0]) + 0.1 * rng.normal(size=400)
    assert 0 in fbis_hard_select(Dataset(y=y, X=X), ScreeningConfig(tau=1.0))


@given(a=st.floats(0.1, 10) | st.floats(-10, -0.1), c=st.floats(-50, 50))
def test_hard_select_and_ranking_affine_invariant(a, c):
    rng = np.random.default_rng(4)
    data = _data(rng)
    moved = Dataset(y=a * data.y + c, X=data.X)
    assert fbis_hard_select(moved).tolist() == fbis_hard_select(data).tolist()
    assert fbis_rank(moved).tolist() == fbis_rank(data).tolist()


def test_lower_quantile():
    v = [5.0, 1.0, 3.0, 2.0, 4.0]
    assert lower_quantile(v, 0) == 1.0
    assert lower_quantile(v, "max") == 5.0
    assert lower_quantile(v, 0.5) == 4.0  # ceil(2.5) = 3 -> fourth smallest, 0-based 3
    assert lower_quantile(v, 0.39) == 3.0
    assert lower_quantile(v, 0.99) == 5.0


def test_permutation_threshold_quantiles_and_determinism(rng):
    data = _data(rng)
    omega, perm = permutation_threshold(data, ScreeningConfig(q="max", n_permutations=3, seed=9))
    assert perm.shape == (3 * data.p,) and omega == perm.max()
    omega0, perm0 = permutation_threshold(data, ScreeningConfig(q=0, n_permutations=3, seed=9))
    assert omega0 == perm0.min()
    np.testing.assert_array_equal(perm, perm0)
    again, perm2 = permutation_threshold(data, ScreeningConfig(q="max", n_permutations=3, seed=9))
    assert again == omega and np.array_equal(perm, perm2)
    _, other = permutation_threshold(data, ScreeningConfig(n_permutations=3, seed=10))
    assert not np.array_equal(other, perm)


def test_permutation_is_row_permutation(rng):
    # scoring y against permuted rows of X by hand gives the same null values
    data = _data(rng, n=30, p=4)
    cfg = ScreeningConfig(seed=5)
    _, perm_ims = permutation_threshold(data, cfg)
    pi = np.random.default_rng([5, 0]).permutation(30)
    Xs, _ = rescale_unit(data.X)
    want, _ = importance_measures(Xs[pi], data.y, h_star(30, 4), 4, cfg)
    np.testing.assert_allclose(perm_ims, want, atol=1e-12, rtol=0)


def test_screen_report_invariants(rng):
    data = _data(rng, n=80, p=30)
    rep = fbis_screen(data, ScreeningConfig(seed=3))
    assert np.array_equal(rep.favored, rep.ic_hstar < rep.ic_inf)
    keep = np.flatnonzero(rep.im >= rep.omega)
    assert sorted(rep.selected.tolist()) == keep.tolist()
    ims = rep.im[rep.selected]
    assert np.all(np.diff(ims) <= 0)
    assert 0 in rep.selected
    assert rep.top_k(5).tolist() == rep.ranking[:5].tolist()


def test_ranking_ties_by_index():
    X = np.tile(np.linspace(0, 1, 12)[:, None], (1, 3))
    y = np.sin(6 * X[:, 0]) + np.linspace(0, 0.1, 12)
    assert fbis_rank(Dataset(y=y, X=X)).tolist() == [0, 1, 2]


def test_screen_determinism(rng):
    data = _data(rng)
    cfg = ScreeningConfig(n_permutations=2, seed=17)
    assert fbis_screen(data, cfg) == fbis_screen(data, cfg)


def test_constant_columns_get_zero(rng):
    data = _data(rng)
    data.X[:, 3] = 0.25
    rep = fbis_screen(data)
    assert rep.im[3] == 0.0 and rep.constant[3]


def test_permutation_null_dominance():
    fractions = []
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        data = Dataset(y=rng.normal(size=100), X=rng.uniform(size=(100, 200)))
        rep = fbis_screen(data, ScreeningConfig(seed=seed))
        fractions.append(len(rep.selected) / data.p)
    assert max(fractions) <= 0.05


def test_sis_examples():
    rng = np.random.default_rng(6)
    X = rng.uniform(size=(100, 20))
    y = 2 * X[:, 0] + 1e-3 * rng.normal(size=100)
    assert sis_rank(Dataset(y=y, X=X))[0] == 0
    noise = Dataset(y=rng.normal(size=100), X=X)
    assert sis_rank(noise).tolist() == sis_rank(noise).tolist()
    X[:, 5] = 1.0
    r = sis_rank(Dataset(y=y, X=X))
    assert sorted(r.tolist()) == list(range(20))
    assert r[0] == 0


@pytest.mark.slow
@pytest.mark.parametrize("example,need", [(1, 3), (2, 4)])
def test_top20_captures_truth(example, need):
    data = gen_example(SimSpec(example, seed=0))
    top = set(fbis_rank(data)[:20].tolist())
    assert len(top & set(data.truth)) == need


@pytest.mark.slow
def test_vanilla_screening_misses_interactions():
    data = gen_example(SimSpec(3, seed=0))
    top = set(fbis_rank(data)[:20].tolist())
    assert len(top & set(data.truth)) <= 2
