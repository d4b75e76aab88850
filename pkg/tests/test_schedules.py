import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polyframe.errors import EmptyMatrix, IndexOutOfRange, InvalidK, InvalidTimesteps
from polyframe.schedules import make_schedule, mar_schedule, mask_rows, mean_pool, partition


@pytest.mark.parametrize("kind", ["cosine", "linear"])
@pytest.mark.parametrize("T", [1, 10, 1000])
def test_schedule_shape_and_monotone(kind, T):
    s = make_schedule(kind, T)
    assert s.timesteps == T
    assert s.alpha_bar[0] == 1.0
    assert np.all(np.diff(s.alpha_bar) < 0)
    assert np.all(np.diff(s.sigma_rot) > 0)
    assert s.torsion_sigma(0) == 0.0
    assert s.sigma_rot[0] == pytest.approx(1e-3)


def test_cosine_reference_values():
    # independent evaluation of the cosine alpha-bar curve
    T, s = 1000, 0.008
    f = lambda t: math.cos((t / T + s) / (1 + s) * math.pi / 2) ** 2  # noqa: E731
    sched = make_schedule("cosine", T)
    for t in (1, 100, 500, 900):
        assert sched.alpha_bar[t] == pytest.approx(f(t) / f(0), rel=1e-9)
    assert sched.alpha_bar[T] < 1e-6
    assert sched.torsion_sigma(T) == pytest.approx(math.pi / 2, rel=1e-6)


def test_linear_reference_values():
    sched = make_schedule("linear", 1000)
    betas = np.linspace(1e-4, 0.02, 1000)
    assert sched.alpha_bar[1000] == pytest.approx(np.prod(1 - betas), rel=1e-9)


@pytest.mark.parametrize("T", [0, -3, 2.5])
def test_invalid_timesteps(T):
    with pytest.raises(InvalidTimesteps):
        make_schedule("cosine", T)


def test_unknown_schedule():
    with pytest.raises(ValueError):
        make_schedule("sigmoid", 10)


@given(st.integers(1, 30), st.data())
def test_partition_covers_order(n, data):
    k = data.draw(st.integers(1, n))
    order = list(np.random.default_rng(n).permutation(n))
    parts = partition(order, k)
    assert len(parts) == k
    assert [x for p in parts for x in p] == [int(x) for x in order]
    sizes = [len(p) for p in parts]
    assert all(s == n // k for s in sizes[:-1])
    assert sizes[-1] == n - (k - 1) * (n // k)


def test_mar_k_extremes():
    rng = np.random.default_rng(0)
    m = mar_schedule(6, 1, rng)
    assert m.subsets == (tuple(int(i) for i in m.permutation),)
    m = mar_schedule(6, 6, rng)
    assert all(len(s) == 1 for s in m.subsets)


@pytest.mark.parametrize("k", [0, 7, -1])
def test_mar_invalid_k(k):
    with pytest.raises(InvalidK):
        mar_schedule(6, k, np.random.default_rng(0))


def test_mar_seeded():
    a = mar_schedule(12, 5, np.random.default_rng(99))
    b = mar_schedule(12, 5, np.random.default_rng(99))
    assert a.subsets == b.subsets


def test_mask_rows():
    x = np.arange(12.0).reshape(4, 3)
    y = mask_rows(x, {1, 3})
    assert np.array_equal(y[[0, 2]], x[[0, 2]])
    assert np.all(y[[1, 3]] == 0)
    assert np.array_equal(mask_rows(x, []), x)
    assert x[1, 0] == 3.0  # input untouched
    with pytest.raises(IndexOutOfRange):
        mask_rows(x, [4])
    with pytest.raises(IndexOutOfRange):
        mask_rows(x, [-1])


def test_mean_pool():
    e = np.array([[1.0, 2.0], [3.0, 6.0]])
    assert np.array_equal(mean_pool(e), [[2.0, 4.0]])
    with pytest.raises(EmptyMatrix):
        mean_pool(np.zeros((0, 4)))
