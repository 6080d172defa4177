import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdcell.link import EMPTY, PowerAllocation, Selection, link_rates
from fdcell.utility import (
    RateState,
    UtilityConfig,
    objective_value,
    update_average_rates,
    utility_from_rates,
    utility_value,
    verify_telescoping_identity,
)


def make_state(avg_dl, avg_ul, avg_d2d, w=1.0, beta=0.9):
    avg_dl, avg_ul, avg_d2d = map(np.atleast_1d, (avg_dl, avg_ul, avg_d2d))
    return RateState(
        avg_dl, avg_ul, avg_d2d,
        np.full(len(avg_dl), w), np.full(len(avg_ul), w), np.full(len(avg_d2d), w),
        beta=beta, gamma=1 - beta,
    )


def random_state(rng, n_cues, n_d2d, beta=0.9):
    return RateState(
        avg_dl=10 ** rng.uniform(3, 8, n_cues),
        avg_ul=10 ** rng.uniform(3, 8, n_cues),
        avg_d2d=10 ** rng.uniform(3, 8, n_d2d),
        w_dl=rng.uniform(0, 1, n_cues),
        w_ul=rng.uniform(0, 1, n_cues),
        w_d2d=rng.uniform(0, 1, n_d2d),
        beta=beta,
        gamma=1 - beta,
    )


def random_selection(rng, n_cues, n_d2d):
    while True:
        d, u = rng.integers(-1, n_cues, 2)
        l = rng.integers(-1, n_d2d)
        if d != u or d == EMPTY:
            return Selection(int(d), int(u), int(l))


def test_single_dl_slot_value():
    st_ = make_state([1e6], [1e6], [1e6])
    assert utility_from_rates(Selection(0, EMPTY, EMPTY), (1e7, 0, 0), st_) == pytest.approx(0.7472144018302211, rel=1e-12)
    assert utility_from_rates(Selection(0, EMPTY, EMPTY), (1e7, 0, 0), st_) == pytest.approx(math.log(1.9 / 0.9), rel=1e-12)


def test_zero_rates_and_empty_give_zero():
    st_ = make_state([1e6, 2e6], [3e5, 1e3], [5e6])
    assert utility_from_rates(Selection(0, 1, 0), (0, 0, 0), st_) == 0.0
    assert utility_from_rates(Selection(), (0, 0, 0), st_) == 0.0


def test_utility_value_uses_link_model(hand_scenario, table):
    sel = Selection(0, 1, 0)
    p = PowerAllocation(*hand_scenario.p_max)
    st_ = make_state([1e6, 2e6], [1e5, 1e3], [4e6])
    rates = link_rates(hand_scenario, sel, p, table)
    expected = sum(math.log(0.9 * a + 0.1 * r) - math.log(0.9 * a) for a, r in zip((1e6, 1e3, 4e6), rates))
    assert utility_value(sel, p, st_, hand_scenario, table) == pytest.approx(expected, rel=1e-12)


def test_ema_step():
    st_ = make_state([10.0], [10.0], [10.0])
    new = update_average_rates(st_, [20.0], [0.0], [0.0], floor=False)
    assert new.avg_dl[0] == pytest.approx(11.0)
    assert new.avg_ul[0] == pytest.approx(9.0)


def test_ema_floor():
    st_ = RateState.initial(2, 1)
    new = update_average_rates(st_, [0, 0], [0, 0], [0])
    assert np.all(new.avg_dl == st_.epsilon_rate)


def test_ema_converges_to_constant_rate():
    st_ = RateState.initial(1, 1)
    c = 3.3e7
    for _ in range(int(10 / st_.gamma)):
        st_ = update_average_rates(st_, [c], [c], [c])
    assert abs(st_.avg_dl[0] - c) / c < 0.01


def test_objective_values():
    assert objective_value(make_state([1, 1], [1, 1], [1], w=0.3)) == 0.0
    assert objective_value(RateState([math.e], [1.0], [1.0], [1.0], [0.0], [0.0])) == pytest.approx(1.0)
    rng = np.random.default_rng(0)
    st_ = random_state(rng, 4, 3)
    manual = 0.0
    for avgs, ws in ((st_.avg_dl, st_.w_dl), (st_.avg_ul, st_.w_ul), (st_.avg_d2d, st_.w_d2d)):
        for a, w in zip(avgs, ws):
            manual += w * math.log(a)
    assert objective_value(st_) == pytest.approx(manual, rel=1e-12)


def test_telescoping_identity_empty_selection(scenario):
    st_ = random_state(np.random.default_rng(1), scenario.num_cues, scenario.num_d2d)
    assert verify_telescoping_identity(st_, Selection(), PowerAllocation(), scenario) < 1e-9


def test_telescoping_identity_random(scenario, table):
    rng = np.random.default_rng(2)
    worst = 0.0
    for beta in (0.5, 0.9, 0.99):
        for _ in range(300):
            st_ = random_state(rng, scenario.num_cues, scenario.num_d2d, beta)
            sel = random_selection(rng, scenario.num_cues, scenario.num_d2d)
            p = PowerAllocation(*np.where(sel.active, rng.uniform(0, 1, 3) * scenario.p_max, 0.0))
            worst = max(worst, verify_telescoping_identity(st_, sel, p, scenario, table))
    assert worst < 1e-9


@pytest.mark.parametrize("bad", [dict(beta=1.0), dict(beta=0.0), dict(epsilon_rate=0), dict(w_d2d=1.5)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        UtilityConfig(**bad)


def test_state_validation():
    with pytest.raises(ValueError):
        RateState([1.0], [1.0], [1.0], [1.0], [1.0], [1.0], beta=0.9, gamma=0.2)
    with pytest.raises(ValueError):
        RateState([0.0], [1.0], [1.0], [1.0], [1.0], [1.0])


# property suites

_rates = st.floats(0.0, 6e7)
_avgs = st.floats(1e3, 1e8)


@settings(max_examples=1000, deadline=None)
@given(_avgs, _avgs, _avgs, _rates, _rates, _rates, st.floats(0.0, 1e7))
def test_utility_non_decreasing_in_own_rate(a, b, c, r1, r2, r3, bump):
    st_ = make_state([a], [b], [c])
    sel = Selection(0, EMPTY, 0)
    base = utility_from_rates(sel, (r1, 0, r3), st_)
    assert utility_from_rates(sel, (r1 + bump, 0, r3), st_) >= base
    assert utility_from_rates(sel, (r1, 0, r3 + bump), st_) >= base


@settings(max_examples=1000, deadline=None)
@given(_avgs, _avgs, _avgs, _rates, st.floats(0.01, 100.0))
def test_invariant_to_other_links_and_linear_in_weights(a, other, c, r, scale):
    st1 = make_state([a, other], [c, c], [c], w=0.01)
    st2 = make_state([a, 7 * other], [c, 3 * c], [c], w=0.01)
    sel = Selection(0, EMPTY, EMPTY)
    assert utility_from_rates(sel, (r, 0, 0), st1) == utility_from_rates(sel, (r, 0, 0), st2)
    scaled = st1.replace(w_dl=st1.w_dl * scale, w_ul=st1.w_ul * scale, w_d2d=st1.w_d2d * scale)
    assert utility_from_rates(sel, (r, 0, 0), scaled) == pytest.approx(scale * utility_from_rates(sel, (r, 0, 0), st1), rel=1e-12)


@settings(max_examples=1000, deadline=None)
@given(st.floats(1e3, 6e7), st.floats(0.05, 0.95))
def test_ema_fixed_point(c, beta):
    st_ = RateState.initial(1, 1, UtilityConfig(beta=beta))
    for _ in range(int(math.ceil(10 / st_.gamma))):
        st_ = update_average_rates(st_, [c], [c], [c])
    assert abs(st_.avg_d2d[0] - c) <= 0.01 * c
