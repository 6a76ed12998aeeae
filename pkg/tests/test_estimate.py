import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from ordloc.calibrate import Calibration
from ordloc.estimate import (KINDS, all_estimates, brewster_zidek, canonical_kind, custom_equivariant,
                             estimate, ierd_check, natural, pitman_improved, pitman_nearest,
                             shrink_array, stein)
from ordloc.family import ObservationPair, exponential_family, normal_family
from ordloc.loss import make_loss

JUTE = ObservationPair(43.93, 42.66)
T_GRID = list(np.linspace(0.05, 10.0, 50))

_CALS = {}


def cal_for(fam, sigma, loss, a=None):
    key = (fam, sigma, loss, a)
    if key not in _CALS:
        family = normal_family(sigma) if fam == "normal" else exponential_family(sigma)
        _CALS[key] = Calibration(family, make_loss(loss, a))
    return _CALS[key]


def test_value_is_x_max_minus_shrink():
    cal = cal_for("exponential", 322 / 30, "absolute")
    for e in all_estimates(JUTE, cal).values():
        assert e.value == JUTE.x_max - e.shrink


def test_stein_closed_form_for_exponential_squared():
    s = 322 / 30
    e = stein(JUTE, cal_for("exponential", s, "squared"))
    assert e.value == pytest.approx(max(JUTE.x_max - s, JUTE.x_min - s / 2), abs=1e-12)


def test_pitman_examples():
    cal = cal_for("exponential", 1.0, "absolute")
    assert pitman_nearest(ObservationPair(2, 1), cal).value == pytest.approx(2 - math.log(2), abs=1e-12)
    e = pitman_improved(ObservationPair(0.5, 0.2), cal, "m0")
    assert e.value == pytest.approx(0.5 - (0.3 + 0.5 * math.log(2)), abs=1e-12)
    obs = ObservationPair(3.0, 0.4)
    assert pitman_improved(obs, cal).value == pytest.approx(
        max(3.0 - math.log(2), 0.4 - 0.5 * math.log(2)), abs=1e-12)
    with pytest.raises(ValueError):
        pitman_improved(obs, cal, "b0")


@pytest.mark.parametrize("loss", ["squared", "absolute"])
def test_normal_has_no_improvement(loss):
    cal = cal_for("normal", 2.0, loss)
    for obs in (ObservationPair(0.3, -1.0), ObservationPair(5, 5.0001), ObservationPair(-2, 8)):
        assert stein(obs, cal).value == natural(obs, cal).value
        assert pitman_improved(obs, cal).value == pitman_nearest(obs, cal).value
    assert pitman_nearest(ObservationPair(0.3, -1.0), cal).value == 0.3


def test_custom_equivariant_reproduces_named_estimators():
    cal = cal_for("exponential", 1.0, "squared")
    obs = ObservationPair(1.7, 0.9)
    assert custom_equivariant(obs, lambda u: 0.0).value == obs.x_max
    assert custom_equivariant(obs, lambda u: cal.c0).value == natural(obs, cal).value
    assert custom_equivariant(obs, cal.phi_bz).value == brewster_zidek(obs, cal).value


def test_tied_observations_are_handled():
    cal = cal_for("exponential", 1.0, "absolute")
    res = all_estimates(ObservationPair(2.0, 2.0), cal)
    assert all(math.isfinite(e.value) for e in res.values())


def test_aliases_and_unknown_kind():
    assert canonical_kind("bz") == "brewster_zidek"
    assert estimate("st", JUTE, cal_for("exponential", 322 / 30, "squared")).kind == "stein"
    with pytest.raises(ValueError):
        canonical_kind("james_stein")


def test_shrink_array_matches_scalar_path():
    cal = cal_for("exponential", 1.0, "absolute")
    u = np.array([0.0, 0.2, 1.0, 4.0])
    for kind in KINDS:
        vec = shrink_array(kind, u, cal)
        scalar = [estimate(kind, ObservationPair(x, 0.0), cal).shrink for x in u]
        np.testing.assert_allclose(vec, scalar, atol=1e-6)


CAL_STRAT = st.sampled_from([("normal", 1.0, "squared", None), ("normal", 1.0, "linex", 1.0),
                             ("exponential", 1.0, "squared", None), ("exponential", 0.5, "linex", 1.0),
                             ("exponential", 1.0, "absolute", None)])
coord = st.floats(-50, 50, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(CAL_STRAT, coord, coord, st.floats(-100, 100))
def test_equivariance_and_symmetry(cfg, x1, x2, c):
    cal = cal_for(*cfg)
    base = all_estimates(ObservationPair(x1, x2), cal)
    swapped = all_estimates(ObservationPair(x2, x1), cal)
    # shifting both observations must leave u unchanged in floating point
    assume((x1 + c) - (x2 + c) == x1 - x2)
    assume(max(x1 + c, x2 + c) == max(x1, x2) + c)
    shifted = all_estimates(ObservationPair(x1 + c, x2 + c), cal)
    for k in KINDS:
        assert swapped[k].value == base[k].value
        assert shifted[k].shrink == base[k].shrink
        assert shifted[k].value == max(x1, x2) + c - base[k].shrink


@settings(max_examples=60, deadline=None)
@given(CAL_STRAT, coord, coord)
def test_improved_estimators_move_up(cfg, x1, x2):
    cal = cal_for(*cfg)
    res = all_estimates(ObservationPair(x1, x2), cal)
    assert res["stein"].value >= res["natural"].value
    assert res["brewster_zidek"].value >= res["b0"].value - 1e-9


@pytest.mark.parametrize("cfg", [("normal", 1.0, "squared"), ("exponential", 1.0, "squared"),
                                 ("exponential", 1.0, "absolute")])
def test_ierd_brewster_zidek_passes(cfg):
    cal = cal_for(*cfg)
    rep = ierd_check(cal.phi_bz, cal, T_GRID)
    assert rep.passed
    assert max(abs(k) for k in rep.integrals) < 1e-8


def test_ierd_constant_b0_and_mixture():
    # k1 decreases in c, so condition (iii) holds exactly when phi >= phi_BZ;
    # the constant b0 therefore satisfies all three conditions
    cal = cal_for("exponential", 1.0, "squared")
    assert cal.k1(cal.b0, 0.1) < 0
    assert ierd_check(lambda t: cal.b0, cal, T_GRID).passed
    mix = ierd_check(lambda t: 0.5 * cal.phi_bz(t) + 0.5 * cal.b0, cal, T_GRID)
    assert mix.passed


def test_ierd_failures_are_reported():
    cal = cal_for("exponential", 1.0, "squared")
    rep = ierd_check(lambda t: cal.c0, cal, T_GRID)
    assert not rep.limit_ok and not rep.integral_ok and rep.monotone
    dec = ierd_check(lambda t: cal.b0 + 1.0 / t, cal, T_GRID)
    assert not dec.monotone
    with pytest.raises(ValueError):
        ierd_check(cal.phi_bz, cal, [1.0, 0.5])
