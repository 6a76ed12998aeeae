import csv
import io
import math

import numpy as np
import pytest

from ordloc.family import exponential_family, normal_family
from ordloc.loss import make_loss
from ordloc.risklab import (SweepConfig, SweepError, draw_pairs, dominance_report, gpn_sweep,
                            parse_theta_grid, risk_sweep)


def cfg(fam=None, loss=None, **kw):
    kw.setdefault("reps", 20000)
    return SweepConfig(kw.pop("theta", [0.0, 1.0, 3.0]), fam or exponential_family(1.0),
                       loss or make_loss("squared"), **kw)


def test_parse_theta_grid():
    assert parse_theta_grid("0:5:0.25") == [i * 0.25 for i in range(21)]
    assert parse_theta_grid("0,1.5,2") == [0.0, 1.5, 2.0]
    with pytest.raises(ValueError):
        parse_theta_grid("0:1:0")


def test_config_validation():
    with pytest.raises(ValueError):
        cfg(theta=[-1.0])
    with pytest.raises(ValueError):
        cfg(reps=1)


def test_normal_max_second_moment_is_one():
    # E[max(Z1, Z2)^2] = 1 for iid standard normals
    curve = risk_sweep(cfg(normal_family(1.0), theta=[0.0], estimators=["natural"], reps=200000))
    assert abs(curve.risk["natural"][0] - 1.0) <= 3 * curve.se["natural"][0]


def test_brute_force_mc_oracle():
    # plain loop over the same draws, no vectorization
    c = cfg(exponential_family(1.0), make_loss("absolute"), theta=[0.0, 2.0], estimators=["stein"], reps=3000)
    curve = risk_sweep(c)
    for i, theta in enumerate(c.theta_grid):
        e1, e2 = draw_pairs(c, i)
        total = 0.0
        for a, b in zip(e1, e2):
            x1, x2 = a, theta + b
            u = abs(x1 - x2)
            shrink = min(math.log(2), u + 0.5 * math.log(2))
            total += abs(max(x1, x2) - shrink - theta)
        assert curve.risk["stein"][i] == pytest.approx(total / len(e1), rel=1e-12)


def test_exact_oracle_has_zero_risk():
    oracle = ("oracle", lambda x1, x2, theta: np.full_like(x1, theta))
    curve = risk_sweep(cfg(estimators=["natural", oracle]))
    assert curve.risk["oracle"] == [0.0, 0.0, 0.0]


def test_b0_beats_natural_at_theta_zero():
    curve = risk_sweep(cfg(theta=[0.0], estimators=["natural", "b0"], reps=50000))
    rep = dominance_report(curve, "natural", "b0")
    assert rep.rows[0].verdict == "dominates"


def test_seed_determinism_and_workers():
    a = risk_sweep(cfg(seed=7, estimators=["natural", "stein", "bz"]))
    b = risk_sweep(cfg(seed=7, estimators=["natural", "stein", "bz"], workers=3))
    assert a.to_csv() == b.to_csv()
    assert a.to_csv() != risk_sweep(cfg(seed=8, estimators=["natural", "stein", "bz"])).to_csv()


def test_block_boundaries_do_not_matter_for_shape():
    a = risk_sweep(cfg(block_size=777))
    assert len(a.risk["natural"]) == 3 and all(s > 0 for s in a.se["natural"])


def test_csv_schema_and_precision():
    curve = risk_sweep(cfg(estimators=["natural", "stein"]))
    rows = list(csv.reader(io.StringIO(curve.to_csv())))
    assert rows[0] == ["theta", "estimator", "risk", "se", "reps", "seed"]
    assert len(rows) == 1 + 3 * 2
    r = rows[1]
    assert float(r[2]) == curve.risk["natural"][0]
    assert r[4:] == ["20000", "42"]


def test_location_invariance():
    c = cfg(theta=[0.0, 1.0, 2.5], estimators=["stein"], reps=40000)
    curve = risk_sweep(c)
    shifted = SweepConfig(c.theta_grid, c.family, c.loss, reps=c.reps, seed=99)
    for i, theta in enumerate(c.theta_grid):
        e1, e2 = draw_pairs(shifted, i)
        x1, x2 = 5.0 + e1, 5.0 + theta + e2
        u = np.abs(x1 - x2)
        est = np.maximum(x1, x2) - np.minimum(1.0, u + 0.5)
        loss = (est - (5.0 + theta)) ** 2
        se = math.hypot(curve.se["stein"][i], loss.std(ddof=1) / math.sqrt(loss.size))
        assert abs(loss.mean() - curve.risk["stein"][i]) <= 2.5 * se


def test_doubling_reps_halves_se_ratio():
    ratios = []
    for seed in (1, 2, 3):
        small = risk_sweep(cfg(seed=seed, theta=[1.0], estimators=["natural"], reps=20000))
        big = risk_sweep(cfg(seed=seed, theta=[1.0], estimators=["natural"], reps=80000))
        ratios.append(big.se["natural"][0] / small.se["natural"][0])
    assert abs(np.mean(ratios) - 0.5) <= 0.1


def test_dominance_verdicts():
    curve = risk_sweep(cfg(theta=[0.0, 0.5, 1.0], estimators=["natural", "stein"]))
    assert dominance_report(curve, "natural", "stein").verdict == "dominates"
    rev = dominance_report(curve, "stein", "natural")
    assert rev.verdict == "violated" and not rev.no_violation
    assert "violated" in str(rev)
    with pytest.raises(KeyError):
        dominance_report(curve, "natural", "b0")


def test_gpn_of_estimator_with_itself():
    g = gpn_sweep(cfg(), "stein", "st")
    assert g.gpn == [0.5, 0.5, 0.5] and g.tie_fraction == [1.0, 1.0, 1.0]


def test_gpn_bounds_and_schema():
    g = gpn_sweep(cfg(loss=make_loss("absolute")), "pitman_improved_m0", "pitman_nearest")
    assert all(0.0 <= x <= 1.0 for x in g.gpn)
    rows = list(csv.reader(io.StringIO(g.to_csv())))
    assert rows[0] == ["theta", "gpn", "tie_fraction", "se", "reps", "seed"]


def test_gpn_normal_improved_pitman_is_identical():
    g = gpn_sweep(cfg(normal_family(1.0), make_loss("absolute")), "pn_m0", "pn")
    assert g.gpn == [0.5, 0.5, 0.5]


def test_calibration_failure_names_configuration():
    with pytest.raises(SweepError, match="exponential"):
        risk_sweep(cfg(loss=make_loss("linex", 2.0), estimators=["natural"]))


def test_stein_dominates_natural_normal_linex_sigma5():
    curve = risk_sweep(SweepConfig(parse_theta_grid("0:5:0.25"), normal_family(5.0), make_loss("linex", 1.0),
                                   ["natural", "stein"], reps=50000, workers=4))
    rep = dominance_report(curve, "natural", "stein")
    assert rep.no_violation
    assert rep.rows[0].verdict == "dominates"
