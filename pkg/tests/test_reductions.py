import math

import pytest

from adoptnet.reductions import HALF_LIFE_KAPPAS, aggregate, half_life, hazard, katz_shapiro, run_all, timing_friction


def test_all_checks_pass():
    results = run_all(0)
    assert [r.name for r in results] == ["katz_shapiro", "timing_friction", "hazard", "aggregate"]
    assert all(r.passed for r in results)


@pytest.mark.parametrize("kappa", HALF_LIFE_KAPPAS)
def test_half_life_within_one_step(kappa):
    assert abs(half_life(kappa, 0.01) - math.log(2) / kappa) <= 0.01


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_checks_hold_across_seeds(seed):
    assert katz_shapiro(seed).passed and hazard(seed).passed and aggregate(seed).passed


def test_timing_friction_coarse_step():
    assert timing_friction(0.05).passed
