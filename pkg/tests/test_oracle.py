import numpy as np
import pytest

from roadmap.core import DomainError, RankingInstance
from roadmap.decomp import BatchCounts, worst_case_bound
from roadmap.metrics import exact_ap
from roadmap.oracle import (
    enumerate_worst_dg,
    finite_diff_grad,
    grad_check,
    random_instance,
    sort_based_ap,
)


def test_sort_based_examples():
    inst = RankingInstance(np.array([0, 1]), np.array([2]))
    assert sort_based_ap([0.9, 0.7, 0.8], inst) == pytest.approx(5 / 6)
    assert sort_based_ap([0.9, 0.7, 0.8], inst) == pytest.approx(exact_ap([0.9, 0.7, 0.8], inst))
    assert sort_based_ap([0.9, 0.8, 0.1], inst) == 1.0
    rev = RankingInstance(np.array([0]), np.array([1, 2]))
    assert sort_based_ap([0.1, 0.5, 0.9], rev) == pytest.approx(1 / 3)
    with pytest.raises(DomainError):
        sort_based_ap([0.5, 0.5, 0.1], inst)


@pytest.mark.parametrize("seed", range(20))
def test_sort_based_agrees_with_exact(seed):
    s, inst = random_instance(seed, seed=11)
    assert sort_based_ap(s, inst) == pytest.approx(exact_ap(s, inst), abs=1e-12)


def test_enumeration_examples():
    assert enumerate_worst_dg([(1, 1), (1, 1)]) == pytest.approx(1 / 6)
    assert enumerate_worst_dg([(3, 2)]) == 0.0
    assert enumerate_worst_dg([(2, 2), (2, 2)]) == pytest.approx(worst_case_bound(BatchCounts.uniform(2, 2, 2)))
    with pytest.raises(DomainError):
        enumerate_worst_dg([(7, 7)])


def test_finite_diff_constant_region():
    inst = RankingInstance(np.array([0]), np.array([1]))
    est, skip = finite_diff_grad("calibration", [0.95, 0.2], inst)
    assert np.abs(est).max() < 1e-10 and not skip.any()


def test_finite_diff_hinge_slope():
    inst = RankingInstance(np.array([0, 1]), np.array([2]))
    est, _ = finite_diff_grad("calibration", [0.5, 0.95, 0.1], inst)
    assert est[0] == pytest.approx(-1 / 2, rel=1e-6)


def test_finite_diff_skips_hinge_boundary():
    inst = RankingInstance(np.array([0]), np.array([1]))
    _, skip = finite_diff_grad("calibration", [0.9, 0.2], inst)
    assert skip[0] and not skip[1]


@pytest.mark.parametrize("kind", ["supap", "smoothap", "calibration", "roadmap"])
def test_grad_check_passes(kind):
    rep = grad_check(kind, trials=100, tolerance=1e-4)
    assert rep.passed, rep.max_rel_err
    assert rep.checked + rep.skipped > 0


def test_grad_check_impossible_tolerance_fails():
    assert not grad_check("roadmap", trials=10, tolerance=1e-12).passed
