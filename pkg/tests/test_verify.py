import pytest

from errors import ConfigError
from stag.config import StagConfig
from pipeline.verify import (
    SUITES,
    check_accounting,
    check_determinism,
    check_elision,
    check_equivalence,
    check_equivariance,
    check_flop_ratio,
    check_frozen_step,
    check_geometry,
    check_grad_modes,
    check_gradients,
    check_init_identity,
    check_schedule,
    check_sharing,
    verify,
)


def test_equivalence_suite_passes():
    assert check_equivalence(instances=20) == []


def test_equivalence_suite_catches_wrong_projection():
    failures = check_equivalence(instances=5, w_prime_fn=lambda w1, w2: w1)
    assert failures
    assert "n=" in failures[0] and "k=" in failures[0]


def test_gradient_suite_passes():
    assert check_gradients() == []


def test_init_identity_suite_passes():
    assert check_init_identity() == []


def test_elision_suite_passes():
    assert check_elision() == []


@pytest.mark.parametrize("suite", [
    check_flop_ratio, check_schedule, check_geometry, check_accounting,
    check_determinism, check_frozen_step, check_equivariance, check_sharing, check_grad_modes,
])
def test_invariant_suites_pass(suite):
    assert suite() == []


def test_verify_selects_suites_and_reports_failures():
    results = verify(["schedule", "accounting"])
    assert [r.name for r in results] == ["schedule", "accounting"]
    assert all(r.passed for r in results)
    broken = verify(["equivalence"], w_prime_fn=lambda w1, w2: w1 + w2)
    assert not broken[0].passed
    with pytest.raises(ConfigError):
        verify(["speed"])
    assert set(SUITES) >= {"equivalence", "gradients", "elision"}


def test_sharing_suite_catches_collapsed_groups(monkeypatch):
    monkeypatch.setattr(StagConfig, "group_of", lambda self, layer, block: 0)
    failures = check_sharing()
    assert any(f.startswith("sl D group 0") for f in failures)


def test_every_suite_is_listed():
    assert set(SUITES) == {
        "equivalence", "gradients", "init", "elision", "flop_ratio", "schedule", "geometry", "accounting",
        "determinism", "frozen", "equivariance", "sharing", "grad_modes",
    }
