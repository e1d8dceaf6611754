import pytest

from scorelab.errors import CapabilityError, SpecificationError
from scorelab.scores import RuleSpec, check_propriety
from scorelab.scores.propriety import simplex_lattice, zero_one_rule

STRICT_RULES = {
    "log": RuleSpec.log(),
    "brier": RuleSpec.brier(),
    "tsallis-1.5": RuleSpec.tsallis(1.5),
    "tsallis-2": RuleSpec.tsallis(2.0),
    "tsallis-3": RuleSpec.tsallis(3.0),
    "bregman-tlogt": RuleSpec.bregman("tlogt"),
}


def test_lattice_counts():
    assert simplex_lattice(2, 100).shape == (101, 2)
    assert simplex_lattice(3, 50).shape == (1326, 3)
    assert (simplex_lattice(4, 5).sum(axis=1).round(12) == 1.0).all()


@pytest.mark.parametrize("name", sorted(STRICT_RULES))
def test_binary_rules_are_strictly_proper(name):
    report = check_propriety(STRICT_RULES[name], support_size=2, grid_step=0.01)
    assert report.passed
    assert report.worst_margin >= -1e-9
    assert report.lattice_points == 101


def test_brier_worst_margin_is_zero():
    report = check_propriety(RuleSpec.brier(), 2, 0.01)
    assert abs(report.worst_margin) < 1e-12
    assert report.strict_on_grid


def test_log_three_points():
    report = check_propriety(RuleSpec.log(), 3, 0.02)
    assert report.passed
    assert report.strict_on_grid


def test_zero_one_loss_is_proper_not_strict():
    report = check_propriety(zero_one_rule(2), 2, 0.01)
    assert report.passed
    assert report.zero_gap_pairs > 0
    assert not report.strict_on_grid
    assert report.to_dict()["strict_on_grid"] is False


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(STRICT_RULES) + ["from-loss"])
def test_three_point_suite(name):
    rule = zero_one_rule(3) if name == "from-loss" else STRICT_RULES[name]
    assert check_propriety(rule, 3, 0.01).passed


def test_argument_checks():
    with pytest.raises(SpecificationError):
        check_propriety(RuleSpec.log(), 5, 0.01)
    with pytest.raises(SpecificationError):
        check_propriety(RuleSpec.log(), 2, 0.1)
    with pytest.raises(SpecificationError):
        check_propriety(RuleSpec.log(), 2, 0.03)
    with pytest.raises(SpecificationError):
        check_propriety(zero_one_rule(3), 2, 0.01)


def test_four_point_lattice_is_capped():
    with pytest.raises(CapabilityError, match="176851 lattice points"):
        check_propriety(RuleSpec.log(), 4, 0.01)
    report = check_propriety(RuleSpec.brier(), 4, 0.05)
    assert report.lattice_points == 1771
    assert report.passed
