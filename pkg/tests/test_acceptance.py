"""Acceptance criteria on the reference scenarios.

One ``verify_all`` run (about 1.5 minutes) produces every scenario summary
and the roll-up; each test below asserts one criterion and prints one
PASS/FAIL line for it (also repeated in the terminal summary).
"""

import json

import pytest

from haptotaxis import acceptance


@pytest.fixture(scope="module")
def verified(tmp_path_factory):
    out = tmp_path_factory.mktemp("verify_all")
    criteria, summaries = acceptance.verify_all(out)
    return out, {c.number: c for c in criteria}, {s.name: s for s in summaries}


def assert_criterion(verified, number, criteria_lines):
    _, criteria, _ = verified
    c = criteria[number]
    line = f"criterion {number:2d} {c.title}: {'PASS' if c.passed else 'FAIL'}"
    print(line)
    print(c.report())
    criteria_lines.append(line)
    assert c.passed, c.report()


@pytest.mark.parametrize("number", range(1, 11))
def test_criterion(verified, number, criteria_lines):
    assert_criterion(verified, number, criteria_lines)


@pytest.mark.parametrize("name", ["S1", "S2", "S3", "FP1"])
def test_scenario_summary_all_checks_pass(verified, name):
    out, _, summaries = verified
    s = summaries[name]
    assert s.ok(strict=True), [(c.name, c.measured, c.threshold) for c in s.failures] + s.warnings
    js = json.loads((out / f"{name}_summary.json").read_text())
    assert js["failures"] == []


def test_rollup_written(verified):
    out, criteria, _ = verified
    rollup = json.loads((out / "verify_all_summary.json").read_text())
    assert rollup["passed"] is True
    assert [c["number"] for c in rollup["criteria"]] == list(range(1, 11))
    assert set(rollup["scenarios"]) == {"S1", "S2", "S3", "FP1"}


def test_s1_csv_header(verified):
    out, _, _ = verified
    header = (out / "S1_diagnostics.csv").read_text().splitlines()[0]
    assert header == "t,mass,F,D,entropy,u_min,u_max,w_max,grad_w_l2,u_dist_l2,clip_mass"
