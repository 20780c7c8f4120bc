from __future__ import annotations

import json
import math

import pytest

from pareto_potts.core import ModelParams
from pareto_potts.solvers import RootSolveConfig
from pareto_potts.verifier import (
    CHECK_NAMES,
    CONJECTURE,
    INFO,
    MANDATORY,
    VerificationReport,
    verify,
    verify_grid,
)


@pytest.fixture(scope="module")
def report_20_6():
    return verify(ModelParams(20, 6))


def test_all_mandatory_pass(report_20_6):
    assert report_20_6.status == "ok"
    assert report_20_6.all_passed
    assert report_20_6.failures() == []


def test_names_unique_and_stable(report_20_6):
    names = [c.name for c in report_20_6.checks]
    assert tuple(names) == CHECK_NAMES
    assert len(set(names)) == len(names)


def test_kinds(report_20_6):
    kinds = {c.kind for c in report_20_6.checks}
    assert kinds <= {"inequality", "identity", "sign_pattern", "residual"}
    assert report_20_6.check("sign_pattern.K").kind == "sign_pattern"
    assert report_20_6.check("residual.criticality").kind == "residual"


def test_step_below_root_at_tau6(report_20_6):
    c = report_20_6.check("info.newton_step_vs_tc_p")
    assert c.severity == INFO
    assert c.lhs == pytest.approx(3.1436, abs=5e-5)
    assert c.rhs == pytest.approx(3.1829, abs=5e-5)
    assert c.note == "step below root"


def test_step_above_root_at_tau11():
    c = verify(ModelParams(20, 11)).check("info.newton_step_vs_tc_p")
    assert c.lhs == pytest.approx(3.7257, abs=5e-5)
    assert c.rhs == pytest.approx(3.7205, abs=5e-5)
    assert c.note == "step above root"


def test_strict_margins(report_20_6):
    tol = RootSolveConfig().tol_t
    for name in ("ordering.tc_pp<tc_p", "bound.tc<sharp", "bound.tc_p<T"):
        assert report_20_6.check(name).margin > 10 * tol


def test_conjecture_is_non_fatal(report_20_6):
    # flipping every conjecture record must not change all_passed
    before = report_20_6.all_passed
    flipped = VerificationReport(report_20_6.q, report_20_6.tau, report_20_6.params, [
        type(c)(**{**c.__dict__, "passed": False}) if c.severity == CONJECTURE else c for c in report_20_6.checks
    ])
    assert flipped.all_passed == before
    assert not flipped.strict_passed
    stripped = VerificationReport(report_20_6.q, report_20_6.tau, report_20_6.params,
                                  [c for c in report_20_6.checks if c.severity != CONJECTURE])
    assert stripped.all_passed == before


def test_identical_runs():
    a = verify(ModelParams(5, 4.5)).to_json()
    b = verify(ModelParams(5, 4.5)).to_json()
    assert a == b


def test_json_schema(report_20_6):
    d = json.loads(report_20_6.to_json())
    assert set(d) >= {"params", "checks", "all_passed"}
    assert d["params"] == {"q": 20.0, "tau": 6.0}
    assert set(d["checks"][0]) >= {"name", "kind", "passed", "lhs", "rhs", "margin"}


def test_grid_order_and_invalid_point():
    reps = verify_grid([2.0, 3.0], [4.0, 6.0])
    assert [(r.q, r.tau) for r in reps] == [(2.0, 4.0), (2.0, 6.0), (3.0, 4.0), (3.0, 6.0)]
    assert reps[0].status == "invalid_params" and not reps[0].all_passed
    assert reps[2].all_passed and reps[3].all_passed
    json.dumps(reps[0].to_dict())


def test_grid_parallel_matches_serial():
    serial = verify_grid([3.0, 20.0], [4.0, 6.0])
    parallel = verify_grid([3.0, 20.0], [4.0, 6.0], jobs=2)
    assert [r.to_json() for r in serial] == [r.to_json() for r in parallel]


def test_solver_failure_marks_remaining_skipped():
    rep = verify(ModelParams(2.001, 4))
    assert rep.status == "solver_failure"
    assert rep.failed_stage == "t_c_pp"
    assert not rep.all_passed
    assert len(rep.checks) == len(CHECK_NAMES)
    assert all(c.note.startswith("skipped") for c in rep.checks)
    d = rep.to_dict()
    assert d["checks"][0]["lhs"] is None


def test_near_two_point_passes():
    rep = verify(ModelParams(2.0001, 7))
    assert rep.all_passed
    # the K'' route cannot resolve a root this small; the record says so without failing
    c = rep.check("identity.phi_root=K2_root")
    assert c.severity == INFO


def test_conjecture_undefined_at_tau4():
    rep = verify(ModelParams(3, 4))
    c = rep.check("conjecture.tc>2(tau-5)/(tau-4)b")
    assert c.severity == INFO and math.isnan(c.lhs)
    assert rep.check("conjecture.tc>2mu3/mu4*b").severity == INFO
    assert verify(ModelParams(3, 7)).check("conjecture.tc>2mu3/mu4*b").severity == CONJECTURE


def test_severity_values(report_20_6):
    assert {c.severity for c in report_20_6.checks} <= {MANDATORY, CONJECTURE, INFO}
