import numpy as np
import pytest

from lrgmp.config import EQUIV_TOL
from lrgmp.conformance.oracle import (
    PROPOSITIONS, passes, random_graph, reports_document, verify_all, verify_proposition,
)
from lrgmp.errors import ParameterError
from lrgmp.linalg.dense import make_rng


@pytest.mark.parametrize("prop", PROPOSITIONS)
def test_proposition_holds(prop):
    report = verify_proposition(prop, trials=20, seed=3)
    assert report.passed
    assert report.max_abs_diff < EQUIV_TOL
    assert report.trials == 20


@pytest.mark.slow
def test_all_propositions_full_trials():
    reports = verify_all(seed=0)
    assert all(r.passed for r in reports)
    assert all(r.trials == 200 for r in reports)


def test_variants_are_reported_separately():
    assert set(verify_proposition(1, trials=5).variants) == {"single", "multi"}
    assert set(verify_proposition(3, trials=5).variants) == {"add", "mul"}


def test_drop_mask_mutant_is_caught():
    reports = verify_all(trials=10, seed=1, mutant="drop-mask")
    failed = {r.proposition for r in reports if not r.passed}
    assert {1, 2, 5} <= failed
    assert reports[2].variants["mul"] >= EQUIV_TOL
    assert not reports_document(reports)["pass"]
    assert all(r.mutant == "drop-mask" for r in reports)


def test_reports_are_deterministic():
    a = verify_proposition(4, trials=8, seed=9).to_dict()
    b = verify_proposition(4, trials=8, seed=9).to_dict()
    assert a == b
    assert a["pass"] and "passed" not in a


def test_zero_tolerance_needs_exact_agreement():
    assert passes(0.0, 0.0)
    assert not passes(1e-17, 0.0)
    assert passes(1e-10, 1e-9)
    assert not passes(1e-9, 1e-9)


def test_single_node_graphs():
    report = verify_proposition(4, trials=5, size_range=(1, 1))
    assert report.passed


@pytest.mark.parametrize("kwargs", [
    {"prop": 6},
    {"prop": 1, "trials": 0},
    {"prop": 1, "tol": -1.0},
    {"prop": 1, "mutant": "sign-flip"},
    {"prop": 1, "size_range": (5, 2)},
])
def test_bad_arguments(kwargs):
    with pytest.raises(ParameterError):
        verify_proposition(**kwargs)


def test_random_graph_respects_edge_feature_minimum():
    rng = make_rng(0)
    for _ in range(20):
        g = random_graph(rng, (2, 6), d_e_min=1)
        assert g.d_e >= 1
        assert 2 <= g.num_nodes <= 6
        assert np.all(g.edge_weight >= 0.5)
