import logging

import pytest

from lrgmp.config import GRADCHECK_TOL
from lrgmp.errors import ParameterError
from lrgmp.optimize.gradcheck import (
    GradcheckConfig, config_grid, fd_gradcheck, format_table, reports_document, run_gradcheck,
)


def test_grid_covers_every_combination():
    grid = config_grid()
    combos = {(c.layer_kind, c.placement, c.prompt_kind) for c in grid}
    assert len(grid) == len(combos) == 24


@pytest.mark.parametrize("layer_kind", ["gcn", "gin", "mpnn"])
@pytest.mark.parametrize("prompt_kind", ["lr_gmp", "cond_lr_gmp"])
def test_single_configuration_passes(layer_kind, prompt_kind):
    cfg = GradcheckConfig(layer_kind, "all", prompt_kind, num_nodes=6)
    report = fd_gradcheck(cfg, seed=4)
    assert report.passed, format_table([report])
    assert report.max_rel_err < GRADCHECK_TOL
    names = {row.name for row in report.params}
    assert {"head/w", "head/b", "prompt/0/V", "prompt/1/V"} <= names


@pytest.mark.parametrize("prompt_kind", ["node_multi", "edge_weight_mul", "hybrid", "subgraph"])
def test_data_prompt_baselines_pass(prompt_kind):
    cfg = GradcheckConfig("mpnn", "first", prompt_kind, num_nodes=5)
    report = fd_gradcheck(cfg, seed=2)
    assert report.passed, format_table([report])


def test_sign_flip_mutant_fails():
    reports = run_gradcheck(4, seed=0, mutant="sign-flip")
    assert not reports_document(reports)["pass"]
    assert all(r.mutant == "sign-flip" for r in reports)


@pytest.mark.slow
def test_full_grid_passes():
    reports = run_gradcheck(seed=0)
    doc = reports_document(reports)
    assert doc["pass"], format_table(reports)
    assert len(doc["reports"]) == 24


def test_runs_are_reproducible():
    a = reports_document(run_gradcheck(3, seed=7))
    b = reports_document(run_gradcheck(3, seed=7))
    assert a == b


def test_kink_skips_are_logged(caplog):
    with caplog.at_level(logging.WARNING, logger="lrgmp.optimize.gradcheck"):
        reports = run_gradcheck(6, seed=1)
    kinks = sum(row.kinks for r in reports for row in r.params)
    assert ("ReLU kinks" in caplog.text) == (kinks > 0)


def test_bad_arguments():
    with pytest.raises(ParameterError):
        run_gradcheck(0)
    with pytest.raises(ParameterError):
        fd_gradcheck(GradcheckConfig("gcn", "first", "lr_gmp"), 0, mutant="drop-mask")
