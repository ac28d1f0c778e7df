# lrgmp - Data prompt / message prompt equivalence checks
# AGPL-3.0-or-later
#
# For random graphs and random prompt parameters, compares
#   GDP side : messages (or sum-aggregated updates) of the prompted graph
#   GMP side : messages of the original graph plus the translated prompt
# under ConcatMPNN messages. One report per proposition:
#
#   1  node feature prompts      (variants: single, multi)
#   2  edge feature prompts      (variants: single, multi)
#   3  edge weight prompts       (variants: add, mul)
#   4  subgraph prompts          (compared after sum aggregation, original nodes)
#   5  hybrid prompts
#
# Failures are reported, never raised.

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from lrgmp.config import (
    EQUIV_DE_RANGE, EQUIV_DV_RANGE, EQUIV_SIZE_RANGE, EQUIV_TOL, EQUIV_TRIALS,
    SCHEMA_VERSION,
)
from lrgmp.errors import ParameterError
from lrgmp.graph.core import Graph, from_arrays
from lrgmp.linalg.dense import Rng, make_rng
from lrgmp.message.engine import ConcatMPNN, aggregate, build_messages
from lrgmp.prompt.gmp import MUTANTS, apply_gmp, gdp_to_gmp
from lrgmp.prompt.zoo import (
    EdgeMulti, EdgeSingle, EdgeWeightAdd, EdgeWeightMul, GdpSpec, Hybrid,
    NodeMulti, NodeSingle, Subgraph, apply_gdp,
)

log = logging.getLogger(__name__)

PROPOSITIONS = (1, 2, 3, 4, 5)


@dataclass
class EquivReport:
    """Outcome of one proposition over `trials` random instances."""

    proposition: int
    trials: int
    max_abs_diff: float
    passed: bool
    seed: int
    tolerance: float
    skipped_nodes: list = field(default_factory=list)     # [{"trial": t, "node": v}]
    variants: dict = field(default_factory=dict)          # variant -> max_abs_diff
    mutant: str | None = None

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["pass"] = doc.pop("passed")
        return doc


@dataclass
class InstanceResult:
    max_abs_diff: float
    skipped_nodes: tuple[int, ...] = ()


def passes(max_abs_diff: float, tol: float) -> bool:
    """Strictly below tol, or bit-equal (so tol = 0 demands exact agreement)."""
    return max_abs_diff < tol or max_abs_diff == 0.0


# ---------------------------------------------------------------------------
# Single instance
# ---------------------------------------------------------------------------

def check_instance(graph: Graph, spec: GdpSpec, mutant: str | None = None) -> InstanceResult:
    """Compare the GDP and GMP sides of one (graph, spec) pair."""
    M = build_messages(graph, graph.node_feat, ConcatMPNN())
    P = gdp_to_gmp(graph, graph.node_feat, spec, mutant=mutant)
    gmp_side = apply_gmp(M, P)
    prompted = apply_gdp(graph, spec)

    if isinstance(spec, Subgraph):
        n = graph.num_nodes
        union_msgs = build_messages(prompted, prompted.node_feat, ConcatMPNN())
        gdp_agg = aggregate(prompted, union_msgs)[:n]
        gmp_agg = aggregate(graph, gmp_side)
        keep = np.ones(n, dtype=bool)
        keep[list(P.uncovered)] = False
        diff = np.abs(gdp_agg[keep] - gmp_agg[keep])
        return InstanceResult(_max(diff), P.uncovered)

    gdp_side = build_messages(prompted, prompted.node_feat, ConcatMPNN())
    return InstanceResult(_max(np.abs(gdp_side.mat - gmp_side.mat)))


def _max(diff: np.ndarray) -> float:
    return float(diff.max()) if diff.size else 0.0


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------

def random_graph(rng: Rng, size_range=EQUIV_SIZE_RANGE, d_e_min: int = EQUIV_DE_RANGE[0]) -> Graph:
    """Random directed graph with Gaussian features and weights in [0.5, 2)."""
    lo, hi = size_range
    n = int(rng.integers(lo, hi + 1))
    d_v = int(rng.integers(EQUIV_DV_RANGE[0], EQUIV_DV_RANGE[1] + 1))
    d_e = int(rng.integers(max(d_e_min, EQUIV_DE_RANGE[0]), EQUIV_DE_RANGE[1] + 1))
    density = rng.uniform(0.05, 0.5)
    mask = rng.random((n, n)) < density
    src, dst = np.nonzero(mask)
    m = len(src)
    return from_arrays(
        n, src, dst,
        rng.standard_normal((n, d_v)),
        rng.standard_normal((m, d_e)),
        rng.uniform(0.5, 2.0, size=m),
    )


def _basis(rng: Rng, width: int) -> tuple[np.ndarray, float]:
    k = int(rng.integers(1, 5))
    return rng.standard_normal((k, width)), float(rng.uniform(0.5, 2.0))


def random_specs(prop: int, graph: Graph, rng: Rng) -> dict[str, GdpSpec]:
    """Variant name -> random spec for one proposition on `graph`."""
    d_v, d_e, m = graph.d_v, graph.d_e, graph.num_edges
    if prop == 1:
        Z, tau = _basis(rng, d_v)
        return {"single": NodeSingle(rng.standard_normal(d_v)), "multi": NodeMulti(Z, tau)}
    if prop == 2:
        F, tau = _basis(rng, d_e)
        return {"single": EdgeSingle(rng.standard_normal(d_e)), "multi": EdgeMulti(F, tau)}
    if prop == 3:
        return {"add": EdgeWeightAdd(rng.standard_normal(m)),
                "mul": EdgeWeightMul(rng.uniform(0.0, 2.0, size=m))}
    if prop == 4:
        return {"subgraph": random_subgraph(graph, rng)}
    if prop == 5:
        Z, tau = _basis(rng, d_v)
        return {"hybrid": Hybrid(Z, tau, rng.uniform(0.0, 2.0, size=m))}
    raise ParameterError(f"proposition must be one of {PROPOSITIONS}, got {prop}")


def random_subgraph(graph: Graph, rng: Rng) -> Subgraph:
    n, K = graph.num_nodes, int(rng.integers(1, 5))
    pairs = np.argwhere(rng.random((n, K)) < 0.3)
    L = len(pairs)
    internal = np.argwhere((rng.random((K, K)) < 0.3) & ~np.eye(K, dtype=bool))
    return Subgraph(
        hp=rng.standard_normal((K, graph.d_v)),
        link_node=pairs[:, 0],
        link_prompt=pairs[:, 1],
        link_weight=rng.uniform(0.5, 2.0, size=L),
        link_feat=rng.standard_normal((L, graph.d_e)),
        internal=internal,
        internal_weight=rng.uniform(0.5, 2.0, size=len(internal)),
    )


# ---------------------------------------------------------------------------
# Propositions
# ---------------------------------------------------------------------------

def verify_proposition(
    prop: int,
    trials: int = EQUIV_TRIALS,
    size_range=EQUIV_SIZE_RANGE,
    tol: float = EQUIV_TOL,
    seed: int = 0,
    mutant: str | None = None,
) -> EquivReport:
    """Check one proposition over `trials` random instances.

    Raises
    ------
    ParameterError : unknown proposition or mutant, trials < 1, tol < 0, bad size_range
    """
    if prop not in PROPOSITIONS:
        raise ParameterError(f"proposition must be one of {PROPOSITIONS}, got {prop}")
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    if tol < 0:
        raise ParameterError(f"tolerance must be >= 0, got {tol}")
    if mutant is not None and mutant not in MUTANTS:
        raise ParameterError(f"unknown mutant {mutant!r}; choose from {MUTANTS}")
    lo, hi = size_range
    if not 1 <= lo <= hi:
        raise ParameterError(f"size_range must satisfy 1 <= lo <= hi, got {size_range}")

    rng = make_rng(np.random.SeedSequence([seed, prop]))
    d_e_min = 1 if prop == 2 else 0
    variants: dict[str, float] = {}
    skipped: list[dict] = []
    for t in range(trials):
        graph = random_graph(rng, size_range, d_e_min)
        for name, spec in random_specs(prop, graph, rng).items():
            res = check_instance(graph, spec, mutant)
            variants[name] = max(variants.get(name, 0.0), res.max_abs_diff)
            skipped.extend({"trial": t, "node": v} for v in res.skipped_nodes)
        log.debug("prop %d trial %d: %s", prop, t, variants)

    worst = max(variants.values())
    report = EquivReport(
        proposition=prop,
        trials=trials,
        max_abs_diff=worst,
        passed=passes(worst, tol),
        seed=seed,
        tolerance=tol,
        skipped_nodes=skipped,
        variants=variants,
        mutant=mutant,
    )
    log.info("proposition %d: max |diff| %.3e over %d trials -> %s",
             prop, worst, trials, "pass" if report.passed else "FAIL")
    return report


def verify_all(
    trials: int = EQUIV_TRIALS,
    seed: int = 0,
    tol: float = EQUIV_TOL,
    size_range=EQUIV_SIZE_RANGE,
    mutant: str | None = None,
) -> list[EquivReport]:
    return [verify_proposition(p, trials, size_range, tol, seed, mutant) for p in PROPOSITIONS]


def reports_document(reports: list[EquivReport]) -> dict:
    """JSON document for the verify command."""
    return {
        "schema_version": SCHEMA_VERSION,
        "pass": all(r.passed for r in reports),
        "reports": [r.to_dict() for r in reports],
    }


def instance_document(spec: GdpSpec, result: InstanceResult, tol: float = EQUIV_TOL,
                      mutant: str | None = None) -> dict:
    """JSON document for one stored (graph, data prompt) pair."""
    if tol < 0:
        raise ParameterError(f"tol must be >= 0, got {tol}")
    return {
        "schema_version": SCHEMA_VERSION,
        "pass": passes(result.max_abs_diff, tol),
        "kind": spec.kind,
        "max_abs_diff": result.max_abs_diff,
        "tolerance": tol,
        "skipped_nodes": list(result.skipped_nodes),
        "mutant": mutant,
    }
