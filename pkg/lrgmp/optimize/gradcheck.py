# lrgmp - Finite-difference gradient check
# AGPL-3.0-or-later
#
# Compares analytic gradients from loss_and_backward with central
# differences (L(θ+h) - L(θ-h)) / 2h for every scalar prompt and head
# parameter. Relative error is |a - n| / max(|a|, |n|, 1e-8).
#
# Two kinds of entries are counted but left out of max_rel_err:
#   kinks   - the ±h step changes a ReLU activation pattern
#   floored - max(|a|, |n|) below the resolution of central differences

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from lrgmp.backbone.model import (
    BackboneSpec, Head, PromptState, cross_entropy, flatten_params, forward,
    init_backbone, loss_and_backward,
)
from lrgmp.config import (
    GRADCHECK_ABS_FLOOR, GRADCHECK_CONFIGS, GRADCHECK_DENOM_MIN, GRADCHECK_STEP,
    GRADCHECK_TOL, LAYER_KINDS, PLACEMENTS, SCHEMA_VERSION,
)
from lrgmp.errors import ParameterError
from lrgmp.graph.core import Graph, from_arrays
from lrgmp.linalg.dense import Rng, make_rng, randn
from lrgmp.optimize.trainer import TrainConfig, init_prompt, resolve_placement

log = logging.getLogger(__name__)

MUTANTS = ("sign-flip",)
DEFAULT_KINDS = ("lr_gmp", "cond_lr_gmp")
PARAM_STD = 0.5


@dataclass
class GradcheckConfig:
    layer_kind: str
    placement: str
    prompt_kind: str
    num_layers: int = 2
    num_nodes: int = 8
    hidden: int = 3
    edge_dim: int = 1
    num_classes: int = 3
    r: int = 2
    self_loops: bool = True


@dataclass
class ParamRow:
    name: str
    size: int
    checked: int
    kinks: int
    floored: int
    max_rel_err: float


@dataclass
class GradcheckReport:
    config: GradcheckConfig
    seed: int
    max_rel_err: float
    passed: bool
    params: list[ParamRow] = field(default_factory=list)
    mutant: str | None = None

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["pass"] = doc.pop("passed")
        return doc


def config_grid(n_configs: int = GRADCHECK_CONFIGS, kinds=DEFAULT_KINDS) -> list[GradcheckConfig]:
    """Cycle layer kind fastest, then placement, then prompt kind."""
    grid = []
    for i in range(n_configs):
        grid.append(GradcheckConfig(
            layer_kind=LAYER_KINDS[i % len(LAYER_KINDS)],
            placement=PLACEMENTS[(i // len(LAYER_KINDS)) % len(PLACEMENTS)],
            prompt_kind=kinds[(i // (len(LAYER_KINDS) * len(PLACEMENTS))) % len(kinds)],
        ))
    return grid


def _random_instance(cfg: GradcheckConfig, rng: Rng) -> tuple[Graph, BackboneSpec, np.ndarray]:
    n = cfg.num_nodes
    mask = (rng.random((n, n)) < 0.35) & ~np.eye(n, dtype=bool)
    src, dst = np.nonzero(mask)
    graph = from_arrays(
        n, src, dst,
        rng.standard_normal((n, cfg.hidden)),
        rng.standard_normal((len(src), cfg.edge_dim)),
        rng.uniform(0.5, 1.5, size=len(src)),
    )
    dims = (cfg.hidden,) * cfg.num_layers + (cfg.hidden,)
    backbone = init_backbone(cfg.layer_kind, dims, cfg.edge_dim, cfg.self_loops, rng)
    labels = rng.integers(0, cfg.num_classes, size=n)
    return graph, backbone, labels


def _randomize(params: dict[str, np.ndarray], rng: Rng):
    # Move every parameter off its (often zero) initialization
    for name in sorted(params):
        arr = params[name]
        arr += PARAM_STD * rng.standard_normal(arr.shape)


def fd_gradcheck(cfg: GradcheckConfig, seed: int, mutant: str | None = None,
                 step: float = GRADCHECK_STEP, tol: float = GRADCHECK_TOL) -> GradcheckReport:
    """Check every scalar prompt and head parameter of one random configuration."""
    if mutant is not None and mutant not in MUTANTS:
        raise ParameterError(f"unknown gradcheck mutant {mutant!r}; choose from {MUTANTS}")
    rng = make_rng(seed)
    graph, backbone, labels = _random_instance(cfg, rng)
    placement = resolve_placement(cfg.placement, backbone.num_layers)
    tc = TrainConfig(r=cfg.r, k=2, prompt_kind=cfg.prompt_kind)
    state = init_prompt(cfg.prompt_kind, backbone, graph, placement, tc, rng)
    head = Head(randn(rng, backbone.out_dim, cfg.num_classes, 1.0), randn(rng, 1, cfg.num_classes, 0.1)[0])
    params = flatten_params(state, head)
    _randomize(params, rng)
    mask = np.arange(graph.num_nodes)

    def run(state: PromptState | None):
        _, cache = forward(backbone, graph, state, head)
        return cache

    base = run(state)
    base_pattern = base.relu_pattern()
    _, grads = loss_and_backward(base, labels, mask)
    if mutant == "sign-flip":
        grads = {name: -g for name, g in grads.items()}

    def loss_and_pattern():
        cache = run(state)
        loss, _ = cross_entropy(cache.logits, labels, mask)
        return loss, cache.relu_pattern()

    rows, worst = [], 0.0
    for name in sorted(params):
        arr = params[name]
        analytic = grads[name]
        flat, g_flat = arr.reshape(-1), analytic.reshape(-1)
        kinks = floored = checked = 0
        row_worst = 0.0
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            lp, pat_p = loss_and_pattern()
            flat[i] = orig - step
            lm, pat_m = loss_and_pattern()
            flat[i] = orig
            if not (_same(pat_p, base_pattern) and _same(pat_m, base_pattern)):
                kinks += 1
                continue
            a, num = float(g_flat[i]), (lp - lm) / (2.0 * step)
            scale = max(abs(a), abs(num))
            if scale < GRADCHECK_ABS_FLOOR:
                floored += 1
                continue
            err = abs(a - num) / max(scale, GRADCHECK_DENOM_MIN)
            row_worst = max(row_worst, err)
            checked += 1
        rows.append(ParamRow(name, flat.size, checked, kinks, floored, row_worst))
        worst = max(worst, row_worst)

    skipped = sum(r.kinks for r in rows)
    if skipped:
        log.warning("gradcheck %s/%s/%s seed %d: %d entries skipped at ReLU kinks",
                    cfg.layer_kind, cfg.placement, cfg.prompt_kind, seed, skipped)
    report = GradcheckReport(cfg, seed, worst, worst < tol, rows, mutant)
    log.debug("gradcheck %s/%s/%s seed %d: max rel err %.3e",
              cfg.layer_kind, cfg.placement, cfg.prompt_kind, seed, worst)
    return report


def _same(a: list[np.ndarray], b: list[np.ndarray]) -> bool:
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def run_gradcheck(n_configs: int = GRADCHECK_CONFIGS, seed: int = 0, kinds=DEFAULT_KINDS,
                  mutant: str | None = None) -> list[GradcheckReport]:
    """fd_gradcheck over a grid of configurations with per-config seeds from `seed`."""
    if n_configs < 1:
        raise ParameterError(f"need at least one configuration, got {n_configs}")
    seeds = np.random.SeedSequence(seed).generate_state(n_configs, dtype=np.uint32)
    grid = config_grid(n_configs, tuple(kinds))
    rng = make_rng(seed)
    reports = []
    for cfg, s in zip(grid, seeds):
        # Vary sizes across the grid: N <= 12, L <= 3
        cfg.num_layers = int(rng.integers(1, 4))
        cfg.num_nodes = int(rng.integers(3, 13))
        cfg.hidden = int(rng.integers(2, 5))
        cfg.num_classes = int(rng.integers(2, 4))
        cfg.edge_dim = int(rng.integers(1, 3))
        cfg.self_loops = bool(rng.integers(0, 2))
        reports.append(fd_gradcheck(cfg, int(s), mutant))
    worst = max(r.max_rel_err for r in reports)
    log.info("gradcheck: %d configs, max rel err %.3e", len(reports), worst)
    return reports


def reports_document(reports: list[GradcheckReport]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "pass": all(r.passed for r in reports),
        "max_rel_err": max(r.max_rel_err for r in reports),
        "reports": [r.to_dict() for r in reports],
    }


def format_table(reports: list[GradcheckReport]) -> str:
    """Plain-text table: one line per (config, parameter group)."""
    lines = [f"{'layer':<5} {'place':<6} {'prompt':<12} {'param':<16} {'n':>5} "
             f"{'kinks':>5} {'floor':>5} {'max_rel_err':>12}"]
    for rep in reports:
        c = rep.config
        for row in rep.params:
            lines.append(f"{c.layer_kind:<5} {c.placement:<6} {c.prompt_kind:<12} {row.name:<16} "
                         f"{row.checked:>5} {row.kinks:>5} {row.floored:>5} {row.max_rel_err:>12.3e}")
    verdict = "PASS" if all(r.passed for r in reports) else "FAIL"
    lines.append(f"{verdict}: max rel err {max(r.max_rel_err for r in reports):.3e}")
    return "\n".join(lines) + "\n"
