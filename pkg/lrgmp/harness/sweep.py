# lrgmp - Cartesian experiment sweeps
# AGPL-3.0-or-later
#
# Axes: r x placement x shots x noise, every cell run once per seed. Cells
# run in a process pool sized from compute.get_config(); results are sorted
# back into (cell, seed) order before anything is written, so the output does
# not depend on scheduling.

import dataclasses
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass

from tqdm import tqdm

from lrgmp.compute import get_config
from lrgmp.errors import ConfigError
from lrgmp.harness.experiment import ExperimentConfig, ResultRow, parse_noise, run_experiment

log = logging.getLogger(__name__)


@dataclass
class SweepAxes:
    r: tuple[int, ...]
    placement: tuple[str, ...]
    shots: tuple[int, ...]
    noise: tuple[str, ...]

    def validate(self) -> "SweepAxes":
        for name in ("r", "placement", "shots", "noise"):
            if not getattr(self, name):
                raise ConfigError(f"sweep axis {name!r} is empty")
        for noise in self.noise:
            parse_noise(noise)
        return self

    def cells(self) -> list[tuple]:
        return list(itertools.product(self.r, self.placement, self.shots, self.noise))


def expand_noise(spec: str) -> tuple[str, ...]:
    """'random:0,0.2,0.4' -> ('random:0', 'random:0.2', 'random:0.4'); 'none' stays."""
    kind, sep, amounts = spec.partition(":")
    if not sep:
        return (spec,)
    return tuple(f"{kind}:{a}" for a in amounts.split(",") if a)


def cell_configs(base: ExperimentConfig, axes: SweepAxes) -> list[ExperimentConfig]:
    configs = []
    for r, placement, shots, noise in axes.validate().cells():
        train = dataclasses.replace(base.train, r=r, placement=placement, shots=shots)
        configs.append(dataclasses.replace(base, train=train, noise=noise).validate())
    return configs


def _run(config: ExperimentConfig, seed: int, timing: bool) -> ResultRow:
    row, _ = run_experiment(config, seed, timing)
    return row


def run_sweep(base: ExperimentConfig, axes: SweepAxes, seeds, timing: bool = False,
              workers: int | None = None) -> list[ResultRow]:
    """Every (cell, seed) pair; rows come back in cell-major, seed-minor order."""
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ConfigError("a sweep needs at least one seed")
    configs = cell_configs(base, axes)
    tasks = [(ci, si) for ci in range(len(configs)) for si in range(len(seeds))]
    workers = workers or get_config().workers_for(len(tasks))
    log.info("sweep: %d cells x %d seeds on %d workers", len(configs), len(seeds), workers)

    results: dict[tuple[int, int], ResultRow] = {}
    progress = tqdm(total=len(tasks), desc="sweep", unit="run", disable=None)
    if workers == 1:
        for ci, si in tasks:
            results[ci, si] = _run(configs[ci], seeds[si], timing)
            progress.update()
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run, configs[ci], seeds[si], timing): (ci, si) for ci, si in tasks}
            for fut in as_completed(futures):
                results[futures[fut]] = fut.result()
                progress.update()
    progress.close()
    return [results[key] for key in tasks]
