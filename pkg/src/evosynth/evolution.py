"""Generational loop: train, select, synthesize, repeat.

Generation 0 is a single trained ancestor.  Each later generation draws a
fixed-size population of offspring; parents for each offspring come from
the previous generation's trained genomes.  Generation 1 therefore runs
single-parent synthesis (only the ancestor exists), which seeds structural
diversity through survival sampling before multi-parent mating starts.

Every random decision is keyed by (seed, domain, generation, network_id),
so a sweep can run its combinations in any order, serially or in a process
pool, and still produce identical populations and metrics.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataset import DataConfig, load_dataset
from .errors import ConfigError
from .genome import storage_bytes
from .mating import MODE_TAGGED, MODE_UNTAGGED, MatingConfig
from .nnet import MicroNet, MicroNetSpec, TrainerConfig, make_ancestor_genome
from .report import MetricsRow, append_metrics_csv
from .streams import DOMAIN_SELECT, stream
from .synthesis import (INIT_GEOMETRIC, ZERO_LITERAL, EnvironmentalModel,
                        SynthesisConfig, synthesize_offspring)


@dataclass(frozen=True)
class StopRule:
    """Stop once the best accuracy sits at the guessing floor for a while."""

    enabled: bool = True
    margin: float = 0.02
    patience: int = 2

    def should_stop(self, best_per_generation, floor: float) -> bool:
        if not self.enabled or len(best_per_generation) < self.patience:
            return False
        tail = best_per_generation[-self.patience:]
        return all(acc <= floor + self.margin for acc in tail)


@dataclass(frozen=True)
class ExperimentPlan:
    mode: str = MODE_TAGGED
    r_cluster: float = 0.7
    r_synapse: float = 0.7
    seed: int = 1
    population_size: int = 5
    generations: int = 8
    parent_count: int = 5
    min_parent_fraction: float = 0.6
    zero_mode: str = ZERO_LITERAL
    weight_init: str = INIT_GEOMETRIC
    netspec: MicroNetSpec = field(default_factory=MicroNetSpec)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    data: DataConfig = field(default_factory=DataConfig)
    stop: StopRule = field(default_factory=StopRule)

    def __post_init__(self):
        if self.mode not in (MODE_TAGGED, MODE_UNTAGGED):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.population_size < 1 or self.generations < 1:
            raise ConfigError("population_size and generations must be >= 1")

    @property
    def experiment_id(self) -> str:
        return (f"{self.mode}_rc{round(self.r_cluster * 100):03d}"
                f"_rs{round(self.r_synapse * 100):03d}_s{self.seed}")


def select_parents(n_available: int, parent_count: int, rng) -> np.ndarray:
    """Uniform parent draw, without replacement whenever the pool allows."""
    if n_available < 1 or parent_count < 1:
        raise ConfigError("need at least one candidate and one parent")
    if n_available == parent_count:
        return np.arange(n_available)
    replacing = n_available < parent_count
    return np.sort(rng.choice(n_available, parent_count, replace=replacing))


def _offspring_id(generation: int, population_size: int, slot: int) -> int:
    return 1 + (generation - 1) * population_size + slot


def run_combo(plan: ExperimentPlan, csv_path=None):
    """One (mode, resources, seed) experiment; returns all metrics rows."""
    train_data, test_data = load_dataset(plan.data)
    env = EnvironmentalModel(plan.r_cluster, plan.r_synapse)
    trainer = replace(plan.trainer, seed_root=plan.seed)
    floor = 1.0 / plan.netspec.classes

    def record(net, train_seconds, cumulative):
        genome = net.to_genome()
        return genome, MetricsRow(
            experiment_id=plan.experiment_id, mode=plan.mode,
            r_cluster=plan.r_cluster, r_synapse=plan.r_synapse,
            seed=plan.seed, generation=net.generation,
            network_id=net.network_id,
            accuracy=net.accuracy(test_data.images, test_data.labels),
            storage_bytes=storage_bytes(genome),
            alive_synapses=genome.alive_synapse_count(),
            train_seconds=train_seconds, cumulative_seconds=cumulative)

    cumulative = 0.0
    ancestor = make_ancestor_genome(plan.netspec, plan.seed)
    net = MicroNet.materialize(ancestor, plan.netspec)
    result = net.train(train_data.images, train_data.labels, trainer)
    cumulative += result.train_seconds
    genome, row = record(net, result.train_seconds, cumulative)
    population = [genome]
    rows = [row]
    if csv_path:
        append_metrics_csv(csv_path, [row])
    best_history = [row.accuracy]

    for generation in range(1, plan.generations + 1):
        if plan.stop.should_stop(best_history, floor):
            break
        parent_count = 1 if len(population) == 1 else plan.parent_count
        mating = MatingConfig(parent_count=parent_count,
                              min_parent_fraction=plan.min_parent_fraction,
                              mode=plan.mode)
        config = SynthesisConfig(mating=mating, env=env, seed_root=plan.seed,
                                 zero_mode=plan.zero_mode,
                                 weight_init=plan.weight_init)
        next_population = []
        generation_rows = []
        for slot in range(plan.population_size):
            network_id = _offspring_id(generation, plan.population_size, slot)
            picks = select_parents(
                len(population), parent_count,
                stream(plan.seed, DOMAIN_SELECT, generation, network_id))
            child = synthesize_offspring([population[i] for i in picks],
                                         config, generation, network_id)
            net = MicroNet.materialize(child, plan.netspec)
            result = net.train(train_data.images, train_data.labels, trainer)
            cumulative += result.train_seconds
            genome, row = record(net, result.train_seconds, cumulative)
            next_population.append(genome)
            generation_rows.append(row)
        population = next_population
        rows.extend(generation_rows)
        if csv_path:  # flush once per generation so partial runs are usable
            append_metrics_csv(csv_path, generation_rows)
        best_history.append(max(r.accuracy for r in generation_rows))
    return rows


@dataclass(frozen=True)
class SweepConfig:
    modes: tuple = (MODE_TAGGED, MODE_UNTAGGED)
    r_values: tuple = (0.5, 0.7, 0.95)
    seeds: tuple = (1, 2, 3)
    base_plan: ExperimentPlan = field(default_factory=ExperimentPlan)

    def plans(self):
        return [replace(self.base_plan, mode=mode, r_cluster=r, r_synapse=r,
                        seed=seed)
                for mode in self.modes for r in self.r_values
                for seed in self.seeds]


def _combo_worker(args):
    plan, csv_path = args
    t0 = time.perf_counter()
    rows = run_combo(plan, csv_path=csv_path)
    return plan.experiment_id, len(rows), time.perf_counter() - t0


def run_experiment_sweep(sweep: SweepConfig, out_dir, workers: int = None):
    """All combinations to per-combo CSVs plus a manifest; returns manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plans = sweep.plans()
    jobs = []
    for plan in plans:
        csv_path = out / f"{plan.experiment_id}.csv"
        if csv_path.exists():
            csv_path.unlink()  # rerun must not append to stale results
        jobs.append((plan, csv_path))
    if workers is None:
        workers = min(len(jobs), os.cpu_count() or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_combo_worker, jobs))
    else:
        outcomes = [_combo_worker(job) for job in jobs]
    manifest = {
        "format": "evosynth-sweep-v1",
        "combos": [
            {"experiment_id": expid, "mode": plan.mode,
             "r_cluster": plan.r_cluster, "r_synapse": plan.r_synapse,
             "seed": plan.seed, "csv": f"{expid}.csv", "rows": n_rows,
             "wall_seconds": round(wall, 3)}
            for (plan, _), (expid, n_rows, wall) in zip(jobs, outcomes)
        ],
        "base_plan": asdict(sweep.base_plan),
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True)
                             + "\n")
    return manifest
