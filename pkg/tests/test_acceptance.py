"""End-to-end acceptance gates, one printed pass/fail line per criterion.

These are the package's release checks.  Criteria 1-7 and 10 are exact or
statistical oracles with fixed tolerances; criterion 8 reproduces the
tagged-versus-untagged trend comparison at desk scale; criterion 9 pins
byte-level determinism of sweep artifacts.
"""

import math
import os
import time
from collections import defaultdict

import numpy as np
import pytest

from evosynth.dataset import (DataConfig, load_idx_images, load_idx_labels,
                              write_idx_images, write_idx_labels)
from evosynth.errors import FormatError
from evosynth.evolution import (ExperimentPlan, StopRule, SweepConfig,
                                run_experiment_sweep)
from evosynth.genome import LayerGenome, NetworkGenome
from evosynth.mating import (MatingConfig, eligible_cluster_tags,
                             mate_cluster_strengths, mate_synapse_strengths,
                             required_parent_count)
from evosynth.nnet import (MicroNet, MicroNetSpec, TrainerConfig, grad_check,
                           make_ancestor_genome)
from evosynth.report import CSV_COLUMNS, read_metrics_csv
from evosynth.synthesis import (EnvironmentalModel, SynthesisConfig,
                                synthesize_offspring)


def _verdict(criterion: int, ok: bool, detail: str) -> bool:
    print(f"criterion {criterion:02d}: {'PASS' if ok else 'FAIL'} - {detail}",
          flush=True)
    return ok


def _random_parents(rng, m, n_clusters=4, n_synapses=3, alive_prob=0.75):
    parents = []
    for k in range(m):
        alive = rng.random((n_clusters, n_synapses)) < alive_prob
        alive[0, 0] = True
        strengths = rng.uniform(0.1, 2.0, (n_clusters, n_synapses)) * alive
        parents.append(NetworkGenome(
            generation=1, network_id=k + 1, lineage=(0,),
            layers=(LayerGenome(kind="dense", shape=(n_clusters, n_synapses),
                                strengths=strengths.astype(np.float32),
                                alive=alive,
                                biases=np.zeros(n_clusters, np.float32)),)))
    return parents


def test_criterion_01_parent_threshold():
    exact = (required_parent_count(5, 0.6) == 3
             and required_parent_count(5, 1.0) == 5)
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    violations = 0
    trials = 10_000
    for trial in range(trials):
        m = int(rng.integers(2, 6))
        chi = float(rng.uniform(0.05, 1.0))
        parents = _random_parents(rng, m)
        cfg = SynthesisConfig(
            mating=MatingConfig(parent_count=m, min_parent_fraction=chi),
            env=EnvironmentalModel(0.9, 0.9), seed_root=trial)
        child = synthesize_offspring(parents, cfg, 1, trial)
        exists = np.stack([p.layers[0].alive.any(axis=1) for p in parents])
        need = math.ceil(m * chi)
        for c in range(exists.shape[1]):
            if child.layers[0].alive[c].any() and exists[:, c].sum() < need:
                violations += 1
    wall = time.perf_counter() - t0
    ok = exact and violations == 0 and wall < 10.0
    assert _verdict(1, ok, f"exact values {exact}, {violations} violations "
                           f"in {trials} syntheses, {wall:.1f}s")


def test_criterion_02_intersection_equivalence():
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    mismatches = 0
    genomes = 1000
    trial = 0
    while trial < genomes:
        m = int(rng.integers(2, 6))
        parents = _random_parents(rng, m, n_clusters=5, n_synapses=3,
                                  alive_prob=0.6)
        trial += m
        cfg = MatingConfig(parent_count=m, min_parent_fraction=1.0)
        eligible = {e.tag for e in eligible_cluster_tags(parents, cfg)}
        brute = None
        for p in parents:
            tags = {(li, c)
                    for li, layer in enumerate(p.layers)
                    for c in range(layer.n_clusters)
                    if layer.alive[c].any()}
            brute = tags if brute is None else brute & tags
        if {(t.layer, t.cluster) for t in eligible} != brute:
            mismatches += 1
    wall = time.perf_counter() - t0
    ok = mismatches == 0 and wall < 10.0
    assert _verdict(2, ok, f"{mismatches} mismatches over >= {genomes} "
                           f"genomes, {wall:.1f}s")


def test_criterion_03_mating_product_oracle():
    rng = np.random.default_rng(303)
    t0 = time.perf_counter()
    worst = 0.0
    trials = 100_000
    for _ in range(trials):
        n = int(rng.integers(1, 7))
        strengths = rng.uniform(0.05, 3.0, n) * rng.choice((-1.0, 1.0), n)
        coeffs = rng.uniform(0.1, 2.0, n)
        naive = 1.0
        for a, s in zip(coeffs, strengths):
            naive *= a * s
        got_s = mate_synapse_strengths(strengths, coeffs)
        got_c = mate_cluster_strengths(np.abs(strengths), coeffs)
        naive_c = 1.0
        for a, s in zip(coeffs, np.abs(strengths)):
            naive_c *= a * s
        worst = max(worst,
                    abs(got_s - naive) / max(abs(naive), 1e-300),
                    abs(got_c - naive_c) / max(abs(naive_c), 1e-300))
    wall = time.perf_counter() - t0
    ok = worst <= 1e-12 and wall < 5.0
    assert _verdict(3, ok, f"max relative error {worst:.2e} over {trials} "
                           f"inputs, {wall:.1f}s")


def test_criterion_04_toy_survival_distribution():
    # Two fully alive parents, 2 clusters x 2 synapses, R = 0.5, chi = 0.6.
    # Cluster products: [0.5625, 0.25] -> P(cluster) = [0.5, 2/9].
    # Synapse products: c0 [0.5, 0.5] -> P = [0.5, 0.5] given cluster;
    # c1 [0.125, 0.375] -> P = [1/6, 1/2] given cluster.  Joint:
    # [[1/4, 1/4], [1/27, 1/9]].
    def parent(strengths, nid):
        s = np.asarray(strengths, np.float32)
        return NetworkGenome(
            generation=1, network_id=nid, lineage=(0,),
            layers=(LayerGenome(kind="dense", shape=s.shape, strengths=s,
                                alive=np.ones(s.shape, bool),
                                biases=np.zeros(s.shape[0], np.float32)),))

    pa = parent([[0.5, 1.0], [0.25, 0.75]], 1)
    pb = parent([[1.0, 0.5], [0.5, 0.5]], 2)
    cfg = SynthesisConfig(
        mating=MatingConfig(parent_count=2, min_parent_fraction=0.6),
        env=EnvironmentalModel(0.5, 0.5), seed_root=404)
    expect = np.array([[0.25, 0.25], [1 / 27, 1 / 9]])
    draws = 100_000
    t0 = time.perf_counter()
    hits = np.zeros((2, 2))
    for i in range(draws):
        hits += synthesize_offspring([pa, pb], cfg, 1, i).layers[0].alive
    wall = time.perf_counter() - t0
    gap = np.abs(hits / draws - expect).max()
    ok = gap <= 0.01 and wall < 30.0
    assert _verdict(4, ok, f"max |empirical - analytic| {gap:.4f} over "
                           f"{draws} draws, {wall:.1f}s")


def test_criterion_05_subset_law():
    rng = np.random.default_rng(505)
    t0 = time.perf_counter()
    violations = 0
    syntheses = 1000
    for trial in range(syntheses):
        m = int(rng.integers(2, 6))
        parents = _random_parents(rng, m, n_clusters=5, n_synapses=4,
                                  alive_prob=0.7)
        cfg = SynthesisConfig(
            mating=MatingConfig(parent_count=m,
                                min_parent_fraction=float(rng.uniform(0.3, 1.0))),
            env=EnvironmentalModel(float(rng.uniform(0.3, 1.0)),
                                   float(rng.uniform(0.3, 1.0))),
            seed_root=trial)
        child = synthesize_offspring(parents, cfg, 1, trial)
        exists = np.stack([p.layers[0].alive.any(axis=1) for p in parents])
        for c in range(exists.shape[1]):
            alive = child.layers[0].alive[c]
            if not alive.any():
                continue
            members = np.flatnonzero(exists[:, c])
            inter = np.logical_and.reduce(
                [parents[k].layers[0].alive[c] for k in members])
            violations += int(np.any(alive & ~inter))
    wall = time.perf_counter() - t0
    ok = violations == 0 and wall < 30.0
    assert _verdict(5, ok, f"{violations} violations over {syntheses} "
                           f"tagged syntheses, {wall:.1f}s")


def test_criterion_06_gradient_check():
    t0 = time.perf_counter()
    report = grad_check(seed_root=0, samples_per_group=3)
    wall = time.perf_counter() - t0
    worst = max(report.group_rel_errors.values())
    ok = report.passed and worst < 1e-4 and wall < 60.0
    assert _verdict(6, ok, f"max group rel error {worst:.2e}, "
                           f"{report.skipped_kinks} kink samples skipped, "
                           f"{wall:.1f}s")


def test_criterion_07_random_guess_floor():
    t0 = time.perf_counter()
    spec = MicroNetSpec()
    template = make_ancestor_genome(spec, seed_root=0)
    dead = NetworkGenome(
        generation=1, network_id=1, lineage=(0,),
        layers=tuple(LayerGenome(kind=l.kind, shape=l.shape,
                                 strengths=np.zeros_like(l.strengths),
                                 alive=np.zeros_like(l.alive),
                                 biases=np.zeros_like(l.biases))
                     for l in template.layers))
    net = MicroNet.materialize(dead, spec)
    images = np.random.default_rng(7).random((200, 1, 28, 28))
    labels = np.repeat(np.arange(10), 20)
    accuracy = net.accuracy(images, labels)
    wall = time.perf_counter() - t0
    ok = accuracy == 0.1 and wall < 5.0
    assert _verdict(7, ok, f"all-dead accuracy {accuracy} on balanced "
                           f"10-class set, {wall:.1f}s")


# ---------------------------------------------------------------------------
# trend reproduction (shared sweep for criterion 8)

TREND_PLAN = ExperimentPlan(
    population_size=5, generations=8, parent_count=5,
    min_parent_fraction=0.6, zero_mode="alive-only",
    trainer=TrainerConfig(epochs=3),
    data=DataConfig(blob_train_per_class=50, blob_test_per_class=20),
    stop=StopRule(enabled=False))

TREND_SEEDS = (1, 2, 3, 4, 5)
TREND_LEVELS = (0.70, 0.95)


@pytest.fixture(scope="module")
def trend_rows(tmp_path_factory):
    out = tmp_path_factory.mktemp("trend")
    sweep = SweepConfig(modes=("tagged", "untagged"), r_values=TREND_LEVELS,
                        seeds=TREND_SEEDS, base_plan=TREND_PLAN)
    t0 = time.perf_counter()
    manifest = run_experiment_sweep(sweep, out,
                                    workers=min(4, os.cpu_count() or 1))
    wall = time.perf_counter() - t0
    rows = [row for combo in manifest["combos"]
            for row in read_metrics_csv(out / combo["csv"])]
    return rows, wall


def test_criterion_08_trend_reproduction(trend_rows):
    rows, wall = trend_rows
    final_gen = max(r.generation for r in rows)

    # (a) final-generation mean storage, averaged over both modes, should
    # be strictly larger under the richer environment in >= 4 of 5 seeds.
    storage = defaultdict(list)
    for r in rows:
        if r.generation == final_gen:
            storage[(r.r_cluster, r.seed)].append(r.storage_bytes)
    a_hits = sum(
        np.mean(storage[(TREND_LEVELS[1], seed)])
        > np.mean(storage[(TREND_LEVELS[0], seed)])
        for seed in TREND_SEEDS)

    # (b) generation-best accuracy, averaged over resource levels and
    # summed over generations, should favor tagged mating in >= 4 of 5
    # seeds.
    best = defaultdict(float)
    for r in rows:
        key = (r.mode, r.r_cluster, r.seed, r.generation)
        best[key] = max(best[key], r.accuracy)
    scores = {}
    for mode in ("tagged", "untagged"):
        for seed in TREND_SEEDS:
            scores[(mode, seed)] = sum(
                np.mean([best[(mode, level, seed, g)]
                         for level in TREND_LEVELS])
                for g in range(final_gen + 1))
    b_hits = sum(scores[("tagged", seed)] >= scores[("untagged", seed)]
                 for seed in TREND_SEEDS)

    ok = a_hits >= 4 and b_hits >= 4 and wall <= 1800.0
    assert _verdict(8, ok, f"storage gate {a_hits}/5 seeds, accuracy gate "
                           f"{b_hits}/5 seeds, sweep {wall:.0f}s")


def test_criterion_09_deterministic_sweeps(tmp_path):
    sweep = SweepConfig(modes=("tagged",), r_values=(TREND_LEVELS[0],),
                        seeds=(TREND_SEEDS[0],), base_plan=TREND_PLAN)
    t0 = time.perf_counter()
    run_experiment_sweep(sweep, tmp_path / "a", workers=1)
    run_experiment_sweep(sweep, tmp_path / "b", workers=1)
    wall = time.perf_counter() - t0

    drop = (CSV_COLUMNS.index("train_seconds"),
            CSV_COLUMNS.index("cumulative_seconds"))

    def stable_bytes(path):
        lines = path.read_text().splitlines()
        kept = [",".join(c for i, c in enumerate(line.split(","))
                         if i not in drop) for line in lines]
        return "\n".join(kept).encode()

    name = "tagged_rc070_rs070_s1.csv"
    identical = stable_bytes(tmp_path / "a" / name) == \
        stable_bytes(tmp_path / "b" / name)
    ok = identical and wall < 300.0
    assert _verdict(9, ok, f"byte-identical={identical} after dropping "
                           f"timing columns, {wall:.0f}s")


def test_criterion_10_idx_round_trip(tmp_path):
    t0 = time.perf_counter()
    # Pixel values on the exact 1/255 grid survive quantization, so the
    # write -> load -> write cycle must reproduce identical bytes.
    rng = np.random.default_rng(10)
    images = rng.integers(0, 256, (4, 1, 6, 5)).astype(np.float32) / 255.0
    labels = np.array([0, 3, 9, 1])
    ipath, lpath = tmp_path / "imgs", tmp_path / "labels"
    write_idx_images(ipath, images)
    write_idx_labels(lpath, labels)
    loaded = load_idx_images(ipath)
    write_idx_images(tmp_path / "imgs2", loaded)
    bit_exact = (ipath.read_bytes() == (tmp_path / "imgs2").read_bytes()
                 and np.array_equal(loaded, images)
                 and np.array_equal(load_idx_labels(lpath), labels))

    offsets_ok = True
    raw = bytearray(ipath.read_bytes())
    raw[0] = 0xFF
    (tmp_path / "badmagic").write_bytes(bytes(raw))
    try:
        load_idx_images(tmp_path / "badmagic")
        offsets_ok = False
    except FormatError as err:
        offsets_ok &= err.offset == 0
    cut = len(ipath.read_bytes()) - 7
    (tmp_path / "short").write_bytes(ipath.read_bytes()[:cut])
    try:
        load_idx_images(tmp_path / "short")
        offsets_ok = False
    except FormatError as err:
        offsets_ok &= err.offset == cut
    (tmp_path / "shortlab").write_bytes(lpath.read_bytes()[:9])
    try:
        load_idx_labels(tmp_path / "shortlab")
        offsets_ok = False
    except FormatError as err:
        offsets_ok &= err.offset == 9
    wall = time.perf_counter() - t0
    ok = bit_exact and offsets_ok and wall < 1.0
    assert _verdict(10, ok, f"bit-exact={bit_exact}, offsets={offsets_ok}, "
                            f"{wall:.2f}s")
