"""Micro convolutional classifier materialized from a genome.

Architecture: conv(k x k, valid) -> relu -> 2x2 maxpool, twice, then one
dense layer to class logits with softmax cross-entropy.  Every trainable
weight corresponds to one genome synapse; dead synapses are masked out of
the forward pass and their gradients, velocities, and values are pinned to
zero for the whole life of the network.

The gradient check compares analytic gradients against central differences
in float64.  Relu and maxpool make the loss piecewise smooth, so a sampled
parameter is only scored when both perturbed evaluations leave every relu
sign and every pool winner unchanged; samples that cross a kink are
discarded and redrawn.  A deliberate fault can be injected by scaling one
group's analytic gradients, which the check must then flag.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import ArchMismatchError, ConfigError, ShapeError, StateError
from .genome import KIND_CONV, KIND_DENSE, LayerGenome, NetworkGenome, assign_gene_tags
from .kernels import (conv2d_backward, conv2d_forward, maxpool2_backward,
                      maxpool2_forward)
from .streams import DOMAIN_GRADCHECK, DOMAIN_INIT, DOMAIN_TRAIN, stream

PARAM_GROUPS = ("conv1_w", "conv1_b", "conv2_w", "conv2_b", "dense_w", "dense_b")


@dataclass(frozen=True)
class MicroNetSpec:
    """Static architecture description; defaults give the 28x28 micro net."""

    input_hw: tuple = (28, 28)
    in_channels: int = 1
    conv1_filters: int = 8
    conv2_filters: int = 16
    kernel: int = 5
    classes: int = 10

    def __post_init__(self):
        h, w = self.input_hw
        for stage_hw in (self.conv1_out_hw(), self.conv2_out_hw()):
            sh, sw = stage_hw
            if sh <= 0 or sw <= 0:
                raise ConfigError(f"kernel {self.kernel} too large for {h}x{w} input")
            if sh % 2 or sw % 2:
                raise ConfigError(f"conv output {sh}x{sw} not divisible by 2x2 pooling")
        if min(self.in_channels, self.conv1_filters, self.conv2_filters,
               self.classes) < 1:
            raise ConfigError("channel, filter, and class counts must be >= 1")

    def conv1_out_hw(self):
        h, w = self.input_hw
        return h - self.kernel + 1, w - self.kernel + 1

    def pool1_hw(self):
        h, w = self.conv1_out_hw()
        return h // 2, w // 2

    def conv2_out_hw(self):
        h, w = self.pool1_hw()
        return h - self.kernel + 1, w - self.kernel + 1

    def pool2_hw(self):
        h, w = self.conv2_out_hw()
        return h // 2, w // 2

    def flat_size(self):
        h, w = self.pool2_hw()
        return self.conv2_filters * h * w

    def layer_shapes(self):
        k = self.kernel
        return ((self.conv1_filters, self.in_channels, k, k),
                (self.conv2_filters, self.conv1_filters, k, k),
                (self.classes, self.flat_size()))

    def layer_kinds(self):
        return (KIND_CONV, KIND_CONV, KIND_DENSE)


@dataclass(frozen=True)
class TrainerConfig:
    learning_rate: float = 0.05
    momentum: float = 0.9
    epochs: int = 1
    batch_size: int = 32
    seed_root: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not (0.0 <= self.momentum < 1.0):
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")


@dataclass(frozen=True)
class TrainResult:
    train_seconds: float
    batches_run: int
    final_loss: float


def make_ancestor_genome(spec: MicroNetSpec, seed_root: int,
                         network_id: int = 0) -> NetworkGenome:
    """Fully alive generation-0 genome: He-normal convs, Glorot-uniform dense."""
    layers = []
    for li, (kind, shape) in enumerate(zip(spec.layer_kinds(), spec.layer_shapes())):
        rng = stream(seed_root, DOMAIN_INIT, network_id, li)
        if kind == KIND_CONV:
            f, c, kh, kw = shape
            fan_in = c * kh * kw
            strengths = rng.normal(0.0, np.sqrt(2.0 / fan_in), (f, fan_in))
            n_clusters = f
        else:
            out, fan_in = shape
            limit = np.sqrt(6.0 / (fan_in + out))
            strengths = rng.uniform(-limit, limit, (out, fan_in))
            n_clusters = out
        layers.append(LayerGenome(
            kind=kind, shape=shape,
            strengths=strengths.astype(np.float32),
            alive=np.ones(strengths.shape, dtype=bool),
            biases=np.zeros(n_clusters, dtype=np.float32)))
    return assign_gene_tags(layers, network_id=network_id)


def _softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class MicroNet:
    """Weights, masks, and optimizer state for one materialized genome."""

    def __init__(self, spec: MicroNetSpec, weights, biases, masks,
                 generation: int = 0, network_id: int = 0, lineage=()):
        self.spec = spec
        self.dtype = weights[0].dtype
        self.w1, self.w2, self.w3 = weights
        self.b1, self.b2, self.b3 = biases
        self.m1, self.m2, self.m3 = masks
        self.generation = generation
        self.network_id = network_id
        self.lineage = tuple(lineage)
        self._velocity = {g: np.zeros_like(self._param(g)) for g in PARAM_GROUPS}
        self._apply_masks()

    @classmethod
    def materialize(cls, genome: NetworkGenome, spec: MicroNetSpec,
                    dtype=np.float32) -> "MicroNet":
        shapes = spec.layer_shapes()
        kinds = spec.layer_kinds()
        if len(genome.layers) != len(shapes):
            raise ArchMismatchError(
                f"genome has {len(genome.layers)} layers, spec needs {len(shapes)}")
        weights, biases, masks = [], [], []
        for layer, shape, kind in zip(genome.layers, shapes, kinds):
            if layer.kind != kind or layer.shape != shape:
                raise ArchMismatchError(
                    f"layer {layer.kind} {layer.shape} does not match "
                    f"spec {kind} {shape}")
            weights.append(layer.strengths.reshape(shape).astype(dtype))
            biases.append(layer.biases.astype(dtype))
            masks.append(layer.alive.reshape(shape))
        return cls(spec, weights, biases, masks, generation=genome.generation,
                   network_id=genome.network_id, lineage=genome.lineage)

    def _param(self, group):
        return {"conv1_w": self.w1, "conv1_b": self.b1,
                "conv2_w": self.w2, "conv2_b": self.b2,
                "dense_w": self.w3, "dense_b": self.b3}[group]

    def _mask(self, group):
        return {"conv1_w": self.m1, "conv2_w": self.m2, "dense_w": self.m3}.get(group)

    def _apply_masks(self):
        self.w1 *= self.m1
        self.w2 *= self.m2
        self.w3 *= self.m3

    def _check_input(self, x):
        h, w = self.spec.input_hw
        if x.ndim != 4 or x.shape[1:] != (self.spec.in_channels, h, w):
            raise ShapeError(
                f"expected input (N, {self.spec.in_channels}, {h}, {w}), "
                f"got {x.shape}")

    def _forward(self, x):
        self._check_input(x)
        w1 = self.w1 * self.m1
        w2 = self.w2 * self.m2
        w3 = self.w3 * self.m3
        z1 = conv2d_forward(x, w1, self.b1)
        a1 = np.maximum(z1, 0)
        p1, which1 = maxpool2_forward(a1)
        z2 = conv2d_forward(p1, w2, self.b2)
        a2 = np.maximum(z2, 0)
        p2, which2 = maxpool2_forward(a2)
        flat = p2.reshape(len(x), -1)
        logits = flat @ w3.T + self.b3
        cache = (x, w1, w2, w3, z1, which1, p1, z2, which2, flat)
        return logits, cache

    def forward(self, x):
        logits, _ = self._forward(np.ascontiguousarray(x, dtype=self.dtype))
        return logits

    def _loss_grads(self, x, y):
        logits, cache = self._forward(x)
        x, w1, w2, w3, z1, which1, p1, z2, which2, flat = cache
        n = len(x)
        probs = _softmax(logits)
        loss = float(-np.log(np.maximum(probs[np.arange(n), y], 1e-30)).mean())
        dlogits = probs.copy()
        dlogits[np.arange(n), y] -= 1.0
        dlogits /= n
        gw3 = dlogits.T @ flat
        gb3 = dlogits.sum(axis=0)
        gflat = dlogits @ w3
        c2h, c2w = self.spec.conv2_out_hw()
        gp2 = np.ascontiguousarray(
            gflat.reshape(n, self.spec.conv2_filters, c2h // 2, c2w // 2))
        ga2 = maxpool2_backward(gp2, which2, c2h, c2w)
        gz2 = ga2 * (z2 > 0)
        gp1, gw2, gb2 = conv2d_backward(p1, w2, gz2)
        c1h, c1w = self.spec.conv1_out_hw()
        ga1 = maxpool2_backward(gp1, which1, c1h, c1w)
        gz1 = ga1 * (z1 > 0)
        _, gw1, gb1 = conv2d_backward(x, w1, gz1)
        grads = {"conv1_w": gw1 * self.m1, "conv1_b": gb1,
                 "conv2_w": gw2 * self.m2, "conv2_b": gb2,
                 "dense_w": gw3 * self.m3, "dense_b": gb3}
        state = ((z1 > 0), which1, (z2 > 0), which2)
        return loss, grads, state

    def train(self, images, labels, config: TrainerConfig) -> TrainResult:
        x_all = np.ascontiguousarray(images, dtype=self.dtype)
        self._check_input(x_all)
        y_all = np.asarray(labels)
        if len(x_all) != len(y_all):
            raise ShapeError(f"{len(x_all)} images vs {len(y_all)} labels")
        t0 = time.perf_counter()
        batches = 0
        loss = float("nan")
        for epoch in range(config.epochs):
            order = stream(config.seed_root, DOMAIN_TRAIN, self.generation,
                           self.network_id, epoch).permutation(len(x_all))
            for start in range(0, len(x_all), config.batch_size):
                idx = order[start:start + config.batch_size]
                loss, grads, _ = self._loss_grads(x_all[idx], y_all[idx])
                for group in PARAM_GROUPS:
                    vel = self._velocity[group]
                    vel *= config.momentum
                    vel -= config.learning_rate * grads[group]
                    param = self._param(group)
                    param += vel
                self._apply_masks()
                batches += 1
        return TrainResult(train_seconds=time.perf_counter() - t0,
                           batches_run=batches, final_loss=loss)

    def accuracy(self, images, labels, batch_size: int = 256) -> float:
        x_all = np.ascontiguousarray(images, dtype=self.dtype)
        y_all = np.asarray(labels)
        hits = 0
        for start in range(0, len(x_all), batch_size):
            logits = self.forward(x_all[start:start + batch_size])
            hits += int((logits.argmax(axis=1)
                         == y_all[start:start + batch_size]).sum())
        return hits / len(y_all)

    def to_genome(self) -> NetworkGenome:
        """Genome with current trained weights; alive masks are unchanged."""
        layers = []
        for w, b, m, kind, shape in zip(
                (self.w1, self.w2, self.w3), (self.b1, self.b2, self.b3),
                (self.m1, self.m2, self.m3), self.spec.layer_kinds(),
                self.spec.layer_shapes()):
            n_clusters = shape[0]
            layers.append(LayerGenome(
                kind=kind, shape=shape,
                strengths=w.reshape(n_clusters, -1).astype(np.float32),
                alive=m.reshape(n_clusters, -1).copy(),
                biases=b.astype(np.float32)))
        return NetworkGenome(generation=self.generation,
                             network_id=self.network_id,
                             lineage=self.lineage, layers=tuple(layers))


@dataclass(frozen=True)
class GradCheckReport:
    passed: bool
    tolerance: float
    step: float
    group_rel_errors: dict
    group_samples: dict
    skipped_kinks: int


def _state_equal(a, b):
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def grad_check(spec: MicroNetSpec = None, seed_root: int = 0,
               samples_per_group: int = 3, step: float = 1e-5,
               tolerance: float = 1e-4, batch_size: int = 2,
               genome: NetworkGenome = None, perturb_group: str = None,
               perturb_scale: float = 1.0) -> GradCheckReport:
    """Check analytic gradients against float64 central differences."""
    if perturb_group is not None and perturb_group not in PARAM_GROUPS:
        raise ConfigError(f"unknown parameter group {perturb_group!r}")
    spec = spec or MicroNetSpec()
    if genome is None:
        genome = make_ancestor_genome(spec, seed_root=seed_root)
    net = MicroNet.materialize(genome, spec, dtype=np.float64)
    data_rng = stream(seed_root, DOMAIN_GRADCHECK, 0)
    h, w = spec.input_hw
    x = data_rng.random((batch_size, spec.in_channels, h, w))
    y = data_rng.integers(0, spec.classes, batch_size)

    _, grads, base_state = net._loss_grads(x, y)
    rel_errors, samples = {}, {}
    skipped = 0
    for gi, group in enumerate(PARAM_GROUPS):
        param = net._param(group)
        flat = param.reshape(-1)
        analytic = grads[group].reshape(-1)
        order = stream(seed_root, DOMAIN_GRADCHECK, 1, gi).permutation(flat.size)
        worst = 0.0
        checked = 0
        for idx in order:
            if checked >= samples_per_group:
                break
            a = float(analytic[idx])
            if abs(a) < 1e-10:  # masked-out or saturated: uninformative
                continue
            original = flat[idx]
            flat[idx] = original + step
            loss_hi, _, state_hi = net._loss_grads(x, y)
            flat[idx] = original - step
            loss_lo, _, state_lo = net._loss_grads(x, y)
            flat[idx] = original
            if not (_state_equal(state_hi, base_state)
                    and _state_equal(state_lo, base_state)):
                skipped += 1  # perturbation crossed a relu or pool kink
                continue
            numeric = (loss_hi - loss_lo) / (2.0 * step)
            if group == perturb_group:
                a *= perturb_scale
            worst = max(worst, abs(a - numeric) / max(abs(a), abs(numeric), 1e-8))
            checked += 1
        if checked == 0:
            raise StateError(f"no kink-free samples found for group {group}")
        rel_errors[group] = worst
        samples[group] = checked
    passed = all(err <= tolerance for err in rel_errors.values())
    return GradCheckReport(passed=passed, tolerance=tolerance, step=step,
                           group_rel_errors=rel_errors, group_samples=samples,
                           skipped_kinks=skipped)
