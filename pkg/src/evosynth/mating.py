"""Cluster- and synapse-level mating of parent networks.

Tagged mode mates only structurally aligned material: a cluster is taken
forward when it exists (has an alive synapse) in at least a configurable
fraction of the parents, and strengths are combined as a coefficient-scaled
product over those qualifying parents.  Untagged mode is the baseline that
ignores tags, pairing clusters purely by compacted position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AlignmentError, ConfigError
from .genome import ClusterTag, NetworkGenome

MODE_TAGGED = "tagged"
MODE_UNTAGGED = "untagged"


@dataclass(frozen=True)
class MatingConfig:
    """Parameters of the m-parent mating functions.

    ``min_parent_fraction`` is the share of parents that must contain a
    cluster for it to be eligible; 1.0 recovers the pure intersection
    policy.  Coefficient vectors default to all ones (neutral under the
    downstream magnitude normalization).
    """

    parent_count: int
    min_parent_fraction: float = 0.6
    cluster_coeffs: tuple[float, ...] = None
    synapse_coeffs: tuple[float, ...] = None
    mode: str = MODE_TAGGED

    def __post_init__(self):
        if self.parent_count < 1:
            raise ConfigError(f"parent_count must be >= 1, got {self.parent_count}")
        if not (0.0 < self.min_parent_fraction <= 1.0):
            raise ConfigError(
                f"min_parent_fraction must be in (0, 1], got {self.min_parent_fraction}")
        if self.mode not in (MODE_TAGGED, MODE_UNTAGGED):
            raise ConfigError(f"unknown mating mode {self.mode!r}")
        for name in ("cluster_coeffs", "synapse_coeffs"):
            coeffs = getattr(self, name)
            if coeffs is None:
                coeffs = (1.0,) * self.parent_count
            else:
                coeffs = tuple(float(a) for a in coeffs)
            if len(coeffs) != self.parent_count:
                raise ConfigError(f"{name} must have length {self.parent_count}")
            if any(a <= 0 for a in coeffs):
                raise ConfigError(f"{name} entries must be > 0")
            object.__setattr__(self, name, coeffs)


@dataclass(frozen=True)
class EligibleSet:
    """A cluster tag plus the ordered parent indices that contain it."""

    tag: ClusterTag
    members: tuple[int, ...]


def required_parent_count(parent_count: int, fraction: float) -> int:
    """Smallest number of parents satisfying the population-fraction bound.

    This is ceil(parent_count * fraction), computed with a small slack so
    that products like 5 * 0.6 that land a hair above an integer in binary
    floating point do not round the threshold up.
    """
    if parent_count < 1:
        raise ConfigError(f"parent_count must be >= 1, got {parent_count}")
    if not (0.0 < fraction <= 1.0):
        raise ConfigError(f"fraction must be in (0, 1], got {fraction}")
    return max(1, math.ceil(parent_count * fraction - 1e-9))


def eligible_cluster_tags(parents: Sequence[NetworkGenome],
                          config: MatingConfig) -> list[EligibleSet]:
    """Cluster tags existing in enough parents, with their member sets.

    Output is ordered by tag.  A parent "contains" a cluster when at least
    one of its synapses is alive.
    """
    if len(parents) != config.parent_count:
        raise ConfigError(
            f"expected {config.parent_count} parents, got {len(parents)}")
    threshold = required_parent_count(config.parent_count,
                                      config.min_parent_fraction)
    out: list[EligibleSet] = []
    for li, layer in enumerate(parents[0].layers):
        # (parents, clusters) existence matrix for this layer
        exists = np.stack([p.layers[li].alive.any(axis=1) for p in parents])
        counts = exists.sum(axis=0)
        for c in range(layer.n_clusters):
            if counts[c] >= threshold:
                members = tuple(int(k) for k in np.flatnonzero(exists[:, c]))
                out.append(EligibleSet(tag=ClusterTag(li, c), members=members))
    return out


def _coeff_product(strengths, coeffs) -> float:
    strengths = np.asarray(strengths, dtype=np.float64)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if strengths.size == 0:
        raise AlignmentError("cannot mate an empty strength list")
    if strengths.shape != coeffs.shape:
        raise AlignmentError(
            f"strength/coefficient length mismatch: {strengths.shape} vs {coeffs.shape}")
    return float(np.prod(coeffs * strengths))


def mate_synapse_strengths(strengths, coeffs) -> float:
    """Product over qualifying parents of coefficient-scaled synapse strengths."""
    return _coeff_product(strengths, coeffs)


def mate_cluster_strengths(cluster_strengths, coeffs) -> float:
    """Product over qualifying parents of coefficient-scaled cluster strengths."""
    return _coeff_product(cluster_strengths, coeffs)


def positional_alignment(parents: Sequence[NetworkGenome],
                         layer: int) -> list[tuple[int, ...]]:
    """Tag-free baseline pairing for one layer.

    Each parent's existing clusters are compacted in tag order and zipped
    position-wise; the result is one tuple of per-parent cluster indices per
    zipped position.  The number of positions is the minimum existing-cluster
    count over the parents, so a parent with an empty layer kills the layer.
    """
    compacted = []
    for p in parents:
        exists = p.layers[layer].alive.any(axis=1)
        compacted.append(np.flatnonzero(exists))
    n_positions = min(len(idx) for idx in compacted)
    return [tuple(int(idx[pos]) for idx in compacted)
            for pos in range(n_positions)]
