"""Offspring synthesis: mated strengths -> survival probabilities -> sampling.

The survival probability of a cluster (and of each synapse inside a
surviving cluster) is the environmental resource factor times the mated
strength's magnitude, max-normalized among its peers (clusters within a
layer, synapses within a cluster).  Max-normalization keeps every nonzero
element some chance of survival while the resource factor acts as a hard
ceiling.

All draws come from counter-based streams keyed by
(seed_root, generation, network_id, layer, cluster), so synthesis order and
thread schedule cannot change a result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AlignmentError, ConfigError, InvariantError
from .genome import LayerGenome, NetworkGenome, same_tag_space
from .mating import (MODE_TAGGED, MatingConfig, positional_alignment,
                     required_parent_count)
from .streams import DOMAIN_SYNTH, stream

ZERO_LITERAL = "literal-product"
ZERO_ALIVE_ONLY = "alive-only"
INIT_GEOMETRIC = "geometric-mean"
INIT_RAW_PRODUCT = "raw-product"


@dataclass(frozen=True)
class EnvironmentalModel:
    """Resource availabilities scaling cluster- and synapse-level survival."""

    r_cluster: float
    r_synapse: float

    def __post_init__(self):
        for name in ("r_cluster", "r_synapse"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"{name} must be in [0, 1], got {v}")


@dataclass(frozen=True)
class SynthesisConfig:
    mating: MatingConfig
    env: EnvironmentalModel
    seed_root: int
    zero_mode: str = ZERO_LITERAL
    weight_init: str = INIT_GEOMETRIC

    def __post_init__(self):
        if self.zero_mode not in (ZERO_LITERAL, ZERO_ALIVE_ONLY):
            raise ConfigError(f"unknown zero_mode {self.zero_mode!r}")
        if self.weight_init not in (INIT_GEOMETRIC, INIT_RAW_PRODUCT):
            raise ConfigError(f"unknown weight_init {self.weight_init!r}")


def normalize_magnitudes(values) -> np.ndarray:
    """|v| / max |v| per element; all zeros when the maximum is zero."""
    mags = np.abs(np.asarray(values, dtype=np.float64))
    if mags.size == 0:
        raise AlignmentError("cannot normalize an empty list")
    top = mags.max()
    if top == 0.0:
        return np.zeros_like(mags)
    return mags / top


def cluster_survival_prob(mated: float, layer_mated, env: EnvironmentalModel) -> float:
    """Survival probability of one cluster among its layer's mated strengths."""
    top = float(np.max(np.abs(np.asarray(layer_mated, dtype=np.float64))))
    if top == 0.0:
        return 0.0
    return env.r_cluster * abs(float(mated)) / top


def synapse_survival_prob(mated: float, cluster_mated, env: EnvironmentalModel) -> float:
    """Survival probability of one synapse among its cluster's mated strengths."""
    top = float(np.max(np.abs(np.asarray(cluster_mated, dtype=np.float64))))
    if top == 0.0:
        return 0.0
    return env.r_synapse * abs(float(mated)) / top


def inherit_weight(strengths) -> float:
    """Sign-preserving geometric mean of the contributing parent strengths."""
    s = np.asarray(strengths, dtype=np.float64)
    if s.size == 0:
        raise InvariantError("inherit_weight called with no strengths")
    if np.any(s == 0.0):
        raise InvariantError("inherit_weight called with a zero strength")
    sign = -1.0 if int((s < 0).sum()) % 2 else 1.0
    return float(sign * np.exp(np.log(np.abs(s)).mean()))


def _normalize_rows(mags: np.ndarray) -> np.ndarray:
    """Row-wise max-normalization of a nonnegative matrix; zero rows stay zero."""
    top = mags.max(axis=1, keepdims=True)
    return mags / np.where(top > 0.0, top, 1.0)


def _tagged_problem(S, A, threshold):
    """Member and eligibility masks for tagged (ancestor-aligned) mating."""
    exists = A.any(axis=2)                       # (m, C)
    eligible = exists.sum(axis=0) >= threshold   # (C,)
    member = exists & eligible[None, :]          # (m, C)
    return S, A, member, eligible


def _untagged_problem(parents, li, S, A, B):
    """Compact clusters and synapses by position, dropping tag information."""
    m, n_clusters, n_syn = S.shape
    positions = positional_alignment(parents, li)
    S2 = np.zeros_like(S)
    A2 = np.zeros_like(A)
    B2 = B.copy()  # coordinates beyond the zipped range keep ancestor-slot biases
    for pos, sources in enumerate(positions):
        for k, src in enumerate(sources):
            alive_idx = np.flatnonzero(A[k, src])
            n = alive_idx.size
            S2[k, pos, :n] = S[k, src, alive_idx]
            A2[k, pos, :n] = True
            B2[k, pos] = B[k, src]
    eligible = np.zeros(n_clusters, dtype=bool)
    eligible[:len(positions)] = True
    member = np.broadcast_to(eligible, (m, n_clusters)).copy()
    return S2, A2, member, eligible, B2


def _synthesize_layer(layer_index, template, S, A, member, eligible, biases,
                      config: SynthesisConfig, generation: int,
                      network_id: int) -> LayerGenome:
    m, n_clusters, n_syn = S.shape
    cc = np.asarray(config.mating.cluster_coeffs, dtype=np.float64)
    sc = np.asarray(config.mating.synapse_coeffs, dtype=np.float64)

    # Cluster-level mated strengths: product over members of coeff * mean|w|.
    alive_counts = A.sum(axis=2)
    W = np.abs(S).sum(axis=2) / np.maximum(alive_counts, 1)
    Mc = np.where(member, cc[:, None] * W, 1.0).prod(axis=0)
    Mc = np.where(eligible, Mc, 0.0)

    # Synapse-level mated strengths.  In literal mode the product runs over
    # every member, so a synapse dead anywhere in the member set is zeroed;
    # alive-only restricts the product to members whose synapse is alive.
    contrib = sc[:, None, None] * S
    if config.zero_mode == ZERO_LITERAL:
        contributing = np.broadcast_to(member[:, :, None], contrib.shape)
        Ms = np.where(contributing, contrib, 1.0).prod(axis=0)
        Ms = np.where(eligible[:, None], Ms, 0.0)
    else:
        contributing = A & member[:, :, None]
        Ms = np.where(contributing, contrib, 1.0).prod(axis=0)
        Ms = np.where(contributing.any(axis=0) & eligible[:, None], Ms, 0.0)

    p_cluster = config.env.r_cluster * normalize_magnitudes(Mc)
    p_synapse = config.env.r_synapse * _normalize_rows(np.abs(Ms))

    # Inherited strengths for whichever synapses survive.
    if config.weight_init == INIT_RAW_PRODUCT:
        inherited = Ms
    else:
        n_members = contributing.sum(axis=0)
        with np.errstate(divide="ignore"):
            log_mags = np.where(contributing,
                                np.log(np.abs(np.where(contributing, S, 1.0))),
                                0.0)
        magnitude = np.exp(log_mags.sum(axis=0) / np.maximum(n_members, 1))
        odd_negatives = (contributing & (S < 0)).sum(axis=0) % 2 == 1
        inherited = np.where(odd_negatives, -magnitude, magnitude)

    alive_out = np.zeros((n_clusters, n_syn), dtype=bool)
    for c in np.flatnonzero(eligible):
        draws = stream(config.seed_root, DOMAIN_SYNTH, generation, network_id,
                       layer_index, c).random(1 + n_syn)
        if draws[0] < p_cluster[c]:
            alive_out[c] = draws[1:] < p_synapse[c]

    strengths_out = np.where(alive_out, inherited, 0.0).astype(np.float32)

    # Biases are averaged, never pruned: over the member set where the
    # cluster was synthesized, over all parents elsewhere.
    bias_members = np.where(member, 1.0, 0.0)
    member_counts = bias_members.sum(axis=0)
    member_mean = (biases * bias_members).sum(axis=0) / np.maximum(member_counts, 1)
    all_mean = biases.mean(axis=0)
    biases_out = np.where(eligible, member_mean, all_mean).astype(np.float32)

    return LayerGenome(kind=template.kind, shape=template.shape,
                       strengths=strengths_out, alive=alive_out,
                       biases=biases_out)


def synthesize_offspring(parents: Sequence[NetworkGenome],
                         config: SynthesisConfig,
                         generation: int,
                         network_id: int) -> NetworkGenome:
    """Sample one offspring genome from the parents under the resource model."""
    if len(parents) != config.mating.parent_count:
        raise ConfigError(
            f"expected {config.mating.parent_count} parents, got {len(parents)}")
    for p in parents[1:]:
        if not same_tag_space(parents[0], p):
            raise AlignmentError("parents do not share one ancestor tag space")
    threshold = required_parent_count(config.mating.parent_count,
                                      config.mating.min_parent_fraction)

    layers = []
    for li, template in enumerate(parents[0].layers):
        S = np.stack([p.layers[li].strengths for p in parents]).astype(np.float64)
        A = np.stack([p.layers[li].alive for p in parents])
        B = np.stack([p.layers[li].biases for p in parents]).astype(np.float64)
        if config.mating.mode == MODE_TAGGED:
            S_, A_, member, eligible = _tagged_problem(S, A, threshold)
            B_ = B
        else:
            S_, A_, member, eligible, B_ = _untagged_problem(parents, li, S, A, B)
        layers.append(_synthesize_layer(li, template, S_, A_, member, eligible,
                                        B_, config, generation, network_id))
    return NetworkGenome(generation=generation, network_id=network_id,
                         lineage=tuple(p.network_id for p in parents),
                         layers=tuple(layers))
