"""Shared builders for small genomes and populations."""

import numpy as np
import pytest

from evosynth.genome import LayerGenome, NetworkGenome, assign_gene_tags


def dense_layer(strengths, alive=None, biases=None):
    s = np.asarray(strengths, dtype=np.float32)
    if alive is None:
        alive = np.ones(s.shape, dtype=bool)
    if biases is None:
        biases = np.zeros(s.shape[0], dtype=np.float32)
    return LayerGenome(kind="dense", shape=s.shape, strengths=s,
                       alive=np.asarray(alive, bool),
                       biases=np.asarray(biases, np.float32))


def network(layers, generation=1, network_id=0, lineage=(0,)):
    return NetworkGenome(generation=generation, network_id=network_id,
                         lineage=tuple(lineage), layers=tuple(layers))


def random_population(rng, n_parents, n_clusters=4, n_synapses=3,
                      alive_prob=0.7):
    """Parents over one shared ancestor tag space with random alive masks.

    Every parent keeps at least one alive synapse in cluster 0 so layers
    are never empty of structure.
    """
    parents = []
    for k in range(n_parents):
        alive = rng.random((n_clusters, n_synapses)) < alive_prob
        alive[0, 0] = True
        strengths = rng.uniform(0.1, 2.0, (n_clusters, n_synapses))
        strengths *= np.where(rng.random(strengths.shape) < 0.5, -1.0, 1.0)
        layer = dense_layer(strengths * alive, alive=alive,
                            biases=rng.normal(0, 1, n_clusters))
        parents.append(network([layer], network_id=k + 1))
    return parents


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def ancestor_from_strengths(strengths):
    layer = dense_layer(strengths)
    return assign_gene_tags([layer], network_id=0)
