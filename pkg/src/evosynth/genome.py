"""Gene-tagged network genomes.

A genome describes one network as a stack of layers, each layer a set of
synaptic clusters (a convolution filter, or the incoming weight row of a
dense output neuron).  Tags are the (layer, cluster, synapse) ordinal
coordinates of the common ancestor network.  Dead synapses are kept in
place with strength 0 rather than removed, so ancestor coordinates stay
valid forever and cross-parent alignment is plain array indexing.

Genomes are immutable after construction (arrays are marked read-only);
all mutation happens by building new genomes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import AlignmentError, MalformedAncestorError

BYTES_PER_SYNAPSE = 4  # 32-bit weights; biases and metadata excluded

KIND_CONV = "conv"
KIND_DENSE = "dense"


class ClusterTag(NamedTuple):
    layer: int
    cluster: int


class SynapseTag(NamedTuple):
    layer: int
    cluster: int
    synapse: int


def _cluster_grid(kind: str, shape: tuple[int, ...]) -> tuple[int, int]:
    """(clusters, synapses per cluster) implied by a layer shape."""
    if kind == KIND_CONV:
        filters, in_ch, kh, kw = shape
        return filters, in_ch * kh * kw
    if kind == KIND_DENSE:
        out_features, in_features = shape
        return out_features, in_features
    raise ValueError(f"unknown layer kind {kind!r}")


@dataclass(frozen=True)
class LayerGenome:
    """One layer's clusters: strengths and alive mask, plus per-cluster bias.

    ``strengths`` and ``alive`` are (clusters, synapses) arrays; row c holds
    cluster tag (layer, c), column j synapse tag (layer, c, j).  Biases are
    one per cluster and are never subject to survival draws.
    """

    kind: str
    shape: tuple[int, ...]
    strengths: np.ndarray
    alive: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        grid = _cluster_grid(self.kind, self.shape)
        strengths = np.ascontiguousarray(self.strengths, dtype=np.float32)
        alive = np.ascontiguousarray(self.alive, dtype=bool)
        biases = np.ascontiguousarray(self.biases, dtype=np.float32)
        if strengths.shape != grid or alive.shape != grid:
            raise ValueError(
                f"layer arrays {strengths.shape} do not match shape {self.shape}")
        if biases.shape != (grid[0],):
            raise ValueError("one bias per cluster required")
        # Structural invariant: dead synapses carry strength exactly 0.
        strengths = np.where(alive, strengths, np.float32(0.0))
        for arr in (strengths, alive, biases):
            arr.setflags(write=False)
        object.__setattr__(self, "strengths", strengths)
        object.__setattr__(self, "alive", alive)
        object.__setattr__(self, "biases", biases)

    @property
    def n_clusters(self) -> int:
        return self.strengths.shape[0]

    @property
    def n_synapses(self) -> int:
        return self.strengths.shape[1]


@dataclass(frozen=True)
class NetworkGenome:
    generation: int
    network_id: int
    lineage: tuple[int, ...]
    layers: tuple[LayerGenome, ...]

    def __post_init__(self):
        object.__setattr__(self, "lineage", tuple(self.lineage))
        object.__setattr__(self, "layers", tuple(self.layers))

    def alive_synapse_count(self) -> int:
        return int(sum(layer.alive.sum() for layer in self.layers))


def assign_gene_tags(layers: Sequence[LayerGenome], network_id: int = 0) -> NetworkGenome:
    """Build the generation-0 ancestor, fixing the tag space once and for all.

    Tags are the dense positional ordinals of the given layers; every later
    genome in the lineage lives in this coordinate system.  The ancestor must
    be fully alive with no empty layers or clusters.
    """
    if not layers:
        raise MalformedAncestorError("ancestor has no layers")
    for i, layer in enumerate(layers):
        if layer.n_clusters == 0:
            raise MalformedAncestorError(f"layer {i} has no clusters")
        if layer.n_synapses == 0:
            raise MalformedAncestorError(f"layer {i} has an empty cluster")
        if not layer.alive.all():
            raise MalformedAncestorError(f"layer {i} has dead synapses in the ancestor")
    return NetworkGenome(generation=0, network_id=network_id,
                         lineage=(), layers=tuple(layers))


def all_cluster_tags(genome: NetworkGenome) -> Iterator[ClusterTag]:
    for li, layer in enumerate(genome.layers):
        for c in range(layer.n_clusters):
            yield ClusterTag(li, c)


def all_synapse_tags(genome: NetworkGenome) -> Iterator[SynapseTag]:
    for li, layer in enumerate(genome.layers):
        for c in range(layer.n_clusters):
            for j in range(layer.n_synapses):
                yield SynapseTag(li, c, j)


def _has_tag(genome: NetworkGenome, layer: int, cluster: int) -> bool:
    return (0 <= layer < len(genome.layers)
            and 0 <= cluster < genome.layers[layer].n_clusters)


def cluster_exists(genome: NetworkGenome, tag: ClusterTag) -> bool:
    """True iff the genome holds that cluster with at least one alive synapse."""
    layer, cluster = tag[0], tag[1]
    if not _has_tag(genome, layer, cluster):
        return False
    return bool(genome.layers[layer].alive[cluster].any())


def storage_bytes(genome: NetworkGenome) -> int:
    """Architectural-efficiency proxy: alive synapse count times 4 bytes."""
    return genome.alive_synapse_count() * BYTES_PER_SYNAPSE


def aligned_strengths(parents: Sequence[NetworkGenome], tag: SynapseTag) -> np.ndarray:
    """Per-parent strength at one synapse tag; 0 where dead or absent."""
    if not parents:
        raise AlignmentError("no parents to align")
    layer, cluster, synapse = tag
    out = np.zeros(len(parents), dtype=np.float64)
    for k, parent in enumerate(parents):
        if not _has_tag(parent, layer, cluster):
            continue
        lg = parent.layers[layer]
        if synapse < lg.n_synapses and lg.alive[cluster, synapse]:
            out[k] = lg.strengths[cluster, synapse]
    return out


def cluster_strength(genome: NetworkGenome, tag: ClusterTag) -> float:
    """Mean absolute strength over the cluster's alive synapses (0 if none)."""
    layer, cluster = tag[0], tag[1]
    if not _has_tag(genome, layer, cluster):
        return 0.0
    lg = genome.layers[layer]
    alive = lg.alive[cluster]
    n = int(alive.sum())
    if n == 0:
        return 0.0
    return float(np.abs(lg.strengths[cluster][alive]).sum() / n)


def same_tag_space(a: NetworkGenome, b: NetworkGenome) -> bool:
    if len(a.layers) != len(b.layers):
        return False
    return all(la.kind == lb.kind and la.shape == lb.shape
               for la, lb in zip(a.layers, b.layers))


# ---------------------------------------------------------------------------
# JSON checkpoint format
# ---------------------------------------------------------------------------

def genome_to_dict(genome: NetworkGenome) -> dict:
    layers = []
    for li, layer in enumerate(genome.layers):
        clusters = []
        for c in range(layer.n_clusters):
            synapses = [
                {"tag": [li, c, j],
                 "strength": float(layer.strengths[c, j]),
                 "alive": bool(layer.alive[c, j])}
                for j in range(layer.n_synapses)
            ]
            clusters.append({"tag": [li, c], "synapses": synapses})
        layers.append({"kind": layer.kind, "shape": list(layer.shape),
                       "biases": [float(b) for b in layer.biases],
                       "clusters": clusters})
    return {"generation": genome.generation, "network_id": genome.network_id,
            "lineage": list(genome.lineage), "layers": layers}


def genome_from_dict(doc: dict) -> NetworkGenome:
    layers = []
    for layer_doc in doc["layers"]:
        kind = layer_doc["kind"]
        shape = tuple(layer_doc["shape"])
        n_clusters, n_synapses = _cluster_grid(kind, shape)
        strengths = np.zeros((n_clusters, n_synapses), dtype=np.float32)
        alive = np.zeros((n_clusters, n_synapses), dtype=bool)
        for cluster_doc in layer_doc["clusters"]:
            c = cluster_doc["tag"][1]
            for syn in cluster_doc["synapses"]:
                j = syn["tag"][2]
                strengths[c, j] = syn["strength"]
                alive[c, j] = syn["alive"]
        biases = np.asarray(layer_doc["biases"], dtype=np.float32)
        layers.append(LayerGenome(kind=kind, shape=shape, strengths=strengths,
                                  alive=alive, biases=biases))
    return NetworkGenome(generation=doc["generation"],
                         network_id=doc["network_id"],
                         lineage=tuple(doc["lineage"]),
                         layers=tuple(layers))


def save_genome(genome: NetworkGenome, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(genome_to_dict(genome), fh)


def load_genome(path) -> NetworkGenome:
    with open(path, "r", encoding="utf-8") as fh:
        return genome_from_dict(json.load(fh))
