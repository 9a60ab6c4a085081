"""Mating config, eligibility, and the product mating functions."""

import math

import numpy as np
import pytest

from evosynth.errors import AlignmentError, ConfigError
from evosynth.genome import ClusterTag
from evosynth.mating import (MatingConfig, eligible_cluster_tags,
                             mate_cluster_strengths, mate_synapse_strengths,
                             positional_alignment, required_parent_count)

from conftest import dense_layer, network


def masked_network(alive_rows, network_id=0):
    alive = np.asarray(alive_rows, dtype=bool)
    return network([dense_layer(np.ones(alive.shape), alive=alive)],
                   network_id=network_id)


class TestRequiredParentCount:
    def test_reference_values(self):
        assert required_parent_count(5, 0.6) == 3
        assert required_parent_count(5, 1.0) == 5
        assert required_parent_count(1, 1.0) == 1
        assert required_parent_count(4, 0.55) == 3  # ceil(2.2)

    def test_float_products_near_integers_do_not_round_up(self):
        # 10 * 0.3 = 3.0000000000000004 in binary; the threshold must be 3.
        assert required_parent_count(10, 0.3) == 3
        assert required_parent_count(3, 1 / 3) == 1

    def test_bounds_property(self, rng):
        for _ in range(500):
            m = int(rng.integers(1, 12))
            frac = float(rng.uniform(0.01, 1.0))
            k = required_parent_count(m, frac)
            assert 1 <= k <= m
            assert k >= m * frac - 1e-6

    def test_rejects_bad_arguments(self):
        with pytest.raises(ConfigError):
            required_parent_count(0, 0.5)
        with pytest.raises(ConfigError):
            required_parent_count(5, 0.0)
        with pytest.raises(ConfigError):
            required_parent_count(5, 1.5)


class TestMatingConfig:
    def test_defaults_fill_unit_coefficients(self):
        cfg = MatingConfig(parent_count=3)
        assert cfg.cluster_coeffs == (1.0, 1.0, 1.0)
        assert cfg.synapse_coeffs == (1.0, 1.0, 1.0)

    @pytest.mark.parametrize("kwargs", [
        dict(parent_count=0),
        dict(parent_count=2, min_parent_fraction=0.0),
        dict(parent_count=2, min_parent_fraction=1.2),
        dict(parent_count=2, mode="psychic"),
        dict(parent_count=2, cluster_coeffs=(1.0,)),
        dict(parent_count=2, synapse_coeffs=(1.0, -1.0)),
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            MatingConfig(**kwargs)


class TestEligibility:
    def test_member_sets_by_hand(self):
        # 3 parents, 4 clusters; cluster exists iff any synapse alive.
        p0 = masked_network([[1, 1], [1, 0], [0, 0], [1, 1]], 0)
        p1 = masked_network([[1, 0], [0, 0], [0, 0], [1, 1]], 1)
        p2 = masked_network([[0, 0], [1, 1], [1, 0], [1, 1]], 2)
        cfg = MatingConfig(parent_count=3, min_parent_fraction=0.6)  # need 2
        got = eligible_cluster_tags([p0, p1, p2], cfg)
        assert [(e.tag, e.members) for e in got] == [
            (ClusterTag(0, 0), (0, 1)),
            (ClusterTag(0, 1), (0, 2)),
            (ClusterTag(0, 3), (0, 1, 2)),
        ]

    def test_chi_one_is_exact_intersection(self, rng):
        cfg = MatingConfig(parent_count=4, min_parent_fraction=1.0)
        for _ in range(200):
            masks = rng.random((4, 5, 3)) < 0.6
            parents = [masked_network(masks[k], k) for k in range(4)]
            got = {e.tag for e in eligible_cluster_tags(parents, cfg)}
            expect = set.intersection(*[
                {ClusterTag(0, c) for c in range(5) if masks[k, c].any()}
                for k in range(4)])
            assert got == expect
            assert all(e.members == (0, 1, 2, 3)
                       for e in eligible_cluster_tags(parents, cfg))

    def test_parent_count_mismatch_rejected(self):
        cfg = MatingConfig(parent_count=3)
        with pytest.raises(ConfigError, match="expected 3 parents"):
            eligible_cluster_tags([masked_network([[1]]), ], cfg)


class TestMatingFunctions:
    def test_naive_product_oracle(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 8))
            strengths = rng.uniform(-2, 2, n)
            coeffs = rng.uniform(0.1, 3, n)
            expect = math.prod(float(a) * float(s)
                               for a, s in zip(coeffs, strengths))
            got = mate_synapse_strengths(strengths, coeffs)
            assert got == pytest.approx(expect, rel=1e-12)
            assert mate_cluster_strengths(np.abs(strengths), coeffs) == \
                pytest.approx(math.prod(float(a) * abs(float(s))
                                        for a, s in zip(coeffs, strengths)),
                              rel=1e-12)

    def test_zero_member_zeroes_product(self):
        assert mate_synapse_strengths([0.5, 0.0, 2.0], [1, 1, 1]) == 0.0

    def test_empty_or_mismatched_inputs_rejected(self):
        with pytest.raises(AlignmentError):
            mate_synapse_strengths([], [])
        with pytest.raises(AlignmentError):
            mate_synapse_strengths([1.0, 2.0], [1.0])


class TestPositionalAlignment:
    def test_compacts_existing_clusters_in_tag_order(self):
        p0 = masked_network([[1, 1], [0, 0], [1, 0], [1, 1]], 0)
        p1 = masked_network([[0, 0], [1, 1], [0, 0], [1, 0]], 1)
        # p0 exists at clusters (0, 2, 3); p1 at (1, 3): two zipped positions.
        assert positional_alignment([p0, p1], 0) == [(0, 1), (2, 3)]

    def test_empty_layer_in_any_parent_kills_all_positions(self):
        p0 = masked_network([[1, 1], [1, 1]], 0)
        p1 = masked_network([[0, 0], [0, 0]], 1)
        assert positional_alignment([p0, p1], 0) == []
