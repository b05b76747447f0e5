"""Directed migration networks and community structure."""

import io

import pytest

from migharmon.errors import AxisMismatch
from migharmon.ingest import synthesize_totals
from migharmon.model import INTRASTATE_DISTRICT, DurationBin, OriginRef
from migharmon.network import (
    Partition,
    build_network,
    community_count_mode,
    compare_partitions,
    detect_communities,
    export_edge_list,
    network_metrics,
)
from migharmon.synth import SynthSpec, generate

from conftest import build_table

LT1 = DurationBin.UNDER_1
Y14 = DurationBin.Y1_4


def hub_table():
    rows = [
        ("P", OriginRef.interstate("A"), {LT1: 10.0, Y14: 2.0}),
        ("P", OriginRef.interstate("B"), {LT1: 5.0}),
        ("Q", OriginRef.interstate("A"), {LT1: 1.0}),
        ("Q", INTRASTATE_DISTRICT, {LT1: 999.0}),  # never an edge
        ("R", OriginRef.interstate("R"), {LT1: 3.0}),  # self-flow dropped
    ]
    return synthesize_totals(build_table("2011", rows))


def test_build_network_nodes_and_edges():
    net = build_network(hub_table())
    g = net.graph
    # R appears as destination and as (self) origin; A and B only as origins
    assert set(g.nodes) == {"P", "Q", "R", "A", "B"}
    assert net.n_nodes == 5
    assert set(g.edges) == {("A", "P"), ("B", "P"), ("A", "Q")}
    assert g["A"]["P"]["weight"] == pytest.approx(12.0)
    assert net.total_weight == pytest.approx(18.0)


def test_build_network_keeps_isolated_destinations():
    net = build_network(hub_table(), min_weight=20.0)
    assert net.n_edges == 0
    assert net.n_nodes == 5  # thresholding removes edges, not nodes


def test_build_network_bin_selector():
    net = build_network(hub_table(), bin_=Y14)
    assert set(net.graph.edges) == {("A", "P")}
    assert net.graph["A"]["P"]["weight"] == pytest.approx(2.0)


def test_metrics_density_and_mean_weight():
    m = network_metrics(build_network(hub_table()))
    assert m.n_nodes == 5
    assert m.n_edges == 3
    assert m.density == pytest.approx(3 / (5 * 4))
    assert m.mean_edge_weight == pytest.approx(18.0 / 3)


def test_detect_communities_is_deterministic_and_canonical():
    result = generate(SynthSpec(seed=3, n_entities=12, n_blocks=3, block_boost=8.0))
    net = build_network(result.observed["2001"])
    p1 = detect_communities(net, seed=0)
    p2 = detect_communities(net, seed=0)
    assert p1.labels == p2.labels
    # labels are contiguous ints starting at 0, ordered by smallest member
    labels = sorted(set(p1.labels.values()))
    assert labels == list(range(p1.n_communities))
    smallest = [min(members) for members in p1.communities()]
    assert smallest == sorted(smallest)


def test_planted_blocks_recovered():
    result = generate(SynthSpec(seed=7, n_entities=12, n_blocks=3, block_boost=8.0))
    net = build_network(result.observed["2001"])
    mode, histogram = community_count_mode(net, seeds=range(25))
    assert mode == 3
    assert histogram[3] >= 20
    partition = detect_communities(net, seed=0)
    truth = Partition(decade="2001", seed=-1, labels=dict(result.planted_blocks))
    assert compare_partitions(partition, truth) == pytest.approx(1.0)


def test_planted_four_blocks_recovered():
    result = generate(SynthSpec(seed=5, n_entities=12, n_blocks=4, block_boost=8.0))
    net = build_network(result.observed["2011"])
    mode, _ = community_count_mode(net, seeds=range(25))
    assert mode == 4


def test_compare_partitions_clips_to_unit_interval():
    a = Partition("2011", 0, {"A": 0, "B": 0, "C": 1, "D": 1})
    b = Partition("2011", 0, {"A": 0, "B": 1, "C": 0, "D": 1})
    score = compare_partitions(a, b)
    assert 0.0 <= score <= 1.0
    assert compare_partitions(a, a) == pytest.approx(1.0)


def test_compare_partitions_requires_common_nodes():
    a = Partition("2011", 0, {"A": 0})
    b = Partition("2011", 0, {"Z": 0})
    with pytest.raises(AxisMismatch):
        compare_partitions(a, b)


def test_edge_list_export():
    net = build_network(hub_table())
    partition = detect_communities(net, seed=0)
    out = io.StringIO()
    export_edge_list(net, out, partition=partition)
    lines = out.getvalue().splitlines()
    assert lines[0] == "decade,origin,destination,weight,origin_community"
    assert len(lines) == 1 + net.n_edges
    assert all(line.startswith("2011,") for line in lines[1:])
