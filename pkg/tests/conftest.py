import numpy as np
import pytest

from vnom import AttributedGraph, TopicGraph


def build_attributed(n, edges, red=(), identified=(), k_edge_attrs=2):
    """Attributed graph from (u, v, attr) triples and red/identified id sets."""
    truth = [1 if v in set(red) else 2 for v in range(n)]
    observed = [1 if v in set(identified) else 0 for v in range(n)]
    return AttributedGraph.from_edges(n, edges, truth, observed, k_edge_attrs)


def build_topic(n, edges, k_topics):
    """Topic graph from (u, v, count, probs) tuples."""
    return TopicGraph.from_edges(n, edges, k_topics)


def point_mass(topic, k):
    probs = np.zeros(k)
    probs[topic] = 1.0
    return probs


@pytest.fixture
def star_graph():
    """Six vertices: center 0 adjacent to 1..5; 1,2,3 identified red, 4 red."""
    edges = [(0, 1, 1), (0, 2, 1), (0, 3, 2), (0, 4, 1), (0, 5, 2)]
    return build_attributed(6, edges, red={0, 1, 2, 3}, identified={1, 2, 3})
