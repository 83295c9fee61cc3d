import math
import os

import numpy as np
import pytest

from scanspectra.common.exceptions import DomainError, ModelFileError, UnsupportedError
from scanspectra.markov.models import (GraphSpec, build_hardcore, build_ising, build_model, complete_graph,
                                       cycle_graph, dump_weight_table, edgeless_graph, load_weight_table,
                                       parse_model_spec, parse_weight_table, path_graph)
from scanspectra.markov.statespace import encode_state


def test_graphs():
    assert complete_graph(4).edges == ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
    assert path_graph(3).edges == ((0, 1), (1, 2))
    assert cycle_graph(4).edges == ((0, 1), (0, 3), (1, 2), (2, 3))
    assert cycle_graph(2).edges == ((0, 1),)
    assert edgeless_graph(3).edges == ()
    assert GraphSpec(3, ((2, 0),)).edges == ((0, 2),)

    with pytest.raises(DomainError):
        GraphSpec(2, ((0, 0),))

    with pytest.raises(DomainError):
        GraphSpec(2, ((0, 1), (1, 0)))

    with pytest.raises(DomainError):
        GraphSpec(2, ((0, 2),))


def test_hardcore_complete_graph(hardcore_k2):
    # Empty set and the two singletons, uniformly
    assert hardcore_k2.support.tolist() == [0, 1, 2]
    assert np.allclose(hardcore_k2.weights, 1 / 3)


def test_hardcore_path():
    dist = build_hardcore(path_graph(3), 2.0)
    # Independent sets {}, {0}, {1}, {2}, {0, 2} weigh 1, 2, 2, 2, 4
    assert dist.support.size == 5
    assert dist.probs[encode_state(dist.space, (1, 0, 1))] == pytest.approx(4 / 11)
    assert dist.probs[encode_state(dist.space, (0, 0, 0))] == pytest.approx(1 / 11)
    assert dist.probs[encode_state(dist.space, (1, 1, 0))] == 0.0

    with pytest.raises(DomainError):
        build_hardcore(path_graph(3), 0.0)


def test_ising():
    dist = build_ising(path_graph(2), 0.5, 0.0)
    z = 2 * math.exp(0.5) + 2 * math.exp(-0.5)
    assert dist.probs.tolist() == pytest.approx([math.exp(0.5) / z, math.exp(-0.5) / z,
                                                 math.exp(-0.5) / z, math.exp(0.5) / z])

    field = build_ising(edgeless_graph(1), 0.0, 0.3)
    assert field.probs[1] / field.probs[0] == pytest.approx(math.exp(0.6))

    # Large couplings stay finite
    assert build_ising(cycle_graph(4), 400.0, 0.0).support.size == 2

    with pytest.raises(UnsupportedError):
        build_ising(path_graph(17), 0.0, 0.0, state_cap=2 ** 16)


def test_parse_model_spec():
    spec = parse_model_spec("ising:cycle:n=6,beta=0.5,h=0")
    assert spec.family == "ising"
    assert spec.graph.vertex_count == 6
    assert len(spec.graph.edges) == 6
    assert spec.beta == 0.5
    assert spec.field == 0.0
    assert spec.label == "ising:cycle:n=6,beta=0.5,h=0"

    spec = parse_model_spec("hardcore:complete:n=4,lambda=2")
    assert spec.fugacity == 2.0
    assert spec.graph.edges == complete_graph(4).edges

    assert parse_model_spec("explicit:/tmp/model.json").path == "/tmp/model.json"


@pytest.mark.parametrize("text", [
    "potts:complete:n=3",
    "hardcore:star:n=3",
    "hardcore:complete:lambda=1",
    "hardcore:complete:n=2.5",
    "hardcore:complete:n=3,beta=1",
    "ising:path:n=3,beta=high",
    "ising:path:n=3,beta",
    "hardcore:complete:n=3,lambda=-1",
    "explicit:",
])
def test_parse_model_spec_errors(text):
    with pytest.raises(DomainError):
        parse_model_spec(text)


def test_weight_table():
    dist = parse_weight_table('{"alphabets": [2, 3], "weights": [{"state": [1, 2], "w": 3}, '
                              '{"state": [0, 0], "w": 1}]}')
    assert dist.space.alphabet_sizes == (2, 3)
    assert dist.support.tolist() == [0, 5]
    assert dist.weights.tolist() == [0.25, 0.75]


@pytest.mark.parametrize("text, line", [
    ('{"alphabets": [2], "weights": [\n{"state": [0], "w": 1},\n{"state": [0], "w": 2}\n]}', 3),
    ('{"alphabets": [2], "weights": [\n{"state": [2], "w": 1}\n]}', 2),
    ('{"alphabets": [2], "weights": [\n{"state": [0], "w": -1}\n]}', 2),
    ('{"alphabets": [2], "weights": [\n{"state": [0, 1], "w": 1}\n]}', 2),
    ('{"alphabets": [2], "weights": [], "extra": 1}', 1),
    ('{"alphabets": [0], "weights": []}', 1),
    ('[1, 2]', 1),
    ('{"alphabets": [2],\n "weights": [', 2),
])
def test_weight_table_errors(text, line):
    with pytest.raises(ModelFileError) as error_info:
        parse_weight_table(text)
    assert error_info.value.line == line


def test_weight_table_all_zero():
    with pytest.raises(DomainError):
        parse_weight_table('{"alphabets": [2], "weights": [{"state": [0], "w": 0}]}')


def test_weight_table_round_trip(tmp_path):
    original = build_ising(cycle_graph(3), 0.7, -0.2)
    path = os.path.join(tmp_path, "ising.json")
    dump_weight_table(original, path)
    loaded = load_weight_table(path)
    assert loaded.space == original.space
    assert np.array_equal(loaded.support, original.support)
    assert np.allclose(loaded.probs, original.probs, rtol=1e-12, atol=0)

    assert np.allclose(build_model(parse_model_spec(f"explicit:{path}")).probs, original.probs)
