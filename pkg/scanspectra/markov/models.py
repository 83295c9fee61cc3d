"""Concrete target distributions: hardcore, Ising and explicit weight tables."""
from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from scanspectra.common.constants import DEFAULT_STATE_CAP
from scanspectra.common.exceptions import DomainError, ModelFileError
from scanspectra.markov.statespace import Distribution, ProductSpace, encode_state, normalize_weights
from scanspectra.odm.models.model_file import ModelFile, WeightEntry

logger = logging.getLogger('scanspectra.models')

FAMILIES = ("hardcore", "ising", "explicit")
GRAPH_KINDS = ("complete", "path", "cycle", "empty")
STATE_KEY = re.compile(r'"state"\s*:')


@dataclass(frozen=True)
class GraphSpec:
    vertex_count: int
    edges: tuple[tuple[int, int], ...] = ()
    name: str = "graph"

    def __post_init__(self):
        if self.vertex_count < 1:
            raise DomainError(f"A graph needs at least one vertex, got {self.vertex_count}")
        seen = set()
        normalized = []
        for i, j in self.edges:
            if i == j:
                raise DomainError(f"Self-loop on vertex {i}")
            if not (0 <= i < self.vertex_count and 0 <= j < self.vertex_count):
                raise DomainError(f"Edge ({i}, {j}) has an endpoint outside [0, {self.vertex_count})")
            edge = (min(i, j), max(i, j))
            if edge in seen:
                raise DomainError(f"Duplicate edge {edge}")
            seen.add(edge)
            normalized.append(edge)
        object.__setattr__(self, 'edges', tuple(sorted(normalized)))


def complete_graph(n: int) -> GraphSpec:
    return GraphSpec(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)), name=f"K{n}")


def path_graph(n: int) -> GraphSpec:
    return GraphSpec(n, tuple((i, i + 1) for i in range(n - 1)), name=f"P{n}")


def cycle_graph(n: int) -> GraphSpec:
    if n < 3:
        # A 2-cycle would duplicate its only edge
        return path_graph(n)
    return GraphSpec(n, tuple((i, (i + 1) % n) for i in range(n)), name=f"C{n}")


def edgeless_graph(n: int) -> GraphSpec:
    return GraphSpec(n, (), name=f"E{n}")


GRAPH_BUILDERS = {
    "complete": complete_graph,
    "path": path_graph,
    "cycle": cycle_graph,
    "empty": edgeless_graph,
}


@dataclass(frozen=True)
class ModelSpec:
    family: str
    graph: Optional[GraphSpec] = None
    fugacity: float = 1.0
    beta: float = 0.0
    field: float = 0.0
    path: Optional[str] = None
    text: str = dataclasses.field(default="", compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"Unknown model family '{self.family}', expected one of {', '.join(FAMILIES)}")
        if self.family in ("hardcore", "ising") and self.graph is None:
            raise DomainError(f"The {self.family} family needs a graph")
        if self.family == "hardcore" and not (self.fugacity > 0 and math.isfinite(self.fugacity)):
            raise DomainError(f"Fugacity must be positive and finite, got {self.fugacity}")
        if self.family == "explicit" and not self.path:
            raise DomainError("The explicit family needs a weight file path")

    @property
    def label(self) -> str:
        return self.text or self.family


def _parse_params(family: str, text: str) -> dict[str, float]:
    params = {}
    if not text:
        return params
    for item in text.split(','):
        key, sep, value = item.partition('=')
        key = key.strip()
        if not sep or not key:
            raise DomainError(f"Malformed parameter '{item}' in {family} model string")
        try:
            params[key] = float(value)
        except ValueError:
            raise DomainError(f"Parameter {key} of the {family} model is not a number: '{value}'")
    return params


def parse_model_spec(text: str) -> ModelSpec:
    """Parse 'family:graph:key=value,...' builtin strings or 'explicit:<path>'.

    >>> parse_model_spec("ising:cycle:n=6,beta=0.5,h=0").graph.vertex_count
    6
    """
    family, _, rest = text.strip().partition(':')
    if family == "explicit":
        return ModelSpec("explicit", path=rest, text=text)
    if family not in FAMILIES:
        raise DomainError(f"Unknown model family '{family}' in '{text}'")

    graph_kind, _, param_text = rest.partition(':')
    if graph_kind not in GRAPH_BUILDERS:
        raise DomainError(f"Unknown graph '{graph_kind}', expected one of {', '.join(GRAPH_KINDS)}")
    params = _parse_params(family, param_text)

    allowed = {"hardcore": {"n", "lambda", "fugacity"}, "ising": {"n", "beta", "h"}}[family]
    unknown = set(params) - allowed
    if unknown:
        raise DomainError(f"Unknown parameter(s) {', '.join(sorted(unknown))} for the {family} model")
    if "n" not in params:
        raise DomainError(f"The {family} model string needs n=<sites>")
    n = params["n"]
    if not float(n).is_integer() or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")

    graph = GRAPH_BUILDERS[graph_kind](int(n))
    if family == "hardcore":
        return ModelSpec("hardcore", graph, fugacity=params.get("lambda", params.get("fugacity", 1.0)), text=text)
    return ModelSpec("ising", graph, beta=params.get("beta", 0.0), field=params.get("h", 0.0), text=text)


def build_hardcore(graph: GraphSpec, fugacity: float, state_cap: int = DEFAULT_STATE_CAP) -> Distribution:
    if not (fugacity > 0 and math.isfinite(fugacity)):
        raise DomainError(f"Fugacity must be positive and finite, got {fugacity}")
    space = ProductSpace([2] * graph.vertex_count, state_cap=state_cap)
    states = space.states()
    independent = np.ones(space.total_states, dtype=bool)
    for i, j in graph.edges:
        independent &= ~((states[:, i] == 1) & (states[:, j] == 1))
    weights = np.where(independent, float(fugacity) ** states.sum(axis=1), 0.0)
    return normalize_weights(space, weights)


def build_ising(graph: GraphSpec, beta: float, field: float, state_cap: int = DEFAULT_STATE_CAP) -> Distribution:
    if not (math.isfinite(beta) and math.isfinite(field)):
        raise DomainError(f"Ising parameters must be finite (beta={beta}, h={field})")
    space = ProductSpace([2] * graph.vertex_count, state_cap=state_cap)
    # value v in {0, 1} is spin 2v - 1
    spins = 2 * space.states() - 1
    energy = field * spins.sum(axis=1).astype(float)
    for i, j in graph.edges:
        energy += beta * spins[:, i] * spins[:, j]
    return normalize_weights(space, np.exp(energy - energy.max()))


def _entry_line(text: str, entry: int) -> Optional[int]:
    for count, match in enumerate(STATE_KEY.finditer(text)):
        if count == entry:
            return text.count('\n', 0, match.start()) + 1
    return None


def parse_weight_table(text: str, state_cap: int = DEFAULT_STATE_CAP) -> Distribution:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFileError(f"not valid JSON: {e.msg} (column {e.colno})", e, line=e.lineno)

    if not isinstance(data, dict):
        raise ModelFileError("a model file is a JSON object with 'alphabets' and 'weights'", line=1)
    try:
        header = ModelFile({"alphabets": data.get("alphabets"), "weights": []})
    except (ValueError, TypeError) as e:
        raise ModelFileError(str(e), e, line=1)
    extra = set(data) - {"alphabets", "weights"}
    if extra:
        raise ModelFileError(f"unexpected key(s): {', '.join(sorted(extra))}", line=1)
    raw_entries = data.get("weights")
    if not isinstance(raw_entries, list):
        raise ModelFileError("'weights' must be a list of {\"state\": [...], \"w\": number}", line=1)

    try:
        space = ProductSpace(header.alphabets, state_cap=state_cap)
    except DomainError as e:
        raise ModelFileError(str(e), e, line=1)

    weights = np.zeros(space.total_states)
    seen = {}
    for position, raw_entry in enumerate(raw_entries):
        line = _entry_line(text, position)
        try:
            entry = WeightEntry(raw_entry)
            index = encode_state(space, entry.state)
        except (ValueError, TypeError, DomainError) as e:
            raise ModelFileError(f"weights[{position}]: {e}", e, line=line)
        if index in seen:
            raise ModelFileError(f"weights[{position}]: duplicate state {list(entry.state)} "
                                 f"(first listed at weights[{seen[index]}])", line=line)
        seen[index] = position
        weights[index] = entry.w

    return normalize_weights(space, weights)


def load_weight_table(path: str, state_cap: int = DEFAULT_STATE_CAP) -> Distribution:
    with open(path) as model_fh:
        text = model_fh.read()
    logger.debug(f"Loading weight table {path}")
    return parse_weight_table(text, state_cap=state_cap)


def dump_weight_table(dist: Distribution, path: str):
    """Write a distribution in the model file format, one listed state per line."""
    space = dist.space
    lines = [f'{{"alphabets": {json.dumps(list(space.alphabet_sizes))}, "weights": [']
    entries = []
    states = space.states()
    for index in dist.support:
        entries.append(f'  {{"state": {json.dumps([int(v) for v in states[index]])}, '
                       f'"w": {float(dist.probs[index])!r}}}')
    lines.append(',\n'.join(entries))
    lines.append(']}')
    tmp_path = f"{path}.tmp"
    with open(tmp_path, 'w') as model_fh:
        model_fh.write('\n'.join(lines) + '\n')
    os.replace(tmp_path, path)


def build_model(spec: ModelSpec, state_cap: int = DEFAULT_STATE_CAP) -> Distribution:
    if spec.family == "hardcore":
        return build_hardcore(spec.graph, spec.fugacity, state_cap=state_cap)
    if spec.family == "ising":
        return build_ising(spec.graph, spec.beta, spec.field, state_cap=state_cap)
    return load_weight_table(spec.path, state_cap=state_cap)
