"""
Text serialization of probabilistic graphs.

Edge-list format::

    #nodes N
    #node <id>        (one line per node, keeps isolated nodes)
    <u> <v> <p>       (networkx edge list; p written at full float precision)
"""
from pathlib import Path
from typing import Union

import networkx as nx

from backend.errors import RecordFormatError
from backend.graph.core import ProbabilisticGraph, WeightedDeterministicGraph

EDGE_DATA = [("probability", float)]


def to_edge_list(g: ProbabilisticGraph) -> str:
    lines = [f"#nodes {len(g)}"]
    lines.extend(f"#node {node}" for node in g.nodes)
    lines.extend(nx.generate_edgelist(g.graph, data=["probability"]))
    return "\n".join(lines) + "\n"


def _parse_edge(line: str, line_number: int, source: str) -> tuple[str, str, float]:
    try:
        parsed = nx.parse_edgelist([line], comments=None, nodetype=str, data=EDGE_DATA)
    except (TypeError, IndexError) as err:
        raise RecordFormatError(source, line_number, f"bad edge {line!r}: {err}")
    edges = list(parsed.edges(data="probability"))
    if len(edges) != 1 or edges[0][2] is None:
        raise RecordFormatError(source, line_number, f"expected 'u v p', got {line!r}")
    return edges[0]


def from_edge_list(text: str, source: str = "<string>") -> ProbabilisticGraph:
    nodes: list[str] = []
    edges: list[tuple[str, str, float]] = []
    declared = None
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#nodes"):
            try:
                declared = int(line.split()[1])
            except (IndexError, ValueError):
                raise RecordFormatError(source, line_number, f"bad node count header {line!r}")
            continue
        if line.startswith("#node "):
            nodes.append(line.split(maxsplit=1)[1])
            continue
        if line.startswith("#"):
            continue
        edges.append(_parse_edge(line, line_number, source))

    if not nodes:
        seen: dict[str, None] = {}
        for u, v, _ in edges:
            seen.setdefault(u)
            seen.setdefault(v)
        nodes = list(seen)
    if declared is not None and declared != len(nodes):
        raise RecordFormatError(source, 1, f"header declares {declared} nodes, found {len(nodes)}")
    return ProbabilisticGraph(nodes, edges)


def to_dot(g: Union[ProbabilisticGraph, WeightedDeterministicGraph], name: str = "streetlights") -> str:
    """Undirected DOT with the probability/weight as edge label and pen width."""
    lines = [f"graph {name} {{"]
    lines.extend(f'  "{node}";' for node in g.nodes)
    for u, v, w in g.edges():
        lines.append(f'  "{u}" -- "{v}" [label="{w:.2f}", penwidth={0.5 + 2.5 * w:.2f}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_graph(g: ProbabilisticGraph, path: Union[str, Path]) -> None:
    Path(path).write_text(to_edge_list(g))


def read_graph(path: Union[str, Path]) -> ProbabilisticGraph:
    return from_edge_list(Path(path).read_text(), source=str(path))
