"""Predicate dependency graph and component schedule.

Function predicates behave like built-ins here: they contribute neither nodes
nor arcs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx

from .errors import StratificationError
from .rewriter import FlatRule
from .syntax import Aggregate, Literal

POSITIVE, NEGATIVE, AGGREGATE = "+", "-", "#count"


@dataclass
class DependencyGraph:
    nodes: list = field(default_factory=list)
    pos_edges: set = field(default_factory=set)
    neg_edges: set = field(default_factory=set)
    agg_edges: set = field(default_factory=set)

    def edges(self):
        for kind, edges in ((POSITIVE, self.pos_edges), (NEGATIVE, self.neg_edges), (AGGREGATE, self.agg_edges)):
            for src, dst in sorted(edges):
                yield src, dst, kind

    def to_dot(self) -> str:
        lines = ["digraph dependencies {"]
        lines.extend(f'  "{_name(node)}";' for node in self.nodes)
        lines.extend(f'  "{_name(src)}" -> "{_name(dst)}" [label="{kind}"];' for src, dst, kind in self.edges())
        lines.append("}")
        return "\n".join(lines) + "\n"


def _name(key) -> str:
    return f"{key[0]}/{key[1]}"


def build_dependency_graph(rules, facts=()) -> DependencyGraph:
    graph = DependencyGraph()
    seen = set()

    def node(key):
        if key not in seen:
            seen.add(key)
            graph.nodes.append(key)

    for predicate, args in facts:
        node((predicate, len(args)))
    for rule in rules:
        heads = [atom.key for atom in rule.head]
        for key in heads:
            node(key)
        for item in rule.body:
            if isinstance(item, Literal):
                sources, edges = [item.atom.key], graph.neg_edges if item.negative else graph.pos_edges
            elif isinstance(item, Aggregate):
                sources, edges = [lit.atom.key for lit in item.conjunction], graph.agg_edges
            else:
                continue
            for src in sources:
                node(src)
                edges.update((src, dst) for dst in heads)
    return graph


def evaluation_order(graph: DependencyGraph) -> list[list]:
    """Strongly connected components in a deterministic topological order."""
    g = nx.DiGraph()
    g.add_nodes_from(graph.nodes)
    g.add_edges_from((src, dst) for src, dst, _ in graph.edges())
    condensed = nx.condensation(g)
    members = condensed.graph["mapping"]
    rank = {key: i for i, key in enumerate(graph.nodes)}
    components = {c: sorted(condensed.nodes[c]["members"], key=rank.__getitem__) for c in condensed.nodes}
    for edges in (graph.neg_edges, graph.agg_edges):
        for src, dst in edges:
            if members[src] == members[dst]:
                raise StratificationError(components[members[src]])
    order = nx.lexicographical_topological_sort(condensed, key=lambda c: rank[components[c][0]])
    return [components[c] for c in order]


def rule_component(rule: FlatRule, position: dict) -> int:
    """Index of the component a rule is grounded in: its earliest head."""
    if rule.head:
        return min(position[atom.key] for atom in rule.head)
    return max((position[i.atom.key] for i in rule.body if isinstance(i, Literal)), default=0)
