"""
Dynamic mutant subsumption.

Mutant A dynamically subsumes mutant B when A is killed and every test that kills A
also kills B. Kill sets are recovered from the retained build outputs with regular
expressions; mutants with identical kill sets form one group, and an edge A -> B in
the graph means that A's kill set is a strict subset of B's (A subsumes B).
"""

import json
import logging
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from src.utils import MutationToolError, natural_key, qualified_id

logger = logging.getLogger(__name__)


class NoTestsExtracted(UserWarning):
    pass


class UnknownPatterns(MutationToolError):
    pass


# regexes with named groups: 'test', or 'cls' and 'method'
PATTERN_PRESETS = {
    "surefire": [
        r"(?P<method>[A-Za-z_$][\w$]*)\((?P<cls>[A-Za-z_$][\w.$]*)\)",
        r"\[ERROR\]\s+(?P<cls>[A-Za-z_$][\w.$]*)\.(?P<method>[A-Za-z_$][\w$]*):\d+",
    ],
    "ant-junit": [
        r"Testcase: (?P<method>[\w$]+)\((?P<cls>[\w.$]+)\):\s*(?:FAILED|Caused an ERROR)",
    ],
    "gradle": [
        r"^(?:\[(?:out|err)\] )?(?P<cls>[\w.$]+) > (?P<method>.+?) FAILED\s*$",
    ],
    "junit-console": [
        r"MethodSource \[className = '(?P<cls>[\w.$]+)', methodName = '(?P<method>[\w$]+)'",
    ],
}
DEFAULT_PRESETS = ("surefire",)


def resolve_patterns(specs):
    """Preset names or paths of files holding one regex per line (blank lines and '#' comments skipped)."""
    patterns = []
    for spec in specs or DEFAULT_PRESETS:
        if spec in PATTERN_PRESETS:
            patterns.extend(PATTERN_PRESETS[spec])
        elif Path(spec).is_file():
            lines = Path(spec).read_text().splitlines()
            patterns.extend(line for line in lines if line.strip() and not line.lstrip().startswith("#"))
        else:
            raise UnknownPatterns(f"{spec!r} is neither a pattern preset ({', '.join(PATTERN_PRESETS)}) nor a file")
    return [re.compile(pattern, re.MULTILINE) for pattern in patterns]


def extract_test_names(output, patterns):
    text = output.decode("utf-8", "replace") if isinstance(output, bytes) else output
    names = set()
    for pattern in patterns:
        for match in pattern.finditer(text):
            groups = match.groupdict()
            if groups.get("test"):
                names.add(groups["test"].strip())
            elif groups.get("cls") and groups.get("method"):
                names.add(f"{groups['cls']}.{groups['method'].strip()}")
    return names


@dataclass
class KillMatrix:
    mutants: list
    tests: list
    kills: np.ndarray
    # mutant key -> reason it could not be attributed to tests
    unattributed: dict = field(default_factory=dict)

    @classmethod
    def from_kill_sets(cls, kill_sets, unattributed=None):
        mutants = sorted(kill_sets, key=natural_key)
        tests = sorted({test for tests in kill_sets.values() for test in tests})
        column = {test: index for index, test in enumerate(tests)}
        kills = np.zeros((len(mutants), len(tests)), dtype=bool)
        for row, mutant in enumerate(mutants):
            for test in kill_sets[mutant]:
                kills[row, column[test]] = True
        return cls(mutants=mutants, tests=tests, kills=kills, unattributed=dict(unattributed or {}))

    def kill_set(self, mutant):
        row = self.mutants.index(mutant)
        return frozenset(test for test, killed in zip(self.tests, self.kills[row]) if killed)

    def kill_sets(self):
        return {mutant: self.kill_set(mutant) for mutant in self.mutants}


def extract_kill_matrix(database, patterns):
    """
    Kill matrix over the executed mutants of a ResultsDatabase.

    Survived mutants get an all-false row. Timeout kills and kills whose output names
    no test are listed in unattributed and left out of the matrix; invalid mutants
    are ignored.
    """
    if patterns and isinstance(patterns[0], str):
        patterns = resolve_patterns(patterns)
    kill_sets = {}
    unattributed = {}
    for path in sorted(database.files, key=natural_key):
        for entry in database.entries(path):
            key = qualified_id(path, entry["mutant_id"])
            status = entry["status"]
            if status == "survived":
                kill_sets[key] = set()
            elif status == "killed-timeout":
                unattributed[key] = "timeout"
                logger.warning("%s was killed by a timeout; no failing tests to attribute", key)
            elif status == "killed":
                names = extract_test_names(database.read_output(entry), patterns)
                if names:
                    kill_sets[key] = names
                else:
                    unattributed[key] = "no test names found"
                    warnings.warn(f"no failing test names found in the build output of {key}", NoTestsExtracted)
    return KillMatrix.from_kill_sets(kill_sets, unattributed)


def dynamically_subsumes(a, b, matrix):
    kill_set_a = matrix.kill_set(a)
    return bool(kill_set_a) and kill_set_a <= matrix.kill_set(b)


@dataclass(frozen=True)
class MutantSubsumption:
    mutant: str
    subsuming: bool
    killing_tests: tuple
    subsumed_by: tuple
    subsumes: tuple


class SubsumptionGraph:
    """
    Groups of mutants with the same non-empty kill set on a networkx DiGraph.
    Node ids are 'g1', 'g2', ... ordered by each group's smallest member.
    """

    def __init__(self, groups):
        self.graph = nx.DiGraph()
        ordered = [(sorted(members, key=natural_key), kill_set) for kill_set, members in groups.items()]
        ordered.sort(key=lambda item: natural_key(item[0][0]))
        self.group_of = {}
        for index, (members, kill_set) in enumerate(ordered, start=1):
            node = f"g{index}"
            self.graph.add_node(node, members=tuple(members), kill_set=frozenset(kill_set))
            for member in members:
                self.group_of[member] = node
        for a in self.graph.nodes:
            for b in self.graph.nodes:
                if self.kill_set(a) < self.kill_set(b):
                    self.graph.add_edge(a, b)
        for node in self.graph.nodes:
            self.graph.nodes[node]["subsuming"] = self.graph.in_degree(node) == 0

    @property
    def groups(self):
        return list(self.graph.nodes)

    @property
    def edges(self):
        return sorted(self.graph.edges, key=lambda edge: (natural_key(edge[0]), natural_key(edge[1])))

    def members(self, node):
        return self.graph.nodes[node]["members"]

    def kill_set(self, node):
        return self.graph.nodes[node]["kill_set"]

    def is_subsuming(self, node):
        return self.graph.nodes[node]["subsuming"]

    def subsuming_groups(self):
        return [node for node in self.graph.nodes if self.is_subsuming(node)]

    def query(self, mutant):
        """Subsuming flag, killing tests, subsuming mutants and subsumed mutants of one mutant."""
        node = self.group_of.get(mutant)
        if node is None:
            return MutantSubsumption(mutant, False, (), (), ())
        same = [member for member in self.members(node) if member != mutant]
        above = [member for other in self.graph.predecessors(node) for member in self.members(other)]
        below = [member for other in self.graph.successors(node) for member in self.members(other)]
        return MutantSubsumption(
            mutant=mutant,
            subsuming=self.is_subsuming(node),
            killing_tests=tuple(sorted(self.kill_set(node))),
            subsumed_by=tuple(sorted(same + above, key=natural_key)),
            subsumes=tuple(sorted(same + below, key=natural_key)),
        )

    def reduced(self):
        """Graph with the transitive edges removed (node attributes kept)."""
        reduction = nx.transitive_reduction(self.graph)
        reduction.add_nodes_from(self.graph.nodes(data=True))
        return reduction


def build_graph(matrix):
    groups = {}
    for mutant, kill_set in matrix.kill_sets().items():
        if kill_set:
            groups.setdefault(kill_set, []).append(mutant)
    graph = SubsumptionGraph(groups)
    assert nx.is_directed_acyclic_graph(graph.graph)
    logger.info("%d mutant group(s), %d subsuming", len(graph.groups), len(graph.subsuming_groups()))
    return graph


def _dot_label(members, size):
    # quoted up front: networkx rejects attribute values holding an unquoted ':'
    escaped = ", ".join(members).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}\\n{size} test(s)"'


def dot_graph(graph, reduce=False):
    """Plain DiGraph with DOT attributes; subsuming groups are filled green."""
    digraph = graph.reduced() if reduce else graph.graph
    dot = nx.DiGraph(name="subsumption")
    dot.graph["node"] = {"shape": "box"}
    for node in sorted(digraph.nodes, key=natural_key):
        label = _dot_label(graph.members(node), len(graph.kill_set(node)))
        attributes = {"label": label}
        if graph.is_subsuming(node):
            attributes.update(style="filled", fillcolor="palegreen")
        dot.add_node(node, **attributes)
    dot.add_edges_from(sorted(digraph.edges, key=lambda edge: (natural_key(edge[0]), natural_key(edge[1]))))
    return dot


def export_dot(graph, reduce=False):
    return nx.nx_pydot.to_pydot(dot_graph(graph, reduce)).to_string()


def export_json(graph, matrix=None):
    document = {
        "groups": [{"id": node, "members": list(graph.members(node)),
                    "kill_set": sorted(graph.kill_set(node)), "subsuming": graph.is_subsuming(node)}
                   for node in sorted(graph.groups, key=natural_key)],
        "edges": [list(edge) for edge in graph.edges],
    }
    if matrix is not None:
        document["mutants"] = {mutant: vars(graph.query(mutant)) for mutant in matrix.mutants}
        document["unattributed"] = dict(sorted(matrix.unattributed.items(), key=lambda item: natural_key(item[0])))
    return json.dumps(document, indent=2, default=list) + "\n"


def export_gml(graph, path, reduce=False):
    digraph = graph.reduced() if reduce else graph.graph
    plain = nx.DiGraph()
    for node in digraph.nodes:
        plain.add_node(node, members=",".join(graph.members(node)), tests=len(graph.kill_set(node)),
                       subsuming=int(graph.is_subsuming(node)))
    plain.add_edges_from(digraph.edges)
    nx.write_gml(plain, path)


def render_png(graph, path, reduce=True):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    digraph = graph.reduced() if reduce else graph.graph.copy()
    for layer, nodes in enumerate(nx.topological_generations(digraph)):
        for node in nodes:
            digraph.nodes[node]["layer"] = layer
    fig, ax = plt.subplots(figsize=(max(4, len(digraph) * 1.2), 6))
    if len(digraph):
        positions = nx.multipartite_layout(digraph, subset_key="layer", align="horizontal")
        positions = {node: (x, -y) for node, (x, y) in positions.items()}
        colors = ["palegreen" if graph.is_subsuming(node) else "lightgray" for node in digraph.nodes]
        labels = {node: "\n".join(graph.members(node)) for node in digraph.nodes}
        nx.draw_networkx(digraph, positions, ax=ax, labels=labels, node_color=colors,
                         node_shape="s", node_size=1500, font_size=7, arrows=True)
    ax.axis("off")
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
