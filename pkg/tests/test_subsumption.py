import json
from itertools import product

import networkx as nx
import numpy as np
import pydot
import pytest

from src.executor import MutantOutcome
from src.java_front import Edit
from src.mutation_engine import Mutant, OperatorKind
from src.results_report import ResultsDatabase
from src.subsumption import (KillMatrix, NoTestsExtracted, UnknownPatterns, build_graph, dynamically_subsumes,
                             export_dot, export_gml, export_json, extract_kill_matrix, extract_test_names,
                             render_png, resolve_patterns)

SUREFIRE_OUTPUT = b"""\
[out] -------------------------------------------------------
[out]  T E S T S
[out] -------------------------------------------------------
[out] Running org.example.CalcTest
[out] Tests run: 3, Failures: 2, Errors: 0, Skipped: 0, Time elapsed: 0.05 sec <<< FAILURE!
[out] testAdd(org.example.CalcTest)  Time elapsed: 0.01 sec  <<< FAILURE!
[out] testSub(org.example.CalcTest)  Time elapsed: 0 sec  <<< FAILURE!
[out] Results :
[out] Failed tests:   testAdd(org.example.CalcTest): expected:<3> but was:<-1>
"""

SUREFIRE3_OUTPUT = b"""\
[out] [ERROR] Failures:
[out] [ERROR]   CalcTest.testMul:21 expected: <6> but was: <5>
[out] [ERROR] Tests run: 4, Failures: 1, Errors: 0, Skipped: 0
"""


def record(database, path, mutant_id, status, output=b""):
    mutant = Mutant(mutant_id=mutant_id, operator=OperatorKind.ROR, edits=[Edit((0, 1), b"x")], before="",
                    after="", line=1, node_ids=[1], source_path=path)
    database.record(mutant, MutantOutcome(mutant_id=mutant_id, status=status, exit_status=1, output=output,
                                          duration=0.1, source_path=path))


def matrix_of(kill_sets):
    return KillMatrix.from_kill_sets({mutant: set(tests) for mutant, tests in kill_sets.items()})


def parse_dot(text):
    (dot,) = pydot.graph_from_dot_data(text)
    return dot


def dot_nodes(dot):
    """node name -> label, without the surrounding quotes."""
    return {node.get_name(): node.get("label").strip('"') for node in dot.get_nodes()
            if node.get_name() not in ("node", "edge", "graph")}


def dot_edges(dot):
    return sorted((edge.get_source(), edge.get_destination()) for edge in dot.get_edges())


class TestExtraction:
    def test_surefire(self):
        names = extract_test_names(SUREFIRE_OUTPUT, resolve_patterns(["surefire"]))
        assert names == {"org.example.CalcTest.testAdd", "org.example.CalcTest.testSub"}

    def test_surefire_three(self):
        assert extract_test_names(SUREFIRE3_OUTPUT, resolve_patterns(None)) == {"CalcTest.testMul"}

    def test_gradle(self):
        output = b"[out] org.example.CalcTest > testDiv FAILED\n[out]     java.lang.AssertionError\n"
        assert extract_test_names(output, resolve_patterns(["gradle"])) == {"org.example.CalcTest.testDiv"}

    def test_pattern_file(self, tmp_path):
        path = tmp_path / "patterns.txt"
        path.write_text("# custom runner\n\nFAILED: (?P<test>\\S+)\n")
        assert extract_test_names("FAILED: suite.one\nok: two\n", resolve_patterns([str(path)])) == {"suite.one"}

    def test_unknown_pattern(self):
        with pytest.raises(UnknownPatterns):
            resolve_patterns(["no-such-preset"])

    def test_matrix_from_database(self, tmp_path):
        database = ResultsDatabase(tmp_path)
        record(database, "A.java", 1, "killed", SUREFIRE_OUTPUT)
        record(database, "A.java", 2, "survived", b"[out] Tests run: 3, Failures: 0\n")
        record(database, "A.java", 3, "killed-timeout")
        record(database, "A.java", 4, "invalid", b"[out] COMPILATION ERROR\n")
        matrix = extract_kill_matrix(database, ["surefire"])
        assert matrix.mutants == ["A.java:1", "A.java:2"]
        assert matrix.tests == ["org.example.CalcTest.testAdd", "org.example.CalcTest.testSub"]
        assert matrix.kills.tolist() == [[True, True], [False, False]]
        assert matrix.unattributed == {"A.java:3": "timeout"}

    def test_kill_without_test_names_warns(self, tmp_path):
        database = ResultsDatabase(tmp_path)
        record(database, "A.java", 1, "killed", b"[out] BUILD FAILURE\n")
        with pytest.warns(NoTestsExtracted):
            matrix = extract_kill_matrix(database, ["surefire"])
        assert matrix.mutants == []
        assert "A.java:1" in matrix.unattributed


class TestDynamicSubsumption:
    def test_cases(self):
        matrix = matrix_of({"m1": {"t1"}, "m2": {"t1", "t2"}, "m3": set(), "m4": {"t1"}})
        assert dynamically_subsumes("m1", "m2", matrix)
        assert not dynamically_subsumes("m2", "m1", matrix)
        assert dynamically_subsumes("m1", "m4", matrix) and dynamically_subsumes("m4", "m1", matrix)
        assert not dynamically_subsumes("m3", "m1", matrix)
        assert not dynamically_subsumes("m1", "m3", matrix)

    def test_three_mutant_graph(self):
        graph = build_graph(matrix_of({"m1": {"t1"}, "m2": {"t1", "t2"}, "m3": {"t2"}}))
        assert [graph.members(node) for node in graph.groups] == [("m1",), ("m2",), ("m3",)]
        assert graph.edges == [("g1", "g2"), ("g3", "g2")]
        assert graph.subsuming_groups() == ["g1", "g3"]
        assert graph.query("m2").subsumed_by == ("m1", "m3")
        assert not graph.query("m2").subsuming

    def test_equivalent_kill_sets_share_a_group(self):
        graph = build_graph(matrix_of({"m1": {"t1"}, "m2": {"t1"}, "m3": {"t1", "t2"}}))
        assert graph.members("g1") == ("m1", "m2")
        assert graph.query("m1").subsumes == ("m2", "m3")
        assert graph.query("m1").subsumed_by == ("m2",)

    def test_survivors_are_not_in_the_graph(self):
        graph = build_graph(matrix_of({"m1": set(), "m2": {"t1"}}))
        assert graph.groups == ["g1"]
        assert graph.query("m1").subsuming is False

    def test_empty(self):
        graph = build_graph(matrix_of({}))
        assert graph.groups == []
        dot = parse_dot(export_dot(graph))
        assert dot_nodes(dot) == {}
        assert dot_edges(dot) == []

    def test_against_brute_force(self):
        """Random kill matrices up to 8 mutants x 6 tests agree with the pairwise definition."""
        rng = np.random.default_rng(17)
        for _ in range(1000):
            n_mutants, n_tests = rng.integers(1, 9), rng.integers(1, 7)
            kills = rng.random((n_mutants, n_tests)) < 0.4
            mutants = [f"m{index}" for index in range(n_mutants)]
            matrix = matrix_of({mutant: {f"t{column}" for column in np.flatnonzero(row)}
                                for mutant, row in zip(mutants, kills)})
            graph = build_graph(matrix)
            assert nx.is_directed_acyclic_graph(graph.graph)
            killed = [mutant for mutant in mutants if matrix.kill_set(mutant)]
            for a in killed:
                expected = not any(dynamically_subsumes(b, a, matrix) and not dynamically_subsumes(a, b, matrix)
                                   for b in killed)
                assert graph.query(a).subsuming == expected
            for a, b in product(killed, killed):
                strict = dynamically_subsumes(a, b, matrix) and not dynamically_subsumes(b, a, matrix)
                assert graph.graph.has_edge(graph.group_of[a], graph.group_of[b]) == strict

    def test_transitive_edges(self):
        graph = build_graph(matrix_of({"m1": {"t1"}, "m2": {"t1", "t2"}, "m3": {"t1", "t2", "t3"}}))
        assert ("g1", "g3") in graph.edges
        assert ("g1", "g3") not in graph.reduced().edges


class TestExports:
    @pytest.fixture
    def chain(self):
        return build_graph(matrix_of({"A.java:1": {"t1"}, "A.java:2": {"t1", "t2"}, "B.java:1": {"t1", "t2", "t3"}}))

    def test_dot(self, chain):
        dot = parse_dot(export_dot(chain))
        assert dot.get_name() == "subsumption"
        assert dot_nodes(dot) == {"g1": "A.java:1\\n1 test(s)", "g2": "A.java:2\\n2 test(s)",
                                  "g3": "B.java:1\\n3 test(s)"}
        assert dot.get_node("g1")[0].get("fillcolor") == "palegreen"
        assert dot.get_node("g2")[0].get("style") is None
        assert dot_edges(dot) == [("g1", "g2"), ("g1", "g3"), ("g2", "g3")]

    def test_dot_is_deterministic(self, chain):
        assert export_dot(chain) == export_dot(chain)

    def test_dot_reduced(self, chain):
        assert dot_edges(parse_dot(export_dot(chain, reduce=True))) == [("g1", "g2"), ("g2", "g3")]

    def test_dot_label_escaping(self):
        graph = build_graph(matrix_of({'Q.java:"1"': {"t1"}}))
        assert '\\"1\\"' in dot_nodes(parse_dot(export_dot(graph)))["g1"]

    def test_json(self, chain):
        matrix = matrix_of({"A.java:1": {"t1"}, "A.java:2": {"t1", "t2"}, "B.java:1": {"t1", "t2", "t3"}})
        document = json.loads(export_json(chain, matrix))
        assert document["groups"][0] == {"id": "g1", "members": ["A.java:1"], "kill_set": ["t1"], "subsuming": True}
        assert document["mutants"]["B.java:1"]["subsumed_by"] == ["A.java:1", "A.java:2"]

    def test_gml(self, tmp_path, chain):
        export_gml(chain, tmp_path / "graph.gml", reduce=True)
        graph = nx.read_gml(tmp_path / "graph.gml")
        assert sorted(graph.edges) == [("g1", "g2"), ("g2", "g3")]
        assert graph.nodes["g1"]["subsuming"] == 1

    def test_png(self, tmp_path, chain):
        render_png(chain, tmp_path / "graph.png")
        assert (tmp_path / "graph.png").read_bytes().startswith(b"\x89PNG")
