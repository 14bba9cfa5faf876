import pytest

from src.java_front import SourceFile, splice
from src.manual_import import (MANUAL_OPERATOR, AmbiguousMatch, IdenticalToSource, NoMatch, derive_manual_mutant,
                               diff_edits, import_mutants, match_path, register_manual)
from src.mutation_engine import format_header

CALC = b"""\
package org.example;

class Calc {
    int add(int a, int b) {
        return a + b;
    }

    int twice(int a) {
        return a * 2;
    }
}
"""

CORPUS_PATHS = ["org/example/Calc.java", "org/other/Calc.java", "org/example/util/Strings.java"]


@pytest.fixture
def corpus():
    return {"org/example/Calc.java": SourceFile("org/example/Calc.java", CALC)}


def write(root, rel, data):
    path = root / rel
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


class TestMatchPath:
    def test_full_path(self):
        assert match_path("org/example/Calc.java", CORPUS_PATHS) == "org/example/Calc.java"

    def test_longest_suffix(self):
        assert match_path("mutants/example/Calc.java", CORPUS_PATHS) == "org/example/Calc.java"
        assert match_path("Strings.java", CORPUS_PATHS) == "org/example/util/Strings.java"

    def test_ambiguous(self):
        with pytest.raises(AmbiguousMatch) as error:
            match_path("Calc.java", CORPUS_PATHS)
        assert error.value.matches == ["org/example/Calc.java", "org/other/Calc.java"]

    def test_no_match(self):
        with pytest.raises(NoMatch):
            match_path("Parser.java", CORPUS_PATHS)

    def test_mutant_tree_layout(self):
        assert match_path("example/Calc.java/3.java", CORPUS_PATHS) == "org/example/Calc.java"


class TestDiff:
    def test_one_line_change(self):
        mutated = CALC.replace(b"a + b", b"a - b")
        edits, lines, before, after = diff_edits(CALC, mutated)
        assert lines == [5]
        assert (before, after) == ("return a + b;", "return a - b;")
        assert splice(SourceFile("Calc.java", CALC), edits) == mutated

    def test_two_hunks(self):
        mutated = CALC.replace(b"a + b", b"a - b").replace(b"a * 2", b"a * 3")
        edits, lines, before, after = diff_edits(CALC, mutated)
        assert lines == [5, 9]
        assert after == "return a - b; | return a * 3;"
        assert splice(SourceFile("Calc.java", CALC), edits) == mutated

    def test_inserted_line(self):
        mutated = CALC.replace(b"        return a + b;\n", b"        a = 0;\n        return a + b;\n")
        edits, _, before, after = diff_edits(CALC, mutated)
        assert (before, after) == ("", "a = 0;")
        assert splice(SourceFile("Calc.java", CALC), edits) == mutated


class TestDerive:
    def test_header_is_stripped(self, corpus):
        mutated = CALC.replace(b"a * 2", b"a / 2")
        data = format_header([("mutant_id", 4), ("operator", "AOR-B")]) + mutated
        manual = derive_manual_mutant("Calc.java/4.java", data, corpus["org/example/Calc.java"])
        assert manual.lines == [9]
        assert manual.node_ids
        mutant = manual.to_mutant()
        assert mutant.kind == "manual"
        assert mutant.operator == MANUAL_OPERATOR
        assert splice(corpus["org/example/Calc.java"], mutant.edits) == mutated

    def test_identical(self, corpus):
        with pytest.raises(IdenticalToSource):
            derive_manual_mutant("Calc.java", CALC, corpus["org/example/Calc.java"])


class TestImport:
    def test_ids_per_source(self, tmp_path, corpus):
        write(tmp_path, "example/Calc.java/2.java", CALC.replace(b"a * 2", b"a + 2"))
        write(tmp_path, "example/Calc.java/1.java", CALC.replace(b"a + b", b"a * b"))
        imported = import_mutants(tmp_path, corpus)
        by_file = {manual.mutant_file: manual.mutant_id for manual in imported}
        assert by_file == {"example/Calc.java/1.java": "man_1", "example/Calc.java/2.java": "man_2"}

    def test_mismatches_skipped(self, tmp_path, corpus):
        write(tmp_path, "Calc.java", CALC)
        write(tmp_path, "Parser.java", b"class Parser {}")
        assert import_mutants(tmp_path, corpus) == []

    def test_strict(self, tmp_path, corpus):
        write(tmp_path, "Calc.java", CALC)
        with pytest.raises(IdenticalToSource):
            import_mutants(tmp_path, corpus, strict=True)


class TestRegister:
    def test_replaces_previous_manual_entries(self, tmp_path, corpus):
        write(tmp_path, "Calc.java", CALC.replace(b"a + b", b"a % b"))
        index = {"files": [{"path": "org/example/Calc.java", "operator_counts": {"AOR-B": 1},
                            "mutants": [{"mutant_id": 1, "kind": "first-order"},
                                        {"mutant_id": "man_1", "kind": "manual", "after": "stale"}]}]}
        register_manual(index, import_mutants(tmp_path, corpus))
        mutants = index["files"][0]["mutants"]
        assert [record["mutant_id"] for record in mutants] == [1, "man_1"]
        assert mutants[1]["after"] == "return a % b;"

    def test_new_file_entry(self, tmp_path, corpus):
        write(tmp_path, "Calc.java", CALC.replace(b"a + b", b"a % b"))
        index = register_manual({"files": []}, import_mutants(tmp_path, corpus))
        assert index["files"][0]["path"] == "org/example/Calc.java"
        assert index["files"][0]["mutants"][0]["kind"] == "manual"
