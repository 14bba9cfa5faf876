from src.utils import (count_loc, discover_files, format_percent, natural_key, split_qualified_id, tree_hash,
                       write_atomic)


def test_discover_files(tmp_path):
    for rel_path in ("b/B.java", "a/A.java", "a/gen/G.java", "a/notes.txt"):
        (tmp_path / rel_path).parent.mkdir(parents=True, exist_ok=True)
        (tmp_path / rel_path).write_text("class X {}")
    assert discover_files(tmp_path) == ["a/A.java", "a/gen/G.java", "b/B.java"]
    assert discover_files(tmp_path, exclude=("*/gen/*",)) == ["a/A.java", "b/B.java"]


def test_tree_hash_sees_content_changes(tmp_path):
    (tmp_path / "A.java").write_bytes(b"class A {}")
    before = tree_hash(tmp_path)
    (tmp_path / "A.java").write_bytes(b"class A { }")
    assert tree_hash(tmp_path) != before
    (tmp_path / "A.java").write_bytes(b"class A {}")
    assert tree_hash(tmp_path) == before


def test_count_loc():
    assert count_loc(b"class A {\n\n   \n  int x;\n}\n") == 3


def test_natural_key():
    keys = ["A.java:ho_10", "A.java:2", "A.java:ho_9", "A.java:10"]
    assert sorted(keys, key=natural_key) == ["A.java:2", "A.java:10", "A.java:ho_9", "A.java:ho_10"]


def test_split_qualified_id():
    assert split_qualified_id("org/A.java:12") == ("org/A.java", 12)
    assert split_qualified_id("org/A.java:man_1") == ("org/A.java", "man_1")


def test_write_atomic(tmp_path):
    write_atomic(tmp_path / "deep" / "out.txt", "text")
    write_atomic(tmp_path / "deep" / "out.bin", b"\x00\xff")
    assert (tmp_path / "deep" / "out.txt").read_text() == "text"
    assert (tmp_path / "deep" / "out.bin").read_bytes() == b"\x00\xff"
    assert sorted(path.name for path in (tmp_path / "deep").iterdir()) == ["out.bin", "out.txt"]


def test_format_percent():
    assert format_percent(None) == "n/a"
    assert format_percent(805 / 1390) == "57.9%"
