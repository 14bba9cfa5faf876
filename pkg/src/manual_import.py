"""
Import of hand-written mutants.

Every .java file under the import directory is matched to the corpus file sharing the
longest path suffix with it, and the difference between the two is turned into
line-level Edits so that the mutant runs through the same pipeline as generated ones.
"""

import difflib
import logging
from dataclasses import dataclass
from pathlib import Path, PurePosixPath

from src.java_front import Edit, ParseError, parse_source, splice
from src.mutation_engine import Mutant, strip_header
from src.utils import MutationToolError, discover_files, natural_key

logger = logging.getLogger(__name__)

MANUAL_OPERATOR = "Manual"


class ManualImportError(MutationToolError):
    pass


class AmbiguousMatch(ManualImportError):
    def __init__(self, candidate, matches):
        self.candidate = candidate
        self.matches = list(matches)
        super().__init__(f"{candidate} matches {len(self.matches)} source files equally well: {', '.join(self.matches)}")


class NoMatch(ManualImportError):
    pass


class IdenticalToSource(ManualImportError):
    pass


@dataclass
class ManualMutant:
    mutant_file: str
    source_path: str
    edits: list
    lines: list
    before: str
    after: str
    node_ids: list
    mutant_id: str = None

    def to_mutant(self):
        return Mutant(mutant_id=self.mutant_id, operator=MANUAL_OPERATOR, edits=list(self.edits),
                      before=self.before, after=self.after, line=self.lines[0], node_ids=list(self.node_ids),
                      source_path=self.source_path, kind="manual")


def match_path(candidate, corpus_paths):
    """
    Corpus path sharing the longest suffix of path components with candidate.

    A candidate inside a directory named like a Java file (the 'Foo.java/3.java' layout
    of a mutant tree) is matched by that directory's path.
    """
    parts = PurePosixPath(candidate).parts
    if len(parts) > 1 and parts[-2].endswith(".java"):
        parts = parts[:-1]
    best, best_length = [], 0
    for path in corpus_paths:
        corpus_parts = PurePosixPath(path).parts
        length = 0
        while length < min(len(parts), len(corpus_parts)) and parts[-1 - length] == corpus_parts[-1 - length]:
            length += 1
        if length == 0:
            continue
        if length > best_length:
            best, best_length = [path], length
        elif length == best_length:
            best.append(path)
    if not best:
        raise NoMatch(f"{candidate} matches no source file")
    if len(best) > 1:
        raise AmbiguousMatch(candidate, sorted(best))
    return best[0]


def diff_edits(original, mutated):
    """
    Line-based edits turning original into mutated (both bytes).
    Returns (edits, changed 1-based lines of original, removed text, inserted text).
    """
    source_lines = original.splitlines(keepends=True)
    mutant_lines = mutated.splitlines(keepends=True)
    offsets = [0]
    for line in source_lines:
        offsets.append(offsets[-1] + len(line))
    matcher = difflib.SequenceMatcher(None, source_lines, mutant_lines, autojunk=False)
    edits, lines, removed, inserted = [], [], [], []
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            continue
        edits.append(Edit((offsets[i1], offsets[i2]), b"".join(mutant_lines[j1:j2])))
        lines.append(min(i1 + 1, max(len(source_lines), 1)))
        removed.append(b"".join(source_lines[i1:i2]).decode("utf-8", "replace").strip())
        inserted.append(b"".join(mutant_lines[j1:j2]).decode("utf-8", "replace").strip())
    return edits, lines, " | ".join(removed), " | ".join(inserted)


def _node_ids(file, edits):
    try:
        tree = parse_source(file)
    except ParseError:
        return []
    node_ids = []
    for edit in edits:
        removed = file.content[edit.start:edit.end]
        statement = tree.smallest_statement_at(edit.start + len(removed) - len(removed.lstrip()))
        if statement is not None:
            node_ids.append(statement.id)
    return node_ids


def derive_manual_mutant(candidate, mutated, file):
    mutated = strip_header(mutated)
    edits, lines, before, after = diff_edits(file.content, mutated)
    if not edits:
        raise IdenticalToSource(f"{candidate} is identical to {file.path}")
    manual = ManualMutant(mutant_file=candidate, source_path=file.path, edits=edits, lines=lines,
                          before=before, after=after, node_ids=_node_ids(file, edits))
    assert splice(file, edits) == mutated
    return manual


def import_mutants(directory, corpus, strict=False):
    """
    Match and diff every .java file under directory against corpus (path -> SourceFile).

    Mismatched candidates are logged and skipped, or raised when strict is set.
    Returned mutants carry ids 'man_1', 'man_2', ... per source file.
    """
    imported = []
    for candidate in discover_files(directory, ("*.java",)):
        try:
            source_path = match_path(candidate, corpus)
            imported.append(derive_manual_mutant(candidate, Path(directory, candidate).read_bytes(),
                                                 corpus[source_path]))
        except ManualImportError as error:
            if strict:
                raise
            logger.warning("skipping %s: %s", candidate, error)
    counters = {}
    for manual in sorted(imported, key=lambda manual: (natural_key(manual.source_path), natural_key(manual.mutant_file))):
        counters[manual.source_path] = counters.get(manual.source_path, 0) + 1
        manual.mutant_id = f"man_{counters[manual.source_path]}"
    logger.info("imported %d manual mutant(s)", len(imported))
    return imported


def register_manual(index, manual_mutants):
    """Replace the manual entries of an index document by manual_mutants."""
    by_path = {}
    for manual in manual_mutants:
        by_path.setdefault(manual.source_path, []).append(manual.to_mutant().to_record())
    for file_entry in index["files"]:
        kept = [record for record in file_entry["mutants"] if record.get("kind") != "manual"]
        file_entry["mutants"] = kept + sorted(by_path.pop(file_entry["path"], []),
                                              key=lambda record: natural_key(record["mutant_id"]))
    # files that produced no generated mutants (or failed to parse) get a fresh entry
    for path in sorted(by_path, key=natural_key):
        index["files"].append({"path": path, "operator_counts": {},
                               "mutants": sorted(by_path[path], key=lambda record: natural_key(record["mutant_id"]))})
    index["files"].sort(key=lambda file_entry: natural_key(file_entry["path"]))
    return index
