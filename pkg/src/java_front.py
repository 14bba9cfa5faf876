"""
Reading, parsing and splicing of Java source files.

Parsing is delegated to tree-sitter's Java grammar; the resulting concrete tree is
flattened into a SyntaxTree of named nodes carrying stable pre-order ids and byte
spans. Mutants are produced by splicing replacement bytes into the original content,
so everything outside an edited span is preserved byte for byte.
"""

import bisect
import logging
from dataclasses import dataclass, field
from pathlib import Path

import tree_sitter_java
from tree_sitter import Language, Parser

from src.utils import MutationToolError

logger = logging.getLogger(__name__)

JAVA_LANGUAGE = Language(tree_sitter_java.language())


class ParseError(MutationToolError):
    def __init__(self, file, line, message):
        self.file = file
        self.line = line
        self.message = message
        super().__init__(f"{file}:{line}: {message}")


class OverlappingEdits(MutationToolError):
    pass


class UnknownNode(MutationToolError):
    pass


# tree-sitter node types grouped into the categories used by the mutation operators
NODE_KINDS = {
    "program": "compilation-unit",
    "class_declaration": "class-decl",
    "enum_declaration": "class-decl",
    "record_declaration": "class-decl",
    "interface_declaration": "interface-decl",
    "annotation_type_declaration": "interface-decl",
    "method_declaration": "method-decl",
    "constructor_declaration": "method-decl",
    "compact_constructor_declaration": "method-decl",
    "formal_parameter": "parameter",
    "spread_parameter": "parameter",
    "binary_expression": "binary-expr",
    "unary_expression": "unary-expr",
    "update_expression": "update-expr",
    "assignment_expression": "assignment-expr",
    "ternary_expression": "conditional-expr",
    "object_creation_expression": "new-expr",
    "lambda_expression": "lambda-expr",
    "parenthesized_expression": "parenthesized-expr",
    "identifier": "identifier",
    "type_identifier": "identifier",
    "null_literal": "literal",
    "string_literal": "literal",
    "text_block": "literal",
    "character_literal": "literal",
    "true": "literal",
    "false": "literal",
    "decimal_integer_literal": "literal",
    "hex_integer_literal": "literal",
    "octal_integer_literal": "literal",
    "binary_integer_literal": "literal",
    "decimal_floating_point_literal": "literal",
    "hex_floating_point_literal": "literal",
}

STATEMENT_TYPES = frozenset({
    "expression_statement", "local_variable_declaration", "return_statement",
    "if_statement", "while_statement", "for_statement", "enhanced_for_statement",
    "do_statement", "throw_statement", "block", "constructor_body", "switch_expression",
    "try_statement", "try_with_resources_statement", "break_statement",
    "continue_statement", "yield_statement", "assert_statement",
    "synchronized_statement", "labeled_statement", "explicit_constructor_invocation",
    "field_declaration", "local_class_declaration",
})

# named-child fields resolved into Node.fields
NODE_FIELDS = {
    "binary_expression": ("left", "right"),
    "unary_expression": ("operand",),
    "assignment_expression": ("left", "right"),
    "method_declaration": ("type", "name", "parameters", "body"),
    "constructor_declaration": ("name", "parameters", "body"),
    "formal_parameter": ("type", "name", "dimensions"),
    "object_creation_expression": ("type", "arguments"),
    "lambda_expression": ("body",),
}

OPERATOR_TYPES = frozenset({"binary_expression", "unary_expression", "assignment_expression"})
UPDATE_TOKENS = frozenset({"++", "--"})


@dataclass(frozen=True)
class SourceFile:
    path: str
    content: bytes
    line_index: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        starts = [0]
        offset = self.content.find(b"\n")
        while offset != -1:
            starts.append(offset + 1)
            offset = self.content.find(b"\n", offset + 1)
        # a trailing newline does not open a new line
        if len(starts) > 1 and starts[-1] == len(self.content):
            starts.pop()
        object.__setattr__(self, "line_index", tuple(starts))

    @classmethod
    def read(cls, root, rel_path):
        rel_path = Path(rel_path).as_posix()
        return cls(rel_path, Path(root, rel_path).read_bytes())

    def write(self, root, content=None):
        target = Path(root, self.path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(self.content if content is None else content)

    def line_of(self, offset):
        return bisect.bisect_right(self.line_index, offset)


@dataclass(frozen=True)
class Edit:
    span: tuple
    replacement: bytes

    @property
    def start(self):
        return self.span[0]

    @property
    def end(self):
        return self.span[1]

    def shifted(self, delta):
        return Edit((self.start + delta, self.end + delta), self.replacement)

    def to_json(self):
        return {"start": self.start, "end": self.end,
                "replacement": self.replacement.decode("utf-8", "surrogateescape")}

    @classmethod
    def from_json(cls, data):
        return cls((data["start"], data["end"]), data["replacement"].encode("utf-8", "surrogateescape"))


@dataclass
class Node:
    id: int
    kind: str
    ts_type: str
    span: tuple
    line: int
    parent: int = None
    children: list = field(default_factory=list)
    fields: dict = field(default_factory=dict)
    operator_token: str = None
    operator_span: tuple = None

    @property
    def start(self):
        return self.span[0]

    @property
    def end(self):
        return self.span[1]


@dataclass
class SyntaxTree:
    nodes: list
    root: int = 0

    def node(self, node_id):
        if not isinstance(node_id, int) or not 0 <= node_id < len(self.nodes):
            raise UnknownNode(f"no node with id {node_id!r}")
        return self.nodes[node_id]

    def of_type(self, *ts_types):
        return [node for node in self.nodes if node.ts_type in ts_types]

    def of_kind(self, *kinds):
        return [node for node in self.nodes if node.kind in kinds]

    def field(self, node, name):
        child_id = node.fields.get(name)
        return None if child_id is None else self.nodes[child_id]

    def child_nodes(self, node):
        return [self.nodes[child_id] for child_id in node.children]

    def ancestors(self, node):
        while node.parent is not None:
            node = self.nodes[node.parent]
            yield node

    def enclosing(self, node, predicate, include_self=True):
        if include_self and predicate(node):
            return node
        for ancestor in self.ancestors(node):
            if predicate(ancestor):
                return ancestor
        return None

    def smallest_statement_at(self, offset):
        """Innermost statement node whose span contains offset (start inclusive, end exclusive)."""
        best = None
        for node in self.nodes:
            if node.kind == "statement" and node.start <= offset < node.end:
                if best is None or node.end - node.start <= best.end - best.start:
                    best = node
        return best


def _first_error(ts_node):
    stack = [ts_node]
    while stack:
        current = stack.pop()
        if current.type == "ERROR" or current.is_missing:
            return current
        if current.has_error:
            stack.extend(reversed(current.children))
    return None


def parse_source(file):
    """
    Parse a SourceFile into a SyntaxTree.

    Only named tree-sitter nodes become Nodes; operator tokens of binary, unary,
    assignment and update expressions are recorded on the expression node itself.
    Raises ParseError for empty, undecodable or syntactically invalid input.
    """
    if not file.content.strip():
        raise ParseError(file.path, 1, "empty source file")
    try:
        file.content.decode("utf-8")
    except UnicodeDecodeError as exception:
        raise ParseError(file.path, file.line_of(exception.start), "source is not valid UTF-8")

    ts_tree = Parser(JAVA_LANGUAGE).parse(file.content)
    if ts_tree.root_node.has_error:
        bad = _first_error(ts_tree.root_node)
        line = bad.start_point[0] + 1 if bad is not None else 1
        message = f"missing {bad.type}" if bad is not None and bad.is_missing else "syntax error"
        raise ParseError(file.path, line, message)

    nodes = []
    ids = {}
    pending_fields = []
    stack = [(ts_tree.root_node, None)]
    while stack:
        ts_node, parent_id = stack.pop()
        node_id = len(nodes)
        ids[ts_node.id] = node_id
        ts_type = ts_node.type
        kind = "statement" if ts_type in STATEMENT_TYPES else NODE_KINDS.get(ts_type, ts_type)
        node = Node(id=node_id, kind=kind, ts_type=ts_type,
                    span=(ts_node.start_byte, ts_node.end_byte),
                    line=ts_node.start_point[0] + 1, parent=parent_id)

        if ts_type in OPERATOR_TYPES:
            operator = ts_node.child_by_field_name("operator")
            if operator is not None:
                node.operator_token = operator.text.decode("utf-8")
                node.operator_span = (operator.start_byte, operator.end_byte)
        elif ts_type == "update_expression":
            for child in ts_node.children:
                if child.type in UPDATE_TOKENS:
                    node.operator_token = child.type
                    node.operator_span = (child.start_byte, child.end_byte)

        for name in NODE_FIELDS.get(ts_type, ()):
            child = ts_node.child_by_field_name(name)
            if child is not None and child.is_named:
                pending_fields.append((node, name, child.id))

        nodes.append(node)
        if parent_id is not None:
            nodes[parent_id].children.append(node_id)
        stack.extend((child, node_id) for child in reversed(ts_node.named_children))

    for node, name, child_key in pending_fields:
        if child_key in ids:
            node.fields[name] = ids[child_key]

    return SyntaxTree(nodes=nodes, root=0)


def _check_edits(content, edits):
    ordered = sorted(edits, key=lambda edit: (edit.start, edit.end))
    for edit in ordered:
        if not 0 <= edit.start <= edit.end <= len(content):
            raise OverlappingEdits(f"edit span {edit.span} lies outside the content (length {len(content)})")
    for first, second in zip(ordered, ordered[1:]):
        if second.start < first.end or first.span == second.span:
            raise OverlappingEdits(f"edit spans {first.span} and {second.span} intersect")
    return ordered


def splice_bytes(content, edits):
    ordered = _check_edits(content, edits)
    parts = []
    last = 0
    for edit in ordered:
        parts.append(content[last:edit.start])
        parts.append(edit.replacement)
        last = edit.end
    parts.append(content[last:])
    return b"".join(parts)


def splice(file, edits):
    """Replace every edit span of file.content by its replacement. Spans must be pairwise disjoint."""
    return splice_bytes(file.content, edits)


def node_text(file, node):
    return file.content[node.start:node.end].decode("utf-8", "replace")


def statement_text(tree, file, node_id):
    """Source text and 1-based line of the smallest statement enclosing node_id."""
    node = tree.node(node_id)
    statement = tree.enclosing(node, lambda candidate: candidate.kind == "statement") or node
    return node_text(file, statement), statement.line


def statement_after(tree, file, statement, edits):
    """Text of statement with those edits applied that fall inside its span."""
    inside = [edit.shifted(-statement.start) for edit in edits
              if statement.start <= edit.start and edit.end <= statement.end]
    fragment = file.content[statement.start:statement.end]
    return splice_bytes(fragment, inside).decode("utf-8", "replace")
