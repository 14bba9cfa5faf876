"""
First-order mutant generation.

Nine classic operators replace (or delete) one operator token; four null-type operators
inject null into return values, parameters, object creations and null checks. Every
mutant is a single Edit on the original bytes plus provenance for the mutant header.
"""

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from src.java_front import Edit, node_text, splice, statement_after
from src.utils import MutationToolError

logger = logging.getLogger(__name__)

HEADER_TITLE = b"/* LittleDarwin mutant\n"
HEADER_END = b"*/\n"


class Unmappable(MutationToolError):
    pass


class OperatorKind(str, Enum):
    AOR_B = "AOR-B"
    AOR_S = "AOR-S"
    AOR_U = "AOR-U"
    LOR = "LOR"
    SOR = "SOR"
    ROR = "ROR"
    COR = "COR"
    COD = "COD"
    SAOR = "SAOR"
    NULLIFY_RETURN_VALUE = "NullifyReturnValue"
    NULLIFY_INPUT_VARIABLE = "NullifyInputVariable"
    NULLIFY_OBJECT_INITIALIZATION = "NullifyObjectInitialization"
    REMOVE_NULL_CHECK = "RemoveNullCheck"

    @property
    def family(self):
        return "classic" if self in CLASSIC_OPERATORS else "null-type"

    @classmethod
    def from_name(cls, name):
        for kind in cls:
            if kind.value == name:
                return kind
        raise ValueError(f"unknown mutation operator {name!r}")


CLASSIC_OPERATORS = frozenset({
    OperatorKind.AOR_B, OperatorKind.AOR_S, OperatorKind.AOR_U, OperatorKind.LOR, OperatorKind.SOR,
    OperatorKind.ROR, OperatorKind.COR, OperatorKind.COD, OperatorKind.SAOR,
})
NULL_OPERATORS = frozenset(set(OperatorKind) - CLASSIC_OPERATORS)
ALL_OPERATORS = frozenset(OperatorKind)

OPERATOR_FAMILIES = {
    "classic": CLASSIC_OPERATORS,
    "null": NULL_OPERATORS,
    "all": ALL_OPERATORS,
}

REPLACEMENTS = {
    OperatorKind.AOR_B: {"+": "-", "-": "+", "*": "/", "/": "*", "%": "/"},
    OperatorKind.AOR_S: {"++": "--", "--": "++"},
    OperatorKind.AOR_U: {"-": "+", "+": "-"},
    OperatorKind.LOR: {"&": "|", "|": "&", "^": "&"},
    OperatorKind.SOR: {">>": "<<", "<<": ">>", ">>>": ">>"},
    OperatorKind.ROR: {">=": "<", "<=": ">", ">": "<=", "<": ">=", "==": "!=", "!=": "=="},
    OperatorKind.COR: {"&&": "||", "||": "&&"},
    OperatorKind.COD: {"!": ""},
    OperatorKind.SAOR: {"+=": "-=", "-=": "+=", "*=": "/=", "/=": "*=", "%=": "/=",
                        "&=": "|=", "|=": "&=", "<<=": ">>=", ">>=": "<<=", "^=": "&="},
    OperatorKind.REMOVE_NULL_CHECK: {"==": "!=", "!=": "=="},
}

# operator kind per binary operator token
BINARY_OPERATOR_KINDS = {token: kind for kind in (OperatorKind.AOR_B, OperatorKind.LOR, OperatorKind.SOR,
                                                   OperatorKind.ROR, OperatorKind.COR)
                         for token in REPLACEMENTS[kind]}

PRIMITIVE_TYPES = frozenset({"integral_type", "floating_point_type", "boolean_type", "void_type"})
STRING_LITERALS = frozenset({"string_literal", "text_block"})

# characters that fuse with an adjacent operator into a different token
OPERATOR_CHARS = frozenset(b"+-*/%&|^<>=!")


def parse_operator_names(names):
    """Resolve operator names and the family shorthands 'classic', 'null' and 'all'."""
    kinds = set()
    for name in names:
        if name in OPERATOR_FAMILIES:
            kinds |= OPERATOR_FAMILIES[name]
        else:
            kinds.add(OperatorKind.from_name(name))
    return kinds


def operator_name(operator):
    return operator.value if isinstance(operator, OperatorKind) else str(operator)


@dataclass
class Mutant:
    mutant_id: object
    operator: object
    edits: list
    before: str
    after: str
    line: int
    node_ids: list
    source_path: str
    kind: str = "first-order"
    constituents: list = field(default_factory=list)
    # per-constituent (line, node_ids) of a higher-order mutant
    groups: list = field(default_factory=list)

    def to_record(self):
        record = {
            "mutant_id": self.mutant_id,
            "kind": self.kind,
            "operator": operator_name(self.operator),
            "line": self.line,
            "node_ids": list(self.node_ids),
            "before": self.before,
            "after": self.after,
            "edits": [edit.to_json() for edit in self.edits],
        }
        if self.constituents:
            record["constituents"] = list(self.constituents)
        if self.groups:
            record["groups"] = [{"line": line, "node_ids": list(node_ids)} for line, node_ids in self.groups]
        return record

    @classmethod
    def from_record(cls, record, source_path):
        operator = record["operator"]
        try:
            operator = OperatorKind.from_name(operator)
        except ValueError:
            pass
        return cls(mutant_id=record["mutant_id"], operator=operator,
                   edits=[Edit.from_json(edit) for edit in record["edits"]],
                   before=record["before"], after=record["after"], line=record["line"],
                   node_ids=list(record["node_ids"]), source_path=source_path,
                   kind=record.get("kind", "first-order"),
                   constituents=list(record.get("constituents", [])),
                   groups=[(group["line"], list(group["node_ids"])) for group in record.get("groups", [])])


def replacement_for(kind, operator_token):
    """
    Replacement token for an operator token under the fixed mapping tables.
    For COD the token may be the whole negated expression ('!a' -> 'a').
    """
    kind = OperatorKind(kind)
    if kind == OperatorKind.COD and operator_token.startswith("!"):
        return operator_token[1:].lstrip()
    table = REPLACEMENTS.get(kind)
    if table is None or operator_token not in table:
        raise Unmappable(f"{kind.value} has no replacement for {operator_token!r}")
    return table[operator_token]


def _padded(content, span, replacement):
    """Add a space where the replacement would fuse with its neighbours into another token."""
    before = content[span[0] - 1] if span[0] > 0 else None
    after = content[span[1]] if span[1] < len(content) else None
    if not replacement:
        if before is not None and after is not None and _is_word(before) and _is_word(after):
            return b" "
        return replacement
    if before is not None and (before in OPERATOR_CHARS and replacement[0] in OPERATOR_CHARS
                               or _is_word(before) and _is_word(replacement[0])):
        replacement = b" " + replacement
    if after is not None and (after in OPERATOR_CHARS and replacement[-1] in OPERATOR_CHARS
                              or _is_word(after) and _is_word(replacement[-1])):
        replacement = replacement + b" "
    return replacement


def _is_word(byte):
    return chr(byte).isalnum() or byte in b"_$"


def _unwrap(tree, node):
    while node is not None and node.ts_type == "parenthesized_expression":
        inner = [child for child in tree.child_nodes(node) if not child.ts_type.endswith("comment")]
        node = inner[0] if inner else None
    return node


def _is_string_operand(tree, node):
    node = _unwrap(tree, node)
    if node is None:
        return False
    if node.ts_type in STRING_LITERALS:
        return True
    if node.ts_type == "binary_expression" and node.operator_token == "+":
        return any(_is_string_operand(tree, tree.field(node, side)) for side in ("left", "right"))
    return False


def _is_null_comparison(tree, node):
    if node.ts_type != "binary_expression" or node.operator_token not in ("==", "!="):
        return False
    operands = [_unwrap(tree, tree.field(node, side)) for side in ("left", "right")]
    return any(operand is not None and operand.ts_type == "null_literal" for operand in operands)


def _candidate(tree, file, operator, node_ids, edit):
    anchor = tree.node(node_ids[-1])
    statement = tree.enclosing(anchor, lambda candidate: candidate.kind == "statement") \
        or tree.smallest_statement_at(edit.start) or anchor
    return Mutant(mutant_id=0, operator=operator, edits=[edit],
                  before=node_text(file, statement),
                  after=statement_after(tree, file, statement, [edit]),
                  line=statement.line, node_ids=list(node_ids), source_path=file.path)


def _token_candidate(tree, file, operator, node):
    replacement = replacement_for(operator, node.operator_token).encode("utf-8")
    edit = Edit(node.operator_span, _padded(file.content, node.operator_span, replacement))
    return _candidate(tree, file, operator, [node.id], edit)


def _collect_classic(tree, file, enabled):
    found = []
    for node in tree.nodes:
        token = node.operator_token
        if token is None:
            continue
        operator = None
        if node.ts_type == "binary_expression":
            operator = BINARY_OPERATOR_KINDS.get(token)
            if operator == OperatorKind.AOR_B and (_is_string_operand(tree, tree.field(node, "left"))
                                                   or _is_string_operand(tree, tree.field(node, "right"))):
                continue
            # identical to RemoveNullCheck; the more specific operator wins
            if operator == OperatorKind.ROR and OperatorKind.REMOVE_NULL_CHECK in enabled \
                    and _is_null_comparison(tree, node):
                continue
        elif node.ts_type == "unary_expression":
            operator = OperatorKind.COD if token == "!" else OperatorKind.AOR_U if token in ("+", "-") else None
        elif node.ts_type == "update_expression":
            operator = OperatorKind.AOR_S
        elif node.ts_type == "assignment_expression":
            operator = OperatorKind.SAOR if token in REPLACEMENTS[OperatorKind.SAOR] else None
        if operator is not None and operator in enabled:
            found.append(_token_candidate(tree, file, operator, node))
    return found


def _return_owner(tree, node):
    return tree.enclosing(node, lambda candidate: candidate.ts_type in (
        "method_declaration", "constructor_declaration", "lambda_expression", "class_body"), include_self=False)


def _nullify_return_values(tree, file):
    found = []
    for statement in tree.of_type("return_statement"):
        values = [child for child in tree.child_nodes(statement) if not child.ts_type.endswith("comment")]
        if not values or values[0].ts_type == "null_literal":
            continue
        owner = _return_owner(tree, statement)
        if owner is None or owner.ts_type != "method_declaration":
            continue
        return_type = tree.field(owner, "type")
        if return_type is None or return_type.ts_type in PRIMITIVE_TYPES:
            continue
        value = values[0]
        found.append(_candidate(tree, file, OperatorKind.NULLIFY_RETURN_VALUE, [value.id],
                                Edit(value.span, b"null")))
    return found


def _reference_parameters(tree, file, method):
    parameters = tree.field(method, "parameters")
    if parameters is None:
        return
    for parameter in tree.child_nodes(parameters):
        modifiers = [child for child in tree.child_nodes(parameter) if child.ts_type == "modifiers"]
        if modifiers and re.search(r"\bfinal\b", node_text(file, modifiers[0])):
            continue
        if parameter.ts_type == "formal_parameter":
            parameter_type = tree.field(parameter, "type")
            name = tree.field(parameter, "name")
            if parameter_type is None or name is None:
                continue
            if parameter_type.ts_type in PRIMITIVE_TYPES and "dimensions" not in parameter.fields:
                continue
            yield parameter, node_text(file, name)
        elif parameter.ts_type == "spread_parameter":
            declarators = [child for child in tree.child_nodes(parameter) if child.ts_type == "variable_declarator"]
            names = [child for declarator in declarators for child in tree.child_nodes(declarator)
                     if child.ts_type == "identifier"]
            if names:
                yield parameter, node_text(file, names[0])


def _nullify_input_variables(tree, file):
    found = []
    for method in tree.of_type("method_declaration", "constructor_declaration"):
        body = tree.field(method, "body")
        if body is None:
            continue
        insert_at = body.start + 1
        statements = [child for child in tree.child_nodes(body) if not child.ts_type.endswith("comment")]
        # this(...) / super(...) must stay the first statement of a constructor
        if statements and statements[0].ts_type == "explicit_constructor_invocation":
            insert_at = statements[0].end
        for parameter, name in _reference_parameters(tree, file, method):
            edit = Edit((insert_at, insert_at), f" {name} = null;".encode("utf-8"))
            found.append(_candidate(tree, file, OperatorKind.NULLIFY_INPUT_VARIABLE, [parameter.id, body.id], edit))
    return found


def _nullify_object_initializations(tree, file):
    found = []
    for creation in tree.of_type("object_creation_expression"):
        parent = tree.node(creation.parent) if creation.parent is not None else None
        if parent is None or parent.ts_type == "expression_statement":
            continue
        # null.method() and null.field do not compile
        if parent.ts_type in ("method_invocation", "field_access") and parent.children \
                and parent.children[0] == creation.id:
            continue
        if parent.ts_type == "variable_declarator":
            declaration = tree.node(parent.parent) if parent.parent is not None else None
            if declaration is not None and declaration.ts_type == "local_variable_declaration":
                declared = [child for child in tree.child_nodes(declaration)
                            if child.ts_type not in ("modifiers", "variable_declarator")]
                if declared and node_text(file, declared[0]) == "var":
                    continue
        edit = Edit(creation.span, _padded(file.content, creation.span, b"null"))
        found.append(_candidate(tree, file, OperatorKind.NULLIFY_OBJECT_INITIALIZATION, [creation.id], edit))
    return found


def _remove_null_checks(tree, file):
    return [_token_candidate(tree, file, OperatorKind.REMOVE_NULL_CHECK, node)
            for node in tree.of_type("binary_expression") if _is_null_comparison(tree, node)]


NULL_COLLECTORS = {
    OperatorKind.NULLIFY_RETURN_VALUE: _nullify_return_values,
    OperatorKind.NULLIFY_INPUT_VARIABLE: _nullify_input_variables,
    OperatorKind.NULLIFY_OBJECT_INITIALIZATION: _nullify_object_initializations,
    OperatorKind.REMOVE_NULL_CHECK: _remove_null_checks,
}


def _numbered(candidates):
    ordered = sorted(candidates, key=lambda mutant: (mutant.edits[0].start, operator_name(mutant.operator),
                                                     mutant.node_ids))
    for mutant_id, mutant in enumerate(ordered, start=1):
        mutant.mutant_id = mutant_id
    return ordered


def _collect_null(tree, file, enabled):
    found = []
    for kind, collect in NULL_COLLECTORS.items():
        if kind in enabled:
            found.extend(collect(tree, file))
    return found


def enumerate_null_mutants(tree, file, enabled=NULL_OPERATORS):
    """All null-type mutants of one file, numbered by span start then operator name."""
    return _numbered(_collect_null(tree, file, set(enabled)))


def enumerate_mutants(tree, file, enabled=CLASSIC_OPERATORS):
    """
    Every first-order mutant of a parsed file under the enabled operators.

    Mutant ids run from 1 in order of edit start, then operator name, so identical
    input always gives the identical list. Files without mutable statements
    (interfaces, abstract classes) give an empty list.
    """
    enabled = set(enabled)
    candidates = _collect_classic(tree, file, enabled) + _collect_null(tree, file, enabled)
    return _numbered([mutant for mutant in candidates if mutant.before != mutant.after])


def operator_counts(mutants):
    counts = Counter(operator_name(mutant.operator) for mutant in mutants)
    return dict(sorted(counts.items()))


def _header_value(text):
    # one header key per line; a '*/' would close the comment early
    return re.sub(r"[ \t]*[\r\n]+[ \t]*", " ", str(text)).replace("*/", "* /")


def format_header(entries):
    lines = [HEADER_TITLE]
    for key, value in entries:
        lines.append(f"{key}: {_header_value(value)}\n".encode("utf-8"))
    lines.append(HEADER_END)
    return b"".join(lines)


def mutant_header(mutant):
    return format_header([
        ("mutant_id", mutant.mutant_id),
        ("operator", operator_name(mutant.operator)),
        ("before", mutant.before),
        ("after", mutant.after),
        ("line", mutant.line),
        ("node_ids", ",".join(str(node_id) for node_id in mutant.node_ids)),
    ])


def render_mutant(file, mutant):
    """Mutant header followed by the spliced source."""
    return mutant_header(mutant) + splice(file, mutant.edits)


def strip_header(data):
    """Remove a leading mutant header, if present."""
    if not data.startswith(HEADER_TITLE):
        return data
    end = data.find(b"\n" + HEADER_END)
    if end == -1:
        return data
    return data[end + 1 + len(HEADER_END):]


def parse_header(data):
    """Header keys of a rendered mutant as a dict of strings ({} when there is no header)."""
    if not data.startswith(HEADER_TITLE):
        return {}
    body = data[len(HEADER_TITLE):len(data) - len(strip_header(data))]
    entries = {}
    for line in body.decode("utf-8", "replace").splitlines():
        key, separator, value = line.partition(": ")
        if separator:
            entries[key] = value
    return entries
