"""
Second-order mutants: pairs of first-order mutants of one file whose edits do not overlap.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.java_front import OverlappingEdits, splice
from src.mutation_engine import Mutant, format_header, operator_name
from src.utils import MutationToolError

logger = logging.getLogger(__name__)


class IncompatibleMutants(MutationToolError, ValueError):
    pass


@dataclass
class PairingResult:
    mutants: list = field(default_factory=list)
    leftovers: list = field(default_factory=list)


def _spans_disjoint(first, second):
    for a in first.edits:
        for b in second.edits:
            if a.span == b.span or (a.start < b.end and b.start < a.end):
                return False
    return True


def combine(first, second, mutant_id):
    """Merge two first-order mutants of the same file into one higher-order mutant."""
    if first.source_path != second.source_path:
        raise IncompatibleMutants(f"{first.source_path} and {second.source_path} are different files")
    if not _spans_disjoint(first, second):
        raise OverlappingEdits(f"mutants {first.mutant_id} and {second.mutant_id} edit overlapping spans")
    first, second = sorted((first, second), key=lambda mutant: mutant.edits[0].start)
    return Mutant(
        mutant_id=mutant_id,
        operator=f"{operator_name(first.operator)},{operator_name(second.operator)}",
        edits=sorted(first.edits + second.edits, key=lambda edit: edit.start),
        before=f"{first.before} | {second.before}",
        after=f"{first.after} | {second.after}",
        line=first.line,
        node_ids=list(first.node_ids) + list(second.node_ids),
        source_path=first.source_path,
        kind="higher-order",
        constituents=[first.mutant_id, second.mutant_id],
        groups=[(first.line, list(first.node_ids)), (second.line, list(second.node_ids))],
    )


def pair_mutants(mutants, seed=0):
    """
    Shuffle the first-order mutants of one file with the given seed and greedily pair
    each with the first later mutant whose edits are disjoint from its own.

    Mutants that find no partner are returned as leftovers and never appear in a pair.
    Ids are 'ho_1', 'ho_2', ... in pairing order.
    """
    rng = np.random.default_rng(seed)
    order = [mutants[index] for index in rng.permutation(len(mutants))]
    paired = set()
    result = PairingResult()
    for position, first in enumerate(order):
        if id(first) in paired:
            continue
        partner = next((second for second in order[position + 1:]
                        if id(second) not in paired and _spans_disjoint(first, second)), None)
        if partner is None:
            result.leftovers.append(first)
            continue
        paired.update((id(first), id(partner)))
        result.mutants.append(combine(first, partner, f"ho_{len(result.mutants) + 1}"))
    if result.leftovers:
        logger.debug("%d mutant(s) left unpaired", len(result.leftovers))
    return result


def higher_order_header(mutant):
    return format_header([
        ("mutant_id", mutant.mutant_id),
        ("constituents", ",".join(str(constituent) for constituent in mutant.constituents)),
        ("operator", operator_name(mutant.operator)),
        ("before", mutant.before),
        ("after", mutant.after),
        ("line", " | ".join(str(line) for line, _ in mutant.groups)),
        ("node_ids", " | ".join(",".join(str(node_id) for node_id in node_ids) for _, node_ids in mutant.groups)),
    ])


def render_higher_order(file, mutant):
    if len(mutant.constituents) != 2:
        raise IncompatibleMutants(f"higher-order mutant {mutant.mutant_id} needs exactly two constituents")
    return higher_order_header(mutant) + splice(file, mutant.edits)
