"""
Random selection of the mutants to execute.
"""

import logging
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from src.utils import MutationToolError

logger = logging.getLogger(__name__)

STRATEGIES = ("uniform", "weighted")


class EmptyInput(MutationToolError):
    pass


class MissingWeight(MutationToolError):
    pass


class InvalidSampleSpec(MutationToolError, ValueError):
    pass


@dataclass(frozen=True)
class SampleSpec:
    rate: float = 1.0
    strategy: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.rate <= 1:
            raise InvalidSampleSpec(f"sample rate must lie in (0, 1], got {self.rate}")
        if self.strategy not in STRATEGIES:
            raise InvalidSampleSpec(f"unknown sampling strategy {self.strategy!r}")


def target_size(rate, n):
    """round-half-up(rate * n), computed in decimal so that 0.5 * 5 gives 3."""
    return int((Decimal(str(rate)) * n).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def sample_uniform(mutants, spec, rng=None):
    """
    Draw target_size(rate, n) distinct mutants, each equally likely.

    The subset keeps the input order. Pass rng to share one generator across many
    draws; otherwise a generator seeded with spec.seed is used.
    """
    mutants = list(mutants)
    if not mutants:
        raise EmptyInput("nothing to sample from")
    size = target_size(spec.rate, len(mutants))
    if size >= len(mutants):
        return mutants
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    chosen = np.sort(rng.choice(len(mutants), size=size, replace=False))
    return [mutants[index] for index in chosen]


def sample_weighted(mutants, spec, class_sizes, rng=None):
    """
    Weighted sampling without replacement: each draw picks one of the remaining
    mutants with probability proportional to the LOC of the file it belongs to.

    Parameters:
    - mutants: objects with a source_path attribute.
    - spec: the SampleSpec (rate and seed).
    - class_sizes: mapping from source path to LOC.
    """
    mutants = list(mutants)
    if not mutants:
        raise EmptyInput("nothing to sample from")
    missing = sorted({mutant.source_path for mutant in mutants if mutant.source_path not in class_sizes})
    if missing:
        raise MissingWeight(f"no size recorded for {', '.join(missing)}")
    size = target_size(spec.rate, len(mutants))
    if size >= len(mutants):
        return mutants

    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    weights = np.array([float(class_sizes[mutant.source_path]) for mutant in mutants])
    remaining = np.arange(len(mutants))
    chosen = []
    for _ in range(size):
        cumulative = np.cumsum(weights[remaining])
        if cumulative[-1] <= 0:
            position = int(rng.integers(len(remaining)))
        else:
            position = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
            position = min(position, len(remaining) - 1)
        chosen.append(int(remaining[position]))
        remaining = np.delete(remaining, position)
    return [mutants[index] for index in sorted(chosen)]


def sample(mutants, spec, class_sizes=None, rng=None):
    if spec.strategy == "weighted":
        return sample_weighted(mutants, spec, class_sizes or {}, rng=rng)
    return sample_uniform(mutants, spec, rng=rng)
