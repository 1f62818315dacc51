"""Income-corruption patterns and train/test splitting.

Only the income column is ever corrupted; covariates stay fully observed.
Pattern names state the *missing* share: MCAR50 masks 50% of incomes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import AlignmentError, DataValidationError, PatternError

MAR_PURE = "MAR_PURE"
MAR_MNAR = "MAR_MNAR"
MNAR_PURE = "MNAR_PURE"

CONDITIONAL_PATTERNS = (MAR_PURE, MAR_MNAR, MNAR_PURE)


def _round_half_up(x: float) -> int:
    # round-half-away-from-zero for the nonnegative share*n products
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class MissingnessMask:
    missing: np.ndarray  # bool, aligned with dataset rows
    pattern: str         # "MCAR50", "MAR_PURE", ...
    seed: int

    def __post_init__(self):
        m = np.asarray(self.missing, dtype=bool)
        m.setflags(write=False)
        object.__setattr__(self, "missing", m)

    @property
    def n_missing(self) -> int:
        return int(self.missing.sum())

    def write_csv(self, path, ids=None):
        ids = np.arange(self.missing.size) if ids is None else ids
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "missing", "pattern", "seed"])
            for i, flag in zip(ids, self.missing):
                w.writerow([int(i), int(flag), self.pattern, self.seed])


def read_mask_csv(path) -> MissingnessMask:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        flags, pattern, seed = [], None, None
        for row in reader:
            flags.append(bool(int(row["missing"])))
            pattern = row["pattern"]
            seed = int(row["seed"])
    if pattern is None:
        raise DataValidationError(f"{path}: empty mask file")
    return MissingnessMask(np.array(flags, dtype=bool), pattern, seed)


def mcar_label(share: float) -> str:
    return f"MCAR{int(round(share * 100)):02d}"


def mcar(ds: Dataset, share: float, seed: int) -> MissingnessMask:
    """Mask exactly round(share*n) incomes uniformly at random."""
    if not 0.0 <= share <= 1.0:
        raise DataValidationError(f"share must be in [0,1], got {share}")
    n = ds.n
    k = _round_half_up(share * n)
    rng = np.random.default_rng(seed)
    missing = np.zeros(n, dtype=bool)
    if k:
        missing[rng.choice(n, size=k, replace=False)] = True
    return MissingnessMask(missing, mcar_label(share), seed)


def _eligible_rows(ds: Dataset, pattern: str) -> np.ndarray:
    if pattern == MAR_PURE:
        return np.flatnonzero(ds.column("sect_sec") == 1)
    if pattern == MAR_MNAR:
        return np.flatnonzero(ds.column("hhsize") < 5)
    if pattern == MNAR_PURE:
        return np.flatnonzero(ds.income_pc > ds.income_pc.mean())
    raise PatternError(f"unknown conditional pattern {pattern!r}")


def conditional_mask(ds: Dataset, pattern: str, target_share: float,
                     seed: int) -> MissingnessMask:
    """Mask up to round(target_share*n) rows drawn from the pattern's
    eligible subgroup; a smaller subgroup is masked in full."""
    if not 0.0 < target_share < 1.0:
        raise DataValidationError(
            f"target_share must be in (0,1), got {target_share}")
    eligible = _eligible_rows(ds, pattern)
    if eligible.size == 0:
        raise PatternError(f"{pattern}: eligible set is empty")
    k = min(_round_half_up(target_share * ds.n), eligible.size)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(eligible, size=k, replace=False)
    missing = np.zeros(ds.n, dtype=bool)
    missing[chosen] = True
    return MissingnessMask(missing, pattern, seed)


def split(ds: Dataset, mask: MissingnessMask):
    """(train, test) row views: observed incomes vs masked incomes."""
    if mask.missing.size != ds.n:
        raise AlignmentError(
            f"mask length {mask.missing.size} != dataset size {ds.n}")
    train = ds.subset(np.flatnonzero(~mask.missing))
    test = ds.subset(np.flatnonzero(mask.missing))
    return train, test
