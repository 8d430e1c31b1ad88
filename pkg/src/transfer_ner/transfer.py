"""Kernel scoring of source sentences and instance-transfer plans.

Source sentences are scored against the mean vector of the target corpus,
ranked, and then either truncated to the top ``n`` or replicated with a
rank-dependent number of copies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingTable, sentence_matrix
from .errors import ConfigError, ContractError, DomainError, FormatError

# Reference source size the default replication bands were chosen for.
REFERENCE_SOURCE_SIZE = 4818


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    sigma: float = 1.0
    degree: int = 2

    def __post_init__(self):
        if self.kind not in ("rbf", "polynomial"):
            raise ConfigError(f"unknown kernel {self.kind!r}")
        if not self.sigma > 0:
            raise ConfigError("sigma must be positive")
        if int(self.degree) != self.degree or self.degree < 1:
            raise ConfigError("degree must be a positive integer")


def kernel(spec: KernelSpec, x, z) -> float:
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise DomainError(f"vector shapes differ: {x.shape} vs {z.shape}")
    if spec.kind == "rbf":
        d = x - z
        return math.exp(-float(d @ d) / (2.0 * spec.sigma ** 2))
    return (float(x @ z) + 1.0) ** spec.degree


def kernel_scores(spec: KernelSpec, X: np.ndarray, z) -> np.ndarray:
    """Vectorized ``kernel`` of every row of ``X`` against ``z``."""
    z = np.asarray(z, dtype=np.float64)
    if X.shape[1:] != z.shape:
        raise DomainError(f"vector shapes differ: {X.shape[1:]} vs {z.shape}")
    if spec.kind == "rbf":
        d = X - z
        return np.exp(-np.einsum("ij,ij->i", d, d) / (2.0 * spec.sigma ** 2))
    return (X @ z + 1.0) ** spec.degree


@dataclass(frozen=True)
class RankedSource:
    indices: tuple[int, ...]
    scores: tuple[float, ...]

    def __len__(self):
        return len(self.indices)


def rank_source(source, target_mean, table: EmbeddingTable, spec: KernelSpec) -> RankedSource:
    if len(source) == 0:
        raise DomainError("cannot rank an empty source corpus")
    scores = kernel_scores(spec, sentence_matrix(source, table), target_mean)
    order = np.argsort(-scores, kind="stable")
    return RankedSource(tuple(int(i) for i in order), tuple(float(scores[i]) for i in order))


@dataclass(frozen=True)
class ReplicationSchedule:
    """Rank bands ``(upper bound, copies)``; rank r uses the first band with bound >= r."""

    bands: tuple[tuple[float, int], ...] = ((250, 80), (500, 50), (800, 30), (math.inf, 1))

    def __post_init__(self):
        if not self.bands:
            raise ConfigError("replication schedule needs at least one band")
        prev = 0
        for bound, copies in self.bands:
            if not bound > prev:
                raise ConfigError("schedule bounds must be strictly increasing")
            if int(copies) != copies or copies < 1:
                raise ConfigError("copies must be positive integers")
            prev = bound
        if self.bands[-1][0] != math.inf:
            raise ConfigError("last schedule bound must be infinite")

    def copies(self, rank: int) -> int:
        for bound, copies in self.bands:
            if rank <= bound:
                return int(copies)
        raise AssertionError("unreachable: last band is unbounded")

    def scaled(self, n_source: int, reference=REFERENCE_SOURCE_SIZE) -> ReplicationSchedule:
        """Same copies, with finite rank bounds rescaled to a source of ``n_source``."""
        bands = []
        prev = 0
        for bound, copies in self.bands:
            if bound != math.inf:
                bound = max(prev + 1, round(bound * n_source / reference))
            bands.append((bound, copies))
            prev = bound
        return ReplicationSchedule(tuple(bands))

    def to_string(self) -> str:
        return ",".join(f"{'inf' if b == math.inf else int(b)}:{c}" for b, c in self.bands)

    @classmethod
    def parse(cls, text: str) -> ReplicationSchedule:
        """Parse ``"250:80,500:50,800:30,inf:1"``."""
        bands = []
        try:
            for item in text.split(","):
                bound, copies = item.strip().split(":")
                bound = math.inf if bound.strip() in ("inf", "∞") else int(bound)
                bands.append((bound, int(copies)))
        except ValueError:
            raise ConfigError(f"cannot parse replication schedule {text!r}") from None
        return cls(tuple(bands))


@dataclass(frozen=True)
class PlanEntry:
    rank: int
    index: int
    score: float
    copies: int


@dataclass(frozen=True)
class TransferPlan:
    strategy: str
    entries: tuple[PlanEntry, ...]
    n: int | None = None
    schedule: ReplicationSchedule | None = None
    counts: dict = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.strategy not in ("top_n", "replicate"):
            raise ConfigError(f"unknown transfer strategy {self.strategy!r}")
        object.__setattr__(self, "counts", {e.index: e.copies for e in self.entries})

    def __len__(self):
        return len(self.entries)

    @property
    def total(self) -> int:
        return sum(e.copies for e in self.entries)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for e in self.entries:
                fh.write(f"{e.rank}\t{e.index}\t{e.score!r}\t{e.copies}\n")

    @classmethod
    def load(cls, path, strategy="replicate"):
        entries = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                cols = line.rstrip("\n").split("\t")
                if len(cols) != 4:
                    raise FormatError(f"{path}:{lineno}: expected 4 columns")
                entries.append(PlanEntry(int(cols[0]), int(cols[1]), float(cols[2]), int(cols[3])))
        return cls(strategy, tuple(entries))


def plan_top_n(ranked: RankedSource, n: int) -> TransferPlan:
    if n < 1 or n > len(ranked):
        raise ConfigError(f"cannot select top {n} of {len(ranked)} ranked sentences")
    entries = tuple(PlanEntry(r + 1, ranked.indices[r], ranked.scores[r], 1) for r in range(n))
    return TransferPlan("top_n", entries, n=n)


def plan_replicate(ranked: RankedSource, schedule: ReplicationSchedule = ReplicationSchedule()) -> TransferPlan:
    entries = tuple(
        PlanEntry(r + 1, ranked.indices[r], ranked.scores[r], schedule.copies(r + 1))
        for r in range(len(ranked)))
    return TransferPlan("replicate", entries, schedule=schedule)


def materialize(plan: TransferPlan, source) -> list:
    """Expand a plan into training sentences in rank order, copies adjacent."""
    out = []
    for e in plan.entries:
        if not 0 <= e.index < len(source):
            raise ContractError(f"plan index {e.index} out of range for {len(source)} sentences")
        out.extend([source[e.index]] * e.copies)
    return out
