"""Entity-level precision, recall and F1 over IOB chunks.

A predicted chunk counts only when both its type and its span match a gold
chunk exactly. Scores are micro-averaged over all chunks; the per-type
breakdown is reported alongside.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .corpus import TagSet, is_iob_valid
from .errors import ContractError, DomainError


@dataclass(frozen=True)
class Chunk:
    type: str
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"bad chunk span [{self.start}, {self.end})")


def extract_chunks(tags, tagset: TagSet) -> list[Chunk]:
    if not is_iob_valid(tags, tagset):
        raise ContractError("tag sequence is not IOB-valid; run repair_iob first")
    chunks = []
    start, etype = None, None
    for pos, t in enumerate(tags):
        prefix, ttype = tagset.parse(t)
        if prefix == "I":
            continue
        if start is not None:
            chunks.append(Chunk(etype, start, pos))
            start = None
        if prefix == "B":
            start, etype = pos, ttype
    if start is not None:
        chunks.append(Chunk(etype, start, len(tags)))
    return chunks


def _ratio(num, den):
    return num / den if den else 0.0


def f1_score(p, r):
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    n_gold: int
    n_predicted: int
    n_correct: int
    n_tokens: int
    per_type: dict = field(default_factory=dict)  # type -> (P, R, F1, gold, predicted, correct)

    def as_dict(self):
        d = {
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "accuracy": self.accuracy, "gold_chunks": self.n_gold,
            "predicted_chunks": self.n_predicted, "correct_chunks": self.n_correct,
            "tokens": self.n_tokens,
        }
        for etype, (p, r, f, g, pr, c) in sorted(self.per_type.items()):
            d.update({f"{etype}.precision": p, f"{etype}.recall": r, f"{etype}.f1": f,
                      f"{etype}.gold": g, f"{etype}.predicted": pr, f"{etype}.correct": c})
        return d

    def to_keyvalue(self) -> str:
        lines = []
        for k, v in self.as_dict().items():
            lines.append(f"{k} = {v:.6f}" if isinstance(v, float) else f"{k} = {v}")
        return "\n".join(lines) + "\n"

    def to_table(self, sep="\t") -> str:
        rows = [("type", "precision", "recall", "f1", "gold", "predicted", "correct")]
        for etype, (p, r, f, g, pr, c) in sorted(self.per_type.items()):
            rows.append((etype, f"{p:.6f}", f"{r:.6f}", f"{f:.6f}", str(g), str(pr), str(c)))
        rows.append(("overall", f"{self.precision:.6f}", f"{self.recall:.6f}", f"{self.f1:.6f}",
                     str(self.n_gold), str(self.n_predicted), str(self.n_correct)))
        return "\n".join(sep.join(r) for r in rows) + "\n"


def score(gold, predicted, tagset: TagSet) -> EvalReport:
    """Score predicted tag sequences against gold sentences (or gold tag sequences)."""
    if len(gold) != len(predicted):
        raise DomainError(f"{len(gold)} gold sentences but {len(predicted)} predictions")
    gold_n, pred_n, corr_n = Counter(), Counter(), Counter()
    tokens = correct_tokens = 0
    for g, p in zip(gold, predicted):
        g_tags = list(getattr(g, "tags", g))
        p_tags = list(p)
        if len(g_tags) != len(p_tags):
            raise DomainError(f"sentence of length {len(g_tags)} got {len(p_tags)} predicted tags")
        tokens += len(g_tags)
        correct_tokens += sum(1 for a, b in zip(g_tags, p_tags) if a == b)
        g_chunks = set(extract_chunks(g_tags, tagset))
        p_chunks = set(extract_chunks(p_tags, tagset))
        for c in g_chunks:
            gold_n[c.type] += 1
        for c in p_chunks:
            pred_n[c.type] += 1
        for c in g_chunks & p_chunks:
            corr_n[c.type] += 1
    per_type = {}
    for etype in sorted(set(gold_n) | set(pred_n)):
        p = _ratio(corr_n[etype], pred_n[etype])
        r = _ratio(corr_n[etype], gold_n[etype])
        per_type[etype] = (p, r, f1_score(p, r), gold_n[etype], pred_n[etype], corr_n[etype])
    n_gold, n_pred, n_corr = sum(gold_n.values()), sum(pred_n.values()), sum(corr_n.values())
    precision, recall = _ratio(n_corr, n_pred), _ratio(n_corr, n_gold)
    return EvalReport(precision, recall, f1_score(precision, recall), _ratio(correct_tokens, tokens),
                      n_gold, n_pred, n_corr, tokens, per_type)


def evaluate_tagger(tagger, sentences, tagset: TagSet) -> EvalReport:
    """Run ``tagger.tag`` over ``sentences`` and score against their gold tags."""
    return score(sentences, [tagger.tag(s)[0] for s in sentences], tagset)
