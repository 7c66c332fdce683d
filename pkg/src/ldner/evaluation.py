"""
Entity and surface-form F1 in the W-NUT style.

Entity scores count exact ``(sentence, start, end, category)`` matches.
Surface scores compare the sets of unique ``(surface string, category)``
pairs across the whole corpus, so recognising the same mention twice
earns nothing extra.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import BioTag, Dataset, EntitySpan, extract_spans
from .errors import AlignmentError


@dataclass(frozen=True)
class PRF:
    tp: int
    n_pred: int
    n_gold: int

    @property
    def precision(self) -> float:
        return self.tp / self.n_pred if self.n_pred else 0.0

    @property
    def recall(self) -> float:
        return self.tp / self.n_gold if self.n_gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass(frozen=True)
class ScoreReport:
    categories: tuple[str, ...]
    entity: dict[str, PRF]
    surface: dict[str, PRF]
    entity_total: PRF
    surface_total: PRF

    @property
    def per_category(self) -> dict[str, tuple[PRF, PRF]]:
        return {c: (self.entity[c], self.surface[c]) for c in self.categories}

    @property
    def total(self) -> tuple[PRF, PRF]:
        return self.entity_total, self.surface_total


def _check_alignment(gold: Dataset, pred_tags: Sequence[Sequence[BioTag]]):
    if len(pred_tags) != len(gold):
        raise AlignmentError(
            f"gold has {len(gold)} sentences, prediction has {len(pred_tags)}",
        )
    for i, (sent, tags) in enumerate(zip(gold, pred_tags)):
        if len(sent) != len(tags):
            raise AlignmentError(f"sentence {i}: {len(sent)} gold tokens vs {len(tags)} predicted")


def _spans(gold: Dataset, pred_tags):
    g, p = [], []
    for i, (sent, tags) in enumerate(zip(gold, pred_tags)):
        g += extract_spans(sent.tags, i, sent.tokens)
        p += extract_spans(list(tags), i, sent.tokens)
    return g, p


def _category_prf(gold_items, pred_items, category_of, categories):
    per = {}
    for c in categories:
        gs = {x for x in gold_items if category_of(x) == c}
        ps = {x for x in pred_items if category_of(x) == c}
        per[c] = PRF(len(gs & ps), len(ps), len(gs))
    return per


def _total(per: dict[str, PRF]) -> PRF:
    return PRF(sum(v.tp for v in per.values()),
               sum(v.n_pred for v in per.values()),
               sum(v.n_gold for v in per.values()))


def _categories(gold: Dataset, extra_spans: Sequence[EntitySpan]) -> tuple[str, ...]:
    cats = list(gold.tagset)
    for s in extra_spans:
        if s.category not in cats:
            cats.append(s.category)
    return tuple(cats)


def entity_f1(gold: Dataset, pred_tags) -> tuple[dict[str, PRF], PRF]:
    _check_alignment(gold, pred_tags)
    g, p = _spans(gold, pred_tags)
    key = lambda s: (s.sentence_id, s.start, s.end, s.category)  # noqa: E731
    per = _category_prf({key(s) for s in g}, {key(s) for s in p}, lambda k: k[3],
                        _categories(gold, g + p))
    return per, _total(per)


def surface_f1(gold: Dataset, pred_tags, case_sensitive: bool = True) -> tuple[dict[str, PRF], PRF]:
    _check_alignment(gold, pred_tags)
    g, p = _spans(gold, pred_tags)
    fold = (lambda s: s) if case_sensitive else str.lower
    per = _category_prf({(fold(s.surface), s.category) for s in g},
                        {(fold(s.surface), s.category) for s in p},
                        lambda k: k[1], _categories(gold, g + p))
    return per, _total(per)


def score(gold: Dataset, pred_tags, case_sensitive: bool = True) -> ScoreReport:
    """Entity and surface scores, per category in tag-set order, plus micro totals."""
    ent, ent_total = entity_f1(gold, pred_tags)
    surf, surf_total = surface_f1(gold, pred_tags, case_sensitive)
    return ScoreReport(tuple(ent), ent, surf, ent_total, surf_total)


def render_report(r: ScoreReport) -> str:
    """Fixed-width table of percentages, one row per category and a Total row."""
    head = f"{'Category':<16}{'Ent.P':>8}{'Ent.R':>8}{'Ent.F1':>8}{'Surf.P':>8}{'Surf.R':>8}{'Surf.F1':>8}"
    lines = [head, "-" * len(head)]

    def row(name, e, s):
        cells = (e.precision, e.recall, e.f1, s.precision, s.recall, s.f1)
        return f"{name:<16}" + "".join(f"{100 * v:>8.2f}" for v in cells)

    for c in r.categories:
        lines.append(row(c, r.entity[c], r.surface[c]))
    lines.append("-" * len(head))
    lines.append(row("Total", r.entity_total, r.surface_total))
    return "\n".join(lines) + "\n"


def report_items(r: ScoreReport) -> dict[str, float | int]:
    out = {}
    rows = [(c, r.entity[c], r.surface[c]) for c in r.categories]
    rows.append(("total", r.entity_total, r.surface_total))
    for name, e, s in rows:
        for metric, prf in (("entity", e), ("surface", s)):
            out[f"{name}.{metric}.precision"] = prf.precision
            out[f"{name}.{metric}.recall"] = prf.recall
            out[f"{name}.{metric}.f1"] = prf.f1
            out[f"{name}.{metric}.tp"] = prf.tp
            out[f"{name}.{metric}.n_pred"] = prf.n_pred
            out[f"{name}.{metric}.n_gold"] = prf.n_gold
    return out


def format_report_kv(r: ScoreReport) -> str:
    """Machine-readable ``category.metric.field = value`` lines."""
    lines = []
    for k, v in report_items(r).items():
        lines.append(f"{k} = {v:.6f}" if isinstance(v, float) else f"{k} = {v}")
    return "\n".join(lines) + "\n"


def write_report_kv(r: ScoreReport, path: str | Path):
    Path(path).write_text(format_report_kv(r), encoding="utf-8")
