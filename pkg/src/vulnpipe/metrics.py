"""Multiclass evaluation: one-vs-rest confusion counts, macro and weighted
FPR/FNR/F1, and the two-detector maximum-probability fusion rule.

Class 0 ("not vulnerable") is excluded from the class set L; mistakes
into or out of it surface as FP/FN of the involved nonzero class. Per-class
rates with a zero denominator are reported as 0 and flagged.
"""
from __future__ import annotations

from dataclasses import dataclass, field


class LengthMismatch(ValueError):
    pass


class LabelOutOfRange(ValueError):
    pass


class AllClassesEmpty(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class SampleIdMismatch(ValueError):
    pass


@dataclass
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def support(self) -> int:  # X_l: samples whose true label is l
        return self.tp + self.fn

    @property
    def precision(self) -> float:
        denom = self.tp + self.fp
        return self.tp / denom if denom else 0.0

    @property
    def recall(self) -> float:
        denom = self.tp + self.fn
        return self.tp / denom if denom else 0.0

    @property
    def fpr(self) -> float:
        denom = self.fp + self.tn
        return self.fp / denom if denom else 0.0

    @property
    def fnr(self) -> float:
        denom = self.tp + self.fn
        return self.fn / denom if denom else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2.0 * p * r / (p + r) if (p + r) else 0.0

    @property
    def degenerate(self) -> bool:
        return self.tp + self.fn == 0 or self.fp + self.tn == 0 or self.tp + self.fp == 0


@dataclass
class ClassCounts:
    labels: list[int]
    per_class: dict[int, Counts]
    total: int


@dataclass
class PerClassMetrics:
    fpr: float
    fnr: float
    f1: float
    support: int
    degenerate: bool


@dataclass
class MetricsReport:
    m_fpr: float
    m_fnr: float
    m_f1: float
    w_fpr: float
    w_fnr: float
    w_f1: float
    per_class: dict[int, PerClassMetrics] = field(default_factory=dict)


def confusion(true_labels, predicted_labels, labels) -> ClassCounts:
    """One-vs-rest counts for every class l in ``labels`` (0 excluded by the
    caller's choice of L)."""
    true_labels = list(true_labels)
    predicted_labels = list(predicted_labels)
    if len(true_labels) != len(predicted_labels):
        raise LengthMismatch(
            f"{len(true_labels)} true labels vs {len(predicted_labels)} predictions"
        )
    labels = sorted(set(int(l) for l in labels))
    if not labels:
        raise ValueError("label set L is empty")
    top = max(labels)
    for value in true_labels + predicted_labels:
        if not 0 <= int(value) <= top:
            raise LabelOutOfRange(str(value))
    per_class: dict[int, Counts] = {}
    total = len(true_labels)
    for l in labels:
        c = Counts()
        for t, p in zip(true_labels, predicted_labels):
            if t == l and p == l:
                c.tp += 1
            elif t != l and p == l:
                c.fp += 1
            elif t == l and p != l:
                c.fn += 1
            else:
                c.tn += 1
        per_class[l] = c
    return ClassCounts(labels=labels, per_class=per_class, total=total)


def macro_metrics(counts: ClassCounts) -> tuple[float, float, float]:
    """Unweighted means over L of per-class FPR, FNR, and F1."""
    n = len(counts.labels)
    m_fpr = sum(counts.per_class[l].fpr for l in counts.labels) / n
    m_fnr = sum(counts.per_class[l].fnr for l in counts.labels) / n
    m_f1 = sum(counts.per_class[l].f1 for l in counts.labels) / n
    return m_fpr, m_fnr, m_f1


def weighted_metrics(counts: ClassCounts) -> tuple[float, float, float]:
    """Means weighted by class prevalence X_l / sum(X_l)."""
    total_support = sum(counts.per_class[l].support for l in counts.labels)
    if total_support == 0:
        raise AllClassesEmpty("no sample carries a label in L")
    w_fpr = w_fnr = w_f1 = 0.0
    for l in counts.labels:
        c = counts.per_class[l]
        weight = c.support / total_support
        w_fpr += weight * c.fpr
        w_fnr += weight * c.fnr
        w_f1 += weight * c.f1
    return w_fpr, w_fnr, w_f1


def compute_report(true_labels, predicted_labels, labels) -> MetricsReport:
    counts = confusion(true_labels, predicted_labels, labels)
    m_fpr, m_fnr, m_f1 = macro_metrics(counts)
    w_fpr, w_fnr, w_f1 = weighted_metrics(counts)
    per_class = {
        l: PerClassMetrics(
            fpr=c.fpr, fnr=c.fnr, f1=c.f1, support=c.support, degenerate=c.degenerate
        )
        for l, c in counts.per_class.items()
    }
    return MetricsReport(m_fpr, m_fnr, m_f1, w_fpr, w_fnr, w_f1, per_class)


def validate_distribution(probabilities) -> list[float]:
    probs = [float(p) for p in probabilities]
    if any(p < 0 for p in probs):
        raise ValueError("negative probability")
    if abs(sum(probs) - 1.0) > 1e-6:
        raise ValueError(f"probabilities sum to {sum(probs)}, not 1")
    return probs


def fuse_predictions(p, q) -> int:
    """Label of the single largest entry among both distributions' entries.

    Exact ties across detectors or labels resolve to the lower label, which
    makes the rule symmetric in (p, q).
    """
    p = list(map(float, p))
    q = list(map(float, q))
    if len(p) != len(q):
        raise DimensionMismatch(f"{len(p)} vs {len(q)} entries")
    best_label, best_prob = 0, -1.0
    for label in range(len(p)):
        prob = max(p[label], q[label])
        if prob > best_prob:
            best_prob = prob
            best_label = label
    return best_label


def render_report(report: MetricsReport, per_class: bool = True) -> str:
    lines = [
        "metric      value",
        f"M_FPR    {report.m_fpr * 100:8.2f}%",
        f"M_FNR    {report.m_fnr * 100:8.2f}%",
        f"M_F1     {report.m_f1 * 100:8.2f}%",
        f"W_FPR    {report.w_fpr * 100:8.2f}%",
        f"W_FNR    {report.w_fnr * 100:8.2f}%",
        f"W_F1     {report.w_f1 * 100:8.2f}%",
    ]
    if per_class:
        lines.append("")
        lines.append("label  support     FPR      FNR       F1")
        for l, m in sorted(report.per_class.items()):
            flag = " *" if m.degenerate else ""
            lines.append(
                f"{l:5d}  {m.support:7d}  {m.fpr * 100:6.2f}%  {m.fnr * 100:6.2f}%  "
                f"{m.f1 * 100:6.2f}%{flag}"
            )
        if any(m.degenerate for m in report.per_class.values()):
            lines.append("(* zero-denominator class: rates reported as 0)")
    return "\n".join(lines) + "\n"


@dataclass
class PredictionRecord:
    sample_id: str
    true_label: int
    predicted_label: int | None = None
    distribution: list[float] | None = None


def read_prediction_file(path) -> list[PredictionRecord]:
    """Tab-separated: `sampleId trueLabel predictedLabel` or
    `sampleId trueLabel p_0 .. p_m` (distribution form)."""
    out: list[PredictionRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            entry = raw.rstrip("\n")
            if not entry.strip() or entry.lstrip().startswith("#"):
                continue
            parts = entry.split("\t")
            if len(parts) < 3:
                raise ValueError(f"{path}:{lineno}: expected at least 3 fields")
            sample_id, true_text = parts[0], parts[1]
            if len(parts) == 3:
                out.append(
                    PredictionRecord(sample_id, int(true_text), predicted_label=int(parts[2]))
                )
            else:
                dist = validate_distribution(parts[2:])
                out.append(PredictionRecord(sample_id, int(true_text), distribution=dist))
    return out


def write_prediction_file(path, records: list[PredictionRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            if rec.distribution is not None:
                tail = "\t".join(repr(float(p)) for p in rec.distribution)
            else:
                tail = str(rec.predicted_label)
            fh.write(f"{rec.sample_id}\t{rec.true_label}\t{tail}\n")


def argmax_label(distribution) -> int:
    best, best_p = 0, -1.0
    for i, p in enumerate(distribution):
        if p > best_p:
            best, best_p = i, p
    return best
