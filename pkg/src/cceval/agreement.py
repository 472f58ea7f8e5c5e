"""Model-human agreement statistics.

Vectors are either mappings ``condition key -> value`` (aligned by key) or
plain sequences (aligned by position).  Missing values are NaN and every
statistic uses pairwise-complete deletion.

Moment conventions: concordance (CCC) uses population (``n``) moments as in
Lin's definition; the human standard deviation that normalises the RMSE
uses the sample (``n - 1``) divisor; the coefficient of variation uses the
population divisor.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateInputs,
    InsufficientData,
    MismatchedKeys,
    NoOverlap,
    ZeroCeiling,
    ZeroMean,
    ZeroSd,
    ZeroVariance,
)


def _align(x, y, *, require_same_keys=False):
    if isinstance(x, Mapping) or isinstance(y, Mapping):
        if not (isinstance(x, Mapping) and isinstance(y, Mapping)):
            raise MismatchedKeys("cannot align a keyed vector with an unkeyed one")
        if require_same_keys and set(x) != set(y):
            raise MismatchedKeys("vectors have different condition keys")
        keys = [k for k in x if k in y]
        if not keys:
            raise NoOverlap("vectors share no condition keys")
        a = np.array([x[k] for k in keys], dtype=np.float64)
        b = np.array([y[k] for k in keys], dtype=np.float64)
    else:
        a = np.asarray(x, dtype=np.float64).reshape(-1)
        b = np.asarray(y, dtype=np.float64).reshape(-1)
        if a.shape != b.shape:
            raise MismatchedKeys(f"length {a.size} vs {b.size}")
    ok = np.isfinite(a) & np.isfinite(b)
    return a[ok], b[ok]


def pearson(x, y) -> float:
    a, b = _align(x, y)
    if a.size < 2:
        raise InsufficientData("Pearson correlation needs at least two pairs")
    da = a - a.mean()
    db = b - b.mean()
    sa = math.sqrt(float(np.dot(da, da)))
    sb = math.sqrt(float(np.dot(db, db)))
    if sa == 0 or sb == 0:
        raise ZeroVariance("a vector has zero variance")
    r = float(np.dot(da, db)) / (sa * sb)
    return max(-1.0, min(1.0, r))


def bias(model, human_mean) -> float:
    """Mean of ``model - human_mean``."""
    a, b = _align(model, human_mean, require_same_keys=True)
    if a.size == 0:
        raise InsufficientData("no complete pairs")
    return float(np.mean(a - b))


def normalized_error(model, human_mean, human_sd: float) -> float:
    """RMSE between model and human mean divided by ``human_sd``."""
    if not human_sd > 0:
        raise ZeroSd(f"human standard deviation must be positive, got {human_sd}")
    a, b = _align(model, human_mean, require_same_keys=True)
    if a.size == 0:
        raise InsufficientData("no complete pairs")
    return math.sqrt(float(np.mean((a - b) ** 2))) / human_sd


def lin_ccc(x, y) -> float:
    """Lin's concordance correlation coefficient with population moments."""
    a, b = _align(x, y)
    if a.size < 2:
        raise InsufficientData("CCC needs at least two pairs")
    ma, mb = a.mean(), b.mean()
    va = float(np.mean((a - ma) ** 2))
    vb = float(np.mean((b - mb) ** 2))
    cov = float(np.mean((a - ma) * (b - mb)))
    denom = va + vb + (ma - mb) ** 2
    if denom == 0:
        raise DegenerateInputs("both vectors constant and equal; CCC undefined")
    return 2.0 * cov / denom


@dataclass
class ObserverMatrix:
    """Subjects x conditions grid of values; NaN marks a missing cell."""

    subjects: list
    conditions: list
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.subjects), len(self.conditions)):
            raise ValueError("values shape does not match subjects x conditions")

    @classmethod
    def from_dict(cls, data: Mapping[str, Mapping]) -> "ObserverMatrix":
        subjects = list(data)
        conditions = []
        seen = set()
        for s in subjects:
            for k in data[s]:
                if k not in seen:
                    seen.add(k)
                    conditions.append(k)
        vals = np.full((len(subjects), len(conditions)), np.nan)
        col = {k: j for j, k in enumerate(conditions)}
        for i, s in enumerate(subjects):
            for k, v in data[s].items():
                vals[i, col[k]] = v
        return cls(subjects, conditions, vals)

    def row(self, subject) -> dict:
        i = self.subjects.index(subject)
        return dict(zip(self.conditions, self.values[i]))

    def select(self, conditions: Sequence) -> "ObserverMatrix":
        idx = [self.conditions.index(c) for c in conditions]
        return ObserverMatrix(list(self.subjects), list(conditions), self.values[:, idx])

    def mean_vector(self) -> dict:
        """Per-condition mean over the subjects who observed it."""
        out = {}
        for j, k in enumerate(self.conditions):
            col = self.values[:, j]
            col = col[np.isfinite(col)]
            if col.size:
                out[k] = float(col.mean())
        return out

    def pooled_sd(self) -> float:
        """Sample standard deviation of every observed value."""
        v = self.values[np.isfinite(self.values)]
        if v.size < 2:
            raise InsufficientData("need at least two human values for a standard deviation")
        return float(np.std(v, ddof=1))


def _others_mean(m: ObserverMatrix, i: int) -> np.ndarray:
    rest = np.delete(m.values, i, axis=0)
    cnt = np.sum(np.isfinite(rest), axis=0)
    tot = np.nansum(rest, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(cnt > 0, tot / np.maximum(cnt, 1), np.nan)
    # columns where everyone else agrees get that value exactly
    if rest.shape[0]:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN columns
            lo, hi = np.nanmin(rest, axis=0), np.nanmax(rest, axis=0)
        mean = np.where((cnt > 0) & (lo == hi), lo, mean)
    return mean


def loo_ceiling(humans: ObserverMatrix) -> float:
    """Mean over subjects of CCC(subject, mean of the remaining subjects)."""
    if len(humans.subjects) < 2:
        raise InsufficientData("leave-one-out ceiling needs at least two subjects")
    cccs = []
    for i in range(len(humans.subjects)):
        cccs.append(lin_ccc(humans.values[i], _others_mean(humans, i)))
    return float(np.mean(cccs))


def nccc(model, humans: ObserverMatrix, ceiling: float | None = None) -> float:
    """Model-human CCC divided by the leave-one-out human ceiling."""
    if ceiling is None:
        ceiling = loo_ceiling(humans)
    if not ceiling > 0:
        raise ZeroCeiling(f"human ceiling is {ceiling}; ncCCC undefined")
    return lin_ccc(_keyed(model, humans.conditions), humans.mean_vector()) / ceiling


def _keyed(v, conditions):
    if isinstance(v, Mapping):
        return v
    return dict(zip(conditions, np.asarray(v, dtype=np.float64)))


@dataclass(frozen=True)
class SubjectVariability:
    mean_pearson: float
    cv: float


def observer_variability(humans: ObserverMatrix) -> dict:
    """Per subject: mean Pearson r against each other subject, and sd / mean.

    Pairs without variance contribute nothing; a subject with no usable
    pair gets ``nan`` for ``mean_pearson``.
    """
    n = len(humans.subjects)
    if n < 2 or len(humans.conditions) < 2:
        raise InsufficientData("need at least two subjects and two conditions")
    out = {}
    for i, s in enumerate(humans.subjects):
        rs = []
        for j in range(n):
            if j == i:
                continue
            try:
                rs.append(pearson(humans.values[i], humans.values[j]))
            except (ZeroVariance, InsufficientData):
                continue
        v = humans.values[i]
        v = v[np.isfinite(v)]
        mean = float(v.mean()) if v.size else math.nan
        if mean == 0:
            raise ZeroMean(f"subject {s} has zero mean; coefficient of variation undefined")
        cv = float(np.std(v)) / mean
        out[s] = SubjectVariability(float(np.mean(rs)) if rs else math.nan, cv)
    return out


def bootstrap_mean_ci(per_subject, n_resamples: int = 10_000, seed: int = 0, level: float = 0.95):
    """Mean of per-subject values with a percentile bootstrap interval
    (resampling subjects with replacement)."""
    v = np.asarray(list(per_subject.values()) if isinstance(per_subject, Mapping) else per_subject,
                   dtype=np.float64)
    v = v[np.isfinite(v)]
    if v.size == 0:
        raise InsufficientData("no values to bootstrap")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    idx = rng.integers(0, v.size, size=(n_resamples, v.size))
    means = v[idx].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    return float(v.mean()), float(lo), float(hi)


@dataclass
class Metrics:
    accuracy: float = math.nan
    bias: float = math.nan
    normalized_error: float = math.nan
    ccc: float = math.nan
    nccc: float = math.nan
    ceiling: float = math.nan
    n: int = 0

    def as_dict(self) -> dict:
        return {k: _clean(getattr(self, k)) for k in
                ("accuracy", "bias", "normalized_error", "ccc", "nccc", "ceiling", "n")}


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _safe(fn, *args):
    try:
        return fn(*args)
    except (ZeroVariance, InsufficientData, DegenerateInputs, ZeroSd, ZeroCeiling, NoOverlap):
        return math.nan


def agreement_metrics(model: Mapping, humans: ObserverMatrix) -> Metrics:
    """All agreement statistics of one model vector against a human matrix.

    Statistics that are undefined for the data (zero variance, too few
    pairs) come back as NaN rather than raising.
    """
    hm = humans.mean_vector()
    keys = [k for k in hm if k in model and np.isfinite(model[k])]
    if not keys:
        raise NoOverlap("model and humans share no condition keys")
    mv = {k: float(model[k]) for k in keys}
    hv = {k: hm[k] for k in keys}
    sub = humans.select(keys)
    ceiling = _safe(loo_ceiling, sub)
    sd = _safe(ObserverMatrix.pooled_sd, sub)
    ccc_v = _safe(lin_ccc, mv, hv)
    return Metrics(
        accuracy=_safe(pearson, mv, hv),
        bias=bias(mv, hv),
        normalized_error=_safe(normalized_error, mv, hv, sd),
        ccc=ccc_v,
        nccc=ccc_v / ceiling if ceiling > 0 else math.nan,
        ceiling=ceiling,
        n=len(keys),
    )


@dataclass
class AgreementReport:
    """Per model, per scope (all/indoor/outdoor), per quantity (cci/delta_cci)."""

    metrics: dict = field(default_factory=dict)
    delta_summary: dict = field(default_factory=dict)
    variability: dict = field(default_factory=dict)

    def add(self, model: str, scope: str, quantity: str, m: Metrics):
        self.metrics.setdefault(model, {}).setdefault(scope, {})[quantity] = m

    def get(self, model: str, scope: str = "all", quantity: str = "cci") -> Metrics:
        return self.metrics[model][scope][quantity]

    def to_json_dict(self) -> dict:
        return {
            "metrics": {
                model: {scope: {q: m.as_dict() for q, m in qs.items()} for scope, qs in scopes.items()}
                for model, scopes in self.metrics.items()
            },
            "delta_summary": self.delta_summary,
            "variability": self.variability,
        }

    def to_text(self) -> str:
        """Aligned table: one block per quantity, rows scope x metric,
        columns models."""
        models = list(self.metrics)
        lines = []
        rows = (("Accuracy", "accuracy"), ("N. Error", "normalized_error"), ("Bias", "bias"),
                ("CCC", "ccc"), ("ncCCC", "nccc"))
        for quantity, title in (("cci", "CCI"), ("delta_cci", "Delta CCI")):
            scopes = [s for s in ("all", "indoor", "outdoor")
                      if any(quantity in self.metrics[m].get(s, {}) for m in models)]
            if not scopes:
                continue
            lines.append(f"{title}")
            lines.append(f"{'':<8}{'':<10}" + "".join(f"{m:>14}" for m in models))
            for scope in scopes:
                for i, (label, attr) in enumerate(rows):
                    head = scope.capitalize() if i == 0 else ""
                    cells = []
                    for m in models:
                        met = self.metrics[m].get(scope, {}).get(quantity)
                        val = getattr(met, attr) if met else math.nan
                        cells.append(f"{val:>14.3f}" if math.isfinite(val) else f"{'-':>14}")
                    lines.append(f"{head:<8}{label:<10}" + "".join(cells))
            lines.append("")
        return "\n".join(lines)
