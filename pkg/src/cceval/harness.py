"""Manifest-driven evaluation: ingestion, mask-and-average extraction, grid
runs, Delta-CCI and model-human comparison.

Manifest (JSON, ``"schema": 1``)::

    {
      "schema": 1,
      "white_point": [0.95047, 1.0, 1.08883],      # optional
      "baseline": "baseline",                       # default baseline condition
      "legend": {"R": 1, "S1": 2, "S2": 3, "T": 4, "O": 5},   # optional
      "plane": "lab",                               # or "ab"; optional
      "scenes": [{"id": "office", "environment": "indoor"}],
      "conditions": [{"id": "baseline", "mechanism": "Baseline"},
                     {"id": "ls", "mechanism": "LocalSurround", "baseline": "baseline"}],
      "illuminants": [{"id": "blue", "name": "blue"}],
      "cells": [{
        "scene": "office", "condition": "baseline", "illuminant": "blue",
        "competitors": {"R": [L, a, b], "S1": [...], "S2": [...], "T": [...], "O": [...]},
        "images": [{"image": "img/0.png", "mask": "mask/0.png",
                    "space": "linear", "scale": 2.0, "position": 3, "trial": 0}]
      }]
    }

Paths are relative to the manifest file.  ``space`` is ``srgb`` (default)
or ``linear``; ``scale`` multiplies decoded linear values.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

from . import imgio
from .agreement import (
    AgreementReport,
    ObserverMatrix,
    agreement_metrics,
    bootstrap_mean_ci,
    observer_variability,
)
from .colorspace import D65, WhitePoint, linear_to_lab, srgb_to_linear, white_point
from .errors import (
    CcevalError,
    DegenerateAxis,
    DimensionMismatch,
    EmptyMask,
    InputError,
    InvariantViolation,
    MissingFile,
    NoOverlap,
    ParseError,
)
from .estimators import EstimatorParams, estimate_illuminant, von_kries_correct
from .psychophys import LABELS, CciRecord, CompetitorSet, ModelOutputs, cci, derive_match

SCHEMA = 1
DEFAULT_LEGEND = {label: i + 1 for i, label in enumerate(LABELS)}
SPACES = ("srgb", "linear")
RESULT_COLUMNS = ("scene", "condition", "illuminant", "subject", "cci", "delta_cci", "cluster_warning")
HUMAN_COLUMNS = ("scene", "condition", "illuminant", "subject", "cci")


# --------------------------------------------------------------------------
# Manifest
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ImageEntry:
    image: Path
    mask: Path
    relpath: str
    space: str = "srgb"
    scale: float = 1.0
    position: int | None = None
    trial: int | None = None


@dataclass(frozen=True)
class Cell:
    scene: str
    condition: str
    illuminant: str
    competitors: CompetitorSet
    images: tuple

    @property
    def key(self):
        return (self.scene, self.condition, self.illuminant)


@dataclass
class Manifest:
    path: Path
    scenes: dict
    conditions: dict
    illuminants: dict
    cells: list
    baseline: str
    legend: dict
    white_point: WhitePoint
    plane: str
    raw: dict = field(repr=False, default_factory=dict)

    def baseline_of(self, condition: str) -> str:
        return self.conditions.get(condition, {}).get("baseline") or self.baseline

    def environments(self) -> dict:
        return {k: v.get("environment") for k, v in self.scenes.items()}


def _req(obj, key, where):
    if not isinstance(obj, Mapping) or key not in obj:
        raise ParseError(f"{where}: missing required field {key!r}")
    return obj[key]


def _index(items, where, required=("id",)):
    if not isinstance(items, list):
        raise ParseError(f"{where}: expected a list")
    out = {}
    for i, it in enumerate(items):
        for r in required:
            _req(it, r, f"{where}[{i}]")
        if it["id"] in out:
            raise InvariantViolation(f"{where}[{i}]: duplicate id {it['id']!r}")
        out[it["id"]] = dict(it)
    return out


def default_white_point() -> WhitePoint:
    env = os.environ.get("CCEVAL_WHITE_POINT")
    if env:
        try:
            return white_point(float(v) for v in env.split(","))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"CCEVAL_WHITE_POINT={env!r}: {exc}") from exc
    return D65


def load_manifest(path, *, check_masks: bool = True) -> Manifest:
    """Parse and eagerly validate a manifest; errors name the offending entry."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path, "manifest")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if raw.get("schema") != SCHEMA:
        raise ParseError(f"{path}: unsupported schema {raw.get('schema')!r} (expected {SCHEMA})")
    root = path.parent
    scenes = _index(_req(raw, "scenes", "manifest"), "scenes")
    for sid, s in scenes.items():
        env = s.get("environment")
        if env is not None and env not in ("indoor", "outdoor"):
            raise InvariantViolation(f"scenes[{sid}]: environment must be indoor or outdoor")
    conditions = _index(_req(raw, "conditions", "manifest"), "conditions")
    illuminants = _index(_req(raw, "illuminants", "manifest"), "illuminants")
    baseline = raw.get("baseline", "baseline")
    legend = dict(raw.get("legend", DEFAULT_LEGEND))
    if sorted(legend) != sorted(LABELS) or len(set(legend.values())) != 5 or 0 in legend.values():
        raise InvariantViolation("legend must map R, S1, S2, T, O to five distinct non-zero values")
    wp = white_point(raw["white_point"]) if "white_point" in raw else default_white_point()
    plane = raw.get("plane", "lab")
    if plane not in ("lab", "ab"):
        raise InvariantViolation(f"plane must be 'lab' or 'ab', got {plane!r}")
    for cid, c in conditions.items():
        b = c.get("baseline")
        if b is not None and b not in conditions:
            raise InvariantViolation(f"conditions[{cid}]: unknown baseline {b!r}")

    cells = []
    seen = set()
    raw_cells = _req(raw, "cells", "manifest")
    if not isinstance(raw_cells, list) or not raw_cells:
        raise InvariantViolation(f"{path}: manifest has no cells")
    for i, rc in enumerate(raw_cells):
        where = f"cells[{i}]"
        scene = _req(rc, "scene", where)
        cond = _req(rc, "condition", where)
        ill = _req(rc, "illuminant", where)
        for name, table, v in (("scene", scenes, scene), ("condition", conditions, cond),
                               ("illuminant", illuminants, ill)):
            if v not in table:
                raise InvariantViolation(f"{where}: unknown {name} {v!r}")
        if (scene, cond, ill) in seen:
            raise InvariantViolation(f"{where}: duplicate cell {(scene, cond, ill)}")
        seen.add((scene, cond, ill))
        try:
            comps = CompetitorSet(_req(rc, "competitors", where), illuminant_id=ill,
                                  scene_id=scene, condition_id=cond).validate()
        except DegenerateAxis as exc:
            raise InvariantViolation(f"{where}.competitors: DegenerateAxis: {exc}") from exc
        except (CcevalError, ValueError, TypeError) as exc:
            raise InvariantViolation(f"{where}.competitors: {exc}") from exc
        images = []
        covered = set()
        for j, ri in enumerate(_req(rc, "images", where)):
            w = f"{where}.images[{j}]"
            img = root / _req(ri, "image", w)
            msk = root / _req(ri, "mask", w)
            if not img.is_file():
                raise MissingFile(img, f"image ({w}.image)")
            if not msk.is_file():
                raise MissingFile(msk, f"mask ({w}.mask)")
            space = ri.get("space", "srgb")
            if space not in SPACES:
                raise InvariantViolation(f"{w}.space: must be one of {SPACES}")
            scale = float(ri.get("scale", 1.0))
            if not scale > 0:
                raise InvariantViolation(f"{w}.scale: must be positive")
            if check_masks:
                vals = set(np.unique(imgio.read_mask(msk)).tolist())
                covered |= {lab for lab, v in legend.items() if v in vals}
            images.append(ImageEntry(img, msk, ri["image"], space, scale,
                                     ri.get("position"), ri.get("trial")))
        if check_masks:
            missing = [lab for lab in LABELS if lab not in covered]
            if missing:
                raise InvariantViolation(f"{where}: no image covers competitor(s) {', '.join(missing)}")
        cells.append(Cell(scene, cond, ill, comps, tuple(images)))
    return Manifest(path, scenes, conditions, illuminants, cells, baseline, legend, wp, plane, raw)


# --------------------------------------------------------------------------
# Predictors
# --------------------------------------------------------------------------

def load_linear(entry: ImageEntry) -> np.ndarray:
    arr, _ = imgio.read_image(entry.image)
    if entry.space == "srgb":
        arr = srgb_to_linear(arr)
    return arr * entry.scale


@dataclass(frozen=True)
class BuiltinEstimator:
    """Estimate per image, von Kries correct, convert to CIELAB.

    ``params=None`` is the identity predictor (no correction).
    """

    params: EstimatorParams | None = None

    @property
    def name(self) -> str:
        return "identity" if self.params is None else self.params.method.value

    def describe(self) -> dict:
        if self.params is None:
            return {"kind": "identity"}
        p = self.params
        return {"kind": "builtin", "method": p.method.value, "order": p.order,
                "p": "inf" if math.isinf(p.p) else p.p, "sigma": p.sigma, "kappa": p.kappa}

    def predict(self, entry: ImageEntry, wp: WhitePoint) -> np.ndarray:
        img = load_linear(entry)
        if self.params is not None:
            img = von_kries_correct(img, estimate_illuminant(img, self.params))
        return linear_to_lab(img, wp)


@dataclass(frozen=True)
class ExternalReflectanceImages:
    """Predicted CIELAB images from another model.

    For an input at manifest-relative path ``x/y.png`` the prediction is
    ``<directory>/x/y.npy`` (float Lab) or ``<directory>/x/y.png``
    (16-bit Lab encoding, see :func:`cceval.imgio.encode_lab`).
    """

    directory: Path
    label: str = "external"

    @property
    def name(self) -> str:
        return self.label

    def describe(self) -> dict:
        return {"kind": "external", "name": self.label}

    def path_for(self, entry: ImageEntry) -> Path:
        stem = Path(entry.relpath).with_suffix("")
        for ext in (".npy", ".png"):
            cand = Path(self.directory) / stem.with_suffix(ext)
            if cand.is_file():
                return cand
        raise MissingFile(Path(self.directory) / stem.with_suffix(".npy"), "prediction")

    def predict(self, entry: ImageEntry, wp: WhitePoint) -> np.ndarray:
        path = self.path_for(entry)
        arr, depth = imgio.read_image(path)
        return arr if depth is None else imgio.decode_lab(arr)


# --------------------------------------------------------------------------
# Extraction and matching
# --------------------------------------------------------------------------

@dataclass
class Extraction:
    sums: dict
    counts: dict

    def outputs(self) -> ModelOutputs:
        empty = [k for k in LABELS if self.counts.get(k, 0) == 0]
        if empty:
            raise EmptyMask(f"no masked pixels for competitor(s) {', '.join(empty)}")
        return ModelOutputs({k: self.sums[k] / self.counts[k] for k in LABELS},
                            {k: int(self.counts[k]) for k in LABELS})

    def merge(self, other: "Extraction") -> "Extraction":
        return Extraction({k: self.sums[k] + other.sums[k] for k in LABELS},
                          {k: self.counts[k] + other.counts[k] for k in LABELS})


def accumulate(images: Iterable, legend: Mapping = DEFAULT_LEGEND) -> Extraction:
    """Sum Lab values and pixel counts under each competitor's mask.

    ``images`` yields ``(lab_image, mask)`` pairs.
    """
    sums = {k: np.zeros(3) for k in LABELS}
    counts = {k: 0 for k in LABELS}
    for lab, mask in images:
        lab = np.asarray(lab, dtype=np.float64)
        mask = np.asarray(mask)
        if lab.shape[:2] != mask.shape:
            raise DimensionMismatch(f"prediction {lab.shape[:2]} vs mask {mask.shape}")
        for label in LABELS:
            sel = mask == legend[label]
            n = int(sel.sum())
            if n:
                sums[label] = sums[label] + lab[sel].sum(axis=0)
                counts[label] += n
    return Extraction(sums, counts)


def extract_outputs(entries, src, legend: Mapping = DEFAULT_LEGEND, wp: WhitePoint = D65) -> ModelOutputs:
    """Pixel-weighted mean CIELAB prediction per competitor over a cell."""
    def gen():
        for e in entries:
            yield src.predict(e, wp), imgio.read_mask(e.mask)
    return accumulate(gen(), legend).outputs()


@dataclass
class CellOutcome:
    key: tuple
    cci: float | None = None
    cluster_warning: bool = False
    diagnostics: dict = field(default_factory=dict)
    error: str | None = None
    error_type: str | None = None


def evaluate_cell(cell: Cell, src, legend, wp, plane="lab", per_trial=False) -> CellOutcome:
    """Extract, match and score one cell; failures are captured, not raised."""
    try:
        groups = {}
        for e in cell.images:
            groups.setdefault(e.trial if per_trial else None, []).append(e)
        ccis, diags, warn = [], [], False
        for trial in sorted(groups, key=lambda t: (t is None, t)):
            out = extract_outputs(groups[trial], src, legend, wp)
            m = derive_match(out, cell.competitors, plane=plane)
            ccis.append(cci(m.match, cell.competitors, plane=plane))
            warn = warn or m.cluster_warning
            diags.append({
                "trial": trial, "chosen_pair": list(m.chosen_pair), "d1": m.d1, "d2": m.d2,
                "t_param": m.t_param, "cluster_spread": m.cluster_spread,
                "match": [float(v) for v in m.match],
                "counts": {k: out.counts[k] for k in LABELS},
            })
        return CellOutcome(cell.key, float(np.mean(ccis)), warn, {"groups": diags})
    except CcevalError as exc:
        return CellOutcome(cell.key, error=str(exc), error_type=type(exc).__name__)


def _evaluate_task(args):
    return evaluate_cell(*args)


@dataclass
class ResultRow:
    record: CciRecord
    delta_cci: float | None
    cluster_warning: bool


@dataclass
class GridResult:
    rows: list
    outcomes: list
    errors: list

    @property
    def records(self) -> list:
        return [r.record for r in self.rows]


def compute_deltas(records: Iterable[CciRecord], baseline_of: Callable[[str], str]) -> dict:
    """``record.key -> delta`` against the record's baseline condition
    (same scene, illuminant and subject); None when the baseline is absent."""
    records = list(records)
    index = {r.key: r for r in records}
    out = {}
    for r in records:
        base = baseline_of(r.condition_id)
        b = index.get((r.scene_id, base, r.illuminant_id, r.subject_id))
        out[r.key] = None if b is None else r.cci_percent - b.cci_percent
    return out


def run_grid(m: Manifest, src, *, jobs: int = 1, subject: str | None = None,
             per_trial: bool = False) -> GridResult:
    """Evaluate every cell; one cell's failure never aborts the others.

    Output order follows the manifest regardless of ``jobs``.
    """
    subject = subject or src.name
    tasks = [(c, src, m.legend, m.white_point, m.plane, per_trial) for c in m.cells]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_evaluate_task, tasks))
    else:
        outcomes = [_evaluate_task(t) for t in tasks]
    records = [CciRecord(o.key[0], o.key[1], o.key[2], subject, o.cci)
               for o in outcomes if o.error is None]
    warn = {o.key: o.cluster_warning for o in outcomes}
    deltas = compute_deltas(records, m.baseline_of)
    rows = [ResultRow(r, deltas[r.key], warn[r.key[:3]]) for r in records]
    errors = [{"scene": o.key[0], "condition": o.key[1], "illuminant": o.key[2],
               "error": o.error_type, "message": o.error} for o in outcomes if o.error]
    return GridResult(rows, outcomes, errors)


# --------------------------------------------------------------------------
# Persistence
# --------------------------------------------------------------------------

def _fmt(x) -> str:
    return "" if x is None else f"{x:.6f}"


def format_results(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in rows:
        rec = r.record
        w.writerow([rec.scene_id, rec.condition_id, rec.illuminant_id, rec.subject_id,
                    _fmt(rec.cci_percent), _fmt(r.delta_cci), int(r.cluster_warning)])
    return buf.getvalue()


def write_results_csv(path, rows, *, append: bool = False):
    """Write (or append to) a results CSV; appending keeps a single header."""
    path = Path(path)
    text = format_results(rows)
    if append and path.is_file() and path.stat().st_size > 0:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
        if header != ",".join(RESULT_COLUMNS):
            raise ParseError(f"{path}: existing file has a different header")
        text = text.split("\n", 1)[1]
        with open(path, "a", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        path.write_text(text, encoding="utf-8", newline="")


def config_hash(m: Manifest, src, **extra) -> str:
    blob = json.dumps({"manifest": m.raw, "predictor": src.describe(), **extra},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def write_run(outdir, m: Manifest, src, result: GridResult, **extra) -> dict:
    """Write ``results.csv``, ``report.json`` and (on failures) ``errors.json``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_results_csv(outdir / "results.csv", result.rows)
    summary = {
        "schema": SCHEMA,
        "config_hash": config_hash(m, src, **extra),
        "predictor": src.describe(),
        "options": extra,
        "cells": len(result.outcomes),
        "succeeded": len(result.rows),
        "failed": len(result.errors),
        "diagnostics": [
            {"scene": o.key[0], "condition": o.key[1], "illuminant": o.key[2], **o.diagnostics}
            for o in result.outcomes if o.error is None
        ],
        "errors": result.errors,
    }
    (outdir / "report.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                        encoding="utf-8")
    if result.errors:
        (outdir / "errors.json").write_text(json.dumps(result.errors, indent=2, sort_keys=True) + "\n",
                                            encoding="utf-8")
    return summary


def read_records(path) -> list:
    """CCI records from a human-data or results CSV."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path, "CSV")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in HUMAN_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ParseError(f"{path}: missing column(s) {', '.join(missing)}")
        out = []
        for i, row in enumerate(reader, start=2):
            try:
                v = float(row["cci"])
            except ValueError as exc:
                raise ParseError(f"{path}:{i}: cci is not a number: {row['cci']!r}") from exc
            if not math.isfinite(v):
                raise ParseError(f"{path}:{i}: cci must be finite")
            out.append(CciRecord(row["scene"], row["condition"], row["illuminant"], row["subject"], v))
    keys = [r.key for r in out]
    if len(set(keys)) != len(keys):
        raise InvariantViolation(f"{path}: duplicate (scene, condition, illuminant, subject) rows")
    return out


def baseline_resolver(default: str = "baseline", pairs: Mapping | None = None) -> Callable[[str], str]:
    pairs = dict(pairs or {})
    return lambda cond: pairs.get(cond, default)


def delta_rows(records, baseline_of, warnings: Mapping | None = None) -> list:
    deltas = compute_deltas(records, baseline_of)
    warnings = warnings or {}
    return [ResultRow(r, deltas[r.key], bool(warnings.get(r.key, False))) for r in records]


# --------------------------------------------------------------------------
# Comparison
# --------------------------------------------------------------------------

def guess_environment(scene_id: str) -> str | None:
    s = scene_id.lower()
    for env in ("indoor", "outdoor"):
        if s.startswith(env):
            return env
    return None


def _vectors(records, granularity, keep):
    """subject -> {key: value} for records passing ``keep``."""
    acc = {}
    for r in records:
        if not keep(r):
            continue
        k = (r.scene_id, r.condition_id, r.illuminant_id) if granularity == "cell" \
            else (r.scene_id, r.condition_id)
        acc.setdefault(r.subject_id, {}).setdefault(k, []).append(r.cci_percent)
    return {s: {k: float(np.mean(v)) for k, v in d.items()} for s, d in acc.items()}


def _delta_records(records, baseline_of):
    deltas = compute_deltas(records, baseline_of)
    return [CciRecord(*r.key, deltas[r.key]) for r in records
            if baseline_of(r.condition_id) != r.condition_id and deltas[r.key] is not None]


def compare(model_records, human_records, *, environments: Mapping | None = None,
            baseline_of: Callable[[str], str] | None = None, granularity: str = "cell",
            n_boot: int = 10_000, seed: int = 0) -> AgreementReport:
    """Agreement of each model subject with the human data, per scope
    (all / indoor / outdoor) and per quantity (CCI / Delta-CCI)."""
    if granularity not in ("cell", "condition"):
        raise ValueError("granularity must be 'cell' or 'condition'")
    baseline_of = baseline_of or baseline_resolver()
    model_records = list(model_records)
    human_records = list(human_records)
    env = dict(environments or {})

    def env_of(scene):
        return env.get(scene) or guess_environment(scene)

    human_keys = {r.key[:3] for r in human_records}
    if not any(r.key[:3] in human_keys for r in model_records):
        raise NoOverlap("model records share no (scene, condition, illuminant) cell with the human data")

    scopes = {"all": lambda r: True}
    for e in ("indoor", "outdoor"):
        if any(env_of(r.scene_id) == e for r in human_records):
            scopes[e] = (lambda e_: lambda r: env_of(r.scene_id) == e_)(e)

    quantities = {
        "cci": (model_records, human_records),
        "delta_cci": (_delta_records(model_records, baseline_of), _delta_records(human_records, baseline_of)),
    }
    report = AgreementReport()
    for scope, keep in scopes.items():
        for q, (mrec, hrec) in quantities.items():
            hv = _vectors(hrec, granularity, keep)
            if not hv:
                continue
            humans = ObserverMatrix.from_dict(hv)
            for model, vec in _vectors(mrec, granularity, keep).items():
                try:
                    report.add(model, scope, q, agreement_metrics(vec, humans))
                except NoOverlap:
                    continue
        hv = _vectors(human_records, granularity, keep)
        if len(hv) >= 2:
            try:
                var = observer_variability(ObserverMatrix.from_dict(hv))
                report.variability[scope] = {s: {"mean_pearson": _num(v.mean_pearson), "cv": _num(v.cv)}
                                             for s, v in var.items()}
            except CcevalError:
                pass
        report.delta_summary[scope] = _delta_summary(
            [r for r in quantities["delta_cci"][1] if keep(r)],
            [r for r in quantities["delta_cci"][0] if keep(r)], n_boot, seed)
    if not report.metrics:
        raise NoOverlap("no model/human overlap in any scope")
    return report


def _num(x):
    return None if x is None or not math.isfinite(x) else x


def _delta_summary(human_deltas, model_deltas, n_boot, seed):
    out = {}
    for cond in sorted({r.condition_id for r in human_deltas} | {r.condition_id for r in model_deltas}):
        per_subject = {}
        for r in human_deltas:
            if r.condition_id == cond:
                per_subject.setdefault(r.subject_id, []).append(r.cci_percent)
        entry = {}
        if per_subject:
            means = {s: float(np.mean(v)) for s, v in per_subject.items()}
            mean, lo, hi = bootstrap_mean_ci(means, n_resamples=n_boot, seed=seed)
            entry["human"] = {"mean": mean, "ci_low": lo, "ci_high": hi, "n_subjects": len(means),
                              "method": "percentile bootstrap over subjects"}
        models = {}
        for r in model_deltas:
            if r.condition_id == cond:
                models.setdefault(r.subject_id, []).append(r.cci_percent)
        entry["models"] = {s: float(np.mean(v)) for s, v in models.items()}
        out[cond] = entry
    return out


def write_plot_data(path, model_records, human_records, baseline_of, environments=None):
    """Long-format CSV for CCI / Delta-CCI plots grouped by condition,
    illuminant and environment."""
    env = dict(environments or {})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["source", "subject", "environment", "scene", "condition", "illuminant", "cci", "delta_cci"])
    for source, recs in (("human", list(human_records)), ("model", list(model_records))):
        deltas = compute_deltas(recs, baseline_of)
        for r in recs:
            w.writerow([source, r.subject_id, env.get(r.scene_id) or guess_environment(r.scene_id) or "",
                        r.scene_id, r.condition_id, r.illuminant_id, _fmt(r.cci_percent),
                        _fmt(deltas[r.key])])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")



# --------------------------------------------------------------------------
# Synthetic grids
# --------------------------------------------------------------------------

#: Linear renderings are stored divided by this factor so gains above 1 fit
#: in a 16-bit PNG.
SYNTH_SCALE = 2.0


def build_synthetic_grid(outdir, *, seeds=(0, 1), illuminants=("blue", "yellow", "red", "green"),
                         mechanisms=None, wp: WhitePoint = D65) -> Path:
    """Render a scenegen experiment grid and write it as a manifest.

    Layout under ``outdir``: ``images/`` (16-bit linear PNG), ``masks/``,
    ``truth/images/`` (float CIELAB reflectance ``.npy`` mirroring
    ``images/``, so ``ExternalReflectanceImages(outdir / "truth")`` is the
    perfect-knowledge predictor) and ``manifest.json``.  Even seeds become
    indoor scenes, odd seeds outdoor.  The neutral light is rejected: its
    competitor axis is degenerate (R = T).

    Returns the manifest path.
    """
    from . import scenegen as sg

    outdir = Path(outdir)
    mechs = mechanisms if mechanisms is not None else sg.battery_mechanisms()
    if not isinstance(mechs, Mapping):
        mechs = {sg.Mechanism(m): sg.MechanismSpec(sg.Mechanism(m)) for m in mechs}
    mechs = {sg.Mechanism(k): v for k, v in mechs.items()}
    if sg.Mechanism.BASELINE not in mechs:
        raise InvariantViolation("a synthetic grid needs the Baseline condition")
    if "neutral" in illuminants:
        raise InvariantViolation("neutral illuminant has a degenerate competitor axis (R = T)")
    for sub in ("images", "masks", "truth/images"):
        (outdir / sub).mkdir(parents=True, exist_ok=True)

    scenes, cells = [], []
    for seed in seeds:
        env = "indoor" if seed % 2 == 0 else "outdoor"
        sid = f"{env}-s{seed}"
        scenes.append({"id": sid, "environment": env})
        base, positions = sg.standard_battery(seed=seed)
        for kind, mech in mechs.items():
            for name in illuminants:
                illum = sg.IlluminantSpec.named(name)
                scene = sg.apply_mechanism(base, mech, illum, wp)
                comps, refl = sg.make_competitor_set(scene.target_reflectance, illum, wp,
                                                     scene_id=sid, condition_id=kind.value)
                images = []
                for ci in sg.competitor_scene_set(scene, refl, positions, illum, wp):
                    stem = f"{sid}_{kind.value}_{name}_{ci.label}_p{ci.position}"
                    imgio.write_png(outdir / "images" / f"{stem}.png",
                                    np.clip(ci.image / SYNTH_SCALE, 0.0, 1.0), bitdepth=16)
                    imgio.write_mask(outdir / "masks" / f"{stem}.png", ci.mask)
                    np.save(outdir / "truth" / "images" / f"{stem}.npy",
                            linear_to_lab(ci.reflectance, wp))
                    images.append({"image": f"images/{stem}.png", "mask": f"masks/{stem}.png",
                                   "space": "linear", "scale": SYNTH_SCALE, "position": ci.position})
                cells.append({"scene": sid, "condition": kind.value, "illuminant": name,
                              "competitors": comps.to_dict(), "images": images})

    manifest = {
        "schema": SCHEMA,
        "white_point": list(wp),
        "baseline": sg.Mechanism.BASELINE.value,
        "legend": dict(DEFAULT_LEGEND),
        "scenes": scenes,
        "conditions": [{"id": k.value, "mechanism": k.value} for k in mechs],
        "illuminants": [{"id": n, "name": n} for n in illuminants],
        "cells": cells,
    }
    path = outdir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path
