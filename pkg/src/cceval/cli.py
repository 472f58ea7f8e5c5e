"""``cceval`` command line.

Exit codes: 0 success, 2 input error, 3 degenerate computation, 4 gamut
violation, 5 partial grid failure (error roster written).  Diagnostics go
to stderr; data goes to stdout or the named output files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import BACKEND, __version__, harness, imgio
from . import scenegen as sg
from .colorspace import linear_to_srgb, srgb_to_linear, white_point
from .errors import CcevalError, InputError, MissingFile, ParseError
from .estimators import (
    EstimatorParams,
    Method,
    estimate_illuminant,
    normalize_illuminant,
    von_kries_correct,
)

EXIT_PARTIAL = 5


def _triplet(text: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected r,g,b got {text!r}") from None
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated values, got {text!r}")
    return vals


def _pvalue(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def _pair(text: str) -> tuple:
    cond, sep, base = text.partition("=")
    if not sep or not cond or not base:
        raise argparse.ArgumentTypeError(f"expected CONDITION=BASELINE, got {text!r}")
    return cond, base


def _warn(msg: str):
    print(f"cceval: {msg}", file=sys.stderr)


def _add_estimator_args(p, *, required=False):
    p.add_argument("--method", choices=[m.value for m in Method], required=required,
                   help="illuminant estimation algorithm")
    p.add_argument("-p", "--minkowski-p", dest="p", type=_pvalue, help="Minkowski norm (inf allowed)")
    p.add_argument("--order", type=int, help="derivative order (edge methods)")
    p.add_argument("--sigma", type=float, help="Gaussian scale in pixels")
    p.add_argument("--kappa", type=float, help="edge-weight exponent (weighted gray edge)")


def _params(args) -> EstimatorParams:
    try:
        return EstimatorParams.for_method(args.method, p=args.p, order=args.order,
                                          sigma=args.sigma, kappa=args.kappa)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _load_linear(path, space: str, scale: float = 1.0):
    arr, depth = imgio.read_image(path)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ParseError(f"{path}: expected an RGB image, got shape {arr.shape}")
    if space == "srgb":
        arr = srgb_to_linear(arr)
    return arr * scale, depth


def _wp(args):
    if getattr(args, "white_point", None):
        try:
            return white_point(args.white_point)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    return harness.default_white_point()


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_estimate(args) -> int:
    img, _ = _load_linear(args.image, args.space)
    mask = imgio.read_mask(args.mask) > 0 if args.mask else None
    e = estimate_illuminant(img, _params(args), mask=mask)
    if args.format == "json":
        print(json.dumps({"image": str(args.image), "method": args.method,
                          "illuminant": [float(v) for v in e]}))
    else:
        print(" ".join(f"{v:.6f}" for v in e))
    if args.json:
        Path(args.json).write_text(json.dumps({"illuminant": [float(v) for v in e]}) + "\n",
                                   encoding="utf-8")
    return 0


def _truth_illuminant(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path, "truth file")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    vec = data.get("direction", data.get("illuminant")) if isinstance(data, dict) else data
    try:
        return normalize_illuminant(np.asarray(vec, dtype=np.float64).reshape(3))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: no usable illuminant direction") from exc


def cmd_correct(args) -> int:
    img, depth = _load_linear(args.image, args.space)
    if args.illuminant is not None:
        e = np.asarray(args.illuminant)
    elif args.method == "oracle":
        if not args.truth:
            raise InputError("--method oracle needs --truth")
        e = _truth_illuminant(args.truth)
    elif args.method:
        e = estimate_illuminant(img, _params(args))
    else:
        raise InputError("give --illuminant or --method")
    out = von_kries_correct(img, e)
    over = float(out.max()) if out.size else 0.0
    if over > 1.0:
        _warn(f"corrected values up to {over:.4f} clipped to 1")
    out = np.clip(out, 0.0, 1.0)
    if args.space == "srgb":
        out = linear_to_srgb(out)
    imgio.write_image(args.output, out, bitdepth=args.bitdepth or depth or 16)
    return 0


def _illuminant_arg(text: str) -> sg.IlluminantSpec:
    if text in sg.DEFAULT_ILLUMINANTS:
        return sg.IlluminantSpec.named(text)
    try:
        return sg.IlluminantSpec("custom", _triplet(text))
    except (argparse.ArgumentTypeError, ValueError) as exc:
        raise InputError(f"illuminant {text!r}: {exc}") from exc


def cmd_synth(args) -> int:
    wp = _wp(args)
    if args.grid:
        mechs = None
        if args.mechanism:
            battery = sg.battery_mechanisms()
            kinds = [sg.Mechanism.BASELINE] + [sg.Mechanism(m) for m in args.mechanism
                                               if m != sg.Mechanism.BASELINE.value]
            mechs = {k: battery[k] for k in kinds}
        path = harness.build_synthetic_grid(args.output, seeds=tuple(args.seeds),
                                            illuminants=tuple(args.illuminants), mechanisms=mechs,
                                            wp=wp)
        print(path)
        return 0
    if args.scene:
        sp = Path(args.scene)
        if not sp.is_file():
            raise MissingFile(sp, "scene spec")
        try:
            scene = sg.SceneSpec.from_json(sp.read_text(encoding="utf-8"))
        except (json.JSONDecodeError, TypeError, KeyError, ValueError) as exc:
            raise ParseError(f"{sp}: {exc}") from exc
    else:
        scene, _ = sg.standard_battery(seed=args.seed)
    illum = _illuminant_arg(args.illuminant)
    kind = sg.Mechanism(args.mechanism[0] if args.mechanism else "Baseline")
    mech = sg.battery_mechanisms()[kind] if not args.scene else sg.MechanismSpec(kind)
    scene = sg.apply_mechanism(scene, mech, illum, wp)
    r = sg.render(scene, illum)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    imgio.write_png(out / "image.png", np.clip(r.image / args.scale, 0.0, 1.0), bitdepth=16)
    imgio.write_mask(out / "labels.png", r.labels)
    np.save(out / "reflectance.npy", r.reflectance)
    (out / "scene.json").write_text(scene.to_json() + "\n", encoding="utf-8")
    truth = {"illuminant": illum.name, "direction": list(illum.color), "gain": [float(g) for g in illum.gain],
             "mechanism": kind.value, "space": "linear", "scale": args.scale,
             "object_label": int(r.object_label)}
    (out / "illum.json").write_text(json.dumps(truth, indent=2) + "\n", encoding="utf-8")
    print(out / "image.png")
    return 0


def _predictor(args):
    if args.predictions:
        return harness.ExternalReflectanceImages(Path(args.predictions), args.name or "external")
    if args.identity:
        return harness.BuiltinEstimator(None)
    if not args.method:
        raise InputError("give --method, --identity or --predictions")
    return harness.BuiltinEstimator(_params(args))


def cmd_evaluate(args) -> int:
    m = harness.load_manifest(args.manifest)
    if args.white_point:
        m.white_point = _wp(args)
    if args.plane:
        m.plane = args.plane
    src = _predictor(args)
    jobs = args.jobs or os.cpu_count() or 1
    result = harness.run_grid(m, src, jobs=jobs, subject=args.subject, per_trial=args.per_trial)
    harness.write_run(args.output, m, src, result, per_trial=args.per_trial, plane=m.plane)
    for err in result.errors:
        _warn(f"cell {err['scene']}/{err['condition']}/{err['illuminant']}: {err['error']}: {err['message']}")
    for row in result.rows:
        if row.cluster_warning:
            rec = row.record
            _warn(f"cluster warning: {rec.scene_id}/{rec.condition_id}/{rec.illuminant_id}")
    print(Path(args.output) / "results.csv")
    return EXIT_PARTIAL if result.errors else 0


def _baselines(args, manifest=None):
    pairs = dict(args.pair or [])
    default = args.baseline
    if manifest is not None:
        default = default or manifest.baseline
        return lambda c: pairs.get(c) or (manifest.baseline_of(c) if c in manifest.conditions else default)
    return harness.baseline_resolver(default or "baseline", pairs)


def cmd_delta(args) -> int:
    records = harness.read_records(args.records)
    manifest = harness.load_manifest(args.manifest, check_masks=False) if args.manifest else None
    rows = harness.delta_rows(records, _baselines(args, manifest))
    if not args.keep_baseline:
        rows = [r for r in rows if r.delta_cci is not None and
                _baselines(args, manifest)(r.record.condition_id) != r.record.condition_id]
    text = harness.format_results(rows)
    if args.output:
        harness.write_results_csv(args.output, rows)
    else:
        sys.stdout.write(text)
    return 0


def cmd_compare(args) -> int:
    model = harness.read_records(args.records)
    humans = harness.read_records(args.humans)
    manifest = harness.load_manifest(args.manifest, check_masks=False) if args.manifest else None
    envs = manifest.environments() if manifest else {}
    for spec in args.environment or []:
        scene, env = spec
        envs[scene] = env
    baseline_of = _baselines(args, manifest)
    report = harness.compare(model, humans, environments=envs, baseline_of=baseline_of,
                             granularity=args.granularity, n_boot=args.n_boot, seed=args.seed)
    doc = report.to_json_dict()
    if args.json:
        Path(args.json).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if args.plot_data:
        harness.write_plot_data(args.plot_data, model, humans, baseline_of, envs)
    if args.format == "json":
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(report.to_text())
    return 0


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def _env_pair(text: str) -> tuple:
    scene, sep, env = text.partition("=")
    if not sep or env not in ("indoor", "outdoor"):
        raise argparse.ArgumentTypeError(f"expected SCENE=indoor|outdoor, got {text!r}")
    return scene, env


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cceval", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    ap.add_argument("--white-point", type=_triplet, metavar="X,Y,Z",
                    help="reference white (default $CCEVAL_WHITE_POINT or D65)")
    ap.add_argument("--seed", type=int, default=0, help="seed for every randomised step")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate the illuminant of an image")
    p.add_argument("image")
    _add_estimator_args(p, required=True)
    p.add_argument("--space", choices=("srgb", "linear"), default="srgb")
    p.add_argument("--mask", help="restrict estimation to non-zero mask pixels")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--json", help="also write the estimate to this JSON file")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("correct", help="von Kries white-balance an image")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--illuminant", type=_triplet, metavar="R,G,B")
    p.add_argument("--method", choices=[m.value for m in Method] + ["oracle"])
    p.add_argument("--truth", help="JSON with the true illuminant direction (for --method oracle)")
    p.add_argument("-p", "--minkowski-p", dest="p", type=_pvalue)
    p.add_argument("--order", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--space", choices=("srgb", "linear"), default="srgb")
    p.add_argument("--bitdepth", type=int, choices=(8, 16), help="default: same as input")
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("synth", help="render a synthetic scene or a whole evaluation grid")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--scene", help="SceneSpec JSON (default: standard battery scene for --seed)")
    p.add_argument("--mechanism", action="append", choices=[m.value for m in sg.Mechanism])
    p.add_argument("--illuminant", default="neutral", help="named light or r,g,b")
    p.add_argument("--scale", type=float, default=harness.SYNTH_SCALE,
                   help="stored image = linear rendering / scale")
    p.add_argument("--grid", action="store_true", help="write a full manifest-driven grid")
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1], help="grid scene seeds")
    p.add_argument("--illuminants", nargs="+", default=["blue", "yellow", "red", "green"])
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("evaluate", help="run a manifest grid through a predictor")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True, help="output directory")
    _add_estimator_args(p)
    p.add_argument("--identity", action="store_true", help="no-constancy predictor")
    p.add_argument("--predictions", help="directory of external CIELAB predictions")
    p.add_argument("--name", help="subject name for external predictions")
    p.add_argument("--subject", help="subject column value (default: predictor name)")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--per-trial", action="store_true", help="match per trial, then average")
    p.add_argument("--plane", choices=("lab", "ab"))
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("delta", help="Delta-CCI of a records CSV against baseline conditions")
    p.add_argument("records")
    p.add_argument("-o", "--output")
    p.add_argument("--manifest", help="take baseline designations from a manifest")
    p.add_argument("--baseline", help="default baseline condition (default: baseline)")
    p.add_argument("--pair", type=_pair, action="append", metavar="COND=BASE")
    p.add_argument("--keep-baseline", action="store_true", help="also emit baseline rows")
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("compare", help="agreement of model records with human data")
    p.add_argument("records")
    p.add_argument("humans")
    p.add_argument("--manifest", help="scene environments and baselines")
    p.add_argument("--environment", type=_env_pair, action="append", metavar="SCENE=ENV")
    p.add_argument("--baseline")
    p.add_argument("--pair", type=_pair, action="append", metavar="COND=BASE")
    p.add_argument("--granularity", choices=("cell", "condition"), default="cell")
    p.add_argument("--n-boot", type=int, default=10_000)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--json", help="also write the report JSON here")
    p.add_argument("--plot-data", help="write long-format plot data CSV here")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CcevalError as exc:
        _warn(f"error: {exc}")
        return exc.exit_code
    except OSError as exc:
        _warn(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
