"""Tiny on-disk manifest used by the harness and CLI tests."""

import json
from pathlib import Path

import numpy as np

from cceval import imgio
from cceval.psychophys import LABELS, CompetitorSet

R = np.array([50.0, 20.0, 10.0])
T = np.array([50.0, -20.0, -10.0])


def _mask(h=4, w=10):
    # two columns per competitor, labels 1..5
    return np.repeat(np.arange(1, 6), w // 5)[None, :].repeat(h, axis=0)


def write_mini(root, cells=None, *, extra=None):
    """Manifest with one scene, two conditions and one image per cell.

    ``cells`` maps condition id -> per-label Lab prediction; predictions go
    under ``root / 'pred'`` for ExternalReflectanceImages.
    """
    root = Path(root)
    (root / "img").mkdir(parents=True, exist_ok=True)
    (root / "pred" / "img").mkdir(parents=True, exist_ok=True)
    cells = cells or {"baseline": {k: CompetitorSet.equally_spaced(R, T)[k] for k in LABELS}}
    comps = CompetitorSet.equally_spaced(R, T).to_dict()
    mask = _mask()
    out_cells = []
    for cond, colors in cells.items():
        stem = f"office_{cond}"
        imgio.write_png(root / "img" / f"{stem}.png", np.full(mask.shape + (3,), 0.4), 16)
        imgio.write_mask(root / "img" / f"{stem}_mask.png", mask)
        lab = np.zeros(mask.shape + (3,))
        for i, k in enumerate(LABELS, start=1):
            lab[mask == i] = colors[k]
        np.save(root / "pred" / "img" / f"{stem}.npy", lab)
        out_cells.append({"scene": "office", "condition": cond, "illuminant": "blue",
                          "competitors": comps,
                          "images": [{"image": f"img/{stem}.png", "mask": f"img/{stem}_mask.png",
                                      "space": "linear"}]})
    raw = {"schema": 1, "baseline": "baseline",
           "scenes": [{"id": "office", "environment": "indoor"}],
           "conditions": [{"id": c} for c in cells],
           "illuminants": [{"id": "blue"}],
           "cells": out_cells}
    raw.update(extra or {})
    path = root / "manifest.json"
    path.write_text(json.dumps(raw))
    return path


NOMINAL = {"R": 1.0, "S1": 2 / 3, "S2": 1 / 3, "T": 0.0, "O": 4 / 3}


def colors_at(t):
    """Competitor outputs with the axis layout compressed by ``t`` toward T."""
    return {k: T + t * NOMINAL[k] * (R - T) for k in LABELS}
