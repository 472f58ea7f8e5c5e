"""Competitor axis, model-match derivation and the Colour Constancy Index.

The competitor axis runs from the tristimulus match ``T`` (zero constancy)
to the reflectance match ``R`` (perfect constancy).  A predictor's output
colours for the five competitors are projected onto that axis, the two
whose projections sit closest to ``R`` are interpolated by inverse
distance, and the resulting match is scored by its signed axis coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DegenerateAxis, InvariantViolation, MismatchedKeys, MissingCompetitor

LABELS = ("R", "S1", "S2", "T", "O")
AXIS_EPS = 1e-9
#: Spread (Delta-E along the axis) below which a match is flagged as unstable.
CLUSTER_THRESHOLD = 1.0
#: Allowed perpendicular distance of S1, S2 and O from the R-T line.
LINE_TOLERANCE = 1.0


def _vec(c) -> np.ndarray:
    v = np.asarray(c, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite colour {v}")
    return v


def _plane(v: np.ndarray, plane: str) -> np.ndarray:
    if plane == "lab":
        return v
    if plane == "ab":
        return np.array([0.0, v[1], v[2]])
    raise ValueError(f"plane must be 'lab' or 'ab', got {plane!r}")


@dataclass(frozen=True)
class CompetitorSet:
    """Five labelled CIELAB competitor positions for one cell."""

    positions: Mapping[str, np.ndarray]
    illuminant_id: str = ""
    scene_id: str = ""
    condition_id: str = ""

    def __post_init__(self):
        missing = [k for k in LABELS if k not in self.positions]
        if missing:
            raise MissingCompetitor(f"competitor set lacks {', '.join(missing)}")
        extra = set(self.positions) - set(LABELS)
        if extra:
            raise InvariantViolation(f"unknown competitor labels {sorted(extra)}")
        object.__setattr__(self, "positions", {k: _vec(self.positions[k]) for k in LABELS})

    def __getitem__(self, label: str) -> np.ndarray:
        return self.positions[label]

    @property
    def R(self) -> np.ndarray:
        return self.positions["R"]

    @property
    def T(self) -> np.ndarray:
        return self.positions["T"]

    def validate(self, tol: float = LINE_TOLERANCE) -> "CompetitorSet":
        """Check axis non-degeneracy and that S1, S2, O lie on the R-T line.

        S1 and S2 must also project inside the segment.  Raises
        :class:`DegenerateAxis` or :class:`InvariantViolation`.
        """
        R, T = self.R, self.T
        axis = T - R
        length = float(np.linalg.norm(axis))
        if length < AXIS_EPS:
            raise DegenerateAxis(f"R and T coincide ({self._where()})")
        u = axis / length
        for label in ("S1", "S2", "O"):
            d = self.positions[label] - R
            s = float(np.dot(d, u))
            off = float(np.linalg.norm(d - s * u))
            if off > tol:
                raise InvariantViolation(
                    f"{label} is {off:.3f} Delta-E off the R-T line ({self._where()})")
            if label != "O" and not (-tol <= s <= length + tol):
                raise InvariantViolation(
                    f"{label} does not lie between R and T ({self._where()})")
        return self

    def _where(self) -> str:
        parts = [p for p in (self.scene_id, self.condition_id, self.illuminant_id) if p]
        return "/".join(parts) or "competitor set"

    def to_dict(self) -> dict:
        return {k: [float(x) for x in v] for k, v in self.positions.items()}

    @classmethod
    def equally_spaced(cls, R, T, over: float = 1.0 / 3.0, **ids) -> "CompetitorSet":
        """R and T with S1, S2 at thirds of the segment and O beyond R by
        ``over`` times the R-T length."""
        R, T = _vec(R), _vec(T)
        d = T - R
        return cls({"R": R, "S1": R + d / 3.0, "S2": R + 2.0 * d / 3.0, "T": T,
                    "O": R - over * d}, **ids)


@dataclass(frozen=True)
class ModelOutputs:
    """Per-competitor mean CIELAB output and the pixel count behind it."""

    colors: Mapping[str, np.ndarray]
    counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        missing = [k for k in LABELS if k not in self.colors]
        if missing:
            raise MissingCompetitor(f"model outputs lack {', '.join(missing)}")
        object.__setattr__(self, "colors", {k: _vec(self.colors[k]) for k in LABELS})


@dataclass(frozen=True)
class MatchResult:
    match: np.ndarray
    t_param: float
    chosen_pair: tuple
    d1: float
    d2: float
    cluster_spread: float
    cluster_warning: bool
    projections: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class CciRecord:
    scene_id: str
    condition_id: str
    illuminant_id: str
    subject_id: str
    cci_percent: float

    @property
    def key(self):
        return (self.scene_id, self.condition_id, self.illuminant_id, self.subject_id)


def project_onto_axis(P, R, T, plane: str = "lab"):
    """Orthogonal projection of ``P`` onto the infinite R-T line.

    Returns ``(projected, t)`` with ``t = 1`` at R and ``t = 0`` at T.  With
    ``plane="ab"`` lightness is ignored when computing the coefficient.
    """
    P, R, T = _vec(P), _vec(R), _vec(T)
    axis = T - R
    axis_p = _plane(axis, plane)
    denom = float(np.dot(axis_p, axis_p))
    if math.sqrt(denom) < AXIS_EPS:
        raise DegenerateAxis("R and T coincide; competitor axis undefined")
    s = float(np.dot(axis_p, _plane(P - R, plane))) / denom
    return R + s * axis, 1.0 - s


def derive_match(outputs: ModelOutputs, comps: CompetitorSet, plane: str = "lab",
                 cluster_threshold: float = CLUSTER_THRESHOLD) -> MatchResult:
    """Turn per-competitor model outputs into a match on the competitor axis.

    Each output is projected on the R-T axis; the two competitors whose
    projections lie closest to ``R`` (ties broken by label order R, S1, S2,
    T, O) are blended at their *original* positions with weights inverse to
    those distances.
    """
    if not isinstance(outputs, ModelOutputs):
        outputs = ModelOutputs(outputs)
    R, T = comps.R, comps.T
    length = float(np.linalg.norm(_plane(T - R, plane)))
    positions = {}
    dist = {}
    for label in LABELS:
        _, t = project_onto_axis(outputs.colors[label], R, T, plane)
        positions[label] = t
        dist[label] = abs(1.0 - t) * length
    order = sorted(LABELS, key=lambda k: (dist[k], LABELS.index(k)))
    l1, l2 = order[0], order[1]
    d1, d2 = dist[l1], dist[l2]
    c1, c2 = comps[l1], comps[l2]
    if d1 + d2 == 0.0:
        match = 0.5 * (c1 + c2)
    else:
        match = (d2 * c1 + d1 * c2) / (d1 + d2)
    _, t_match = project_onto_axis(match, R, T, plane)
    axis_coords = [positions[k] * length for k in LABELS]
    spread = max(axis_coords) - min(axis_coords)
    return MatchResult(
        match=match, t_param=t_match, chosen_pair=(l1, l2), d1=d1, d2=d2,
        cluster_spread=spread, cluster_warning=spread < cluster_threshold,
        projections=positions,
    )


def cci(match, comps: CompetitorSet, plane: str = "lab") -> float:
    """Colour Constancy Index in percent: 100 at R, 0 at T.

    Uses the signed axis coordinate, so over-constancy exceeds 100 and
    matches beyond T go negative.  Off-axis matches are projected first.
    """
    _, t = project_onto_axis(match, comps.R, comps.T, plane)
    return 100.0 * t


def delta_cci(condition: CciRecord, baseline: CciRecord) -> float:
    """Condition CCI minus baseline CCI for the same scene, illuminant and subject."""
    a = (condition.scene_id, condition.illuminant_id, condition.subject_id)
    b = (baseline.scene_id, baseline.illuminant_id, baseline.subject_id)
    if a != b:
        raise MismatchedKeys(f"records differ in (scene, illuminant, subject): {a} vs {b}")
    return condition.cci_percent - baseline.cci_percent
