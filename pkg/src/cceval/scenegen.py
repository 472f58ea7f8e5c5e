"""Synthetic flat-patch (Mondrian) scenes with known reflectances.

Rendering is the diagonal model ``pixel = reflectance * gain`` with
``gain = sqrt(3) * direction`` so that the neutral illuminant is the
identity and :func:`~cceval.estimators.von_kries_correct` with the true
direction inverts it exactly.

A scene is a ``rows x cols`` grid of square patches.  The achromatic target
object is an inset square inside one host patch; competitor images put a
competitor object at other host positions instead.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .colorspace import D65, WhitePoint, check_gamut, lab_to_linear, linear_to_lab
from .errors import InvariantViolation, OutOfGamut
from .psychophys import LABELS, CompetitorSet

SQRT3 = math.sqrt(3.0)

#: Default light directions (linear RGB, before normalisation).  Blue and
#: yellow sit roughly on the daylight locus, red and green across it.
DEFAULT_ILLUMINANTS = {
    "neutral": (1.0, 1.0, 1.0),
    "blue": (0.78, 0.95, 1.30),
    "yellow": (1.25, 1.0, 0.62),
    "red": (1.30, 0.85, 0.95),
    "green": (0.80, 1.15, 0.85),
}

#: Mask value for each competitor label.
LEGEND = {label: i + 1 for i, label in enumerate(LABELS)}


@dataclass(frozen=True)
class IlluminantSpec:
    name: str
    color: tuple

    def __post_init__(self):
        c = np.asarray(self.color, dtype=np.float64).reshape(3)
        if np.any(c <= 0) or not np.all(np.isfinite(c)):
            raise ValueError(f"illuminant {self.name}: channels must be positive")
        object.__setattr__(self, "color", tuple(float(x) for x in c / np.linalg.norm(c)))

    @property
    def direction(self) -> np.ndarray:
        return np.array(self.color)

    @property
    def gain(self) -> np.ndarray:
        return SQRT3 * np.array(self.color)

    @classmethod
    def named(cls, name: str, table=None) -> "IlluminantSpec":
        table = table or DEFAULT_ILLUMINANTS
        if name not in table:
            raise KeyError(f"unknown illuminant {name!r}; known: {', '.join(table)}")
        return cls(name, table[name])


NEUTRAL = IlluminantSpec.named("neutral")


@dataclass(frozen=True)
class SceneSpec:
    rows: int
    cols: int
    patch_size: int
    reflectances: tuple
    target: int
    surround: tuple = ()
    bright: int | None = None
    seed: int = 0
    target_reflectance: tuple = (0.5, 0.5, 0.5)
    inset: float = 0.5
    noise: float = 0.0

    def __post_init__(self):
        refl = np.asarray(self.reflectances, dtype=np.float64).reshape(-1, 3)
        n = self.rows * self.cols
        if refl.shape[0] != n:
            raise InvariantViolation(f"{refl.shape[0]} reflectances for a {self.rows}x{self.cols} grid")
        check_gamut(refl, upper=1.0, where="scene reflectances")
        check_gamut(self.target_reflectance, upper=1.0, where="target reflectance")
        object.__setattr__(self, "reflectances", tuple(tuple(float(v) for v in r) for r in refl))
        object.__setattr__(self, "target_reflectance", tuple(float(v) for v in self.target_reflectance))
        object.__setattr__(self, "surround", tuple(int(i) for i in self.surround))
        for idx in (self.target, *self.surround) + ((self.bright,) if self.bright is not None else ()):
            if not 0 <= idx < n:
                raise InvariantViolation(f"patch index {idx} outside grid of {n}")
        if not 0 < self.inset <= 1:
            raise InvariantViolation("inset must be in (0, 1]")

    @property
    def n_patches(self) -> int:
        return self.rows * self.cols

    @property
    def shape(self) -> tuple:
        return (self.rows * self.patch_size, self.cols * self.patch_size)

    def reflectance_array(self) -> np.ndarray:
        return np.array(self.reflectances, dtype=np.float64)

    def with_reflectances(self, refl) -> "SceneSpec":
        return replace(self, reflectances=tuple(map(tuple, np.asarray(refl))))

    def to_json(self) -> str:
        d = asdict(self)
        d["reflectances"] = [list(r) for r in self.reflectances]
        d["surround"] = list(self.surround)
        d["target_reflectance"] = list(self.target_reflectance)
        return json.dumps(d, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise InvariantViolation(f"unknown scene fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "SceneSpec":
        return cls.from_dict(json.loads(text))


def object_slice(scene: SceneSpec, patch: int):
    """Pixel slices of the inset object inside ``patch``."""
    r, c = divmod(patch, scene.cols)
    ps = scene.patch_size
    side = max(1, int(round(ps * scene.inset)))
    off = (ps - side) // 2
    return (slice(r * ps + off, r * ps + off + side), slice(c * ps + off, c * ps + off + side))


@dataclass
class Rendering:
    image: np.ndarray
    reflectance: np.ndarray
    labels: np.ndarray
    object_label: int


def reflectance_field(scene: SceneSpec, object_reflectance=None, object_patch: int | None = None):
    """(H, W, 3) reflectance field and (H, W) patch label image.

    Patch ``k`` is labelled ``k``; the inset object ``n_patches``.
    """
    ps = scene.patch_size
    refl = scene.reflectance_array().reshape(scene.rows, scene.cols, 3)
    field_ = np.repeat(np.repeat(refl, ps, axis=0), ps, axis=1)
    idx = np.arange(scene.n_patches, dtype=np.int32).reshape(scene.rows, scene.cols)
    labels = np.repeat(np.repeat(idx, ps, axis=0), ps, axis=1)
    patch = scene.target if object_patch is None else object_patch
    obj = scene.target_reflectance if object_reflectance is None else object_reflectance
    sl = object_slice(scene, patch)
    field_[sl] = np.asarray(obj, dtype=np.float64)
    labels[sl] = scene.n_patches
    return field_, labels


def render(scene: SceneSpec, illum: IlluminantSpec, object_reflectance=None,
           object_patch: int | None = None) -> Rendering:
    field_, labels = reflectance_field(scene, object_reflectance, object_patch)
    image = field_ * illum.gain
    if scene.noise > 0:
        rng = np.random.default_rng(scene.seed)
        image = np.clip(image + rng.normal(0.0, scene.noise, image.shape), 0.0, None)
    return Rendering(image, field_, labels, scene.n_patches)


class Mechanism(str, enum.Enum):
    BASELINE = "Baseline"
    LOCAL_SURROUND = "LocalSurround"
    MAXIMUM_FLUX = "MaximumFlux"
    SPATIAL_MEAN_ADD_OBJECTS = "SpatialMeanAddObjects"
    SPATIAL_MEAN_CHANGE_REFLECTANCES = "SpatialMeanChangeReflectances"


@dataclass(frozen=True)
class MechanismSpec:
    """Cue-suppression settings.

    ``surround_color``: rendered colour held by every surround patch; when
    None each patch keeps its own neutral-light colour.  ``bright_level``:
    rendered grey level of the bright patch.  ``magnitude``: Delta-E
    (a*-b*) of the scene-mean shift or of the added objects' chroma; None
    means ``fraction`` times the illuminant's own a*-b* offset.
    ``object_lightness``: L* of added objects.
    """

    kind: Mechanism = Mechanism.BASELINE
    surround_color: tuple | None = None
    bright_level: float = 0.6
    magnitude: float | None = None
    fraction: float = 1.0
    object_lightness: float = 60.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Mechanism(self.kind))

    @classmethod
    def from_dict(cls, d: dict) -> "MechanismSpec":
        return cls(**d)


def illuminant_ab_offset(illum: IlluminantSpec, wp: WhitePoint = D65, level: float = 0.5) -> np.ndarray:
    """a*, b* of a mid-grey surface under ``illum`` (zero for neutral)."""
    lab = linear_to_lab(np.full(3, level) * illum.gain, wp)
    return lab[1:]


def _constant_rendered(refl_rendered, illum, where):
    refl = np.asarray(refl_rendered, dtype=np.float64) / illum.gain
    check_gamut(refl, upper=1.0, where=where)
    return refl


def apply_mechanism(scene: SceneSpec, mech: MechanismSpec, illum: IlluminantSpec,
                    wp: WhitePoint = D65) -> SceneSpec:
    """Return a scene whose rendering under ``illum`` lacks one constancy cue."""
    kind = mech.kind
    if kind is Mechanism.BASELINE:
        return scene
    refl = scene.reflectance_array()

    if kind is Mechanism.LOCAL_SURROUND:
        if not scene.surround:
            raise InvariantViolation("LocalSurround needs surround patch indices")
        for s in scene.surround:
            const = refl[s] if mech.surround_color is None else np.asarray(mech.surround_color)
            refl[s] = _constant_rendered(const, illum, f"surround patch {s}")
        return scene.with_reflectances(refl)

    if kind is Mechanism.MAXIMUM_FLUX:
        if scene.bright is None:
            raise InvariantViolation("MaximumFlux needs a bright patch index")
        refl[scene.bright] = _constant_rendered(np.full(3, mech.bright_level), illum,
                                                f"bright patch {scene.bright}")
        return scene.with_reflectances(refl)

    offset = illuminant_ab_offset(illum, wp)
    norm = float(np.linalg.norm(offset))
    unit = offset / norm if norm > 0 else np.zeros(2)
    magnitude = mech.fraction * norm if mech.magnitude is None else float(mech.magnitude)

    if kind is Mechanism.SPATIAL_MEAN_ADD_OBJECTS:
        lab = np.array([mech.object_lightness, *(-magnitude * unit)])
        rendered = lab_to_linear(lab, wp)
        check_gamut(rendered, where="added object colour")
        new = _constant_rendered(rendered, illum, "added object")
        added = np.repeat(new[None, :], scene.cols, axis=0)
        return replace(scene, rows=scene.rows + 1,
                       reflectances=tuple(map(tuple, np.vstack([refl, added]))))

    if kind is Mechanism.SPATIAL_MEAN_CHANGE_REFLECTANCES:
        return _shift_scene_mean(scene, illum, -magnitude * unit, wp)

    raise ValueError(f"unknown mechanism {kind}")


def _shift_scene_mean(scene: SceneSpec, illum: IlluminantSpec, d_ab, wp: WhitePoint) -> SceneSpec:
    # Per-channel rescaling of every patch (object untouched) so the
    # rendered mean lands exactly on the shifted Lab target.
    field_, labels = reflectance_field(scene)
    rendered = field_ * illum.gain
    n = labels.size
    mean_lab = linear_to_lab(rendered.reshape(-1, 3).mean(axis=0), wp)
    goal = lab_to_linear(mean_lab + np.array([0.0, *d_ab]), wp)
    is_obj = labels == scene.n_patches
    obj_sum = rendered[is_obj].sum(axis=0)
    patch_sum = rendered[~is_obj].sum(axis=0)
    if np.any(patch_sum <= 0):
        raise OutOfGamut("scene has an all-zero channel; cannot rescale", where="scene mean")
    k = (goal * n - obj_sum) / patch_sum
    new = scene.reflectance_array() * k
    for i, r in enumerate(new):
        check_gamut(r, upper=1.0, where=f"patch {i}")
    return scene.with_reflectances(new)


def competitor_reflectances(comps: CompetitorSet, wp: WhitePoint = D65) -> dict:
    """Linear reflectance for each competitor's CIELAB (neutral-light) colour."""
    out = {}
    for label in LABELS:
        out[label] = check_gamut(lab_to_linear(comps[label], wp), upper=1.0, atol=1e-9,
                                 where=f"competitor {label}")
        out[label] = np.clip(out[label], 0.0, 1.0)
    return out


def make_competitor_set(target_reflectance, illum: IlluminantSpec, wp: WhitePoint = D65,
                        over: float = 1.0 / 3.0, **ids) -> tuple:
    """Competitors for an achromatic target under ``illum``.

    R shares the target reflectance.  T reflects, under ``illum``, the light
    the target reflects under neutral light.  S1, S2 split R-T in thirds in
    CIELAB; O lies beyond R by ``over`` of the R-T length.

    Returns ``(CompetitorSet, {label: linear reflectance})``.
    """
    target = np.asarray(target_reflectance, dtype=np.float64)
    t_refl = target / illum.gain
    check_gamut(t_refl, upper=1.0, where="tristimulus competitor")
    comps = CompetitorSet.equally_spaced(linear_to_lab(target, wp), linear_to_lab(t_refl, wp),
                                         over=over, illuminant_id=illum.name, **ids)
    refl = competitor_reflectances(comps, wp)
    refl["R"] = target
    refl["T"] = t_refl
    return comps, refl


@dataclass
class CompetitorImage:
    label: str
    position: int
    image: np.ndarray
    mask: np.ndarray
    reflectance: np.ndarray = field(repr=False)


def competitor_scene_set(scene: SceneSpec, comps, positions, illum: IlluminantSpec,
                         wp: WhitePoint = D65) -> list:
    """One rendering per (competitor, position) with the object carrying the
    competitor's reflectance.  Masks hold :data:`LEGEND` values."""
    refl = comps if isinstance(comps, dict) else competitor_reflectances(comps, wp)
    for p in positions:
        if not 0 <= p < scene.n_patches:
            raise InvariantViolation(f"position {p} outside grid")
    out = []
    for label in LABELS:
        for p in positions:
            r = render(scene, illum, refl[label], p)
            mask = np.where(r.labels == r.object_label, LEGEND[label], 0).astype(np.uint8)
            out.append(CompetitorImage(label, p, r.image, mask, r.reflectance))
    return out


def random_scene(rows: int = 6, cols: int = 6, patch_size: int = 12, seed: int = 0,
                 low: float = 0.15, high: float = 0.75, gray: float = 0.9,
                 target_reflectance=(0.5, 0.5, 0.5), **kw) -> SceneSpec:
    """Random Mondrian whose mean reflectance is achromatic.

    Patches come in complementary pairs ``r`` and ``gray - r`` so every
    pair averages to ``gray / 2``; with an odd count the leftover patch is
    exactly ``gray / 2``.  The target's host patch (and its partner) is
    ``gray / 2`` so the grey inset object keeps the mean achromatic.
    """
    rng = np.random.default_rng(seed)
    n = rows * cols
    half = n // 2
    base = rng.uniform(max(low, gray - high), min(high, gray - low), size=(half, 3))
    refl = np.empty((n, 3))
    order = rng.permutation(n)
    refl[order[:half]] = base
    refl[order[half:2 * half]] = gray - base
    if n % 2:
        refl[order[-1]] = gray / 2
    kw.setdefault("target", n // 2 + cols // 2 if rows > 1 else n // 2)
    # the inset object covers part of its host patch: keep host and partner
    # grey so the scene mean stays achromatic
    pos = int(np.flatnonzero(order == kw["target"])[0])
    if pos < 2 * half:
        partner = order[(pos + half) % (2 * half)] if pos < half else order[pos - half]
        refl[[kw["target"], partner]] = gray / 2
    return SceneSpec(rows, cols, patch_size, tuple(map(tuple, refl)), seed=seed,
                     target_reflectance=tuple(target_reflectance), **kw)


def neighbours(scene: SceneSpec, patch: int, radius: int = 1) -> tuple:
    r0, c0 = divmod(patch, scene.cols)
    out = []
    for r in range(max(0, r0 - radius), min(scene.rows, r0 + radius + 1)):
        for c in range(max(0, c0 - radius), min(scene.cols, c0 + radius + 1)):
            if (r, c) != (r0, c0):
                out.append(r * scene.cols + c)
    return tuple(out)


def standard_battery(seed: int = 0, size: int = 7, patch_size: int = 12,
                     low: float = 0.35, high: float = 0.55):
    """Mechanism test scene and its object positions.

    Centre target ringed by alternating dark/light grey surround patches
    (strong achromatic edges, small area), one grey bright patch that
    MaximumFlux replaces, an auxiliary near-white patch that stays bright,
    and complementary random pairs elsewhere, so the mean reflectance is
    achromatic.  Grey levels stay below the smallest default illuminant
    gain so every mechanism is in gamut for the default lights.
    """
    n = size * size
    target = n // 2
    base = random_scene(size, size, patch_size, seed=seed, low=0.15, high=0.75, gray=0.9,
                        target=target)
    refl = base.reflectance_array()
    probe = replace(base, surround=())
    ring = neighbours(probe, target)
    bright, aux = 0, n - 1
    fixed = set(ring) | {target, bright, aux}
    # re-pair the free patches so their mean stays at 0.45 grey
    free = [i for i in range(n) if i not in fixed]
    rng = np.random.default_rng(seed + 1)
    half = len(free) // 2
    pick = rng.uniform(low, high, size=(half, 3))
    refl[free[:half]] = pick
    refl[free[half:2 * half]] = 0.9 - pick
    if len(free) % 2:
        refl[free[-1]] = 0.45
    for i, s in enumerate(ring):
        refl[s] = 0.05 if i % 2 else 0.6
    refl[target] = 0.45
    refl[bright] = 0.55
    refl[aux] = 0.7
    scene = replace(base.with_reflectances(refl), surround=ring, bright=bright)
    return scene, (target,)


def battery_mechanisms() -> dict:
    """Mechanism settings paired with :func:`standard_battery`.

    The bright level stays below the auxiliary patch's rendering under
    every default light; the mean shift is half the illuminant offset so
    rescaled reflectances stay in gamut.
    """
    M = Mechanism
    return {
        M.BASELINE: MechanismSpec(M.BASELINE),
        M.LOCAL_SURROUND: MechanismSpec(M.LOCAL_SURROUND),
        M.MAXIMUM_FLUX: MechanismSpec(M.MAXIMUM_FLUX, bright_level=0.4),
        M.SPATIAL_MEAN_ADD_OBJECTS: MechanismSpec(M.SPATIAL_MEAN_ADD_OBJECTS),
        M.SPATIAL_MEAN_CHANGE_REFLECTANCES: MechanismSpec(M.SPATIAL_MEAN_CHANGE_REFLECTANCES, fraction=0.5),
    }
