"""Synthetic stereo camera and detection loss functions.

The camera sits at the body origin looking along body +x. Camera axes are
x right (body +y), y down (body +z) and z forward (body +x), so a point at
camera coordinates ``(x, y, z)`` lands on the left image at
``u = c_u + f_u x / z``, ``v = c_v + f_v y / z`` with disparity ``f_u b / z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import dynamics as dyn
from .errors import (
    BehindCamera,
    DegenerateDisparity,
    DisjointBoxes,
    DomainError,
    EmptyAnchorSet,
    NoPositiveAnchors,
)

MIN_DEPTH = 0.05

# camera axes expressed in body coordinates (rows): x_c = y_b, y_c = z_b, z_c = x_b
_BODY_TO_CAMERA = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])


@dataclass(frozen=True)
class CameraRig:
    f_u: float = 500.0
    f_v: float = 500.0
    c_u: float = 640.0
    c_v: float = 480.0
    baseline: float = 0.15
    width: int = 1280
    height: int = 960
    min_disparity: float = 0.5
    dropout: float = 0.0

    def __post_init__(self):
        if not (self.f_u > 0 and self.f_v > 0 and self.baseline > 0):
            raise ValueError("focal lengths and baseline must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        if self.min_disparity <= 0:
            raise ValueError("min_disparity must be positive")
        if not 0.0 <= self.dropout <= 1.0:
            raise ValueError("dropout must be a probability")

    def in_image(self, u: float, v: float) -> bool:
        return 0.0 <= u <= self.width and 0.0 <= v <= self.height


@dataclass(frozen=True)
class StereoObservation:
    u: float
    v: float
    disparity: float
    valid: bool = True


@dataclass(frozen=True)
class BoundingBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError("bounding box needs x1 < x2 and y1 < y2")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)


def earth_to_camera(point: ArrayLike, state: ArrayLike) -> NDArray[np.float64]:
    """Express an earth-frame point in the camera frame of a drone at ``state``."""
    s = np.asarray(state, dtype=float)
    rel = np.asarray(point, dtype=float) - s[dyn.X : dyn.Z + 1]
    body = dyn.direction_cosine(s[: dyn.PSI + 1]).T @ rel
    return _BODY_TO_CAMERA @ body


def camera_to_earth_offset(p_cam: ArrayLike, state: ArrayLike) -> NDArray[np.float64]:
    """Rotate a camera-frame vector into the earth frame (no translation)."""
    s = np.asarray(state, dtype=float)
    body = _BODY_TO_CAMERA.T @ np.asarray(p_cam, dtype=float)
    return dyn.direction_cosine(s[: dyn.PSI + 1]) @ body


def project(p_cam: ArrayLike, rig: CameraRig) -> StereoObservation:
    """Noise-free pinhole projection of a camera-frame point."""
    x, y, z = (float(c) for c in p_cam)
    if z <= MIN_DEPTH:
        raise BehindCamera(f"camera-frame depth {z:.4g} m is not in front of the rig")
    u = rig.c_u + rig.f_u * x / z
    v = rig.c_v + rig.f_v * y / z
    return StereoObservation(u, v, rig.f_u * rig.baseline / z, rig.in_image(u, v))


def observe(
    target: ArrayLike,
    state: ArrayLike,
    rig: CameraRig,
    sigma_px: float = 0.0,
    rng: np.random.Generator | None = None,
) -> StereoObservation:
    """Project an earth-frame target into the left image with pixel noise.

    Noise is drawn on ``u``, ``v`` and the disparity independently. With a
    non-zero ``rig.dropout`` the detection is randomly reported invalid.
    """
    obs = project(earth_to_camera(target, state), rig)
    u, v, disp = obs.u, obs.v, obs.disparity
    if sigma_px > 0:
        if rng is None:
            raise ValueError("an rng is required when sigma_px > 0")
        du, dv, dd = rng.standard_normal(3) * sigma_px
        u, v, disp = u + du, v + dv, disp + dd
    valid = rig.in_image(u, v)
    if rig.dropout > 0:
        if rng is None:
            raise ValueError("an rng is required when dropout > 0")
        valid = valid and rng.random() >= rig.dropout
    return StereoObservation(float(u), float(v), float(disp), bool(valid))


def reconstruct(obs: StereoObservation, rig: CameraRig) -> NDArray[np.float64]:
    """Camera-frame position of an observed pixel from its disparity."""
    if not obs.disparity > rig.min_disparity:
        raise DegenerateDisparity(
            f"disparity {obs.disparity:.4g} px is at or below {rig.min_disparity} px"
        )
    z = rig.f_u * rig.baseline / obs.disparity
    x = (obs.u - rig.c_u) * z / rig.f_u
    y = (obs.v - rig.c_v) * z / rig.f_v
    return np.array([x, y, z])


# --- detection losses -------------------------------------------------------


def focal_loss(p: float, y: int, nu_t: float = 1.0, tau: float = 0.0) -> float:
    """``-nu_t (1 - p_t)^tau log(p_t)`` with ``p_t = p`` for ``y = 1`` else ``1 - p``."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability {p!r} outside (0, 1)")
    if tau < 0 or nu_t <= 0:
        raise DomainError("need tau >= 0 and nu_t > 0")
    p_t = p if y == 1 else 1.0 - p
    return -nu_t * (1.0 - p_t) ** tau * math.log(p_t)


def _intersection(a: BoundingBox, b: BoundingBox) -> float:
    w = min(a.x2, b.x2) - max(a.x1, b.x1)
    h = min(a.y2, b.y2) - max(a.y1, b.y1)
    return w * h if (w > 0 and h > 0) else 0.0


def iou(a: BoundingBox, b: BoundingBox) -> float:
    inter = _intersection(a, b)
    return inter / (a.area + b.area - inter)


def iou_loss(pred: BoundingBox, truth: BoundingBox) -> float:
    inter = _intersection(pred, truth)
    if inter <= 0:
        raise DisjointBoxes("boxes do not overlap; IoU loss is undefined")
    # log of the ratio as a difference keeps identical boxes at exactly 0
    return math.log(pred.area + truth.area - inter) - math.log(inter)


def _positives(labels: Sequence[int]) -> int:
    return sum(1 for label in labels if label == 1)


def stc_loss(
    first_probs: Sequence[float],
    first_labels: Sequence[int],
    second_probs: Sequence[float],
    second_labels: Sequence[int],
    nu_t: float = 1.0,
    tau: float = 2.0,
) -> float:
    """Two-step classification loss: per-step focal-loss sums over positive counts.

    Each step is normalized by its number of positive anchors, floored at one
    so an all-negative step still contributes its (background) loss.
    """
    if len(first_probs) != len(first_labels) or len(second_probs) != len(second_labels):
        raise ValueError("probabilities and labels must have equal length")
    if not first_probs or not second_probs:
        raise EmptyAnchorSet("both anchor sets must be non-empty")
    total = 0.0
    for probs, labels in ((first_probs, first_labels), (second_probs, second_labels)):
        n = max(1, _positives(labels))
        total += sum(focal_loss(p, y, nu_t, tau) for p, y in zip(probs, labels)) / n
    return total


def str_loss(
    first_boxes: Sequence[BoundingBox],
    first_labels: Sequence[int],
    first_truth: Sequence[BoundingBox],
    second_boxes: Sequence[BoundingBox],
    second_labels: Sequence[int],
    second_truth: Sequence[BoundingBox],
) -> float:
    """Selective two-step regression loss: IoU losses of positive anchors only."""
    total = 0.0
    for boxes, labels, truth in (
        (first_boxes, first_labels, first_truth),
        (second_boxes, second_labels, second_truth),
    ):
        if not (len(boxes) == len(labels) == len(truth)):
            raise ValueError("boxes, labels and ground truth must have equal length")
        n = _positives(labels)
        if n == 0:
            raise NoPositiveAnchors("each step needs at least one positive anchor")
        total += sum(iou_loss(b, g) for b, g, y in zip(boxes, truth, labels) if y == 1) / n
    return total
