from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadpida import dynamics as dyn
from quadpida.errors import (
    BehindCamera,
    DegenerateDisparity,
    DisjointBoxes,
    DomainError,
    EmptyAnchorSet,
    NoPositiveAnchors,
)
from quadpida.perception import (
    BoundingBox,
    CameraRig,
    StereoObservation,
    camera_to_earth_offset,
    earth_to_camera,
    focal_loss,
    iou,
    iou_loss,
    observe,
    project,
    reconstruct,
    stc_loss,
    str_loss,
)

from . import oracles

RIG = CameraRig(f_u=1000.0, f_v=1000.0, c_u=640.0, c_v=480.0, baseline=0.15)


def test_rig_validation():
    with pytest.raises(ValueError):
        CameraRig(baseline=0.0)
    with pytest.raises(ValueError):
        CameraRig(f_u=-1.0)
    with pytest.raises(ValueError):
        CameraRig(dropout=1.5)
    assert CameraRig().baseline == 0.15


def test_on_axis_target_at_two_metres():
    obs = project((0.0, 0.0, 2.0), RIG)
    assert (obs.u, obs.v, obs.valid) == (640.0, 480.0, True)
    assert obs.disparity == pytest.approx(75.0, abs=1e-12)
    assert np.allclose(reconstruct(obs, RIG), (0.0, 0.0, 2.0), atol=1e-15)


def test_projection_matches_stereo_pair_oracle():
    rng = np.random.default_rng(12)
    for _ in range(100):
        p = np.r_[rng.uniform(-1, 1, 2), rng.uniform(0.5, 20)]
        obs = project(p, RIG)
        uL, vL, disp = oracles.stereo_pixels(p, 1000, 1000, 640, 480, 0.15)
        assert (obs.u, obs.v) == pytest.approx((uL, vL), abs=1e-9)
        assert obs.disparity == pytest.approx(disp, rel=1e-12)


def test_behind_camera_and_degenerate_disparity():
    with pytest.raises(BehindCamera):
        project((0.0, 0.0, 0.01), RIG)
    with pytest.raises(DegenerateDisparity):
        reconstruct(StereoObservation(640, 480, RIG.min_disparity, True), RIG)


def test_disparity_inverse_depth():
    assert project((0, 0, 4.0), RIG).disparity == pytest.approx(project((0, 0, 2.0), RIG).disparity / 2)


def test_camera_looks_along_body_x():
    state = dyn.hover_state((0.0, 0.0, -2.0))
    assert np.allclose(earth_to_camera((3.0, 0.0, -2.0), state), (0.0, 0.0, 3.0))
    # body y (right) maps to image u, body z (down) maps to image v
    assert np.allclose(earth_to_camera((3.0, 1.0, -1.0), state), (1.0, 1.0, 3.0))


def test_noiseless_round_trip_over_random_poses():
    rng = np.random.default_rng(13)
    worst = 0.0
    for _ in range(1000):
        state = np.zeros(12)
        state[:3] = rng.uniform([-0.5, -0.5, -np.pi], [0.5, 0.5, np.pi])
        state[9:] = rng.uniform(-10, 10, 3)
        p_cam = np.r_[rng.uniform(-1, 1, 2), rng.uniform(0.5, 20)]
        target = state[9:] + camera_to_earth_offset(p_cam, state)
        obs = observe(target, state, RIG)
        back = state[9:] + camera_to_earth_offset(reconstruct(obs, RIG), state)
        worst = max(worst, float(np.linalg.norm(back - target)))
    assert worst < 1e-9


def test_depth_noise_grows_quadratically():
    rng = np.random.default_rng(14)
    state = dyn.hover_state()

    def depth_std(z):
        zs = [reconstruct(observe((z, 0, 0), state, RIG, 0.5, rng), RIG)[2] for _ in range(4000)]
        return np.std(zs)

    assert depth_std(4.0) / depth_std(2.0) == pytest.approx(4.0, rel=0.15)


def test_noise_requires_rng_and_dropout():
    with pytest.raises(ValueError):
        observe((2, 0, 0), dyn.hover_state(), RIG, sigma_px=1.0)
    rig = CameraRig(dropout=1.0)
    assert not observe((2, 0, 0), dyn.hover_state(), rig, rng=np.random.default_rng(0)).valid


def test_out_of_frame_is_invalid():
    assert not project((30.0, 0.0, 2.0), RIG).valid


def test_focal_loss_values():
    assert focal_loss(0.7, 1) == pytest.approx(-math.log(0.7), abs=1e-12)
    assert focal_loss(0.7, -1) == pytest.approx(-math.log(0.3), abs=1e-12)
    assert focal_loss(0.9, 1, 0.25, 2.0) == pytest.approx(0.25 * 0.01 * -math.log(0.9), rel=1e-12)
    assert focal_loss(0.9, 1, 0.25, 2.0) == pytest.approx(2.634e-4, rel=1e-3)
    assert focal_loss(1 - 1e-12, 1) < 1e-11


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_focal_loss_domain(p):
    with pytest.raises(DomainError):
        focal_loss(p, 1)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_focal_loss_monotone_and_focusing_ratio(p1, p2):
    lo, hi = sorted((p1, p2))
    assert focal_loss(hi, 1, tau=2) <= focal_loss(lo, 1, tau=2)
    assert focal_loss(p1, 1, tau=2) / focal_loss(p1, 1, tau=0) == pytest.approx((1 - p1) ** 2, rel=1e-12)


def test_iou_values():
    a = BoundingBox(0, 0, 1, 1)
    assert iou_loss(a, BoundingBox(0, 0, 1, 1)) == 0.0
    half = BoundingBox(0.5, 0, 1.5, 1)
    assert iou(a, half) == pytest.approx(oracles.box_iou((0, 0, 1, 1), (0.5, 0, 1.5, 1)))
    assert iou_loss(a, half) == pytest.approx(math.log(3), abs=1e-12)
    with pytest.raises(DisjointBoxes):
        iou_loss(a, BoundingBox(2, 2, 3, 3))
    with pytest.raises(ValueError):
        BoundingBox(1, 0, 0, 1)


boxes = st.tuples(st.floats(0, 10), st.floats(0, 10), st.floats(0.5, 5), st.floats(0.5, 5)).map(
    lambda t: BoundingBox(t[0], t[1], t[0] + t[2], t[1] + t[3])
)


@settings(max_examples=200, deadline=None)
@given(boxes, boxes)
def test_iou_loss_symmetric_and_non_negative(a, b):
    try:
        la = iou_loss(a, b)
    except DisjointBoxes:
        with pytest.raises(DisjointBoxes):
            iou_loss(b, a)
        return
    assert la >= 0
    assert la == pytest.approx(iou_loss(b, a), abs=1e-12)
    assert la == pytest.approx(-math.log(oracles.box_iou(
        (a.x1, a.y1, a.x2, a.y2), (b.x1, b.y1, b.x2, b.y2))), abs=1e-9)


def test_stc_loss():
    assert stc_loss([1 - 1e-12], [1], [1 - 1e-12], [1]) < 1e-20
    p1, p2 = 0.8, 0.3
    want = (focal_loss(p1, 1, tau=2) + focal_loss(p2, -1, tau=2)) / 1 + focal_loss(0.6, 1, tau=2) / 1
    assert stc_loss([p1, p2], [1, -1], [0.6], [1]) == pytest.approx(want, rel=1e-12)
    with pytest.raises(EmptyAnchorSet):
        stc_loss([0.5], [1], [], [])


def test_str_loss():
    a = BoundingBox(0, 0, 1, 1)
    third = BoundingBox(0.5, 0, 1.5, 1)
    half = BoundingBox(0, 0, 1, 0.5)
    assert str_loss([a], [1], [a], [a], [1], [a]) == 0.0
    got = str_loss([a, a], [1, 1], [third, half], [a, a], [1, -1], [a, third])
    assert got == pytest.approx((math.log(3) + math.log(2)) / 2, abs=1e-12)
    with pytest.raises(NoPositiveAnchors):
        str_loss([a], [-1], [a], [a], [1], [a])
