import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import flood_fill_components
from vigil.detect import (
    BackgroundModel,
    GeometryMismatch,
    MotionDetector,
    Region,
    connected_components,
    make_detector,
    motion_mask,
    propose_vehicles,
    register_detector,
    update_background,
)
from vigil.imaging import BitMask, Frame, GrayFrame

rng = np.random.default_rng(11)


def gray(arr):
    return GrayFrame(np.asarray(arr, dtype=np.uint8))


def test_update_alpha_one_replaces():
    model = BackgroundModel(np.zeros((2, 2)), alpha=1.0)
    g = gray(np.full((2, 2), 200))
    assert np.all(update_background(model, g).mean == 200.0)


def test_update_alpha_half():
    model = BackgroundModel(np.full((1, 1), 100.0), alpha=0.5)
    out = update_background(model, gray([[200]]))
    assert out.mean[0, 0] == pytest.approx(150.0)


def test_update_converges_to_constant_stream():
    model = BackgroundModel(np.zeros((3, 3)), alpha=0.2)
    g = gray(np.full((3, 3), 80))
    dist = 80.0
    for _ in range(30):
        model = update_background(model, g)
        new_dist = float(np.abs(model.mean - 80).max())
        assert new_dist <= dist
        dist = new_dist
    assert dist < 1.0


def test_update_geometry_mismatch():
    with pytest.raises(GeometryMismatch):
        update_background(BackgroundModel(np.zeros((2, 2)), 0.5), gray(np.zeros((3, 2))))


def test_motion_mask_zero_when_equal():
    px = rng.integers(0, 256, size=(6, 6)).astype(np.uint8)
    model = BackgroundModel(px.astype(float), 0.1)
    assert motion_mask(model, gray(px), 1).count() == 0


def test_motion_mask_single_pixel():
    model = BackgroundModel(np.zeros((4, 4)), 0.1)
    px = np.zeros((4, 4), dtype=np.uint8)
    px[2, 3] = 255
    mask = motion_mask(model, gray(px), 50)
    assert mask.count() == 1
    assert mask.bits[2, 3]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 80))
def test_motion_mask_matches_per_pixel_oracle(seed, threshold):
    r = np.random.default_rng(seed)
    bg = r.uniform(0, 255, size=(9, 7))
    px = r.integers(0, 256, size=(9, 7)).astype(np.uint8)
    mask = motion_mask(BackgroundModel(bg, 0.5), gray(px), threshold)
    expect = np.abs(px.astype(float) - bg) >= threshold
    assert np.array_equal(mask.bits, expect)


# ---------------------------------------------------------------------------
# connected components
# ---------------------------------------------------------------------------

def test_components_empty_mask():
    assert connected_components(BitMask(np.zeros((5, 5), dtype=bool))) == []


def test_components_diagonal_touch_is_one():
    bits = np.zeros((4, 4), dtype=bool)
    bits[1, 1] = bits[2, 2] = True
    regions = connected_components(BitMask(bits))
    assert len(regions) == 1
    assert regions[0].area == 2
    assert (regions[0].bbox.x, regions[0].bbox.y, regions[0].bbox.w, regions[0].bbox.h) == (1, 1, 2, 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_components_match_flood_fill_oracle(seed):
    bits = np.random.default_rng(seed).random((32, 32)) < 0.35
    regions = connected_components(BitMask(bits))
    oracle = flood_fill_components(bits)
    assert len(regions) == len(oracle)
    # same component pixel sets: compare each region's (area, bbox) multiset
    def bbox_of(pixels):
        xs = [p[0] for p in pixels]
        ys = [p[1] for p in pixels]
        return (min(xs), min(ys), max(xs) - min(xs) + 1, max(ys) - min(ys) + 1)

    got = sorted((r.area, r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h) for r in regions)
    want = sorted((len(p),) + bbox_of(p) for p in oracle)
    assert got == want
    # ordering contract: descending area, ties by bbox (y, x)
    keys = [(-r.area, r.bbox.y, r.bbox.x) for r in regions]
    assert keys == sorted(keys)
    # area conservation
    assert sum(r.area for r in regions) == int(bits.sum())


# ---------------------------------------------------------------------------
# proposals
# ---------------------------------------------------------------------------

def blob_mask(w=64, h=64, x=10, y=20, bw=40, bh=20):
    bits = np.zeros((h, w), dtype=bool)
    bits[y : y + bh, x : x + bw] = True
    return BitMask(bits)


def test_propose_accepts_plausible_blob():
    regions = propose_vehicles(blob_mask(), min_area=100, aspect=(0.5, 4.0), margin=0)
    assert len(regions) == 1
    assert regions[0].area == 800


def test_propose_min_area_excludes():
    assert propose_vehicles(blob_mask(), min_area=1000) == []


def test_propose_aspect_excludes():
    mask = blob_mask(w=128, bw=100, bh=10)  # ratio 10
    assert propose_vehicles(mask, min_area=100, aspect=(0.5, 4.0)) == []


def test_propose_dilation_clamped_to_frame():
    mask = blob_mask(x=0, y=0, bw=20, bh=10)
    (region,) = propose_vehicles(mask, min_area=50, aspect=(0.5, 4.0), margin=6)
    assert region.bbox.x == 0 and region.bbox.y == 0
    assert region.bbox.x2 <= mask.width and region.bbox.y2 <= mask.height


def test_propose_invalid_aspect_bounds():
    with pytest.raises(ValueError):
        propose_vehicles(blob_mask(), aspect=(4.0, 0.5))


# ---------------------------------------------------------------------------
# detector plug
# ---------------------------------------------------------------------------

def test_motion_detector_needs_warmup_frame():
    det = MotionDetector()
    scene = Frame.filled(64, 64, (40, 40, 40))
    assert det.detect(scene) == []  # first frame seeds the background
    moved = scene.copy()
    moved.pixels[20:40, 10:50] = (230, 230, 230)
    regions = det.detect(moved)
    assert len(regions) == 1


def test_detector_plug_resolution():
    assert isinstance(make_detector("motion"), MotionDetector)
    calls = []

    class Stub:
        def detect(self, frame):
            calls.append(frame)
            return []

    register_detector("stub", Stub)
    det = make_detector("external:stub")
    det.detect(Frame.filled(2, 2))
    assert len(calls) == 1
    with pytest.raises(KeyError):
        make_detector("external:missing")
    with pytest.raises(ValueError):
        make_detector("nonsense")


def test_background_fixed_point_mask_empty():
    px = rng.integers(0, 200, size=(8, 8)).astype(np.uint8)
    model = BackgroundModel(px.astype(float), 0.3)
    assert motion_mask(model, gray(np.round(model.mean)), 1).count() == 0
