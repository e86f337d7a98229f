import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from _builders import make_manifest
from objectddm.metrics import (
    DIRECTION_CENTERS_DEG,
    VideoCorpus,
    compute_report,
    density_distance,
    direction_histogram,
    foveation_durations,
    gaze_density,
    histogram,
    histogram_distance,
    label_gaze,
    refoveation_stats,
    saccade_distributions,
    saccade_label_classes,
    uniformity_pvalue,
    within_object_ratio,
)
from objectddm.scene_io import EventRecord


def fov(s, e, x0, y0, x1=None, y1=None, subj="s"):
    return EventRecord("foveation", s, e, x0, y0, x0 if x1 is None else x1, y0 if y1 is None else y1, subj)


def sac(f, x0, y0, x1, y1, subj="s", f_end=None):
    return EventRecord("saccade", f, f if f_end is None else f_end, x0, y0, x1, y1, subj)


W, H, N = 40, 30, 100
MANIFEST = make_manifest(W, H, N, ids=(1, 2), px_per_dva=10.0)
MASKS = np.zeros((N, H, W), dtype=np.uint16)
MASKS[:, 0:10, 0:10] = 1     # object 1 top-left
MASKS[:, 0:10, 30:40] = 2    # object 2 top-right
IN1, IN1B, IN2, BG, BG2 = (2, 2), (8, 5), (35, 5), (20, 20), (5, 25)


class TestLabelGaze:
    def test_nearest_pixel(self):
        mask = np.zeros((3, 3), dtype=int)
        mask[0, 0] = 2
        assert label_gaze(0.4, 0.4, mask) == 2
        assert label_gaze(0.6, 0.4, mask) == 0

    def test_background(self):
        assert label_gaze(*BG, MASKS[0]) == 0

    def test_out_of_bounds(self):
        with pytest.raises(ValueError):
            label_gaze(-1, 0, MASKS[0])


class TestWithinObject:
    def test_all_within(self):
        ev = [fov(0, 5, *IN1), sac(5, *IN1, *IN1B), fov(6, 9, *IN1B), sac(9, *IN1B, *IN1)]
        assert within_object_ratio(ev, MASKS) == 1.0

    def test_background_not_counted(self):
        ev = [fov(0, 5, *BG), sac(5, *BG, *BG2), fov(6, 9, *BG2), sac(9, *BG2, *BG)]
        assert within_object_ratio(ev, MASKS) == 0.0

    def test_no_saccades(self):
        assert within_object_ratio([fov(0, 9, *BG)], MASKS) == 0.0

    def test_partition(self):
        rng = np.random.default_rng(0)
        pts = [IN1, IN1B, IN2, BG, BG2]
        ev = []
        for k in range(200):
            a, b = pts[rng.integers(5)], pts[rng.integers(5)]
            ev.append(sac(k % N, *a, *b))
        classes = saccade_label_classes(ev, MASKS)
        assert sum(classes.values()) == 200
        assert within_object_ratio(ev, MASKS) == classes["within_object"] / 200


class TestRefoveation:
    def test_return_to_first_object(self):
        ev = [fov(0, 9, *IN1), sac(9, *IN1, *IN2), fov(10, 29, *IN2), sac(29, *IN2, *IN1), fov(30, 40, *IN1)]
        r = refoveation_stats(ev, MASKS, 30.0)
        assert r["ratio"] == 0.5
        assert r["latencies_ms"] == [pytest.approx((29 - 9) / 30 * 1000)]

    def test_no_repeats(self):
        ev = [fov(0, 9, *IN1), sac(9, *IN1, *IN2), fov(10, 29, *IN2), sac(29, *IN2, *BG)]
        assert refoveation_stats(ev, MASKS, 30.0)["ratio"] == 0.0

    def test_hand_traced_sequence(self):
        # obj1 [0,4] -> bg [5,14] -> obj2 [15,19] -> obj1 (return, last left at 4) -> obj2 (return, left at 19)
        ev = [
            fov(0, 4, *IN1), sac(4, *IN1, *BG), fov(5, 14, *BG), sac(14, *BG, *IN2),
            fov(15, 19, *IN2), sac(19, *IN2, *IN1B), fov(20, 30, *IN1B), sac(30, *IN1B, *IN2),
        ]
        r = refoveation_stats(ev, MASKS, 25.0)
        assert r["latencies_ms"] == [pytest.approx(15 / 25 * 1000), pytest.approx(11 / 25 * 1000)]
        assert r["ratio"] == 0.5

    def test_within_object_is_not_refoveation(self):
        ev = [fov(0, 4, *IN1), sac(4, *IN1, *IN1B), fov(5, 9, *IN1B)]
        assert refoveation_stats(ev, MASKS, 30.0)["ratio"] == 0.0

    def test_subjects_kept_apart(self):
        ev = [fov(0, 9, *IN1, subj="a"), fov(0, 9, *IN2, subj="b"), sac(9, *IN2, *IN1, subj="b")]
        assert refoveation_stats(ev, MASKS, 30.0)["ratio"] == 0.0


class TestSaccadeDistributions:
    def test_rightward(self):
        d = saccade_distributions([sac(0, 0, 0, 10, 0)], MANIFEST)
        assert d == {"amplitudes_dva": [1.0], "directions_rad": [0.0]}

    def test_upward_and_leftward(self):
        d = saccade_distributions([sac(0, 0, 10, 0, 0), sac(0, 10, 5, 0, 5)], MANIFEST)
        assert d["directions_rad"] == [math.pi / 2, math.pi]

    def test_random_against_trigonometry(self):
        rng = np.random.default_rng(1)
        pts = rng.uniform(0, 29, (50, 4))
        d = saccade_distributions([sac(0, *p) for p in pts], MANIFEST)
        for p, amp, ang in zip(pts, d["amplitudes_dva"], d["directions_rad"]):
            dx, dy = p[2] - p[0], p[3] - p[1]
            assert amp == pytest.approx(math.sqrt(dx * dx + dy * dy) / 10.0, rel=1e-12)
            assert math.cos(ang) == pytest.approx(dx / math.sqrt(dx * dx + dy * dy), abs=1e-12)
            assert math.sin(ang) == pytest.approx(-dy / math.sqrt(dx * dx + dy * dy), abs=1e-12)


class TestDurations:
    def test_examples(self):
        assert foveation_durations([fov(0, 29, *BG)], 30.0) == [1000.0]
        assert foveation_durations([fov(3, 3, *BG)], 30.0) == [pytest.approx(33.333, abs=1e-3)]

    def test_cardinality(self):
        ev = [fov(0, 1, *BG), sac(1, *BG, *IN1), fov(2, 5, *IN1), sac(5, *IN1, *BG), fov(6, 9, *BG)]
        assert len(foveation_durations(ev, 30.0)) == 3


class TestGazeDensity:
    def test_single_hot_bin(self):
        d = gaze_density([fov(0, 9, 19.5, 14.5)], MANIFEST, 4, 3)
        assert d.sum() == 1.0 and d.max() == 1.0

    def test_uniform_positions(self):
        rng = np.random.default_rng(2)
        pts = rng.uniform(-0.5, [W - 0.5, H - 0.5], (200_000, 2)).clip(0, [W - 1, H - 1])
        events = [fov(0, 0, x, y) for x, y in pts]
        d = gaze_density(events, MANIFEST, 8, 6)
        assert np.allclose(d, 1 / 48, rtol=0.05)

    def test_interpolates_pursuit(self):
        d = gaze_density([fov(0, 3, 0.0, 0.0, 30.0, 0.0)], make_manifest(40, 10, 10), 4, 1)
        assert d.tolist() == [[0.25, 0.25, 0.25, 0.25]]

    def test_empty(self):
        with pytest.raises(ValueError, match="no samples"):
            gaze_density([], MANIFEST)


def cdf_emd(h1, h2, width=1.0):
    p = np.asarray(h1, float) / np.sum(h1)
    q = np.asarray(h2, float) / np.sum(h2)
    return float(np.sum(np.abs(np.cumsum(p) - np.cumsum(q))[:-1]) * width)


class TestHistogramDistance:
    def test_identity(self):
        h = [1, 4, 2, 0, 3]
        assert histogram_distance(h, h) == 0.0

    @pytest.mark.parametrize("k", [1, 3, 7])
    def test_shifted_deltas(self, k):
        a, b = np.zeros(8), np.zeros(8)
        a[0], b[k] = 1, 1
        assert histogram_distance(a, b) == pytest.approx(k)

    def test_random_against_cdf_formula(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a, b = rng.random(20), rng.random(20)
            assert histogram_distance(a, b, 2.5) == pytest.approx(cdf_emd(a, b, 2.5), rel=1e-9, abs=1e-12)

    def test_mismatch(self):
        with pytest.raises(ValueError, match="binning"):
            histogram_distance([1, 2], [1, 2, 3])

    @given(
        arrays(np.float64, 6, elements=st.floats(0.01, 10)),
        arrays(np.float64, 6, elements=st.floats(0.01, 10)),
        arrays(np.float64, 6, elements=st.floats(0.01, 10)),
    )
    @settings(max_examples=50)
    def test_metric_axioms(self, a, b, c):
        ab, ba = histogram_distance(a, b), histogram_distance(b, a)
        assert ab >= 0 and ab == pytest.approx(ba)
        assert ab <= histogram_distance(a, c) + histogram_distance(c, b) + 1e-9

    def test_density_distance(self):
        a, b = np.zeros((3, 4)), np.zeros((3, 4))
        a[0, 0] = b[2, 3] = 1
        assert density_distance(a, b) == pytest.approx(5.0)


class TestHistograms:
    def test_counts_sum_to_samples(self):
        vals = [-5, 0, 10, 1e9]
        assert histogram(vals, np.arange(0, 101, 10)).sum() == 4

    def test_direction_bins_centered_on_cardinals(self):
        counts = direction_histogram(np.radians([0, 4.9, 90, -90, 180, -179]))
        centers = dict(zip(DIRECTION_CENTERS_DEG.tolist(), counts.tolist()))
        assert centers[0] == 2 and centers[90] == 1 and centers[-90] == 1 and centers[180] == 2
        assert counts.sum() == 6


def test_uniformity_pvalue():
    rng = np.random.default_rng(5)
    assert uniformity_pvalue(rng.integers(3, 16, 5000), 3, 15) > 0.01
    assert uniformity_pvalue(np.clip(rng.lognormal(2, 0.5, 5000).astype(int), 3, 15), 3, 15) < 1e-6


class TestReport:
    def corpus(self):
        ev_a = [fov(0, 9, *IN1, subj="a"), sac(9, *IN1, *IN2, subj="a"), fov(10, 29, *IN2, subj="a"),
                sac(29, *IN2, *IN1, subj="a"), fov(30, 39, *IN1, subj="a")]
        ev_b = [fov(0, 19, *BG, subj="b"), sac(19, *BG, *BG2, subj="b"), fov(20, 29, *BG2, subj="b")]
        return [VideoCorpus(MANIFEST, MASKS, {"a": ev_a, "b": ev_b})]

    def test_hand_computed(self):
        r = compute_report(self.corpus())
        assert r.n_saccades_per_video == {"v": 1.5}
        assert sorted(r.foveation_durations_ms) == pytest.approx(sorted(
            [1000 / 3, 2000 / 3, 1000 / 3, 2000 / 3, 1000 / 3]))
        assert r.within_object_ratio == 0.0
        assert r.label_classes == {"within_object": 0, "cross_object": 2, "background": 1}
        assert r.refoveation_ratio == pytest.approx(1 / 3)
        assert r.refoveation_latencies_ms == [pytest.approx((29 - 9) / 30 * 1000)]
        assert r.gaze_density.sum() == pytest.approx(1.0, abs=1e-12)
        assert r.per_video["v"]["refoveation_ratio"] == pytest.approx(0.25)

    def test_histograms_sum_to_samples(self):
        r = compute_report(self.corpus())
        for name, (counts, _) in r.histograms().items():
            raw = {
                "foveation_durations_ms": r.foveation_durations_ms,
                "amplitudes_dva": r.amplitudes_dva,
                "directions_deg": r.directions_rad,
                "refoveation_latencies_ms": r.refoveation_latencies_ms,
            }[name]
            assert counts.sum() == len(raw)

    def test_permutation_invariant(self):
        (video,) = self.corpus()
        flipped = VideoCorpus(MANIFEST, MASKS, dict(reversed(list(video.scanpaths.items()))))
        a, b = compute_report([video]).to_dict(), compute_report([flipped]).to_dict()
        for key in ("within_object_ratio", "label_classes", "gaze_density", "n_saccades_per_video"):
            assert a[key] == b[key]
        assert sorted(a["foveation_durations_ms"]["raw"]) == sorted(b["foveation_durations_ms"]["raw"])
