import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.exceptions import NotFittedError

from pwfiber.constellation import build_qam
from pwfiber.detect import (MinimumDistanceDetector, ParzenWindowDetector,
                            TrainingSet, decision_regions, optimize_window,
                            window_weight)


def brute_force_pw(test, train_symbols, train_labels, radius, cap=1e12):
    """Direct transliteration of the window/metric/argmax rule, O(n*T*M)."""
    n_clusters = int(max(train_labels))
    out = np.empty(len(test), dtype=np.int64)
    for k, y in enumerate(test):
        scores = np.zeros(n_clusters)
        for t, (x, m) in enumerate(zip(train_symbols, train_labels)):
            d = abs(y - x)
            if d <= radius:
                scores[m - 1] += cap if d == 0 else min(1.0 / d, cap)
        if scores.max() == 0.0:
            dists = [abs(y - x) for x in train_symbols]
            out[k] = train_labels[int(np.argmin(dists))]
        else:
            out[k] = int(np.argmax(scores)) + 1
    return out


class TestWindowWeight:
    def test_boundary_included(self):
        assert window_weight(0.5, 0.5) == pytest.approx(2.0)

    def test_outside_is_zero(self):
        assert window_weight(1.0, 0.5) == 0.0

    def test_zero_distance_capped(self):
        assert window_weight(0.0, 0.5) == 1e12

    def test_vectorized(self):
        d = np.array([0.0, 0.1, 0.5, 0.6])
        w = window_weight(d, 0.5)
        assert np.allclose(w, [1e12, 10.0, 2.0, 0.0])

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            window_weight(0.1, 0.0)
        with pytest.raises(ValueError):
            window_weight(-0.1, 0.5)


class TestMinimumDistance:
    def setup_method(self):
        self.c = build_qam(16)
        self.det = MinimumDistanceDetector(self.c)

    def test_exact_points(self):
        labels = self.det.predict(self.c.points)
        assert np.array_equal(labels, np.arange(1, 17))

    def test_tie_breaks_to_lower_label(self):
        midpoint = 0.5 * (self.c.points[0] + self.c.points[1])
        assert self.det.predict(np.array([midpoint]))[0] == 1

    def test_distance_scaling_invariance(self):
        """Any positive scaling of all distances preserves the argmin labels."""
        rng = np.random.default_rng(0)
        y = rng.normal(size=200) + 1j * rng.normal(size=200)
        base = self.det.predict(y)
        for s in (0.5, 3.0, 1e6):
            scaled = np.argmin(s * np.abs(y[:, None] - self.c.points[None, :]),
                               axis=1) + 1
            assert np.array_equal(scaled, base)

    def test_awgn_ber_tracks_analytic(self):
        from pwfiber.metrics import awgn_gray_qam_ber, count_errors
        from pwfiber.constellation import generate_frame
        esn0_db = 14.0
        n = 300_000
        frame = generate_frame(self.c, 1, n + 1, seed=3)
        rng = np.random.default_rng(5)
        sigma = np.sqrt(10 ** (-esn0_db / 10) / 2)
        rx = frame.symbols + sigma * (rng.normal(size=frame.symbols.shape)
                                      + 1j * rng.normal(size=frame.symbols.shape))
        est = np.stack([self.det.predict(rx[p, 1:]) for p in range(2)])
        report = count_errors(est, frame, self.c)
        expected = awgn_gray_qam_ber(16, esn0_db)
        assert report.ber == pytest.approx(expected, rel=0.1)

    def test_requires_constellation(self):
        with pytest.raises(ValueError):
            MinimumDistanceDetector().predict(np.array([1 + 1j]))


class TestParzenWindow:
    def test_single_training_point(self):
        det = ParzenWindowDetector(radius=0.5).fit(np.array([1.0 + 0j]), [3])
        assert det.predict(np.array([1.1 + 0j]))[0] == 3

    def test_two_cluster_hand_example(self):
        train = np.array([0.9 + 0j, 1.1 + 0j, 0 + 0.9j, 0 + 1.1j])
        labels = [1, 1, 2, 2]
        det = ParzenWindowDetector(radius=0.3).fit(train, labels)
        assert det.predict(np.array([0.95 + 0.05j]))[0] == 1

    def test_zero_distance_dominates(self):
        train = np.array([0.5 + 0j, 0.52 + 0j, 0.54 + 0j, 1j])
        det = ParzenWindowDetector(radius=2.0).fit(train, [2, 2, 2, 7])
        assert det.predict(np.array([1j]))[0] == 7

    def test_empty_window_fallback_flagged(self):
        det = ParzenWindowDetector(radius=0.1).fit(
            np.array([0 + 0j, 5 + 0j]), [1, 2])
        result = det.detect(np.array([2.6 + 0j, 0.05 + 0j]))
        assert result.fallback[0] and not result.fallback[1]
        assert result.labels[0] == 2      # nearest training symbol
        assert result.fallback_count == 1

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            ParzenWindowDetector().predict(np.array([0j]))

    def test_empty_training_rejected(self):
        with pytest.raises(ValueError):
            ParzenWindowDetector().fit(np.array([]), [])

    def test_few_training_symbols_warns(self):
        with pytest.warns(UserWarning, match="training symbols"):
            TrainingSet(symbols=np.array([0j, 1j]), labels=np.array([1, 16]))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(42)
        for _ in range(60):
            t = rng.integers(2, 50)
            m = rng.integers(2, 16)
            train = rng.normal(size=t) + 1j * rng.normal(size=t)
            labels = rng.integers(1, m + 1, size=t)
            labels[0] = m  # ensure max label present
            test = rng.normal(size=30) + 1j * rng.normal(size=30)
            radius = float(rng.uniform(0.05, 2.0))
            det = ParzenWindowDetector(radius=radius).fit(train, labels)
            got = det.predict(test)
            want = brute_force_pw(test, train, labels, radius)
            assert np.array_equal(got, want)

    def test_chunking_invariance(self):
        rng = np.random.default_rng(1)
        train = rng.normal(size=200) + 1j * rng.normal(size=200)
        labels = rng.integers(1, 17, size=200)
        test = rng.normal(size=500) + 1j * rng.normal(size=500)
        a = ParzenWindowDetector(radius=0.4, chunk_size=7).fit(train, labels)
        b = ParzenWindowDetector(radius=0.4, chunk_size=4096).fit(train, labels)
        assert np.array_equal(a.predict(test), b.predict(test))

    @settings(max_examples=40, deadline=None)
    @given(st.floats(min_value=-np.pi, max_value=np.pi))
    def test_rotation_invariance(self, theta):
        rng = np.random.default_rng(9)
        train = rng.normal(size=80) + 1j * rng.normal(size=80)
        labels = rng.integers(1, 9, size=80)
        test = rng.normal(size=60) + 1j * rng.normal(size=60)
        rot = np.exp(1j * theta)
        base = ParzenWindowDetector(radius=0.5).fit(train, labels).predict(test)
        rotated = ParzenWindowDetector(radius=0.5).fit(
            train * rot, labels).predict(test * rot)
        assert np.array_equal(base, rotated)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(min_value=0.01, max_value=100.0))
    def test_scale_covariance(self, scale):
        rng = np.random.default_rng(10)
        train = rng.normal(size=80) + 1j * rng.normal(size=80)
        labels = rng.integers(1, 9, size=80)
        test = rng.normal(size=60) + 1j * rng.normal(size=60)
        base = ParzenWindowDetector(radius=0.5).fit(train, labels).predict(test)
        scaled = ParzenWindowDetector(radius=0.5 * scale).fit(
            train * scale, labels).predict(test * scale)
        assert np.array_equal(base, scaled)

    def test_infinite_radius_is_weighted_vote(self):
        rng = np.random.default_rng(11)
        train = rng.normal(size=100) + 1j * rng.normal(size=100)
        labels = rng.integers(1, 10, size=100)
        labels[:9] = np.arange(1, 10)  # every cluster represented
        test = rng.normal(size=200) + 1j * rng.normal(size=200)
        got = ParzenWindowDetector(radius=1e9).fit(train, labels).predict(test)
        want = brute_force_pw(test, train, labels, 1e9)
        assert np.array_equal(got, want)

    def test_agrees_with_md_on_clean_awgn(self):
        """Well-separated Gaussian clusters: PW and MD nearly coincide."""
        c = build_qam(16)
        rng = np.random.default_rng(12)
        sigma = 0.05  # Es/N0 = 26 dB
        t_labels = rng.integers(1, 17, size=2000)
        train = c.points[t_labels - 1] + sigma * (
            rng.normal(size=2000) + 1j * rng.normal(size=2000)) / np.sqrt(2)
        y_labels = rng.integers(1, 17, size=20000)
        test = c.points[y_labels - 1] + sigma * (
            rng.normal(size=20000) + 1j * rng.normal(size=20000)) / np.sqrt(2)
        pw = ParzenWindowDetector(radius=0.3).fit(train, t_labels).predict(test)
        md = MinimumDistanceDetector(c).predict(test)
        assert np.mean(pw == md) > 0.999

    def test_decision_function_shape(self):
        rng = np.random.default_rng(13)
        det = ParzenWindowDetector(radius=0.6).fit(
            rng.normal(size=50) + 1j * rng.normal(size=50),
            rng.integers(1, 5, size=50))
        scores = det.decision_function(rng.normal(size=9) + 1j * np.zeros(9))
        assert scores.shape == (9, 4)


class TestOptimizeWindow:
    def test_single_element_grid(self):
        c = build_qam(4)
        rng = np.random.default_rng(0)
        labels = rng.integers(1, 5, size=200)
        sym = c.points[labels - 1] + 0.1 * (rng.normal(size=200)
                                            + 1j * rng.normal(size=200))
        train = TrainingSet(symbols=sym[:100], labels=labels[:100])
        best = optimize_window(sym[100:], labels[100:], train, [0.37], c)
        assert best == 0.37

    def test_empty_grid_rejected(self):
        c = build_qam(4)
        train = TrainingSet(symbols=np.array([0j, 1j, 1 + 0j, 1 + 1j]),
                            labels=np.array([1, 2, 3, 4]))
        with pytest.raises(ValueError, match="grid"):
            optimize_window(np.array([0j]), [1], train, [], c)

    def test_awgn_flat_above_noise_scale(self):
        """Pure AWGN: BER(R) is flat (within noise) once R > ~2 sigma."""
        c = build_qam(16)
        rng = np.random.default_rng(3)
        sigma = 0.2  # Es/N0 = 14 dB: BER ~ 7e-3, well measurable
        n = 50000
        labels = rng.integers(1, 17, size=n)
        sym = c.points[labels - 1] + sigma * (
            rng.normal(size=n) + 1j * rng.normal(size=n)) / np.sqrt(2)
        train = TrainingSet(symbols=sym[:2000], labels=labels[:2000])
        from pwfiber.detect import _pw_classify, ZERO_DISTANCE_WEIGHT
        from pwfiber.constellation import labels_to_bits
        grid = [0.45, 0.5, 0.6, 0.7]  # all above 2 sigma
        est, _, _ = _pw_classify(sym[2000:], train, grid, ZERO_DISTANCE_WEIGHT, 4096)
        truth_bits = labels_to_bits(c, labels[2000:])
        bers = np.array([np.mean(labels_to_bits(c, e) != truth_bits) for e in est])
        assert bers.min() > 0
        assert bers.max() - bers.min() < 0.25 * bers.mean()


class TestDecisionRegions:
    def test_raster_shape_and_extent(self):
        c = build_qam(16)
        rng = np.random.default_rng(4)
        labels = rng.integers(1, 17, size=500)
        sym = c.points[labels - 1] + 0.05 * (rng.normal(size=500)
                                             + 1j * rng.normal(size=500))
        det = ParzenWindowDetector(radius=0.4).fit(sym, labels)
        grid = decision_regions(det, extent=1.6, resolution=41)
        assert grid.shape == (41 * 41, 3)
        assert grid[:, 0].min() == -1.6 and grid[:, 0].max() == 1.6
        assert set(np.unique(grid[:, 2])) <= set(range(1, 17))

    def test_md_regions_match_nearest_point(self):
        c = build_qam(4)
        det = MinimumDistanceDetector(c)
        grid = decision_regions(det, extent=1.0, resolution=11)
        for re_val, im_val, label in grid[::7]:
            z = re_val + 1j * im_val
            assert int(label) == int(np.argmin(np.abs(c.points - z))) + 1
