import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal as sps

from scvcnet import reference
from scvcnet.signal_prep import (ALPHA_HZ, CANONICAL_CHANNELS, THETA_HZ, FilterSpec, PrepConfig,
                                 PrepError, RawRecording, apply_filter, canonical_label,
                                 design_bandpass, extract_epoch_features, mad_threshold,
                                 recording_epochs, repair_outliers, resample, segment,
                                 select_phase_window, welch_psd)
from scvcnet.synthetic import synthetic_recording

FS = 128.0


def tone(f, seconds=20.0, fs=FS, amp=1.0, phase=0.0):
    t = np.arange(int(seconds * fs)) / fs
    return amp * np.sin(2 * np.pi * f * t + phase)


def fitted_amplitude(y, f, fs):
    t = np.arange(len(y)) / fs
    A = np.c_[np.sin(2 * np.pi * f * t), np.cos(2 * np.pi * f * t)]
    coef = np.linalg.lstsq(A, y, rcond=None)[0]
    return float(np.hypot(*coef))


def response(h, f, fs):
    n = np.arange(h.size) - (h.size - 1) / 2
    return abs(np.sum(h * np.exp(-2j * np.pi * f / fs * n)))


# ---------------------------------------------------------------- outliers

class TestRepairOutliers:
    def test_single_spike_carried_forward(self):
        assert repair_outliers([0, 0, 500, 0, 0], threshold=100).tolist() == [0, 0, 0, 0, 0]

    def test_constant_unchanged(self):
        x = np.full(50, 3.25)
        for thr in (0.0, 1.0, None):
            np.testing.assert_array_equal(repair_outliers(x, threshold=thr), x)

    def test_matches_sequential_oracle_with_mad_policy(self, rng):
        x = np.cumsum(rng.normal(size=5000))
        x[rng.choice(5000, 40, replace=False)] += rng.choice([-1, 1], 40) * 80
        thr = mad_threshold(x, 6.0)
        np.testing.assert_array_equal(repair_outliers(x), reference.repair_outliers_literal(x, thr))

    def test_empty_raises(self):
        with pytest.raises(PrepError, match="empty input"):
            repair_outliers([])

    def test_all_flagged_raises(self):
        with pytest.raises(PrepError, match="no valid reference sample"):
            repair_outliers([np.nan, np.inf, np.nan], threshold=1.0)

    def test_leading_nonfinite_backfilled(self):
        assert repair_outliers([np.nan, 2.0, 2.5], threshold=1.0).tolist() == [2.0, 2.0, 2.5]

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=200), st.floats(0, 500))
    def test_idempotent_absolute_threshold(self, xs, thr):
        once = repair_outliers(xs, threshold=thr)
        np.testing.assert_array_equal(repair_outliers(once, threshold=thr), once)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=200), st.floats(0, 500))
    def test_output_jumps_bounded(self, xs, thr):
        out = repair_outliers(xs, threshold=thr)
        assert len(out) == len(xs)
        assert np.all(np.abs(np.diff(out)) <= thr)


# ---------------------------------------------------------------- filter

class TestBandpass:
    h = design_bandpass(FilterSpec(3.5, 31.0, 429), FS)

    def test_length_and_symmetry(self):
        assert self.h.size == 429
        np.testing.assert_array_equal(self.h, self.h[::-1])

    def test_passband_gain(self):
        assert abs(response(self.h, 17.0, FS) - 1.0) <= 0.05

    @pytest.mark.parametrize("f", [1.0, 50.0])
    def test_stopband_attenuation(self, f):
        assert 20 * np.log10(response(self.h, f, FS)) <= -40

    def test_dc_rejected(self):
        assert abs(self.h.sum()) < 1e-2
        assert response(self.h, 0.0, FS) == pytest.approx(abs(self.h.sum()))

    def test_matches_scipy_firwin(self):
        ref = sps.firwin(429, [3.5, 31.0], pass_zero=False, fs=FS, window="hamming")
        np.testing.assert_allclose(self.h, ref, atol=1e-12)

    @pytest.mark.parametrize("spec", [FilterSpec(31, 3.5, 429), FilterSpec(3.5, 70, 429),
                                      FilterSpec(0, 31, 429), FilterSpec(3.5, 31, 428)])
    def test_invalid_specs(self, spec):
        with pytest.raises(PrepError):
            design_bandpass(spec, FS)


class TestApplyFilter:
    h = design_bandpass(FilterSpec(), FS)

    def test_impulse_response_centred(self):
        x = np.zeros(2000)
        x[1000] = 1.0
        y = apply_filter(x, self.h)
        assert y.size == x.size
        np.testing.assert_allclose(y[1000 - 214:1000 + 215], self.h, atol=1e-12)
        assert np.abs(np.delete(y, np.arange(786, 1215))).max() < 1e-12

    def test_6hz_preserved(self):
        y = apply_filter(tone(6.0, 60), self.h)[300:-300]
        assert fitted_amplitude(y, 6.0, FS) == pytest.approx(1.0, rel=0.05)

    def test_50hz_rejected(self):
        y = apply_filter(tone(50.0, 60), self.h)[300:-300]
        assert 20 * np.log10(fitted_amplitude(y, 50.0, FS)) <= -40

    def test_short_signal_raises(self):
        with pytest.raises(PrepError, match="shorter"):
            apply_filter(np.ones(100), self.h)


class TestResample:
    def test_length(self):
        assert resample(np.zeros(5000), 500, 128).size == 1280

    def test_tone_amplitude(self):
        y = resample(tone(6.0, 10, fs=500.0), 500, 128)
        assert fitted_amplitude(y[100:-100], 6.0, 128.0) == pytest.approx(1.0, rel=0.02)

    def test_identity(self, rng):
        x = rng.normal(size=300)
        np.testing.assert_array_equal(resample(x, 128, 128), x)

    def test_irrational_ratio(self):
        with pytest.raises(PrepError, match="rational"):
            resample(np.zeros(1000), np.pi * 100, 128)


# ---------------------------------------------------------------- windows

def _rec(db, phases, fs=FS, total=400.0):
    n = int(total * fs)
    data = np.tile(np.arange(n, dtype=float) / fs, (10, 1))  # sample value = its time
    return RawRecording(data, fs, list(CANONICAL_CHANNELS), phases, "p1", db)


class TestPhaseWindow:
    @pytest.mark.parametrize("db,cls,phases,expect", [
        ("EEGMAT", 1, [("resting", 0, 180), ("task", 180, 240)], (180.0, 240.0)),
        ("STEW", 0, [("resting", 10, 160), ("task", 160, 310)], (55.0, 115.0)),
        ("NBACK", 0, [("moderate", 0, 180), ("post_resting", 200, 380)], (260.0, 320.0)),
        ("NBACK", 1, [("moderate", 0, 180), ("post_resting", 200, 380)], (60.0, 120.0)),
    ])
    def test_configured_windows(self, db, cls, phases, expect):
        w = select_phase_window(_rec(db, phases), db, cls)
        assert w.shape == (10, int(60 * FS))
        assert w[0, 0] == pytest.approx(expect[0])
        assert w[0, -1] == pytest.approx(expect[1] - 1 / FS)

    def test_missing_phase_named(self):
        with pytest.raises(PrepError, match="post_resting"):
            select_phase_window(_rec("NBACK", [("moderate", 0, 180)]), "NBACK", 0)

    def test_short_phase_named(self):
        with pytest.raises(PrepError, match="'task'"):
            select_phase_window(_rec("STEW", [("resting", 0, 150), ("task", 150, 230)]), "STEW", 1)


class TestSegment:
    x = np.arange(int(60 * FS))

    def test_five_segments(self):
        segs = segment(self.x, FS)
        assert len(segs) == 5
        assert all(s.size == 2560 for s in segs)

    def test_overlap(self):
        s0, s1 = segment(self.x, FS)[:2]
        np.testing.assert_array_equal(s0[1280:], s1[:1280])
        assert s0[1280] == 10 * FS

    def test_halves_reconstruct(self):
        segs = segment(self.x, FS)
        rebuilt = np.concatenate([segs[0]] + [s[1280:] for s in segs[1:]])
        np.testing.assert_array_equal(rebuilt, self.x)

    @pytest.mark.parametrize("T,w,r", [(60, 20, 10), (90, 20, 10), (60, 15, 5), (61, 20, 10)])
    def test_count_law(self, T, w, r):
        segs = segment(np.zeros(int(T * FS)), FS, w, r, duration_s=T)
        assert len(segs) == (T - w) // r + 1

    def test_wrong_duration(self):
        with pytest.raises(PrepError, match="expected"):
            segment(np.zeros(1000), FS)


# ---------------------------------------------------------------- welch

class TestWelch:
    def test_grid(self):
        psd = welch_psd(np.zeros(2560))
        assert np.allclose(np.diff(psd.freq_grid), 0.25)
        assert psd.freq_grid.size == 257

    def test_6hz_peak(self):
        psd = welch_psd(tone(6.0))
        assert psd.freq_grid[np.argmax(psd.values)] == 6.0

    def test_dc_band_zero(self):
        psd = welch_psd(np.full(2560, 7.0))
        band = (psd.freq_grid >= 4) & (psd.freq_grid < 12)
        assert np.abs(psd.values[band]).max() < 1e-20

    def test_white_noise_level(self, rng):
        psd = welch_psd(rng.normal(size=128 * 600))
        assert psd.values[1:-1].mean() == pytest.approx(2 / FS, rel=0.03)

    def test_matches_literal_oracle(self, rng):
        for _ in range(10):
            x = rng.normal(size=int(rng.integers(128, 2600)))
            np.testing.assert_allclose(welch_psd(x).values, reference.welch_literal(x), rtol=1e-9,
                                       atol=0)

    def test_matches_scipy_welch(self, rng):
        x = rng.normal(size=2560)
        f, p = sps.welch(x, fs=FS, window="hamming", nperseg=128, noverlap=64, nfft=512)
        psd = welch_psd(x)
        np.testing.assert_allclose(psd.freq_grid, f)
        np.testing.assert_allclose(psd.values, p, rtol=1e-10)

    def test_512_mode_same_grid(self, rng):
        x = rng.normal(size=2560)
        psd = welch_psd(x, mode="512")
        np.testing.assert_allclose(psd.values, reference.welch_literal(x, nperseg=512, noverlap=256),
                                   rtol=1e-9)
        assert np.allclose(np.diff(psd.freq_grid), 0.25)

    def test_short_segment(self):
        with pytest.raises(PrepError, match="shorter"):
            welch_psd(np.zeros(100))

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from(np.arange(4.0, 12.0, 0.25).tolist()), st.floats(0, 2 * np.pi))
    def test_tone_localization(self, f, phase):
        psd = welch_psd(tone(f, phase=phase))
        band = (psd.freq_grid >= 4) & (psd.freq_grid < 12)
        assert psd.freq_grid[band][np.argmax(psd.values[band])] == f

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_non_negative(self, seed):
        x = np.random.default_rng(seed).standard_cauchy(512)
        assert np.all(welch_psd(x).values >= 0)


# ---------------------------------------------------------------- features

class TestEpochFeatures:
    def test_grids(self):
        assert THETA_HZ[0] == 4.0 and THETA_HZ[-1] == 7.75 and THETA_HZ.size == 16
        assert ALPHA_HZ[0] == 8.0 and ALPHA_HZ[-1] == 11.75 and ALPHA_HZ.size == 16

    def test_p7_alpha_tone(self, rng):
        seg = 1e-3 * rng.normal(size=(10, 2560))
        seg[3] += tone(10.0)
        ep = extract_epoch_features(seg, label=1)
        assert ep.X.shape == ep.Y.shape == (16, 10)
        assert np.unravel_index(np.argmax(ep.Y), ep.Y.shape) == (8, 3)
        assert ep.X.max() < 1e-3 * ep.Y.max()

    def test_zero_signal(self):
        ep = extract_epoch_features(np.zeros((10, 2560)), label=0)
        assert not ep.X.any() and not ep.Y.any()

    def test_channel_count(self):
        with pytest.raises(PrepError, match="10 channels"):
            extract_epoch_features(np.zeros((9, 2560)), label=0)

    def test_dict_roundtrip(self, rng):
        ep = extract_epoch_features(rng.normal(size=(10, 2560)), label=1, participant_id="a",
                                    database_id="STEW", phase="task", segment_index=3)
        back = type(ep).from_dict(ep.to_dict())
        np.testing.assert_array_equal(back.X, ep.X)
        assert (back.label, back.segment_index, back.phase) == (1, 3, "task")


def test_channel_aliases():
    assert canonical_label("EEG T3-LE") == "T7"
    assert canonical_label("t6") == "P8"
    assert canonical_label("F3") == "F3"


class TestPipeline:
    def test_recording_epochs_layout(self):
        rec = synthetic_recording("EEGMAT", "x01", 5)
        eps = recording_epochs(rec)
        assert len(eps) == 10
        assert [e.segment_index for e in eps] == [0, 1, 2, 3, 4] * 2
        assert [e.label for e in eps] == [0] * 5 + [1] * 5
        assert all(e.X.shape == (16, 10) and np.all(e.X >= 0) for e in eps)

    def test_deterministic(self):
        rec = synthetic_recording("STEW", "x01", 9)
        a = recording_epochs(rec)
        b = recording_epochs(rec)
        for ea, eb in zip(a, b):
            assert ea.X.tobytes() == eb.X.tobytes() and ea.Y.tobytes() == eb.Y.tobytes()

    def test_loaded_has_more_theta(self):
        eps = recording_epochs(synthetic_recording("NBACK", "x01", 3))
        ratio = {c: np.mean([e.X.sum() / e.Y.sum() for e in eps if e.label == c]) for c in (0, 1)}
        assert ratio[1] > ratio[0]

    def test_strict_edges(self):
        rec = synthetic_recording("EEGMAT", "x01", 5)
        rec.phases = [("resting", 0.0, 180.0), ("task", 189.5, 249.9)]  # window ends 0.4 s before the end
        with pytest.raises(PrepError, match="transient"):
            recording_epochs(rec, PrepConfig(strict_edges=True))

    def test_missing_channel(self):
        rec = synthetic_recording("STEW", "x01", 5)
        rec.channel_labels[0] = "XX"
        with pytest.raises(PrepError, match="F3"):
            recording_epochs(rec)


def test_raw_recording_validation():
    with pytest.raises(PrepError, match="unique"):
        RawRecording(np.zeros((2, 10)), 1.0, ["a", "a"], [])
    with pytest.raises(PrepError, match="outside"):
        RawRecording(np.zeros((1, 10)), 1.0, ["a"], [("x", 0, 20)])
    with pytest.raises(PrepError, match="fs"):
        RawRecording(np.zeros((1, 10)), 0.0, ["a"], [])
