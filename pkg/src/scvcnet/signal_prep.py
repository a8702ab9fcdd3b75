"""Raw EEG -> paired theta/alpha PSD matrices.

Per channel: outlier repair, Hamming-windowed FIR bandpass (3.5-31 Hz),
resampling to 128 Hz, 60-s phase window selection, 20-s epochs with a 10-s
stride, Welch PSD on a 0.25 Hz grid. Each epoch becomes an ``EpochFeatures``
holding X (16 theta bins x 10 channels) and Y (16 alpha bins x 10 channels).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal as sps

from .backend import kernels

log = logging.getLogger(__name__)

CANONICAL_CHANNELS = ("F3", "F7", "T7", "P7", "O1", "O2", "P8", "T8", "F8", "F4")
# old 10-20 names used by 19-channel montages
CHANNEL_ALIASES = {"T3": "T7", "T5": "P7", "T4": "T8", "T6": "P8"}

DATABASES = ("NBACK", "STEW", "EEGMAT")
UNLOADED, LOADED = 0, 1

# (database, class) -> (phase name, window start, window end), seconds from phase onset
PHASE_WINDOWS = {
    ("NBACK", UNLOADED): ("post_resting", 60.0, 120.0),
    ("NBACK", LOADED): ("moderate", 60.0, 120.0),
    ("STEW", UNLOADED): ("resting", 45.0, 105.0),
    ("STEW", LOADED): ("task", 45.0, 105.0),
    ("EEGMAT", UNLOADED): ("resting", 60.0, 120.0),
    ("EEGMAT", LOADED): ("task", 0.0, 60.0),
}

TARGET_FS = 128.0
FFT_LEN = 512
THETA_HZ = 4.0 + 0.25 * np.arange(16)
ALPHA_HZ = 8.0 + 0.25 * np.arange(16)

WELCH_MODES = {
    # mode -> (sub-window length, overlap); FFT length is always 512
    "128": (128, 64),
    "512": (512, 256),
}


class PrepError(ValueError):
    """Raised for malformed recordings or impossible preprocessing requests."""


def canonical_label(label):
    name = str(label).strip().upper()
    for prefix in ("EEG ", "EEG-"):
        if name.startswith(prefix):
            name = name[len(prefix):]
    name = name.split("-")[0].strip()
    return CHANNEL_ALIASES.get(name, name)


@dataclass
class RawRecording:
    samples: np.ndarray  # channels x time, microvolts
    fs: float
    channel_labels: list
    phases: list  # [(name, start_s, end_s), ...]
    participant_id: str = ""
    database_id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.channel_labels = [str(c) for c in self.channel_labels]
        self.phases = [(str(n), float(a), float(b)) for n, a, b in self.phases]
        if self.samples.ndim != 2:
            raise PrepError("samples must be a channels x time matrix")
        if not self.fs > 0:
            raise PrepError(f"fs must be positive, got {self.fs}")
        if len(self.channel_labels) != self.samples.shape[0]:
            raise PrepError(
                f"{len(self.channel_labels)} channel labels for {self.samples.shape[0]} channels")
        if len(set(self.channel_labels)) != len(self.channel_labels):
            raise PrepError("channel labels must be unique")
        dur = self.duration
        for name, a, b in self.phases:
            if not (0 <= a < b <= dur + 1e-9):
                raise PrepError(f"phase '{name}' [{a}, {b}] s outside recording of {dur:.3f} s")

    @property
    def duration(self):
        return self.samples.shape[1] / self.fs

    def common_channels(self):
        """Rows for the ten shared channels, in canonical order."""
        lookup = {canonical_label(c): i for i, c in enumerate(self.channel_labels)}
        missing = [c for c in CANONICAL_CHANNELS if c not in lookup]
        if missing:
            raise PrepError(f"recording {self.participant_id!r} lacks channels {missing}")
        return self.samples[[lookup[c] for c in CANONICAL_CHANNELS]]


@dataclass(frozen=True)
class FilterSpec:
    low_cut: float = 3.5
    high_cut: float = 31.0
    taps: int = 429
    window_kind: str = "hamming"


@dataclass
class PsdVector:
    values: np.ndarray
    freq_grid: np.ndarray


@dataclass
class EpochFeatures:
    X: np.ndarray  # theta PSD, 16 x 10
    Y: np.ndarray  # alpha PSD, 16 x 10
    label: int
    participant_id: str
    database_id: str
    phase: str
    segment_index: int

    def to_dict(self):
        return {
            "participant_id": self.participant_id,
            "database_id": self.database_id,
            "phase": self.phase,
            "segment_index": int(self.segment_index),
            "label": int(self.label),
            "X": np.asarray(self.X).tolist(),
            "Y": np.asarray(self.Y).tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            X=np.asarray(d["X"], dtype=np.float64),
            Y=np.asarray(d["Y"], dtype=np.float64),
            label=int(d["label"]),
            participant_id=str(d["participant_id"]),
            database_id=str(d["database_id"]),
            phase=str(d["phase"]),
            segment_index=int(d["segment_index"]),
        )


@dataclass(frozen=True)
class PrepConfig:
    """Preprocessing parameters. ``taps`` is the filter length at 128 Hz."""

    low_cut: float = 3.5
    high_cut: float = 31.0
    taps: int = 429
    outlier_mad_factor: float = 6.0
    outlier_threshold: float | None = None  # absolute override
    welch_mode: str = "128"
    strict_edges: bool = False

    def taps_at(self, fs):
        """Odd tap count giving the same transition width at sampling rate ``fs``."""
        n = int(round(self.taps * fs / TARGET_FS))
        return n if n % 2 else n + 1

    def as_dict(self):
        return {
            "low_cut": self.low_cut,
            "high_cut": self.high_cut,
            "taps": self.taps,
            "outlier_mad_factor": self.outlier_mad_factor,
            "outlier_threshold": self.outlier_threshold,
            "welch_mode": self.welch_mode,
            "strict_edges": self.strict_edges,
        }


# ---------------------------------------------------------------- outliers

def mad_threshold(signal, factor=6.0):
    """``factor`` x median absolute deviation of the first differences."""
    diffs = np.diff(np.asarray(signal, dtype=np.float64))
    diffs = diffs[np.isfinite(diffs)]
    if diffs.size == 0:
        return 0.0
    dev = np.abs(diffs - np.median(diffs))
    mad = float(np.median(dev))
    if mad == 0.0:
        # mostly-flat channels: fall back to the mean deviation
        mad = float(dev.mean())
    return factor * mad


def repair_outliers(signal, threshold=None, mad_factor=6.0):
    """Replace samples whose jump from the last accepted sample exceeds ``threshold``.

    Flagged samples take the most recent non-flagged value. With
    ``threshold=None`` the threshold is ``mad_factor`` x MAD of the first
    differences.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise PrepError("repair_outliers expects a 1-D series")
    if x.size == 0:
        raise PrepError("empty input")
    thr = mad_threshold(x, mad_factor) if threshold is None else float(threshold)
    if thr < 0:
        raise PrepError("threshold must be non-negative")
    try:
        out, _ = kernels.repair_outliers(x, thr)
    except ValueError as exc:
        raise PrepError(str(exc)) from None
    return out


# ---------------------------------------------------------------- filtering

def design_bandpass(spec, fs):
    """Linear-phase windowed-sinc bandpass, unit gain at the band centre."""
    if spec.taps < 3 or spec.taps % 2 == 0:
        raise PrepError(f"taps must be an odd integer >= 3, got {spec.taps}")
    if not (0 < spec.low_cut < spec.high_cut < fs / 2):
        raise PrepError(
            f"need 0 < low_cut < high_cut < fs/2, got {spec.low_cut}, {spec.high_cut}, fs={fs}")
    if spec.window_kind.lower() != "hamming":
        raise PrepError(f"unsupported window {spec.window_kind!r}")
    n = np.arange(spec.taps) - (spec.taps - 1) / 2
    f1, f2 = spec.low_cut / fs, spec.high_cut / fs
    ideal = 2 * f2 * np.sinc(2 * f2 * n) - 2 * f1 * np.sinc(2 * f1 * n)
    h = ideal * np.hamming(spec.taps)
    f0 = (spec.low_cut + spec.high_cut) / 2 / fs
    gain = np.abs(np.sum(h * np.exp(-2j * np.pi * f0 * n)))
    h = h / gain
    # exact symmetry despite rounding in the sinc evaluation
    return 0.5 * (h + h[::-1])


def apply_filter(signal, coefficients):
    """Zero-phase-aligned FIR filtering (single pass, group delay removed)."""
    x = np.asarray(signal, dtype=np.float64)
    h = np.asarray(coefficients, dtype=np.float64)
    if h.size % 2 == 0:
        raise PrepError("filter length must be odd for integral group delay")
    if x.shape[-1] <= h.size:
        raise PrepError(f"signal of {x.shape[-1]} samples is shorter than the {h.size}-tap filter")
    return sps.oaconvolve(x, h[None, :] if x.ndim == 2 else h, mode="same", axes=-1)


def resample(signal, fs_in, fs_out, max_factor=10_000):
    """Polyphase rational resampling along the last axis."""
    x = np.asarray(signal, dtype=np.float64)
    if fs_in == fs_out:
        return x.copy()
    ratio = Fraction(fs_out) / Fraction(fs_in)
    if ratio.numerator > max_factor or ratio.denominator > max_factor:
        raise PrepError(f"resampling ratio {fs_out}/{fs_in} is not a usable rational")
    return sps.resample_poly(x, ratio.numerator, ratio.denominator, axis=-1)


# ---------------------------------------------------------------- windows

def select_phase_window(rec, database_id, cls, fs=None, samples=None):
    """60-s slice (channels x samples) configured for ``(database_id, cls)``.

    ``samples``/``fs`` let the caller pass an already preprocessed signal that
    shares the recording's timeline.
    """
    key = (str(database_id).upper(), int(cls))
    if key not in PHASE_WINDOWS:
        raise PrepError(f"no phase window configured for {key}")
    name, a, b = PHASE_WINDOWS[key]
    phase = next((ph for ph in rec.phases if ph[0] == name), None)
    if phase is None:
        raise PrepError(f"recording {rec.participant_id!r} has no phase '{name}'")
    _, start, end = phase
    if start + b > end + 1e-9:
        raise PrepError(
            f"phase '{name}' lasts {end - start:.1f} s, window needs {a:.0f}-{b:.0f} s")
    fs = rec.fs if fs is None else fs
    data = rec.samples if samples is None else samples
    i0 = int(round((start + a) * fs))
    n = int(round((b - a) * fs))
    if i0 + n > data.shape[-1]:
        raise PrepError(f"phase '{name}' window runs past the end of the recording")
    return data[..., i0:i0 + n]


def segment(slice_, fs, window_s=20.0, stride_s=10.0, duration_s=60.0):
    """Split a slice into overlapping epochs; returns a list in temporal order."""
    x = np.asarray(slice_)
    expected = int(round(duration_s * fs))
    if x.shape[-1] != expected:
        raise PrepError(
            f"slice has {x.shape[-1]} samples, expected {expected} ({duration_s} s at {fs} Hz)")
    w = int(round(window_s * fs))
    r = int(round(stride_s * fs))
    count = (x.shape[-1] - w) // r + 1
    return [x[..., i * r:i * r + w] for i in range(count)]


# ---------------------------------------------------------------- spectra

def _periodic_hamming(n):
    return 0.54 - 0.46 * np.cos(2 * np.pi * np.arange(n) / n)


def welch_psd(segment_, fs=TARGET_FS, mode="128", nfft=FFT_LEN):
    """One-sided Welch density (per Hz) on an ``fs/nfft`` grid.

    Sub-windows are mean-removed, Hamming-weighted and zero-padded to ``nfft``.
    Works along the last axis, so a channels x time block is accepted too.
    """
    if mode not in WELCH_MODES:
        raise PrepError(f"unknown Welch mode {mode!r}; choose from {sorted(WELCH_MODES)}")
    nperseg, noverlap = WELCH_MODES[mode]
    x = np.asarray(segment_, dtype=np.float64)
    if x.shape[-1] < nperseg:
        raise PrepError(f"segment of {x.shape[-1]} samples is shorter than the {nperseg}-sample sub-window")
    frames = np.lib.stride_tricks.sliding_window_view(x, nperseg, axis=-1)[..., ::nperseg - noverlap, :]
    frames = frames - frames.mean(axis=-1, keepdims=True)
    win = _periodic_hamming(nperseg)
    spec = np.fft.rfft(frames * win, n=nfft, axis=-1)
    power = (spec.real ** 2 + spec.imag ** 2).mean(axis=-2) / (fs * np.dot(win, win))
    power[..., 1:nfft // 2 + nfft % 2] *= 2.0
    freqs = np.arange(nfft // 2 + 1) * fs / nfft
    return PsdVector(values=power, freq_grid=freqs)


def band_rows(freqs, band_hz):
    """Indices of ``band_hz`` on the grid ``freqs``."""
    idx = np.searchsorted(freqs, band_hz)
    if np.any(idx >= freqs.size) or not np.allclose(freqs[np.minimum(idx, freqs.size - 1)], band_hz):
        raise PrepError("frequency grid does not contain the theta/alpha points")
    return idx


def extract_epoch_features(segment_, fs=TARGET_FS, *, label, participant_id="", database_id="",
                           phase="", segment_index=0, mode="128"):
    """PSD matrices for one 10-channel epoch (channels in canonical order)."""
    x = np.asarray(segment_, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != len(CANONICAL_CHANNELS):
        raise PrepError(f"expected {len(CANONICAL_CHANNELS)} channels, got shape {x.shape}")
    psd = welch_psd(x, fs, mode=mode)
    vals = psd.values.T  # freq x channel
    X = vals[band_rows(psd.freq_grid, THETA_HZ)]
    Y = vals[band_rows(psd.freq_grid, ALPHA_HZ)]
    return EpochFeatures(X=X, Y=Y, label=int(label), participant_id=str(participant_id),
                         database_id=str(database_id), phase=str(phase),
                         segment_index=int(segment_index))


# ---------------------------------------------------------------- pipeline

def preprocess_recording(rec, cfg=PrepConfig()):
    """Outlier repair, bandpass and resampling of the ten common channels.

    Returns ``(signal at 128 Hz, edge_seconds)`` where ``edge_seconds`` is the
    span at each end contaminated by the filter transient.
    """
    data = rec.common_channels()
    thr = cfg.outlier_threshold
    repaired = np.vstack([
        repair_outliers(ch, threshold=thr, mad_factor=cfg.outlier_mad_factor) for ch in data
    ])
    spec = FilterSpec(cfg.low_cut, cfg.high_cut, cfg.taps_at(rec.fs))
    filtered = apply_filter(repaired, design_bandpass(spec, rec.fs))
    edge_s = (spec.taps - 1) / 2 / rec.fs
    if rec.fs != TARGET_FS:
        filtered = resample(filtered, rec.fs, TARGET_FS)
        # resample_poly's own anti-alias filter spans roughly 10 output samples per side
        edge_s += 10.0 / TARGET_FS
    return filtered, edge_s


def recording_epochs(rec, cfg=PrepConfig()):
    """All EpochFeatures (UL then LD, five segments each) for one recording."""
    db = str(rec.database_id).upper()
    if db not in DATABASES:
        raise PrepError(f"unknown database {rec.database_id!r}")
    clean, edge_s = preprocess_recording(rec, cfg)
    out = []
    for cls in (UNLOADED, LOADED):
        name, a, b = PHASE_WINDOWS[(db, cls)]
        start = next((ph[1] for ph in rec.phases if ph[0] == name), None)
        if start is not None:
            lo, hi = start + a, start + b
            if lo < edge_s or hi > rec.duration - edge_s:
                msg = (f"{rec.participant_id}: window {lo:.1f}-{hi:.1f} s overlaps the "
                       f"{edge_s:.2f} s filter transient")
                if cfg.strict_edges:
                    raise PrepError(msg)
                log.warning(msg)
        window = select_phase_window(rec, db, cls, fs=TARGET_FS, samples=clean)
        for idx, seg in enumerate(segment(window, TARGET_FS)):
            out.append(extract_epoch_features(
                seg, TARGET_FS, label=cls, participant_id=rec.participant_id,
                database_id=db, phase=name, segment_index=idx, mode=cfg.welch_mode))
    return out
