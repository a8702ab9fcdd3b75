"""Synthetic EEG databases for tests, selftest and the end-to-end benchmark.

Loaded epochs carry more theta and less alpha power than unloaded ones; each
database adds its own broadband noise floor and gain (the nuisance a
cross-database recognizer has to ignore), each participant a random gain.
"""
from __future__ import annotations

import numpy as np
from scipy import signal as sps

from .signal_prep import (ALPHA_HZ, CANONICAL_CHANNELS, LOADED, PHASE_WINDOWS, THETA_HZ,
                          UNLOADED, EpochFeatures, RawRecording)

# database -> (sampling rate, noise floor, gain, extra channels, phase table)
_LAYOUTS = {
    "NBACK": (128.0, 1.0, 1.0, ("AF3", "FC5", "FC6", "AF4"),
              [("moderate", 5.0, 185.0), ("post_resting", 185.0, 365.0)], 370.0),
    "STEW": (128.0, 1.4, 0.85, ("AF3", "FC5", "FC6", "AF4"),
             [("resting", 5.0, 155.0), ("task", 155.0, 305.0)], 310.0),
    "EEGMAT": (500.0, 0.7, 1.2, ("FP1", "FP2", "F3", "C3", "CZ", "C4", "PZ", "FZ", "P3"),
               [("resting", 5.0, 185.0), ("task", 185.0, 245.0)], 250.0),
}

# old-style labels for the 19-channel montage
_EEGMAT_NAMES = {"T7": "T3", "P7": "T5", "T8": "T4", "P8": "T6"}

_FRONTAL = np.array([c in ("F3", "F7", "F8", "F4") for c in CANONICAL_CHANNELS], dtype=float)
_POSTERIOR = np.array([c in ("P7", "P8", "O1", "O2") for c in CANONICAL_CHANNELS], dtype=float)

THETA_LOAD_GAIN = 1.8
ALPHA_LOAD_GAIN = 0.55


def _participant(rng):
    return {
        "gain": float(np.exp(rng.normal(0.0, 0.15))),
        "theta_hz": float(rng.uniform(5.0, 6.75)),
        "alpha_hz": float(rng.uniform(9.25, 10.75)),
    }


def synthetic_recording(database_id, participant_id, seed):
    """One raw recording with the database's sampling rate, montage and phases."""
    fs, floor, gain, extra, phases, total = _LAYOUTS[database_id]
    rng = np.random.default_rng(seed)
    who = _participant(rng)
    n = int(round(total * fs))
    t = np.arange(n) / fs
    labels = list(CANONICAL_CHANNELS)
    if database_id == "EEGMAT":
        labels = [_EEGMAT_NAMES.get(c, c) for c in labels]
        extra = tuple(c for c in extra if c != "F3")
    labels += list(extra)
    data = np.zeros((len(labels), n))
    # coloured background, one AR(1) process per channel
    data[:] = sps.lfilter([1.0], [1.0, -0.95], rng.normal(0.0, floor * 3.0, size=data.shape), axis=1)
    load = np.zeros(n)
    for name, a, b in phases:
        cls = LOADED if name == PHASE_WINDOWS[(database_id, LOADED)][0] else UNLOADED
        load[int(a * fs):int(b * fs)] = cls
    theta_amp = np.where(load == LOADED, THETA_LOAD_GAIN, 1.0)
    alpha_amp = np.where(load == LOADED, ALPHA_LOAD_GAIN, 1.0)
    for ch in range(len(CANONICAL_CHANNELS)):
        th = 6.0 * (0.6 + 0.8 * _FRONTAL[ch]) * theta_amp
        al = 8.0 * (0.6 + 0.9 * _POSTERIOR[ch]) * alpha_amp
        jitter = rng.normal(0.0, 0.15, size=2)
        data[ch] += th * np.sin(2 * np.pi * (who["theta_hz"] + jitter[0]) * t + rng.uniform(0, 2 * np.pi))
        data[ch] += al * np.sin(2 * np.pi * (who["alpha_hz"] + jitter[1]) * t + rng.uniform(0, 2 * np.pi))
    data *= gain * who["gain"]
    # sparse spikes for the outlier repair to remove
    spikes = rng.choice(n, size=max(1, n // 20000), replace=False)
    data[rng.integers(0, len(labels), size=spikes.size), spikes] += 400.0
    return RawRecording(data, fs, labels, phases, participant_id=participant_id,
                        database_id=database_id)


def synthetic_database(database_id, n_participants, seed=0):
    base = {"NBACK": 1000, "STEW": 2000, "EEGMAT": 3000}[database_id]
    return [synthetic_recording(database_id, f"{database_id.lower()}{i:02d}", seed * 100_000 + base + i)
            for i in range(n_participants)]


def _psd_profile(freqs, peak, width):
    return np.exp(-0.5 * ((freqs - peak) / width) ** 2)


def synthetic_epochs(database_id, n_participants, seed=0, effect=1.0):
    """EpochFeatures drawn directly from a parametric PSD model (no raw signal).

    ``effect`` scales the class difference; 0 gives indistinguishable classes.
    """
    offsets = {"NBACK": (1.0, 0.0), "STEW": (0.85, 0.4), "EEGMAT": (1.2, -0.2)}
    gain_db, floor_db = offsets[database_id]
    rng = np.random.default_rng(seed * 7919 + sum(map(ord, database_id)))
    phases = {UNLOADED: PHASE_WINDOWS[(database_id, UNLOADED)][0],
              LOADED: PHASE_WINDOWS[(database_id, LOADED)][0]}
    out = []
    for i in range(n_participants):
        who = _participant(rng)
        pid = f"{database_id.lower()}{i:02d}"
        for cls in (UNLOADED, LOADED):
            th_gain = 1.0 + (THETA_LOAD_GAIN - 1.0) * effect * cls
            al_gain = 1.0 + (ALPHA_LOAD_GAIN - 1.0) * effect * cls
            for seg in range(5):
                noise_x = np.exp(rng.normal(0.0, 0.1, size=(16, 10)))
                noise_y = np.exp(rng.normal(0.0, 0.1, size=(16, 10)))
                theta = (2.0 * th_gain * _psd_profile(THETA_HZ, who["theta_hz"], 0.6)[:, None]
                         * (0.6 + 0.8 * _FRONTAL)[None, :])
                alpha = (3.0 * al_gain * _psd_profile(ALPHA_HZ, who["alpha_hz"], 0.6)[:, None]
                         * (0.6 + 0.9 * _POSTERIOR)[None, :])
                scale = 5.0 * gain_db * who["gain"]
                X = scale * (theta + 0.3 + floor_db * 0.1) * noise_x
                Y = scale * (alpha + 0.3 + floor_db * 0.1) * noise_y
                out.append(EpochFeatures(X=X, Y=Y, label=cls, participant_id=pid,
                                         database_id=database_id, phase=phases[cls],
                                         segment_index=seg))
    return out
