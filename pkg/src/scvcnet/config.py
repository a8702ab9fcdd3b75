"""Run configuration: one TOML file with nested sections, CLI flags override it.

Example::

    [paths]
    features_dir = "features"
    report_dir = "reports"
    [paths.raw]
    NBACK = "raw/nback"
    STEW = "raw/stew"
    EEGMAT = "raw/eegmat"

    [preprocessing]
    taps = 429            # FIR length at 128 Hz, scaled for other rates
    outlier_mad_factor = 6.0
    welch_mode = "128"    # or "512"
    strict_edges = false  # true: a window inside the filter transient is an error

    [model]
    preset = "reference"  # per-case settings of the reference experiments, or "custom"
    c = 32
    d = 3
    C = 1e-6
    seed = 42
    ridge_form = "penalty"
    cross_term = "squared"

    [tuning]
    c_values = [4, 8, 16, 32, 64, 76, 88, 128]
    C_values = [1e-10, 1e-8, 1e-6, 1e-4, 1e-2]
"""
from __future__ import annotations

import os
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .harness import default_grid
from .model import TrainConfig, reference_config
from .signal_prep import DATABASES, TARGET_FS, WELCH_MODES, PrepConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


PRESETS = ("reference", "custom")

_MODEL_DEFAULTS = {"c": 32, "d": 3, "C": 1e-6, "seed": 42, "s_m": 1, "init": "uniform",
                   "activation": "sigmoid", "cross_term": "squared", "ridge_form": "penalty",
                   "fan_in": None}


@dataclass
class RunConfig:
    raw_roots: dict = field(default_factory=dict)
    features_dir: Path = Path("features")
    report_dir: Path = Path("reports")
    prep: PrepConfig = field(default_factory=PrepConfig)
    preset: str = "reference"
    model: TrainConfig = field(default_factory=lambda: TrainConfig(**_MODEL_DEFAULTS))
    tune_c: tuple = field(default_factory=lambda: tuple(default_grid()[0]))
    tune_C: tuple = field(default_factory=lambda: tuple(default_grid()[1]))
    seed_override: int | None = None

    def case_config(self, case_id):
        """TrainConfig for a case, honouring the preset and any --seed override."""
        cfg = reference_config(case_id) if self.preset == "reference" else self.model
        if self.preset == "reference":
            cfg = cfg.replace(cross_term=self.model.cross_term, fan_in=self.model.fan_in,
                              s_m=self.model.s_m)
        if self.seed_override is not None:
            cfg = cfg.replace(seed=self.seed_override)
        return cfg

    def resolved_report_dir(self):
        env = os.environ.get("SCVC_REPORT_DIR")
        return Path(env) if env else self.report_dir

    def as_dict(self):
        return {
            "raw_roots": {k: str(v) for k, v in self.raw_roots.items()},
            "features_dir": str(self.features_dir),
            "report_dir": str(self.report_dir),
            "prep": self.prep.as_dict(),
            "preset": self.preset,
            "model": asdict(self.model),
            "tune_c": list(self.tune_c),
            "tune_C": list(self.tune_C),
        }


def validate_prep(prep):
    if prep.taps < 3 or prep.taps % 2 == 0:
        raise ConfigError(f"preprocessing.taps must be an odd integer >= 3, got {prep.taps}")
    if not (0 < prep.low_cut < prep.high_cut < TARGET_FS / 2):
        raise ConfigError("preprocessing cut-offs must satisfy 0 < low_cut < high_cut < 64 Hz")
    if prep.welch_mode not in WELCH_MODES:
        raise ConfigError(f"preprocessing.welch_mode must be one of {sorted(WELCH_MODES)}")
    if prep.outlier_mad_factor <= 0:
        raise ConfigError("preprocessing.outlier_mad_factor must be positive")
    if prep.outlier_threshold is not None and prep.outlier_threshold < 0:
        raise ConfigError("preprocessing.outlier_threshold must be non-negative")


def _take(section, allowed, name):
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"[{name}]: unknown keys {sorted(unknown)}")
    return section


def load_config(path=None, **overrides):
    """Build a validated RunConfig from ``path`` (optional) plus keyword overrides."""
    doc = {}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"{path}: config file not found")
        try:
            doc = tomllib.loads(path.read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        base = path.parent
    _take(doc, ("paths", "preprocessing", "model", "tuning"), "top level")

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    paths = _take(doc.get("paths", {}), ("features_dir", "report_dir", "raw"), "paths")
    raw = {}
    for db, root in paths.get("raw", {}).items():
        if db.upper() not in DATABASES:
            raise ConfigError(f"[paths.raw]: unknown database {db!r}; expected {DATABASES}")
        raw[db.upper()] = resolve(root)

    prep_doc = _take(doc.get("preprocessing", {}),
                     ("low_cut", "high_cut", "taps", "outlier_mad_factor", "outlier_threshold",
                      "welch_mode", "strict_edges"), "preprocessing")
    prep = PrepConfig(**{**prep_doc, "welch_mode": str(prep_doc.get("welch_mode", "128"))})
    validate_prep(prep)

    model_doc = dict(doc.get("model", {}))
    preset = model_doc.pop("preset", "reference")
    if preset not in PRESETS:
        raise ConfigError(f"[model] preset must be one of {PRESETS}")
    _take(model_doc, _MODEL_DEFAULTS, "model")
    try:
        model = TrainConfig(**{**_MODEL_DEFAULTS, **model_doc})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[model]: {exc}") from None

    tuning = _take(doc.get("tuning", {}), ("c_values", "C_values"), "tuning")
    cs, Cs = default_grid()
    tune_c = tuple(int(v) for v in tuning.get("c_values", cs))
    tune_C = tuple(float(v) for v in tuning.get("C_values", Cs))
    if not tune_c or not tune_C or min(tune_c) < 1 or min(tune_C) <= 0:
        raise ConfigError("[tuning]: grids must be non-empty with c >= 1 and C > 0")

    cfg = RunConfig(raw_roots=raw,
                    features_dir=resolve(paths.get("features_dir", "features")),
                    report_dir=resolve(paths.get("report_dir", "reports")),
                    prep=prep, preset=preset, model=model, tune_c=tune_c, tune_C=tune_C)
    for key, val in overrides.items():
        if val is not None:
            cfg = replace(cfg, **{key: val})
    return cfg
