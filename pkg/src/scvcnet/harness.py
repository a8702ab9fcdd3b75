"""Cross-database evaluation protocol: splits, cases, tuning, metrics, sweeps."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

from .model import (build_design_matrix, fit_ridge, init_kernel_bank, label_scores,
                    scores_from_features, train)
from .model import RidgeModel, TrainConfig
from .scvc import pair_maps
from .signal_prep import ALPHA_HZ, CANONICAL_CHANNELS, THETA_HZ

SEGMENTS_PER_PHASE = 5


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class CaseSpec:
    case_id: int
    train_db: str
    val_db: str  # validation = val_db-VA; Testing Set #1 = val_db \ VA
    test2_db: str  # Testing Set #2 = the whole database


CASES = {
    1: CaseSpec(1, "NBACK", "STEW", "EEGMAT"),
    2: CaseSpec(2, "NBACK", "EEGMAT", "STEW"),
    3: CaseSpec(3, "STEW", "NBACK", "EEGMAT"),
    4: CaseSpec(4, "STEW", "EEGMAT", "NBACK"),
    5: CaseSpec(5, "EEGMAT", "NBACK", "STEW"),
    6: CaseSpec(6, "EEGMAT", "STEW", "NBACK"),
}


@dataclass
class DatasetSplit:
    database_id: str
    va: list
    rest: list


def split_validation(epochs, database_id=None):
    """First epoch of every (participant, phase) run -> va, the other four -> rest."""
    groups = defaultdict(list)
    for e in epochs:
        groups[(e.participant_id, e.phase)].append(e)
    for (pid, phase), eps in groups.items():
        idx = sorted(e.segment_index for e in eps)
        if idx != list(range(SEGMENTS_PER_PHASE)):
            raise ProtocolError(
                f"participant {pid!r} phase {phase!r}: expected segments 0..4, got {idx}")
    va = [e for e in epochs if e.segment_index == 0]
    rest = [e for e in epochs if e.segment_index != 0]
    db = database_id or (epochs[0].database_id if epochs else "")
    return DatasetSplit(db, va, rest)


def build_case(case_id, paradigm, databases):
    """(train, val, test) epoch lists for a case under paradigm 1 or 2."""
    if case_id not in CASES:
        raise ProtocolError(f"unknown case {case_id!r}; expected 1-6")
    if paradigm not in (1, 2):
        raise ProtocolError(f"unknown paradigm {paradigm!r}; expected 1 or 2")
    spec = CASES[case_id]
    for db in (spec.train_db, spec.val_db, spec.test2_db):
        if db not in databases:
            raise ProtocolError(f"case {case_id} needs features for {db}")
    split = split_validation(databases[spec.val_db], spec.val_db)
    test = split.rest if paradigm == 1 else list(databases[spec.test2_db])
    return list(databases[spec.train_db]), split.va, test


# ---------------------------------------------------------------- metrics

def accuracy(labels, preds):
    labels, preds = np.asarray(labels), np.asarray(preds)
    return float(np.mean(labels == preds)) if labels.size else 0.0


def macro_f1(labels, preds):
    """Mean of the class-0 and class-1 F1; a class never seen nor predicted scores 0."""
    labels, preds = np.asarray(labels), np.asarray(preds)
    scores = []
    for cls in (0, 1):
        tp = np.sum((labels == cls) & (preds == cls))
        fp = np.sum((labels != cls) & (preds == cls))
        fn = np.sum((labels == cls) & (preds != cls))
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return float(np.mean(scores))


@dataclass
class EvalReport:
    case_id: int | None
    paradigm: int | None
    per_participant: list  # [{"participant_id", "acc", "macro_f1", "n"}]
    mean_acc: float
    mean_f1: float
    cfg: dict = field(default_factory=dict)
    seed: int | None = None
    provenance: dict = field(default_factory=dict)
    pooled: dict | None = None

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def participant_metrics(epochs, preds, pooled=False):
    by_pid = defaultdict(list)
    for e, p in zip(epochs, preds):
        by_pid[(e.database_id, e.participant_id)].append((e.label, int(p)))
    rows = []
    for (db, pid) in sorted(by_pid):
        lab, pr = zip(*by_pid[(db, pid)])
        rows.append({"participant_id": pid, "database_id": db, "n": len(lab),
                     "acc": accuracy(lab, pr), "macro_f1": macro_f1(lab, pr)})
    mean_acc = float(np.mean([r["acc"] for r in rows])) if rows else 0.0
    mean_f1 = float(np.mean([r["macro_f1"] for r in rows])) if rows else 0.0
    extra = None
    if pooled:
        labels = [e.label for e in epochs]
        extra = {"acc": accuracy(labels, preds), "macro_f1": macro_f1(labels, preds)}
    return rows, mean_acc, mean_f1, extra


def evaluate(model, bank, test, pooled=False, case_id=None, paradigm=None, provenance=None,
             features=None):
    """Participant-averaged accuracy and macro-F1 on ``test``.

    ``features`` may carry a precomputed design matrix for ``test``.
    """
    if not test:
        raise ProtocolError("empty test set")
    F = build_design_matrix(test, bank, model.cfg.s_m, model.cfg.cross_term) if features is None else features
    preds = label_scores(scores_from_features(model, F), model.threshold)
    rows, mean_acc, mean_f1, extra = participant_metrics(test, preds, pooled)
    return EvalReport(case_id=case_id, paradigm=paradigm, per_participant=rows,
                      mean_acc=mean_acc, mean_f1=mean_f1, cfg=asdict(model.cfg),
                      seed=model.cfg.seed, provenance=dict(provenance or {}), pooled=extra)


# ---------------------------------------------------------------- tuning

DEFAULT_C_OUT = (4, 8, 16, 32, 64, 76, 88, 128)
REFERENCE_C_OUT_VALUES = (6, 76, 77, 86, 88)
REFERENCE_REG_VALUES = (1.5e-10, 3.1e-10, 8.5e-8, 1.0e-4, 6.2e-7, 3.38e-7)


def default_grid():
    """(c values, C values) with every reference preset reachable.

    The C values are ridge penalties, so pair this grid with ``ridge_form="penalty"``.
    """
    cs = sorted(set(DEFAULT_C_OUT) | set(REFERENCE_C_OUT_VALUES))
    Cs = sorted(set(np.logspace(-10, -2, 9).tolist()) | set(REFERENCE_REG_VALUES))
    return cs, Cs


def _shrinkage_key(C, form):
    # larger key = stronger shrinkage
    return C if form == "penalty" else -C


def tune_hyperparams(train_eps, val_eps, base_cfg, c_values, C_values):
    """Grid search over (c, C) maximising validation mean accuracy.

    Ties go to the smaller c, then to the stronger regularizer. Returns
    ``(best_cfg, rows)`` where rows record every grid point in grid order.
    """
    if not c_values or not C_values:
        raise ValueError("tuning grid is empty")
    t = np.array([e.label for e in train_eps], dtype=np.float64)
    rows = []
    for c in c_values:
        cfg_c = base_cfg.replace(c=int(c))
        X0 = train_eps[0]
        bank = init_kernel_bank(cfg_c, X0.X.shape[0], X0.Y.shape[0])
        F_tr = build_design_matrix(train_eps, bank, cfg_c.s_m, cfg_c.cross_term)
        F_va = build_design_matrix(val_eps, bank, cfg_c.s_m, cfg_c.cross_term)
        for C in C_values:
            cfg = cfg_c.replace(C=float(C))
            beta = fit_ridge(F_tr, t, cfg.C, form=cfg.ridge_form)
            model = RidgeModel(beta, cfg, bank.seed, tuple(bank.shape), bank.init_bound)
            rep = evaluate(model, bank, val_eps, features=F_va)
            rows.append({"c": int(c), "C": float(C), "val_acc": rep.mean_acc,
                         "val_f1": rep.mean_f1})
    best = max(rows, key=lambda r: (r["val_acc"], -r["c"],
                                    _shrinkage_key(r["C"], base_cfg.ridge_form)))
    return base_cfg.replace(c=best["c"], C=best["C"]), rows


# ---------------------------------------------------------------- runs

def run_case(case_id, paradigm, cfg, databases, provenance=None, pooled=False):
    train_eps, _, test = build_case(case_id, paradigm, databases)
    bank, model = train(train_eps, cfg)
    return evaluate(model, bank, test, pooled=pooled, case_id=case_id, paradigm=paradigm,
                    provenance=provenance)


def mean_std(values):
    """Mean and sample standard deviation (ddof=1)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise ValueError("need at least two values for a sample standard deviation")
    return float(v.mean()), float(v.std(ddof=1))


def seed_sweep(case_id, paradigm, cfg, databases, seeds=tuple(range(1, 21)), provenance=None):
    """Repeat ``run_case`` varying only the bank seed."""
    if len(seeds) < 2:
        raise ValueError("a seed sweep needs at least two seeds")
    reports = [run_case(case_id, paradigm, cfg.replace(seed=int(s)), databases, provenance)
               for s in seeds]
    acc_m, acc_s = mean_std([r.mean_acc for r in reports])
    f1_m, f1_s = mean_std([r.mean_f1 for r in reports])
    return {
        "case_id": case_id, "paradigm": paradigm, "seeds": [int(s) for s in seeds],
        "acc": [r.mean_acc for r in reports], "f1": [r.mean_f1 for r in reports],
        "acc_mean": acc_m, "acc_std": acc_s, "f1_mean": f1_m, "f1_std": f1_s,
        "cfg": asdict(cfg),
    }


def diagnostics_maps(bank, epochs, s_m=1, cross_term="squared"):
    """Mean |H_kij(a, b)| reduced to a p x q frequency-pair map and an m x n channel-pair map."""
    if not epochs:
        raise ValueError("no epochs for diagnostics")
    freq = np.zeros((bank.p, bank.q))
    chan = None
    for e in epochs:
        A = np.abs(pair_maps(e.X, e.Y, bank, s_m, cross_term))  # (c, p, q, m, n)
        freq += A.mean(axis=(0, 3, 4))
        cm = A.mean(axis=(0, 1, 2))
        chan = cm if chan is None else chan + cm
    return freq / len(epochs), chan / len(epochs)


# ---------------------------------------------------------------- output

def write_atomic(path, text):
    """Write-temp-then-rename so readers never see a partial file."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def report_filename(case_id, paradigm):
    return f"report_case{case_id}_p{paradigm}.json"


SUMMARY_COLUMNS = ("case", "paradigm", "mean_acc", "mean_f1", "seed", "c", "C")


def summary_csv(reports):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in sorted(reports, key=lambda r: (r.case_id, r.paradigm)):
        w.writerow([r.case_id, r.paradigm, repr(r.mean_acc), repr(r.mean_f1), r.seed,
                    r.cfg["c"], repr(r.cfg["C"])])
    return buf.getvalue()


def sweep_csv(sweeps):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case", "paradigm", "n_seeds", "acc_mean", "acc_std", "f1_mean", "f1_std",
                "acc", "f1"])
    for s in sorted(sweeps, key=lambda s: (s["case_id"], s["paradigm"])):
        w.writerow([s["case_id"], s["paradigm"], len(s["seeds"]), repr(s["acc_mean"]),
                    repr(s["acc_std"]), repr(s["f1_mean"]), repr(s["f1_std"]),
                    f"{s['acc_mean']:.4f}±{s['acc_std']:.4f}",
                    f"{s['f1_mean']:.4f}±{s['f1_std']:.4f}"])
    return buf.getvalue()


def map_csv(grid, row_labels, col_labels, corner):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([corner] + list(col_labels))
    for lab, row in zip(row_labels, grid):
        w.writerow([lab] + [repr(float(v)) for v in row])
    return buf.getvalue()


def freq_map_csv(freq_map):
    return map_csv(freq_map, [f"theta_{f:.2f}Hz" for f in THETA_HZ],
                   [f"alpha_{f:.2f}Hz" for f in ALPHA_HZ], "theta\\alpha")


def channel_map_csv(chan_map):
    return map_csv(chan_map, list(CANONICAL_CHANNELS), list(CANONICAL_CHANNELS), "theta\\alpha")
