"""Built-in oracle and invariant suites run by ``scvcnet selftest``."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import reference
from .backend import BACKEND
from .harness import build_case, evaluate, tune_hyperparams
from .model import TrainConfig, fit_ridge, normal_residual, train
from .scvc import KernelBank, ifpfi, scvc
from .signal_prep import welch_psd
from .synthetic import synthetic_epochs


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def rel_err(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    scale = max(float(np.max(np.abs(b))) if b.size else 0.0, 1e-300)
    return float(np.max(np.abs(a - b))) / scale if b.size else 0.0


def suite_scvc_oracle(n=300, seed=0, cross_term="squared", reference_cross_term=None, tol=1e-10):
    """Optimized SCVC against the literal transcription."""
    ref_ct = reference_cross_term or cross_term
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        d = int(rng.choice([1, 3, 5]))
        m = int(rng.choice([2, 5, 10, 16]))
        s = int(rng.choice([1, 2]))
        x, y = rng.normal(size=m), rng.normal(size=m)
        W = rng.normal(size=(d, d))
        worst = max(worst, rel_err(scvc(x, y, W, s, cross_term),
                                   reference.scvc_literal(x, y, W, s, ref_ct)))
    return worst <= tol, f"max rel err {worst:.2e} over {n} instances"


def suite_ifpfi_oracle(seed=1, tol=1e-10):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for c, p, m, d in ((2, 3, 5, 3), (1, 3, 4, 1), (3, 4, 6, 5)):
        bank = KernelBank(rng.normal(size=(c, p, p, d, d)), rng.normal(size=c))
        X, Y = rng.normal(size=(p, m)), rng.normal(size=(p, m))
        for s in (1, 2):
            worst = max(worst, rel_err(ifpfi(X, Y, bank, s),
                                       reference.ifpfi_literal(X, Y, bank.W, bank.b, s)))
    return worst <= tol, f"max rel err {worst:.2e}"


def suite_ridge(seed=2, tol=1e-8):
    rng = np.random.default_rng(seed)
    worst_res = worst_branch = 0.0
    for _ in range(40):
        N, D = int(rng.integers(5, 60)), int(rng.integers(5, 60))
        F, t = rng.random((N, D)), rng.integers(0, 2, N).astype(float)
        C = float(10 ** rng.uniform(-2, 2))
        b1 = fit_ridge(F, t, C, branch="dual")
        b2 = fit_ridge(F, t, C, branch="primal")
        worst_res = max(worst_res, normal_residual(F, t, b1, C))
        worst_branch = max(worst_branch, rel_err(b1, b2))
    ok = worst_res <= tol and worst_branch <= tol
    return ok, f"normal-eq residual {worst_res:.2e}, branch gap {worst_branch:.2e}"


def suite_welch(seed=3, tol=1e-9):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(5):
        x = rng.normal(size=int(rng.integers(128, 700)))
        worst = max(worst, rel_err(welch_psd(x).values, reference.welch_literal(x)))
    t = np.arange(2560) / 128.0
    peaks_ok = all(
        np.argmax(welch_psd(np.sin(2 * np.pi * f * t)).values) == int(round(f * 4))
        for f in np.arange(4.0, 12.0, 0.25))
    return worst <= tol and peaks_ok, f"max rel err {worst:.2e}, tone peaks {'ok' if peaks_ok else 'WRONG'}"


def suite_end_to_end(min_acc=0.9):
    dbs = {db: synthetic_epochs(db, 8, seed=11) for db in ("NBACK", "STEW", "EEGMAT")}
    tr, va, te = build_case(1, 1, dbs)
    base = TrainConfig(c=32, d=3, C=1.0, seed=42)
    best, _ = tune_hyperparams(tr, va, base, [32], [1e-2, 1e-1, 1.0, 10.0, 100.0])
    bank, model = train(tr, best)
    acc = evaluate(model, bank, te).mean_acc
    return acc >= min_acc, f"synthetic cross-database accuracy {acc:.3f} (C={best.C:g})"


SUITES = {
    "scvc_oracle": suite_scvc_oracle,
    "ifpfi_oracle": suite_ifpfi_oracle,
    "ridge_branches": suite_ridge,
    "welch_oracle": suite_welch,
    "end_to_end": suite_end_to_end,
}


def run_all(suites=None):
    results = []
    for name, fn in (suites or SUITES).items():
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # noqa: BLE001 - a crash is a failed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(SuiteResult(name, bool(ok), detail, time.perf_counter() - t0))
    return results


def format_results(results):
    lines = [f"kernel backend: {BACKEND}"]
    for r in results:
        lines.append(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<15} {r.detail} ({r.seconds:.2f} s)")
    return "\n".join(lines)
