"""Command-line entry point: ``scvcnet {features,bench,tune,sweep-seeds,maps,selftest}``.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 selftest failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import dataio, harness, selftest
from .backend import BACKEND
from .config import ConfigError, load_config
from .model import init_kernel_bank
from .signal_prep import DATABASES, PrepError, recording_epochs

log = logging.getLogger("scvcnet")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SELFTEST = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _cases(value):
    if value == "all":
        return list(range(1, 7))
    try:
        k = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--case must be 1-6 or 'all', got {value!r}") from None
    if k not in harness.CASES:
        raise argparse.ArgumentTypeError(f"--case must be 1-6 or 'all', got {value!r}")
    return [k]


def _paradigms(value):
    if value == "all":
        return [1, 2]
    if value in ("1", "2"):
        return [int(value)]
    raise argparse.ArgumentTypeError(f"--paradigm must be 1, 2 or 'all', got {value!r}")


def build_parser():
    p = _Parser(prog="scvcnet", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, cases=False, paradigms=False):
        sp.add_argument("--config", type=Path, help="TOML run configuration")
        sp.add_argument("--seed", type=int, help="override the bank seed")
        sp.add_argument("--force", action="store_true",
                        help="overwrite/accept features built with other parameters")
        if cases:
            sp.add_argument("--case", type=_cases, default=_cases("all"), help="1-6 or all")
        if paradigms:
            sp.add_argument("--paradigm", type=_paradigms, default=_paradigms("all"),
                            help="1, 2 or all")

    sp = sub.add_parser("features", help="raw recordings -> features.json per database")
    common(sp)
    sp.add_argument("--database", choices=DATABASES, action="append",
                    help="limit to these databases (repeatable)")
    sp.add_argument("--import", dest="import_path", type=Path,
                    help="convert an .npz feature export instead of processing raw data")

    sp = sub.add_parser("bench", help="train and evaluate cases/paradigms")
    common(sp, cases=True, paradigms=True)
    sp.add_argument("--tune", action="store_true", help="grid-search (c, C) on the validation set")
    sp.add_argument("--sweep-seeds", action="store_true", help="repeat with seeds 1..20")

    sp = sub.add_parser("tune", help="grid-search (c, C) on each case's validation set")
    common(sp, cases=True)

    sp = sub.add_parser("sweep-seeds", help="seed sweep (seeds 1..20)")
    common(sp, cases=True, paradigms=True)
    sp.add_argument("--seeds", type=int, default=20, help="number of seeds, starting at 1")

    sp = sub.add_parser("maps", help="frequency-pair and channel-pair diagnostic maps")
    common(sp, cases=True)

    sub.add_parser("selftest", help="oracle and invariant suites on built-in synthetic data")
    return p


# ---------------------------------------------------------------- helpers

def _load_databases(cfg, needed, force):
    expected = dataio.params_hash(cfg.prep.as_dict())
    dbs, hashes = {}, {}
    for db in sorted(needed):
        path = dataio.features_path(cfg.features_dir, db)
        dbs[db] = dataio.read_features(path, expected_hash=expected, force=force)
        hashes[db] = dataio.file_sha256(path)
    return dbs, hashes


def _needed(cases):
    out = set()
    for k in cases:
        spec = harness.CASES[k]
        out |= {spec.train_db, spec.val_db, spec.test2_db}
    return out


def _write_json(path, obj):
    harness.write_atomic(path, json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _refresh_summary(report_dir):
    reports = []
    for f in sorted(Path(report_dir).glob("report_case*_p*.json")):
        d = json.loads(f.read_text())
        reports.append(harness.EvalReport(**d))
    harness.write_atomic(Path(report_dir) / "summary.csv", harness.summary_csv(reports))
    return len(reports)


def _refresh_sweep_summary(report_dir):
    sweeps = [json.loads(f.read_text()) for f in sorted(Path(report_dir).glob("sweep_case*_p*.json"))]
    harness.write_atomic(Path(report_dir) / "sweep_summary.csv", harness.sweep_csv(sweeps))


def _provenance(cfg, hashes, tuned):
    return {"feature_sha256": hashes, "preset": cfg.preset, "tuned": tuned,
            "kernel_backend": BACKEND, "prep": cfg.prep.as_dict()}


def _tune_case(cfg, k, dbs, report_dir):
    train_eps, val_eps, _ = harness.build_case(k, 1, dbs)
    best, rows = harness.tune_hyperparams(train_eps, val_eps, cfg.case_config(k),
                                          list(cfg.tune_c), list(cfg.tune_C))
    _write_json(Path(report_dir) / f"tune_case{k}.json",
                {"case_id": k, "best": {"c": best.c, "C": best.C}, "grid": rows})
    print(f"case {k}: best c={best.c} C={best.C:g}")
    return best


# ---------------------------------------------------------------- commands

def cmd_features(args, cfg):
    prep_params = cfg.prep.as_dict()
    if args.import_path is not None:
        if not args.database or len(args.database) != 1:
            raise UsageError("--import needs exactly one --database")
        db = args.database[0]
        epochs = dataio.import_npz(args.import_path, db)
        out = dataio.features_path(cfg.features_dir, db)
        dataio.write_features(out, epochs, db, prep_params)
        print(f"{db}: {len(epochs)} epochs -> {out}")
        return EXIT_OK
    targets = args.database or sorted(cfg.raw_roots)
    if not targets:
        raise UsageError("no raw data roots configured ([paths.raw] in the config)")
    missing = [db for db in targets if db not in cfg.raw_roots]
    if missing:
        raise UsageError(f"no raw root configured for {missing}")
    for db in targets:
        dirs = dataio.recording_dirs(cfg.raw_roots[db])  # checked before any processing
        epochs = []
        for d in dirs:
            rec = dataio.load_recording(d, db)
            rec.database_id = db
            try:
                epochs.extend(recording_epochs(rec, cfg.prep))
            except PrepError as exc:
                raise dataio.DataError(f"{d}: {exc}") from None
        out = dataio.features_path(cfg.features_dir, db)
        dataio.write_features(out, epochs, db, prep_params)
        n_pid = len({e.participant_id for e in epochs})
        print(f"{db}: {n_pid} participants, {len(epochs)} epochs -> {out}")
    return EXIT_OK


def cmd_bench(args, cfg, sweep=None):
    sweep = args.sweep_seeds if sweep is None else sweep
    report_dir = cfg.resolved_report_dir()
    dbs, hashes = _load_databases(cfg, _needed(args.case), args.force)
    tuned = {}
    for k in args.case:
        case_cfg = _tune_case(cfg, k, dbs, report_dir) if getattr(args, "tune", False) else cfg.case_config(k)
        tuned[k] = case_cfg
        for par in args.paradigm:
            prov = _provenance(cfg, hashes, getattr(args, "tune", False))
            if sweep:
                n = getattr(args, "seeds", 20)
                res = harness.seed_sweep(k, par, case_cfg, dbs, seeds=tuple(range(1, n + 1)),
                                         provenance=prov)
                res["provenance"] = prov
                _write_json(report_dir / f"sweep_case{k}_p{par}.json", res)
                print(f"case {k} paradigm {par}: ACC {res['acc_mean']:.4f}±{res['acc_std']:.4f} "
                      f"F1 {res['f1_mean']:.4f}±{res['f1_std']:.4f} over {len(res['seeds'])} seeds")
            else:
                rep = harness.run_case(k, par, case_cfg, dbs, provenance=prov)
                harness.write_atomic(report_dir / harness.report_filename(k, par), rep.to_json() + "\n")
                print(f"case {k} paradigm {par}: ACC {rep.mean_acc:.4f} F1 {rep.mean_f1:.4f}")
    if sweep:
        _refresh_sweep_summary(report_dir)
    else:
        n = _refresh_summary(report_dir)
        print(f"summary.csv: {n} rows in {report_dir}")
    return EXIT_OK


def cmd_tune(args, cfg):
    report_dir = cfg.resolved_report_dir()
    dbs, _ = _load_databases(cfg, _needed(args.case), args.force)
    for k in args.case:
        _tune_case(cfg, k, dbs, report_dir)
    return EXIT_OK


def cmd_maps(args, cfg):
    report_dir = cfg.resolved_report_dir()
    dbs, _ = _load_databases(cfg, _needed(args.case), args.force)
    for k in args.case:
        case_cfg = cfg.case_config(k)
        train_eps, _, test2 = harness.build_case(k, 2, dbs)
        e0 = train_eps[0]
        bank = init_kernel_bank(case_cfg, e0.X.shape[0], e0.Y.shape[0])
        for tag, eps in (("train", train_eps), ("test2", test2)):
            fmap, cmap = harness.diagnostics_maps(bank, eps, case_cfg.s_m, case_cfg.cross_term)
            out = report_dir / "maps" / f"case{k}" / tag
            harness.write_atomic(out / "freq_pair_map.csv", harness.freq_map_csv(fmap))
            harness.write_atomic(out / "channel_pair_map.csv", harness.channel_map_csv(cmap))
            print(f"case {k} {tag}: maps -> {out}")
    return EXIT_OK


def cmd_selftest(args):
    results = selftest.run_all()
    print(selftest.format_results(results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=sys.stderr)
        return EXIT_SELFTEST
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "selftest":
        return cmd_selftest(args)
    try:
        cfg = load_config(args.config, seed_override=args.seed)
        if args.command == "features":
            return cmd_features(args, cfg)
        if args.command == "bench":
            return cmd_bench(args, cfg)
        if args.command == "sweep-seeds":
            return cmd_bench(args, cfg, sweep=True)
        if args.command == "tune":
            return cmd_tune(args, cfg)
        if args.command == "maps":
            return cmd_maps(args, cfg)
    except (ConfigError, UsageError) as exc:
        print(f"scvcnet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (dataio.DataError, PrepError, harness.ProtocolError) as exc:
        print(f"scvcnet: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    parser.error(f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
