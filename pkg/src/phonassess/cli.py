"""Command-line pipeline: synth, extract, classify, regress, correlate.

Config values come from an optional key=value file overridden by flags.
Exit codes: 0 success, 1 configuration error, 2 data error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .audio import load_recording
from .errors import AudioError, ManifestError, PhonassessError
from .evaluation import (SCALES, classification_metrics, correlation_graph_data,
                         estimation_errors, loo_validate, regression_metrics,
                         round_half_away, spearman)
from .features.extract import ExtractionParams, extract_recording
from .features.registry import per_vowel_width, to_json as registry_to_json
from .manifest import load_manifest
from .models import predict
from .selection import LearnerSpec, drop_incomplete_rows, mrmr_rank, sffs
from .synth import make_classification_cohort, make_regression_cohort
from .table import FeatureMatrix, build_matrix, parse_scope

log = logging.getLogger("phonassess")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2

WIDTH_BAND = (300, 400)


@dataclass
class RunConfig:
    manifest: str = ""
    features: str = ""
    out: str = "out"
    scope: str = ""            # comma-separated; empty = derive from manifest
    target: str = "group"
    seed: int = 0
    mrmr_k: int = 500
    sffs_patience: int = 3
    trees: int = 500
    min_leaf: int = 3
    peak_normalize: bool = False

    def scopes(self) -> list[str]:
        wanted = [s.strip() for s in self.scope.split(",") if s.strip()]
        for scope in wanted:
            parse_scope(scope)  # fail fast on malformed scope tokens
        return wanted


def _load_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    p = Path(path)
    if not p.exists():
        raise PhonassessError(f"no such config file: {path}")
    for line in p.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise PhonassessError(f"bad config line {line!r} (expected key=value)")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    file_values = _load_config_file(args.config) if getattr(args, "config", None) else {}
    valid = {f.name: f.type for f in fields(RunConfig)}
    for key, value in file_values.items():
        if key not in valid:
            raise PhonassessError(f"unknown config key {key!r}")
        current = getattr(cfg, key)
        if isinstance(current, bool):
            value = value.lower() in ("1", "true", "yes")
        elif isinstance(current, int):
            value = int(value)
        setattr(cfg, key, value)
    for key in valid:
        flag = getattr(args, key, None)
        if flag is not None:
            setattr(cfg, key, flag)
    return cfg


def _default_scopes(manifest) -> list[str]:
    scopes = [f"{v}_{t}" for (v, t) in manifest.pairs_present()]
    scopes += [f"all_{t}" for t in manifest.tasks_present()]
    return scopes


def cmd_synth(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    if args.mode == "classify":
        manifest = make_classification_cohort(out, n_pd=args.subjects // 2,
                                              n_hc=args.subjects - args.subjects // 2,
                                              vowels=args.vowels.split(","),
                                              tasks=args.tasks.split(","), seed=cfg.seed)
    else:
        manifest = make_regression_cohort(out, n_subjects=args.subjects,
                                          vowels=args.vowels.split(","),
                                          tasks=args.tasks.split(","),
                                          target=cfg.target if cfg.target != "group" else "updrs3",
                                          seed=cfg.seed)
    log.info("wrote cohort manifest %s", manifest)
    print(manifest)
    return EXIT_OK


def cmd_extract(cfg: RunConfig) -> int:
    manifest = load_manifest(cfg.manifest)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    scopes = cfg.scopes() or _default_scopes(manifest)
    params = ExtractionParams(peak_normalize=cfg.peak_normalize)

    needed: set[tuple[str, str]] = set()
    for scope in scopes:
        vowel, task = parse_scope(scope)
        vs = ("a", "e", "i", "o", "u") if vowel == "all" else (vowel,)
        needed.update((v, task) for v in vs)
        needed.update((v, task) for v in ("a", "i", "u"))  # cross-vowel corners

    extracted: dict[tuple[str, str, str], dict] = {}
    failure_counts: dict[str, int] = {}
    for row in manifest.rows:
        for (v, t) in sorted(needed):
            path = row.recordings.get((v, t))
            if path is None:
                continue
            try:
                rec = load_recording(path, row.subject_id, v, t)
            except AudioError as exc:
                log.warning("unreadable audio for %s (%s,%s): %s", row.subject_id, v, t, exc)
                continue
            result = extract_recording(rec, params)
            extracted[(row.subject_id, v, t)] = result.features
            for name in result.failures:
                failure_counts[name] = failure_counts.get(name, 0) + 1

    width = per_vowel_width()
    level = logging.INFO if WIDTH_BAND[0] <= width <= WIDTH_BAND[1] else logging.WARNING
    log.log(level, "registry width per vowel: %d (expected %d..%d)", width, *WIDTH_BAND)

    for scope in scopes:
        matrix = build_matrix(manifest, extracted, scope)
        matrix.to_csv(out / f"features_{scope}.csv")
    registry_to_json(out / "registry.json")
    with open(out / "extraction_log.json", "w") as fh:
        json.dump({"per_feature_failures": dict(sorted(failure_counts.items())),
                   "recordings_extracted": len(extracted),
                   "per_vowel_width": width}, fh, indent=1)
    log.info("wrote %d matrices to %s", len(scopes), out)
    return EXIT_OK


def _load_matrix(cfg: RunConfig, scope: str) -> FeatureMatrix:
    base = Path(cfg.features or cfg.out)
    path = base / f"features_{scope}.csv"
    if not path.exists():
        raise PhonassessError(f"missing feature matrix {path}; run extract first")
    return FeatureMatrix.from_csv(path, scope=scope)


def _scopes_from_features_dir(cfg: RunConfig) -> list[str]:
    base = Path(cfg.features or cfg.out)
    return sorted(p.stem.replace("features_", "", 1) for p in base.glob("features_*.csv"))


def _select_and_eval(matrix: FeatureMatrix, target_values, spec: LearnerSpec, cfg: RunConfig):
    X = matrix.values
    names = matrix.columns
    y = np.asarray(target_values)
    n = X.shape[0]
    # candidates: mostly-present, non-constant columns, mRMR-ranked
    usable = [j for j in range(X.shape[1])
              if np.isfinite(X[:, j]).sum() >= max(3, n // 2) and np.nanstd(X[:, j]) > 0]
    if not usable:
        raise PhonassessError("no usable feature columns (all missing or constant)")
    ranked = mrmr_rank(X[:, usable], y, k=min(cfg.mrmr_k, len(usable)), task=spec.mode)
    candidates = [usable[j] for j in ranked]
    return sffs(X, y, names, spec, candidates=candidates, patience=cfg.sffs_patience)


def cmd_classify(cfg: RunConfig) -> int:
    scopes = cfg.scopes() or _scopes_from_features_dir(cfg)
    if not scopes:
        raise PhonassessError("no scopes given and no feature matrices found")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for scope in scopes:
        matrix = _load_matrix(cfg, scope)
        groups = np.asarray(matrix.groups)
        if len(set(groups)) < 2:
            raise PhonassessError(f"scope {scope}: only one group present in the cohort")
        spec = LearnerSpec(kind="forest", mode="classification",
                           n_trees=cfg.trees, seed=cfg.seed)
        sel = _select_and_eval(matrix, groups, spec, cfg)
        ok = drop_incomplete_rows(matrix.values, groups, sel.selected_indices)
        X = matrix.values[np.ix_(ok, sel.selected_indices)]
        y = groups[ok]
        loo = loo_validate(X, y, spec.train, predict, seed=cfg.seed)
        metrics = classification_metrics(loo.predictions, y)
        rows.append({
            "scope": scope,
            "acc": round_half_away(metrics.acc), "sen": round_half_away(metrics.sen),
            "spe": round_half_away(metrics.spe), "tss": round_half_away(metrics.tss, 4),
            "n_selected": sel.size, "selected_features": sel.selected,
            "n_dropped_rows": sel.n_dropped_rows,
        })
        log.info("classified %s: ACC %.2f SEN %.2f SPE %.2f TSS %.4f (%d features)",
                 scope, metrics.acc, metrics.sen, metrics.spe, metrics.tss, sel.size)
    with open(out / "classification.json", "w") as fh:
        json.dump(rows, fh, indent=1)
    with open(out / "classification.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scope", "acc", "sen", "spe", "tss", "no"])
        for r in rows:
            w.writerow([r["scope"], f"{r['acc']:.2f}", f"{r['sen']:.2f}",
                        f"{r['spe']:.2f}", f"{r['tss']:.4f}", r["n_selected"]])
    return EXIT_OK


def cmd_regress(cfg: RunConfig) -> int:
    if cfg.target in ("", "group"):
        raise PhonassessError("regress needs --target <clinical scale id>")
    if cfg.target not in SCALES:
        raise PhonassessError(f"unknown clinical scale {cfg.target!r}")
    scopes = cfg.scopes() or _scopes_from_features_dir(cfg)
    if not scopes:
        raise PhonassessError("no scopes given and no feature matrices found")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    scale = SCALES[cfg.target]
    rows = []
    for scope in scopes:
        matrix = _load_matrix(cfg, scope)
        y = matrix.scores.get(cfg.target)
        if y is None or np.isfinite(y).sum() < 10:
            raise PhonassessError(f"scope {scope}: fewer than 10 subjects rated on {cfg.target}")
        rated = np.isfinite(y)
        sub = FeatureMatrix(scope=scope,
                            subject_ids=[s for s, keep in zip(matrix.subject_ids, rated) if keep],
                            columns=matrix.columns, values=matrix.values[rated],
                            groups=[g for g, keep in zip(matrix.groups, rated) if keep])
        spec = LearnerSpec(kind="cart", mode="regression",
                           min_leaf=cfg.min_leaf, seed=cfg.seed)
        sel = _select_and_eval(sub, y[rated], spec, cfg)
        ok = drop_incomplete_rows(sub.values, y[rated], sel.selected_indices)
        X = sub.values[np.ix_(ok, sel.selected_indices)]
        truth = y[rated][ok]
        loo = loo_validate(X, truth, spec.train, predict, seed=cfg.seed)
        mae, rho = regression_metrics(loo.predictions, truth)
        rows.append({
            "scope": scope, "target": cfg.target,
            "mae": round_half_away(mae, 4),
            "rho": round_half_away(rho, 4) if np.isfinite(rho) else None,
            "n_selected": sel.size, "selected_features": sel.selected,
            "observed_range": float(np.ptp(truth)),
        })
        log.info("regressed %s on %s: MAE %.3f rho %.3f (%d features)",
                 cfg.target, scope, mae, rho, sel.size)

    best = min(rows, key=lambda r: r["mae"])
    ee1, ee2 = estimation_errors(best["mae"], scale, best["observed_range"])
    summary = {
        "target": cfg.target, "best_scope": best["scope"], "mae": best["mae"],
        "ee1_percent": round_half_away(ee1),
        "ee2_percent": round_half_away(ee2) if ee2 is not None else None,
    }
    with open(out / f"regression_{cfg.target}.json", "w") as fh:
        json.dump({"rows": rows, "best": summary}, fh, indent=1)
    with open(out / f"regression_{cfg.target}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scope", "mae", "rho", "no"])
        for r in rows:
            w.writerow([r["scope"], f"{r['mae']:.4f}",
                        "" if r["rho"] is None else f"{r['rho']:.4f}", r["n_selected"]])
    return EXIT_OK


def cmd_correlate(cfg: RunConfig) -> int:
    scopes = cfg.scopes() or _scopes_from_features_dir(cfg)
    if not scopes:
        raise PhonassessError("no scopes given and no feature matrices found")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    panels = []
    for scale_id in SCALES:
        best = None
        for scope in scopes:
            matrix = _load_matrix(cfg, scope)
            y = matrix.scores.get(scale_id)
            if y is None or np.isfinite(y).sum() < 5:
                continue
            for j, name in enumerate(matrix.columns):
                x = matrix.values[:, j]
                ok = np.isfinite(x) & np.isfinite(y)
                if ok.sum() < 5 or np.ptp(x[ok]) == 0 or np.ptp(y[ok]) == 0:
                    continue
                rho, p = spearman(x[ok], y[ok])
                if best is None or abs(rho) > abs(best[0]):
                    best = (rho, p, scope, name, x[ok], y[ok])
        if best is None:
            log.info("no complete pairs for scale %s; panel skipped", scale_id)
            continue
        rho, p, scope, name, xs, ys = best
        panel = correlation_graph_data(xs, ys)
        panels.append({"scale": scale_id, "scope": scope, "feature": name,
                       "rho": round_half_away(panel.rho, 4), "p": panel.p,
                       "fit_coefficients": panel.coefficients})
        with open(out / f"correlation_{scale_id}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["feature_value", "clinical_value"])
            for fx, fy in zip(panel.feature_values, panel.clinical_values):
                w.writerow([f"{fx:.12g}", f"{fy:.12g}"])
            w.writerow([])
            w.writerow(["feature", name])
            w.writerow(["scope", scope])
            w.writerow(["rho", f"{panel.rho:.6f}"])
            w.writerow(["p", f"{panel.p:.6g}"])
            w.writerow(["fit_a2", f"{panel.coefficients[0]:.12g}"])
            w.writerow(["fit_a1", f"{panel.coefficients[1]:.12g}"])
            w.writerow(["fit_a0", f"{panel.coefficients[2]:.12g}"])
    with open(out / "correlations.json", "w") as fh:
        json.dump(panels, fh, indent=1)
    log.info("wrote %d correlation panels", len(panels))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phonassess",
                                     description="Vowel-phonation biomarker pipeline")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--manifest")
        p.add_argument("--features", help="directory holding features_<scope>.csv")
        p.add_argument("--out")
        p.add_argument("--scope", help="comma-separated scopes like a_s,all_ls")
        p.add_argument("--target")
        p.add_argument("--seed", type=int)
        p.add_argument("--mrmr-k", dest="mrmr_k", type=int)
        p.add_argument("--sffs-patience", dest="sffs_patience", type=int)
        p.add_argument("--trees", type=int)
        p.add_argument("--min-leaf", dest="min_leaf", type=int)
        p.add_argument("--peak-normalize", dest="peak_normalize", action="store_const", const=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic cohort")
    add_common(p_synth)
    p_synth.add_argument("--mode", choices=("regress", "classify"), default="regress")
    p_synth.add_argument("--subjects", type=int, default=40)
    p_synth.add_argument("--vowels", default="a")
    p_synth.add_argument("--tasks", default="s")

    for name in ("extract", "classify", "regress", "correlate"):
        add_common(sub.add_parser(name, help=f"run the {name} stage"))
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        if args.command == "synth":
            return cmd_synth(cfg, args)
        if args.command == "extract":
            if not cfg.manifest:
                raise PhonassessError("extract needs --manifest")
            return cmd_extract(cfg)
        if args.command == "classify":
            return cmd_classify(cfg)
        if args.command == "regress":
            return cmd_regress(cfg)
        if args.command == "correlate":
            return cmd_correlate(cfg)
        raise PhonassessError(f"unknown command {args.command!r}")
    except (ManifestError, AudioError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except PhonassessError as exc:
        log.error("%s", exc)
        message = str(exc).lower()
        data_markers = ("matrix", "group present", "rated", "no complete", "one group")
        return EXIT_DATA if any(m in message for m in data_markers) else EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
