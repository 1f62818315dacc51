"""Command-line experiment runner.

Verbs: generate (synthetic data to CSV), corrupt (mask to CSV), run (full
experiment), tune (grid search), report (re-render tables from stored
scenario rows). Exit codes: 0 ok, 1 partial scenario failures, 2 config
error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import models as M
from ._kernels import BACKEND
from .config import ExperimentConfig, PatternSpec, parse_config, parse_config_file, preset
from .dataset import GeneratorConfig, load_csv, synthesize
from .errors import ConfigError, PovbenchError
from .missingness import MissingnessMask, conditional_mask, mcar
from .pipeline import (PREDICT_ON_ALL, PREDICT_ON_MISSING, AUTO_YOUDEN,
                       Scenario, error_adjusted_rate,
                       error_adjusted_rate_categorical, run_scenario)
from .reporting import (comparison_table, fmt, read_scenario_csv, scenario_row,
                        sweep_table, write_cdf_csv, write_scenario_csv,
                        write_table_csv, write_table_markdown)
from .tuning import GridSpec, grid_search

MANIFEST_NAME = "run_manifest.json"


def _derive_seed(*parts) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def build_dataset(cfg: ExperimentConfig):
    if cfg.source == "csv":
        ds = load_csv(cfg.csv_path, schema=cfg.regressors)
    else:
        gen = GeneratorConfig(n=cfg.n, seed=cfg.seeds["data"],
                              noise_sd=cfg.noise_sd)
        ds = synthesize(gen)
    if cfg.regressors != ds.regressor_order:
        ds = ds.with_regressors(cfg.regressors)
    return ds


def build_mask(cfg: ExperimentConfig, ds, pattern: PatternSpec,
               pattern_index: int) -> MissingnessMask:
    seed = _derive_seed(cfg.seeds["mask"], pattern_index)
    if pattern.kind == "mcar":
        return mcar(ds, pattern.share, seed)
    return conditional_mask(ds, pattern.kind, pattern.share, seed)


def enumerate_scenarios(cfg: ExperimentConfig):
    descs = []
    index = 0
    for p_i, pat in enumerate(cfg.patterns):
        if pat.kind == "mcar" and pat.share == 0 and cfg.predict_on == "missing":
            raise ConfigError(
                f"pattern {pat.label} leaves nothing to predict with "
                "predict_on = 'missing'; use predict_on = 'all'")
        for l_i, q in enumerate(cfg.lines):
            for c_i, cut in enumerate(cfg.cutpoints):
                for m_i, code in enumerate(cfg.models):
                    descs.append({
                        "index": index, "pattern_index": p_i, "model": code,
                        "q": q, "cutpoint": cut,
                        "model_seed": _derive_seed(cfg.seeds["model"], p_i,
                                                   m_i, l_i, c_i),
                        "adjust_seed": _derive_seed(cfg.seeds["model"], p_i,
                                                    m_i, l_i, c_i, 1),
                    })
                    index += 1
    return descs


def run_descriptor(cfg: ExperimentConfig, ds, masks, desc):
    """One scenario -> (row dict, predictions or None)."""
    pat = cfg.patterns[desc["pattern_index"]]
    mask = masks[desc["pattern_index"]]
    spec = M.ModelSpec.from_code(desc["model"], hyper=cfg.hyper,
                                 regressor_order=cfg.regressors)
    cut = AUTO_YOUDEN if desc["cutpoint"] == "youden" else desc["cutpoint"]
    predict_on = (PREDICT_ON_ALL if cfg.predict_on == "all"
                  else PREDICT_ON_MISSING)
    scenario = Scenario(dataset=ds, mask=mask, spec=spec, q=desc["q"],
                        cutpoint=cut, seed=desc["model_seed"],
                        predict_on=predict_on)
    n_train = int((~mask.missing).sum())
    try:
        result = run_scenario(scenario)
    except PovbenchError as exc:
        row = scenario_row(pat.label, desc["model"], desc["q"],
                           desc["cutpoint"], cfg.predict_on, n_train, None,
                           status="failed", error=str(exc))
        return row, None
    adj = None
    if cfg.error_adjust:
        if spec.target == M.CONTINUOUS:
            X_eval = ds.design_matrix(
                result.model.spec.regressor_order)[result.eval_index]
            adj = error_adjusted_rate(result.model, X_eval,
                                      result.poverty_line, cfg.error_draws,
                                      desc["adjust_seed"])
        else:
            adj = error_adjusted_rate_categorical(result.predictions,
                                                  cfg.error_draws,
                                                  desc["adjust_seed"])
    row = scenario_row(pat.label, desc["model"], desc["q"], desc["cutpoint"],
                       cfg.predict_on, n_train, result, adj_rate=adj)
    return row, result


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _group_label(pattern, q, cut):
    cut_part = "youden" if cut == "youden" else f"{float(cut):g}"
    return f"{pattern}_q{int(round(q * 100)):02d}_c{cut_part}"


def cmd_run(args) -> int:
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    ds = build_dataset(cfg)
    masks = [build_mask(cfg, ds, pat, i) for i, pat in enumerate(cfg.patterns)]
    try:
        descs = enumerate_scenarios(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    deadline = (time.monotonic() + args.budget_seconds
                if args.budget_seconds else None)
    rows = [None] * len(descs)
    results = [None] * len(descs)
    skipped = 0
    if args.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=args.workers, initializer=_init_worker,
                initargs=(cfg,)) as pool:
            futures = {pool.submit(_worker_run, d): d for d in descs}
            for fut in concurrent.futures.as_completed(futures):
                d = futures[fut]
                rows[d["index"]], results[d["index"]] = fut.result()
    else:
        for d in descs:
            if deadline is not None and time.monotonic() > deadline:
                pat = cfg.patterns[d["pattern_index"]]
                rows[d["index"]] = scenario_row(
                    pat.label, d["model"], d["q"], d["cutpoint"],
                    cfg.predict_on, 0, None, status="skipped",
                    error="budget exhausted")
                skipped += 1
                continue
            rows[d["index"]], results[d["index"]] = run_descriptor(
                cfg, ds, masks, d)

    write_scenario_csv(outdir / "scenarios.csv", rows)
    written = ["scenarios.csv"]
    written += _emit_tables(outdir, rows, cfg.models)
    written += _emit_cdfs(outdir, cfg, ds, descs, rows, results)

    failures = [r for r in rows if r["status"] != "ok"]
    manifest = {
        "format_version": 1,
        "tool_version": __version__,
        "numpy_version": np.__version__,
        "kernel_backend": BACKEND,
        "config_sha256": hashlib.sha256(
            cfg.config_hash_material().encode()).hexdigest(),
        "seeds": cfg.seeds,
        "n_scenarios": len(rows),
        "n_failed": len(failures),
        "outputs": {},
    }
    for rel in sorted(written):
        manifest["outputs"][rel] = _sha256(outdir / rel)
    with open(outdir / MANIFEST_NAME, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    print(f"{len(rows)} scenarios, {len(failures)} failed/skipped; "
          f"outputs in {outdir}")
    return 1 if failures or skipped else 0


_WORKER_STATE = {}


def _init_worker(cfg):
    _WORKER_STATE["cfg"] = cfg
    ds = build_dataset(cfg)
    _WORKER_STATE["ds"] = ds
    _WORKER_STATE["masks"] = [build_mask(cfg, ds, pat, i)
                              for i, pat in enumerate(cfg.patterns)]


def _worker_run(desc):
    return run_descriptor(_WORKER_STATE["cfg"], _WORKER_STATE["ds"],
                          _WORKER_STATE["masks"], desc)


def _emit_tables(outdir, rows, models):
    written = []
    ok_rows = [r for r in rows if r["status"] == "ok"]
    groups = []
    for r in ok_rows:
        key = (r["pattern"], r["q"], r["cutpoint"])
        if key not in groups:
            groups.append(key)
    for pattern, q, cut in groups:
        grp = [r for r in ok_rows
               if (r["pattern"], r["q"], r["cutpoint"]) == (pattern, q, cut)]
        if len({r["model"] for r in grp}) < 2:
            continue
        header, table = comparison_table(grp, models)
        label = _group_label(pattern, float(q), cut)
        for ext, writer in (("csv", write_table_csv), ("md", write_table_markdown)):
            rel = f"comparison_{label}.{ext}"
            writer(outdir / rel, header, table)
            written.append(rel)
    patterns = []
    for r in ok_rows:
        if r["pattern"] not in patterns:
            patterns.append(r["pattern"])
    lines = sorted({float(r["q"]) for r in ok_rows})
    if patterns and lines:
        header, table = sweep_table(ok_rows, models, lines, patterns)
        write_table_csv(outdir / "sweep.csv", header, table)
        written.append("sweep.csv")
    return written


def _emit_cdfs(outdir, cfg, ds, descs, rows, results):
    if cfg.cdf == "none":
        return []
    cdf_dir = outdir / "cdf"
    cdf_dir.mkdir(exist_ok=True)
    write_cdf_csv(cdf_dir / "truth.csv", ds.log_income, "truth")
    written = ["cdf/truth.csv"]
    first_key = None
    for d in descs:
        row, res = rows[d["index"]], results[d["index"]]
        if res is None:
            continue
        key = (row["pattern"], row["q"], row["cutpoint"])
        if cfg.cdf == "first":
            if first_key is None:
                first_key = key
            if key != first_key:
                continue
        label = _group_label(row["pattern"], float(row["q"]), d["cutpoint"])
        rel = f"cdf/{label}_{row['model']}.csv"
        write_cdf_csv(outdir / rel, res.predictions, row["model"])
        written.append(rel)
    return written


def cmd_generate(args) -> int:
    gen = GeneratorConfig(n=args.n, seed=args.seed, noise_sd=args.noise_sd)
    try:
        ds = synthesize(gen)
    except PovbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    ds.write_csv(args.out)
    print(f"wrote {ds.n} rows to {args.out} "
          f"(noise_sd={gen.resolved_noise_sd():.6f})")
    return 0


def cmd_corrupt(args) -> int:
    try:
        ds = load_csv(args.data)
        pat = PatternSpec.parse(args.pattern)
        if pat.kind == "mcar":
            mask = mcar(ds, pat.share, args.seed)
        else:
            mask = conditional_mask(ds, pat.kind, pat.share, args.seed)
    except PovbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    mask.write_csv(args.out, ids=ds.ids)
    print(f"masked {mask.n_missing}/{ds.n} incomes ({pat.label}) -> {args.out}")
    return 0


def cmd_tune(args) -> int:
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    ds = build_dataset(cfg)
    budget = args.budget_seconds
    start = time.monotonic()
    best_rows = []
    written = []
    incomplete = False
    for family in cfg.grid_families:
        if cfg.grid_axes and family in cfg.grid_axes:
            gs = GridSpec(family, cfg.grid_target, cfg.grid_axes[family],
                          split_seed=cfg.seeds["split"])
        elif cfg.grid_preset == "full":
            gs = GridSpec.default(family, cfg.grid_target,
                                  split_seed=cfg.seeds["split"])
        else:
            gs = GridSpec.desk(family, cfg.grid_target,
                               split_seed=cfg.seeds["split"])
        remaining = (None if budget is None
                     else max(budget - (time.monotonic() - start), 1.0))
        res = grid_search(gs, ds, cfg.grid_line, budget_seconds=remaining)
        incomplete |= not res.completed
        rel = f"grid_{family.lower()}_{cfg.grid_target.lower()}.csv"
        _write_grid_table(outdir / rel, res)
        written.append(rel)
        for pname, pval in sorted((res.best_params or {}).items()):
            best_rows.append([family, cfg.grid_target, cfg.grid_line,
                              pname, pval])
        best_rows.append([family, cfg.grid_target, cfg.grid_line,
                          "best_accuracy", fmt(res.best_score)])
        summ = res.summary
        print(f"{family}: {len(res.score_table)} points, "
              f"max={fmt(summ['max'])} mean={fmt(summ['mean'])} "
              f"sd={fmt(summ['sd'])} complete={res.completed}")
    with open(outdir / "grid_best.csv", "w", newline="") as fh:
        import csv as _csv
        w = _csv.writer(fh)
        w.writerow(["family", "target", "line", "parameter", "value"])
        w.writerows(best_rows)
    return 1 if incomplete else 0


def _write_grid_table(path, res):
    import csv as _csv
    names = sorted(res.score_table[0][0]) if res.score_table else []
    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(names + ["accuracy"])
        for params, score in res.score_table:
            w.writerow([params[n] for n in names] + [fmt(score)])


def cmd_report(args) -> int:
    outdir = Path(args.out)
    src = outdir / "scenarios.csv"
    if not src.exists():
        print(f"error: {src} not found (run an experiment first)",
              file=sys.stderr)
        return 2
    rows = read_scenario_csv(src)
    models = []
    for r in rows:
        if r["model"] not in models:
            models.append(r["model"])
    written = _emit_tables(outdir, rows, models)
    print(f"re-rendered {len(written)} table files in {outdir}")
    return 0


def _load_config(args) -> ExperimentConfig:
    if args.config:
        return parse_config_file(args.config)
    if args.preset:
        return parse_config(preset(args.preset), origin=f"preset:{args.preset}")
    raise ConfigError("one of --config or --preset is required")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="povbench",
        description="Benchmark poverty-prediction models under controlled "
                    "missing-income patterns.")
    sub = ap.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("generate", help="write a synthetic survey CSV")
    g.add_argument("--n", type=int, default=7062)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--noise-sd", type=float, default=None)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("corrupt", help="write a missingness mask CSV")
    c.add_argument("--data", required=True)
    c.add_argument("--pattern", required=True,
                   help="mcar:<share> | mar_pure | mar_mnar | mnar_pure")
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_corrupt)

    for name, fn, hlp in (("run", cmd_run, "run a full experiment"),
                          ("tune", cmd_tune, "hyperparameter grid search")):
        p = sub.add_parser(name, help=hlp)
        grp = p.add_mutually_exclusive_group(required=True)
        grp.add_argument("--config", help="TOML experiment config")
        grp.add_argument("--preset",
                         choices=["baseline", "table6", "grid-desk"])
        p.add_argument("--out", required=True)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--budget-seconds", type=float, default=None)
        p.set_defaults(func=fn)

    r = sub.add_parser("report", help="re-render tables from scenarios.csv")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
