"""Table and plot-data emitters.

Comparison tables put models in columns (config order) with a rank column
per model; rows are the objective functions. The sweep table groups
predicted poverty rates by poverty line with per-line averages. All floats
are written with a fixed format so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv

import numpy as np

from .evaluation import REPORT_ROWS, rank_models

_NUM = ".10g"


def fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, _NUM)
    return str(x)


def fmt2(x):
    """Two-decimal display formatting for table cells."""
    if x is None:
        return "."
    if isinstance(x, float):
        return format(x, ".2f")
    return str(x)


def scenario_row(pattern, model, q, cutpoint, predict_on, n_train, result,
                 adj_rate=None, status="ok", error=""):
    """Flatten one scenario outcome into a CSV-ready dict.

    `cutpoint` is the configured one (a number or "youden") and doubles as
    the table grouping key; the probability threshold actually applied goes
    to resolved_cutpoint (blank for continuous models).
    """
    row = {
        "pattern": pattern, "model": model, "q": q,
        "cutpoint": cutpoint,
        "resolved_cutpoint": "" if result is None or result.cutpoint is None
                             else result.cutpoint,
        "predict_on": predict_on, "n_train": n_train,
        "status": status, "error": error,
    }
    if result is None:
        for key in ("n_eval", "poverty_line", "tp", "tn", "fp", "fn",
                    "true_rate"):
            row[key] = ""
        for _, attr, _d in REPORT_ROWS[2:]:
            row[attr] = ""
        row["pred_poverty"] = ""
    else:
        cm = result.confusion
        row.update({
            "n_eval": cm.total, "poverty_line": result.poverty_line,
            "tp": cm.tp, "tn": cm.tn, "fp": cm.fp, "fn": cm.fn,
            "true_rate": result.true_rate,
        })
        rep = result.metrics.as_dict()
        row["pred_poverty"] = rep["pred_poverty"]
        for _, attr, _d in REPORT_ROWS[3:]:
            if attr in ("tp", "tn", "fp", "fn"):
                continue
            row[attr] = rep[attr]
    row["adjusted_rate"] = "" if adj_rate is None else adj_rate
    row["dropped_regressors"] = (
        "" if result is None else "|".join(result.dropped_regressors))
    return row


SCENARIO_COLUMNS = (
    "pattern", "model", "q", "cutpoint", "resolved_cutpoint", "predict_on",
    "n_train", "n_eval",
    "poverty_line", "tp", "tn", "fp", "fn", "true_rate", "pred_poverty",
    "diff_abs", "t_stat", "pref_tp", "pref_tn", "leakage", "undercoverage",
    "sensitivity", "specificity", "precision", "accuracy", "adjusted_rate",
    "dropped_regressors", "status", "error",
)


def write_scenario_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SCENARIO_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: fmt(row.get(k, "")) for k in SCENARIO_COLUMNS})


def read_scenario_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _row_value(row, attr):
    if attr == "n_eval":
        return int(row["n_eval"])
    v = row.get(attr, "")
    if v is None or v == "":
        return None
    return float(v)


def comparison_table(rows, models):
    """Objective-function table for one (pattern, q, cutpoint) group.

    Returns (header, table rows) where each model contributes a value column
    and a rank column, mirroring the benchmark's comparison layout.
    """
    by_model = {r["model"]: r for r in rows}
    models = [m for m in models if m in by_model]
    header = ["objective"]
    for m in models:
        header += [m, f"{m}_r"]
    out = []
    for label, attr, direction in REPORT_ROWS:
        if label == "Observations":
            vals = {m: float(by_model[m]["n_eval"]) for m in models}
        elif label == "TruePovRate":
            vals = {m: float(by_model[m]["true_rate"]) for m in models}
        elif label == "PredPoverty":
            vals = {m: _row_value(by_model[m], "pred_poverty") for m in models}
        elif attr in ("tp", "tn", "fp", "fn"):
            vals = {m: float(by_model[m][attr]) for m in models}
        else:
            vals = {m: _row_value(by_model[m], attr) for m in models}
        if label == "Diff.(absmin)":
            rank_vals = {m: _row_value(by_model[m], "diff_abs") for m in models}
        else:
            rank_vals = vals
        ranks = (rank_models(rank_vals, direction)
                 if direction and len(models) >= 2 else None)
        line = [label]
        for m in models:
            line.append(fmt2(vals[m]))
            line.append(str(ranks[m]) if ranks else ".")
        out.append(line)
    return header, out


def write_table_csv(path, header, table):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(table)


def write_table_markdown(path, header, table):
    widths = [max(len(str(r[i])) for r in [header] + table)
              for i in range(len(header))]
    with open(path, "w") as fh:
        fh.write("| " + " | ".join(str(h).ljust(w) for h, w in zip(header, widths)) + " |\n")
        fh.write("|" + "|".join("-" * (w + 2) for w in widths) + "|\n")
        for row in table:
            fh.write("| " + " | ".join(str(c).ljust(w) for c, w in zip(row, widths)) + " |\n")


def sweep_table(rows, models, lines, patterns):
    """Predicted-poverty sweep grouped by poverty line, with per-line
    averages of both rates and ranks."""
    header = ["scenario"]
    for m in models:
        header += [m, f"{m}_r"]
    out = []
    for q in lines:
        out.append([f"PovLine={100 * q:g}%"] + ["."] * (2 * len(models)))
        rank_sums = {m: [] for m in models}
        rate_sums = {m: [] for m in models}
        for pat in patterns:
            group = {r["model"]: r for r in rows
                     if r["pattern"] == pat and float(r["q"]) == q
                     and r["status"] == "ok"}
            present = [m for m in models if m in group]
            line = [pat]
            if len(present) >= 2:
                true_rate = float(group[present[0]]["true_rate"])
                diffs = {m: abs(float(group[m]["pred_poverty"]) - true_rate)
                         for m in present}
                ranks = rank_models(diffs, "min")
            else:
                ranks = {}
            for m in models:
                if m in group:
                    rate = float(group[m]["pred_poverty"])
                    line.append(fmt2(rate))
                    line.append(str(ranks.get(m, ".")))
                    rate_sums[m].append(rate)
                    if m in ranks:
                        rank_sums[m].append(ranks[m])
                else:
                    line += [".", "."]
            out.append(line)
        avg = ["Average"]
        for m in models:
            avg.append(fmt2(float(np.mean(rate_sums[m]))) if rate_sums[m] else ".")
            avg.append(fmt2(float(np.mean(rank_sums[m]))) if rank_sums[m] else ".")
        out.append(avg)
    return header, out


def write_cdf_csv(path, values, label):
    """Sorted (value, cumulative_share) pairs for one prediction vector."""
    values = np.sort(np.asarray(values, dtype=np.float64))
    n = values.size
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["value", "cumulative_share", "series"])
        for i, v in enumerate(values):
            w.writerow([fmt(float(v)), fmt((i + 1) / n), label])
