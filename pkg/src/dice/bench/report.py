"""Report emission: JSON document, CSV rows, aligned text summary, PNG figures.

A report document has an optional ``suite`` part (from ``run_suite``) and an
optional ``workload`` part (``{"runs": [WorkloadResult.to_doc(), ...]}``).
``write_report("out/report.json", doc)`` writes the JSON and, next to it,
``report.csv``, ``report.txt`` and one PNG per part.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from dice.errors import IoError

SUITE_COLUMNS = ("query", "mode", "cipher", "status", "strategy", "min_ms", "mean_ms", "max_ms",
                 "rows_transferred", "encrypt_ops", "decrypt_ops", "result_rows", "reason")
WORKLOAD_COLUMNS = ("policy", "clients", "orders_per_minute", "transactions", "statements",
                    "mean_tx_latency_ms", "mean_statement_latency_ms", "conserved")


def _ms(micros) -> str:
    return f"{micros / 1000:.3f}" if micros is not None else ""


def suite_rows(suite: dict) -> list:
    out = []
    for e in suite.get("results", []):
        w = e.get("wall_micros") or {}
        out.append({
            "query": e["query"], "mode": e["mode"], "cipher": e["cipher"], "status": e["status"],
            "strategy": e.get("strategy") or "", "min_ms": _ms(w.get("min")),
            "mean_ms": _ms(w.get("mean")), "max_ms": _ms(w.get("max")),
            "rows_transferred": e.get("rows_transferred", 0),
            "encrypt_ops": e.get("encrypt_ops", 0), "decrypt_ops": e.get("decrypt_ops", 0),
            "result_rows": e.get("result_rows", 0), "reason": e.get("reason") or "",
        })
    return out


def workload_rows(workload: dict) -> list:
    return [{k: (round(r[k], 3) if isinstance(r[k], float) else r[k]) for k in WORKLOAD_COLUMNS}
            for r in workload.get("runs", [])]


def _table(columns, rows) -> str:
    cells = [list(columns)] + [[str(r[c]) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    lines = ["  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def summary_text(doc: dict) -> str:
    parts = []
    if "suite" in doc:
        suite = doc["suite"]
        ds = suite.get("dataset", {})
        cfg = suite.get("config", {})
        parts.append(f"query suite: scale={cfg.get('scale')} seed={cfg.get('seed')} "
                     f"repetitions={cfg.get('repetitions')} latency_ms={cfg.get('latency_ms')} "
                     f"dataset={ds.get('digest', '')[:16]}")
        cols = [c for c in SUITE_COLUMNS if c != "reason"]
        parts.append(_table(cols, suite_rows(suite)))
        skipped = [r for r in suite_rows(suite) if r["status"] == "skipped"]
        if skipped:
            parts.append("skipped:")
            parts.extend(f"  {r['query']} under {r['cipher']}: {r['reason']}" for r in skipped)
    if "workload" in doc:
        parts.append("workload:")
        parts.append(_table(WORKLOAD_COLUMNS, workload_rows(doc["workload"])))
    return "\n".join(parts) + "\n"


def csv_text(doc: dict) -> str:
    buf = io.StringIO()
    if "suite" in doc:
        w = csv.DictWriter(buf, SUITE_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(suite_rows(doc["suite"]))
    if "workload" in doc:
        if "suite" in doc:
            buf.write("\n")
        w = csv.DictWriter(buf, WORKLOAD_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(workload_rows(doc["workload"]))
    return buf.getvalue()


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_suite(suite: dict, path: Path) -> Path:
    """Grouped bars: mean wall time per query for every (mode, cipher) run."""
    plt = _plt()
    ok = [e for e in suite.get("results", []) if e["status"] == "ok"]
    queries = list(dict.fromkeys(e["query"] for e in ok))
    series = list(dict.fromkeys((e["mode"], e["cipher"]) for e in ok))
    width = 0.8 / max(1, len(series))
    fig, ax = plt.subplots(figsize=(max(10, 1.2 * len(queries) + 4), 5))
    colors = plt.get_cmap("tab20").colors
    for i, (mode, cipher) in enumerate(series):
        vals = {e["query"]: e["wall_micros"]["mean"] / 1000 for e in ok
                if (e["mode"], e["cipher"]) == (mode, cipher)}
        xs = [q + i * width for q, name in enumerate(queries) if name in vals]
        ys = [vals[name] for name in queries if name in vals]
        label = mode if mode == "plain" else f"{mode}/{cipher}"
        ax.bar(xs, ys, width, label=label, color=colors[i % len(colors)])
    ax.set_xticks([q + 0.4 - width / 2 for q in range(len(queries))])
    ax.set_xticklabels(queries, rotation=30, ha="right")
    ax.set_yscale("log")
    ax.set_ylabel("mean wall time (ms, log)")
    ax.set_title("query suite")
    ax.legend(fontsize="small", loc="upper left", bbox_to_anchor=(1.01, 1))
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def plot_workload(workload: dict, path: Path) -> Path:
    """Orders per minute and per-statement latency against client count, per policy."""
    plt = _plt()
    runs = workload.get("runs", [])
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
    for policy in dict.fromkeys(r["policy"] for r in runs):
        pts = sorted((r["clients"], r["orders_per_minute"], r["mean_statement_latency_ms"])
                     for r in runs if r["policy"] == policy)
        left.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=policy)
        right.plot([p[0] for p in pts], [p[2] for p in pts], marker="o", label=policy)
    for a in (left, right):
        a.xaxis.get_major_locator().set_params(integer=True)
    left.set_xlabel("clients")
    left.set_ylabel("orders / minute")
    right.set_xlabel("clients")
    right.set_ylabel("mean statement latency (ms)")
    left.legend(fontsize="small")
    fig.suptitle("workload")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def write_report(out, doc: dict) -> list:
    """Write the JSON report and its siblings; returns the written paths."""
    out = Path(out)
    stem = out.with_suffix("")
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written = [out]
        for suffix, text in ((".csv", csv_text(doc)), (".txt", summary_text(doc))):
            p = stem.with_suffix(suffix)
            p.write_text(text, encoding="utf-8")
            written.append(p)
        if doc.get("suite", {}).get("results"):
            written.append(plot_suite(doc["suite"], Path(f"{stem}_suite.png")))
        if doc.get("workload", {}).get("runs"):
            written.append(plot_workload(doc["workload"], Path(f"{stem}_workload.png")))
    except OSError as exc:
        raise IoError(f"cannot write report {out}: {exc}") from exc
    return written
