"""Writing sweep outputs and summarising reports."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .experiment import ExperimentResult


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def write_outputs(result: ExperimentResult, out_dir) -> Path:
    """Write report.json, samples.csv, theory.csv, plotdata/*.csv and timing.json.

    Wall-clock times go to timing.json only, so report.json is a pure
    function of the configuration.
    """
    out = Path(out_dir)
    (out / "plotdata").mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dump_report(result.report))
    (out / "timing.json").write_text(json.dumps(result.timing, indent=2) + "\n")
    with open(out / "samples.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "replicate_id", "z_index", "I", "I_tilde"])
        for lam, raw in result.raw.items():
            tilde = result.tilde[lam]
            for k in range(raw.shape[0]):
                for j in range(raw.shape[1]):
                    w.writerow([lam, k, j, raw[k, j], tilde[k, j]])
    _write_csv(out / "theory.csv", ["quantity", "lambda", "value"], result.theory_rows)
    for name, (header, rows) in result.plotdata.items():
        _write_csv(out / "plotdata" / f"{name}.csv", header, rows)
    return out


def load_report(path) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / "report.json"
    return json.loads(p.read_text())


def summarize(report: dict) -> str:
    """Human-readable table of per-intensity statistics and check outcomes."""
    lines = [f"experiment: {report['name']}"]
    for r in report["rows"]:
        parts = [f"lambda={r['lambda']:g}", f"N={r['replicates']}",
                 f"var={r['combined_variance']:.4g}", f"cf_dist={r['cf_distance']:.4f}"]
        if "ks_pvalue" in r:
            parts.append(f"ks_p={r['ks_pvalue']:.3g}")
        if "sigma_fit" in r:
            parts.append(f"sigma_fit={r['sigma_fit']:.4g}")
        if "laplace" in r:
            lb = r["laplace"]
            parts.append(f"laplace mc={lb['monte_carlo']:.5g}+-{lb['standard_error']:.2g} "
                         f"oracle={lb['oracle']:.5g}")
        lines.append("  " + " ".join(parts))
    for c in report["checks"]:
        detail = {k: v for k, v in c.items() if k not in ("name", "passed")}
        lines.append(f"  {'PASS' if c['passed'] else 'FAIL'} {c['name']} {detail}")
    lines.append("overall: " + ("PASS" if report["passed"] else "FAIL"))
    return "\n".join(lines)
