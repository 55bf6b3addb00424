"""CSV and manifest emission for experiment runs."""

from __future__ import annotations

import csv
import json
import subprocess
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .feedback import Regime
from .montecarlo import CurvePoint, ExperimentConfig, reference_curve, run_experiment

CSV_HEADER = ["U", "mean_bps_hz", "stderr", "mean_scheduled", "n_trials"]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_curve_csv(path: Path, points: Sequence[CurvePoint]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for p in points:
            w.writerow([p.U, _fmt(p.mean), _fmt(p.stderr), _fmt(p.mean_scheduled), p.n_trials])


def read_curve_csv(path: Path) -> list[CurvePoint]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [
        CurvePoint(U=int(r["U"]), mean=float(r["mean_bps_hz"]), stderr=float(r["stderr"]),
                   n_trials=int(r["n_trials"]), mean_scheduled=float(r["mean_scheduled"]))
        for r in rows
    ]


def write_reference_csv(path: Path, n_t: int, user_grid: Sequence[int]) -> None:
    """Asymptotic scaling-law curves in bps/Hz for ``U >= 3``."""
    users = [u for u in user_grid if u >= 3]
    loglog = reference_curve(Regime.NORMAL, n_t, users)
    logu = reference_curve(Regime.INTERFERENCE_LIMITED, n_t, users)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["U", "nt_loglog_u", "nt_over_nt_minus_1_log_u"])
        for u, a, b in zip(users, loglog, logu):
            w.writerow([u, _fmt(a), _fmt(b)])


def build_id() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True, text=True, timeout=10,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return "unknown"


def run_configs(configs: Sequence[ExperimentConfig], out_dir: Path, name: str,
                seed: Optional[int] = None, threads: Optional[int] = None) -> list[Path]:
    """Run every curve, write one CSV each plus ``manifest.json``.

    The manifest holds only deterministic content so reruns are
    byte-identical; wall-clock timing goes to ``timing.json``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ValueError("curve names must be unique; set 'label' to disambiguate")

    start = time.perf_counter()
    written = []
    entries = []
    timings = {}
    for cfg in configs:
        t0 = time.perf_counter()
        pts = run_experiment(cfg, threads=threads)
        path = out_dir / f"{cfg.name}.csv"
        write_curve_csv(path, pts)
        written.append(path)
        entries.append({"file": path.name, "config": cfg.model_dump(mode="json")})
        timings[path.name] = time.perf_counter() - t0

    if name == "fig2":
        ref = out_dir / "reference_scaling.csv"
        write_reference_csv(ref, configs[0].n_t, configs[0].user_grid)
        written.append(ref)

    manifest = {
        "name": name,
        "seed": seed if seed is not None else configs[0].seed,
        "package_version": __version__,
        "build": build_id(),
        "curves": entries,
    }
    mpath = out_dir / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(mpath)
    tpath = out_dir / "timing.json"
    timings["total_seconds"] = time.perf_counter() - start
    timings["finished_at"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    tpath.write_text(json.dumps(timings, indent=2) + "\n", encoding="utf-8")
    return written


def load_manifest_configs(path: Path) -> list[ExperimentConfig]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return [ExperimentConfig.model_validate(c["config"]) for c in doc["curves"]]
