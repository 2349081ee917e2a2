"""Command-line experiment runner.

Subcommands write into an output directory::

    records/*.csv    per-trajectory k,kappa,S,L,crossed,alpha
    paths/*.csv      scaled paths as t,value
    reports/*.json   acceptance reports (verify)
    summary.json     ensemble summary

Every file starts with the config hash.  A directory produced by a
different configuration is never overwritten, and a failed run leaves no
partial output behind.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import rng as streams
from .acceptance import AcceptanceSettings, run_all
from .config import ConfigError, ExperimentConfig, load_config
from .limit_processes import sample_qrbm, sample_QRBM
from .lorentz_sim import LorentzConfig, iter_ensemble, local_time_path, scaled_path
from .stats import estimate_c0, estimate_sigma
from .walk_model import WalkConfig, run_walk, walk_stream_pair
from .wall_holes import Regime

THREADS_ENV = "LORENTZ_HOLES_THREADS"
CHUNK = 100


class OutputConflict(RuntimeError):
    pass


def header(config: ExperimentConfig) -> str:
    return f"lorentz_holes {__version__} config_hash={config.config_hash()} seed={config.seed}"


def _json_dump(payload: dict, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


class OutputDir:
    """Build outputs in a scratch directory and move them into place only on success."""

    def __init__(self, target: str | Path, config_hash: str):
        self.target = Path(target)
        self.config_hash = config_hash
        summary = self.target / "summary.json"
        if summary.exists():
            with open(summary) as fh:
                existing = json.load(fh).get("config_hash")
            if existing != config_hash:
                raise OutputConflict(
                    f"{self.target} holds results of config {existing}, not {config_hash}; choose another --out"
                )
        elif self.target.exists() and any(self.target.iterdir()):
            raise OutputConflict(f"{self.target} exists and is not an experiment directory")

    def __enter__(self) -> Path:
        self.target.parent.mkdir(parents=True, exist_ok=True)
        self.scratch = Path(tempfile.mkdtemp(prefix=f".{self.target.name}.", dir=self.target.parent))
        for sub in ("records", "paths", "reports"):
            (self.scratch / sub).mkdir()
        return self.scratch

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            shutil.rmtree(self.scratch, ignore_errors=True)
            return False
        if self.target.exists():
            shutil.rmtree(self.target)
        os.replace(self.scratch, self.target)
        return False


def _pool_map(fn, jobs, threads):
    if threads <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


def _lorentz_chunk(job):
    config, lo, hi = job
    lorentz = LorentzConfig(config.lattice, config.resolved_wall(), config.count_wall_hits)
    rows = []
    for i, records in iter_ensemble(config.seed, lorentz, {"run": config.schedule}, config.n, hi - lo, start=lo, chunk=CHUNK):
        record = records["run"]
        rows.append((i, record.S[-1], record.L[-1], record.wall_hits, len(record.crossing_steps), record if i < config.records else None))
    return rows


def cmd_simulate_lorentz(config: ExperimentConfig) -> Path:
    config.validate()
    jobs = [(config, lo, min(lo + CHUNK, config.samples)) for lo in range(0, config.samples, CHUNK)]
    with OutputDir(config.out, config.config_hash()) as out:
        rows = [row for part in _pool_map(_lorentz_chunk, jobs, config.threads) for row in part]
        rows.sort(key=lambda r: r[0])
        head = header(config)
        for i, _, _, _, _, record in rows:
            if record is not None:
                record.to_csv(out / "records" / f"trajectory_{i:05d}.csv", head)
                scaled_path(record, config.n).to_csv(out / "paths" / f"position_{i:05d}.csv", head)
                local_time_path(record, config.n).to_csv(out / "paths" / f"local_time_{i:05d}.csv", head)
        final = np.array([r[1] for r in rows])
        visits = np.array([r[2] for r in rows], dtype=float)
        summary = {
            "config_hash": config.config_hash(),
            "seed": config.seed,
            "command": "simulate-lorentz",
            "regime": config.schedule.regime.value,
            "n": config.n,
            "samples": config.samples,
            "mean_visits_scaled": float(np.mean(visits) / math.sqrt(config.n)),
            "mean_wall_hits": float(np.mean([r[3] for r in rows])),
            "mean_crossings": float(np.mean([r[4] for r in rows])),
            "fraction_positive_end": float(np.mean(final > 0)),
        }
        if config.samples >= 2:
            sigma = estimate_sigma(final, config.n)
            summary["sigma_hat"] = sigma
            if config.schedule.regime is Regime.NO_WALL and sigma > 0:
                summary["c0_hat"] = estimate_c0(visits, config.n, sigma)
        _json_dump(summary, out / "summary.json")
    return Path(config.out)


def cmd_simulate_walk(config: ExperimentConfig) -> Path:
    config.validate(model="walk")
    walk = WalkConfig(config.n, config.schedule)
    with OutputDir(config.out, config.config_hash()) as out:
        head = header(config)
        final = np.empty(config.samples)
        visits = np.empty(config.samples)
        crossings = np.empty(config.samples)
        for i in range(config.samples):
            step_rng, cross_rng = walk_stream_pair(config.seed, i)
            record = run_walk(step_rng, walk, cross_rng)
            final[i], visits[i], crossings[i] = record.S[-1], record.L[-1], record.crossing_steps.size
            if i < config.records:
                record.to_csv(out / "records" / f"walk_{i:05d}.csv", head)
                scaled_path(record, config.n).to_csv(out / "paths" / f"walk_{i:05d}.csv", head)
        summary = {
            "config_hash": config.config_hash(),
            "seed": config.seed,
            "command": "simulate-walk",
            "regime": config.schedule.regime.value,
            "n": config.n,
            "samples": config.samples,
            "mean_visits_scaled": float(visits.mean() / math.sqrt(config.n)),
            "mean_crossings": float(crossings.mean()),
            "fraction_positive_end": float(np.mean(final > 0)),
        }
        if config.samples >= 2:
            summary["sigma_hat"] = estimate_sigma(final, config.n)
        _json_dump(summary, out / "summary.json")
    return Path(config.out)


def cmd_sample_limit(config: ExperimentConfig) -> Path:
    config.validate()
    lim = config.limit
    with OutputDir(config.out, config.config_hash()) as out:
        head = header(config)
        ends = np.empty(config.samples)
        for i in range(config.samples):
            rng = streams.substream(config.seed, i, streams.LIMIT)
            if lim.kind == "qrbm":
                path = sample_qrbm(rng, lim.grid, lim.c, lim.sigma)
            else:
                path = sample_QRBM(rng, lim.grid, lim.c, lim.sigma, lim.t0)
            ends[i] = path.values[-1]
            if i < config.records:
                path.to_csv(out / "paths" / f"{lim.kind}_{i:05d}.csv", head)
        summary = {
            "config_hash": config.config_hash(),
            "seed": config.seed,
            "command": "sample-limit",
            "kind": lim.kind,
            "c": lim.c,
            "sigma": lim.sigma,
            "grid": lim.grid,
            "samples": config.samples,
            "mean_end": float(ends.mean()),
            "fraction_positive_end": float(np.mean(ends > 0)),
        }
        if config.samples >= 2:
            summary["std_end"] = float(ends.std(ddof=1))
        _json_dump(summary, out / "summary.json")
    return Path(config.out)


def cmd_verify(config: ExperimentConfig, criteria=None, settings: AcceptanceSettings | None = None) -> int:
    """Run the acceptance suite on the config's lattice and seed; 0 iff every criterion passes."""
    config.validate()
    settings = AcceptanceSettings(seed=config.seed) if settings is None else settings
    with OutputDir(config.out, config.config_hash()) as out:
        results = run_all(settings, criteria, config.lattice)
        for result in results:
            print(result.summary_line())
            payload = []
            for report in result.reports:
                payload.append(
                    {
                        "name": report.name,
                        "statistic": report.statistic,
                        "threshold": report.threshold,
                        "p_value": report.p_value,
                        "pass": report.passed,
                        "details": report.details,
                        "seed": settings.seed,
                        "config_hash": config.config_hash(),
                    }
                )
            with open(out / "reports" / f"criterion_{result.number}.json", "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True, default=float)
                fh.write("\n")
        summary = {
            "config_hash": config.config_hash(),
            "seed": settings.seed,
            "command": "verify",
            "criteria": {str(r.number): r.passed for r in results},
            "passed": all(r.passed for r in results),
        }
        _json_dump(summary, out / "summary.json")
    return 0 if summary["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lorentz-holes", description="Lorentz process with a holed wall.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate-lorentz", "billiard trajectories under the configured hole schedule"),
        ("simulate-walk", "random-walk analogue under the configured schedule"),
        ("sample-limit", "qRBM / QRBM sample paths"),
        ("verify", "run the acceptance suite"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="experiment TOML (default: the shipped fixture)")
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--n", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--out")
        if name == "verify":
            p.add_argument("--criteria", help="comma-separated subset, e.g. 1,6")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        threads = args.threads
        if threads is None and os.environ.get(THREADS_ENV):
            threads = int(os.environ[THREADS_ENV])
        config = config.with_overrides(seed=args.seed, samples=args.samples, n=args.n, threads=threads, out=args.out)
        if args.command == "simulate-lorentz":
            print(cmd_simulate_lorentz(config))
        elif args.command == "simulate-walk":
            print(cmd_simulate_walk(config))
        elif args.command == "sample-limit":
            print(cmd_sample_limit(config))
        else:
            criteria = None if args.criteria is None else [int(k) for k in args.criteria.split(",")]
            return cmd_verify(config, criteria)
    except (ConfigError, OutputConflict) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
