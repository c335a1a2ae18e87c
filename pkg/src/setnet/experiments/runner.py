"""
Run experiments from configs.

Every run writes into its output directory:

    config.yaml     the config as run, seed applied
    run.log         the log of the run at level INFO
    ...             task results, see README.md ("Result files")

Grid members run in worker processes, each into a subdirectory named after the member.
"""

from __future__ import annotations

import contextlib
import re
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Tuple

import attrs
import numpy as np
from loguru import logger

from setnet.analysis.connectivity import visible_connectivity_map
from setnet.analysis.powerlaw import power_law_report
from setnet.consts import ExitCode, Side, Task
from setnet.dtime import Stopwatch, format_seconds_adaptive
from setnet.errors import (
    SetnetError,
    UndefinedFitError,
    format_exception,
    format_exception_single_line,
)
from setnet.experiments.config import ExperimentConfig
from setnet.experiments.datasets import load_datasets
from setnet.experiments.grid import expand_grid
from setnet.experiments.validate import validate
from setnet.iotools import dump_yaml, write_csv_rows
from setnet.log import add_file_sink
from setnet.mlp.trainer import MlpTrainer
from setnet.multiproc import FnMultiProcessor
from setnet.rbm.ais import ais_log_z
from setnet.rbm.checkpoint import load_rbm_checkpoint
from setnet.rbm.model import EXACT_MAX_UNITS, base_rate_biases, exact_log_z, test_log_prob
from setnet.rbm.training import RbmTrainer
from setnet.sparse.snapshot import load_topology_snapshot
from setnet.sparse.topology import degree_distribution
from setnet.typext import derive_seed

CONFIG_FILE = "config.yaml"
RUN_LOG_FILE = "run.log"
SUMMARY_FILE = "summary.yaml"
AIS_FILE = "ais.yaml"
TOPOLOGY_POWER_LAW_FILE = "power_law.csv"
TOPOLOGY_POWER_LAW_COLUMNS = [
    "snapshot",
    "epoch",
    "layer",
    "n_in",
    "n_out",
    "nnz",
    "gamma_hat",
    "d_min",
    "p_value",
    "n_tail",
    "statistic",
]
DEGREE_HISTOGRAM_FILE = "degree_histograms.csv"
DEGREE_HISTOGRAM_COLUMNS = ["snapshot", "degree", "count"]
GRID_SUMMARY_FILE = "grid_summary.csv"
GRID_SUMMARY_COLUMNS = ["index", "name", "seed", "status", "error"]
# key of the topology analysis stream in derive_seed(seed, key)
ANALYSIS_SEED_KEY = 2
_EPOCH_DIR = re.compile(r"epoch_(\d+)$")


@contextlib.contextmanager
def run_log(out_dir: Path) -> Iterator[Path]:
    """Mirror the log into out_dir/run.log while the block runs."""
    out_dir.mkdir(parents=True, exist_ok=True)
    file = out_dir / RUN_LOG_FILE
    handler_id = add_file_sink(str(file), level="INFO")
    try:
        yield file
    finally:
        logger.remove(handler_id)


def _train_mlp(cfg: ExperimentConfig, show_progress: bool) -> Dict[str, Any]:
    train, test = load_datasets(cfg.dataset, cfg.seed)
    trainer = MlpTrainer.create(
        cfg.model.sizes,
        cfg.model.activation,
        cfg.model.mode,
        cfg.train,
        train,
        test,
        cfg.output_dir,
        show_progress,
    )
    trainer.run()
    return trainer.summary()


def _train_rbm(cfg: ExperimentConfig, show_progress: bool) -> Dict[str, Any]:
    train, test = load_datasets(cfg.dataset, cfg.seed)
    trainer = RbmTrainer.create(
        train.n_features,
        cfg.model.n_hidden,
        cfg.model.mode,
        cfg.train,
        train,
        test,
        cfg.output_dir,
        show_progress,
    )
    trainer.run()
    return trainer.summary()


def _eval_ais(cfg: ExperimentConfig) -> Dict[str, Any]:
    """
    AIS estimate of log Z for a saved RBM. With a dataset, the base-rate model comes from
    its training split and the test log-probability is reported too.
    """
    rbm, meta = load_rbm_checkpoint(cfg.checkpoint)
    ais = cfg.ais
    eval_set = None
    if cfg.dataset is not None:
        train, test = load_datasets(cfg.dataset, cfg.seed)
        eval_set = train if test is None else test
        if ais.base_rate_biases is None:
            ais = attrs.evolve(ais, base_rate_biases=base_rate_biases(train))
    log_z, stderr = ais_log_z(rbm, ais)
    result: Dict[str, Any] = {
        "checkpoint": str(cfg.checkpoint),
        "n_visible": rbm.n_visible,
        "n_hidden": rbm.n_hidden,
        "nnz": rbm.weights.nnz,
        "num_betas": int(ais.betas().size),
        "num_chains": ais.num_chains,
        "log_z": log_z,
        "log_z_stderr": stderr,
        "exact_log_z": None,
        "test_log_prob": None,
        "checkpoint_meta": meta,
    }
    if min(rbm.n_visible, rbm.n_hidden) <= EXACT_MAX_UNITS:
        result["exact_log_z"] = exact_log_z(rbm)
        logger.info(f"Exact log Z {result['exact_log_z']:.4f}, AIS {log_z:.4f} +- {stderr:.4f}")
    if eval_set is not None:
        result["test_log_prob"] = test_log_prob(rbm, eval_set, log_z)
        logger.info(f"Log-probability of {eval_set.name}: {result['test_log_prob']:.4f} nats")
    dump_yaml(result, cfg.output_dir / AIS_FILE)
    return result


def find_snapshots(path: Path) -> List[Tuple[Path, Optional[int]]]:
    """Snapshot files below path with the epoch from an epoch_XXXX parent folder, if any."""
    files = [path] if path.is_file() else sorted(path.rglob("*.txt"))
    out = []
    for file in files:
        match = _EPOCH_DIR.search(file.parent.name)
        out.append((file, None if match is None else int(match.group(1))))
    return sorted(out, key=lambda fe: (-1 if fe[1] is None else fe[1], str(fe[0])))


def _analyze_topology(cfg: ExperimentConfig) -> Dict[str, Any]:
    """Power-law report of every snapshot, plus connectivity maps of matching input layers."""
    analysis = cfg.analysis
    rng = np.random.default_rng(derive_seed(cfg.seed, ANALYSIS_SEED_KEY))
    root = cfg.snapshots if cfg.snapshots.is_dir() else cfg.snapshots.parent
    rows, hist_rows = [], []
    n_maps = 0
    snapshots = find_snapshots(cfg.snapshots)
    for file, epoch in snapshots:
        w = load_topology_snapshot(file)
        name = file.relative_to(root).as_posix()
        degrees = degree_distribution(w, analysis.side)
        row = {
            "snapshot": name,
            "epoch": epoch,
            "layer": file.stem,
            "n_in": w.n_in,
            "n_out": w.n_out,
            "nnz": w.nnz,
        }
        try:
            report = power_law_report(
                degrees,
                analysis.d_min,
                analysis.n_monte_carlo,
                rng,
                n_trials=w.n_in if analysis.side == Side.OUTPUT else w.n_out,
                with_p_value=analysis.with_p_value,
                method=analysis.fit_method,
            )
            row.update(report.to_dict())
        except UndefinedFitError as e:
            logger.warning(f"{name}: power-law fit undefined: {e}")
            row.update({k: float("nan") for k in ("gamma_hat", "p_value", "statistic")})
        rows.append(row)
        counts = np.bincount(degrees)
        hist_rows.extend(
            {"snapshot": name, "degree": int(d), "count": int(counts[d])}
            for d in np.flatnonzero(counts)
        )
        shape = analysis.image_shape
        if shape is not None and w.n_in == shape[0] * shape[1]:
            cmap = visible_connectivity_map(w, *shape)
            stem = name[: -len(".txt")].replace("/", "_")
            cmap.write_text(cfg.output_dir / "connectivity" / f"{stem}.txt")
            cmap.write_pgm(cfg.output_dir / "connectivity" / f"{stem}.pgm")
            n_maps += 1
    write_csv_rows(cfg.output_dir / TOPOLOGY_POWER_LAW_FILE, rows, TOPOLOGY_POWER_LAW_COLUMNS)
    write_csv_rows(cfg.output_dir / DEGREE_HISTOGRAM_FILE, hist_rows, DEGREE_HISTOGRAM_COLUMNS)
    logger.info(f"Analyzed {len(rows)} snapshot(s), wrote {n_maps} connectivity map(s)")
    return {"n_snapshots": len(rows), "n_connectivity_maps": n_maps}


def run_grid_member(index: int, raw: Mapping[str, Any], out_dir: str) -> Dict[str, Any]:
    """Worker target, never raises so that one failing member does not stop the grid."""
    name = raw.get("name")
    row = {"index": index, "name": name, "seed": raw.get("seed"), "status": "ok", "error": ""}
    try:
        cfg = ExperimentConfig.from_dict({**raw, "output_dir": out_dir})
        row["summary"] = run_experiment(cfg)
    except Exception as e:
        row["status"], row["error"] = "failed", format_exception_single_line(e)
        logger.debug(format_exception(e, with_traceback=True))
    return row


def _run_grid(cfg: ExperimentConfig, workers: int, show_progress: bool) -> Dict[str, Any]:
    members = expand_grid(cfg.raw)
    logger.info(f"Grid {cfg.name}: {len(members)} members, {workers} worker(s)")
    proc = FnMultiProcessor(
        workers,
        run_grid_member,
        verbose=show_progress,
        total=len(members),
        desc=f"grid {cfg.name}",
    )
    for member in members:
        proc.put(member.index, member.config, str(cfg.output_dir / member.name))
    proc.run()
    rows = sorted((proc.get() for _ in members), key=lambda r: r["index"])
    proc.close()
    write_csv_rows(cfg.output_dir / GRID_SUMMARY_FILE, rows, GRID_SUMMARY_COLUMNS)
    dump_yaml({r["name"]: r.get("summary") for r in rows}, cfg.output_dir / SUMMARY_FILE)
    failed = [r["name"] for r in rows if r["status"] != "ok"]
    if failed:
        raise SetnetError(f"{len(failed)} of {len(rows)} grid members failed: {failed}")
    return {"n_members": len(rows)}


def _dispatch(cfg: ExperimentConfig, workers: int, show_progress: bool) -> Dict[str, Any]:
    if cfg.task == Task.TRAIN_MLP:
        return _train_mlp(cfg, show_progress)
    if cfg.task == Task.TRAIN_RBM:
        return _train_rbm(cfg, show_progress)
    if cfg.task == Task.EVAL_AIS:
        return _eval_ais(cfg)
    if cfg.task == Task.ANALYZE_TOPOLOGY:
        return _analyze_topology(cfg)
    return _run_grid(cfg, workers, show_progress)


def run_experiment(
    cfg: ExperimentConfig, workers: int = 0, show_progress: bool = False
) -> Dict[str, Any]:
    """
    Run one validated experiment and return its summary.

    Raises:
        whatever the task raises, see run() for the exit-code wrapper
    """
    out = cfg.output_dir
    with run_log(out):
        logger.info(f"Run {cfg.name} ({cfg.task}, seed {cfg.seed}) into {out}")
        dump_yaml({**cfg.raw, "seed": cfg.seed}, out / CONFIG_FILE)
        watch = Stopwatch()
        try:
            summary = _dispatch(cfg, workers, show_progress)
        except Exception as e:
            logger.error(f"Run {cfg.name} failed: {format_exception_single_line(e)}")
            raise
        logger.info(f"Finished {cfg.name} in {format_seconds_adaptive(watch.total())}")
    if cfg.task in (Task.EVAL_AIS, Task.ANALYZE_TOPOLOGY):
        dump_yaml(summary, out / SUMMARY_FILE)
    return summary


def run(raw: Mapping[str, Any], workers: int = 0, show_progress: bool = False) -> int:
    """
    Validate and run a raw config, returns the exit code: 0 success, 2 invalid config,
    1 failure while running. Problems are logged, a runtime failure as a single line.
    """
    report = validate(raw)
    if not report.ok:
        for line in report.format().splitlines():
            logger.error(line)
        return ExitCode.VALIDATION_FAILURE
    try:
        run_experiment(ExperimentConfig.from_dict(raw), workers, show_progress)
    except Exception as e:
        # run_experiment already logged the single-line error
        logger.debug(format_exception(e, with_traceback=True))
        return ExitCode.RUNTIME_FAILURE
    return ExitCode.SUCCESS
