"""Recognition runs, hypothesis dumps, and the benchmark harness.

Emits one metrics CSV row per (instance, algorithm, step) with the fixed
schema ``instance,algorithm,step,hypotheses,combinations,frontier,max_depth,
predicted_bound,elapsed_us,status``. Rows are byte-identical across repeated
runs with equal inputs, except for the elapsed timing columns.
"""

from __future__ import annotations

import csv
import time
from pathlib import Path
from typing import Callable, Iterable

from .grammar import PlanLibrary, parse_library
from .metrics import RunRecord, snapshot
from .phatt import HypothesisSet, PhattConfig, PhattEngine, RecognitionFailure
from .slim import SlimEngine, TopDownConfig
from .trees import EMPTY_HYPOTHESIS, Hypothesis

EXIT_OK = 0
EXIT_RECOGNITION = 2
EXIT_PARSE = 3
EXIT_IO = 4

CSV_COLUMNS = (
    "instance", "algorithm", "step", "hypotheses", "combinations",
    "frontier", "max_depth", "predicted_bound", "elapsed_us", "status",
)

# called after every engine step with (instance, algorithm, step, hypotheses)
StepHook = Callable[[str, str, int, tuple[Hypothesis, ...]], None]


def load_library(path: str | Path) -> PlanLibrary:
    return parse_library(Path(path).read_text(encoding="utf-8"))


def read_observations(path: str | Path) -> list[str]:
    return Path(path).read_text(encoding="utf-8").split()


def parse_k(value: "int | str | None") -> int | None:
    """CLI-facing ``k``: an integer or the string ``all`` (compile everything)."""
    if value is None or value == "all":
        return None
    k = int(value)
    if k < 0:
        raise ValueError("k must be >= 0 or 'all'")
    return k


def algorithm_tag(algorithm: str, k: int | None) -> str:
    if algorithm == "phatt":
        return "phatt"
    return "slim-all" if k is None else f"slim-{k}"


def run_recognition(library_path: str | Path, obs_path: str | Path, algorithm: str,
                    k: int | str | None = 0, max_depth: int | None = None,
                    emit_path: str | Path | None = None,
                    csv_path: str | Path | None = None,
                    prune: bool = True, instance: str | None = None,
                    step_hook: StepHook | None = None) -> RunRecord:
    """Run one engine over one observation file, recording per-step metrics.

    Raises :class:`RecognitionFailure` when some observation cannot be
    explained (after writing the CSV row recording the failure).
    """
    lib = load_library(library_path)
    obs = read_observations(obs_path)
    instance = instance or Path(obs_path).stem
    k = parse_k(k)
    if algorithm == "phatt":
        records = [_run_phatt(lib, obs, max_depth, instance, step_hook, emit_path)]
    elif algorithm == "slim":
        records = _run_slim(lib, obs, [k], max_depth, prune, instance, step_hook,
                            emit_path)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if csv_path is not None:
        write_metrics_csv(records, csv_path)
    record = records[0]
    if record.status != "ok":
        raise RecognitionFailure(int(record.status.split("@")[1]), "")
    return record


def _run_phatt(lib: PlanLibrary, obs: list[str], max_depth: int | None,
               instance: str, hook: StepHook | None = None,
               emit_path: str | Path | None = None) -> RunRecord:
    engine = PhattEngine(lib, PhattConfig.for_library(lib, max_depth))
    hset = HypothesisSet.initial()
    steps = []
    b = lib.max_or_branching
    try:
        for name in obs:
            sym = lib.sym(name)
            before = engine.counter.n
            t0 = time.perf_counter_ns()
            hset = engine.step(hset, sym)
            elapsed = (time.perf_counter_ns() - t0) // 1000
            steps.append(snapshot(hset.step, hset.hypotheses, "phatt", b,
                                  engine.counter.n - before, elapsed))
            if hook is not None:
                hook(instance, "phatt", hset.step, hset.hypotheses)
    except RecognitionFailure as failure:
        return RunRecord(instance, "phatt", tuple(steps), status=f"fail@{failure.step}")
    if emit_path is not None:
        emit_hypotheses(hset.hypotheses, emit_path)
    return RunRecord(instance, "phatt", tuple(steps),
                     final_hypotheses=len(hset.hypotheses),
                     goal_rooted=len(hset.hypotheses))


def _run_slim(lib: PlanLibrary, obs: list[str], k_values: list[int | None],
              max_depth: int | None, prune: bool, instance: str,
              hook: StepHook | None = None,
              emit_path: str | Path | None = None) -> list[RunRecord]:
    """One bottom-up pass, reused by every requested top-down k."""
    engine = SlimEngine(lib, TopDownConfig.for_library(lib, k=0, max_depth=max_depth),
                        prune)
    hyps = (EMPTY_HYPOTHESIS,)
    steps = []
    b = lib.max_or_branching
    try:
        for ts, name in enumerate(obs, start=1):
            sym = lib.sym(name)
            before = engine.counter.n
            t0 = time.perf_counter_ns()
            hyps = engine.step(hyps, sym, ts)
            elapsed = (time.perf_counter_ns() - t0) // 1000
            steps.append(snapshot(ts, hyps, "slim", b,
                                  engine.counter.n - before, elapsed))
            if hook is not None:
                hook(instance, "slim", ts, hyps)
    except RecognitionFailure as failure:
        return [RunRecord(instance, algorithm_tag("slim", k), tuple(steps),
                          status=f"fail@{failure.step}") for k in k_values]
    out = []
    for k in k_values:
        goal_rooted: list[Hypothesis] = []
        topdown_us = 0
        if k is None or k > 0:
            variant = SlimEngine(
                lib, TopDownConfig.for_library(lib, k=k, max_depth=max_depth), prune
            )
            variant._phatt = engine._phatt  # share leftmost-tree caches
            goal_rooted, topdown_us = variant.compile_top_down(hyps)
        out.append(RunRecord(instance, algorithm_tag("slim", k), tuple(steps),
                             final_hypotheses=len(hyps),
                             goal_rooted=len(goal_rooted), topdown_us=topdown_us))
        if emit_path is not None:
            emit_hypotheses(goal_rooted if goal_rooted else hyps, emit_path)
    return out


def emit_hypotheses(hyps: Iterable[Hypothesis], path: str | Path):
    """One hypothesis per line: ``weight<TAB>plan{;plan}``, ordered by weight
    descending then canonical form ascending. Byte-deterministic."""
    ordered = sorted(hyps, key=lambda h: (-h.weight, h.canon))
    lines = [f"{h.weight!r}\t{h.canon}" for h in ordered]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def write_metrics_csv(records: Iterable[RunRecord], path: str | Path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for record in records:
            if not record.steps:
                writer.writerow([record.instance, record.algorithm, 0, 0, 0, 0, 0,
                                 repr(0.0), 0, record.status])
            for sm in record.steps:
                writer.writerow([
                    record.instance, record.algorithm, sm.step, sm.hypotheses,
                    sm.combinations, sm.frontier, sm.max_depth,
                    repr(sm.predicted_bound), sm.elapsed_us, record.status,
                ])


def run_benchmark(library_path: str | Path, obs_dir: str | Path,
                  algorithms: list[str], k_values: list[int | None],
                  csv_path: str | Path | None = None,
                  max_depth: int | None = None, prune: bool = True,
                  step_hook: StepHook | None = None) -> dict:
    """Run every (instance, algorithm variant) pair and summarize.

    SLIM variants share one bottom-up pass per instance; each k adds its own
    top-down timing, reported per instance as ``topdown_us``. Per-instance
    failures are recorded in the CSV status column, not raised.
    """
    lib = load_library(library_path)
    obs_files = sorted(Path(obs_dir).glob("*.txt"))
    if not obs_files:
        raise FileNotFoundError(f"no .txt observation files under {obs_dir}")
    records: list[RunRecord] = []
    for obs_file in obs_files:
        instance = obs_file.stem
        obs = read_observations(obs_file)
        for algorithm in algorithms:
            if algorithm == "phatt":
                records.append(_run_phatt(lib, obs, max_depth, instance, step_hook))
            elif algorithm == "slim":
                records.extend(_run_slim(lib, obs, k_values, max_depth, prune,
                                         instance, step_hook))
            else:
                raise ValueError(f"unknown algorithm {algorithm!r}")
    if csv_path is not None:
        write_metrics_csv(records, csv_path)
    return summarize(records)


def summarize(records: list[RunRecord]) -> dict:
    """Per-algorithm per-step means plus per-instance totals."""
    by_algo: dict[str, dict[int, list]] = {}
    totals: dict[str, list[tuple[str, int, int]]] = {}
    for record in records:
        steps = by_algo.setdefault(record.algorithm, {})
        for sm in record.steps:
            steps.setdefault(sm.step, []).append(sm)
        totals.setdefault(record.algorithm, []).append(
            (record.instance, record.total_elapsed_us, record.topdown_us)
        )
    summary: dict = {"algorithms": {}, "records": records}
    for algo, per_step in sorted(by_algo.items()):
        rows = {}
        for step, sms in sorted(per_step.items()):
            rows[step] = {
                "hypotheses": _mean([s.hypotheses for s in sms]),
                "combinations": _mean([s.combinations for s in sms]),
                "frontier": _mean([s.frontier for s in sms]),
                "elapsed_us": _mean([s.elapsed_us for s in sms]),
            }
        summary["algorithms"][algo] = {
            "steps": rows,
            "instances": totals.get(algo, []),
            "mean_total_us": _mean([t[1] for t in totals.get(algo, [])]),
            "mean_topdown_us": _mean([t[2] for t in totals.get(algo, [])]),
        }
    return summary


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values) if values else 0.0


def format_summary(summary: dict) -> str:
    lines = []
    for algo, info in summary["algorithms"].items():
        lines.append(f"algorithm {algo}  (mean total {info['mean_total_us'] / 1e6:.3f} s, "
                     f"mean top-down {info['mean_topdown_us'] / 1e6:.3f} s)")
        lines.append("  step  hypotheses  combinations  frontier  elapsed_us")
        for step, row in info["steps"].items():
            lines.append(
                f"  {step:>4}  {row['hypotheses']:>10.1f}  {row['combinations']:>12.1f}"
                f"  {row['frontier']:>8.1f}  {row['elapsed_us']:>10.0f}"
            )
    return "\n".join(lines)
