"""Command line front end: grid generation, batch G-testing, chunk
merging, plotting, and the five canned reproduction scenarios.

Batch execution composes two orthogonal mechanisms.  ``--jobs`` spreads
whole stimuli over a local process pool; ``--chunks``/``--chunk-index``
restrict one invocation to a contiguous slice of the stimulus list so
independent machines can split a run and ``consist merge`` can weld the
pieces back together.  Because every stimulus seeds its own random
stream from (master seed, stimulus id), any layout produces byte
identical merged output.

Exit codes: 0 success, 1 invalid data, 2 missing input file, 64 usage.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dataio, models, ppplot
from .dataio import FormatError, StimulusCounts
from .inference import GofResult, stimulus_gof, stimulus_seed

EXIT_OK = 0
EXIT_DATA = 1
EXIT_MISSING = 2
EXIT_USAGE = 64

DEFAULT_BOOTSTRAP_T = 10000
DEFAULT_SAMPLE_N = 3
DEFAULT_SEED = 0
SEED_ENV_VAR = "CONSIST_SEED"

# file names used by the reproduce scenarios
GRID_FILES = {"gsd": "gsd_grid.csv", "qnormal": "qnormal_grid.csv"}
RESULTS_FILE = "gtest_results.csv"
SAMPLE_RESULTS_FILE = "gtest_sample_results.csv"
PLOT_NAME = "pp_plot"


class CliError(Exception):
    """Carries the process exit code for a user-facing failure."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RunSpec:
    """Configuration of one reproduce run."""

    scenario: int
    model: str = "gsd"
    bootstrap_t: int = DEFAULT_BOOTSTRAP_T
    master_seed: int = DEFAULT_SEED
    sample_n: int = DEFAULT_SAMPLE_N
    jobs: int | None = None
    chunks: int = 1
    chunk_index: int = 0
    scores_path: str = "scores.csv"
    grid_path: str | None = None
    results_path: str | None = None
    stimuli_list: str | None = None
    band_conf: float = ppplot.DEFAULT_CONF
    out_dir: str = "."

    def __post_init__(self):
        if self.scenario not in (1, 2, 3, 4, 5):
            raise ValueError(f"scenario {self.scenario} not in 1..5")
        if self.bootstrap_t < 1:
            raise ValueError("bootstrap_t must be at least 1")
        if self.sample_n < 1:
            raise ValueError("sample_n must be at least 1")
        if self.chunks < 1 or not 0 <= self.chunk_index < self.chunks:
            raise ValueError("need chunks >= 1 and 0 <= chunk_index < chunks")


def partition(items: list, chunks: int, index: int) -> list:
    """Contiguous balanced slice ``index`` of ``chunks``: the first
    len(items) mod chunks slices get one extra item."""
    if chunks < 1:
        raise ValueError(f"chunks={chunks} must be at least 1")
    if not 0 <= index < chunks:
        raise ValueError(f"chunk index {index} outside [0, {chunks})")
    q, r = divmod(len(items), chunks)
    start = index * q + min(index, r)
    size = q + (1 if index < r else 0)
    return items[start : start + size]


def select_sample(ids: list[str], n: int, master_seed: int) -> list[str]:
    """Deterministic order-preserving choice of n ids."""
    if n >= len(ids):
        return list(ids)
    # NUL prefix keeps the tag outside the space of plausible CSV ids
    rng = np.random.default_rng(stimulus_seed(master_seed, "\x00sample"))
    picked = rng.choice(len(ids), size=n, replace=False)
    return [ids[i] for i in sorted(picked)]


def merge_results(paths) -> list[GofResult]:
    """Concatenate per-chunk results files; stimulus ids must be disjoint."""
    merged: list[GofResult] = []
    owner: dict[str, object] = {}
    dupes = set()
    for path in paths:
        for res in dataio.read_results(path):
            if res.stimulus_id in owner:
                dupes.add(res.stimulus_id)
            owner[res.stimulus_id] = path
            merged.append(res)
    if dupes:
        raise FormatError(
            "merge conflict: duplicate stimulus_id(s): " + ", ".join(sorted(dupes))
        )
    return sorted(merged, key=lambda r: r.stimulus_id)


# ---------------------------------------------------------------------------
# work pool

_POOL_CTX = None


def _pool_init(grid, t, master_seed):
    global _POOL_CTX
    _POOL_CTX = (grid, t, master_seed)


def _pool_task(item):
    sid, counts = item
    grid, t, master_seed = _POOL_CTX
    t0 = time.perf_counter()
    result = stimulus_gof(sid, counts, grid, t, master_seed)
    return result, (time.perf_counter() - t0) * 1000.0


def run_gof(
    records: list[StimulusCounts],
    grid,
    t: int,
    master_seed: int,
    jobs: int | None = None,
    log=None,
) -> list[GofResult]:
    """Bootstrap G-test for every record; returns results sorted by
    stimulus id.  ``jobs`` > 1 fans stimuli out over a process pool;
    output is identical either way."""
    if log is None:
        log = lambda msg: print(msg, file=sys.stderr)
    jobs = jobs if jobs is not None else (os.cpu_count() or 1)
    total = len(records)
    results = []
    done = 0

    def report(res: GofResult, ms: float):
        nonlocal done
        done += 1
        log(
            f"[{done}/{total}] {res.stimulus_id}: n={res.n} "
            f"p_value={res.p_value:.6f} g_obs={res.g_obs:.6g} ({ms:.0f} ms)"
        )

    if jobs <= 1 or total <= 1:
        _pool_init(grid, t, master_seed)
        for rec in records:
            res, ms = _pool_task((rec.stimulus_id, rec.counts))
            report(res, ms)
            results.append(res)
    else:
        with ProcessPoolExecutor(
            max_workers=min(jobs, max(total, 1)),
            initializer=_pool_init,
            initargs=(grid, t, master_seed),
        ) as pool:
            futures = [
                pool.submit(_pool_task, (rec.stimulus_id, rec.counts))
                for rec in records
            ]
            for fut in as_completed(futures):
                res, ms = fut.result()
                report(res, ms)
                results.append(res)
    return sorted(results, key=lambda r: r.stimulus_id)


# ---------------------------------------------------------------------------
# shared CLI helpers

def _resolve_seed(value) -> int:
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError(
                EXIT_USAGE, f"{SEED_ENV_VAR}={env!r} is not an integer"
            ) from None
    return DEFAULT_SEED


def _read_stimuli_list(path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        ids = [line.strip() for line in fh]
    return [s for s in ids if s]


def _unique_stimuli(records: list[StimulusCounts]) -> list[StimulusCounts]:
    seen: dict[str, str] = {}
    for rec in records:
        if rec.stimulus_id in seen and seen[rec.stimulus_id] != rec.experiment_id:
            raise FormatError(
                f"stimulus_id {rec.stimulus_id!r} appears in experiments "
                f"{seen[rec.stimulus_id]!r} and {rec.experiment_id!r}; "
                "results are keyed by stimulus_id, so ids must be unique"
            )
        seen[rec.stimulus_id] = rec.experiment_id
    return records


def _load_inputs(scores_path, grid_path):
    grid = dataio.read_grid(grid_path)
    records = _unique_stimuli(dataio.read_responses(scores_path))
    return records, grid


def _gof_pipeline(
    scores_path,
    grid_path,
    out_path,
    *,
    t,
    master_seed,
    jobs=None,
    chunks=1,
    chunk_index=0,
    sample_n=None,
    stimuli_list=None,
    log=None,
):
    if log is None:
        log = lambda msg: print(msg, file=sys.stderr)
    records, grid = _load_inputs(scores_path, grid_path)
    if stimuli_list is not None:
        wanted = _read_stimuli_list(stimuli_list)
        have = {rec.stimulus_id for rec in records}
        for sid in wanted:
            if sid not in have:
                log(f"warning: listed stimulus {sid!r} not present in {scores_path}")
        keep = set(wanted)
        records = [rec for rec in records if rec.stimulus_id in keep]
    if sample_n is not None:
        ids = [rec.stimulus_id for rec in records]
        chosen = set(select_sample(ids, sample_n, master_seed))
        if sample_n > len(ids):
            log(
                f"warning: asked for {sample_n} stimuli, only {len(ids)} available"
            )
        records = [rec for rec in records if rec.stimulus_id in chosen]
    records = partition(records, chunks, chunk_index)
    if not records:
        log("warning: no stimuli to process after filtering")
    results = run_gof(records, grid, t, master_seed, jobs=jobs, log=log)
    dataio.write_results(results, out_path)
    log(f"wrote {len(results)} result(s) to {out_path}")
    return results


def _plot_pipeline(results_path, out_base, band_conf, log=None):
    if log is None:
        log = lambda msg: print(msg, file=sys.stderr)
    results = dataio.read_results(results_path)
    if not results:
        raise FormatError(f"{results_path}: no results to plot")
    pvals = np.array([r.p_value for r in results])
    series = ppplot.build_series(pvals, conf=band_conf)
    svg_path, csv_path = ppplot.render_ppplot(series, out_base)
    idx = int(np.searchsorted(series.thresholds, 0.05))
    frac = float(ppplot.ecdf_points(pvals, [0.05])[0])
    band = float(series.band_upper[idx])
    verdict = "within" if frac <= band else "ABOVE"
    print(f"stimuli: {len(pvals)}")
    print(f"fraction p <= 0.05: {frac:.6f} (band upper bound {band:.6f}, {verdict})")
    print(f"wrote {svg_path} and {csv_path}")
    return svg_path, csv_path


# ---------------------------------------------------------------------------
# subcommand handlers

def cmd_grid(args) -> int:
    step = args.step
    if step <= 0:
        raise CliError(EXIT_USAGE, f"--step must be positive, got {step}")
    ax1 = models.step_axis(1.0, 5.0, step)
    if args.model == "gsd":
        grid = models.build_grid("gsd", ax1, models.step_axis(0.0, 1.0, step))
    else:
        grid = models.build_grid("qnormal", ax1, models.step_axis(0.1, 2.0, step))
    dataio.write_grid(grid, args.out)
    print(f"wrote {len(grid)} grid rows to {args.out}")
    return EXIT_OK


def cmd_gof(args) -> int:
    if args.bootstrap < 1:
        raise CliError(EXIT_USAGE, "--bootstrap must be at least 1")
    if args.sample is not None and args.sample < 1:
        raise CliError(EXIT_USAGE, "--sample must be at least 1")
    if args.jobs is not None and args.jobs < 1:
        raise CliError(EXIT_USAGE, "--jobs must be at least 1")
    if args.chunks < 1 or not 0 <= args.chunk_index < args.chunks:
        raise CliError(
            EXIT_USAGE, "need --chunks >= 1 and 0 <= --chunk-index < --chunks"
        )
    _gof_pipeline(
        args.scores,
        args.grid,
        args.out,
        t=args.bootstrap,
        master_seed=_resolve_seed(args.seed),
        jobs=args.jobs,
        chunks=args.chunks,
        chunk_index=args.chunk_index,
        sample_n=args.sample,
        stimuli_list=args.stimuli_list,
    )
    return EXIT_OK


def cmd_merge(args) -> int:
    merged = merge_results(args.files)
    dataio.write_results(merged, args.out)
    print(f"merged {len(args.files)} file(s), {len(merged)} row(s) -> {args.out}")
    return EXIT_OK


def cmd_ppplot(args) -> int:
    if not 0.0 < args.band_conf < 1.0:
        raise CliError(EXIT_USAGE, "--band-conf must be strictly between 0 and 1")
    _plot_pipeline(args.results, args.out, args.band_conf)
    return EXIT_OK


def run_scenario(spec: RunSpec) -> int:
    """Execute one canned scenario; returns the process exit code."""
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid_path = spec.grid_path or str(out_dir / GRID_FILES[spec.model])
    results_path = spec.results_path or str(out_dir / RESULTS_FILE)

    if spec.scenario == 5:
        for model, fname in GRID_FILES.items():
            grid = (
                models.default_gsd_grid()
                if model == "gsd"
                else models.default_qnormal_grid()
            )
            dataio.write_grid(grid, out_dir / fname)
            print(f"wrote {len(grid)} grid rows to {out_dir / fname}")
        return EXIT_OK

    if spec.scenario == 1:
        _plot_pipeline(results_path, out_dir / PLOT_NAME, spec.band_conf)
        return EXIT_OK

    if spec.scenario == 2 and spec.stimuli_list is None:
        raise CliError(
            EXIT_USAGE,
            "scenario 2 runs the G-test for an explicit stimulus subset; "
            "pass --stimuli-list FILE",
        )

    sample_n = spec.sample_n if spec.scenario == 4 else None
    out_path = out_dir / (SAMPLE_RESULTS_FILE if spec.scenario == 4 else RESULTS_FILE)
    _gof_pipeline(
        spec.scores_path,
        grid_path,
        out_path,
        t=spec.bootstrap_t,
        master_seed=spec.master_seed,
        jobs=spec.jobs,
        chunks=spec.chunks,
        chunk_index=spec.chunk_index,
        sample_n=sample_n,
        stimuli_list=spec.stimuli_list if spec.scenario == 2 else None,
    )
    return EXIT_OK


def cmd_reproduce(args) -> int:
    spec = RunSpec(
        scenario=args.scenario,
        model=args.model,
        bootstrap_t=args.bootstrap,
        master_seed=_resolve_seed(args.seed),
        sample_n=args.sample_n,
        jobs=args.jobs,
        chunks=args.chunks,
        chunk_index=args.chunk_index,
        scores_path=args.scores,
        grid_path=args.grid,
        results_path=args.results,
        stimuli_list=args.stimuli_list,
        band_conf=args.band_conf,
        out_dir=args.out_dir,
    )
    return run_scenario(spec)


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; this CLI reserves 2 for
    # missing input files, so usage errors exit 64 instead
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="consist",
        description=(
            "Consistency screening for 5-point subjective score data: "
            "grid MLE fits, bootstrapped G-tests, and p-value P-P plots."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_grid = sub.add_parser("grid", help="write a model probability grid CSV")
    p_grid.add_argument("--model", choices=["gsd", "qnormal"], required=True)
    p_grid.add_argument(
        "--step", type=float, default=0.01, help="lattice step for both parameters"
    )
    p_grid.add_argument("--out", required=True)
    p_grid.set_defaults(func=cmd_grid)

    p_gof = sub.add_parser("gof", help="bootstrap G-test per stimulus")
    p_gof.add_argument("--scores", required=True, help="responses CSV")
    p_gof.add_argument("--grid", required=True, help="probability grid CSV")
    p_gof.add_argument(
        "--bootstrap", type=int, default=DEFAULT_BOOTSTRAP_T, metavar="T"
    )
    p_gof.add_argument("--seed", type=int, default=None, metavar="S")
    p_gof.add_argument("--jobs", type=int, default=None, metavar="J")
    p_gof.add_argument("--chunks", type=int, default=1, metavar="C")
    p_gof.add_argument("--chunk-index", type=int, default=0, metavar="I")
    p_gof.add_argument(
        "--sample",
        type=int,
        nargs="?",
        const=DEFAULT_SAMPLE_N,
        default=None,
        metavar="N",
        help=f"test a random subset (default {DEFAULT_SAMPLE_N} stimuli)",
    )
    p_gof.add_argument("--stimuli-list", default=None, metavar="PATH")
    p_gof.add_argument("--out", required=True)
    p_gof.set_defaults(func=cmd_gof)

    p_merge = sub.add_parser("merge", help="merge disjoint chunk results")
    p_merge.add_argument("files", nargs="+", metavar="FILE")
    p_merge.add_argument("--out", required=True)
    p_merge.set_defaults(func=cmd_merge)

    p_plot = sub.add_parser("ppplot", help="render the p-value P-P plot")
    p_plot.add_argument("--results", required=True)
    p_plot.add_argument("--band-conf", type=float, default=ppplot.DEFAULT_CONF)
    p_plot.add_argument("--out", required=True, metavar="NAME")
    p_plot.set_defaults(func=cmd_ppplot)

    p_rep = sub.add_parser("reproduce", help="run one canned scenario")
    p_rep.add_argument("scenario", type=int, choices=[1, 2, 3, 4, 5])
    p_rep.add_argument("--model", choices=["gsd", "qnormal"], default="gsd")
    p_rep.add_argument(
        "--bootstrap", type=int, default=DEFAULT_BOOTSTRAP_T, metavar="T"
    )
    p_rep.add_argument("--seed", type=int, default=None, metavar="S")
    p_rep.add_argument(
        "-n", "--sample-n", type=int, default=DEFAULT_SAMPLE_N, metavar="N"
    )
    p_rep.add_argument("--jobs", type=int, default=None, metavar="J")
    p_rep.add_argument("--chunks", type=int, default=1, metavar="C")
    p_rep.add_argument("--chunk-index", type=int, default=0, metavar="I")
    p_rep.add_argument("--scores", default="scores.csv")
    p_rep.add_argument("--grid", default=None)
    p_rep.add_argument("--results", default=None)
    p_rep.add_argument("--stimuli-list", default=None, metavar="PATH")
    p_rep.add_argument("--band-conf", type=float, default=ppplot.DEFAULT_CONF)
    p_rep.add_argument("--out-dir", default=".")
    p_rep.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"consist: {exc}", file=sys.stderr)
        return exc.code
    except FileNotFoundError as exc:
        name = exc.filename if exc.filename else str(exc)
        print(f"consist: missing input file: {name}", file=sys.stderr)
        return EXIT_MISSING
    except (FormatError, ValueError) as exc:
        print(f"consist: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
