"""CSV ingestion and serialization for responses, grids, and results.

All three formats are plain UTF-8 CSV with a mandatory header, ``.``
decimal separator and ``\\n`` line endings, so outputs are bit-exact
across platforms.  Floats are written with 17 significant digits (full
round-trip precision); p-values with 6 decimal places.  Readers validate
and reject rather than repair: a malformed line raises
:class:`FormatError` carrying its 1-based line number.
"""

from __future__ import annotations

import csv
import math
from typing import Iterable, NamedTuple

import numpy as np

from .inference import GofResult
from .models import MODEL_IDS, ProbabilityGrid, validate_pmf

RESPONSES_HEADER = ["experiment_id", "stimulus_id", "score"]
GRID_HEADER = ["model", "param1", "param2", "p1", "p2", "p3", "p4", "p5"]
RESULTS_HEADER = [
    "stimulus_id",
    "n",
    "model",
    "param1_hat",
    "param2_hat",
    "g_obs",
    "p_value",
    "t_bootstrap",
    "seed",
]


class FormatError(ValueError):
    """A file failed structural or value validation."""


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _open_read(path):
    return open(path, "r", encoding="utf-8", newline="")


def _open_write(path):
    return open(path, "w", encoding="utf-8", newline="")


def _check_header(row, expected, path):
    if row != expected:
        raise FormatError(
            f"{path}: line 1: expected header {','.join(expected)!r}"
        )


def _parse_float(tok: str, what: str, lineno: int):
    try:
        return float(tok)
    except ValueError:
        raise FormatError(f"line {lineno}: {what} {tok!r} is not a number") from None


def _parse_int(tok: str, what: str, lineno: int):
    try:
        return int(tok)
    except ValueError:
        raise FormatError(f"line {lineno}: {what} {tok!r} is not an integer") from None


class StimulusCounts(NamedTuple):
    experiment_id: str
    stimulus_id: str
    counts: np.ndarray  # 5 ints


def read_responses(path) -> list[StimulusCounts]:
    """Aggregate long-format response rows into per-stimulus counts.

    Output is ordered by (experiment_id, stimulus_id); input row order
    does not matter.
    """
    tally: dict[tuple[str, str], np.ndarray] = {}
    with _open_read(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: line 1: missing header") from None
        _check_header(header, RESPONSES_HEADER, path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise FormatError(f"line {lineno}: expected 3 fields, got {len(row)}")
            exp_id, stim_id, score_tok = (f.strip() for f in row)
            if not exp_id or not stim_id:
                raise FormatError(f"line {lineno}: empty experiment_id or stimulus_id")
            score = _parse_int(score_tok, "score", lineno)
            if not 1 <= score <= 5:
                raise FormatError(f"line {lineno}: score {score} outside scale 1..5")
            key = (exp_id, stim_id)
            if key not in tally:
                tally[key] = np.zeros(5, dtype=int)
            tally[key][score - 1] += 1
    return [
        StimulusCounts(exp_id, stim_id, tally[(exp_id, stim_id)])
        for exp_id, stim_id in sorted(tally)
    ]


def write_grid(grid: ProbabilityGrid, path) -> None:
    with _open_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GRID_HEADER)
        for (p1, p2), pmf in zip(grid.params, grid.pmfs):
            writer.writerow(
                [grid.model_id, _fmt(p1), _fmt(p2)] + [_fmt(v) for v in pmf]
            )


def read_grid(path) -> ProbabilityGrid:
    model_id = None
    params = []
    pmfs = []
    with _open_read(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: line 1: missing header") from None
        _check_header(header, GRID_HEADER, path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 8:
                raise FormatError(f"line {lineno}: expected 8 fields, got {len(row)}")
            if row[0] not in MODEL_IDS:
                raise FormatError(f"line {lineno}: unknown model {row[0]!r}")
            if model_id is None:
                model_id = row[0]
            elif row[0] != model_id:
                raise FormatError(
                    f"line {lineno}: mixed model ids {model_id!r} and {row[0]!r}"
                )
            p1 = _parse_float(row[1], "param1", lineno)
            p2 = _parse_float(row[2], "param2", lineno)
            pmf = [_parse_float(tok, "probability", lineno) for tok in row[3:]]
            try:
                validate_pmf(pmf)
            except ValueError as exc:
                raise FormatError(f"line {lineno}: {exc}") from None
            params.append((p1, p2))
            pmfs.append(pmf)
    if not params:
        raise FormatError(f"{path}: grid file has no rows")
    keys = params
    if sorted(set(keys)) != keys:
        raise FormatError("grid rows must be unique and sorted by (param1, param2)")
    axis1 = sorted(set(p for p, _ in params))
    axis2 = sorted(set(q for _, q in params))
    grid = ProbabilityGrid(
        model_id, np.array(axis1), np.array(axis2), np.array(params), np.array(pmfs)
    )
    if len(grid) != len(axis1) * len(axis2):
        raise FormatError("grid rows do not form a full axis1 x axis2 lattice")
    return grid


def write_results(results: Iterable[GofResult], path) -> None:
    rows = sorted(results, key=lambda r: r.stimulus_id)
    with _open_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_HEADER)
        for r in rows:
            writer.writerow(
                [
                    r.stimulus_id,
                    r.n,
                    r.model,
                    _fmt(r.param1_hat),
                    _fmt(r.param2_hat),
                    _fmt(r.g_obs),
                    f"{r.p_value:.6f}",
                    r.t_bootstrap,
                    r.seed,
                ]
            )


def read_results(path) -> list[GofResult]:
    out = []
    with _open_read(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: line 1: missing header") from None
        _check_header(header, RESULTS_HEADER, path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 9:
                raise FormatError(f"line {lineno}: expected 9 fields, got {len(row)}")
            stim_id = row[0].strip()
            if not stim_id:
                raise FormatError(f"line {lineno}: empty stimulus_id")
            if row[2] not in MODEL_IDS:
                raise FormatError(f"line {lineno}: unknown model {row[2]!r}")
            n = _parse_int(row[1], "n", lineno)
            g_obs = _parse_float(row[5], "g_obs", lineno)
            p_value = _parse_float(row[6], "p_value", lineno)
            if not 0.0 <= p_value <= 1.0:
                raise FormatError(f"line {lineno}: p_value {p_value} outside [0, 1]")
            if g_obs < 0.0 or math.isnan(g_obs):
                raise FormatError(f"line {lineno}: g_obs {g_obs} not a valid statistic")
            try:
                out.append(
                    GofResult(
                        stimulus_id=stim_id,
                        n=n,
                        model=row[2],
                        param1_hat=_parse_float(row[3], "param1_hat", lineno),
                        param2_hat=_parse_float(row[4], "param2_hat", lineno),
                        g_obs=g_obs,
                        p_value=p_value,
                        t_bootstrap=_parse_int(row[7], "t_bootstrap", lineno),
                        seed=_parse_int(row[8], "seed", lineno),
                    )
                )
            except ValueError as exc:
                raise FormatError(f"line {lineno}: {exc}") from None
    return out
