"""CSV readers and writers for rank sets, pmfs and curves.

Floats are written with ``repr`` so a write/read round trip is exact.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .core import GlobalRankSet, RankPmf, SampledEvalError, SampledRankSet

PathLike = Union[str, Path]


def _read_rows(path: PathLike, required: Sequence[str]):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SampledEvalError(f"{path}: missing header")
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise SampledEvalError(f"{path}: missing columns {missing}")
        return list(reader)


def _write_rows(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_global_ranks(path: PathLike, ranks: GlobalRankSet) -> None:
    _write_rows(path, ["user_id", "rank"], zip(ranks.user_ids.tolist(), ranks.ranks.tolist()))


def read_global_ranks(path: PathLike, n_items: int) -> GlobalRankSet:
    rows = _read_rows(path, ["user_id", "rank"])
    return GlobalRankSet(
        n_items,
        np.array([int(r["rank"]) for r in rows], dtype=np.int64),
        user_ids=np.array([int(r["user_id"]) for r in rows], dtype=np.int64),
    )


def write_sampled_ranks(path: PathLike, samples: SampledRankSet) -> None:
    _write_rows(
        path,
        ["user_id", "rank", "sample_size"],
        zip(samples.user_ids.tolist(), samples.ranks.tolist(), samples.sample_sizes.tolist()),
    )


def read_sampled_ranks(path: PathLike, n_items: int) -> SampledRankSet:
    rows = _read_rows(path, ["user_id", "rank", "sample_size"])
    sizes = np.array([int(r["sample_size"]) for r in rows], dtype=np.int64)
    return SampledRankSet(
        n_items,
        np.array([int(r["rank"]) for r in rows], dtype=np.int64),
        sizes,
        user_ids=np.array([int(r["user_id"]) for r in rows], dtype=np.int64),
        allow_oversize=bool(sizes.size and sizes.max() > n_items),
    )


def write_pmf(path: PathLike, pmf: RankPmf) -> None:
    _write_rows(
        path,
        ["rank", "prob"],
        ((R, repr(float(p))) for R, p in enumerate(pmf.probs.tolist(), start=1)),
    )


def read_pmf(path: PathLike) -> RankPmf:
    rows = _read_rows(path, ["rank", "prob"])
    ranks = [int(r["rank"]) for r in rows]
    if ranks != list(range(1, len(ranks) + 1)):
        raise SampledEvalError(f"{path}: ranks must be 1..N in order")
    return RankPmf(len(ranks), np.array([float(r["prob"]) for r in rows]))


def write_curve(path: PathLike, values, header=("K", "value"), start: int = 1) -> None:
    _write_rows(
        path, list(header),
        ((k, repr(float(v))) for k, v in enumerate(np.asarray(values).tolist(), start=start)),
    )


def read_curve(path: PathLike, header=("K", "value")) -> np.ndarray:
    rows = _read_rows(path, list(header))
    return np.array([float(r[header[1]]) for r in rows])
