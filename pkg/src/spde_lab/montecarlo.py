"""Reproducible random streams, streaming moment accumulators and
closed-form-vs-Monte-Carlo comparison reports.

Every stochastic experiment in this package draws its randomness through a
:class:`RandomStream`, a value-like hierarchical key.  Ensembles are keyed
by sample index (never by worker id), so any statistic is bit-identical no
matter how samples are sharded across processes.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

Z_THRESHOLD = 3.0


@dataclass(frozen=True)
class RandomStream:
    """Hierarchical key identifying an independent standard-normal stream.

    A stream is the pair (master seed, path of integer indices).  Extending
    the path with :meth:`child` yields statistically independent substreams
    (experiment id, sample index, step index, ...).  The same key always
    reproduces the same draws, regardless of evaluation order or worker
    count.
    """

    master_seed: int
    path: tuple[int, ...] = ()

    def child(self, *indices: int) -> "RandomStream":
        """Substream for the given extra path indices."""
        return RandomStream(self.master_seed, self.path + tuple(indices))

    def generator(self) -> np.random.Generator:
        """Fresh counter-based generator for this key."""
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(seq))

    def normals(self, n: int) -> np.ndarray:
        """``n`` independent standard-normal draws, deterministic per key."""
        return self.generator().standard_normal(n)


def _broadcast_count(count: float, template: np.ndarray | float):
    """Reshape a per-chunk count vector so it broadcasts against payloads."""
    if np.ndim(template) <= 1:
        return count
    return np.reshape(count, np.shape(count) + (1,) * (np.ndim(template) - 1))


@dataclass
class EnsembleStats:
    """Welford accumulator for mean and variance with a parallel merge.

    ``mean`` and ``m2`` may be scalars or arrays (elementwise statistics,
    e.g. one accumulator per time-grid point).  ``m2`` is the running sum of
    squared deviations, so ``variance = m2 / (count - 1)``.
    """

    count: int = 0
    mean: float | np.ndarray = 0.0
    m2: float | np.ndarray = 0.0

    def push(self, x) -> "EnsembleStats":
        """Single Welford update (mutates and returns self)."""
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.mean)
        return self

    def merge(self, other: "EnsembleStats") -> "EnsembleStats":
        """Combine two accumulators (Chan's parallel update); returns a new one."""
        if other.count == 0:
            return EnsembleStats(self.count, self.mean, self.m2)
        if self.count == 0:
            return EnsembleStats(other.count, other.mean, other.m2)
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta * delta * (self.count * other.count / n)
        return EnsembleStats(n, mean, m2)

    @property
    def variance(self):
        if self.count < 2:
            raise ValueError("variance requires at least two samples")
        return self.m2 / (self.count - 1)

    @property
    def stderr(self):
        return np.sqrt(self.variance / self.count)


def pairwise_stats(values: np.ndarray) -> EnsembleStats:
    """Reduce per-sample values (axis 0) with the canonical pairwise merge.

    The merge tree depends only on the number of samples, so the result is
    bit-identical however the samples were computed.  Values may have extra
    trailing axes; statistics are elementwise over them.
    """
    vals = np.asarray(values, dtype=float)
    if vals.shape[0] == 0:
        return EnsembleStats()
    count = np.ones(vals.shape[0])
    mean = vals.copy()
    m2 = np.zeros_like(vals)
    while mean.shape[0] > 1:
        k = mean.shape[0] // 2
        na, nb = count[0 : 2 * k : 2], count[1 : 2 * k : 2]
        ma, mb = mean[0 : 2 * k : 2], mean[1 : 2 * k : 2]
        sa, sb = m2[0 : 2 * k : 2], m2[1 : 2 * k : 2]
        n = na + nb
        w = _broadcast_count(nb / n, ma)
        prod = _broadcast_count(na * nb / n, ma)
        delta = mb - ma
        merged_mean = ma + delta * w
        merged_m2 = sa + sb + delta * delta * prod
        if mean.shape[0] % 2:
            count = np.concatenate([n, count[-1:]])
            mean = np.concatenate([merged_mean, mean[-1:]])
            m2 = np.concatenate([merged_m2, m2[-1:]])
        else:
            count, mean, m2 = n, merged_mean, merged_m2
    payload_mean = mean[0] if mean[0].ndim else float(mean[0])
    payload_m2 = m2[0] if m2[0].ndim else float(m2[0])
    return EnsembleStats(int(count[0]), payload_mean, payload_m2)


@dataclass
class PairStats:
    """Streaming cross-moment accumulator for covariance of a value pair."""

    count: int = 0
    mean_x: float = 0.0
    mean_y: float = 0.0
    comoment: float = 0.0

    def push(self, x: float, y: float) -> "PairStats":
        self.count += 1
        dx = x - self.mean_x
        self.mean_x += dx / self.count
        self.mean_y += (y - self.mean_y) / self.count
        self.comoment += dx * (y - self.mean_y)
        return self

    def merge(self, other: "PairStats") -> "PairStats":
        if other.count == 0:
            return PairStats(self.count, self.mean_x, self.mean_y, self.comoment)
        if self.count == 0:
            return PairStats(other.count, other.mean_x, other.mean_y, other.comoment)
        n = self.count + other.count
        dx = other.mean_x - self.mean_x
        dy = other.mean_y - self.mean_y
        co = self.comoment + other.comoment + dx * dy * (self.count * other.count / n)
        mean_x = self.mean_x + dx * (other.count / n)
        mean_y = self.mean_y + dy * (other.count / n)
        return PairStats(n, mean_x, mean_y, co)

    @property
    def covariance(self) -> float:
        if self.count < 2:
            raise ValueError("covariance requires at least two samples")
        return self.comoment / (self.count - 1)


@dataclass(frozen=True)
class ComparisonRow:
    """One closed-form-vs-Monte-Carlo check.

    ``z`` is (mc_mean - closed_form) / mc_stderr.  Two-sided rows pass when
    |z| <= 3; one-sided rows (upper bounds) pass when z <= 3.  A row with
    zero stderr passes only on exact agreement ("deterministic mismatch"
    otherwise, with infinite z).  ``gating`` marks whether the row counts
    toward the run's exit status; diagnostic rows are reported but do not
    gate.
    """

    label: str
    t: float
    closed_form: float
    mc_mean: float
    mc_stderr: float
    z: float
    passed: bool
    one_sided: bool = False
    gating: bool = True
    note: str = ""


def comparison_row(
    label: str,
    t: float,
    closed_form: float,
    mc_mean: float,
    mc_stderr: float,
    *,
    one_sided: bool = False,
    gating: bool = True,
    note: str = "",
) -> ComparisonRow:
    """Build a report row from raw estimates, applying the 3-sigma rule."""
    if mc_stderr < 0 or not math.isfinite(mc_stderr):
        raise ValueError(f"invalid standard error {mc_stderr!r}")
    if mc_stderr == 0.0:
        if mc_mean == closed_form:
            z, passed = 0.0, True
        elif one_sided and mc_mean < closed_form:
            z, passed = -math.inf, True
        else:
            z, passed = math.inf, False
            note = (note + "; " if note else "") + "deterministic mismatch"
    else:
        z = (mc_mean - closed_form) / mc_stderr
        passed = (z <= Z_THRESHOLD) if one_sided else (abs(z) <= Z_THRESHOLD)
    return ComparisonRow(
        label, t, closed_form, mc_mean, mc_stderr, z, passed, one_sided, gating, note
    )


def compare(
    label: str,
    t: float,
    closed_form: float,
    stats: EnsembleStats,
    *,
    one_sided: bool = False,
    gating: bool = True,
    note: str = "",
) -> ComparisonRow:
    """Compare a closed-form value against a Welford accumulator."""
    if stats.count < 2:
        raise ValueError("comparison requires at least two samples")
    return comparison_row(
        label,
        t,
        closed_form,
        float(stats.mean),
        float(stats.stderr),
        one_sided=one_sided,
        gating=gating,
        note=note,
    )


@dataclass
class Report:
    """Collection of comparison rows plus run metadata."""

    rows: list[ComparisonRow] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, row: ComparisonRow) -> None:
        self.rows.append(row)

    def extend(self, rows) -> None:
        self.rows.extend(rows)

    def all_passed(self) -> bool:
        """True when every gating row passed (diagnostic rows excluded)."""
        return all(r.passed for r in self.rows if r.gating)

    def counts(self) -> dict:
        gating = [r for r in self.rows if r.gating]
        return {
            "rows": len(self.rows),
            "gating": len(gating),
            "passed": sum(r.passed for r in gating),
            "failed": sum(not r.passed for r in gating),
            "diagnostic_failed": sum(not r.passed for r in self.rows if not r.gating),
        }


def format_number(x: float) -> str:
    """Shortest round-trip decimal form, for byte-stable CSV output."""
    return format(float(x), ".17g")


def write_report_csv(report: Report, path) -> None:
    """Write rows as ``label,t,closed_form,mc_mean,mc_stderr,z,pass``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "t", "closed_form", "mc_mean", "mc_stderr", "z", "pass"])
        for r in report.rows:
            writer.writerow(
                [
                    r.label,
                    format_number(r.t),
                    format_number(r.closed_form),
                    format_number(r.mc_mean),
                    format_number(r.mc_stderr),
                    format_number(r.z),
                    str(r.passed),
                ]
            )


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_summary_json(report: Report, path, *, timestamp: bool = True) -> None:
    """Machine-readable run summary.

    The generation time lives in the single field ``generated-at`` so
    determinism checks can drop it; everything else is reproducible.
    """
    payload = dict(report.metadata)
    payload["checks"] = report.counts()
    payload["all-passed"] = report.all_passed()
    notes = [
        {"label": r.label, "t": r.t, "note": r.note} for r in report.rows if r.note
    ]
    if notes:
        payload["notes"] = notes
    if timestamp:
        payload["generated-at"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def write_series_csv(path, columns: dict[str, np.ndarray]) -> None:
    """Write named columns of equal length as CSV (column 1 should be t)."""
    names = list(columns)
    arrays = [np.asarray(columns[n], dtype=float) for n in names]
    length = len(arrays[0])
    if any(len(a) != length for a in arrays):
        raise ValueError("series columns must have equal length")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(length):
            writer.writerow([format_number(a[i]) for a in arrays])


def map_blocks(fn, n_samples: int, *, workers: int = 1, block_size: int = 128):
    """Evaluate ``fn(start, stop)`` over canonical sample blocks.

    Blocks are consecutive index ranges of fixed size; the layout depends
    only on ``n_samples`` and ``block_size``, never on ``workers``, so the
    concatenated output is identical for any worker count.  ``fn`` must be
    picklable when ``workers > 1`` and may return one array or a tuple of
    arrays (each with the sample axis first).
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    starts = list(range(0, n_samples, block_size))
    stops = [min(s + block_size, n_samples) for s in starts]
    if workers <= 1:
        parts = [fn(a, b) for a, b in zip(starts, stops)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, starts, stops))
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(piece, axis=0) for piece in zip(*parts))
    return np.concatenate(parts, axis=0)
