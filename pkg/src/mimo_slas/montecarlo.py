"""Deterministic Monte-Carlo BER and convergence-trace experiments.

Reproducibility contract: every trial's randomness derives from
``SeedSequence((master_seed, nt, nr, snr_key, trial_index))`` and nothing
else, so a trial is a pure function of the seed and its index.  Worker count
and chunking never enter the derivation: results are byte-identical at any
``n_jobs``.  Because the random inputs (payload, channel, noise) do not
depend on the detector chain, cells differing only in detector/rho/n_f/las
share channel realizations exactly — detector comparisons and rho sweeps are
paired, and a trace's step-0 statistics equal the corresponding search-off
BER cell.

Stopping rule: a point runs trials in index order until the cumulative bit
errors reach ``min_bit_errors`` or ``max_trials`` is exhausted; a point that
exhausts the cap below the error floor is flagged, not hidden.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .channel import SnrSpec, assemble, sample_bpsk, sample_channel
from .detectors import DetectorKind, mf, mmse, slice_bpsk, zf
from .linalg import SingularMatrixError
from .slas import SlasTrace, precompute, run

__all__ = [
    "PointSpec",
    "ExperimentConfig",
    "BerPoint",
    "TraceAggregate",
    "trial_rng",
    "trial",
    "run_point",
    "run_sweep",
    "run_trace",
    "MAX_GRID_POINTS",
]

MAX_GRID_POINTS = 10_000
_CHUNK = 512


@dataclass(frozen=True)
class PointSpec:
    """One fully-specified simulation cell."""

    nt: int
    nr: int
    snr_db: float
    detector: DetectorKind
    las_enabled: bool
    rho: float
    n_f: int
    max_trials: int
    min_bit_errors: int
    master_seed: int


@dataclass(frozen=True)
class BerPoint:
    """Aggregated result for one cell."""

    point: PointSpec
    trials_run: int
    bits_sent: int
    bit_errors: int
    ber: float
    flagged: bool
    aborted_trials: int = 0


@dataclass(frozen=True)
class TraceAggregate:
    """Mean likelihood/BER trajectories; index 0 is the initializer."""

    point: PointSpec
    trials: int
    mean_likelihood: np.ndarray  # length n_f + 1
    mean_ber: np.ndarray         # length n_f + 1


def _normalize(value, kind) -> tuple:
    if isinstance(value, (list, tuple, np.ndarray)):
        return tuple(kind(v) for v in value)
    return (kind(value),)


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep description.  nt/nr are zipped (paired antenna counts); the
    snr/detector/las/rho axes form a cartesian grid, capped at
    ``MAX_GRID_POINTS`` cells.  When the search is off the rho axis
    collapses to its first value (rho is meaningless without the search)."""

    nt: tuple[int, ...]
    nr: tuple[int, ...]
    snr_db: tuple[float, ...]
    rho: tuple[float, ...] = (1.0,)
    detector: tuple[DetectorKind, ...] = (DetectorKind.MF,)
    las_enabled: tuple[bool, ...] = (True,)
    n_f: int = 100
    max_trials: int = 100_000
    min_bit_errors: int = 5
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "nt", _normalize(self.nt, int))
        object.__setattr__(self, "nr", _normalize(self.nr, int))
        object.__setattr__(self, "snr_db", _normalize(self.snr_db, float))
        object.__setattr__(self, "rho", _normalize(self.rho, float))
        object.__setattr__(
            self, "detector", _normalize(self.detector, DetectorKind)
        )
        object.__setattr__(self, "las_enabled", _normalize(self.las_enabled, bool))
        if len(self.nt) != len(self.nr):
            raise ValueError(
                f"nt and nr lists are zipped and must have equal length, "
                f"got {len(self.nt)} and {len(self.nr)}"
            )
        if any(n < 1 for n in self.nt + self.nr):
            raise ValueError("antenna counts must be >= 1")
        if self.n_f < 0:
            raise ValueError(f"n_f must be >= 0, got {self.n_f}")
        if self.max_trials < 1:
            raise ValueError(f"max_trials must be >= 1, got {self.max_trials}")
        if self.min_bit_errors < 1:
            raise ValueError(f"min_bit_errors must be >= 1, got {self.min_bit_errors}")
        if self.master_seed < 0:
            raise ValueError(f"master_seed must be >= 0, got {self.master_seed}")
        if self.grid_size() > MAX_GRID_POINTS:
            raise ValueError(
                f"sweep grid has {self.grid_size()} points, "
                f"refusing more than {MAX_GRID_POINTS}"
            )

    def grid_size(self) -> int:
        per_las = sum(len(self.rho) if las else 1 for las in self.las_enabled)
        return len(self.nt) * len(self.snr_db) * len(self.detector) * per_las

    def points(self) -> list[PointSpec]:
        out = []
        for nt, nr in zip(self.nt, self.nr):
            for snr in self.snr_db:
                for det in self.detector:
                    for las in self.las_enabled:
                        rho_axis = self.rho if las else (self.rho[0],)
                        for rho in rho_axis:
                            out.append(
                                PointSpec(
                                    nt=nt,
                                    nr=nr,
                                    snr_db=snr,
                                    detector=det,
                                    las_enabled=las,
                                    rho=rho,
                                    n_f=self.n_f,
                                    max_trials=self.max_trials,
                                    min_bit_errors=self.min_bit_errors,
                                    master_seed=self.master_seed,
                                )
                            )
        return out

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        """Build from a JSON-style mapping; scalar axes are accepted."""
        known = {
            "nt",
            "nr",
            "snr_db",
            "rho",
            "detector",
            "las_enabled",
            "n_f",
            "max_trials",
            "min_bit_errors",
            "master_seed",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def _encode_snr(snr_db: float) -> int:
    """Non-negative integer key for an snr value (milli-dB, sign folded in)."""
    if math.isinf(snr_db):
        if snr_db > 0:
            return 1 << 40
        raise ValueError("snr_db = -inf is not a valid operating point")
    milli = round(snr_db * 1000)
    return (abs(milli) << 1) | (1 if milli < 0 else 0)


def trial_rng(
    master_seed: int, nt: int, nr: int, snr_db: float, trial_index: int
) -> np.random.Generator:
    """Per-trial generator; the key deliberately excludes detector/rho/n_f."""
    seq = np.random.SeedSequence(
        (master_seed, nt, nr, _encode_snr(snr_db), trial_index)
    )
    return np.random.default_rng(seq)


def trial(
    point: PointSpec, trial_index: int, record_trace: bool = False
) -> tuple[int, SlasTrace | None]:
    """Run one trial; returns (bit errors, optional search trace).

    Pure in (master_seed, trial_index) for fixed cell parameters.  When the
    search runs at rho >= 1 the never-hurts property (final likelihood >=
    initial likelihood) is asserted on every trial.
    """
    rng = trial_rng(point.master_seed, point.nt, point.nr, point.snr_db, trial_index)
    snr = SnrSpec(point.snr_db)
    h = sample_channel(point.nt, point.nr, rng)
    b_true = sample_bpsk(point.nt, snr.es, rng)
    inst = assemble(h, b_true, snr, rng)

    if point.detector is DetectorKind.MF:
        soft = mf(inst.h, inst.y)
    elif point.detector is DetectorKind.ZF:
        soft = zf(inst.h, inst.y)
    else:
        soft = mmse(inst.h, inst.y, snr)
    decision = slice_bpsk(soft)

    trace = None
    if point.las_enabled:
        ws = precompute(inst.h, inst.y)
        decision, trace = run(
            ws, decision, point.rho, point.n_f, b_true=inst.b_true
        )
        if point.rho >= 1.0:
            final = trace.likelihood[-1] if trace.steps_run else trace.initial_likelihood
            if final < trace.initial_likelihood - 1e-9:
                raise AssertionError(
                    f"likelihood decreased at rho={point.rho} "
                    f"(seed={point.master_seed}, trial={trial_index}): "
                    f"{trace.initial_likelihood} -> {final}"
                )
    errors = int(np.sum(decision.bits != inst.b_true))
    return errors, (trace if record_trace else None)


def _ber_chunk(point: PointSpec, start: int, stop: int) -> np.ndarray:
    """Per-trial error counts for [start, stop); -1 marks an aborted trial."""
    out = np.empty(stop - start, dtype=np.int64)
    for i in range(start, stop):
        try:
            out[i - start] = trial(point, i)[0]
        except SingularMatrixError:
            out[i - start] = -1
    return out


def _scan(counts, state):
    """Feed one chunk into the running (errors, aborted, trials) totals.

    Returns True when the stop condition fired inside this chunk.
    """
    for value in counts:
        state["trials"] += 1
        if value < 0:
            state["aborted"] += 1
        else:
            state["errors"] += int(value)
        if state["errors"] >= state["floor"]:
            return True
    return False


def run_point(
    point: PointSpec, n_jobs: int = 1, _executor: ProcessPoolExecutor | None = None
) -> BerPoint:
    """Run one cell to its stopping condition.

    ``n_jobs > 1`` distributes fixed-size trial chunks over processes; the
    chunk boundaries and the index-ordered stop scan are the same at every
    worker count, so the aggregate is identical to the sequential run.
    """
    state = {"errors": 0, "aborted": 0, "trials": 0, "floor": point.min_bit_errors}
    starts = list(range(0, point.max_trials, _CHUNK))

    def finish() -> BerPoint:
        trials_run = state["trials"]
        counted = trials_run - state["aborted"]
        bits = counted * point.nt
        errors = state["errors"]
        ber = errors / bits if bits else math.nan
        flagged = errors < point.min_bit_errors or state["aborted"] > 0
        return BerPoint(
            point=point,
            trials_run=trials_run,
            bits_sent=bits,
            bit_errors=errors,
            ber=ber,
            flagged=flagged,
            aborted_trials=state["aborted"],
        )

    if n_jobs <= 1:
        for start in starts:
            counts = _ber_chunk(point, start, min(start + _CHUNK, point.max_trials))
            if _scan(counts, state):
                break
        return finish()

    own_executor = _executor is None
    executor = _executor or ProcessPoolExecutor(max_workers=n_jobs)
    try:
        pending: dict[int, object] = {}
        next_submit = 0

        def top_up():
            nonlocal next_submit
            while len(pending) < n_jobs and next_submit < len(starts):
                s = starts[next_submit]
                pending[next_submit] = executor.submit(
                    _ber_chunk, point, s, min(s + _CHUNK, point.max_trials)
                )
                next_submit += 1

        top_up()
        for idx in range(len(starts)):
            if idx not in pending:
                break
            counts = pending.pop(idx).result()
            stopped = _scan(counts, state)
            if stopped:
                for fut in pending.values():
                    fut.cancel()
                break
            top_up()
        return finish()
    finally:
        if own_executor:
            executor.shutdown(wait=False, cancel_futures=True)


def run_sweep(cfg: ExperimentConfig, n_jobs: int = 1) -> list[BerPoint]:
    """Run every cell of the sweep grid, in grid order."""
    points = cfg.points()
    if n_jobs <= 1:
        return [run_point(p) for p in points]
    with ProcessPoolExecutor(max_workers=n_jobs) as executor:
        return [run_point(p, n_jobs=n_jobs, _executor=executor) for p in points]


def _trace_chunk(point: PointSpec, start: int, stop: int):
    lams = np.empty((stop - start, point.n_f + 1), dtype=np.float64)
    errs = np.empty((stop - start, point.n_f + 1), dtype=np.int64)
    for i in range(start, stop):
        _, tr = trial(point, i, record_trace=True)
        lams[i - start, 0] = tr.initial_likelihood
        lams[i - start, 1:] = tr.likelihood
        errs[i - start, 0] = tr.initial_bit_errors
        errs[i - start, 1:] = tr.bit_errors
    return lams, errs


def run_trace(point: PointSpec, trials: int, n_jobs: int = 1) -> TraceAggregate:
    """Average likelihood/BER trajectories over a fixed trial count."""
    if not point.las_enabled:
        raise ValueError("trace experiments require the search to be enabled")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    spans = [(s, min(s + _CHUNK, trials)) for s in range(0, trials, _CHUNK)]
    if n_jobs <= 1 or len(spans) == 1:
        parts = [_trace_chunk(point, a, b) for a, b in spans]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as executor:
            futures = [executor.submit(_trace_chunk, point, a, b) for a, b in spans]
            parts = [f.result() for f in futures]
    lams = np.vstack([p[0] for p in parts])
    errs = np.vstack([p[1] for p in parts])
    return TraceAggregate(
        point=point,
        trials=trials,
        mean_likelihood=lams.mean(axis=0),
        mean_ber=errs.mean(axis=0) / point.nt,
    )


def point_from_config(cfg: ExperimentConfig, **overrides) -> PointSpec:
    """Convenience: a single cell from a one-point config."""
    points = cfg.points()
    if len(points) != 1:
        raise ValueError(f"config describes {len(points)} cells, expected exactly 1")
    return replace(points[0], **overrides) if overrides else points[0]
