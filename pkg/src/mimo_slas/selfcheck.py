"""Randomized property suite tying the search to its independent oracles.

Replays the sequential search step by step on small random systems and
checks, per instance:

* monotone    — the directly-recomputed likelihood never drops across an
                accepted flip (selectivity factor 1),
* improves    — the final likelihood is >= the initializer's,
* fixed-point — after a full silent pass no single flip improves the
                likelihood (local optimum),
* gradient    — the incrementally-maintained gradient matches a full
                recomputation to 1e-9 after every step,
* ml-bound    — the final likelihood never exceeds the exhaustive
                maximum-likelihood value.

``inject_fault="grad-sign"`` deliberately applies the rank-one gradient
update with the wrong sign inside the replay loop; the gradient and
monotonicity checks must then fail and the runner must report nonzero
failures (the CLI exits 1).  This keeps the suite itself testable.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

from .channel import SnrSpec, assemble, sample_bpsk, sample_channel
from .detectors import DetectorKind, mf, mmse, slice_bpsk, zf
from .oracle import is_local_optimum, ml_bruteforce
from .slas import SlasState, apply_flip, flip_decision, gradient_full, likelihood, precompute

__all__ = ["CheckCounts", "run_selfcheck", "CHECK_NAMES"]

CHECK_NAMES = ("monotone", "improves", "fixed-point", "gradient", "ml-bound")

_NT_AXIS = (2, 4, 8)
_SNR_AXIS = (0.0, 10.0, 20.0)
_DETECTOR_AXIS = (DetectorKind.MF, DetectorKind.ZF, DetectorKind.MMSE)
_TOL = 1e-9


@dataclass
class CheckCounts:
    passed: int = 0
    failed: int = 0
    first_failure: int | None = None

    def record(self, ok: bool, instance: int) -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if self.first_failure is None:
                self.first_failure = instance


def _apply_flip_wrong_sign(state: SlasState, ws, j: int) -> None:
    # deliberate fault: rank-one update applied with the wrong sign
    old = state.b[j]
    state.likelihood += -2.0 * old * state.g[j] - 2.0 * ws.h_real[j, j]
    state.g -= (2.0 * old) * ws.h_real[j]
    state.b[j] = -old
    state.flips += 1


def _check_instance(
    instance: int, seed: int, fault: str | None, results: dict[str, CheckCounts]
) -> None:
    nt = _NT_AXIS[instance % 3]
    snr = SnrSpec(_SNR_AXIS[(instance // 3) % 3])
    det = _DETECTOR_AXIS[(instance // 9) % 3]
    rng = np.random.default_rng(np.random.SeedSequence((seed, instance)))

    h = sample_channel(nt, nt, rng)
    b_true = sample_bpsk(nt, snr.es, rng)
    inst = assemble(h, b_true, snr, rng)
    if det is DetectorKind.MF:
        soft = mf(inst.h, inst.y)
    elif det is DetectorKind.ZF:
        soft = zf(inst.h, inst.y)
    else:
        soft = mmse(inst.h, inst.y, snr)
    b0 = slice_bpsk(soft)

    ws = precompute(inst.h, inst.y)
    state = SlasState(
        b=b0.bits.copy(),
        g=gradient_full(ws, b0.bits),
        rho=1.0,
        likelihood=likelihood(ws, b0.bits),
    )
    initial = likelihood(ws, state.b)

    monotone_ok = True
    gradient_ok = True
    silent = 0
    converged = False
    for step in range(64 * nt):
        j = step % nt
        if flip_decision(state, ws, j):
            before = likelihood(ws, state.b)
            if fault == "grad-sign":
                _apply_flip_wrong_sign(state, ws, j)
            else:
                apply_flip(state, ws, j)
            after = likelihood(ws, state.b)
            if after < before - _TOL:
                monotone_ok = False
            silent = 0
        else:
            silent += 1
        if np.max(np.abs(state.g - gradient_full(ws, state.b))) > _TOL:
            gradient_ok = False
        if silent >= nt:
            converged = True
            break

    final = likelihood(ws, state.b)
    ml = ml_bruteforce(ws)
    results["monotone"].record(monotone_ok, instance)
    results["improves"].record(final >= initial - _TOL, instance)
    results["fixed-point"].record(
        converged and is_local_optimum(ws, state.b), instance
    )
    results["gradient"].record(gradient_ok, instance)
    results["ml-bound"].record(final <= ml.lambda_star + _TOL, instance)


def run_selfcheck(
    seed: int = 0,
    instances: int = 1000,
    inject_fault: str | None = None,
    stream=None,
) -> int:
    """Run the suite; returns 0 when every check passes on every instance."""
    if instances < 1:
        raise ValueError(f"instances must be >= 1, got {instances}")
    if inject_fault not in (None, "grad-sign"):
        raise ValueError(f"unknown fault: {inject_fault!r}")
    stream = stream or sys.stdout
    results = {name: CheckCounts() for name in CHECK_NAMES}
    for instance in range(instances):
        _check_instance(instance, seed, inject_fault, results)

    print(
        f"selfcheck: {instances} instances, master seed {seed}"
        + (f", injected fault: {inject_fault}" if inject_fault else ""),
        file=stream,
    )
    print(f"  {'check':<14} {'pass':>6} {'fail':>6}  first-failing-instance", file=stream)
    failures = 0
    for name in CHECK_NAMES:
        c = results[name]
        failures += c.failed
        where = "" if c.first_failure is None else str(c.first_failure)
        print(f"  {name:<14} {c.passed:>6} {c.failed:>6}  {where}", file=stream)
    print("selfcheck: " + ("PASS" if failures == 0 else "FAIL"), file=stream)
    return 0 if failures == 0 else 1
