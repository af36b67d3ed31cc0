"""Sequential likelihood ascent search with a selective flip threshold.

Starting from a linear detector's hard decision, the search visits transmit
antennas in a fixed circular order (antenna ``k % nt`` at step ``k``) and
flips the visited bit when the likelihood gradient at that coordinate clears
a per-antenna threshold scaled by the selectivity factor ``rho``:

* flip a -1 bit when ``g_j >  rho * zeta_j``,
* flip a +1 bit when ``g_j < -rho * zeta_j``,

with ``zeta_j = |(H_real)_jj|`` and strict inequalities (a boundary hit does
not flip).  ``rho = 1`` is the classical ascent rule and guarantees the
likelihood never decreases; ``rho < 1`` flips more eagerly and trades
monotonicity for a lower error floor.

Workspace quantities (real-valued reduction of the complex model):

* ``y_eff   = 2 * Re(H^H y)``  (elementwise equal to ``H^H y + conj(H^H y)``),
* ``H_eff   = H^H H``,
* ``H_real  = 2 * Re(H_eff)``,
* likelihood ``L(b) = b^T y_eff - b^T Re(H_eff) b``,
* gradient   ``g(b) = y_eff - H_real b``.

On an accepted flip of bit j the likelihood changes by exactly
``-2*b_j*g_j - 2*(H_real)_jj`` (pre-flip values), which equals
``2*(|g_j| - zeta_j)`` whenever the flip rule fired; the gradient update is
the rank-one correction ``g += 2*b_j*(H_real column j)`` using the pre-flip
bit.  The run maintains both incrementally and exposes standalone
``likelihood``/``gradient_full`` recomputations for verification.

Antenna indices are 0-based everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .detectors import HardDecision
from .linalg import (
    FlopCounter,
    hermitian_transpose,
    mat_mul,
    mat_vec,
    mat_vec_flops,
    real_part_scaled,
)

__all__ = [
    "SlasWorkspace",
    "SlasState",
    "SlasTrace",
    "precompute",
    "likelihood",
    "gradient_full",
    "flip_decision",
    "apply_flip",
    "run",
    "full_recompute_step_flops",
]


@dataclass(frozen=True)
class SlasWorkspace:
    """Receiver-side quantities shared by every step of a search."""

    y_eff: np.ndarray    # (nt,) real
    h_eff: np.ndarray    # (nt, nt) complex, Hermitian
    h_real: np.ndarray   # (nt, nt) real, symmetric
    zeta_base: np.ndarray  # (nt,) real, |diag(h_real)|

    @property
    def nt(self) -> int:
        return self.y_eff.shape[0]


@dataclass
class SlasState:
    """Mutable search state; ``antenna`` is the next index to visit (0-based)."""

    b: np.ndarray
    g: np.ndarray
    rho: float
    step: int = 0
    antenna: int = 0
    flips: int = 0
    likelihood: float = 0.0


@dataclass
class SlasTrace:
    """Per-step record of a search plus entry/exit summaries.

    ``antenna[k]``, ``likelihood[k]``, ``flipped[k]`` describe the state
    after step k (0-based); ``bit_errors`` is populated only when the true
    payload was supplied.  ``steps_run == n_f`` unless the early-exit flag
    stopped the run after a full silent pass.
    """

    antenna: np.ndarray
    likelihood: np.ndarray
    flipped: np.ndarray
    bit_errors: np.ndarray | None
    final_bits: np.ndarray
    initial_likelihood: float
    initial_bit_errors: int | None
    flips: int
    steps_run: int
    converged: bool


def precompute(
    h: np.ndarray, y: np.ndarray, counter: FlopCounter | None = None
) -> SlasWorkspace:
    """Build the search workspace from the channel estimate and observation."""
    hh = hermitian_transpose(h)
    h_eff = mat_mul(hh, h, counter)
    hy = mat_vec(hh, y, counter)
    if counter is not None:
        counter.charge(multiplications=hy.shape[0])  # scaling Re(H^H y) by 2
    y_eff = 2.0 * hy.real
    h_real = real_part_scaled(h_eff, 2.0, counter)
    zeta_base = np.abs(np.diag(h_real))
    return SlasWorkspace(y_eff=y_eff, h_eff=h_eff, h_real=h_real, zeta_base=zeta_base)


def likelihood(ws: SlasWorkspace, b: np.ndarray) -> float:
    """L(b) = b^T y_eff - b^T Re(H_eff) b, evaluated directly."""
    b = np.asarray(b, dtype=np.float64)
    return float(b @ ws.y_eff - 0.5 * (b @ (ws.h_real @ b)))


def gradient_full(
    ws: SlasWorkspace, b: np.ndarray, counter: FlopCounter | None = None
) -> np.ndarray:
    """g = y_eff - H_real b recomputed from scratch (2*nt^2 real flops)."""
    b = np.asarray(b, dtype=np.float64)
    nt = ws.nt
    if counter is not None:
        # real mat-vec: nt^2 mults + nt*(nt-1) adds, then nt subtractions
        counter.charge(additions=nt * nt, multiplications=nt * nt)
    return ws.y_eff - ws.h_real @ b


def flip_decision(state: SlasState, ws: SlasWorkspace, j: int) -> bool:
    """Strict threshold test at antenna j using the current gradient."""
    threshold = state.rho * ws.zeta_base[j]
    if state.b[j] == -1.0:
        return state.g[j] > threshold
    return state.g[j] < -threshold


def apply_flip(state: SlasState, ws: SlasWorkspace, j: int) -> SlasState:
    """Flip bit j in place: rank-one gradient update with the pre-flip bit.

    Applying the same flip twice restores both ``b`` and ``g``.
    """
    old = state.b[j]
    state.likelihood += -2.0 * old * state.g[j] - 2.0 * ws.h_real[j, j]
    state.g += (2.0 * old) * ws.h_real[j]
    state.b[j] = -old
    state.flips += 1
    return state


def full_recompute_step_flops(nt: int) -> int:
    """Model cost of one step if the gradient were recomputed from scratch
    at complex rates: one mat-vec (8*nt^2 - 2*nt) plus one vector
    subtraction (2*nt) = exactly 8*nt^2."""
    adds, mults = mat_vec_flops(nt, nt)
    return adds + mults + 2 * nt


def run(
    ws: SlasWorkspace,
    b0: HardDecision,
    rho: float,
    n_f: int,
    b_true: np.ndarray | None = None,
    counter: FlopCounter | None = None,
    *,
    count_mode: str = "incremental",
    double_rho: bool = False,
    stop_after_silent_pass: bool = False,
) -> tuple[HardDecision, SlasTrace]:
    """Run n_f sequential steps from the initial decision ``b0``.

    Args:
        ws: precomputed workspace.
        b0: initial hard decision (the linear detector's output).
        rho: selectivity factor; applied once to the base threshold.
            ``double_rho=True`` opts into comparing against rho^2 * zeta
            instead (an alternative literal reading of the flip rule).
        n_f: number of steps (antenna visits); 0 is allowed.
        b_true: optional true payload (+-1); enables bit-error tracking.
        counter: optional flop counter.
        count_mode: "incremental" charges what the code actually does
            (initial gradient 2*nt^2, threshold setup nt, and 2*nt + 1 per
            accepted flip).  "full-recompute" instead charges the model cost
            of recomputing the gradient every step, exactly 8*nt^2 per step,
            matching the closed-form search cost model.
        stop_after_silent_pass: stop early once a full circular pass makes
            no flips (diagnostic mode; default off, never changes default
            outputs).

    Returns:
        (final hard decision, trace).
    """
    if n_f < 0:
        raise ValueError(f"n_f must be >= 0, got {n_f}")
    if rho < 0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    if count_mode not in ("incremental", "full-recompute"):
        raise ValueError(f"unknown count_mode: {count_mode!r}")
    nt = ws.nt
    b = np.asarray(b0.bits, dtype=np.float64).copy()
    if b.shape != (nt,):
        raise ValueError(f"b0 has shape {b.shape}, workspace expects ({nt},)")

    g = ws.y_eff - ws.h_real @ b
    lam = 0.5 * float(b @ ws.y_eff + b @ g)
    eff_rho = rho * rho if double_rho else rho
    thresholds = eff_rho * ws.zeta_base

    err: int | None = None
    truth: np.ndarray | None = None
    if b_true is not None:
        truth = np.asarray(b_true, dtype=np.float64)
        err = int(np.sum(b != truth))

    antenna = np.empty(n_f, dtype=np.int32)
    lik = np.empty(n_f, dtype=np.float64)
    flipped = np.empty(n_f, dtype=bool)
    errors = np.empty(n_f, dtype=np.int32) if err is not None else None

    h_real = ws.h_real
    initial_lam = lam
    initial_err = err
    flips = 0
    silent = 0
    steps_run = 0
    for k in range(n_f):
        j = k % nt
        bj = b[j]
        gj = g[j]
        fire = gj > thresholds[j] if bj == -1.0 else gj < -thresholds[j]
        if fire:
            lam += -2.0 * bj * gj - 2.0 * h_real[j, j]
            g += (2.0 * bj) * h_real[j]
            b[j] = -bj
            flips += 1
            silent = 0
            if err is not None:
                err += 1 if b[j] != truth[j] else -1
        else:
            silent += 1
        antenna[k] = j
        lik[k] = lam
        flipped[k] = fire
        if errors is not None:
            errors[k] = err
        steps_run += 1
        if stop_after_silent_pass and silent >= nt:
            break

    if steps_run < n_f:
        antenna = antenna[:steps_run]
        lik = lik[:steps_run]
        flipped = flipped[:steps_run]
        if errors is not None:
            errors = errors[:steps_run]

    if counter is not None:
        if count_mode == "incremental":
            counter.charge(additions=nt * nt, multiplications=nt * nt)  # initial gradient
            counter.charge(multiplications=nt)  # thresholds rho * zeta
            counter.charge(additions=flips * nt, multiplications=flips * (nt + 1))
        else:
            per_step = full_recompute_step_flops(nt)
            counter.charge(multiplications=6 * nt * nt * steps_run)
            counter.charge(additions=(per_step - 6 * nt * nt) * steps_run)

    trace = SlasTrace(
        antenna=antenna,
        likelihood=lik,
        flipped=flipped,
        bit_errors=errors,
        final_bits=b,
        initial_likelihood=initial_lam,
        initial_bit_errors=initial_err,
        flips=flips,
        steps_run=steps_run,
        converged=silent >= nt,
    )
    return HardDecision(bits=b), trace
