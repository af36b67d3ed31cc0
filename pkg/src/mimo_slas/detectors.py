"""Linear uplink detectors: matched filter, zero forcing, and MMSE.

All three return a :class:`SoftEstimate` whose ``flops_spent`` is the
instrumented real-flop cost of the call.  ZF and MMSE build the explicit
filter matrix ``W = G^-1 H^H`` (Gram inverse times conjugate transpose) and
then apply it to ``y`` — deliberately not the cheaper "invert, then multiply
the matched-filter vector" order — so the instrumented totals line up with
the closed-form cost models in :mod:`mimo_slas.complexity`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import SnrSpec
from .linalg import FlopCounter, gauss_invert, hermitian_transpose, mat_mul, mat_vec

__all__ = ["DetectorKind", "SoftEstimate", "HardDecision", "mf", "zf", "mmse", "slice_bpsk"]


class DetectorKind(str, enum.Enum):
    MF = "mf"
    ZF = "zf"
    MMSE = "mmse"


@dataclass(frozen=True)
class SoftEstimate:
    """Unsliced detector output plus the flops the detector spent."""

    values: np.ndarray
    detector_kind: DetectorKind
    flops_spent: int


@dataclass(frozen=True)
class HardDecision:
    """Sliced BPSK decisions, entries exactly +-1.0."""

    bits: np.ndarray


def _merge(counter: FlopCounter | None, local: FlopCounter) -> None:
    if counter is not None:
        counter.charge(
            additions=local.real_additions, multiplications=local.real_multiplications
        )


def mf(h: np.ndarray, y: np.ndarray, counter: FlopCounter | None = None) -> SoftEstimate:
    """Matched filter H^H y."""
    local = FlopCounter()
    values = mat_vec(hermitian_transpose(h), y, local)
    _merge(counter, local)
    return SoftEstimate(values=values, detector_kind=DetectorKind.MF, flops_spent=local.total)


def zf(h: np.ndarray, y: np.ndarray, counter: FlopCounter | None = None) -> SoftEstimate:
    """Zero forcing (G^-1 H^H) y with G = H^H H.

    Propagates :class:`~mimo_slas.linalg.SingularMatrixError` when the Gram
    matrix is numerically singular (e.g. nt > nr).
    """
    local = FlopCounter()
    hh = hermitian_transpose(h)
    gram = mat_mul(hh, h, local)
    gram_inv = gauss_invert(gram, local)
    filt = mat_mul(gram_inv, hh, local)
    values = mat_vec(filt, y, local)
    _merge(counter, local)
    return SoftEstimate(values=values, detector_kind=DetectorKind.ZF, flops_spent=local.total)


def mmse(
    h: np.ndarray, y: np.ndarray, snr: SnrSpec, counter: FlopCounter | None = None
) -> SoftEstimate:
    """MMSE filter ((G + (n0/es) I)^-1 H^H) y.

    Regularizing the Gram diagonal charges 2*nt multiplications (real scalar
    times the complex identity diagonal) plus 2*nt additions (complex
    diagonal add).  With n0 = 0 this degrades to ZF exactly.
    """
    local = FlopCounter()
    hh = hermitian_transpose(h)
    gram = mat_mul(hh, h, local)
    nt = gram.shape[0]
    reg = gram.copy()
    reg[np.diag_indices(nt)] += snr.n0 / snr.es
    local.charge(additions=2 * nt, multiplications=2 * nt)
    reg_inv = gauss_invert(reg, local)
    filt = mat_mul(reg_inv, hh, local)
    values = mat_vec(filt, y, local)
    _merge(counter, local)
    return SoftEstimate(values=values, detector_kind=DetectorKind.MMSE, flops_spent=local.total)


def slice_bpsk(soft: SoftEstimate | np.ndarray) -> HardDecision:
    """Sign slicer on the real part; the tie Re == 0 maps to +1."""
    values = soft.values if isinstance(soft, SoftEstimate) else np.asarray(soft)
    bits = np.where(np.real(values) >= 0.0, 1.0, -1.0)
    return HardDecision(bits=bits)
