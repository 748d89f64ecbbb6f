"""Filtered state of the observer: conditioned on the past observed record,
averaged (unconditioned) over the unobserved channel.

The filtered state is independent of any assumption about the unobserved
channel's detector: all three setups share the same averaged channel map.
"""

import numpy as np

from .dynamics import ModelParams, NumericalFailure
from .engine import DEFAULT_STRIDE, filter_batch
from .engine import InconsistentRecordError  # re-exported  # noqa: F401
from .states import min_eigenvalue
from .unraveling import MeasurementRecord

PSD_ABORT = -1e-9


def filter_states(
    record_o: MeasurementRecord,
    rho0: np.ndarray,
    p: ModelParams,
    stride: int = 1,
) -> np.ndarray:
    """Filtered state series (Td + 1, 2, 2) for one observed record.

    Per step the recorded outcome's Kraus operator is imposed, the unobserved
    channel's averaged map applied, and the trace renormalized.  Replays are
    deterministic functions of the record.
    """
    record_o.check_grid(p)
    out = filter_batch(
        record_o.setup, record_o.outcomes[None, :], rho0, p, stride=stride
    )[0]
    lo = min(min_eigenvalue(out[j]) for j in range(0, out.shape[0], max(1, out.shape[0] // 32)))
    if lo < PSD_ABORT:
        raise NumericalFailure(f"filtered state lost positivity: min eig {lo:.3g}")
    return out


def filter_ensemble(
    setup_o,
    records_o: np.ndarray,
    rho0: np.ndarray,
    p: ModelParams,
    stride: int = DEFAULT_STRIDE,
) -> np.ndarray:
    """Batched filtered states (R, Td + 1, 2, 2) for stacked observed records."""
    return filter_batch(setup_o, records_o, rho0, p, stride=stride)
