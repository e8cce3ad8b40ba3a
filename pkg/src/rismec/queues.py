"""Two-stage queue recursions, Little's-law delay, and congestion diagnostics.

Every user holds a local uplink buffer drained by the radio and a remote
compute buffer at the edge host fed by whatever the radio delivered in the
same slot:

    B_l(t+1) = max(0, B_l(t) - tau R(t)) + A(t)
    B_r(t+1) = max(0, B_r(t) - tau f(t)/J) + min(B_l(t), tau R(t))
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig


@dataclass
class QueueState:
    """Per-user backlogs in bits."""

    local: np.ndarray  # (N,)
    remote: np.ndarray  # (N,)

    def __post_init__(self):
        self.local = np.asarray(self.local, dtype=float)
        self.remote = np.asarray(self.remote, dtype=float)
        if np.any(self.local < 0) or np.any(self.remote < 0):
            raise ValueError("backlogs must be nonnegative")
        if not (np.all(np.isfinite(self.local)) and np.all(np.isfinite(self.remote))):
            raise ValueError("backlogs must be finite")

    @classmethod
    def empty(cls, n: int) -> "QueueState":
        return cls(local=np.zeros(n), remote=np.zeros(n))


def update_local_queue(
    state: QueueState, rates: np.ndarray, arrivals: np.ndarray, slot_duration: float
):
    """Drain the uplink buffers at the realized rates, then add arrivals.

    Returns the new state and the bits actually transferred over the air,
    which feed the remote queue update of the same slot.
    """
    served = slot_duration * np.asarray(rates, dtype=float)
    transferred = np.minimum(state.local, served)
    new_local = np.maximum(0.0, state.local - served) + np.asarray(arrivals, dtype=float)
    return QueueState(local=new_local, remote=state.remote.copy()), transferred


def update_remote_queue(
    state: QueueState,
    frequencies: np.ndarray,
    cycles_per_bit: np.ndarray,
    transferred: np.ndarray,
    slot_duration: float,
) -> QueueState:
    """Drain the compute buffers by tau f / J, then add the slot's transfer."""
    drained = slot_duration * np.asarray(frequencies, dtype=float) / np.asarray(
        cycles_per_bit, dtype=float
    )
    new_remote = np.maximum(0.0, state.remote - drained) + transferred
    return QueueState(local=state.local.copy(), remote=new_remote)


def lyapunov(state: QueueState) -> float:
    """Quadratic congestion measure: half the sum of squared backlogs."""
    return 0.5 * float(np.sum(state.local**2) + np.sum(state.remote**2))


@dataclass
class DppDiagnostics:
    """Congestion and bound diagnostics for one slot."""

    lyapunov: float  # bits^2
    dpp_objective: float  # action-dependent bound terms, summed
    per_user_terms: np.ndarray  # (N,)


def _dpp_terms(state, rates, arrivals, frequencies, covariances, config) -> np.ndarray:
    tau = config.slot_duration
    traces = np.real(np.trace(np.asarray(covariances), axis1=-2, axis2=-1))
    return (
        (state.remote - state.local) * tau * np.asarray(rates)
        + np.asarray(arrivals) * state.local
        - tau * state.remote * np.asarray(frequencies) / config.cycles_per_bit
        + config.lyapunov_v * traces
    )


def dpp_objective(
    state: QueueState,
    rates: np.ndarray,
    arrivals: np.ndarray,
    frequencies: np.ndarray,
    covariances: np.ndarray,
    config: SystemConfig,
) -> float:
    """Action-dependent part of the per-slot drift-plus-penalty bound.

    The additive constant of the bound is state-only and is not tracked.
    """
    return float(_dpp_terms(state, rates, arrivals, frequencies, covariances, config).sum())


def dpp_diagnostics(
    state: QueueState,
    rates: np.ndarray,
    arrivals: np.ndarray,
    frequencies: np.ndarray,
    covariances: np.ndarray,
    config: SystemConfig,
) -> DppDiagnostics:
    terms = _dpp_terms(state, rates, arrivals, frequencies, covariances, config)
    return DppDiagnostics(
        lyapunov=lyapunov(state),
        dpp_objective=float(terms.sum()),
        per_user_terms=terms,
    )


def average_delay(log, slot_duration: float, skip: int = 0) -> np.ndarray:
    """Little's-law per-user delay in seconds from a metrics log.

    Uses time-averaged backlogs over time-averaged arrivals per slot,
    ignoring the first ``skip`` slots.  Raises if a user saw no arrivals.
    """
    local = np.asarray(log.local)[skip:]
    remote = np.asarray(log.remote)[skip:]
    arrivals = np.asarray(log.arrivals)[skip:]
    if local.shape[0] < 1:
        raise ValueError("log must span at least one slot")
    mean_arrivals = arrivals.mean(axis=0)
    if np.any(mean_arrivals <= 0):
        raise ValueError("delay undefined for users with zero arrivals")
    return slot_duration * (local.mean(axis=0) + remote.mean(axis=0)) / mean_arrivals
