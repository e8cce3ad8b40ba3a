"""Greedy CPU frequency allocation at the edge host.

The per-slot compute problem is a linear program with one coupling budget
constraint and per-user boxes, so assigning the whole remaining budget to
users in decreasing order of B_r / J is exact.  Each user is also capped at
the frequency that would empty its remote queue within the slot.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ComputeAllocation:
    frequencies: np.ndarray  # (N,) cycles/s

    @property
    def total(self) -> float:
        return float(self.frequencies.sum())


def allocate_cpu(
    remote_backlog: np.ndarray,
    cycles_per_bit: np.ndarray,
    f_max: float,
    slot_duration: float,
) -> ComputeAllocation:
    """Maximize sum_k B_r,k f_k / J_k under the budget and drain caps.

    Ties in the ratio B_r / J go to the lower user index.
    """
    b_r = np.asarray(remote_backlog, dtype=float)
    j = np.asarray(cycles_per_bit, dtype=float)
    if np.any(b_r < 0) or np.any(j <= 0) or f_max <= 0 or slot_duration <= 0:
        raise ValueError("inputs must be nonnegative (J, f_max, slot positive)")

    caps = np.minimum(f_max, b_r * j / slot_duration)
    ratio = b_r / j
    # Stable sort on the negated ratio keeps lower indices first on ties.
    order = np.argsort(-ratio, kind="stable")

    freqs = np.zeros_like(b_r)
    remaining = f_max
    for k in order:
        if remaining <= 0 or ratio[k] <= 0:
            break
        grant = min(remaining, caps[k])
        freqs[k] = grant
        remaining -= grant
    return ComputeAllocation(frequencies=freqs)
