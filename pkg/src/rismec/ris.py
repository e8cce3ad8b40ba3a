"""RIS reflectivity state and its projected-gradient update.

The surface is a vector of M unit-modulus complex coefficients.  The per-slot
radio objective is differentiated with respect to that vector in closed form;
a gradient step followed by entrywise renormalization keeps the iterate on
the unit circle.  Quantized and random configurations cover the baselines.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import ChannelTriple
from .config import SystemConfig

LN2 = float(np.log(2.0))
UNIT_TOL = 1e-12


@dataclass
class RisConfig:
    """Reflection coefficients of the surface, |r_i| = 1."""

    reflection: np.ndarray  # (M,) complex

    def __post_init__(self):
        self.reflection = np.asarray(self.reflection, dtype=np.complex128)
        if self.reflection.ndim != 1:
            raise ValueError("reflection must be a vector")

    @property
    def phases(self) -> np.ndarray:
        return np.mod(np.angle(self.reflection), 2.0 * np.pi)

    def validate(self):
        if np.any(np.abs(np.abs(self.reflection) - 1.0) > UNIT_TOL):
            raise ValueError("reflection coefficients must have unit modulus")

    @classmethod
    def neutral(cls, m: int) -> "RisConfig":
        return cls(np.ones(m, dtype=np.complex128))

    @classmethod
    def from_phases(cls, phases: np.ndarray) -> "RisConfig":
        return cls(np.exp(1j * np.asarray(phases, dtype=float)))


def project_unit_circle(r: np.ndarray) -> RisConfig:
    """Entrywise projection r_i / |r_i|; exact zeros map to 1."""
    r = np.asarray(r, dtype=np.complex128)
    mag = np.abs(r)
    out = np.where(mag > 0, r / np.where(mag > 0, mag, 1.0), 1.0 + 0.0j)
    return RisConfig(out)


def pgm_step(ris: RisConfig, grad: np.ndarray, rho: float) -> RisConfig:
    """One projected-gradient update of the reflection vector."""
    return project_unit_circle(ris.reflection - rho * np.asarray(grad))


def quantize_phases(ris: RisConfig, bits: int) -> RisConfig:
    """Snap each phase to the nearest of the 2^bits uniform levels.

    Exact midpoints go to the lower level.
    """
    if bits < 1:
        raise ValueError("bits must be >= 1")
    step = 2.0 * np.pi / (1 << bits)
    idx = np.ceil(ris.phases / step - 0.5).astype(np.int64) % (1 << bits)
    return RisConfig.from_phases(idx * step)


def random_phases(m: int, rng: np.random.Generator) -> RisConfig:
    """Phases i.i.d. uniform on [0, 2pi); drawn once per run for the
    uncontrolled-RIS baseline."""
    return RisConfig.from_phases(rng.uniform(0.0, 2.0 * np.pi, size=m))


def gradient_wrt_ris(
    queues,
    triples: Sequence[ChannelTriple],
    effective: Sequence[np.ndarray],
    covariances: Sequence[np.ndarray],
    config: SystemConfig,
    indirect_coeffs: np.ndarray | None = None,
) -> np.ndarray:
    """Wirtinger gradient of the slot radio objective w.r.t. the reflection
    vector, as a length-M complex vector.

    The objective is sum_k V tr(Q_k) - tau (B_l,k - B_r,k) R_k with R_k in
    bits/s, so each user's term carries the weight tau W_k (B_l,k - B_r,k)
    and a 1/ln2 factor from the base-2 logarithm.  ``indirect_coeffs`` holds
    the (1 - blockage) multipliers the effective channels were composed with;
    a fully blocked indirect link contributes nothing.  The returned vector
    g satisfies d(objective) = 2 Re <g, dr> for a perturbation dr.
    """
    n = config.num_users
    if indirect_coeffs is None:
        indirect_coeffs = np.ones(n)
    weights = (
        config.slot_duration
        * config.bandwidth_per_user
        * (queues.local - queues.remote)
        / LN2
    )
    grad = np.zeros(config.ris_elements, dtype=np.complex128)
    for k in range(n):
        coeff = float(indirect_coeffs[k])
        q = np.asarray(covariances[k])
        if weights[k] == 0.0 or coeff == 0.0 or not np.any(q):
            continue
        h = effective[k]
        if h.shape != (config.ap_antennas, config.user_antennas):
            raise ValueError("effective channel has wrong shape")
        sigma2 = config.noise_power[k]
        hq = h @ q
        a = np.eye(config.ap_antennas) + (hq @ h.conj().T) / sigma2
        inner = np.linalg.solve(a, hq)  # (I + Z Q Z^H)^{-1} H Q
        x = triples[k].ris_to_ap.conj().T @ inner  # (M, K)
        diag = np.einsum("mk,mk->m", x, triples[k].user_to_ris.conj())
        grad -= (weights[k] * coeff / sigma2) * diag
    return grad
