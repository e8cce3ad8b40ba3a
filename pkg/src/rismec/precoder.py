"""Per-user transmit covariance optimization for a fixed RIS configuration.

For each user the slot objective V tr(Q) - tau (B_l - B_r) R(Q) is convex in
Q once the channel is fixed.  If the local backlog does not exceed the remote
one (or the channel vanishes) the optimum is to stay silent; otherwise the
optimum water-fills the eigenmodes of H^H H / sigma^2 against the level set
by the Lyapunov weight and, when the power budget binds, a dual variable
found by the classic decreasing-eigenvalue sweep.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import achievable_rate

LN2 = float(np.log(2.0))
_EIG_REL_FLOOR = 1e-15  # eigenvalues below max * this are treated as zero


@dataclass
class PrecoderInput:
    """Everything the per-user covariance subproblem depends on."""

    effective_channel: np.ndarray  # (N_a, K)
    local_backlog: float  # bits
    remote_backlog: float  # bits
    lyapunov_v: float
    slot_duration: float  # s
    bandwidth: float  # Hz
    noise_power: float  # W
    max_power: float  # W

    def __post_init__(self):
        if self.local_backlog < 0 or self.remote_backlog < 0:
            raise ValueError("backlogs must be nonnegative")
        if self.max_power <= 0:
            raise ValueError("max_power must be positive")
        if not np.all(np.isfinite(self.effective_channel)):
            raise ValueError("effective channel must be finite")


@dataclass
class CovarianceResult:
    covariance: np.ndarray  # (K, K) Hermitian PSD
    tx_power: float  # trace of the covariance, W
    eigen_powers: np.ndarray  # (K,) water-filling levels, W
    water_level_dual: float  # dual variable of the power constraint


def _zero_result(k: int) -> CovarianceResult:
    return CovarianceResult(
        covariance=np.zeros((k, k), dtype=np.complex128),
        tx_power=0.0,
        eigen_powers=np.zeros(k),
        water_level_dual=0.0,
    )


def optimize_covariance(inp: PrecoderInput) -> CovarianceResult:
    """Solve the per-user covariance subproblem exactly.

    Returns the global optimum of

        min_Q  V tr(Q) - tau (B_l - B_r) W log2 det(I + H Q H^H / sigma^2)
        s.t.   Q >= 0,  tr(Q) <= P_max.
    """
    h = inp.effective_channel
    k = h.shape[1]
    if inp.local_backlog <= inp.remote_backlog:
        return _zero_result(k)

    gram = h.conj().T @ h / inp.noise_power
    eigvals, eigvecs = np.linalg.eigh(gram)
    eigvals = np.maximum(eigvals, 0.0)
    active = eigvals > eigvals.max(initial=0.0) * _EIG_REL_FLOOR
    if not np.any(active):
        return _zero_result(k)

    w = inp.slot_duration * inp.bandwidth * (inp.local_backlog - inp.remote_backlog) / LN2
    g = eigvals[active]
    v = inp.lyapunov_v

    lam_active, mu = _water_fill(g, w, v, inp.max_power)

    lam = np.zeros(k)
    lam[active] = lam_active
    q = (eigvecs * lam) @ eigvecs.conj().T
    return CovarianceResult(
        covariance=q,
        tx_power=float(lam.sum()),
        eigen_powers=lam,
        water_level_dual=mu,
    )


def _water_fill(g: np.ndarray, w: float, v: float, p_max: float):
    """Water-filling over strictly positive mode gains ``g``.

    Levels are lam_i = max(0, 1/(mu + v/w) - 1/g_i); mu = 0 unless the power
    budget binds, in which case it comes from the decreasing-gain sweep.
    Ties between equal gains are harmless: the sweep conditions skip the
    interior of a tied group and settle on its boundary.
    """
    if v > 0:
        lam = np.maximum(0.0, w / v - 1.0 / g)
        if lam.sum() <= p_max:
            return lam, 0.0

    order = np.argsort(-g, kind="stable")
    g_sorted = g[order]
    inv_cumsum = np.cumsum(1.0 / g_sorted)
    n_act = len(g_sorted)
    level = (p_max + inv_cumsum[-1]) / n_act
    for m in range(1, n_act + 1):
        cand = (p_max + inv_cumsum[m - 1]) / m
        if cand > 1.0 / g_sorted[m - 1] and (m == n_act or cand <= 1.0 / g_sorted[m]):
            level = cand
            break
    lam_sorted = np.maximum(0.0, level - 1.0 / g_sorted)
    lam = np.empty_like(lam_sorted)
    lam[order] = lam_sorted
    mu = max(0.0, 1.0 / level - (v / w if w > 0 else 0.0))
    return lam, mu


def wf_objective(inp: PrecoderInput, q: np.ndarray) -> float:
    """The user's summand of the slot radio objective at covariance ``q``."""
    rate = achievable_rate(inp.effective_channel, q, inp.bandwidth, inp.noise_power)
    backlog_gap = inp.local_backlog - inp.remote_backlog
    return float(
        inp.lyapunov_v * np.real(np.trace(q)) - inp.slot_duration * backlog_gap * rate
    )
