"""Independent checks for the optimizer components.

Each routine here deliberately avoids the closed forms used by the package:
gradients come from central finite differences of the slot objective,
covariance optima from a grid plus a generic constrained minimizer over the
eigen-power simplex, and CPU allocations from a stock LP solver.  The test
suite and the ``selftest`` CLI command compare the production paths against
these.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import linprog, minimize

from .channel import achievable_rate
from .precoder import PrecoderInput


def radio_objective(
    r: np.ndarray,
    deff: np.ndarray,
    t_ind: np.ndarray,
    h_ra: np.ndarray,
    covariances: np.ndarray,
    weights_bits: np.ndarray,
    bandwidth: np.ndarray,
    noise_power: np.ndarray,
    lyapunov_v: float,
) -> float:
    """Slot radio objective sum_k V tr(Q_k) - tau (B_l - B_r) R_k at fixed
    covariances, with channels recomposed from the reflection vector ``r``.

    ``weights_bits`` holds tau * (B_l,k - B_r,k); rates are in bits/s.
    """
    total = 0.0
    for k in range(deff.shape[0]):
        h = deff[k] + h_ra[k] @ (r[:, None] * t_ind[k])
        rate = achievable_rate(h, covariances[k], bandwidth[k], noise_power[k], check=False)
        total += lyapunov_v * float(np.real(np.trace(covariances[k])))
        total -= weights_bits[k] * rate
    return total


def fd_gradient(objective, r: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function of a complex vector,
    taken over the stacked real and imaginary parts (length 2M)."""
    m = r.shape[0]
    grad = np.zeros(2 * m)
    for i in range(2 * m):
        delta = np.zeros(m, dtype=np.complex128)
        if i < m:
            delta[i] = step
        else:
            delta[i - m] = 1j * step
        grad[i] = (objective(r + delta) - objective(r - delta)) / (2.0 * step)
    return grad


def covariance_objective_eigen(lam: np.ndarray, gains: np.ndarray, inp: PrecoderInput) -> float:
    """Objective restricted to the eigenbasis of H^H H: the covariance is
    diagonal there with powers ``lam`` against mode gains ``gains``."""
    rate = inp.bandwidth * np.sum(np.log2(1.0 + gains * lam))
    return float(
        inp.lyapunov_v * lam.sum()
        - inp.slot_duration * (inp.local_backlog - inp.remote_backlog) * rate
    )


def covariance_oracle(inp: PrecoderInput, grid: int = 24) -> float:
    """Best objective value found by brute force over the eigen-power simplex
    refined with SLSQP.  Valid for small antenna counts (K <= 4)."""
    h = inp.effective_channel
    k = h.shape[1]
    gains = np.maximum(np.linalg.eigvalsh(h.conj().T @ h).real, 0.0) / inp.noise_power
    p = inp.max_power

    best_val = 0.0  # lam = 0 is always feasible
    best_lam = np.zeros(k)
    if k <= 3:
        axes = [np.linspace(0.0, p, grid + 1)] * k
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
        mesh = mesh[mesh.sum(axis=1) <= p + 1e-12]
        for lam in mesh:
            val = covariance_objective_eigen(lam, gains, inp)
            if val < best_val:
                best_val, best_lam = val, lam

    starts = [best_lam, np.zeros(k), np.full(k, p / k), np.full(k, p / (2 * k))]
    constraint = {"type": "ineq", "fun": lambda lam: p - lam.sum()}
    for x0 in starts:
        res = minimize(
            covariance_objective_eigen,
            x0,
            args=(gains, inp),
            method="SLSQP",
            bounds=[(0.0, p)] * k,
            constraints=[constraint],
            options={"maxiter": 300, "ftol": 1e-14},
        )
        if res.fun < best_val and res.x.sum() <= p + 1e-9 and np.all(res.x >= -1e-12):
            best_val = float(res.fun)
    return best_val


def random_feasible_covariance(k: int, p_max: float, rng: np.random.Generator) -> np.ndarray:
    """Random Hermitian PSD matrix with trace uniformly below the budget."""
    a = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    q = a @ a.conj().T
    return q * (rng.uniform(0.1, 1.0) * p_max / np.real(np.trace(q)))


def lp_cpu_oracle(
    remote_backlog: np.ndarray,
    cycles_per_bit: np.ndarray,
    f_max: float,
    slot_duration: float,
) -> float:
    """Optimal value of the CPU allocation LP via scipy's solver."""
    b_r = np.asarray(remote_backlog, dtype=float)
    j = np.asarray(cycles_per_bit, dtype=float)
    caps = np.minimum(f_max, b_r * j / slot_duration)
    n = len(b_r)
    res = linprog(
        c=-(b_r / j),
        A_ub=np.ones((1, n)),
        b_ub=[f_max],
        bounds=list(zip(np.zeros(n), caps)),
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"LP oracle failed: {res.message}")
    return float(-res.fun)
