"""Pure-numpy implementation of the per-slot radio optimization kernel.

This is the fallback backend: the compiled extension in ``_core`` implements
the identical algorithm.  One kernel call runs the whole alternating loop of
a slot: a projected-gradient step on the RIS reflection vector followed by
per-user water-filling, repeated until the iteration budget or the movement
tolerance is hit.  Backtracking halves the step whenever a candidate fails
to decrease the objective, so the objective trace is non-increasing.

All channel inputs arrive with their blockage coefficients already folded in,
which keeps the kernel agnostic of knowledge mode and RIS mode.
"""
from __future__ import annotations

import numpy as np

from .precoder import _water_fill

_EIG_REL_FLOOR = 1e-15


class RadioKernel:
    """Per-slot solver for one (N, N_a, K, M) problem size."""

    name = "python"

    def __init__(self, n_users: int, ap_antennas: int, user_antennas: int, ris_elements: int):
        self.n_users = n_users
        self.ap_antennas = ap_antennas
        self.user_antennas = user_antennas
        self.ris_elements = ris_elements

    def solve(
        self,
        deff: np.ndarray,  # (N, N_a, K) direct channels, blockage folded in
        t_ind: np.ndarray,  # (N, M, K) user->RIS channels, blockage folded in
        h_ra: np.ndarray,  # (N, N_a, M) RIS->AP channels
        weights: np.ndarray,  # (N,) tau * W_k * (B_l - B_r) / ln2, may be <= 0
        noise_power: np.ndarray,  # (N,)
        p_max: np.ndarray,  # (N,)
        v: float,
        r0: np.ndarray,  # (M,) unit-modulus start
        step0: float,
        iterations: int,
        max_halvings: int,
        tol: float,
        optimize_ris: bool,
    ):
        """Run the alternating loop; returns (r, covariances, objective trace)."""
        r = np.asarray(r0, dtype=np.complex128).copy()
        eff = self._compose(deff, t_ind, h_ra, r)
        q = self._waterfill_all(eff, weights, noise_power, p_max, v)
        f_cur = self._objective(eff, q, weights, noise_power, v)
        trace = [f_cur]

        if optimize_ris and np.any(weights > 0):
            rho = None
            for _ in range(iterations):
                grad = self._gradient(eff, q, t_ind, h_ra, weights, noise_power)
                gmax = np.abs(grad).max()
                if gmax == 0.0:
                    break
                if rho is None:
                    rho = step0 / gmax
                accepted = False
                first_try = True
                for _ in range(max_halvings + 1):
                    r_cand = self._project(r - rho * grad)
                    eff_cand = self._compose(deff, t_ind, h_ra, r_cand)
                    f_cand = self._objective(eff_cand, q, weights, noise_power, v)
                    if f_cand <= f_cur:
                        accepted = True
                        break
                    rho *= 0.5
                    first_try = False
                if not accepted:
                    break
                moved = np.abs(r_cand - r).max()
                r = r_cand
                eff = eff_cand
                q = self._waterfill_all(eff, weights, noise_power, p_max, v)
                f_cur = self._objective(eff, q, weights, noise_power, v)
                trace.append(f_cur)
                if first_try:
                    rho *= 2.0
                if moved < tol:
                    break
        return r, q, np.asarray(trace)

    @staticmethod
    def _project(r: np.ndarray) -> np.ndarray:
        mag = np.abs(r)
        return np.where(mag > 0, r / np.where(mag > 0, mag, 1.0), 1.0 + 0.0j)

    @staticmethod
    def _compose(deff, t_ind, h_ra, r) -> np.ndarray:
        return deff + h_ra @ (r[None, :, None] * t_ind)

    def _waterfill_all(self, eff, weights, noise_power, p_max, v) -> np.ndarray:
        k = self.user_antennas
        q = np.zeros((self.n_users, k, k), dtype=np.complex128)
        for i in range(self.n_users):
            if weights[i] <= 0.0:
                continue
            gram = eff[i].conj().T @ eff[i] / noise_power[i]
            eigvals, eigvecs = np.linalg.eigh(gram)
            eigvals = np.maximum(eigvals, 0.0)
            active = eigvals > eigvals.max(initial=0.0) * _EIG_REL_FLOOR
            if not np.any(active):
                continue
            lam_active, _ = _water_fill(eigvals[active], weights[i], v, p_max[i])
            lam = np.zeros(k)
            lam[active] = lam_active
            q[i] = (eigvecs * lam) @ eigvecs.conj().T
        return q

    def _objective(self, eff, q, weights, noise_power, v) -> float:
        total = 0.0
        eye = np.eye(self.ap_antennas)
        for i in range(self.n_users):
            if weights[i] <= 0.0:
                continue
            tr = float(np.real(np.trace(q[i])))
            if tr > 0.0:
                a = eye + (eff[i] @ q[i] @ eff[i].conj().T) / noise_power[i]
                chol = np.linalg.cholesky(a)
                log_det = 2.0 * np.sum(np.log(np.real(np.diag(chol))))
                total += v * tr - weights[i] * max(0.0, log_det)
        return total

    def _gradient(self, eff, q, t_ind, h_ra, weights, noise_power) -> np.ndarray:
        grad = np.zeros(self.ris_elements, dtype=np.complex128)
        eye = np.eye(self.ap_antennas)
        for i in range(self.n_users):
            if weights[i] <= 0.0 or not np.any(q[i]):
                continue
            hq = eff[i] @ q[i]
            a = eye + (hq @ eff[i].conj().T) / noise_power[i]
            inner = np.linalg.solve(a, hq)
            x = h_ra[i].conj().T @ inner
            diag = np.einsum("mk,mk->m", x, t_ind[i].conj())
            grad -= (weights[i] / noise_power[i]) * diag
        return grad
