# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-slot radio optimization kernel.

Mirrors rismec._kernel_py.RadioKernel: the same alternating loop (projected
gradient on the RIS reflection vector, per-user water-filling, backtracking
step control) written with flat C loops.  Matrices here are small (antennas
<= 8, RIS elements <= a few hundred), so hand-rolled Cholesky/solve routines
beat the per-call overhead of BLAS; the K x K Hermitian eigendecomposition
goes through LAPACK's zheev.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport log, sqrt
from scipy.linalg.cython_lapack cimport zheev

cnp.import_array()

ctypedef double complex zdouble

cdef double EIG_REL_FLOOR = 1e-15


cdef inline double _cabs2(zdouble z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef void _compose_user(zdouble* deff, zdouble* tind, zdouble* hra,
                        zdouble* r, zdouble* eff,
                        int na, int k, int m) noexcept nogil:
    cdef int a, j, mm
    cdef zdouble c, rm
    for a in range(na):
        for j in range(k):
            eff[a * k + j] = deff[a * k + j]
    for mm in range(m):
        rm = r[mm]
        for a in range(na):
            c = hra[a * m + mm] * rm
            for j in range(k):
                eff[a * k + j] = eff[a * k + j] + c * tind[mm * k + j]


cdef void _build_a(zdouble* eff, zdouble* q, double sigma2,
                   zdouble* hq, zdouble* amat, int na, int k) noexcept nogil:
    # hq = E Q, amat = I + hq E^H / sigma2
    cdef int a, b, i, j
    cdef zdouble s
    for a in range(na):
        for j in range(k):
            s = 0
            for i in range(k):
                s = s + eff[a * k + i] * q[i * k + j]
            hq[a * k + j] = s
    for a in range(na):
        for b in range(na):
            s = 0
            for j in range(k):
                s = s + hq[a * k + j] * eff[b * k + j].conjugate()
            amat[a * na + b] = s / sigma2
        amat[a * na + a] = amat[a * na + a] + 1.0


cdef void _cholesky(zdouble* a, int n) noexcept nogil:
    # In-place lower Cholesky of a Hermitian positive definite matrix.
    # Callers only feed matrices >= I, so the pivots stay well above zero.
    cdef int i, j, kk
    cdef double s, d
    cdef zdouble z
    for j in range(n):
        s = a[j * n + j].real
        for kk in range(j):
            s -= _cabs2(a[j * n + kk])
        if s < 1e-300:
            s = 1e-300
        d = sqrt(s)
        a[j * n + j] = d
        for i in range(j + 1, n):
            z = a[i * n + j]
            for kk in range(j):
                z = z - a[i * n + kk] * a[j * n + kk].conjugate()
            a[i * n + j] = z / d


cdef double _logdet_chol(zdouble* a, int n) noexcept nogil:
    cdef int j
    cdef double s = 0.0
    for j in range(n):
        s += log(a[j * n + j].real)
    return 2.0 * s


cdef void _chol_solve(zdouble* l, zdouble* b, int n, int ncols) noexcept nogil:
    # Solve (L L^H) X = B in place, B row-major n x ncols.
    cdef int col, i, kk
    cdef zdouble z
    for col in range(ncols):
        for i in range(n):
            z = b[i * ncols + col]
            for kk in range(i):
                z = z - l[i * n + kk] * b[kk * ncols + col]
            b[i * ncols + col] = z / l[i * n + i].real
        for i in range(n - 1, -1, -1):
            z = b[i * ncols + col]
            for kk in range(i + 1, n):
                z = z - l[kk * n + i].conjugate() * b[kk * ncols + col]
            b[i * ncols + col] = z / l[i * n + i].real


cdef class RadioKernel:
    """Compiled per-slot solver for one (N, N_a, K, M) problem size."""

    cdef readonly int n_users, ap_antennas, user_antennas, ris_elements
    cdef int lwork
    cdef zdouble[::1] r_a, r_b, grad, gram, zwork, hq, amat
    cdef zdouble[:, :, ::1] eff_a, eff_b, q
    cdef double[::1] evals, rwork, lam, trace
    cdef object _q_np

    name = "cython"

    def __init__(self, int n_users, int ap_antennas, int user_antennas, int ris_elements):
        self.n_users = n_users
        self.ap_antennas = ap_antennas
        self.user_antennas = user_antennas
        self.ris_elements = ris_elements
        cdef int k = user_antennas, na = ap_antennas, m = ris_elements
        self.lwork = 4 * k if k > 1 else 4
        self.r_a = np.empty(m, dtype=np.complex128)
        self.r_b = np.empty(m, dtype=np.complex128)
        self.grad = np.empty(m, dtype=np.complex128)
        self.gram = np.empty(k * k, dtype=np.complex128)
        self.zwork = np.empty(self.lwork, dtype=np.complex128)
        self.hq = np.empty(na * k, dtype=np.complex128)
        self.amat = np.empty(na * na, dtype=np.complex128)
        self.eff_a = np.empty((n_users, na, k), dtype=np.complex128)
        self.eff_b = np.empty((n_users, na, k), dtype=np.complex128)
        self._q_np = np.zeros((n_users, k, k), dtype=np.complex128)
        self.q = self._q_np
        self.evals = np.empty(k, dtype=np.float64)
        self.rwork = np.empty(max(1, 3 * k - 2), dtype=np.float64)
        self.lam = np.empty(k, dtype=np.float64)
        self.trace = np.empty(2, dtype=np.float64)

    cdef void _waterfill_user(self, zdouble* eff, double sigma2, double w,
                              double v, double p, zdouble* q_out) noexcept nogil:
        cdef int k = self.user_antennas, na = self.ap_antennas
        cdef int i, j, mm, i0, n_act, info, found
        cdef double gmax, floor, s, g, cumsum, cand, level
        cdef zdouble acc
        cdef char jobz = b'V', uplo = b'U'
        cdef int lda = k, lwork = self.lwork
        for i in range(k * k):
            q_out[i] = 0
        if w <= 0.0:
            return
        # Gram = E^H E / sigma2, column-major for LAPACK.
        for i in range(k):
            for j in range(k):
                acc = 0
                for mm in range(na):
                    acc = acc + eff[mm * k + i].conjugate() * eff[mm * k + j]
                self.gram[i + j * k] = acc / sigma2
        zheev(&jobz, &uplo, &k, &self.gram[0], &lda, &self.evals[0],
              &self.zwork[0], &lwork, &self.rwork[0], &info)
        if info != 0:
            return
        gmax = self.evals[k - 1]
        if gmax <= 0.0:
            return
        floor = gmax * EIG_REL_FLOOR
        i0 = 0
        while i0 < k and self.evals[i0] <= floor:
            i0 += 1
        n_act = k - i0
        if n_act == 0:
            return
        for i in range(k):
            self.lam[i] = 0.0
        found = 0
        if v > 0.0:
            s = 0.0
            for i in range(i0, k):
                g = w / v - 1.0 / self.evals[i]
                if g < 0.0:
                    g = 0.0
                self.lam[i] = g
                s += g
            if s <= p:
                found = 1
        if not found:
            cumsum = 0.0
            level = 0.0
            found = 0
            for mm in range(1, n_act + 1):
                g = self.evals[k - mm]
                cumsum += 1.0 / g
                cand = (p + cumsum) / mm
                if cand > 1.0 / g and (mm == n_act or cand <= 1.0 / self.evals[k - mm - 1]):
                    level = cand
                    found = 1
                    break
            if not found:
                level = (p + cumsum) / n_act
            for i in range(i0, k):
                g = level - 1.0 / self.evals[i]
                self.lam[i] = g if g > 0.0 else 0.0
        # Q = U diag(lam) U^H with eigenvector columns in self.gram.
        for i in range(k):
            for j in range(k):
                acc = 0
                for mm in range(i0, k):
                    if self.lam[mm] > 0.0:
                        acc = acc + self.gram[i + mm * k] * self.lam[mm] * self.gram[j + mm * k].conjugate()
                q_out[i * k + j] = acc

    cdef void _waterfill_all(self, zdouble[:, :, ::1] eff, double[::1] weights,
                             double[::1] noise, double[::1] pmax, double v) noexcept nogil:
        cdef int u
        for u in range(self.n_users):
            self._waterfill_user(&eff[u, 0, 0], noise[u], weights[u], v,
                                 pmax[u], &self.q[u, 0, 0])

    cdef double _objective(self, zdouble[:, :, ::1] eff, double[::1] weights,
                           double[::1] noise, double v) noexcept nogil:
        cdef int u, i, k = self.user_antennas, na = self.ap_antennas
        cdef double total = 0.0, tr, ld
        for u in range(self.n_users):
            if weights[u] <= 0.0:
                continue
            tr = 0.0
            for i in range(k):
                tr += self.q[u, i, i].real
            if tr <= 0.0:
                continue
            _build_a(&eff[u, 0, 0], &self.q[u, 0, 0], noise[u],
                     &self.hq[0], &self.amat[0], na, k)
            _cholesky(&self.amat[0], na)
            ld = _logdet_chol(&self.amat[0], na)
            if ld < 0.0:
                ld = 0.0
            total += v * tr - weights[u] * ld
        return total

    cdef void _gradient(self, zdouble[:, :, ::1] eff, zdouble[:, :, ::1] tind,
                        zdouble[:, :, ::1] hra, double[::1] weights,
                        double[::1] noise, zdouble* grad) noexcept nogil:
        cdef int u, a, j, mm, k = self.user_antennas, na = self.ap_antennas
        cdef int m = self.ris_elements
        cdef double scale, qnorm
        cdef zdouble acc, x
        for mm in range(m):
            grad[mm] = 0
        for u in range(self.n_users):
            if weights[u] <= 0.0:
                continue
            qnorm = 0.0
            for j in range(k * k):
                qnorm += _cabs2((&self.q[u, 0, 0])[j])
            if qnorm == 0.0:
                continue
            _build_a(&eff[u, 0, 0], &self.q[u, 0, 0], noise[u],
                     &self.hq[0], &self.amat[0], na, k)
            _cholesky(&self.amat[0], na)
            _chol_solve(&self.amat[0], &self.hq[0], na, k)  # hq <- A^{-1} E Q
            scale = weights[u] / noise[u]
            for mm in range(m):
                acc = 0
                for j in range(k):
                    x = 0
                    for a in range(na):
                        x = x + hra[u, a, mm].conjugate() * self.hq[a * k + j]
                    acc = acc + x * tind[u, mm, j].conjugate()
                grad[mm] = grad[mm] - scale * acc

    cdef void _compose_all(self, zdouble[:, :, ::1] deff, zdouble[:, :, ::1] tind,
                           zdouble[:, :, ::1] hra, zdouble* r,
                           zdouble[:, :, ::1] eff) noexcept nogil:
        cdef int u
        for u in range(self.n_users):
            _compose_user(&deff[u, 0, 0], &tind[u, 0, 0], &hra[u, 0, 0],
                          r, &eff[u, 0, 0], self.ap_antennas,
                          self.user_antennas, self.ris_elements)

    def solve(self, deff, t_ind, h_ra, weights, noise_power, p_max, double v,
              r0, double step0, int iterations, int max_halvings, double tol,
              bint optimize_ris):
        """Run the alternating loop; returns (r, covariances, objective trace)."""
        cdef zdouble[:, :, ::1] deff_v = np.ascontiguousarray(deff, dtype=np.complex128)
        cdef zdouble[:, :, ::1] tind_v = np.ascontiguousarray(t_ind, dtype=np.complex128)
        cdef zdouble[:, :, ::1] hra_v = np.ascontiguousarray(h_ra, dtype=np.complex128)
        cdef double[::1] w_v = np.ascontiguousarray(weights, dtype=np.float64)
        cdef double[::1] noise_v = np.ascontiguousarray(noise_power, dtype=np.float64)
        cdef double[::1] pmax_v = np.ascontiguousarray(p_max, dtype=np.float64)
        cdef zdouble[::1] r0_v = np.ascontiguousarray(r0, dtype=np.complex128)

        cdef int n = self.n_users, na = self.ap_antennas, ku = self.user_antennas
        if (deff_v.shape[0] != n or deff_v.shape[1] != na or deff_v.shape[2] != ku
                or tind_v.shape[0] != n or tind_v.shape[1] != self.ris_elements
                or tind_v.shape[2] != ku or hra_v.shape[0] != n
                or hra_v.shape[1] != na or hra_v.shape[2] != self.ris_elements
                or w_v.shape[0] != n or noise_v.shape[0] != n
                or pmax_v.shape[0] != n or r0_v.shape[0] != self.ris_elements):
            raise ValueError("input shapes do not match kernel dimensions")

        if self.trace.shape[0] < iterations + 2:
            self.trace = np.empty(iterations + 2, dtype=np.float64)

        cdef zdouble* r_cur = &self.r_a[0]
        cdef zdouble* r_cand = &self.r_b[0]
        cdef zdouble[:, :, ::1] eff_cur = self.eff_a
        cdef zdouble[:, :, ::1] eff_cand = self.eff_b
        cdef zdouble* swap_r
        cdef zdouble[:, :, ::1] swap_eff
        cdef int mm, it, h, n_trace, m = self.ris_elements
        cdef bint any_pos = False, accepted, first_try
        cdef double f_cur, f_cand, gmax, ga, moved, rho = -1.0
        cdef zdouble z

        for mm in range(m):
            r_cur[mm] = r0_v[mm]
        for mm in range(self.n_users):
            if w_v[mm] > 0.0:
                any_pos = True

        self._compose_all(deff_v, tind_v, hra_v, r_cur, eff_cur)
        self._waterfill_all(eff_cur, w_v, noise_v, pmax_v, v)
        f_cur = self._objective(eff_cur, w_v, noise_v, v)
        self.trace[0] = f_cur
        n_trace = 1

        if optimize_ris and any_pos:
            for it in range(iterations):
                self._gradient(eff_cur, tind_v, hra_v, w_v, noise_v, &self.grad[0])
                gmax = 0.0
                for mm in range(m):
                    ga = sqrt(_cabs2(self.grad[mm]))
                    if ga > gmax:
                        gmax = ga
                if gmax == 0.0:
                    break
                if rho < 0.0:
                    rho = step0 / gmax
                accepted = False
                first_try = True
                for h in range(max_halvings + 1):
                    for mm in range(m):
                        z = r_cur[mm] - rho * self.grad[mm]
                        ga = sqrt(_cabs2(z))
                        r_cand[mm] = z / ga if ga > 0.0 else 1.0
                    self._compose_all(deff_v, tind_v, hra_v, r_cand, eff_cand)
                    f_cand = self._objective(eff_cand, w_v, noise_v, v)
                    if f_cand <= f_cur:
                        accepted = True
                        break
                    rho *= 0.5
                    first_try = False
                if not accepted:
                    break
                moved = 0.0
                for mm in range(m):
                    ga = sqrt(_cabs2(r_cand[mm] - r_cur[mm]))
                    if ga > moved:
                        moved = ga
                swap_r = r_cur
                r_cur = r_cand
                r_cand = swap_r
                swap_eff = eff_cur
                eff_cur = eff_cand
                eff_cand = swap_eff
                self._waterfill_all(eff_cur, w_v, noise_v, pmax_v, v)
                f_cur = self._objective(eff_cur, w_v, noise_v, v)
                self.trace[n_trace] = f_cur
                n_trace += 1
                if first_try:
                    rho *= 2.0
                if moved < tol:
                    break

        r_out = np.empty(m, dtype=np.complex128)
        cdef zdouble[::1] r_out_v = r_out
        for mm in range(m):
            r_out_v[mm] = r_cur[mm]
        return r_out, np.array(self._q_np, copy=True), np.asarray(self.trace[:n_trace]).copy()
