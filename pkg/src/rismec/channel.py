"""mmWave channel generation and uplink rate evaluation.

Each user sees a direct link to the AP and an indirect link bouncing off the
RIS.  Per slot both links can be hit by independent Bernoulli blockage, and
the surviving components combine into a single effective MIMO matrix

    H_k = (1 - beta_direct) H_d + (1 - beta_indirect) H_ra diag(r) H_ur.

Small-scale fading is Rician: a deterministic line-of-sight term built from
ULA steering vectors plus an i.i.d. complex-Gaussian scattered term, scaled
by a distance power law referenced to the free-space loss at 1 m.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig


@dataclass
class NodeGeometry:
    """Static positions (meters) of the AP, the RIS, and the users."""

    ap_position: np.ndarray  # (3,)
    ris_position: np.ndarray  # (3,)
    user_positions: np.ndarray  # (N, 3)

    def __post_init__(self):
        pts = np.vstack([self.ap_position, self.ris_position, self.user_positions])
        if not np.all(np.isfinite(pts)):
            raise ValueError("positions must be finite")
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        if np.any(d[np.triu_indices(len(pts), k=1)] == 0):
            raise ValueError("two nodes coincide")


@dataclass
class ChannelTriple:
    """One user's raw channels: direct, user->RIS, RIS->AP."""

    direct: np.ndarray  # (N_a, K)
    user_to_ris: np.ndarray  # (M, K)
    ris_to_ap: np.ndarray  # (N_a, M)


@dataclass
class LinkState:
    """Per-user blockage flags for the current slot (1 = blocked)."""

    direct_blocked: np.ndarray  # (N,) int
    indirect_blocked: np.ndarray  # (N,) int


def generate_geometry(config: SystemConfig, rng: np.random.Generator) -> NodeGeometry:
    """Place the AP and RIS at their configured anchors and drop users
    uniformly at random in the square service area."""
    origin = config.service_area_origin
    xy = origin + config.service_area_size * rng.random((config.num_users, 2))
    users = np.column_stack([xy, np.full(config.num_users, config.user_height)])
    return NodeGeometry(
        ap_position=config.ap_position.copy(),
        ris_position=config.ris_position.copy(),
        user_positions=users,
    )


def path_loss(distance: float, config: SystemConfig, exponent: float) -> float:
    """Power-law path loss anchored at the 1 m free-space value."""
    ref = (config.wavelength / (4.0 * np.pi)) ** 2
    return ref / distance**exponent


def _steering(n: int, azimuth: float) -> np.ndarray:
    # Half-wavelength ULA response along the x axis.
    return np.exp(1j * np.pi * np.arange(n) * np.sin(azimuth))


def _azimuth(src: np.ndarray, dst: np.ndarray) -> float:
    d = dst - src
    return float(np.arctan2(d[1], d[0]))


class ChannelSampler:
    """Per-slot channel draws with the geometry-fixed parts precomputed.

    The line-of-sight matrices and path losses only depend on node positions,
    so they are built once; each ``sample`` call only draws the scattered
    component.  Simulation runs keep one of these per run.
    """

    def __init__(self, geometry: NodeGeometry, config: SystemConfig):
        self.config = config
        kappa = 10 ** (config.rician_k_db / 10)
        self._nlos_coef = np.sqrt(0.5 / (kappa + 1.0))
        los_coef = np.sqrt(kappa / (kappa + 1.0))
        ris_gain = 10.0 ** (config.ris_element_gain_db / 10.0)
        ap, ris = geometry.ap_position, geometry.ris_position
        self._los = []  # per user: (los term, nlos scale) per link
        for pos in geometry.user_positions:
            links = []
            for n_rx, n_tx, src, dst, pl in (
                (config.ap_antennas, config.user_antennas, pos, ap,
                 path_loss(float(np.linalg.norm(ap - pos)), config,
                           config.pathloss_exp_direct)),
                (config.ris_elements, config.user_antennas, pos, ris,
                 ris_gain * path_loss(float(np.linalg.norm(ris - pos)), config,
                                      config.pathloss_exp_ris)),
                (config.ap_antennas, config.ris_elements, ris, ap,
                 ris_gain * path_loss(float(np.linalg.norm(ap - ris)), config,
                                      config.pathloss_exp_ris)),
            ):
                los = np.outer(
                    _steering(n_rx, _azimuth(dst, src)),
                    _steering(n_tx, _azimuth(src, dst)).conj(),
                )
                links.append((np.sqrt(pl) * los_coef * los,
                              np.sqrt(pl) * self._nlos_coef))
            self._los.append(links)

    def sample(self, user: int, rng: np.random.Generator) -> ChannelTriple:
        if not 0 <= user < self.config.num_users:
            raise ValueError(f"user index {user} out of range")
        mats = []
        for los, scale in self._los[user]:
            nlos = rng.standard_normal(los.shape) + 1j * rng.standard_normal(los.shape)
            mats.append(los + scale * nlos)
        return ChannelTriple(*mats)


def sample_channel_triple(
    geometry: NodeGeometry, config: SystemConfig, user: int, rng: np.random.Generator
) -> ChannelTriple:
    """Draw one slot's channel matrices for a user.

    The line-of-sight component is fixed by the geometry; the scattered
    component is redrawn on every call, independently per link.
    """
    return ChannelSampler(geometry, config).sample(user, rng)


def sample_blocking(config: SystemConfig, rng: np.random.Generator) -> LinkState:
    """Draw independent Bernoulli blockage flags for every user and link."""
    u = rng.random((config.num_users, 2))
    return LinkState(
        direct_blocked=(u[:, 0] < config.block_prob_direct).astype(np.int64),
        indirect_blocked=(u[:, 1] < config.block_prob_indirect).astype(np.int64),
    )


def _compose(triple: ChannelTriple, reflection, direct_coeff: float, indirect_coeff: float):
    n_a, k = triple.direct.shape
    h = direct_coeff * triple.direct
    if indirect_coeff != 0.0 and reflection is not None:
        m = reflection.shape[0]
        if triple.user_to_ris.shape != (m, k) or triple.ris_to_ap.shape != (n_a, m):
            raise ValueError("channel/RIS dimensions inconsistent")
        h = h + indirect_coeff * (triple.ris_to_ap @ (reflection[:, None] * triple.user_to_ris))
    return h


def compose_channel(triple: ChannelTriple, ris, state: LinkState, user: int) -> np.ndarray:
    """Effective channel under the realized blockage of one slot.

    ``ris`` is a RisConfig or None (no RIS: the indirect term is dropped).
    """
    reflection = None if ris is None else ris.reflection
    return _compose(
        triple,
        reflection,
        1.0 - float(state.direct_blocked[user]),
        0.0 if reflection is None else 1.0 - float(state.indirect_blocked[user]),
    )


def compose_channel_statistical(
    triple: ChannelTriple, ris, config: SystemConfig, user: int
) -> np.ndarray:
    """Expected-channel surrogate: blockage flags replaced by their means.

    Used only inside the optimizer under statistical knowledge; realized
    rates always go through :func:`compose_channel`.
    """
    reflection = None if ris is None else ris.reflection
    return _compose(
        triple,
        reflection,
        1.0 - float(config.block_prob_direct[user]),
        0.0 if reflection is None else 1.0 - float(config.block_prob_indirect[user]),
    )


def achievable_rate(
    h: np.ndarray,
    q: np.ndarray,
    bandwidth: float,
    noise_power: float,
    check: bool = True,
) -> float:
    """Uplink rate W log2 det(I + H Q H^H / sigma^2) in bits/s.

    Cholesky is used for the log-det; the argument matrix is >= I so the
    factorization cannot fail.  Round-off producing a tiny negative value is
    clamped to zero.
    """
    if noise_power <= 0:
        raise ValueError("noise_power must be positive")
    if check:
        if not np.allclose(q, q.conj().T, atol=1e-10):
            raise ValueError("covariance must be Hermitian")
        eig = np.linalg.eigvalsh(q)
        if eig.size and eig.min() < -1e-10 * max(1.0, abs(eig).max()):
            raise ValueError("covariance must be positive semidefinite")
    n_a = h.shape[0]
    a = np.eye(n_a) + (h @ q @ h.conj().T) / noise_power
    chol = np.linalg.cholesky(a)
    log_det = 2.0 * np.sum(np.log(np.real(np.diag(chol))))
    return bandwidth * max(0.0, log_det) / np.log(2.0)
