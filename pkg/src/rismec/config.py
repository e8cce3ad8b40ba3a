"""Scenario configuration: radio constants, geometry, queueing and optimizer knobs.

All per-user quantities are stored as length-N arrays so heterogeneous users
are possible, but the constructors accept scalars and broadcast them.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

RIS_MODES = ("optimized", "random", "absent")
KNOWLEDGE_MODES = ("instantaneous", "statistical")


def _per_user(value, n: int, dtype=float) -> np.ndarray:
    arr = np.asarray(value, dtype=dtype)
    if arr.ndim == 0:
        arr = np.full(n, arr, dtype=dtype)
    if arr.shape != (n,):
        raise ValueError(f"expected scalar or length-{n} array, got shape {arr.shape}")
    return arr


@dataclass
class SystemConfig:
    """Full scenario description for one simulation run.

    Defaults describe the reference scenario: 6 four-antenna users offloading
    over 28 GHz links to a 4-antenna AP with a 64-element RIS mounted next to
    it, 1 MHz total bandwidth split equally, Poisson arrivals of 1 Mbps per
    user, and a 4.5 GHz edge CPU at 500 cycles/bit.
    """

    num_users: int = 6
    user_antennas: int = 4
    ap_antennas: int = 4
    ris_elements: int = 64
    slot_duration: float = 10e-3
    bandwidth_per_user: np.ndarray = None  # Hz, per user; default = 1 MHz / N
    noise_psd: float = 10 ** (-174 / 10) * 1e-3  # -174 dBm/Hz in W/Hz
    max_tx_power: np.ndarray = 0.1  # W per user
    max_cpu: float = 4.5e9  # cycles/s at the edge host
    cycles_per_bit: np.ndarray = 500.0
    lyapunov_v: float = 1e9
    arrival_rate: np.ndarray = 1e6  # bits/s per user
    block_prob_direct: np.ndarray = 0.5
    block_prob_indirect: np.ndarray = 0.0
    pgm_iterations: int = 20
    pgm_step: float = 1.0  # initial step, in units of 1/||grad||_inf
    pgm_max_halvings: int = 10
    pgm_tol: float = 1e-6  # early stop on ||r_new - r||_inf
    phase_bits: int = 0  # 0 = continuous phases
    knowledge_mode: str = "instantaneous"
    ris_mode: str = "optimized"
    carrier_freq: float = 28e9
    rician_k_db: float = 10.0
    pathloss_exp_direct: float = 3.2
    pathloss_exp_ris: float = 2.0
    ris_element_gain_db: float = 10.5  # per-hop aperture/directivity of an element
    ap_position: np.ndarray = (0.0, 0.0, 6.0)
    ris_position: np.ndarray = (32.0, 32.0, 3.0)
    service_area_origin: np.ndarray = (30.0, 30.0)
    service_area_size: float = 4.0
    user_height: float = 1.5
    warmup_fraction: float = 0.1
    rng_seed: int = 0
    # Derived, set in __post_init__.
    noise_power: np.ndarray = field(init=False)

    def __post_init__(self):
        n = int(self.num_users)
        if self.bandwidth_per_user is None:
            self.bandwidth_per_user = np.full(n, 1e6 / n)
        self.bandwidth_per_user = _per_user(self.bandwidth_per_user, n)
        self.max_tx_power = _per_user(self.max_tx_power, n)
        self.cycles_per_bit = _per_user(self.cycles_per_bit, n)
        self.arrival_rate = _per_user(self.arrival_rate, n)
        self.block_prob_direct = _per_user(self.block_prob_direct, n)
        self.block_prob_indirect = _per_user(self.block_prob_indirect, n)
        self.ap_position = np.asarray(self.ap_position, dtype=float)
        self.ris_position = np.asarray(self.ris_position, dtype=float)
        self.service_area_origin = np.asarray(self.service_area_origin, dtype=float)
        self.noise_power = self.noise_psd * self.bandwidth_per_user
        self.validate()

    def validate(self):
        for name in ("num_users", "user_antennas", "ap_antennas", "ris_elements"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("slot_duration", "noise_psd", "max_cpu", "carrier_freq", "pgm_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("bandwidth_per_user", "max_tx_power", "cycles_per_bit"):
            if not np.all(getattr(self, name) > 0):
                raise ValueError(f"{name} must be positive")
        if self.lyapunov_v < 0:
            raise ValueError("lyapunov_v must be nonnegative")
        if np.any(self.arrival_rate < 0):
            raise ValueError("arrival_rate must be nonnegative")
        for name in ("block_prob_direct", "block_prob_indirect"):
            p = getattr(self, name)
            if np.any(p < 0) or np.any(p > 1):
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.pgm_iterations < 1:
            raise ValueError("pgm_iterations must be >= 1")
        if self.phase_bits < 0:
            raise ValueError("phase_bits must be >= 0")
        if self.knowledge_mode not in KNOWLEDGE_MODES:
            raise ValueError(f"knowledge_mode must be one of {KNOWLEDGE_MODES}")
        if self.ris_mode not in RIS_MODES:
            raise ValueError(f"ris_mode must be one of {RIS_MODES}")
        if not 0 <= self.warmup_fraction < 1:
            raise ValueError("warmup_fraction must lie in [0, 1)")
        if not np.allclose(self.noise_power, self.noise_psd * self.bandwidth_per_user):
            raise ValueError("noise_power must equal noise_psd * bandwidth_per_user")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    def replace(self, **changes) -> "SystemConfig":
        """Return a copy with the given fields changed (rederives noise power).

        Changing ``num_users`` resets the bandwidth split to the equal-share
        default unless one is given; other per-user fields must then be passed
        as scalars or arrays of the new length.
        """
        base = {f.name: getattr(self, f.name) for f in fields(self) if f.init}
        base.update(changes)
        if "num_users" in changes and "bandwidth_per_user" not in changes:
            base["bandwidth_per_user"] = None
        return SystemConfig(**base)


_SCALAR_KEYS = {
    "num_users": int,
    "user_antennas": int,
    "ap_antennas": int,
    "ris_elements": int,
    "slot_duration": float,
    "noise_psd": float,
    "max_cpu": float,
    "lyapunov_v": float,
    "pgm_iterations": int,
    "pgm_step": float,
    "pgm_max_halvings": int,
    "pgm_tol": float,
    "phase_bits": int,
    "knowledge_mode": str,
    "ris_mode": str,
    "carrier_freq": float,
    "rician_k_db": float,
    "pathloss_exp_direct": float,
    "pathloss_exp_ris": float,
    "service_area_size": float,
    "user_height": float,
    "warmup_fraction": float,
    "rng_seed": int,
}
_PER_USER_KEYS = (
    "bandwidth_per_user",
    "max_tx_power",
    "cycles_per_bit",
    "arrival_rate",
    "block_prob_direct",
    "block_prob_indirect",
)
_VECTOR_KEYS = ("ap_position", "ris_position", "service_area_origin")


def load_config(path: str | Path, **overrides) -> SystemConfig:
    """Parse a ``key = value`` config file into a SystemConfig.

    Lines starting with ``#`` are comments.  Per-user fields accept either a
    scalar (broadcast to all users) or a comma-separated list; position fields
    take comma-separated coordinates.
    """
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in _SCALAR_KEYS:
            values[key] = _SCALAR_KEYS[key](val)
        elif key in _PER_USER_KEYS or key in _VECTOR_KEYS:
            parts = [float(p) for p in val.split(",")]
            values[key] = parts[0] if len(parts) == 1 and key in _PER_USER_KEYS else np.array(parts)
        else:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
    values.update(overrides)
    return SystemConfig(**values)


def config_to_dict(config: SystemConfig) -> dict:
    """Flatten a SystemConfig into plain JSON-serializable values."""
    out = {}
    for f in fields(config):
        val = getattr(config, f.name)
        out[f.name] = val.tolist() if isinstance(val, np.ndarray) else val
    return out
