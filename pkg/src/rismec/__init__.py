"""RIS-assisted multi-user MIMO computation offloading: simulator and optimizer."""

__version__ = "0.1.0"

from .channel import (
    ChannelTriple,
    LinkState,
    NodeGeometry,
    achievable_rate,
    compose_channel,
    compose_channel_statistical,
    generate_geometry,
    sample_blocking,
    sample_channel_triple,
)
from .config import SystemConfig, load_config
from .controller import SlotDecision, Strategy, optimize_slot
from .precoder import CovarianceResult, PrecoderInput, optimize_covariance, wf_objective
from .queues import (
    DppDiagnostics,
    QueueState,
    average_delay,
    dpp_diagnostics,
    dpp_objective,
    lyapunov,
    update_local_queue,
    update_remote_queue,
)
from .ris import (
    RisConfig,
    gradient_wrt_ris,
    pgm_step,
    project_unit_circle,
    quantize_phases,
    random_phases,
)
from .scheduler import ComputeAllocation, allocate_cpu
from .simulate import MetricsLog, SweepSpec, run_simulation, sample_arrivals, sweep_fig1, sweep_fig2

__all__ = [
    "ChannelTriple",
    "ComputeAllocation",
    "CovarianceResult",
    "DppDiagnostics",
    "LinkState",
    "MetricsLog",
    "NodeGeometry",
    "PrecoderInput",
    "QueueState",
    "RisConfig",
    "SlotDecision",
    "Strategy",
    "SweepSpec",
    "SystemConfig",
    "achievable_rate",
    "allocate_cpu",
    "average_delay",
    "compose_channel",
    "compose_channel_statistical",
    "dpp_diagnostics",
    "dpp_objective",
    "generate_geometry",
    "gradient_wrt_ris",
    "load_config",
    "lyapunov",
    "optimize_covariance",
    "optimize_slot",
    "pgm_step",
    "project_unit_circle",
    "quantize_phases",
    "random_phases",
    "run_simulation",
    "sample_arrivals",
    "sample_blocking",
    "sample_channel_triple",
    "sweep_fig1",
    "sweep_fig2",
    "update_local_queue",
    "update_remote_queue",
    "wf_objective",
]
