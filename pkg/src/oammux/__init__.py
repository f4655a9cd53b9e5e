"""Desk-scale simulator for interferometric even/odd multiplexing of
orbital-angular-momentum light: state algebra, the two-port mode sorter,
beam-intensity rendering, and projective tomography with shot noise."""

__version__ = "0.1.0"

from .oam_state import (
    BasisSpec,
    DensityMatrix,
    Superposition,
    hilbert_hotel,
    incoherent_mix,
    make_superposition,
    parity_decompose,
    pure_density,
    purity,
)
from .duplexer import (
    ElementOp,
    ImperfectionModel,
    PortOutput,
    dark_port_ratio,
    dove_prism,
    duplex,
    parity_flip,
    rotate,
)
from .field_render import (
    GridField,
    GridSpec,
    angular_lobe_count,
    lg_mode,
    port_power,
    render_state,
    write_pgm,
)
from .tomography import (
    CountRecord,
    Projector,
    TomographyResult,
    fidelity,
    ideal_probability,
    project_physical,
    projector_set,
    reconstruct_linear,
    run_tomography,
    simulate_counts,
)
from .cli_runner import ScenarioConfig, parse_config, run_scenario

__all__ = [
    "__version__",
    "BasisSpec",
    "CountRecord",
    "DensityMatrix",
    "ElementOp",
    "GridField",
    "GridSpec",
    "ImperfectionModel",
    "PortOutput",
    "Projector",
    "ScenarioConfig",
    "Superposition",
    "TomographyResult",
    "angular_lobe_count",
    "dark_port_ratio",
    "dove_prism",
    "duplex",
    "fidelity",
    "hilbert_hotel",
    "ideal_probability",
    "incoherent_mix",
    "lg_mode",
    "make_superposition",
    "parity_decompose",
    "parity_flip",
    "parse_config",
    "port_power",
    "project_physical",
    "projector_set",
    "pure_density",
    "purity",
    "reconstruct_linear",
    "render_state",
    "rotate",
    "run_scenario",
    "run_tomography",
    "simulate_counts",
    "write_pgm",
]
