"""Single-excitation Lindblad dynamics for pigment networks.

Computes quantum yield and entanglement yield (pairwise tangles averaged
over the trapping waiting-time distribution), with spatial partitioning of
the entanglement into named pair groups.
"""

from importlib.resources import files

from .bessel import bessel_j0
from .generators import (
    EigenSystem,
    JumpChannel,
    Liouvillian,
    PositivityError,
    assemble_liouvillian,
    build_liouvillian,
    build_loss_generator,
    build_pure_dephasing_generator,
    build_secular_generator,
    diagonalize_single_excitation,
)
from .model import (
    BathSpec,
    SiteNetwork,
    ValidationError,
    bath_rate,
    build_hamiltonian,
    correlation_matrix,
    load_bath,
    load_network,
    spatial_correlation,
    spectral_density,
    thermal_occupation,
)
from .observables import (
    PairPartition,
    YieldReport,
    compute_yield_report,
    entanglement_yield,
    load_partition,
    monogamy_check,
    pair_tangle,
    partitioned_entanglement,
    quantum_yield,
    quantum_yield_exact,
    total_entanglement,
    trapping_density,
)
from .propagator import (
    IntegrationError,
    Trajectory,
    evolve,
    integrated_state,
    localized_state,
)
from .sweep import SweepConfig, crossing_finder, run_sweep, run_time_trace

__version__ = "0.1.0"


def data_file(name):
    """Absolute path of a bundled data file, e.g. data_file('fmo_network.json')."""
    return str(files("excitonsim").joinpath("data", name))
