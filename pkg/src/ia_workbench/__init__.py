"""Verification workbench for interference alignment in MIMO X networks."""

__version__ = "0.1.0"

from .network import (
    ExtendedChannels,
    NetworkConfig,
    SpatialChannels,
    decompose_transmitters,
    draw_extended_channels,
    draw_spatial_channels,
    reciprocal,
)
from .cj_alignment import (
    BeamBasis,
    MonomialBasis,
    build_beam_basis,
    build_interference_basis,
    enumerate_monomials,
    interference_channel_labels,
    verify_alignment,
)
from .separability import (
    assemble_F,
    choose_extension_length,
    rank_certificate,
    step1_specialization_check,
    step2_induction_trace,
)
from .dof import (
    achieved_fraction,
    dof_report,
    mimo_x_dof,
    outer_bound_simo,
    scale_invariance_check,
)
from .feasibility import (
    DofDemand,
    check_rank_conditions,
    count_equations,
    count_variables,
    properness,
    solve_spatial_ia,
    symmetric_bound,
)
