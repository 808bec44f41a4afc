"""Numerical laboratory for the cubic heat equation u_t = Lap u + u^3 on a torus."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    CubicHeatError,
    InsufficientSamples,
    InternalInconsistency,
    NumericalFailure,
)
from .field import Grid, RealField, SpectralField, cube_dealiased, dft_forward, dft_inverse, lp_norm
from .littlewood_paley import BesovParams, DyadicPartition, besov_norm, besov_report, build_partition, lp_block
from .solver import SolveOutcome, SolverConfig, etd_step, heat_propagate, solve, weissler_trace
from .picard import TimeGrid, PicardTrace, beta_constant, eta_threshold, gamma_trilinear, picard_iterate
from .certifier import (
    BlowupCertificate,
    RecursionParams,
    a_min,
    c_delta,
    certify,
    certify_theorem33,
    log_alpha_k,
    t_k,
    tau_N,
    verify_induction_step,
)
from .data import BumpSpec, OscillatingDatumSpec, build_bump, build_u0N, gaussian, scale_datum
