"""Simulator and closed-form calculator for N-photon W-state concentration
with linear-optics (post-selected) and cross-Kerr (QND) parity checks."""

from .analytic import ProbabilityTable, p_step_cpc, p_step_ppc, p_total_cpc, p_total_ppc
from .montecarlo import Estimate, TrialResult, estimate, sample_run
from .protocol import (
    AncillaSpec,
    ConcentrationReport,
    GateKind,
    StepRecord,
    ancilla_coeffs,
    apply_pivot,
    concentrate,
    cpc_run,
    ppc_run,
    run_step,
    select_pivot,
)
from .qstate import PureState, WCoefficients, max_w_fidelity, w_state

__version__ = "0.1.0"
