"""Qubit-qubit coupling mediated by hyperbolic phonon-polariton resonators."""

from .material import (
    BandType,
    HyperbolicBand,
    LorentzAxis,
    LorentzOscillator,
    MaterialModel,
    UniaxialPermittivity,
    default_hbn,
    hyperbolic_bands,
    load_material,
    loss_scaled,
    permittivity_at,
    upper_band,
)
from .optics import (
    DipoleSource,
    FieldGrid,
    FieldSample,
    FocalStructure,
    dipole_field,
    emission_angle,
    field_map,
    tm_kperp,
    waveguide_foci,
)
from .resonator import (
    DesignWindow,
    HsrCouplingForms,
    PairResponse,
    ResonanceMap,
    ResonatorGeometry,
    bulk_axis_J12,
    coupling_J12_hsr,
    design_window,
    elliptic_correction,
    gamma_self,
    hsr_aspect,
    hsr_frequency,
    jc_coupling_g,
    pair_response,
    resonance_map,
)
from .dynamics import (
    ControlSchedule,
    CouplingMatrix,
    GateResult,
    QubitSpec,
    Segment,
    Trajectory,
    average_gate_fidelity,
    basis_state,
    build_hamiltonian,
    evolve,
    gamma_from_lifetime,
    iswap_gate,
    lindblad_rhs,
)

__version__ = "0.1.0"
