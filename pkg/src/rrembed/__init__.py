"""Single-emitter real-time dynamics in ensemble-dressed cavities.

The explicit emitter is propagated on a 1D grid while the remaining ensemble
is folded into the cavity Green function through a Dyson equation. The
dressed environment acts back on the emitter through a radiation-reaction
potential built from a real-time memory kernel.
"""

from .grid import (
    EigenSolution,
    Grid1D,
    ParticleSpec,
    Wavefunction,
    build_hamiltonian,
    dipole,
    side_populations,
    solve_eigenstates,
)
from .potentials import (
    DeltaKick,
    SampledPotential,
    SoftCoulomb,
    TiltedDoubleWell,
    evaluate,
    fast_deformation_variant,
)
from .environment import (
    CavitySpec,
    DrudeLorentz,
    GreenFunction,
    MemoryKernel,
    SpectralGrid,
    Tabulated,
    bare_green,
    chi_drude_lorentz,
    chi_from_polarizability,
    dress_green,
    kernel_from_green,
)
from .propagation import DipoleTrace, PropagationConfig, propagate, rr_field
from .hopfield import HopfieldSpec, bright_dark_reduce, build_arrowhead, polariton_weights
from .experiments import (
    EmitterSpec,
    ReactivitySettings,
    Scenario,
    SpectrumSettings,
    resonant_cavity,
    run_reactivity,
    run_spectrum,
    sweep,
)
from .config import RunConfig, parse_config

__version__ = "0.1.0"

__all__ = [
    "CavitySpec",
    "DeltaKick",
    "DipoleTrace",
    "DrudeLorentz",
    "EigenSolution",
    "EmitterSpec",
    "GreenFunction",
    "Grid1D",
    "HopfieldSpec",
    "MemoryKernel",
    "ParticleSpec",
    "PropagationConfig",
    "ReactivitySettings",
    "RunConfig",
    "SampledPotential",
    "Scenario",
    "SoftCoulomb",
    "SpectralGrid",
    "SpectrumSettings",
    "Tabulated",
    "TiltedDoubleWell",
    "Wavefunction",
    "bare_green",
    "bright_dark_reduce",
    "build_arrowhead",
    "build_hamiltonian",
    "chi_drude_lorentz",
    "chi_from_polarizability",
    "dipole",
    "dress_green",
    "evaluate",
    "fast_deformation_variant",
    "kernel_from_green",
    "parse_config",
    "polariton_weights",
    "propagate",
    "resonant_cavity",
    "rr_field",
    "run_reactivity",
    "run_spectrum",
    "side_populations",
    "solve_eigenstates",
    "sweep",
]
