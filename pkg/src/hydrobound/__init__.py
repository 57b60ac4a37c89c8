"""Diffusivity bounds for translation-invariant open spin chains.

Modules: :mod:`pauli` (local Pauli algebra), :mod:`ksector` (momentum-sector
bases), :mod:`generator` (sparse Galerkin generator), :mod:`hydro` (D, tau),
:mod:`ring` (exact dynamics on small rings), :mod:`bound`, :mod:`config`,
:mod:`sweep` and :mod:`cli`.
"""
__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .generator import ModelSpec, Term, build, dephasing_only, xxz_dephasing  # noqa: E402
from .hydro import (decoherence_time, diffusivity_direct, diffusivity_resolvent,  # noqa: E402
                    diffusivity_time_integral, dispersion_direct, left_null_vector,
                    microscopic_diffusivity)
from .ksector import canonical_basis  # noqa: E402
from .pauli import LocalOperator, PauliString  # noqa: E402
from .bound import TransportReport, assemble_bound, interaction_range  # noqa: E402
from .config import RunConfig, parse_config  # noqa: E402

__all__ = [
    "ModelSpec", "Term", "build", "dephasing_only", "xxz_dephasing", "decoherence_time",
    "diffusivity_direct", "diffusivity_resolvent", "diffusivity_time_integral",
    "dispersion_direct", "left_null_vector", "microscopic_diffusivity", "canonical_basis",
    "LocalOperator", "PauliString", "TransportReport", "assemble_bound", "interaction_range",
    "RunConfig", "parse_config",
]
