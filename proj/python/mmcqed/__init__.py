"""Driven multimode Jaynes-Cummings simulator.

Frequencies are MHz (cycles), times are microseconds. System and campaign
configs are the same dicts as the JSON config files.
"""

import json

import numpy as np

from . import _mmcqed
from ._mmcqed import (
    AnalysisError,
    ConfigError,
    NonUniqueSteadyState,
    SolverError,
    SpaceMismatch,
    code_version,
    coupling_strength,
    emit_plotdata,
    manifold_dimension,
    preset_names,
    spearman,
)

__version__ = code_version()

__all__ = [
    "AnalysisError",
    "ConfigError",
    "NonUniqueSteadyState",
    "SolverError",
    "SpaceMismatch",
    "config_hash",
    "coupling_strength",
    "emission_spectrum",
    "emit_plotdata",
    "first_manifold",
    "fit_g0",
    "fit_linewidth",
    "manifold_dimension",
    "mcwf_steady",
    "preset",
    "preset_names",
    "run_campaign",
    "run_and_store",
    "spearman",
    "steady_state",
    "transmission",
    "validate",
]


def preset(name):
    return json.loads(_mmcqed.preset(name))


def validate(doc):
    """List of (field, message, is_warning); empty means clean."""
    return _mmcqed.validate(json.dumps(doc))


def config_hash(doc):
    return _mmcqed.config_hash(json.dumps(doc))


def steady_state(system, observables=("n_0", "sigma_z")):
    """Steady-state density matrix and {name: <O>}.

    Observable names: n_<mode>, a_<mode>, sigma_z, sigma_plus, sigma_minus, sigma_x.
    """
    rho, values = _mmcqed.steady_state(json.dumps(system), list(observables))
    return rho, dict(zip(observables, values))


def mcwf_steady(system, observables=("n_0",), walks=500, seed=1, t_end=15.0, dt=0.01, burn_in=5.0):
    """Trajectory time averages after burn_in: {name: (mean, standard error)}."""
    means, errors = _mmcqed.mcwf_steady(json.dumps(system), list(observables), walks, seed, t_end, dt, burn_in)
    return {k: (m, e) for k, m, e in zip(observables, means, errors)}


def emission_spectrum(system, source="a_0", tau_max=16.0, dt=2e-3):
    """Fluctuation spectrum of a_<mode> or sigma_minus, as (frequency MHz, psd) arrays."""
    f, s = _mmcqed.emission_spectrum(json.dumps(system), source, tau_max, dt)
    return np.asarray(f), np.asarray(s)


def fit_linewidth(frequency, psd, center, half_width):
    return _mmcqed.fit_linewidth(list(map(float, frequency)), list(map(float, psd)), center, half_width)


def first_manifold(couplings, mode_freqs, qubit_freq):
    """Eigenvalues and weights[component, state]; component 0 is the qubit."""
    e, w = _mmcqed.first_manifold(list(couplings), list(mode_freqs), qubit_freq)
    return np.asarray(e), np.asarray(w)


def transmission(modes, qubit_freqs, qubit_decay, probe):
    """Complex t[qubit point, probe point]; modes are (freq, kappa, g) tuples in MHz."""
    return np.asarray(_mmcqed.transmission([tuple(m) for m in modes], list(qubit_freqs), qubit_decay, list(probe)))


def fit_g0(qubit_freqs, peaks, mode_freqs, harmonics, guess):
    """(g0, one-sigma error, peaks used) from transmission peak positions."""
    return _mmcqed.fit_g0(list(qubit_freqs), [list(p) for p in peaks], list(mode_freqs), list(harmonics), guess)


def run_campaign(doc):
    """Run in memory. Tables come back as {column: list}."""
    out = _mmcqed.run_campaign(json.dumps(doc))
    out["config"] = json.loads(out["config"])
    out["metadata"] = json.loads(out["metadata"])
    return out


def run_and_store(doc, out_dir, policy="refuse"):
    """Run and write the result directory; policy is refuse, overwrite or reuse."""
    return _mmcqed.run_and_store(json.dumps(doc), str(out_dir), policy)
