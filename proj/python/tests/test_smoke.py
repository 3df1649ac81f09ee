import math

import numpy as np
import pytest

import mmcqed


def tiny(rabi=4.0):
    return {
        "modes": [{"detuning_mhz": 3.0, "kappa_mhz": 1.0, "g_mhz": 2.0}],
        "qubit": {"detuning_mhz": 0.0, "gamma_mhz": 1.5},
        "drive": {"type": "qubit", "rabi_mhz": rabi},
        "cutoffs": [6],
    }


def test_version_and_presets():
    assert mmcqed.__version__
    assert "figS4" in mmcqed.preset_names()
    doc = mmcqed.preset("figS4")
    assert mmcqed.validate(doc) == [] or all(w for _, _, w in mmcqed.validate(doc))
    assert len(mmcqed.config_hash(doc)) == 16
    with pytest.raises(mmcqed.ConfigError):
        mmcqed.preset("nope")


def test_coupling_and_combinatorics():
    g = mmcqed.coupling_strength(3.75, 75)
    assert g == pytest.approx(3.75 * math.sqrt(76))
    assert mmcqed.manifold_dimension(2, 2) == 5


def test_steady_state():
    rho, values = mmcqed.steady_state(tiny(), ["n_0", "sigma_z"])
    assert rho.shape == (14, 14)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.allclose(rho, rho.conj().T)
    assert values["n_0"].real > 0
    assert -1.0 <= values["sigma_z"].real <= 1.0


def test_mcwf_agrees_with_kernel():
    _, exact = mmcqed.steady_state(tiny(), ["n_0"])
    mc = mmcqed.mcwf_steady(tiny(), ["n_0"], walks=200, seed=3, t_end=8.0, dt=0.02, burn_in=3.0)
    mean, err = mc["n_0"]
    assert abs(mean.real - exact["n_0"].real) < 4 * err + 1e-9


def test_bad_config_raises():
    bad = tiny()
    bad["modes"][0]["kappa_mhz"] = -1.0
    with pytest.raises(mmcqed.ConfigError):
        mmcqed.steady_state(bad)


def test_mollow_spectrum():
    system = {
        "modes": [{"detuning_mhz": 0.0, "kappa_mhz": 1.0, "g_mhz": 0.0}],
        "qubit": {"detuning_mhz": 0.0, "gamma_mhz": 1.0},
        "drive": {"type": "qubit", "rabi_mhz": 50.0},
        "cutoffs": [1],
    }
    f, s = mmcqed.emission_spectrum(system, "sigma_minus", tau_max=16.0, dt=2e-3)
    side = mmcqed.fit_linewidth(f, s, 50.0, 5.0)
    assert side["center"] == pytest.approx(50.0, abs=0.2)
    assert side["fwhm"] == pytest.approx(1.5, rel=0.05)


def test_linear_and_g0():
    freqs, harmonics = [0.0, 92.0, 184.0], [0, 1, 2]
    g = [mmcqed.coupling_strength(3.75, h) for h in harmonics]
    e, w = mmcqed.first_manifold(g, freqs, 0.0)
    assert len(e) == 4 and w.shape == (4, 4)
    assert np.allclose(w.sum(axis=0), 1.0)
    qubit = np.arange(-20.0, 21.0)
    peaks = [mmcqed.first_manifold(g, freqs, q)[0] for q in qubit]
    g0, _, used = mmcqed.fit_g0(qubit, peaks, freqs, harmonics, 3.0)
    assert g0 == pytest.approx(3.75, rel=1e-6)
    assert used > 2
    t = mmcqed.transmission([(0.0, 1.0, 0.0)], [40.0], 1.0, [-0.5, 0.0, 0.5])
    assert t.shape == (1, 3)
    assert abs(t[0, 1]) == pytest.approx(1.0, rel=1e-3)


def test_campaign(tmp_path):
    doc = {"schema_version": 1, "name": "tiny", "system": tiny()}
    out = mmcqed.run_campaign(doc)
    steady = out["tables"]["steady"]
    assert steady["converged"] == [1.0]
    assert out["failed_points"] == 0
    run_dir = mmcqed.run_and_store(doc, tmp_path)
    assert (run_dir / "steady.csv").exists()
    assert mmcqed.run_and_store(doc, tmp_path, "reuse") == run_dir
    with pytest.raises(mmcqed.ConfigError):
        mmcqed.run_and_store(doc, tmp_path)
    assert mmcqed.emit_plotdata(run_dir, "photon_number")
