import itertools
import math

import numpy as np
import pytest

from data_models import GadgetSpec, SectorKey
from errors import Degenerate, DomainError
from exact_diag import (
    exact_delta_star, exact_tuning_values, fit_effective, quantum_crosscheck, reconstruction_residual, sector_hamiltonian,
    sector_keys, sector_spectra,
)
from settings import settings
from sw_engine import closed_form, tuning_values


def test_sector_keys_cover_all_code_states():
    keys = sector_keys((-1.0, 1.0))
    assert len(keys) == 32
    assert len(set(keys)) == 32


def test_decoupled_mediators():
    spectra = sector_spectra(GadgetSpec(), (0.0,))
    assert all(sp.ground_energy == pytest.approx(-1.5, abs=1e-14) for sp in spectra)
    assert all(sp.gap_to_excited == pytest.approx(1.0, abs=1e-14) for sp in spectra)


def test_epsilon_only_sector_energy():
    spec = GadgetSpec(epsilon=0.1)
    key = SectorKey(s_a=1, s_b=1, s_c=1, s_d=1, s=0.0)
    ground = np.linalg.eigvalsh(sector_hamiltonian(spec, key).matrix)[0]
    assert ground == pytest.approx(-1.5 - (math.sqrt(1 + 4 * spec.xi ** 2) - 1), abs=1e-12)


def test_opposite_signs_cancel_on_mediator():
    # s_a = -s_b leaves no field on f
    spec = GadgetSpec(epsilon=0.1)
    key = SectorKey(s_a=1, s_b=-1, s_c=1, s_d=-1, s=0.0)
    assert np.linalg.eigvalsh(sector_hamiltonian(spec, key).matrix)[0] == pytest.approx(-1.5, abs=1e-14)


def test_fit_without_couplings():
    report = fit_effective(GadgetSpec())
    assert report.coefficients.c_const == pytest.approx(-1.5, abs=1e-12)
    assert report.coefficients.c_wsx == pytest.approx(0.0, abs=1e-14)
    assert report.max_residual < 1e-12


def test_fit_matches_closed_form(small_gadget):
    report = fit_effective(small_gadget)
    expected = closed_form(small_gadget)
    assert report.coefficients.c_wsx == pytest.approx(expected.c_wsx, rel=0.05)
    assert report.coefficients.c_r == pytest.approx(expected.c_r, rel=10 * small_gadget.xi ** 2)
    assert report.asymmetry < 1e-12


def test_quadratic_fit_reported(small_gadget):
    report = fit_effective(small_gadget, (-1.0, -0.5, 0.0, 0.5, 1.0))
    assert set(report.quadratic_coefficients) == {"ss", "uss", "vss", "uvss"}


def test_linear_fit_only_for_two_values(small_gadget):
    report = fit_effective(small_gadget, (-0.5, 0.5))
    assert report.quadratic_coefficients == {}


def test_single_s_value_rejected(small_gadget):
    with pytest.raises(DomainError):
        fit_effective(small_gadget, (0.5, 0.5))


def test_unknown_precision(small_gadget):
    with pytest.raises(DomainError):
        sector_spectra(small_gadget, precision="quad")


def test_degenerate_sector(monkeypatch, small_gadget):
    monkeypatch.setattr(settings, "DEGENERACY_TOLERANCE", 10.0)
    with pytest.raises(Degenerate):
        fit_effective(small_gadget)


def test_reconstruction_residual(small_gadget):
    key = SectorKey(s_a=1, s_b=-1, s_c=-1, s_d=-1, s=0.7)
    assert reconstruction_residual(sector_hamiltonian(small_gadget, key).matrix) < 1e-10


def test_quantum_crosscheck(small_gadget):
    assert quantum_crosscheck(small_gadget) < 1e-10
    with pytest.raises(DomainError):
        quantum_crosscheck(small_gadget, spin=1.0)


def test_extended_precision_agrees_with_double(small_gadget):
    double = fit_effective(small_gadget, precision="double").coefficients
    extended = fit_effective(small_gadget, precision="extended").coefficients
    assert extended.c_r == pytest.approx(double.c_r, rel=1e-8)
    assert extended.c_const == pytest.approx(double.c_const, rel=1e-12)


@pytest.mark.parametrize("alpha, gamma", list(itertools.product((0.04, 0.02, 0.01), repeat=2)))
def test_closed_form_converges_as_couplings_shrink(alpha, gamma):
    epsilons = (0.04, 0.02, 0.01)
    deviations = []
    for eps in epsilons:
        spec = GadgetSpec(epsilon=eps, alpha=alpha, gamma=gamma)
        exact = fit_effective(spec, precision="extended").coefficients.c_wsx
        deviation = exact / closed_form(spec).c_wsx - 1
        assert abs(deviation) <= 10 * spec.xi ** 2 + 200 * alpha ** 2 + 10 * gamma ** 2
        deviations.append(deviation)
    # the epsilon-dependent part falls off as epsilon**2
    ratio = (deviations[0] - deviations[1]) / (deviations[1] - deviations[2])
    assert math.log2(ratio) == pytest.approx(2.0, abs=0.3)
    if alpha == gamma == 0.01:
        assert abs(deviations[-1]) <= 0.02


def test_bare_plaquette_coupling_from_mediator_interaction():
    eps, beta = 0.01, 1e-3
    spec = GadgetSpec(epsilon=eps, beta=beta)
    tuned = spec.updated(delta_pair=exact_delta_star(spec))
    coefficients = fit_effective(tuned).coefficients
    assert coefficients.c_w == pytest.approx(16 * beta * eps ** 4, rel=0.02)
    assert abs(coefficients.c_r) < 1e-2 * abs(coefficients.c_w)


def test_tuning_suppresses_pair_terms():
    spec = GadgetSpec(epsilon=0.02, alpha=0.01, gamma=0.01)
    values = exact_tuning_values(spec)
    untuned = fit_effective(spec).coefficients
    tuned = fit_effective(spec.updated(delta_pair=values.delta_star, tau=values.tau_star)).coefficients
    assert abs(untuned.c_r) >= 50 * abs(tuned.c_r)
    assert abs(untuned.c_rsx) >= 50 * abs(tuned.c_rsx)


def test_exact_tuning_refines_perturbative_tau():
    spec = GadgetSpec(epsilon=0.02, alpha=0.01, gamma=0.01)
    exact = exact_tuning_values(spec)
    perturbative = tuning_values(spec)
    assert exact.tau_star == pytest.approx(perturbative.tau_star, rel=0.3)
    assert exact.tau_star_leading == perturbative.tau_star_leading
    assert exact.delta_star == pytest.approx(exact_delta_star(spec.updated(tau=exact.tau_star)), rel=1e-12)


def test_exact_tuning_without_mediated_term():
    assert exact_tuning_values(GadgetSpec(epsilon=0.02, alpha=0.0, gamma=0.05)).tau_star == 0.0
