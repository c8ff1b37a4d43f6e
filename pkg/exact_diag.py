"""
Exact-diagonalization oracle for the single-plaquette gadget.
Code qubits are conserved, so the problem splits into 8x8 mediator blocks per sector and FM value.
"""

import itertools
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from mpmath import mp
from scipy import optimize

from data_models import EffectiveCoefficients, FitReport, GadgetSpec, SectorKey, SectorSpectrum, TuningValues
from errors import Degenerate, DomainError
from pauli_core import DenseOperator, quantize_symbol, substitute_letters, substitute_symbol, to_dense
from settings import settings
from sw_engine import gadget_hamiltonian, tuning_values

logger = logging.getLogger(__name__)

DEFAULT_S_VALUES = (-1.0, -0.5, 0.0, 0.5, 1.0)

_LINEAR_BASIS = ("1", "u", "v", "uv", "s", "us", "vs", "uvs")
_QUADRATIC_BASIS = ("ss", "uss", "vss", "uvss")


def sector_keys(s_values: Sequence[float]) -> List[SectorKey]:
    """All 16 code sectors for every s, in a fixed order."""
    return [
        SectorKey(s_a=sa, s_b=sb, s_c=sc, s_d=sd, s=s)
        for s in s_values
        for sa, sb, sc, sd in itertools.product((1, -1), repeat=4)
    ]


def sector_hamiltonian(spec: GadgetSpec, key: SectorKey) -> DenseOperator:
    """8x8 mediator Hamiltonian with code letters and S_p^x replaced by numbers."""
    s = spec.sites
    h = gadget_hamiltonian(spec)
    eigenvalues = {s.a: key.s_a, s.b: key.s_b, s.c: key.s_c, s.d: key.s_d}
    h = substitute_letters(h, eigenvalues, spec.code_letter)
    h = substitute_symbol(h, s.p, key.s)
    return to_dense(h, s.mediators)


def reconstruction_residual(matrix: np.ndarray) -> float:
    """max |V diag(E) V^dagger - M| relative to ||M||."""
    evals, evecs = np.linalg.eigh(matrix)
    rebuilt = (evecs * evals) @ evecs.conj().T
    norm = np.linalg.norm(matrix)
    return float(np.max(np.abs(rebuilt - matrix)) / norm) if norm else 0.0


def _lowest_two_extended(matrix: np.ndarray, shift: float, dps: int) -> Tuple[float, float]:
    with mp.workdps(dps):
        if np.any(matrix.imag):
            m = mp.matrix([[mp.mpc(x.real, x.imag) for x in row] for row in matrix])
            evals = mp.eighe(m, eigvals_only=True)
        else:
            m = mp.matrix(matrix.real.tolist())
            evals = mp.eigsy(m, eigvals_only=True)
        ordered = sorted(evals[i] for i in range(evals.rows))
        return float(ordered[0] - mp.mpf(shift)), float(ordered[1] - ordered[0])


def sector_spectra(spec: GadgetSpec, s_values: Sequence[float] = DEFAULT_S_VALUES,
                   precision: str = "double", shift: float = 0.0) -> List[SectorSpectrum]:
    """Ground energy (minus `shift`) and gap for every sector, in sector_keys order."""
    keys = sector_keys(s_values)
    stack = np.stack([sector_hamiltonian(spec, key).matrix for key in keys])
    spectra: List[SectorSpectrum] = []
    if precision == "double":
        evals = np.linalg.eigvalsh(stack)
        for key, levels in zip(keys, evals):
            spectra.append(SectorSpectrum(key=key, ground_energy=float(levels[0] - shift),
                                          gap_to_excited=float(levels[1] - levels[0])))
    elif precision == "extended":
        for key, matrix in zip(keys, stack):
            ground, gap = _lowest_two_extended(matrix, shift, settings.EIGEN_PRECISION_DPS)
            spectra.append(SectorSpectrum(key=key, ground_energy=ground, gap_to_excited=gap))
    else:
        raise DomainError(f"precision must be 'double' or 'extended', got {precision!r}")
    logger.debug(f"Diagonalized {len(keys)} sector blocks ({precision})")
    return spectra


def _design_row(key: SectorKey, quadratic: bool) -> List[float]:
    u, v, s = key.u, key.v, key.s
    row = [1.0, u, v, u * v, s, u * s, v * s, u * v * s]
    if quadratic:
        row += [s * s, u * s * s, v * s * s, u * v * s * s]
    return row


def fit_effective(spec: GadgetSpec, s_values: Sequence[float] = DEFAULT_S_VALUES,
                  precision: str = "double") -> FitReport:
    """Least-squares fit of the sector ground energies onto {1,u,v,uv} x {1,s}."""
    distinct = sorted(set(float(s) for s in s_values))
    if len(distinct) < 2:
        raise DomainError(f"need at least two distinct s values, got {list(s_values)}")

    # fit relative to the unperturbed ground energy to keep digits in extended mode
    reference = -1.5 * spec.delta
    spectra = sector_spectra(spec, distinct, precision, shift=reference)
    for spectrum in spectra:
        if spectrum.gap_to_excited < settings.DEGENERACY_TOLERANCE:
            raise Degenerate(f"sector {spectrum.key.model_dump()} has gap {spectrum.gap_to_excited:.3e}")

    energies = np.array([sp.ground_energy for sp in spectra])
    design = np.array([_design_row(sp.key, False) for sp in spectra])
    solution, *_ = np.linalg.lstsq(design, energies, rcond=None)
    fitted = dict(zip(_LINEAR_BASIS, solution))
    residual = float(np.max(np.abs(design @ solution - energies)))

    quadratic_coefficients: Dict[str, float] = {}
    quadratic_residual = 0.0
    if len(distinct) >= 3:
        extended = np.array([_design_row(sp.key, True) for sp in spectra])
        ext_solution, *_ = np.linalg.lstsq(extended, energies, rcond=None)
        quadratic_coefficients = {name: float(c) for name, c in zip(_QUADRATIC_BASIS, ext_solution[8:])}
        quadratic_residual = float(np.max(np.abs(extended @ ext_solution - energies)))

    coefficients = EffectiveCoefficients(
        c_const=float(fitted["1"] + reference),
        c_sx=float(fitted["s"]),
        c_r=float(0.5 * (fitted["u"] + fitted["v"])),
        c_rsx=float(0.5 * (fitted["us"] + fitted["vs"])),
        c_w=float(fitted["uv"]),
        c_wsx=float(fitted["uvs"]),
    )
    asymmetry = float(max(abs(fitted["u"] - fitted["v"]), abs(fitted["us"] - fitted["vs"])))
    logger.info(f"Exact fit: c_wsx={coefficients.c_wsx:.6e}, residual={residual:.2e}, asymmetry={asymmetry:.2e}")
    return FitReport(
        coefficients=coefficients,
        max_residual=residual,
        asymmetry=asymmetry,
        quadratic_coefficients=quadratic_coefficients,
        quadratic_residual=quadratic_residual,
    )


def exact_delta_star(spec: GadgetSpec, s_values: Sequence[float] = DEFAULT_S_VALUES,
                     precision: str = "double") -> float:
    """delta_pair zeroing the fitted c_r; delta_pair shifts c_r with unit slope."""
    return spec.delta_pair - fit_effective(spec, s_values, precision).coefficients.c_r


def exact_tuning_values(spec: GadgetSpec, s_values: Sequence[float] = DEFAULT_S_VALUES,
                        precision: str = "double") -> TuningValues:
    """
    delta_pair and tau zeroing the fitted c_r and c_rsx.
    Starts from the perturbative values and refines tau by a secant search on the exact fit.
    """
    start = tuning_values(spec)

    def c_rsx(tau: float) -> float:
        return fit_effective(spec.updated(tau=tau), s_values, precision).coefficients.c_rsx

    # c_rsx vanishes identically without both alpha and gamma
    if start.tau_star == 0.0:
        tau_star = 0.0
    else:
        x0 = start.tau_star
        tau_star = float(optimize.newton(c_rsx, x0, x1=1.01 * x0, tol=1e-10 * abs(x0), maxiter=20))
    delta_star = exact_delta_star(spec.updated(tau=tau_star), s_values, precision)
    values = start.model_copy(update={"delta_star": delta_star, "tau_star": tau_star})
    logger.info(f"Exact tuning: delta*={delta_star:.6e} (SW {start.delta_star:.6e}), "
                f"tau*={tau_star:.6e} (SW {start.tau_star:.6e})")
    return values


def quantum_crosscheck(spec: GadgetSpec, spin: float = 0.5) -> float:
    """Max deviation between the 32 lowest levels of the full gadget+FM qubit and the sector grounds."""
    if spin != 0.5:
        raise DomainError("the quantum cross-check models the FM spin as a single spin-1/2")
    s = spec.sites
    h = quantize_symbol(gadget_hamiltonian(spec), s.p, "X", scale=spin)
    order = s.code + s.mediators + (s.p,)
    full = to_dense(h, order).matrix
    levels = np.linalg.eigvalsh(full)[:32]
    grounds = sorted(sp.ground_energy for sp in sector_spectra(spec, (-spin, spin)))
    deviation = float(np.max(np.abs(np.sort(levels) - np.array(grounds))))
    logger.info(f"Quantum cross-check on {full.shape[0]} states: max deviation {deviation:.2e}")
    return deviation
