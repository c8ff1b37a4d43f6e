"""
Anyon energetics and bath diagnostics for the magnon-coupled code.
Chemical potential from the plaquette couplings, thermal energy, spin-boson rates and adiabaticity.
"""

import logging
import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import expit

from data_models import AdiabaticityReport, CouplingMatrix, FMParams, LongitudinalPotential, NoiseParams
from errors import DomainError
from magnon_fields import chi_zz_r, coupling_matrix
from settings import settings

logger = logging.getLogger(__name__)


def chemical_potential(cm: CouplingMatrix, p_index: int) -> float:
    """Energy to invert plaquette `p_index`: sum over p' != p of 2|J_pp'|."""
    if not 0 <= p_index < cm.size:
        raise DomainError(f"plaquette index {p_index} outside 0..{cm.size - 1}")
    return float(2.0 * np.sum(np.abs(cm.values[p_index])))


def central_index(cm: CouplingMatrix) -> int:
    centroid = cm.positions.mean(axis=0)
    return int(np.argmin(np.linalg.norm(cm.positions - centroid, axis=1)))


def mu_scaling(L_values: Sequence[int], A: float, p: FMParams) -> Tuple[pd.DataFrame, Dict[str, float]]:
    """mu(L) at the central plaquette and a linear fit mu = slope * L + intercept."""
    rows = []
    for L in L_values:
        cm = coupling_matrix(A, L, p)
        mu = chemical_potential(cm, central_index(cm))
        rows.append({"L": L, "mu": mu, "continuum_estimate": A ** 2 * p.M ** 2 * L / (2.0 * p.rho)})
        logger.debug(f"mu(L={L}) = {mu:.6e}")
    table = pd.DataFrame(rows)

    fit = {"slope": math.nan, "intercept": math.nan, "relative_residual": math.nan}
    if len(table) >= 2:
        slope, intercept = np.polyfit(table["L"], table["mu"], 1)
        predicted = slope * table["L"] + intercept
        fit = {
            "slope": float(slope),
            "intercept": float(intercept),
            "relative_residual": float(np.max(np.abs(predicted - table["mu"]) / table["mu"])),
        }
        logger.info(f"mu(L) slope {slope:.4e}, relative residual {fit['relative_residual']:.2e}")
    return table, fit


def thermal_energy(L: int, mu: float, beta: float) -> float:
    """L^2 mu / (exp(beta mu) + 1)."""
    if mu < 0:
        raise DomainError(f"chemical potential must be non-negative, got {mu}")
    return float(L ** 2 * mu * expit(-beta * mu))


def thermal_energy_table(L_values: Sequence[int], mu_values: Sequence[float], betas: Sequence[float]) -> pd.DataFrame:
    rows = [
        {"L": L, "mu": mu, "beta": beta, "thermal_energy": thermal_energy(L, mu, beta)}
        for beta in betas
        for L, mu in zip(L_values, mu_values)
    ]
    return pd.DataFrame(rows)


def error_rate(omega, noise: NoiseParams):
    """Spin-boson rate kappa_n |omega^n / (1 - exp(-beta omega))| exp(-omega / omega_c).

    omega < 0 is energy absorbed from the code. The removable point omega = 0
    takes its limit: kappa_1 / beta for an Ohmic bath, 0 otherwise.
    """
    omega = np.asarray(omega, dtype=float)
    limit = noise.kappa_n / noise.beta if noise.n == 1 else 0.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = omega ** noise.n / (-np.expm1(-noise.beta * omega))
        value = noise.kappa_n * np.abs(ratio) * np.exp(-omega / noise.omega_c)
    value = np.where(omega == 0, limit, value)
    return float(value) if value.ndim == 0 else value


def rate_table(omegas: Sequence[float], noise: NoiseParams) -> pd.DataFrame:
    omegas = np.asarray(omegas, dtype=float)
    return pd.DataFrame({"omega": omegas, "rate": error_rate(omegas, noise)})


def adiabaticity_margin(A: float, noise: NoiseParams, threshold: Optional[float] = None) -> AdiabaticityReport:
    """gamma(-A) / A, satisfied below the configured threshold."""
    if A <= 0:
        raise DomainError(f"adiabaticity needs A > 0, got {A}")
    threshold = settings.ADIABATICITY_THRESHOLD if threshold is None else threshold
    ratio = float(error_rate(-A, noise)) / A
    if ratio >= threshold:
        logger.warning(f"Adiabaticity violated: gamma(-A)/A = {ratio:.3e} >= {threshold}")
    return AdiabaticityReport(ratio=ratio, threshold=threshold, satisfied=ratio < threshold)


def _centered_grid(L: int) -> np.ndarray:
    axis = np.arange(L) - L // 2
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    return np.stack([xx.ravel(), yy.ravel()], axis=1).astype(float)


def _inverse_square_sum(L: int) -> float:
    r2 = np.sum(_centered_grid(L) ** 2, axis=1)
    return float(np.sum(1.0 / r2[r2 > 0]))


def longitudinal_log_coefficient(L: int) -> float:
    """Lattice estimate of c in mu = c A^2 T / D^2 ln(L/2); tends to 1/(4 pi)."""
    annulus = _inverse_square_sum(L) - _inverse_square_sum(L // 2)
    return annulus / (8.0 * math.pi ** 2 * math.log(2.0))


def longitudinal_mu(L: int, T: float, D: float, A: float, spin: float = 0.5,
                    include_zeeman_offset: Optional[bool] = None) -> LongitudinalPotential:
    """Anyon potential from the chi_zz-mediated pair sum over the code, plus the optional 2SA Zeeman offset."""
    if L < 4:
        raise DomainError(f"longitudinal potential needs L >= 4, got {L}")
    if D <= 0:
        raise DomainError(f"spin stiffness D must be positive, got {D}")
    if T < 0:
        raise DomainError(f"temperature must be non-negative, got {T}")
    if include_zeeman_offset is None:
        include_zeeman_offset = settings.INCLUDE_ZEEMAN_OFFSET
    p = FMParams(J=D / (2.0 * spin), S=spin, T=T)
    r = np.sqrt(np.sum(_centered_grid(L) ** 2, axis=1))
    mu = float(2.0 * A ** 2 * np.sum(chi_zz_r(r[r > 0], p)))
    c = longitudinal_log_coefficient(L)
    offset = 2.0 * spin * A if include_zeeman_offset else 0.0
    logger.debug(f"Longitudinal mu(L={L}) = {mu:.4e}, log coefficient {c:.5f}")
    return LongitudinalPotential(mu=mu, log_coefficient=c, zeeman_offset=offset)
