"""
Magnon dispersion, static susceptibilities and the mediated plaquette couplings.
Closed forms are paired with Brillouin-zone lattice sums evaluated by FFT.
"""

import itertools
import logging
import math
from functools import lru_cache
from typing import Sequence

import numpy as np
import pandas as pd

from data_models import CouplingMatrix, FMParams
from errors import DomainError, GaplessDivergence

logger = logging.getLogger(__name__)


def dispersion(k, p: FMParams, gapped: bool = False):
    """omega_k = 4JS[3 - sum cos k_i]; plus h_z when gapped. k has shape (..., 3)."""
    k = np.asarray(k, dtype=float)
    omega = 4.0 * p.J * p.S * (3.0 - np.cos(k).sum(axis=-1))
    if gapped:
        omega = omega + p.h_z
    return omega


def chi_xx_q(q, p: FMParams):
    """Transverse static susceptibility M^2 / (rho q^2 + S h_z)."""
    q2 = np.sum(np.asarray(q, dtype=float) ** 2, axis=-1)
    denominator = p.rho * q2 + p.S * p.h_z
    with np.errstate(divide="ignore"):
        value = p.M ** 2 / denominator
    if np.any(denominator == 0):
        logger.debug("chi_xx(q) is infinite at q = 0 without a symmetry-breaking field")
    return value


def magnetic_length(p: FMParams) -> float:
    if not p.h_z > 0:
        raise DomainError(f"magnetic length needs h_z > 0, got {p.h_z}")
    return math.sqrt(p.rho / (p.S * p.h_z))


def _screening_length(p: FMParams) -> float:
    return magnetic_length(p) if p.h_z > 0 else math.inf


def chi_xx_r(r, p: FMParams):
    """Real-space Yukawa form (M^2/rho) exp(-r/L_h) / (4 pi r); 1/(8 pi J r) at one-magnon order."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("chi_xx(r) needs r > 0")
    value = (p.M ** 2 / p.rho) * np.exp(-r / _screening_length(p)) / (4.0 * math.pi * r)
    return float(value) if value.ndim == 0 else value


@lru_cache(maxsize=8)
def _lattice_field(Lambda: int, J: float, S: float, h_z: float) -> np.ndarray:
    k = 2.0 * math.pi * np.fft.fftfreq(Lambda)
    cosines = np.cos(k)
    total = cosines[:, None, None] + cosines[None, :, None] + cosines[None, None, :]
    epsilon = 4.0 * J * S * (3.0 - total) + h_z
    field = np.fft.ifftn(S / epsilon).real
    field.flags.writeable = False
    logger.debug(f"Lattice chi_xx field on {Lambda}^3 sites (h_z={h_z})")
    return field


def chi_xx_lattice_field(p: FMParams) -> np.ndarray:
    """(1/N) sum_k S/eps_k e^{ik.r} for every lattice vector r, indexed [x, y, z]."""
    if not p.h_z > 0:
        raise GaplessDivergence("the k = 0 term of the lattice sum needs h_z > 0")
    return _lattice_field(p.Lambda, p.J, p.S, p.h_z)


def chi_xx_r_lattice(r_vec: Sequence[int], p: FMParams) -> float:
    index = tuple(int(c) for c in r_vec)
    if len(index) != 3 or any(not 0 <= c < p.Lambda for c in index):
        raise DomainError(f"lattice vector {tuple(r_vec)} outside [0, {p.Lambda})^3")
    return float(chi_xx_lattice_field(p)[index])


def chi_xx_r_periodic(r_vec: Sequence[float], p: FMParams, images: int = 4) -> float:
    """Continuum Yukawa form summed over the periodic images of the Lambda^3 box."""
    r_vec = np.asarray(r_vec, dtype=float)
    shifts = np.array(list(itertools.product(range(-images, images + 1), repeat=3)), dtype=float)
    distances = np.linalg.norm(r_vec[None, :] + p.Lambda * shifts, axis=1)
    if np.any(distances == 0):
        raise DomainError("periodic continuum reference is singular at r = 0")
    return float(np.sum(chi_xx_r(distances, p)))


def lattice_deviation_table(p: FMParams, r_values: Sequence[int], images: int = 4) -> pd.DataFrame:
    """chi_xx along (r, 0, 0): continuum, image-summed continuum and lattice sum."""
    rows = []
    for r in r_values:
        lattice = chi_xx_r_lattice((r % p.Lambda, 0, 0), p)
        continuum = chi_xx_r(float(r), p)
        periodic = chi_xx_r_periodic((float(r), 0.0, 0.0), p, images)
        rows.append({
            "r": r,
            "chi_continuum": continuum,
            "chi_periodic": periodic,
            "chi_lattice": lattice,
            "deviation_bare": abs(lattice - continuum) / continuum,
            "deviation_periodic": abs(lattice - periodic) / periodic,
        })
    return pd.DataFrame(rows)


def plaquette_positions(L: int) -> np.ndarray:
    axis = np.arange(L, dtype=float)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    return np.stack([xx.ravel(), yy.ravel()], axis=1)


def coupling_matrix(A: float, L: int, p: FMParams) -> CouplingMatrix:
    """J_pp' = -A^2 chi_xx(|R_p - R_p'|) on an L x L plaquette grid."""
    if L < 1:
        raise DomainError(f"code size must be positive, got {L}")
    if A == 0:
        raise DomainError("coupling A must be non-zero for an anyon interaction")
    positions = plaquette_positions(L)
    diff = positions[:, None, :] - positions[None, :, :]
    distance = np.hypot(diff[..., 0], diff[..., 1])
    values = np.zeros_like(distance)
    off = distance > 0
    values[off] = -A ** 2 * (p.M ** 2 / p.rho) * np.exp(-distance[off] / _screening_length(p)) / (4.0 * math.pi * distance[off])
    underflow = int(np.count_nonzero(values[off] == 0.0))
    if underflow:
        logger.warning(f"{underflow} couplings underflowed to zero (L={L}, L_h={_screening_length(p):.3g})")
    logger.debug(f"Coupling matrix for L={L}, A={A}: nearest neighbor {values[0, 1] if L > 1 else 0.0:.4e}")
    return CouplingMatrix(positions=positions, values=values)


def chi_zz_q(q, p: FMParams) -> float:
    """Longitudinal static susceptibility T / (8 D^2 |q|) at small q."""
    q_abs = float(np.linalg.norm(np.asarray(q, dtype=float)))
    if q_abs == 0:
        raise DomainError("chi_zz(q) is undefined at q = 0")
    stiffness_energy = p.D * q_abs ** 2
    if not p.h_z <= stiffness_energy <= p.T:
        logger.warning(f"chi_zz outside its window h_z << D q^2 << T: h_z={p.h_z}, D q^2={stiffness_energy:.4g}, T={p.T}")
    return p.T / (8.0 * p.D ** 2 * q_abs)


def chi_zz_r(r, p: FMParams):
    """Fourier transform of chi_zz(q): T / (16 pi^2 D^2 r^2)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("chi_zz(r) needs r > 0")
    return p.T / (16.0 * math.pi ** 2 * p.D ** 2 * r ** 2)


def gap_shift(A: float, L: int, p: FMParams) -> float:
    """Magnon gap increase A L^2 / Lambda^3 from the longitudinal coupling."""
    return A * L ** 2 / p.Lambda ** 3
