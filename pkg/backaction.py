"""
Time-dependent ferromagnet response to the code's transverse field.
Discrete lattice sums, the Fresnel-integral continuum form and its asymptotic regimes.
"""

import logging
import math
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from data_models import BackactionRegime, CodeGeometry, FMParams, RefreshReport, TimeSeries
from errors import DomainError, GaplessDivergence
from settings import settings

logger = logging.getLogger(__name__)

ADJACENT_SITE = (0, 0, 1)


def fresnel(x):
    """(C(x), S(x)) with the pi t^2 / 2 convention; odd in x."""
    s, c = special.fresnel(x)
    return c, s


def fresnel_quadrature(x: float) -> Tuple[float, float]:
    """Adaptive-quadrature oracle for fresnel()."""
    c, _ = integrate.quad(lambda t: math.cos(math.pi * t * t / 2), 0.0, x, epsabs=1e-13, epsrel=1e-13, limit=200)
    s, _ = integrate.quad(lambda t: math.sin(math.pi * t * t / 2), 0.0, x, epsabs=1e-13, epsrel=1e-13, limit=200)
    return c, s


def _fresnel_antiderivative(x):
    """F with F' = C + S - 1 and F(inf) = 0."""
    c, s = fresnel(x)
    phase = np.pi * np.asarray(x) ** 2 / 2
    return x * (c + s - 1.0) + (np.cos(phase) - np.sin(phase)) / np.pi


def _diffusion_length(t: float, p: FMParams) -> float:
    return math.sqrt(4.0 * math.pi * p.J * p.S * t)


def _site(site: Sequence[float]) -> np.ndarray:
    site = np.asarray(site, dtype=float)
    if site.shape != (3,):
        raise DomainError(f"FM site must be a 3-vector, got {site.tolist()}")
    return site


def _distances(site: np.ndarray, code: np.ndarray) -> np.ndarray:
    code = np.asarray(code, dtype=float).reshape(-1, 2)
    return np.sqrt((site[0] - code[:, 0]) ** 2 + (site[1] - code[:, 1]) ** 2 + site[2] ** 2)


@lru_cache(maxsize=4)
def _gapped_dispersion(Lambda: int, J: float, S: float, h_z: float) -> np.ndarray:
    k = 2.0 * math.pi * np.fft.fftfreq(Lambda)
    cosines = np.cos(k)
    total = cosines[:, None, None] + cosines[None, :, None] + cosines[None, None, :]
    epsilon = 4.0 * J * S * (3.0 - total) + h_z
    epsilon.flags.writeable = False
    return epsilon


def sx_lattice_sum(site: Sequence[int], t: float, A: float, code: np.ndarray, p: FMParams) -> float:
    """(8SA/N_s) sum_p sum_k [cos(k.r_ip - eps_k t) - cos(k.r_ip)] / eps_k on the discrete zone.

    Plaquettes sit in the z = 0 plane; `site` is relative to the same origin.
    """
    if t < 0:
        raise DomainError(f"time must be non-negative, got {t}")
    if not p.h_z > 0:
        raise GaplessDivergence("the k = 0 term of the lattice sum needs h_z > 0")
    site = _site(site)
    if t == 0:
        return 0.0
    epsilon = _gapped_dispersion(p.Lambda, p.J, p.S, p.h_z)
    kernel = np.fft.ifftn(np.expm1(-1j * epsilon * t) / epsilon).real
    code = np.asarray(code).reshape(-1, 2)
    dx = (int(site[0]) - code[:, 0].astype(int)) % p.Lambda
    dy = (int(site[1]) - code[:, 1].astype(int)) % p.Lambda
    dz = int(site[2]) % p.Lambda
    return float(8.0 * p.S * A * np.sum(kernel[dx, dy, dz]))


def sx_fresnel(site: Sequence[float], t: float, A: float, geometry: CodeGeometry, p: FMParams) -> float:
    """(A / pi J) sum_p [C(u) + S(u) - 1] / r_ip with u = r_ip / sqrt(4 pi J S t).

    A continuum disk integrates the same kernel in closed form for a spin on its axis.
    """
    if not t > 0:
        raise DomainError(f"the continuum formula needs t > 0, got {t}")
    site = _site(site)
    sigma = _diffusion_length(t, p)
    prefactor = A / (math.pi * p.J)

    if geometry.continuum:
        if site[0] != 0 or site[1] != 0:
            raise DomainError("the continuum disk is evaluated for a spin on its axis")
        height = abs(site[2])
        upper = 0.0 if geometry.infinite else float(_fresnel_antiderivative(math.hypot(geometry.size, height) / sigma))
        lower = float(_fresnel_antiderivative(height / sigma))
        return prefactor * 2.0 * math.pi * sigma * (upper - lower)

    r = _distances(site, geometry.plaquettes())
    if np.any(r == 0):
        raise DomainError("FM site coincides with a plaquette; place it off the code plane")
    c, s = fresnel(r / sigma)
    return float(prefactor * np.sum((c + s - 1.0) / r))


def sx_long_time(site: Sequence[float], A: float, geometry: CodeGeometry, p: FMParams) -> float:
    """t -> infinity limit of sx_fresnel for a finite discrete code: -(A / pi J) sum_p 1 / r_ip."""
    r = _distances(_site(site), geometry.plaquettes())
    if np.any(r == 0):
        raise DomainError("FM site coincides with a plaquette; place it off the code plane")
    return float(-A / (math.pi * p.J) * np.sum(1.0 / r))


def sx_infinite_code(t: float, A: float, p: FMParams) -> float:
    """Diffusive growth -4A sqrt(S t / (pi J)) next to an infinite code."""
    if t < 0:
        raise DomainError(f"time must be non-negative, got {t}")
    return -4.0 * A * math.sqrt(p.S * t / (math.pi * p.J))


def sx_distance(t: float, d: float, A: float, p: FMParams) -> float:
    """Leading far-field response at distance d: (16A/d^2) sqrt(J S^3 t^3 / pi) [cos + sin](d^2 / 8JSt)."""
    if not d > 0 or not t > 0:
        raise DomainError(f"need d > 0 and t > 0, got d={d}, t={t}")
    phase = d ** 2 / (8.0 * p.J * p.S * t)
    return 16.0 * A / d ** 2 * math.sqrt(p.J * p.S ** 3 * t ** 3 / math.pi) * (math.cos(phase) + math.sin(phase))


def refresh_time(A: float, p: FMParams) -> RefreshReport:
    """Time at which the infinite-code response reaches |<S^x>| = S: pi J S / (16 A^2)."""
    if not A > 0:
        raise DomainError(f"refresh time needs A > 0, got {A}")
    t_r = math.pi * p.J * p.S / (16.0 * A ** 2)
    return RefreshReport(t_r=t_r, order_of_magnitude=p.J * p.S / A ** 2)


def backaction_series(regime: BackactionRegime, times: Sequence[float], A: float, p: FMParams,
                      geometry: Optional[CodeGeometry] = None, site: Sequence[float] = ADJACENT_SITE) -> TimeSeries:
    """<S^x_i(t)> over `times` for one regime; points with |value| > S are flagged invalid."""
    times = [float(t) for t in times]
    if not times:
        raise DomainError("backaction series needs at least one time")
    geometry = geometry or CodeGeometry()
    meta = {"regime": regime.value, "A": A, "site": list(site), "geometry": geometry.model_dump(mode="json")}

    if regime == BackactionRegime.LATTICE:
        if p.h_z == 0:
            p = p.model_copy(update={"h_z": settings.BACKACTION_HZ_REGULATOR})
            logger.debug(f"Regulating the lattice sum with h_z={p.h_z}")
        code = geometry.plaquettes()
        values = [sx_lattice_sum(site, t, A, code, p) for t in times]
        meta["h_z"] = p.h_z
        meta["Lambda"] = p.Lambda
    elif regime == BackactionRegime.FRESNEL:
        values = [sx_fresnel(site, t, A, geometry, p) if t > 0 else 0.0 for t in times]
    elif regime == BackactionRegime.ASYMPTOTIC:
        height = abs(float(site[2]))
        if geometry.infinite and height <= 1:
            values = [sx_infinite_code(t, A, p) for t in times]
            meta["form"] = "diffusive"
        elif geometry.infinite:
            values = [sx_distance(t, height, A, p) if t > 0 else 0.0 for t in times]
            meta["form"] = "far_field"
        else:
            values = [sx_long_time(site, A, geometry, p)] * len(times)
            meta["form"] = "long_time"
    else:
        raise DomainError(f"unknown regime {regime!r}")

    valid = [abs(v) <= p.S for v in values]
    flagged = len(valid) - sum(valid)
    if flagged:
        logger.warning(f"{flagged} of {len(valid)} points exceed the one-magnon bound |<S^x>| <= S")
    return TimeSeries(times=times, values=values, valid=valid, meta=meta)
