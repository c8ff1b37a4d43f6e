"""
Classical Heisenberg ferromagnet with the code-plane transverse forcing, sampled by Metropolis.
Two-color checkerboard sweeps run as numba kernels; random numbers come from a seeded PCG64 stream.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from numba import njit, prange
from numba.core.errors import NumbaError

from data_models import CodeCoupling, FMParams, Fig4Row, MCConfig, MCMeasurement, ScalingPreset
from errors import DomainError, ResourceCap
from settings import settings

logger = logging.getLogger(__name__)

TARGET_ACCEPTANCE = 0.5
MIN_CONE_ANGLE = 1e-3


class SpinLattice:
    """Lambda^3 classical unit spins with periodic boundaries, stored as (x, y, z, component)."""

    def __init__(self, spins: np.ndarray):
        if spins.ndim != 4 or spins.shape[3] != 3 or len(set(spins.shape[:3])) != 1:
            raise DomainError(f"spins must have shape (L, L, L, 3), got {spins.shape}")
        if spins.shape[0] % 2:
            raise DomainError(f"checkerboard sweeps need an even lattice, got Lambda={spins.shape[0]}")
        self.spins = np.ascontiguousarray(spins, dtype=np.float64)
        self.renormalize()

    @classmethod
    def saturated(cls, Lambda: int, direction: Sequence[float] = (0.0, 0.0, -1.0)) -> "SpinLattice":
        spins = np.empty((Lambda, Lambda, Lambda, 3))
        spins[...] = np.asarray(direction, dtype=float)
        return cls(spins)

    @classmethod
    def random(cls, Lambda: int, rng: np.random.Generator) -> "SpinLattice":
        return cls(rng.normal(size=(Lambda, Lambda, Lambda, 3)))

    @property
    def Lambda(self) -> int:
        return self.spins.shape[0]

    def renormalize(self) -> None:
        self.spins /= np.linalg.norm(self.spins, axis=-1, keepdims=True)

    def norm_error(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.spins, axis=-1) - 1.0)))

    def magnetization(self) -> np.ndarray:
        return self.spins.reshape(-1, 3).mean(axis=0)

    def copy(self) -> "SpinLattice":
        return SpinLattice(self.spins.copy())


def code_center(Lambda: int, code: CodeCoupling) -> Tuple[int, int, int]:
    return Lambda // 2, Lambda // 2, code.plane_z % Lambda


def code_field(Lambda: int, code: CodeCoupling) -> np.ndarray:
    """A on the L x L code sites of the code plane, 0 elsewhere."""
    if code.L > Lambda:
        raise DomainError(f"code size L={code.L} exceeds Lambda={Lambda}")
    cx, cy, cz = code_center(Lambda, code)
    field = np.zeros((Lambda, Lambda, Lambda))
    start_x, start_y = cx - code.L // 2, cy - code.L // 2
    field[start_x:start_x + code.L, start_y:start_y + code.L, cz] = code.A
    return field


def energy(lat: SpinLattice, cfg: MCConfig, p: FMParams) -> float:
    """-J sum_<ij> S_i.S_j + h_z sum S^z + A sum_code S^x."""
    spins = lat.spins
    bonds = sum(float(np.sum(spins * np.roll(spins, -1, axis=axis))) for axis in range(3))
    zeeman = p.h_z * float(np.sum(spins[..., 2]))
    forcing = float(np.sum(code_field(lat.Lambda, cfg.code) * spins[..., 0]))
    return -p.J * bonds + zeeman + forcing


def _sweep_color_impl(spins, field_x, J, h_z, beta, cos_max, randoms, color, row_accepted, row_energy):
    lam = spins.shape[0]
    for x in prange(lam):
        xp = (x + 1) % lam
        xm = (x - 1 + lam) % lam
        n_acc = 0
        d_e = 0.0
        for y in range(lam):
            yp = (y + 1) % lam
            ym = (y - 1 + lam) % lam
            for z in range((color + x + y) % 2, lam, 2):
                zp = (z + 1) % lam
                zm = (z - 1 + lam) % lam
                hx = field_x[x, y, z] - J * (spins[xp, y, z, 0] + spins[xm, y, z, 0] + spins[x, yp, z, 0]
                                             + spins[x, ym, z, 0] + spins[x, y, zp, 0] + spins[x, y, zm, 0])
                hy = -J * (spins[xp, y, z, 1] + spins[xm, y, z, 1] + spins[x, yp, z, 1]
                           + spins[x, ym, z, 1] + spins[x, y, zp, 1] + spins[x, y, zm, 1])
                hz = h_z - J * (spins[xp, y, z, 2] + spins[xm, y, z, 2] + spins[x, yp, z, 2]
                                + spins[x, ym, z, 2] + spins[x, y, zp, 2] + spins[x, y, zm, 2])

                ox = spins[x, y, z, 0]
                oy = spins[x, y, z, 1]
                oz = spins[x, y, z, 2]

                # uniform point on the spherical cap of half-angle acos(cos_max) around the old spin
                cos_t = 1.0 - randoms[x, y, z, 0] * (1.0 - cos_max)
                sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
                phi = 2.0 * math.pi * randoms[x, y, z, 1]
                ax = 1.0 if abs(ox) < 0.9 else 0.0
                ay = 1.0 - ax
                proj = ax * ox + ay * oy
                e1x = ax - proj * ox
                e1y = ay - proj * oy
                e1z = -proj * oz
                e1n = math.sqrt(e1x * e1x + e1y * e1y + e1z * e1z)
                e1x /= e1n
                e1y /= e1n
                e1z /= e1n
                e2x = oy * e1z - oz * e1y
                e2y = oz * e1x - ox * e1z
                e2z = ox * e1y - oy * e1x
                c_phi = math.cos(phi)
                s_phi = math.sin(phi)
                nx = cos_t * ox + sin_t * (c_phi * e1x + s_phi * e2x)
                ny = cos_t * oy + sin_t * (c_phi * e1y + s_phi * e2y)
                nz = cos_t * oz + sin_t * (c_phi * e1z + s_phi * e2z)
                norm = math.sqrt(nx * nx + ny * ny + nz * nz)
                nx /= norm
                ny /= norm
                nz /= norm

                dE = (nx - ox) * hx + (ny - oy) * hy + (nz - oz) * hz
                if dE <= 0.0 or randoms[x, y, z, 2] < math.exp(-beta * dE):
                    spins[x, y, z, 0] = nx
                    spins[x, y, z, 1] = ny
                    spins[x, y, z, 2] = nz
                    n_acc += 1
                    d_e += dE
        # per-row outputs, no cross-thread reductions
        row_accepted[x] = n_acc
        row_energy[x] = d_e


_sweep_color_serial = njit(_sweep_color_impl)
_sweep_color_parallel = njit(parallel=True)(_sweep_color_impl)
_parallel_broken = False


def _run_kernel(parallel: bool, *args) -> None:
    global _parallel_broken
    if parallel and not _parallel_broken:
        try:
            _sweep_color_parallel(*args)
            return
        except NumbaError as exc:
            _parallel_broken = True
            logger.warning(f"Parallel Metropolis kernel unavailable, using the serial kernel: {exc}")
    _sweep_color_serial(*args)


def metropolis_sweep(lat: SpinLattice, cfg: MCConfig, p: FMParams, rng: np.random.Generator,
                     cone_angle: Optional[float] = None, field_x: Optional[np.ndarray] = None) -> Tuple[float, float]:
    """One Lambda^3-attempt sweep (both colors). Returns (acceptance fraction, accumulated dE)."""
    lam = lat.Lambda
    if field_x is None:
        field_x = code_field(lam, cfg.code)
    angle = math.pi if cfg.uniform_proposal else (cfg.cone_angle if cone_angle is None else cone_angle)
    cos_max = math.cos(angle)
    parallel = settings.MC_PARALLEL if cfg.parallel is None else cfg.parallel

    accepted = 0
    delta_energy = 0.0
    row_accepted = np.zeros(lam, dtype=np.int64)
    row_energy = np.zeros(lam)
    for color in (0, 1):
        randoms = rng.random((lam, lam, lam, 3))
        _run_kernel(parallel, lat.spins, field_x, p.J, p.h_z, 1.0 / cfg.temperature, cos_max, randoms, color,
                    row_accepted, row_energy)
        accepted += int(row_accepted.sum())
        delta_energy += float(row_energy.sum())
    return accepted / lam ** 3, delta_energy


def _binned_error(samples: np.ndarray, n_bins: int) -> float:
    n_bins = min(n_bins, len(samples))
    if n_bins < 2:
        return 0.0
    means = np.array([chunk.mean() for chunk in np.array_split(samples, n_bins)])
    return float(means.std(ddof=1) / math.sqrt(n_bins))


def run_simulation(lat: SpinLattice, cfg: MCConfig, p: FMParams) -> MCMeasurement:
    """Thermalize (tuning the cone), then measure with the cone frozen."""
    lam = lat.Lambda
    if lam ** 3 > settings.MC_MAX_SPINS:
        raise ResourceCap(f"Lambda^3 = {lam ** 3} spins exceeds MC_MAX_SPINS={settings.MC_MAX_SPINS}")
    rng = np.random.default_rng(cfg.seed)
    field_x = code_field(lam, cfg.code)
    cx, cy, cz = code_center(lam, cfg.code)
    layers = (cz + np.arange(lam // 2 + 1)) % lam

    angle = cfg.cone_angle
    for sweep in range(cfg.sweeps_thermalize):
        acceptance, _ = metropolis_sweep(lat, cfg, p, rng, angle, field_x)
        if cfg.tune_cone and not cfg.uniform_proposal:
            angle = min(math.pi, max(MIN_CONE_ANGLE, angle * min(2.0, max(0.5, acceptance / TARGET_ACCEPTANCE))))
    if cfg.tune_cone and not cfg.uniform_proposal and angle >= math.pi:
        logger.warning("Cone angle saturated at pi; the proposal is effectively uniform")
    logger.debug(f"Thermalized Lambda={lam} for {cfg.sweeps_thermalize} sweeps, cone angle {angle:.4f}")

    sx_samples: List[float] = []
    mz_samples: List[float] = []
    profile_sum = np.zeros(len(layers))
    accepted_total = 0.0
    for sweep in range(cfg.sweeps_measure):
        acceptance, _ = metropolis_sweep(lat, cfg, p, rng, angle, field_x)
        accepted_total += acceptance
        if (sweep + 1) % cfg.measure_every == 0:
            sx_samples.append(lat.spins[cx, cy, cz, 0])
            mz_samples.append(float(lat.spins[..., 2].mean()))
            profile_sum += lat.spins[cx, cy, layers, 0]
    lat.renormalize()

    sx = np.asarray(sx_samples)
    mz = np.asarray(mz_samples)
    result = MCMeasurement(
        sx_center=float(sx.mean()),
        sx_center_err=_binned_error(sx, cfg.n_bins),
        mz=float(mz.mean()),
        mz_err=_binned_error(mz, cfg.n_bins),
        acceptance=accepted_total / cfg.sweeps_measure,
        cone_angle=math.pi if cfg.uniform_proposal else angle,
        energy=energy(lat, cfg, p),
        profile=(profile_sum / len(sx_samples)).tolist(),
    )
    logger.info(f"Lambda={lam}, L={cfg.code.L}: <S^x_center>={result.sx_center:.4e} +- {result.sx_center_err:.1e}, "
                f"m_z={result.mz:.4f}, acceptance={result.acceptance:.2f}")
    return result


def scaling_parameters(L: int, preset: ScalingPreset, J: float = 1.0) -> Tuple[int, float, float]:
    """(Lambda, h_z, L_h) for a code of size L with classical S = 1."""
    magnetic_len = float(L ** 2)
    if preset == ScalingPreset.FIG4:
        Lambda = int(2 * magnetic_len)
    else:
        Lambda = L ** 3
    Lambda += Lambda % 2
    h_z = 2.0 * J / magnetic_len ** 2
    return Lambda, h_z, magnetic_len


def run_fig4(L_values: Sequence[int], p: FMParams, cfg: MCConfig, preset: ScalingPreset = ScalingPreset.FIG4,
             profiles: Optional[Dict[int, List[float]]] = None) -> pd.DataFrame:
    """Center-spin response and magnetization per code size; L_h = L^2 and h_z = 2J/L_h^2."""
    plan = [(L, *scaling_parameters(L, preset, p.J)) for L in L_values]
    for L, Lambda, _, _ in plan:
        if Lambda ** 3 > settings.MC_MAX_SPINS:
            raise ResourceCap(f"L={L} needs Lambda={Lambda} ({Lambda ** 3} spins), over MC_MAX_SPINS={settings.MC_MAX_SPINS}")

    rows = []
    for L, Lambda, h_z, magnetic_len in plan:
        run_params = p.model_copy(update={"Lambda": Lambda, "h_z": h_z, "S": 1.0})
        run_cfg = cfg.model_copy(update={"code": cfg.code.model_copy(update={"L": L})})
        logger.info(f"Fig4 point L={L}: Lambda={Lambda}, h_z={h_z:.3e}, L_h={magnetic_len}")
        result = run_simulation(SpinLattice.saturated(Lambda), run_cfg, run_params)
        if profiles is not None:
            profiles[L] = result.profile
        rows.append(Fig4Row(
            L=L,
            Lambda=Lambda,
            h_z=h_z,
            magnetic_length=magnetic_len,
            sx_center=result.sx_center,
            sx_center_err=result.sx_center_err,
            mz=result.mz,
            polarization=abs(result.mz),
            acceptance=result.acceptance,
            cone_angle=result.cone_angle,
        ).model_dump())
    return pd.DataFrame(rows)
