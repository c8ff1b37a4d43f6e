"""
Experiment runners behind the CLI subcommands.
Each experiment has a pydantic parameter model (field descriptions carry units) and returns named tables.
"""

import concurrent.futures
import logging
import math
from typing import Callable, Dict, List, NamedTuple, Optional, Type

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from anyon_thermo import adiabaticity_margin, longitudinal_mu, mu_scaling, rate_table, thermal_energy_table
from backaction import backaction_series, refresh_time
from data_models import (
    BackactionRegime, CodeCoupling, CodeGeometry, CodeShape, FMParams, GadgetSpec, MCConfig,
    NoiseParams, ScalingPreset, StabilizerBasis,
)
from errors import DomainError
from exact_diag import DEFAULT_S_VALUES, exact_tuning_values, fit_effective, quantum_crosscheck
from fm_metropolis import run_fig4
from magnon_fields import chi_xx_q, chi_zz_q, coupling_matrix, lattice_deviation_table, magnetic_length
from sw_engine import closed_form, gadget_effective

logger = logging.getLogger(__name__)

Tables = Dict[str, pd.DataFrame]


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class ExperimentParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    @field_validator("*", mode="before")
    @classmethod
    def _lists_from_text(cls, value, info):
        annotation = cls.model_fields[info.field_name].annotation
        if getattr(annotation, "__origin__", None) is list:
            return _split_list(value)
        return value


class GadgetParams(ExperimentParams):
    delta: float = Field(1.0, description="mediator gap Δ [energy]")
    alpha: float = Field(0.02, description="u-mediator coupling α [energy]")
    beta: float = Field(0.0, description="f-g mediator coupling β [energy]")
    gamma: float = Field(0.02, description="FM coupling to u, γ [energy]")
    delta_pair: float = Field(0.0, description="direct pair coupling δ [energy]")
    epsilon: float = Field(0.02, description="code-mediator coupling ε [energy]")
    tau: float = Field(0.0, description="FM coupling to f and g, τ [energy]")
    variant: StabilizerBasis = Field(StabilizerBasis.X, description="stabilizer letter of the gadget (x or z)")
    order: int = Field(3, description="Schrieffer-Wolff order per eliminated mediator (2 or 3)")
    precision: str = Field("double", description="exact-fit eigensolver precision (double or extended)")
    s_values: List[float] = Field(list(DEFAULT_S_VALUES), description="FM values S_p^x used by the exact fit [spin]")

    def to_spec(self) -> GadgetSpec:
        return GadgetSpec(delta=self.delta, alpha=self.alpha, beta=self.beta, gamma=self.gamma,
                          delta_pair=self.delta_pair, epsilon=self.epsilon, tau=self.tau, variant=self.variant)


class GadgetVerifyParams(GadgetParams):
    tune: bool = Field(False, description="replace δ and τ by the tuned values δ*, τ*")
    crosscheck: bool = Field(False, description="also diagonalize the full gadget with a spin-1/2 FM qubit")


class GadgetSweepParams(GadgetParams):
    key: str = Field("epsilon", description="gadget parameter to sweep (delta, alpha, beta, gamma, delta_pair, epsilon, tau)")
    values: List[float] = Field([0.01, 0.02, 0.04], description="swept values [energy]")
    workers: int = Field(1, description="worker processes (results gathered in input order)")


class MagnonParams(ExperimentParams):
    J: float = Field(1.0, description="exchange J [energy]")
    S: float = Field(0.5, description="spin magnitude S")
    h_z: float = Field(1e-3, description="symmetry-breaking field h_z [energy]")
    Lambda: int = Field(64, description="linear lattice size Λ [sites]")
    T: float = Field(0.0, description="temperature [energy]")

    def fm(self, **changes) -> FMParams:
        values = dict(J=self.J, S=self.S, h_z=self.h_z, Lambda=self.Lambda, T=self.T)
        values.update(changes)
        return FMParams(**values)


class SusceptibilityParams(MagnonParams):
    q_max: float = Field(1.0, description="largest |q| of the q table [1/lattice constant]")
    n_q: int = Field(50, description="points in the q table")
    r_min: int = Field(1, description="smallest distance of the r table [lattice constants]")
    r_max: int = Field(16, description="largest distance of the r table [lattice constants]")
    images: int = Field(4, description="periodic images per axis in the continuum reference")


class CouplingMatrixParams(MagnonParams):
    h_z: float = Field(0.0, description="symmetry-breaking field h_z [energy]")
    A: float = Field(0.1, description="code-FM coupling A [energy]")
    L: int = Field(8, description="code linear size [plaquettes]")


class ThermoParams(MagnonParams):
    h_z: float = Field(0.0, description="symmetry-breaking field h_z [energy]")
    T: float = Field(0.01, description="FM temperature for the longitudinal potential [energy]")
    A: float = Field(0.1, description="code-FM coupling A [energy]")
    L_values: List[int] = Field([8, 16, 24, 32], description="code sizes [plaquettes]")
    betas: List[float] = Field([10.0, 100.0, 1000.0], description="inverse temperatures of the thermal table [1/energy]")
    kappa_n: float = Field(1.0, description="bath rate prefactor κ_n [energy^(1-n)]")
    n: int = Field(1, description="bath exponent (1 Ohmic)")
    bath_beta: float = Field(10.0, description="bath inverse temperature [1/energy]")
    omega_c: float = Field(10.0, description="bath cutoff ω_c [energy]")
    omega_max: float = Field(1.0, description="largest |ω| of the rate table [energy]")
    n_omega: int = Field(41, description="points in the rate table")


class MetropolisParams(ExperimentParams):
    J: float = Field(1.0, description="exchange J [energy]")
    A: float = Field(0.05, description="code-FM coupling A [energy]")
    L_values: List[int] = Field([3, 4, 5, 6], description="code sizes [plaquettes]")
    preset: ScalingPreset = Field(ScalingPreset.FIG4, description="size scaling (fig4: Λ = 2L², main: Λ = L³)")
    temperature: float = Field(0.05, description="temperature [J]")
    sweeps_thermalize: int = Field(500, description="thermalization sweeps")
    sweeps_measure: int = Field(2000, description="measurement sweeps")
    seed: int = Field(12345, description="PCG64 seed")
    cone_angle: float = Field(0.5, description="initial proposal cone half-angle [rad]")
    uniform_proposal: bool = Field(False, description="propose uniformly on the sphere")
    parallel: Optional[bool] = Field(None, description="numba parallel kernel (default from settings)")
    profile: bool = Field(False, description="also write the per-layer ⟨S^x⟩ profile")


class BackactionParams(MagnonParams):
    h_z: float = Field(0.0, description="symmetry-breaking field h_z [energy]; lattice sums regulate 0")
    Lambda: int = Field(48, description="linear lattice size Λ [sites]")
    regime: BackactionRegime = Field(BackactionRegime.FRESNEL, description="lattice, fresnel or asymptotic")
    shape: CodeShape = Field(CodeShape.SQUARE, description="code geometry (square or disk)")
    size: float = Field(21, description="side length (square) or radius (disk) [plaquettes]")
    continuum: bool = Field(False, description="integrate a continuum disk")
    infinite: bool = Field(False, description="continuum disk of infinite radius")
    site_z: float = Field(1.0, description="height of the FM spin above the code center [lattice constants]")
    A: float = Field(0.01, description="code-FM coupling A [energy]")
    t_max: float = Field(20.0, description="last time of the series [1/J]")
    n_t: int = Field(40, description="points in the series")


def run_gadget_verify(params: GadgetVerifyParams) -> Tables:
    spec = params.to_spec()
    if params.tune:
        tuned = exact_tuning_values(spec, params.s_values, params.precision)
        spec = spec.updated(delta_pair=tuned.delta_star, tau=tuned.tau_star)
        logger.info(f"Tuned gadget: delta*={tuned.delta_star:.6e}, tau*={tuned.tau_star:.6e}")
    closed = closed_form(spec)
    sw = gadget_effective(spec, order=params.order)
    report = fit_effective(spec, params.s_values, params.precision)
    rows = []
    for name, value in closed.model_dump().items():
        fitted = getattr(report.coefficients, name)
        rows.append({
            "coefficient": name,
            "closed_form": value,
            "sw_engine": getattr(sw, name),
            "exact_fit": fitted,
            "relative_deviation": abs(fitted - value) / abs(value) if value else math.nan,
        })
    summary = {"max_residual": report.max_residual, "asymmetry": report.asymmetry,
               "quadratic_residual": report.quadratic_residual, **report.quadratic_coefficients}
    if params.crosscheck:
        summary["crosscheck_deviation"] = quantum_crosscheck(spec)
    return {"coefficients": pd.DataFrame(rows), "fit_summary": pd.DataFrame([summary])}


def _sweep_point(spec: GadgetSpec, order: int, s_values: List[float], precision: str) -> Dict[str, float]:
    row = {}
    row.update(closed_form(spec).as_row("closed_"))
    row.update(gadget_effective(spec, order=order).as_row("sw_"))
    report = fit_effective(spec, s_values, precision)
    row.update(report.coefficients.as_row("fit_"))
    row["fit_residual"] = report.max_residual
    return row


def run_gadget_sweep(params: GadgetSweepParams) -> Tables:
    if params.key not in GadgetSpec.model_fields or params.key in ("sites", "variant"):
        raise DomainError(f"cannot sweep {params.key!r}")
    base = params.to_spec()
    specs = [base.updated(**{params.key: value}) for value in params.values]
    args = (params.order, params.s_values, params.precision)
    if params.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=params.workers) as executor:
            rows = list(executor.map(_sweep_point, specs, *[[a] * len(specs) for a in args]))
    else:
        rows = [_sweep_point(spec, *args) for spec in specs]
    table = pd.DataFrame(rows)
    table.insert(0, params.key, params.values)
    return {"sweep": table}


def run_susceptibility(params: SusceptibilityParams) -> Tables:
    p = params.fm()
    q = np.linspace(params.q_max / params.n_q, params.q_max, params.n_q)
    vectors = np.stack([q, np.zeros_like(q), np.zeros_like(q)], axis=1)
    q_table = pd.DataFrame({"q": q, "chi_xx": chi_xx_q(vectors, p)})
    if p.T > 0:
        q_table["chi_zz"] = [chi_zz_q(v, p) for v in vectors]
    r_table = lattice_deviation_table(p, range(params.r_min, params.r_max + 1), params.images)
    logger.info(f"Susceptibility tables written for L_h={magnetic_length(p):.3f}")
    return {"chi_q": q_table, "chi_r": r_table}


def run_coupling_matrix(params: CouplingMatrixParams) -> Tables:
    cm = coupling_matrix(params.A, params.L, params.fm())
    rows, cols = np.indices(cm.values.shape)
    table = pd.DataFrame({"row": rows.ravel(), "col": cols.ravel(), "value": cm.values.ravel()})
    return {"coupling_matrix": table}


def run_thermo(params: ThermoParams) -> Tables:
    p = params.fm()
    mu_table, fit = mu_scaling(params.L_values, params.A, p)
    thermal = thermal_energy_table(mu_table["L"], mu_table["mu"], params.betas)
    noise = NoiseParams(kappa_n=params.kappa_n, n=params.n, beta=params.bath_beta, omega_c=params.omega_c)
    rates = rate_table(np.linspace(-params.omega_max, params.omega_max, params.n_omega), noise)
    adiabatic = adiabaticity_margin(params.A, noise)
    longitudinal = pd.DataFrame([
        {"L": L, **longitudinal_mu(L, p.T, p.D, params.A, spin=p.S).model_dump()}
        for L in params.L_values if L >= 4
    ])
    summary = pd.DataFrame([{**fit, **adiabatic.model_dump()}])
    return {"mu": mu_table, "thermal": thermal, "rates": rates, "longitudinal": longitudinal, "summary": summary}


def run_metropolis_fig4(params: MetropolisParams) -> Tables:
    cfg = MCConfig(
        temperature=params.temperature,
        sweeps_thermalize=params.sweeps_thermalize,
        sweeps_measure=params.sweeps_measure,
        seed=params.seed,
        cone_angle=params.cone_angle,
        uniform_proposal=params.uniform_proposal,
        parallel=params.parallel,
        code=CodeCoupling(A=params.A),
    )
    profiles: Dict[int, List[float]] = {}
    tables = {"fig4": run_fig4(params.L_values, FMParams(J=params.J, S=1.0), cfg, params.preset, profiles)}
    if params.profile:
        tables["profile"] = pd.DataFrame([
            {"L": L, "distance": d, "sx": value} for L, profile in profiles.items() for d, value in enumerate(profile)
        ])
    return tables


def run_backaction(params: BackactionParams) -> Tables:
    p = params.fm()
    geometry = CodeGeometry(shape=params.shape, size=params.size, continuum=params.continuum, infinite=params.infinite)
    times = np.linspace(params.t_max / params.n_t, params.t_max, params.n_t) if params.t_max > 0 else []
    series = backaction_series(params.regime, times, params.A, p, geometry, site=(0.0, 0.0, params.site_z))
    refresh = refresh_time(params.A, p) if params.A > 0 else None
    table = pd.DataFrame({"t": series.times, "sx": series.values, "valid": series.valid})
    summary = {"regime": params.regime.value, "points": len(series.times), "flagged": len(series.valid) - sum(series.valid)}
    if refresh is not None:
        summary.update(refresh.model_dump())
    return {"series": table, "summary": pd.DataFrame([summary])}


class Experiment(NamedTuple):
    params: Type[ExperimentParams]
    runner: Callable[[ExperimentParams], Tables]
    description: str


EXPERIMENTS: Dict[str, Experiment] = {
    "gadget-verify": Experiment(GadgetVerifyParams, run_gadget_verify,
                                "closed-form vs Schrieffer-Wolff vs exact-fit gadget coefficients"),
    "gadget-sweep": Experiment(GadgetSweepParams, run_gadget_sweep, "gadget coefficients over one swept parameter"),
    "susceptibility": Experiment(SusceptibilityParams, run_susceptibility,
                                 "transverse/longitudinal susceptibility tables and lattice deviation"),
    "coupling-matrix": Experiment(CouplingMatrixParams, run_coupling_matrix, "mediated plaquette coupling matrix"),
    "thermo": Experiment(ThermoParams, run_thermo, "anyon chemical potential, thermal energy and bath rates"),
    "metropolis-fig4": Experiment(MetropolisParams, run_metropolis_fig4,
                                  "classical Metropolis center-spin response vs code size"),
    "backaction": Experiment(BackactionParams, run_backaction, "time-dependent FM response to the code field"),
}
