"""
Data models for the magnon gadget lab.
"""

import math
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class StabilizerBasis(str, Enum):
    X = "x"
    Z = "z"


class ScalingPreset(str, Enum):
    FIG4 = "fig4"
    MAIN = "main"


class BackactionRegime(str, Enum):
    LATTICE = "lattice"
    FRESNEL = "fresnel"
    ASYMPTOTIC = "asymptotic"


class CodeShape(str, Enum):
    SQUARE = "square"
    DISK = "disk"


class GadgetSites(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: str = "a"
    b: str = "b"
    c: str = "c"
    d: str = "d"
    f: str = "f"
    g: str = "g"
    u: str = "u"
    p: str = "p"

    @model_validator(mode="after")
    def _unique(self):
        labels = list(self.model_dump().values())
        if len(set(labels)) != len(labels):
            raise ValueError(f"site labels must be distinct, got {labels}")
        return self

    @property
    def code(self) -> Tuple[str, str, str, str]:
        return (self.a, self.b, self.c, self.d)

    @property
    def mediators(self) -> Tuple[str, str, str]:
        return (self.f, self.g, self.u)


class GadgetSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta: float = Field(1.0, description="mediator gap Δ [energy]")
    alpha: float = Field(0.0, description="u-mediator coupling α [energy]")
    beta: float = Field(0.0, description="f-g mediator coupling β [energy]")
    gamma: float = Field(0.0, description="FM coupling to u, γ [energy]")
    delta_pair: float = Field(0.0, description="direct pair coupling δ [energy]")
    epsilon: float = Field(0.0, description="code-mediator coupling ε [energy]")
    tau: float = Field(0.0, description="FM coupling to f and g, τ [energy]")
    sites: GadgetSites = GadgetSites()
    variant: StabilizerBasis = StabilizerBasis.X

    @model_validator(mode="after")
    def _perturbative(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        for name in ("alpha", "beta", "gamma", "delta_pair", "epsilon", "tau"):
            value = getattr(self, name)
            if not math.isfinite(value) or abs(value) >= self.delta / 2:
                raise ValueError(f"|{name}| = {abs(value)} must be below delta/2 = {self.delta / 2}")
        return self

    @property
    def xi(self) -> float:
        return 2.0 * self.epsilon / self.delta

    @property
    def code_letter(self) -> str:
        return "X" if self.variant == StabilizerBasis.X else "Z"

    def updated(self, **changes) -> "GadgetSpec":
        """Validated copy with some couplings replaced."""
        data = self.model_dump()
        data.update(changes)
        return GadgetSpec(**data)


class EffectiveCoefficients(BaseModel):
    c_const: float = 0.0
    c_sx: float = 0.0
    c_r: float = 0.0
    c_rsx: float = 0.0
    c_w: float = 0.0
    c_wsx: float = 0.0

    @model_validator(mode="after")
    def _finite(self):
        for name, value in self.model_dump().items():
            if not math.isfinite(value):
                raise ValueError(f"{name} is not finite: {value}")
        return self

    def as_row(self, prefix: str = "") -> Dict[str, float]:
        return {f"{prefix}{name}": value for name, value in self.model_dump().items()}


class FitReport(BaseModel):
    coefficients: EffectiveCoefficients
    max_residual: float
    asymmetry: float
    quadratic_coefficients: Dict[str, float] = {}
    quadratic_residual: float = 0.0


class TuningValues(BaseModel):
    delta_star: float
    tau_star: float
    delta_star_leading: float
    tau_star_leading: float


class SectorKey(BaseModel):
    model_config = ConfigDict(frozen=True)

    s_a: int
    s_b: int
    s_c: int
    s_d: int
    s: float = 0.0

    @field_validator("s_a", "s_b", "s_c", "s_d")
    @classmethod
    def _pm_one(cls, value: int) -> int:
        if value not in (1, -1):
            raise ValueError(f"code eigenvalue must be +1 or -1, got {value}")
        return value

    @property
    def u(self) -> int:
        return self.s_a * self.s_b

    @property
    def v(self) -> int:
        return self.s_c * self.s_d


class SectorSpectrum(BaseModel):
    key: SectorKey
    ground_energy: float
    gap_to_excited: float


class FMParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    J: float = Field(1.0, description="exchange J [energy]")
    S: float = Field(0.5, description="spin magnitude S [dimensionless]")
    h_z: float = Field(0.0, description="symmetry-breaking field h_z [energy]")
    Lambda: int = Field(32, description="linear lattice size Λ [sites]")
    a: float = Field(1.0, description="lattice constant [length]")
    T: float = Field(0.0, description="temperature [energy]")
    magnetization: Optional[float] = Field(None, description="renormalized |M| (default S)")
    stiffness: Optional[float] = Field(None, description="renormalized stiffness ρ (default 2JS²)")

    @model_validator(mode="after")
    def _ferromagnet(self):
        if not self.J > 0:
            raise ValueError(f"J must be positive (ferromagnet), got {self.J}")
        if not self.S > 0:
            raise ValueError(f"S must be positive, got {self.S}")
        if self.h_z < 0:
            raise ValueError(f"h_z must be non-negative, got {self.h_z}")
        if self.Lambda < 2:
            raise ValueError(f"Lambda must be at least 2, got {self.Lambda}")
        if self.T < 0:
            raise ValueError(f"T must be non-negative, got {self.T}")
        return self

    @property
    def D(self) -> float:
        return 2.0 * self.J * self.S

    @property
    def rho(self) -> float:
        return self.stiffness if self.stiffness is not None else 2.0 * self.J * self.S ** 2

    @property
    def M(self) -> float:
        return self.magnetization if self.magnetization is not None else self.S

    @property
    def n_sites(self) -> int:
        return self.Lambda ** 3


class CouplingMatrix(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    positions: np.ndarray
    values: np.ndarray

    @model_validator(mode="after")
    def _attractive_symmetric(self):
        n = len(self.positions)
        if self.values.shape != (n, n):
            raise ValueError(f"values shape {self.values.shape} does not match {n} positions")
        if not np.array_equal(self.values, self.values.T):
            raise ValueError("coupling matrix must be symmetric")
        if np.any(np.diag(self.values) != 0.0):
            raise ValueError("coupling matrix diagonal must be zero")
        off = self.values[~np.eye(n, dtype=bool)]
        if np.any(off > 0.0):
            raise ValueError("off-diagonal couplings must be attractive (non-positive)")
        return self

    @property
    def size(self) -> int:
        return len(self.positions)


class NoiseParams(BaseModel):
    kappa_n: float = Field(1.0, description="rate prefactor κ_n [energy^(1-n)]")
    n: int = Field(1, description="bath exponent (1 Ohmic)")
    beta: float = Field(1.0, description="inverse temperature β [1/energy]")
    omega_c: float = Field(10.0, description="bath cutoff ω_c [energy]")

    @model_validator(mode="after")
    def _bath(self):
        if self.kappa_n < 0:
            raise ValueError(f"kappa_n must be non-negative, got {self.kappa_n}")
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.omega_c > 0:
            raise ValueError(f"omega_c must be positive, got {self.omega_c}")
        return self


class AdiabaticityReport(BaseModel):
    ratio: float
    threshold: float
    satisfied: bool


class LongitudinalPotential(BaseModel):
    mu: float
    log_coefficient: float
    zeeman_offset: float = 0.0

    @property
    def total(self) -> float:
        return self.mu + self.zeeman_offset


class CodeCoupling(BaseModel):
    A: float = Field(0.05, description="code-FM coupling A [energy]")
    L: int = Field(3, description="code linear size [plaquettes]")
    plane_z: int = Field(0, description="layer index of the code plane")

    @field_validator("L")
    @classmethod
    def _positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"L must be at least 1, got {value}")
        return value


class MCConfig(BaseModel):
    temperature: float = Field(0.05, description="temperature [J]")
    sweeps_thermalize: int = Field(500, description="thermalization sweeps")
    sweeps_measure: int = Field(2000, description="measurement sweeps")
    seed: int = Field(12345, description="PCG64 seed")
    cone_angle: float = Field(0.5, description="initial proposal cone half-angle [rad]")
    uniform_proposal: bool = Field(False, description="propose uniformly on the sphere")
    tune_cone: bool = Field(True, description="tune the cone to 50% acceptance while thermalizing")
    measure_every: int = Field(1, description="sweeps between measurements")
    n_bins: int = Field(20, description="bins for the standard error")
    parallel: Optional[bool] = Field(None, description="numba parallel kernel (default from settings)")
    code: CodeCoupling = CodeCoupling()

    @model_validator(mode="after")
    def _counts(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.sweeps_thermalize < 1 or self.sweeps_measure < 1:
            raise ValueError("sweep counts must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        if not 0 < self.cone_angle <= math.pi:
            raise ValueError(f"cone_angle must lie in (0, pi], got {self.cone_angle}")
        if self.measure_every < 1 or self.n_bins < 2:
            raise ValueError("measure_every must be >= 1 and n_bins >= 2")
        return self


class MCMeasurement(BaseModel):
    sx_center: float
    sx_center_err: float
    mz: float
    mz_err: float
    acceptance: float
    cone_angle: float
    energy: float
    profile: List[float] = Field(default_factory=list, description="⟨S^x⟩ on the center column vs layer distance")


class Fig4Row(BaseModel):
    L: int
    Lambda: int
    h_z: float
    magnetic_length: float
    sx_center: float
    sx_center_err: float
    mz: float
    polarization: float
    acceptance: float
    cone_angle: float


class CodeGeometry(BaseModel):
    model_config = ConfigDict(frozen=True)

    shape: CodeShape = CodeShape.SQUARE
    size: float = Field(8, description="side length (square) or radius (disk) [plaquettes]")
    continuum: bool = Field(False, description="integrate a disk instead of summing plaquettes")
    infinite: bool = Field(False, description="continuum disk of infinite radius")

    @model_validator(mode="after")
    def _shape(self):
        if self.continuum and self.shape != CodeShape.DISK:
            raise ValueError("only a disk code has a continuum form")
        if self.infinite and not self.continuum:
            raise ValueError("an infinite code must be a continuum disk")
        if not self.infinite and not self.size > 0:
            raise ValueError(f"code size must be positive, got {self.size}")
        return self

    def plaquettes(self) -> np.ndarray:
        """Integer in-plane plaquette positions (n, 2), centered on the origin."""
        if self.continuum:
            raise ValueError("a continuum code has no discrete plaquettes")
        if self.shape == CodeShape.SQUARE:
            side = int(round(self.size))
            axis = np.arange(side) - side // 2
            xx, yy = np.meshgrid(axis, axis, indexing="ij")
            return np.stack([xx.ravel(), yy.ravel()], axis=1)
        reach = int(math.floor(self.size))
        axis = np.arange(-reach, reach + 1)
        xx, yy = np.meshgrid(axis, axis, indexing="ij")
        inside = xx ** 2 + yy ** 2 <= self.size ** 2
        return np.stack([xx[inside], yy[inside]], axis=1)


class TimeSeries(BaseModel):
    times: List[float]
    values: List[float]
    valid: List[bool]
    meta: Dict[str, Any] = {}

    @model_validator(mode="after")
    def _consistent(self):
        if not len(self.times) == len(self.values) == len(self.valid):
            raise ValueError("times, values and valid must have equal length")
        if any(t1 <= t0 for t0, t1 in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("values must be finite")
        return self

    def trusted(self) -> "TimeSeries":
        """Drop points flagged beyond the one-magnon bound."""
        keep = [i for i, ok in enumerate(self.valid) if ok]
        return TimeSeries(
            times=[self.times[i] for i in keep],
            values=[self.values[i] for i in keep],
            valid=[True] * len(keep),
            meta=dict(self.meta),
        )


class RefreshReport(BaseModel):
    t_r: float = Field(..., description="time at which |⟨S^x⟩| of the infinite code reaches S [1/J]")
    order_of_magnitude: float = Field(..., description="JS/A² estimate [1/J]")


class RunManifest(BaseModel):
    subcommand: str
    parameters: Dict[str, Any]
    seed: Optional[int] = None
    version: str
    settings: Dict[str, Any] = {}
    checksums: Dict[str, str] = {}
