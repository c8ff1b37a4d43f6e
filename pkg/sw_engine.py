"""
Schrieffer-Wolff elimination of gadget mediator qubits.
Builds the five-body gadget Hamiltonian, integrates out f, g and u and projects onto the stabilizer basis.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import sympy

from data_models import EffectiveCoefficients, GadgetSpec, StabilizerBasis, TuningValues
from errors import BasisLeak, DomainError, NotOffDiagonal, TooStrong, YTermPresent
from pauli_core import OperatorSum, PauliTerm, commutator, op, relabel, simplify

logger = logging.getLogger(__name__)

# x -> z -> y -> x, a proper rotation of the Pauli algebra
Z_VARIANT_MAP = {"X": "Z", "Z": "Y", "Y": "X"}

DEFAULT_ORDERING = ("f", "g", "u")

# Leading-order closed forms of the effective coefficients
_D, _al, _be, _ga, _dp, _ep, _ta = sympy.symbols("Delta alpha beta gamma delta_pair epsilon tau", real=True)
_xi = 2 * _ep / _D
CLOSED_FORM = {
    "c_const": -3 * _D / 2 - _xi ** 2 * _D + _be - 4 * _al ** 2 / _D,
    "c_sx": _ga + 2 * _ta - 8 * _ga * _al ** 2 / _D ** 2,
    "c_r": _dp - _xi ** 2 * (_D / 2 + _be - 4 * _al ** 2 / _D),
    "c_rsx": -_xi ** 2 * (_ta - 8 * _al ** 2 * _ga / _D ** 2),
    "c_w": _xi ** 4 * (_be - 2 * _al ** 2 / _D),
    "c_wsx": -4 * _xi ** 4 * _al ** 2 * _ga / _D ** 2,
}
_ARGS = (_D, _al, _be, _ga, _dp, _ep, _ta)
_CLOSED_FORM_FN = {name: sympy.lambdify(_ARGS, expr, "math") for name, expr in CLOSED_FORM.items()}
_DELTA_STAR_FN = sympy.lambdify(_ARGS, sympy.solve(CLOSED_FORM["c_r"], _dp)[0], "math")
_TAU_STAR_FN = sympy.lambdify(_ARGS, sympy.solve(CLOSED_FORM["c_rsx"], _ta)[0], "math")


def _spec_args(spec: GadgetSpec) -> Tuple[float, ...]:
    return (spec.delta, spec.alpha, spec.beta, spec.gamma, spec.delta_pair, spec.epsilon, spec.tau)


def closed_form(spec: GadgetSpec) -> EffectiveCoefficients:
    """Leading-order coefficients; each neglects corrections smaller by a factor xi^2."""
    args = _spec_args(spec)
    return EffectiveCoefficients(**{name: float(fn(*args)) for name, fn in _CLOSED_FORM_FN.items()})


def gadget_hamiltonian(spec: GadgetSpec) -> OperatorSum:
    """Single-plaquette gadget Hamiltonian; the FM spin S_p^x is a formal symbol on site p."""
    s = spec.sites
    half = spec.delta / 2
    sx = {s.p: 1}
    h = (
        op({s.f: "Z"}, -half) + op({s.g: "Z"}, -half) + op({s.u: "Z"}, -half)
        + op({s.u: "Z"}, spec.gamma, sx)
        + op({s.f: "Z"}, spec.tau, sx) + op({s.g: "Z"}, spec.tau, sx)
        + op({s.f: "X", s.a: "X"}, spec.epsilon) + op({s.f: "X", s.b: "X"}, spec.epsilon)
        + op({s.g: "X", s.c: "X"}, spec.epsilon) + op({s.g: "X", s.d: "X"}, spec.epsilon)
        + op({s.u: "X", s.f: "Z"}, spec.alpha) + op({s.u: "X", s.g: "Z"}, spec.alpha)
        + op({s.f: "Z", s.g: "Z"}, spec.beta)
        + op({s.a: "X", s.b: "X"}, spec.delta_pair) + op({s.c: "X", s.d: "X"}, spec.delta_pair)
    )
    h = simplify(h)
    if spec.variant == StabilizerBasis.Z:
        h = relabel(h, Z_VARIANT_MAP, sites=s.code)
    return h


def _split_on(h: OperatorSum, mediator: str) -> Dict[Optional[str], OperatorSum]:
    parts: Dict[Optional[str], List[PauliTerm]] = {None: [], "X": [], "Y": [], "Z": []}
    for term in h.terms:
        parts[term.letter_on(mediator)].append(term)
    return {letter: OperatorSum.model_construct(terms=tuple(terms)) for letter, terms in parts.items()}


def _drop_site(term: PauliTerm, site: str) -> Tuple[Tuple[Tuple[str, str], ...], Tuple[Tuple[str, int], ...]]:
    return (tuple((s, l) for s, l in term.letters if s != site), term.symbols)


def _project_ground(h: OperatorSum, mediator: str) -> OperatorSum:
    # ground sector of -(Delta/2) Z: Z -> +1, X and Y have no diagonal block
    acc = {}
    for term in h.terms:
        letter = term.letter_on(mediator)
        if letter in ("X", "Y"):
            continue
        key = _drop_site(term, mediator)
        acc[key] = acc.get(key, 0.0) + term.coefficient
    return OperatorSum.from_map(acc)


def liouvillian_inverse(h: OperatorSum, mediator: str, delta: float) -> OperatorSum:
    """Inverse of [H0, .] with H0 = -(Delta/2) Z on the mediator, for off-diagonal h."""
    acc = {}
    for term in h.terms:
        letter = term.letter_on(mediator)
        if letter == "X":
            new_letter, factor = "Y", -1j / delta
        elif letter == "Y":
            new_letter, factor = "X", 1j / delta
        else:
            raise NotOffDiagonal(f"term {term} is block-diagonal on mediator {mediator!r}")
        letters = tuple(sorted(
            (s, new_letter if s == mediator else l) for s, l in term.letters
        ))
        key = (letters, term.symbols)
        acc[key] = acc.get(key, 0.0) + term.coefficient * factor
    return simplify(OperatorSum.from_map(acc), tolerance=0.0)


def integrate_out(h: OperatorSum, mediator: str, delta: float, order: int = 3) -> OperatorSum:
    """Effective Hamiltonian in the mediator ground sector, mediator site removed."""
    if order not in (2, 3):
        raise DomainError(f"order must be 2 or 3, got {order}")
    h0 = op({mediator: "Z"}, -delta / 2)
    v = simplify(h - h0, tolerance=0.0)
    parts = _split_on(v, mediator)
    if parts["Y"].terms:
        raise YTermPresent(f"perturbation carries Y on mediator {mediator!r}: {parts['Y']}")

    # formal symbols count with unit magnitude
    strength = parts["Z"].norm1() + parts["X"].norm1()
    if strength >= delta / 2:
        raise TooStrong(f"perturbation on mediator {mediator!r} has norm {strength:.6g} >= Delta/2 = {delta / 2:.6g}")

    v_d = parts[None] + parts["Z"]
    v_od = parts["X"]
    h_eff = OperatorSum.identity(-delta / 2) + _project_ground(v_d, mediator)
    if v_od.terms:
        s1 = liouvillian_inverse(v_od, mediator, delta)
        h_eff = h_eff + 0.5 * _project_ground(commutator(s1, v_od), mediator)
        if order == 3:
            s2 = liouvillian_inverse(commutator(s1, v_d), mediator, delta)
            h_eff = h_eff + 0.5 * _project_ground(commutator(s2, v_od), mediator)
    # exact zeros only: c_wsx sits ~1e-14 below the constant term
    h_eff = simplify(h_eff, tolerance=0.0)
    logger.debug(f"Integrated out {mediator}: {len(v.terms)} perturbation terms -> {len(h_eff.terms)} effective terms")
    return h_eff


def effective_hamiltonian(spec: GadgetSpec, ordering: Sequence[str] = DEFAULT_ORDERING, order: int = 3) -> OperatorSum:
    roles = {"f": spec.sites.f, "g": spec.sites.g, "u": spec.sites.u}
    if sorted(ordering) != ["f", "g", "u"]:
        raise DomainError(f"ordering must be a permutation of f, g, u; got {list(ordering)}")
    h = gadget_hamiltonian(spec)
    for role in ordering:
        h = integrate_out(h, roles[role], spec.delta, order)
    return h


def leak_tolerance(spec: GadgetSpec) -> float:
    return max(spec.xi ** 6 * spec.delta, 1e-12 * spec.delta)


def project_effective(h_eff: OperatorSum, spec: GadgetSpec) -> Tuple[EffectiveCoefficients, List[PauliTerm]]:
    """Regroup onto {1, S, R, R S, W, W S}; returns the coefficients and everything else."""
    s = spec.sites
    letter = spec.code_letter
    sx = ((s.p, 1),)
    pair_ab = tuple(sorted(((s.a, letter), (s.b, letter))))
    pair_cd = tuple(sorted(((s.c, letter), (s.d, letter))))
    plaquette = tuple(sorted((site, letter) for site in s.code))
    basis = {
        ((), ()): "c_const", ((), sx): "c_sx",
        (pair_ab, ()): "r_ab", (pair_cd, ()): "r_cd",
        (pair_ab, sx): "rs_ab", (pair_cd, sx): "rs_cd",
        (plaquette, ()): "c_w", (plaquette, sx): "c_wsx",
    }
    values = {name: 0.0 for name in basis.values()}
    residual: List[PauliTerm] = []
    for key, coefficient in h_eff.to_map().items():
        name = basis.get(key)
        if name is None:
            residual.append(PauliTerm.model_construct(coefficient=coefficient, letters=key[0], symbols=key[1]))
            continue
        values[name] += coefficient.real
        if abs(coefficient.imag) > 0:
            residual.append(PauliTerm.model_construct(coefficient=1j * coefficient.imag, letters=key[0], symbols=key[1]))
    asymmetry = max(abs(values["r_ab"] - values["r_cd"]), abs(values["rs_ab"] - values["rs_cd"]))
    logger.debug(f"R asymmetry {asymmetry:.3e}")
    coefficients = EffectiveCoefficients(
        c_const=values["c_const"],
        c_sx=values["c_sx"],
        c_r=0.5 * (values["r_ab"] + values["r_cd"]),
        c_rsx=0.5 * (values["rs_ab"] + values["rs_cd"]),
        c_w=values["c_w"],
        c_wsx=values["c_wsx"],
    )
    return coefficients, residual


def gadget_effective(spec: GadgetSpec, ordering: Sequence[str] = DEFAULT_ORDERING, order: int = 3) -> EffectiveCoefficients:
    h_eff = effective_hamiltonian(spec, ordering, order)
    coefficients, residual = project_effective(h_eff, spec)
    tolerance = leak_tolerance(spec)
    leaks = [term for term in residual if abs(term.coefficient) > tolerance]
    if leaks:
        listing = "; ".join(str(term) for term in leaks[:8])
        raise BasisLeak(f"{len(leaks)} effective terms outside the stabilizer basis exceed {tolerance:.3e}: {listing}", leaks)
    logger.info(f"Effective coefficients for ordering {''.join(ordering)}: c_wsx={coefficients.c_wsx:.6e}, c_r={coefficients.c_r:.6e}")
    return coefficients


def tuning_values(spec: GadgetSpec, ordering: Sequence[str] = DEFAULT_ORDERING) -> TuningValues:
    """delta_pair and tau that zero c_r and c_rsx at the computed order."""
    # delta_pair enters only at first order
    delta_star = -gadget_effective(spec.updated(delta_pair=0.0), ordering).c_r

    # c_rsx is affine in tau
    c0 = gadget_effective(spec.updated(tau=0.0), ordering).c_rsx
    if c0 == 0.0:
        tau_star = 0.0
    else:
        trial = _TAU_STAR_FN(*_spec_args(spec))
        if trial == 0.0 or abs(trial) >= spec.delta / 2:
            trial = 1e-3 * spec.delta
        c1 = gadget_effective(spec.updated(tau=trial), ordering).c_rsx
        tau_star = -c0 * trial / (c1 - c0)

    args = _spec_args(spec)
    values = TuningValues(
        delta_star=delta_star,
        tau_star=tau_star,
        delta_star_leading=float(_DELTA_STAR_FN(*args)),
        tau_star_leading=float(_TAU_STAR_FN(*args)),
    )
    logger.info(f"Tuning values: delta*={values.delta_star:.6e}, tau*={values.tau_star:.6e}")
    return values
