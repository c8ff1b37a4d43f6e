"""
Pauli-string operator algebra on labelled spin-1/2 sites.
Exact products with phase bookkeeping, commutators, adjoints and densification.
"""

import logging
from numbers import Number
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from errors import DimensionCap, DomainError, UnknownSite, UnresolvedSymbol
from settings import settings

logger = logging.getLogger(__name__)

LETTERS = ("X", "Y", "Z")

# i**k for k = 0..3
_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)

# (left, right) -> (power of i, product letter) for distinct letters
_PRODUCT = {
    ("X", "Y"): (1, "Z"),
    ("Y", "X"): (3, "Z"),
    ("Y", "Z"): (1, "X"),
    ("Z", "Y"): (3, "X"),
    ("Z", "X"): (1, "Y"),
    ("X", "Z"): (3, "Y"),
}

# Letter permutations that are proper rotations of the Pauli algebra
_CYCLIC = {("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")}

Letters = Tuple[Tuple[str, str], ...]
Symbols = Tuple[Tuple[str, int], ...]
Key = Tuple[Letters, Symbols]


class PauliTerm(BaseModel):
    """Complex coefficient times a Pauli string times commuting formal symbols."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coefficient: complex = 1.0 + 0.0j
    letters: Letters = ()
    symbols: Symbols = ()

    @field_validator("coefficient", mode="before")
    @classmethod
    def _as_complex(cls, value):
        return complex(value)

    @field_validator("letters", mode="before")
    @classmethod
    def _canonical_letters(cls, value):
        items = value.items() if isinstance(value, Mapping) else value
        letters: Dict[str, str] = {}
        for site, letter in items:
            letter = str(letter).upper()
            if letter == "I":
                continue
            if letter not in LETTERS:
                raise ValueError(f"unknown Pauli letter {letter!r} on site {site!r}")
            if site in letters:
                raise ValueError(f"site {site!r} appears twice")
            letters[str(site)] = letter
        return tuple(sorted(letters.items()))

    @field_validator("symbols", mode="before")
    @classmethod
    def _canonical_symbols(cls, value):
        items = value.items() if isinstance(value, Mapping) else value
        symbols: Dict[str, int] = {}
        for site, power in items:
            power = int(power)
            if power < 0:
                raise ValueError(f"negative symbol power on site {site!r}")
            if power:
                symbols[str(site)] = symbols.get(str(site), 0) + power
        return tuple(sorted(symbols.items()))

    @property
    def key(self) -> Key:
        return (self.letters, self.symbols)

    def sites(self) -> set:
        return {site for site, _ in self.letters} | {site for site, _ in self.symbols}

    def letter_on(self, site: str) -> Optional[str]:
        for label, letter in self.letters:
            if label == site:
                return letter
        return None

    def __str__(self) -> str:
        body = " ".join(f"{letter}_{site}" for site, letter in self.letters)
        body += "".join(f" S_{site}^{power}" for site, power in self.symbols)
        return f"({self.coefficient:.6g}) {body or '1'}"


def _term(coefficient: complex, key: Key) -> PauliTerm:
    # key is already canonical
    return PauliTerm.model_construct(coefficient=complex(coefficient), letters=key[0], symbols=key[1])


class OperatorSum(BaseModel):
    """Sum of PauliTerms; immutable."""

    model_config = ConfigDict(frozen=True)

    terms: Tuple[PauliTerm, ...] = ()

    @classmethod
    def from_map(cls, coefficients: Mapping[Key, complex]) -> "OperatorSum":
        return cls.model_construct(terms=tuple(_term(c, key) for key, c in coefficients.items()))

    @classmethod
    def identity(cls, coefficient: complex = 1.0) -> "OperatorSum":
        return cls.from_map({((), ()): coefficient})

    def to_map(self) -> Dict[Key, complex]:
        merged: Dict[Key, complex] = {}
        for term in self.terms:
            merged[term.key] = merged.get(term.key, 0.0) + term.coefficient
        return merged

    def sites(self) -> set:
        found = set()
        for term in self.terms:
            found |= term.sites()
        return found

    def coefficient_of(self, letters: Mapping[str, str] = None, symbols: Mapping[str, int] = None) -> complex:
        lookup = PauliTerm(letters=letters or {}, symbols=symbols or {})
        return self.to_map().get(lookup.key, 0.0j)

    def norm1(self) -> float:
        return float(sum(abs(c) for c in self.to_map().values()))

    def is_zero(self) -> bool:
        return len(simplify(self).terms) == 0

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        if isinstance(other, Number):
            other = OperatorSum.identity(other)
        return OperatorSum.model_construct(terms=self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self) -> "OperatorSum":
        return self.scaled(-1.0)

    def __sub__(self, other: "OperatorSum") -> "OperatorSum":
        if isinstance(other, Number):
            other = OperatorSum.identity(other)
        return self + other.scaled(-1.0)

    def __mul__(self, other: Union["OperatorSum", Number]) -> "OperatorSum":
        if isinstance(other, Number):
            return self.scaled(other)
        return multiply(self, other)

    def __rmul__(self, other: Number) -> "OperatorSum":
        return self.scaled(other)

    def __truediv__(self, other: Number) -> "OperatorSum":
        return self.scaled(1.0 / other)

    def scaled(self, factor: complex) -> "OperatorSum":
        return OperatorSum.model_construct(
            terms=tuple(_term(t.coefficient * factor, t.key) for t in self.terms)
        )

    def __str__(self) -> str:
        return " + ".join(str(t) for t in self.terms) if self.terms else "0"


def op(letters: Mapping[str, str] = None, coefficient: complex = 1.0, symbols: Mapping[str, int] = None) -> OperatorSum:
    """Single-term OperatorSum, e.g. op({"a": "X", "b": "Z"}, 0.5)."""
    return OperatorSum(terms=(PauliTerm(coefficient=coefficient, letters=letters or {}, symbols=symbols or {}),))


def _multiply_letters(left: Letters, right: Letters) -> Tuple[int, Letters]:
    merged = dict(left)
    power = 0
    for site, letter in right:
        current = merged.get(site)
        if current is None:
            merged[site] = letter
        elif current == letter:
            del merged[site]
        else:
            k, product = _PRODUCT[(current, letter)]
            power += k
            merged[site] = product
    return power % 4, tuple(sorted(merged.items()))


def _multiply_symbols(left: Symbols, right: Symbols) -> Symbols:
    if not right:
        return left
    if not left:
        return right
    merged = dict(left)
    for site, power in right:
        merged[site] = merged.get(site, 0) + power
    return tuple(sorted(merged.items()))


def _product_map(a: OperatorSum, b: OperatorSum) -> Dict[Key, complex]:
    acc: Dict[Key, complex] = {}
    for ta in a.terms:
        for tb in b.terms:
            power, letters = _multiply_letters(ta.letters, tb.letters)
            key = (letters, _multiply_symbols(ta.symbols, tb.symbols))
            acc[key] = acc.get(key, 0.0) + ta.coefficient * tb.coefficient * _PHASES[power]
    return acc


def simplify(h: OperatorSum, tolerance: Optional[float] = None) -> OperatorSum:
    """Merge equal strings, prune relative zeros, sort canonically."""
    tolerance = settings.PRUNE_TOLERANCE if tolerance is None else tolerance
    merged = h.to_map()
    if not merged:
        return OperatorSum()
    scale = max(abs(c) for c in merged.values())
    cutoff = tolerance * scale
    kept = {key: c for key, c in merged.items() if c != 0 and abs(c) > cutoff}
    return OperatorSum.from_map({key: kept[key] for key in sorted(kept)})


def multiply(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    return simplify(OperatorSum.from_map(_product_map(a, b)))


def commutator(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    ab = _product_map(a, b)
    for key, c in _product_map(b, a).items():
        ab[key] = ab.get(key, 0.0) - c
    return simplify(OperatorSum.from_map(ab))


def adjoint(h: OperatorSum) -> OperatorSum:
    # Pauli strings and formal symbols are Hermitian
    return OperatorSum.model_construct(
        terms=tuple(_term(t.coefficient.conjugate(), t.key) for t in h.terms)
    )


def is_hermitian(h: OperatorSum, tolerance: float = 1e-12) -> bool:
    merged = h.to_map()
    if not merged:
        return True
    scale = max(abs(c) for c in merged.values())
    return all(abs(c.imag) <= tolerance * scale for c in merged.values())


def relabel(h: OperatorSum, mapping: Mapping[str, str], sites: Optional[Iterable[str]] = None) -> OperatorSum:
    """Apply a cyclic letter permutation (a local basis rotation) on the given sites."""
    images = tuple(mapping.get(letter, letter) for letter in LETTERS)
    if images not in _CYCLIC:
        raise DomainError(f"letter map {dict(mapping)} is not a cyclic permutation of X, Y, Z")
    chosen = None if sites is None else set(sites)
    acc: Dict[Key, complex] = {}
    for term in h.terms:
        letters = tuple(sorted(
            (site, mapping.get(letter, letter) if chosen is None or site in chosen else letter)
            for site, letter in term.letters
        ))
        key = (letters, term.symbols)
        acc[key] = acc.get(key, 0.0) + term.coefficient
    return OperatorSum.from_map(acc)


def substitute_symbol(h: OperatorSum, site: str, value: float) -> OperatorSum:
    """Replace the formal symbol on `site` by a scalar value."""
    acc: Dict[Key, complex] = {}
    for term in h.terms:
        power = dict(term.symbols).get(site, 0)
        symbols = tuple((s, k) for s, k in term.symbols if s != site)
        key = (term.letters, symbols)
        acc[key] = acc.get(key, 0.0) + term.coefficient * value ** power
    return simplify(OperatorSum.from_map(acc))


def substitute_letters(h: OperatorSum, eigenvalues: Mapping[str, float], letter: str) -> OperatorSum:
    """Replace a conserved letter on each given site by its eigenvalue."""
    acc: Dict[Key, complex] = {}
    for term in h.terms:
        coefficient = term.coefficient
        letters = []
        for site, current in term.letters:
            if site not in eigenvalues:
                letters.append((site, current))
            elif current == letter:
                coefficient *= eigenvalues[site]
            else:
                raise DomainError(f"{current} on site {site!r} does not commute with the conserved {letter}")
        key = (tuple(letters), term.symbols)
        acc[key] = acc.get(key, 0.0) + coefficient
    return simplify(OperatorSum.from_map(acc))


def quantize_symbol(h: OperatorSum, site: str, letter: str = "X", scale: float = 0.5) -> OperatorSum:
    """Replace the formal symbol on `site` by scale times a Pauli letter on that site."""
    acc: Dict[Key, complex] = {}
    for term in h.terms:
        power = dict(term.symbols).get(site, 0)
        symbols = tuple((s, k) for s, k in term.symbols if s != site)
        phase, letters = 0, term.letters
        if power % 2:
            phase, letters = _multiply_letters(term.letters, ((site, letter),))
        key = (letters, symbols)
        acc[key] = acc.get(key, 0.0) + term.coefficient * scale ** power * _PHASES[phase]
    return simplify(OperatorSum.from_map(acc))


class DenseOperator(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    matrix: np.ndarray
    site_order: Tuple[str, ...]

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_residual(self) -> float:
        norm = np.linalg.norm(self.matrix)
        if norm == 0:
            return 0.0
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)) / norm)


def _parity(values: np.ndarray) -> np.ndarray:
    parity = np.zeros_like(values)
    while np.any(values):
        parity ^= values & 1
        values = values >> 1
    return parity


def to_dense(h: OperatorSum, site_order: Sequence[str], symbol_values: Optional[Mapping[str, float]] = None) -> DenseOperator:
    """Matrix of h; site_order[0] is the leftmost Kronecker factor, basis |0> = Z eigenvalue +1."""
    order = tuple(site_order)
    if len(set(order)) != len(order):
        raise UnknownSite(f"site order has duplicates: {order}")
    if len(order) > settings.DENSE_SITE_CAP:
        raise DimensionCap(f"{len(order)} sites exceed the dense cap of {settings.DENSE_SITE_CAP}")
    symbol_values = symbol_values or {}
    n = len(order)
    dim = 1 << n
    bit_of = {site: 1 << (n - 1 - pos) for pos, site in enumerate(order)}
    cols = np.arange(dim, dtype=np.int64)
    matrix = np.zeros((dim, dim), dtype=complex)
    for term in h.terms:
        coefficient = term.coefficient
        for site, power in term.symbols:
            if site not in symbol_values:
                raise UnresolvedSymbol(f"formal symbol on site {site!r} has no value")
            coefficient *= symbol_values[site] ** power
        flip, phase_mask, n_y = 0, 0, 0
        for site, letter in term.letters:
            if site not in bit_of:
                raise UnknownSite(f"site {site!r} not in site order {order}")
            bit = bit_of[site]
            if letter in ("X", "Y"):
                flip |= bit
            if letter in ("Y", "Z"):
                phase_mask |= bit
            if letter == "Y":
                n_y += 1
        signs = 1 - 2 * _parity(cols & phase_mask)
        matrix[cols ^ flip, cols] += coefficient * _PHASES[n_y % 4] * signs
    logger.debug(f"Densified {len(h.terms)} terms on {n} sites")
    return DenseOperator(matrix=matrix, site_order=order)


def dumps(h: OperatorSum) -> str:
    """One term per line: `re im site:letter ... site:S^k`."""
    lines: List[str] = []
    for term in h.terms:
        fields = [repr(term.coefficient.real), repr(term.coefficient.imag)]
        fields += [f"{site}:{letter}" for site, letter in term.letters]
        fields += [f"{site}:S^{power}" for site, power in term.symbols]
        lines.append(" ".join(fields))
    return "\n".join(lines) + ("\n" if lines else "")


def loads(text: str) -> OperatorSum:
    terms: List[PauliTerm] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            coefficient = complex(float(fields[0]), float(fields[1]))
            letters, symbols = [], []
            for item in fields[2:]:
                site, letter = item.rsplit(":", 1)
                if letter.startswith("S^"):
                    symbols.append((site, int(letter[2:])))
                else:
                    letters.append((site, letter))
            terms.append(PauliTerm(coefficient=coefficient, letters=letters, symbols=symbols))
        except (IndexError, ValueError) as e:
            raise DomainError(f"line {number}: cannot parse operator term {raw!r}: {str(e)}")
    return OperatorSum(terms=tuple(terms))
