import numpy as np
import pytest

from errors import DimensionCap, DomainError, UnknownSite, UnresolvedSymbol
from pauli_core import (
    OperatorSum, adjoint, commutator, dumps, is_hermitian, loads, multiply, op, quantize_symbol, relabel,
    simplify, substitute_letters, substitute_symbol, to_dense,
)
from sw_engine import gadget_hamiltonian

IDENTITY_KEY = ((), ())


def random_sum(rng, sites, n_terms=5):
    h = OperatorSum()
    for _ in range(n_terms):
        letters = {s: rng.choice(["I", "X", "Y", "Z"]) for s in sites}
        h = h + op(letters, complex(rng.normal(), rng.normal()))
    return h


def test_square_of_pauli_is_identity():
    assert multiply(op({"a": "X"}), op({"a": "X"})).to_map() == {IDENTITY_KEY: 1 + 0j}


def test_xy_gives_i_z():
    product = multiply(op({"a": "X"}), op({"a": "Y"}))
    assert product.to_map() == {((("a", "Z"),), ()): 1j}


def test_product_phase_across_sites():
    product = op({"a": "X", "b": "X"}, 2.0) * op({"b": "Z"}, 3.0)
    assert product.coefficient_of({"a": "X", "b": "Y"}) == pytest.approx(-6j)
    assert len(product) == 1


def test_commutator_examples():
    assert commutator(op({"a": "X"}), op({"a": "X"})).is_zero()
    assert commutator(op({"a": "X"}), op({"a": "Z"})).coefficient_of({"a": "Y"}) == pytest.approx(-2j)
    assert commutator(op({"a": "X", "b": "X"}), op({"a": "Z", "b": "Z"})).is_zero()


def test_commutator_is_antisymmetric():
    rng = np.random.default_rng(1)
    a, b = random_sum(rng, "abc"), random_sum(rng, "abc")
    assert simplify(commutator(a, b) + commutator(b, a)).is_zero()


def test_single_z_is_diag():
    np.testing.assert_array_equal(to_dense(op({"a": "Z"}), ["a"]).matrix, np.diag([1.0, -1.0]))


def test_identity_densifies_to_identity():
    np.testing.assert_array_equal(to_dense(OperatorSum.identity(), ["a", "b"]).matrix, np.eye(4))


def test_y_matrix_and_tensor_order():
    y = to_dense(op({"a": "Y"}), ["a"]).matrix
    np.testing.assert_allclose(y, np.array([[0, -1j], [1j, 0]]))
    zx = to_dense(op({"a": "Z", "b": "X"}), ["a", "b"]).matrix
    np.testing.assert_allclose(zx, np.kron(np.diag([1, -1]), np.array([[0, 1], [1, 0]])))


def test_gadget_hamiltonian_is_hermitian(small_gadget):
    s = small_gadget.sites
    dense = to_dense(gadget_hamiltonian(small_gadget), s.code + s.mediators, symbol_values={s.p: 0.5})
    assert dense.dimension == 128
    assert dense.hermiticity_residual() < 1e-12


def test_dense_product_matches_matrix_product():
    rng = np.random.default_rng(7)
    order = ["a", "b", "c", "d"]
    for _ in range(5):
        a, b = random_sum(rng, "abcd"), random_sum(rng, "abcd")
        expected = to_dense(a, order).matrix @ to_dense(b, order).matrix
        np.testing.assert_allclose(to_dense(multiply(a, b), order).matrix, expected, atol=1e-12)


def test_simplify_is_idempotent_and_preserves_dense():
    rng = np.random.default_rng(3)
    h = random_sum(rng, "abc", n_terms=12)
    once = simplify(h)
    assert simplify(once).to_map() == once.to_map()
    np.testing.assert_allclose(to_dense(once, "abc").matrix, to_dense(h, "abc").matrix, atol=1e-12)


def test_simplify_prunes_relative_zeros():
    h = op({"a": "X"}, 1.0) + op({"b": "Z"}, 1e-16) + op({"a": "X"}, -1.0) + op({"c": "Y"}, 2.0)
    assert simplify(h).to_map() == {((("c", "Y"),), ()): 2 + 0j}


def test_double_adjoint_and_hermiticity():
    rng = np.random.default_rng(5)
    h = random_sum(rng, "ab")
    assert adjoint(adjoint(h)).to_map() == h.to_map()
    assert is_hermitian(op({"a": "X"}, 0.3) + op({"b": "Z"}, -1.0))
    assert not is_hermitian(op({"a": "X"}, 0.3j))


def test_to_dense_errors():
    with pytest.raises(UnknownSite):
        to_dense(op({"z": "X"}), ["a"])
    with pytest.raises(DimensionCap):
        to_dense(OperatorSum.identity(), [f"s{i}" for i in range(15)])
    with pytest.raises(UnresolvedSymbol):
        to_dense(op({"a": "X"}, symbols={"p": 1}), ["a"])


def test_symbols_substitute_and_quantize():
    h = op({"u": "Z"}, 0.2, {"p": 1}) + op({"a": "X"}, 1.0)
    assert substitute_symbol(h, "p", -0.5).coefficient_of({"u": "Z"}) == pytest.approx(-0.1)
    quantized = quantize_symbol(h, "p", "X", scale=0.5)
    assert quantized.coefficient_of({"u": "Z", "p": "X"}) == pytest.approx(0.1)


def test_substitute_letters_rejects_non_commuting():
    h = op({"a": "X", "f": "X"}, 0.1)
    assert substitute_letters(h, {"a": -1}, "X").coefficient_of({"f": "X"}) == pytest.approx(-0.1)
    with pytest.raises(DomainError):
        substitute_letters(op({"a": "Z"}), {"a": 1}, "X")


def test_relabel_cyclic_only():
    h = relabel(op({"a": "X", "f": "X"}), {"X": "Z", "Z": "Y", "Y": "X"}, sites=["a"])
    assert h.coefficient_of({"a": "Z", "f": "X"}) == 1
    with pytest.raises(DomainError):
        relabel(op({"a": "X"}), {"X": "Z", "Z": "X"})


def test_text_format():
    h = op({"a": "X", "b": "Y"}, 0.5 - 0.25j) + op({"u": "Z"}, 2.0, {"p": 1})
    text = dumps(h)
    assert text.splitlines()[0] == "0.5 -0.25 a:X b:Y"
    assert loads(text).to_map() == h.to_map()
    with pytest.raises(DomainError, match="line 2"):
        loads("1.0 0.0 a:X\n1.0 a:X\n")
