import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from z2chain.errors import NonHermitian, NonLocalizable, OddParity, WraparoundTerm
from z2chain.fock import InteractionTerm, assemble, chain_hamiltonian, fock_generators
from z2chain.jordan_wigner import (
    PauliString,
    SpinHamiltonian,
    ising_spin_hamiltonian,
    jw_forward,
    jw_inverse,
    majorana_normal_form,
    normal_forms_close,
    parity_string,
    pauli_matrix,
    spin_matrix,
    xy_spin_hamiltonian,
    xyz_spin_hamiltonian,
)
from z2chain.models import ChainSpec, kitaev_spec
from z2chain.repro import random_even_terms


def test_pauli_matrices_follow_bit_order():
    Z1 = pauli_matrix(2, {1: "Z"}).toarray()
    assert np.allclose(np.diag(Z1), [-1, 1, -1, 1])
    X, Y, Z = (pauli_matrix(1, {1: l}).toarray() for l in "XYZ")
    assert np.allclose(X @ Y, 1j * Z)


def test_pauli_string_letters_normalize():
    p = PauliString(2.0, {3: "X", 1: "Z", 2: "I"})
    assert p.letters == ((1, "Z"), (3, "X"))
    assert p.label() == "Z1 X3"


def test_number_operator_maps_to_z():
    H = jw_forward(3, [InteractionTerm.chem(2, 1.0), InteractionTerm.constant(-0.5)])
    assert H.as_dict() == {((2, "Z"),): 0.5}


def test_ising_dictionary():
    for mu in (0.0, 0.7, -1.3):
        spec = kitaev_spec(5, w=1.4, delta=1.4, mu=mu)
        assert jw_forward(spec).isclose(ising_spin_hamiltonian(5, 1.4, mu))


def test_xy_dictionary():
    spec = ChainSpec(L=4, w=1.0, delta_magnitude=0.3, mu=0.8)
    H = jw_forward(spec)
    assert H.isclose(xy_spin_hamiltonian(4, 0.8, 0.3))
    assert H.coefficient({1: "X", 2: "X"}) == pytest.approx(-0.65)
    assert H.coefficient({1: "Y", 2: "Y"}) == pytest.approx(-0.35)
    assert H.coefficient({2: "Z"}) == pytest.approx(0.4)


def test_xyz_dictionary():
    mu = [0.1, -0.4, 0.9, 0.2]
    spec = ChainSpec(L=4, w=1.2, delta_magnitude=0.5, mu=mu, quartic_K=0.7)
    assert jw_forward(spec).isclose(xyz_spin_hamiltonian(4, 1.2, 0.5, 0.7, mu))


def test_spin_and_fock_matrices_agree():
    spec = ChainSpec(L=5, w=1.2, delta_magnitude=0.5, mu=0.3, quartic_K=0.7)
    assert np.allclose(spin_matrix(jw_forward(spec)).toarray(), chain_hamiltonian(spec).dense())


def test_parity_string():
    for L in (1, 2, 5):
        assert np.allclose(spin_matrix(parity_string(L)).toarray(), fock_generators(L).P.toarray())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_forward_matrix_equality(seed, L):
    terms = random_even_terms(np.random.default_rng(seed), L)
    H = jw_forward(L, terms)
    F = assemble(L, terms).dense()
    S = spin_matrix(H).toarray()
    assert np.allclose(F, S, atol=1e-10)
    assert np.allclose(np.linalg.eigvalsh(F), np.linalg.eigvalsh(S), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_round_trip(seed, L):
    terms = random_even_terms(np.random.default_rng(seed), L)
    back = jw_inverse(jw_forward(L, terms))
    assert normal_forms_close(majorana_normal_form(terms), majorana_normal_form(back), atol=1e-10)
    assert jw_forward(L, back).isclose(jw_forward(L, terms), atol=1e-10)


def test_inverse_is_canonical():
    H = SpinHamiltonian(3, [PauliString(1.0, {1: "X", 2: "X"}), PauliString(0.5, {3: "Z"})])
    a = jw_inverse(H)
    b = jw_inverse(SpinHamiltonian.loads(H.dumps()))
    assert [(t.sites, t.coeff) for t in a] == [(t.sites, t.coeff) for t in b]


def test_text_round_trip():
    H = xyz_spin_hamiltonian(4, 1.2, 0.5, 0.7, 0.1 / 3)
    text = H.dumps()
    assert text.startswith("# L=4\n")
    assert SpinHamiltonian.loads(text).isclose(H, atol=0.0)
    assert SpinHamiltonian.loads("0.5\n1.0 X1 X2").L == 2
    with pytest.raises(ValueError):
        SpinHamiltonian.loads("abc X1")


def test_errors():
    with pytest.raises(WraparoundTerm):
        jw_forward(kitaev_spec(4, boundary="periodic"))
    with pytest.raises(WraparoundTerm):
        jw_forward(4, [InteractionTerm.hop(1, 4, 1.0), InteractionTerm.hop(4, 1, 1.0)])
    with pytest.raises(NonLocalizable):
        jw_inverse(SpinHamiltonian(2, [PauliString(1.0, {1: "X", 2: "Z"})]))
    with pytest.raises(OddParity):
        jw_forward(2, [InteractionTerm.raw_monomial([(1, True)], 1.0)])
    with pytest.raises(NonHermitian):
        SpinHamiltonian(1, [PauliString(1j, {1: "X"})])
