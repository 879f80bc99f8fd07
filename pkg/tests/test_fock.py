from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from z2chain.bdg import bogoliubov_diagonalize, majorana_form
from z2chain.errors import NonHermitian, OddParity, ParameterOutOfDomain
from z2chain.fock import (
    InteractionTerm,
    assemble,
    bond_chain_gap,
    boundary_vanishing,
    chain_hamiltonian,
    closed_boundary_vectors,
    flux_sweep,
    fock_generators,
    ground_space,
    kst_build_and_verify,
    kst_mu_e,
    kst_path_check,
    kst_spec,
    kst_states,
    kst_three_stage_parities,
    martingale_identities,
    open_kitaev_basis,
    parity_from_majoranas,
)
from z2chain.models import ChainSpec, build_bdg, kitaev_spec
from z2chain.repro import additive_spectrum, random_quadratic_spec
from z2chain.skewlin import kernel_dim


def test_annihilator_matrix_elements():
    # a_2 on |site1, site2 occupied> = |3>: one occupied site below, sign -1.
    a = fock_generators(2).a
    assert a[1][1, 3] == -1
    assert a[0][2, 3] == 1
    assert a[0][0, 1] == 1


def test_car_and_majoranas():
    g = fock_generators(4, 0.3)
    I = np.eye(16)
    for m in range(8):
        for n in range(8):
            ac = (g.b[m] @ g.b[n] + g.b[n] @ g.b[m]).toarray()
            assert np.allclose(ac, 2 * I if m == n else 0 * I)
    assert np.allclose(parity_from_majoranas(4).toarray(), g.P.toarray())


def test_fock_size_limits():
    with pytest.raises(ValueError):
        fock_generators(15)


def test_zero_terms_give_zero_operator():
    assert assemble(3, []).matrix.nnz == 0


def test_assembly_errors():
    with pytest.raises(NonHermitian):
        assemble(2, [InteractionTerm.raw_monomial([(1, True), (2, False)], 1.0)])
    with pytest.raises(OddParity):
        assemble(2, [InteractionTerm.raw_monomial([(1, True)], 1.0),
                     InteractionTerm.raw_monomial([(1, False)], 1.0)])


def test_open_kitaev_l3_spectrum():
    # w sum_j (-1)^(i_j + 1) over i in {0,1}^2, times the boundary pair.
    ev = np.linalg.eigvalsh(chain_hamiltonian(kitaev_spec(3, mu=0.0)).dense())
    vals, counts = np.unique(np.round(ev, 10), return_counts=True)
    assert list(vals) == [-2.0, 0.0, 2.0]
    assert list(counts) == [2, 4, 2]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_quadratic_consistency(seed):
    spec = random_quadratic_spec(np.random.default_rng(seed))
    _, E = bogoliubov_diagonalize(build_bdg(spec))
    ed = np.linalg.eigvalsh(chain_hamiltonian(spec).dense())
    assert np.allclose(ed, additive_spectrum(E), atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_parity_superselection(seed):
    spec = random_quadratic_spec(np.random.default_rng(seed), L=5).with_(quartic_K=0.7)
    H = chain_hamiltonian(spec).matrix
    P = fock_generators(5).P
    C = (H @ P - P @ H).tocoo()
    assert C.nnz == 0 or np.abs(C.data).max() == 0


@pytest.mark.parametrize("spec", [
    kitaev_spec(4, mu=0.0),
    ChainSpec(L=4, w=[1.0, 0.0, 1.0], mu=0.0),
    ChainSpec(L=3, w=0.0, mu=0.0),
    kitaev_spec(5, mu=1.0, delta=0.5),
])
def test_kernel_relation(spec):
    k = kernel_dim(majorana_form(build_bdg(spec)))
    deg = ground_space(chain_hamiltonian(spec)).degeneracy
    assert 2 ** (k // 2) == deg


@pytest.mark.parametrize("L", [2, 4, 6, 9])
def test_open_kitaev_ground_space(L):
    gs = ground_space(chain_hamiltonian(kitaev_spec(L, mu=0.0)))
    assert gs.degeneracy == 2
    assert sorted(gs.parities) == [-1, 1]
    assert gs.gap == pytest.approx(2.0, abs=1e-9)
    assert gs.E0 == pytest.approx(-(L - 1), abs=1e-9)


def test_iterative_solver_agrees_with_dense():
    spec = kitaev_spec(11, mu=0.3, delta=0.6, boundary="periodic")
    gs = ground_space(chain_hamiltonian(spec))
    _, E = bogoliubov_diagonalize(build_bdg(spec))
    assert gs.E0 == pytest.approx(-0.5 * E.sum(), abs=1e-9)
    assert gs.degeneracy == 1


@pytest.mark.parametrize("boundary,parity", [("periodic", -1), ("antiperiodic", 1)])
def test_closed_kitaev_ground_parity(boundary, parity):
    gs = ground_space(chain_hamiltonian(kitaev_spec(6, mu=0.0, boundary=boundary)))
    assert gs.degeneracy == 1 and gs.parities == [parity]


def test_open_basis_eigenvectors():
    for L in (3, 4, 5):
        H = chain_hamiltonian(kitaev_spec(L, mu=0.0)).dense()
        B = open_kitaev_basis(L)
        M = np.array(list(B.values())).T
        assert np.allclose(M.conj().T @ M, np.eye(2 ** L), atol=1e-12)
        for key, v in B.items():
            e = sum((-1) ** (i + 1) for i in key[1:])
            assert np.allclose(H @ v, e * v, atol=1e-12)
    with pytest.raises(ValueError):
        open_kitaev_basis(7)


@pytest.mark.parametrize("L", [3, 4, 5, 6])
def test_boundary_mode_branch(L):
    for occ in product((0, 1), repeat=L - 1):
        kill, create = boundary_vanishing(L, occ)
        if (L + sum(occ)) % 2 == 0:
            assert kill < 1e-10 and create == pytest.approx(1.0)
        else:
            assert create < 1e-10 and kill == pytest.approx(1.0)


@pytest.mark.parametrize("L", [3, 4, 5, 6])
def test_closed_boundary_vectors(L):
    norms = closed_boundary_vectors(L)
    assert (norms[1] < 1e-12) == (L % 2 == 0)
    assert (norms[-1] < 1e-12) == (L % 2 == 1)


def test_flux_sweep_quadratic():
    spec = kitaev_spec(6, mu=0.0, boundary="flux")
    sweep = flux_sweep(spec, [0.0, np.pi / 2, np.pi])
    # Level crossing at pi/2: the ground space is a mixed-parity doublet.
    assert sweep.reports[1].degeneracy == 2 and sweep.reports[1].parity0 == 0
    assert sweep.reports[0].parity0 != sweep.reports[2].parity0
    two = flux_sweep(kitaev_spec(6, mu=0.0, boundary="two_cell_flux"), np.linspace(0, np.pi, 21))
    assert two.gaps.min() > 0.5 * two.gaps[0]
    with pytest.raises(ValueError):
        flux_sweep(kitaev_spec(4), [0.0])


def test_mu_e_closed_form():
    assert kst_mu_e(1.0, 0.5, 1.0) == pytest.approx(np.sqrt(35.0), rel=1e-15)
    assert kst_mu_e(1.0, 0.0, 0.0) == pytest.approx(2.0)
    with pytest.raises(ParameterOutOfDomain):
        kst_mu_e(1.0, 3.0, 0.0)


def test_kst_quadratic_limit():
    # K = 0, Delta = 0: mu_e = 2w and the interacting chain is quadratic.
    spec = kst_spec(5, 1.0, 0.0, 0.0)
    _, E = bogoliubov_diagonalize(build_bdg(spec))
    gs = ground_space(chain_hamiltonian(spec))
    assert gs.E0 == pytest.approx(-0.5 * E.sum(), abs=1e-9)


@pytest.mark.parametrize("w,delta,K", [(1.0, 0.5, 1.0), (1.0, 0.0, 0.5), (2.0, 1.0, 1.0), (1.0, -0.6, 0.5)])
def test_kst_verify(w, delta, K):
    r = kst_build_and_verify(5, w, delta, K)
    assert r.ok()


def test_kst_parity_exchange():
    st_ = kst_states(4, 1.0, 0.5, 1.0)
    P = fock_generators(4).P
    assert np.allclose(P @ st_["plus"], st_["minus"])


def test_kst_path():
    r = kst_path_check(6, 1.0)
    assert r.ok()
    assert min(r.gaps) >= r.gaps[0] - 1e-9
    assert kst_path_check(6, 1.0, alpha=np.pi).ok()
    assert kst_three_stage_parities(6, 1.0) == [-1, -1, 1, 1]


def test_kst_domain():
    with pytest.raises(ParameterOutOfDomain):
        kst_build_and_verify(13, 1.0, 0.5, 1.0)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 6), st.booleans())
def test_martingale_identities(seed, n_sites, closed):
    rng = np.random.default_rng(seed)
    nb = n_sites if closed else n_sites - 1
    w = rng.choice([-1.0, 1.0], nb) * rng.uniform(0.3, 2.0, nb)
    r = martingale_identities(w, closed=closed)
    assert r.ok(1e-10)
    assert r.gap == pytest.approx(2 * np.abs(w).min(), abs=1e-9)


def test_bond_chain_gap_constant():
    gaps = [bond_chain_gap(np.full(n - 1, 0.8)) for n in range(3, 11)]
    assert np.allclose(gaps, 1.6, atol=1e-9)
