import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from z2chain.bdg import flatten, majorana_form
from z2chain.errors import GaplessEndpoint, PartitionFailure
from z2chain.models import build_bdg, kitaev_spec
from z2chain.skewlin import SkewMatrix, pfaffian
from z2chain.z2flow import HamiltonianPath, ind2, relative_index, sf2_endpoints, sf2_path


def flux_path(L, boundary="flux", n=201, **kw):
    return HamiltonianPath(lambda a: build_bdg(kitaev_spec(L, mu=0.0, boundary=boundary, alpha=a, **kw)),
                           grid=np.linspace(0.0, np.pi, n))


def random_structure(seed, L):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((2 * L, 2 * L)))
    I, Z = np.eye(L), np.zeros((L, L))
    return q @ np.block([[Z, I], [-I, Z]]) @ q.T


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_ind2_basic_identities(seed, L):
    J = random_structure(seed, L)
    assert ind2(J, J).sign == 1
    assert ind2(J, J).kernel_counts == [0]
    # J + (-J) = 0 has full kernel 2L.
    assert ind2(J, -J).sign == (-1) ** L


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_ind2_equals_pfaffian_sign_product(s0, s1, L):
    J0, J1 = random_structure(s0, L), random_structure(s1, L)
    assert ind2(J0, J1).sign == int(np.sign(pfaffian(J0) * pfaffian(J1)))


def test_ind2_dimension_mismatch():
    with pytest.raises(ValueError):
        ind2(np.zeros((2, 2)), np.zeros((4, 4)))


@pytest.mark.parametrize("L", [4, 6, 8])
def test_single_bond_flux_flow(L):
    path = flux_path(L)
    rep = sf2_path(path)
    assert rep.sign == -1
    assert len(rep.crossings) == 1
    assert rep.crossings[0] == pytest.approx(np.pi / 2, abs=1e-6)
    assert sf2_endpoints(path.skew(0.0), path.skew(np.pi)) == -1


@pytest.mark.parametrize("L", [4, 6, 8])
def test_two_cell_flux_flow(L):
    path = flux_path(L, "two_cell_flux")
    rep = sf2_path(path)
    assert rep.sign == 1
    assert rep.crossings == []
    assert sf2_endpoints(path.skew(0.0), path.skew(np.pi)) == 1


def test_coarse_grid_still_finds_flow():
    rep = sf2_path(flux_path(6, n=4))
    assert rep.sign == -1
    assert rep.crossings and abs(rep.crossings[0] - np.pi / 2) < 1e-3


def test_gapped_path_has_trivial_flow():
    path = HamiltonianPath(lambda t: build_bdg(kitaev_spec(5, mu=3.0 + t, boundary="periodic")))
    rep = sf2_path(path)
    assert rep.sign == 1 and rep.crossings == []


def test_gapless_endpoint_rejected():
    with pytest.raises(GaplessEndpoint):
        flux_path(4, n=3).__class__(lambda a: build_bdg(kitaev_spec(4, mu=0.0, boundary="flux", alpha=a)),
                                    grid=np.linspace(0.0, np.pi / 2, 5))
    with pytest.raises(GaplessEndpoint):
        sf2_endpoints(majorana_form(build_bdg(kitaev_spec(4, mu=0.0))), np.eye(8)[::-1] - np.eye(8)[::-1].T)


def test_partition_failure_on_discontinuous_path():
    a0 = majorana_form(build_bdg(kitaev_spec(4, mu=0.0, boundary="periodic")))
    a1 = majorana_form(build_bdg(kitaev_spec(4, mu=0.0, boundary="antiperiodic")))
    path = HamiltonianPath(lambda t: a0 if t < 0.5 else a1, grid=np.array([0.0, 1.0]))
    with pytest.raises(PartitionFailure):
        sf2_path(path, max_refine=8)


def test_relative_index_self_and_gapless():
    H = build_bdg(kitaev_spec(5, mu=0.5, boundary="periodic"))
    rep = relative_index(H, H)
    assert rep.sign == 1 and rep.data["dim_meet"] == 0 and rep.data["hs_norm"] == pytest.approx(0.0, abs=1e-10)


def test_sf2_matches_flattened_ind2_for_gapped_endpoints():
    A0 = majorana_form(build_bdg(kitaev_spec(6, mu=0.0, boundary="periodic")))
    A1 = majorana_form(build_bdg(kitaev_spec(6, mu=0.0, boundary="antiperiodic")))
    assert sf2_endpoints(A0, A1) == ind2(flatten(A0), flatten(A1)).sign
    assert isinstance(A0, SkewMatrix)
