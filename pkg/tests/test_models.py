import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from z2chain.errors import NonStabilized, NonStabilizedError, QuarticNotQuadratic
from z2chain.models import (
    ChainSpec,
    band_structure,
    bloch_matrix,
    build_bdg,
    build_double_sided,
    flux_relative_index,
    hs_norm_theta,
    kitaev_spec,
    kramers_wannier_check,
    theta_minus_index,
    two_sided_spec,
    xy_band_structure,
    xy_spec,
)


def test_spec_broadcast_and_defaults():
    s = ChainSpec(L=4, boundary="periodic", w=2.0, mu=0.5)
    assert s.n_bonds == 4
    assert np.all(s.delta_magnitude == 2.0)
    assert np.all(s.mu == 0.5)


@pytest.mark.parametrize("bad", [
    dict(L=0),
    dict(L=3, boundary="twisted"),
    dict(L=3, w=[1.0, 2.0, 3.0]),
    dict(L=1, boundary="periodic"),
])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        ChainSpec(**bad)


def test_spec_dict_round_trip():
    s = ChainSpec(L=5, boundary="flux", alpha=0.3, w=[1, 2, 3, 4, 5], mu=0.1)
    t = ChainSpec.from_dict(s.to_dict())
    assert np.allclose(build_bdg(t).H, build_bdg(s).H)
    u = ChainSpec.from_dict({"L": 5, "boundary": {"flux": 0.3}, "w": [1, 2, 3, 4, 5], "mu": 0.1})
    assert u.alpha == 0.3
    with pytest.raises(ValueError):
        ChainSpec.from_dict({"L": 3, "colour": 1})


def test_quartic_rejected_by_quadratic_builder():
    with pytest.raises(QuarticNotQuadratic):
        build_bdg(ChainSpec(L=3, quartic_K=1.0))


def test_antiperiodic_equals_flux_pi():
    a = build_bdg(kitaev_spec(5, mu=0.3, boundary="antiperiodic")).H
    f = build_bdg(kitaev_spec(5, mu=0.3, boundary="flux", alpha=np.pi)).H
    assert np.array_equal(a, f)


def test_flux_twist_entries():
    H = build_bdg(kitaev_spec(3, w=1.0, mu=0.0, delta=1.0, boundary="flux", alpha=np.pi / 2))
    # closing bond (site 3, site 1) with a_1 -> i a_1: hop -w conj(1) i = -i
    assert H.h[2, 0] == pytest.approx(-1j)
    assert H.h[0, 2] == pytest.approx(1j)


def test_two_cell_flux_is_gauge_trivial():
    # Twisting both bonds at site 1 is the gauge a_1 -> e^{i a} a_1 on the hopping,
    # so the spectrum is unchanged when Delta = 0.
    base = np.linalg.eigvalsh(build_bdg(kitaev_spec(5, mu=0.4, delta=0.0, boundary="periodic")).H)
    tw = np.linalg.eigvalsh(build_bdg(kitaev_spec(5, mu=0.4, delta=0.0, boundary="two_cell_flux", alpha=1.1)).H)
    assert np.allclose(base, tw)


def test_two_sided_spec_sites():
    s = two_sided_spec(3, boundary="flux", alpha=0.2)
    assert list(s.sites) == [-3, -2, -1, 0, 1, 2, 3]
    assert s.twisted_bonds() == {s.index_of(0): 0.2}
    H = build_double_sided(3, w=1.0, mu=0.5)
    assert H.L == 7


def test_bloch_matrix_and_bands():
    k = np.array([0.3])
    B = bloch_matrix(k, 1.0, 0.5, 0.7)[0]
    eps = 0.5 - 2 * np.cos(0.3)
    expected = np.sqrt(eps ** 2 + 4 * 0.49 * np.sin(0.3) ** 2)
    assert np.allclose(np.linalg.eigvalsh(B), [-expected, expected])


def test_band_structure_matches_periodic_chain():
    # The periodic chain of L sites samples the Bloch bands at k = 2 pi m / L.
    L = 16
    E_chain = np.sort(np.linalg.eigvalsh(build_bdg(kitaev_spec(L, w=1.0, mu=0.7, delta=0.4,
                                                                  boundary="periodic")).H))
    bs = band_structure(1.0, 0.7, 0.4, L)
    assert np.allclose(E_chain, np.sort(bs.bands.ravel()), atol=1e-10)


@pytest.mark.parametrize("rho", [0.25, 0.5, 1.0])
def test_xy_support(rho):
    lo, hi = xy_band_structure(0.0, rho).support()
    assert lo == pytest.approx(2 * rho, abs=1e-3)
    assert hi == pytest.approx(2.0, abs=1e-3)


def test_xy_ising_point_is_flat():
    bs = xy_band_structure(0.0, 1.0)
    assert np.allclose(np.abs(bs.bands), 2.0, atol=1e-12)
    assert np.array_equal(build_bdg(xy_spec(4, 0.0, 1.0)).H, build_bdg(kitaev_spec(4, mu=0.0)).H)


def test_theta_index_phases():
    for spec, sign in ((xy_spec(3, 0.0, 0.5), -1), (xy_spec(3, 3.0, 0.5), 1),
                       (kitaev_spec(3, mu=0.0), -1), (xy_spec(3, 1.0, 0.5), -1)):
        rep = theta_minus_index(spec, L_trunc=16)
        assert rep.sign == sign
        assert not rep.data["non_stabilized"]


def test_theta_index_kitaev_line_exact():
    rep = theta_minus_index(kitaev_spec(3, mu=0.0), L_trunc=12)
    r = rep.data["records"][0]
    assert r["dim_meet_per_cut"] == 1
    # Only the bond across the cut changes: a rank-2 difference of norm sqrt(2).
    assert r["hs_norm"] == pytest.approx(np.sqrt(2.0), rel=1e-9)


def test_theta_index_gapless_flagged():
    spec = xy_spec(3, 0.0, 0.0)
    with pytest.warns(NonStabilized):
        rep = theta_minus_index(spec, L_trunc=12)
    assert rep.data["non_stabilized"]
    with pytest.raises(NonStabilizedError):
        theta_minus_index(spec, L_trunc=12, strict=True)
    assert hs_norm_theta(spec, 48) > hs_norm_theta(spec, 24)


def test_flux_relative_index():
    top = flux_relative_index(1.0, 0.0, 8)
    assert top.sign == -1
    assert top.data["dim_meet"] == 1
    assert top.data["hs_norm"] == pytest.approx(np.sqrt(2.0), rel=1e-9)
    assert flux_relative_index(0.0, 1.0, 8).sign == 1


def test_kramers_wannier_map():
    out = kramers_wannier_check(8)
    assert out["interior_error"] < 1e-12
    assert out["full_error"] < 1e-12
    assert out["hs_ratio"] == pytest.approx(2.0, abs=0.05)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-1.5, 1.5), st.floats(0.1, 2.0))
def test_bloch_gap_closes_only_at_mu_2w(mu, delta, w):
    bs = band_structure(w, mu, delta, 512)
    # k = 0 and k = -pi are on the grid, where the gap is |mu -+ 2w|.
    assert bs.min_gap <= min(abs(mu - 2 * w), abs(mu + 2 * w)) + 1e-9
    assert bs.min_gap >= 0
