"""Chain builders, Bloch bands and truncated half-lattice indices.

Kitaev chain on sites ``s_1 < ... < s_N`` (``s_1 = first_site``)::

    H = sum_bonds [ -w_b (a_j* a_k + a_k* a_j) + Delta_b a_j a_k + conj(Delta_b) a_k* a_j* ]
        + sum_j mu_j (n_j - 1/2)
        + sum_bonds K (2 n_j - 1)(2 n_k - 1)

with ``Delta_b = delta_magnitude_b * exp(i delta_phase)``. Bond ``b`` joins
sites ``s_b`` and ``s_{b+1}``; closed boundaries add a closing bond
``(s_N, s_1)`` identified with ``a_{N+1} = a_1``. A twist by ``alpha`` on a
bond replaces ``a_s`` by ``exp(i alpha) a_s`` inside that bond's terms, where
``s`` is site 1. The flux bond is the closing bond for one-sided chains
(``first_site = 1``) and the bond 0-1 for two-sided chains, which are then
closed into a ring so the flux is the only defect.

The Bloch matrix of the translation-invariant chain is::

    H(k) = [[mu - 2 w cos k, -2i conj(Delta) sin k],
            [2i Delta sin k, -(mu - 2 w cos k)]]

so the bands are ``+-sqrt((mu - 2 w cos k)^2 + 4 |Delta|^2 sin^2 k)``. The XY
chain with parameters ``(mu, rho)`` is the case ``w = 1``, ``Delta = rho``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .bdg import BdGMatrix, flatten
from .errors import (
    GaplessHamiltonian,
    NonStabilized,
    NonStabilizedError,
    QuarticNotQuadratic,
)
from .report import Z2Report
from .skewlin import DEFAULT_TOL, SkewMatrix, kernel_dim

BOUNDARIES = ("open", "periodic", "antiperiodic", "flux", "two_cell_flux")


def _phase(alpha: float) -> complex:
    """``exp(i alpha)`` with rounding noise removed, so multiples of pi/2 are exact."""
    c, s = np.cos(alpha), np.sin(alpha)
    c = 0.0 if abs(c) < 1e-15 else c
    s = 0.0 if abs(s) < 1e-15 else s
    return complex(c, s)


def _vec(x, n: int, name: str) -> np.ndarray:
    a = np.atleast_1d(np.asarray(x, dtype=float))
    if a.size == 1 and n != 1:
        a = np.full(n, float(a[0]))
    if a.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got {a.size}")
    return a


@dataclass(frozen=True)
class ChainSpec:
    """Declarative description of a one-dimensional chain.

    Scalars are broadcast over bonds or sites. ``delta_magnitude`` defaults to
    ``w`` (the quantum Ising line ``Delta = w``).
    """

    L: int
    boundary: str = "open"
    w: np.ndarray = 1.0
    mu: np.ndarray = 0.0
    delta_phase: float = 0.0
    delta_magnitude: np.ndarray | None = None
    quartic_K: float = 0.0
    alpha: float = 0.0
    first_site: int = 1

    def __post_init__(self):
        if int(self.L) < 1:
            raise ValueError("L must be positive")
        object.__setattr__(self, "L", int(self.L))
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.closed and self.L < 2:
            raise ValueError("closed chains need at least 2 sites")
        if self.two_sided and not (self.first_site <= 0 < self.first_site + self.L - 1):
            raise ValueError("two-sided chains must contain sites 0 and 1")
        if self.boundary == "two_cell_flux" and self.L < 3:
            raise ValueError("two-cell flux needs at least 3 sites")
        nb = self.n_bonds
        w = _vec(self.w, nb, "w")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "mu", _vec(self.mu, self.L, "mu"))
        dm = w if self.delta_magnitude is None else _vec(self.delta_magnitude, nb, "delta_magnitude")
        object.__setattr__(self, "delta_magnitude", dm)
        for name in ("delta_phase", "quartic_K", "alpha"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def two_sided(self) -> bool:
        return self.first_site != 1

    @property
    def closed(self) -> bool:
        # Two-sided flux chains are closed into a ring around the flux bond.
        return self.boundary != "open"

    @property
    def n_bonds(self) -> int:
        return self.L if self.closed else self.L - 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.first_site, self.first_site + self.L)

    def index_of(self, site: int) -> int:
        """Zero-based matrix index of a lattice site."""
        i = site - self.first_site
        if not 0 <= i < self.L:
            raise ValueError(f"site {site} not in chain")
        return i

    def bonds(self):
        """Yield ``(j, k, w, Delta, phase_j, phase_k)`` with zero-based indices.

        ``phase_j``/``phase_k`` are the twists multiplying ``a_j``/``a_k``.
        """
        delta = self.delta_magnitude * _phase(self.delta_phase)
        twisted = self.twisted_bonds()
        one = self.index_of(1)
        for b in range(self.n_bonds):
            j, k = b, (b + 1) % self.L
            pj, pk = 1.0 + 0j, 1.0 + 0j
            if b in twisted:
                ph = _phase(twisted[b])
                if j == one:
                    pj = ph
                else:
                    pk = ph
            yield j, k, self.w[b], complex(delta[b]), pj, pk

    def twisted_bonds(self) -> dict:
        """Map bond index -> twist angle at site 1."""
        closing = self.L - 1
        if self.boundary == "open" or self.boundary == "periodic":
            return {}
        if self.boundary == "antiperiodic":
            if self.two_sided:
                return {self.index_of(0): np.pi}
            return {closing: np.pi}
        if self.boundary == "flux":
            if self.two_sided:
                return {self.index_of(0): self.alpha}
            return {closing: self.alpha}
        one = self.index_of(1)
        before = (one - 1) % self.L
        return {before: self.alpha, one: self.alpha}

    def with_(self, **kw) -> "ChainSpec":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = {
            "L": self.L,
            "boundary": self.boundary,
            "w": self.w.tolist(),
            "mu": self.mu.tolist(),
            "delta_phase": self.delta_phase,
            "delta_magnitude": self.delta_magnitude.tolist(),
            "quartic_K": self.quartic_K,
            "first_site": self.first_site,
        }
        if self.boundary in ("flux", "two_cell_flux"):
            d["alpha"] = self.alpha
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ChainSpec":
        d = dict(d)
        b = d.get("boundary", "open")
        if isinstance(b, dict):
            if len(b) != 1:
                raise ValueError("boundary object must have exactly one key")
            (name, alpha), = b.items()
            d["boundary"], d["alpha"] = name, alpha
        allowed = {"L", "boundary", "w", "mu", "delta_phase", "delta_magnitude",
                   "quartic_K", "alpha", "first_site"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown ChainSpec fields: {sorted(unknown)}")
        if "L" not in d:
            raise ValueError("ChainSpec requires L")
        return cls(**d)


def kitaev_spec(L, w=1.0, mu=0.0, delta=None, boundary="open", alpha=0.0, delta_phase=0.0):
    """Uniform Kitaev chain; ``delta`` defaults to ``w``."""
    return ChainSpec(L=L, boundary=boundary, w=w, mu=mu,
                     delta_magnitude=None if delta is None else delta,
                     delta_phase=delta_phase, alpha=alpha)


def xy_spec(L, mu, rho, boundary="open", first_site=1):
    """XY chain ``sum [-(hop) + rho (pair)] + mu sum (n - 1/2)``."""
    return ChainSpec(L=L, boundary=boundary, w=1.0, mu=mu, delta_magnitude=rho,
                     first_site=first_site)


def two_sided_spec(L_half, w=1.0, mu=0.0, delta=None, boundary="open", alpha=0.0, delta_phase=0.0):
    """Chain on sites ``-L_half .. L_half``."""
    return ChainSpec(L=2 * L_half + 1, boundary=boundary, w=w, mu=mu,
                     delta_magnitude=delta, delta_phase=delta_phase, alpha=alpha,
                     first_site=-L_half)


def bdg_blocks(spec: ChainSpec):
    """One-body block ``h`` and pairing block ``D`` of the quadratic part."""
    L = spec.L
    h = np.zeros((L, L), dtype=complex)
    D = np.zeros((L, L), dtype=complex)
    for j, k, w, delta, pj, pk in spec.bonds():
        t = np.conj(pj) * pk
        h[j, k] += -w * t
        h[k, j] += -w * np.conj(t)
        # Delta pj pk a_j a_k + h.c. with h.c. = conj(.) a_k* a_j*.
        g = np.conj(delta * pj * pk)
        D[k, j] += g
        D[j, k] -= g
    h[np.diag_indices(L)] += spec.mu
    return h, D


def build_bdg(spec: ChainSpec) -> BdGMatrix:
    """BdG matrix of the quadratic chain.

    Raises
    ------
    QuarticNotQuadratic
        If ``spec.quartic_K`` is nonzero.
    """
    if spec.quartic_K != 0.0:
        raise QuarticNotQuadratic("quartic_K != 0; use the Fock engine")
    h, D = bdg_blocks(spec)
    return BdGMatrix.from_blocks(h, D)


def build_double_sided(L_half: int, w, mu, boundary: str = "open", alpha: float = 0.0) -> BdGMatrix:
    """Double-sided Majorana chain ``sum w_j i b_{2j} b_{2j+1} + sum (mu_j/2) i b_{2j-1} b_{2j}``.

    This is the Kitaev chain with ``Delta_j = w_j`` on sites ``-L_half .. L_half``.
    """
    return build_bdg(two_sided_spec(L_half, w=w, mu=mu, boundary=boundary, alpha=alpha))


@dataclass
class BandStructure:
    """Eigenvalues of the 2x2 Bloch matrix on a momentum grid."""

    k_grid: np.ndarray
    bands: np.ndarray
    min_gap: float = field(init=False)

    def __post_init__(self):
        self.min_gap = float(np.abs(self.bands).min())

    def support(self) -> tuple[float, float]:
        """Range ``[min, max]`` of the upper band."""
        up = self.bands[:, 1]
        return float(up.min()), float(up.max())


def bloch_matrix(k, w: float, mu: float, delta: complex) -> np.ndarray:
    """Stack of Bloch BdG matrices, shape ``(len(k), 2, 2)``."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    eps = mu - 2.0 * w * np.cos(k)
    off = -2j * np.conj(delta) * np.sin(k)
    out = np.empty((k.size, 2, 2), dtype=complex)
    out[:, 0, 0] = eps
    out[:, 1, 1] = -eps
    out[:, 0, 1] = off
    out[:, 1, 0] = np.conj(off)
    return out


def band_structure(w: float, mu: float, delta: complex, k_points: int = 2048) -> BandStructure:
    """Bloch bands of the translation-invariant Kitaev chain on ``[-pi, pi)``."""
    if k_points < 1:
        raise ValueError("k_points must be positive")
    k = -np.pi + 2.0 * np.pi * np.arange(k_points) / k_points
    bands = np.linalg.eigvalsh(bloch_matrix(k, w, mu, delta))
    return BandStructure(k, bands)


def xy_band_structure(mu: float, rho: float, k_points: int = 2048) -> BandStructure:
    return band_structure(1.0, mu, rho, k_points)


def _spectral_projection(H: BdGMatrix) -> np.ndarray:
    lam, U = np.linalg.eigh(H.H)
    up = U[:, lam > 0]
    return up @ up.conj().T


def _theta_ring(spec: ChainSpec, L_trunc: int, tol: float, kernel_tol: float = 1e-4):
    ring = ChainSpec(L=2 * L_trunc + 1, boundary="periodic", w=spec.w[0], mu=spec.mu[0],
                     delta_phase=spec.delta_phase, delta_magnitude=spec.delta_magnitude[0],
                     first_site=-L_trunc)
    H = build_bdg(ring)
    J = flatten(H, tol).J
    theta = np.where(ring.sites <= 0, -1.0, 1.0)
    T = np.concatenate([theta, theta])
    Jt = T[:, None] * J * T[None, :]
    k = kernel_dim(SkewMatrix(J + Jt), kernel_tol)
    E = _spectral_projection(H)
    Et = T[:, None] * E * T[None, :]
    # The ring has two sign changes of theta; both cuts are related by translation.
    hs = float(np.linalg.norm(E - Et) / np.sqrt(2.0))
    return k, hs


def theta_minus_index(spec: ChainSpec, L_trunc: int = 24, tol: float = DEFAULT_TOL,
                      hs_rtol: float = 1e-3, strict: bool = False,
                      kernel_tol: float = 1e-4) -> Z2Report:
    """Half-lattice flip index ``(-1)^dim(E ^ (1 - theta E theta))`` per cut.

    The couplings of ``spec`` at its first bond and site are placed on a ring of
    ``2 L_trunc + 1`` sites ``-L_trunc .. L_trunc``. ``theta`` is ``-1`` on
    sites ``<= 0`` and ``+1`` on sites ``>= 1``, so it changes sign at the cut
    0|1 and at the closing bond. On an open truncation an edge zero mode
    would make the chain gapless in the topological phase, which is why a
    ring is used. The per-cut count is half the ring count.

    Away from the Kitaev line the kernel vectors of ``J + theta J theta`` sit
    at the two cuts and hybridize across the ring, which splits them by
    ``exp(-L_trunc / xi)``. They are therefore counted with the looser
    relative threshold ``kernel_tol``; ``tol`` is used for the gap check.

    The computation is repeated at ``L_trunc + 4``. The result is flagged
    as not stabilized, with a :class:`NonStabilized` warning, if the sign
    changes or the per-cut Hilbert-Schmidt norm of ``E - theta E theta``
    changes by more than ``hs_rtol`` (relative).

    Raises
    ------
    GaplessHamiltonian
        If the ring Hamiltonian has a zero mode.
    NonStabilizedError
        Instead of the warning when ``strict`` is True.
    """
    records = []
    for Lt in (L_trunc, L_trunc + 4):
        k, hs = _theta_ring(spec, Lt, tol, kernel_tol)
        if k % 4:
            raise GaplessHamiltonian("the two cuts of the ring disagree; index undefined")
        per_cut = k // 4
        records.append({"L_trunc": Lt, "ring_kernel_dim": k, "dim_meet_per_cut": per_cut,
                        "sign": -1 if per_cut % 2 else 1, "hs_norm": hs})
    s0, s1 = records[0]["sign"], records[1]["sign"]
    h0, h1 = records[0]["hs_norm"], records[1]["hs_norm"]
    drift = abs(h1 - h0) / max(h0, 1e-300)
    non_stab = (s0 != s1) or drift > hs_rtol
    if non_stab:
        msg = f"theta index not stabilized: signs {s0},{s1}, HS drift {drift:.3e}"
        if strict:
            raise NonStabilizedError(msg)
        warnings.warn(msg, NonStabilized, stacklevel=2)
    return Z2Report(
        sign=s0,
        kernel_counts=[records[0]["ring_kernel_dim"] // 2],
        tol=kernel_tol,
        data={"records": records, "non_stabilized": non_stab, "hs_norm": h0,
              "hs_relative_drift": drift},
    )


def hs_norm_theta(spec: ChainSpec, L_trunc: int, tol: float = DEFAULT_TOL) -> float:
    """Per-cut Hilbert-Schmidt norm of ``E - theta E theta`` at one truncation size."""
    return _theta_ring(spec, L_trunc, tol)[1]


def flux_relative_index(w: float, mu: float, L_half: int, delta=None, tol: float = 1e-6) -> Z2Report:
    """Relative index of flux 0 and flux pi on the two-sided ring ``-L_half .. L_half``."""
    from .z2flow import relative_index

    s0 = two_sided_spec(L_half, w=w, mu=mu, delta=delta, boundary="flux", alpha=0.0)
    s1 = s0.with_(alpha=np.pi)
    return relative_index(build_bdg(s0), build_bdg(s1), tol)


def shift_matrix(n: int) -> np.ndarray:
    """Truncated unilateral shift ``S e_j = e_{j+1}``."""
    return np.diag(np.ones(n - 1), -1)


def kramers_wannier_check(L_trunc: int, mu: float = 1.0, W: np.ndarray | None = None) -> dict:
    """Truncated Bogoliubov map from the trivial to the topological chain.

    Builds ``W = (i/2) [[1+S, i(1-S)], [i(1-S), -(1+S)]]`` on sites
    ``-L_trunc .. L_trunc`` (or uses the supplied ``W``) and compares
    ``W diag(-mu, mu) W*`` with the chain of ``Delta = -i w``, ``w = mu/2``,
    zero chemical potential, whose BdG matrix is
    ``[[-w(S+S*), -iw(S*-S)], [-iw(S*-S), w(S+S*)]]``. Reports the maximal
    deviation on interior sites and the Hilbert-Schmidt norms of the
    commutator ``[-i sigma_3, W]`` at ``L_trunc`` and ``4 L_trunc``.
    """
    def make_w(Lt):
        n = 2 * Lt + 1
        S = shift_matrix(n)
        I = np.eye(n)
        return 0.5j * np.block([[I + S, 1j * (I - S)], [1j * (I - S), -(I + S)]])

    def hs_comm(Wm):
        n = Wm.shape[0] // 2
        s3 = np.concatenate([-1j * np.ones(n), 1j * np.ones(n)])
        return float(np.linalg.norm(s3[:, None] * Wm - Wm * s3[None, :]))

    Wm = make_w(L_trunc) if W is None else np.asarray(W)
    n = Wm.shape[0] // 2
    spec_triv = ChainSpec(L=n, w=0.0, mu=-mu, first_site=-(n // 2))
    spec_top = ChainSpec(L=n, w=mu / 2.0, mu=0.0, delta_phase=-np.pi / 2, first_site=-(n // 2))
    mapped = Wm @ build_bdg(spec_triv).H @ Wm.conj().T
    target = build_bdg(spec_top).H
    inner = np.r_[1:n - 1, n + 1:2 * n - 1]
    diff = mapped - target
    out = {
        "interior_error": float(np.abs(diff[np.ix_(inner, inner)]).max(initial=0.0)),
        "full_error": float(np.abs(diff).max()),
        "hs_commutator": hs_comm(Wm),
    }
    if W is None:
        out["hs_commutator_4L"] = hs_comm(make_w(4 * L_trunc))
        out["hs_ratio"] = out["hs_commutator_4L"] / out["hs_commutator"]
    return out
