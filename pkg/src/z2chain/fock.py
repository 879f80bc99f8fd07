"""Exact diagonalization on the fermionic Fock space.

Basis: occupation states ``|s>`` with site ``j`` (1-based) stored in bit
``j - 1``, so site 1 is the least significant bit. ``a_j`` carries the sign
``(-1)^(number of occupied sites below j)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NonHermitian, OddParity, ParameterOutOfDomain
from .models import ChainSpec

MAX_SITES = 14
DENSE_MAX_SITES = 10


# ---------------------------------------------------------------- generators

@dataclass(frozen=True)
class FockGenerators:
    """Sparse generators on ``2^L`` states.

    ``b`` is indexed so that ``b[m - 1]`` is the Majorana ``b_m``, m = 1..2L.
    """

    L: int
    a: tuple
    adag: tuple
    b: tuple
    N: sp.csr_matrix
    P: sp.csr_matrix


def _check_L(L: int):
    if not 1 <= L <= MAX_SITES:
        raise ValueError(f"L must be in 1..{MAX_SITES}, got {L}")


@lru_cache(maxsize=None)
def _annihilators(L: int) -> tuple:
    dim = 1 << L
    states = np.arange(dim, dtype=np.int64)
    out = []
    for j in range(L):
        occ = (states >> j) & 1 == 1
        src = states[occ]
        below = np.bitwise_count(src & ((1 << j) - 1)).astype(np.int64)
        vals = np.where(below % 2, -1.0, 1.0)
        m = sp.csr_matrix((vals.astype(complex), (src ^ (1 << j), src)), shape=(dim, dim))
        out.append(m)
    return tuple(out)


def _anticomm(x, y):
    return x @ y + y @ x


@lru_cache(maxsize=None)
def fock_generators(L: int, theta: float = 0.0) -> FockGenerators:
    """Creation, annihilation, Majorana, number and parity operators.

    CAR relations are verified exactly for ``L <= 6`` and on a few pairs for
    larger ``L``.
    """
    _check_L(L)
    a = _annihilators(L)
    adag = tuple(m.conj().T.tocsr() for m in a)
    e = np.exp(0.5j * theta)
    b = []
    for j in range(L):
        b.append((e * a[j] + np.conj(e) * adag[j]).tocsr())
        b.append((-1j * e * a[j] + 1j * np.conj(e) * adag[j]).tocsr())
    dim = 1 << L
    counts = np.bitwise_count(np.arange(dim, dtype=np.int64)).astype(float)
    N = sp.diags(counts.astype(complex), format="csr")
    P = sp.diags(np.where(counts % 2, -1.0, 1.0).astype(complex), format="csr")
    pairs = [(j, k) for j in range(L) for k in range(L)] if L <= 6 else \
        [(0, 0), (0, L - 1), (L - 1, L // 2), (L // 2, L // 2)]
    I = sp.identity(dim, format="csr", dtype=complex)
    for j, k in pairs:
        if _anticomm(a[j], a[k]).count_nonzero():
            raise AssertionError("CAR violated: {a_j, a_k} != 0")
        diff = _anticomm(a[j], adag[k]) - (I if j == k else 0 * I)
        if diff.count_nonzero() and np.abs(diff.data).max() > 0:
            raise AssertionError("CAR violated: {a_j, a_k*} != delta")
    return FockGenerators(L, a, adag, tuple(b), N, P)


def parity_from_majoranas(L: int) -> sp.csr_matrix:
    """``prod_j (-i b_{2j-1} b_{2j})``."""
    g = fock_generators(L)
    P = sp.identity(1 << L, format="csr", dtype=complex)
    for j in range(L):
        P = P @ (-1j * g.b[2 * j] @ g.b[2 * j + 1])
    return P.tocsr()


# ---------------------------------------------------------------- operators

@dataclass(frozen=True)
class FockOperator:
    """Sparse operator on the Fock space of ``L <= 14`` sites."""

    L: int
    matrix: sp.csr_matrix
    parity_grade: str = field(init=False)

    def __post_init__(self):
        _check_L(self.L)
        m = sp.csr_matrix(self.matrix, dtype=complex)
        if m.shape != (1 << self.L, 1 << self.L):
            raise ValueError("matrix shape does not match 2^L")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "parity_grade", _grade(self.L, m))

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        d = self.matrix - self.matrix.conj().T
        return d.nnz == 0 or np.abs(d.data).max() <= tol * max(1.0, _maxabs(self.matrix))

    def __matmul__(self, other):
        return self.matrix @ (other.matrix if isinstance(other, FockOperator) else other)


def _maxabs(m) -> float:
    return float(np.abs(m.data).max()) if m.nnz else 0.0


def _grade(L: int, m: sp.csr_matrix) -> str:
    coo = m.tocoo()
    if coo.nnz == 0:
        return "even"
    keep = np.abs(coo.data) > 0
    pr = np.bitwise_count(coo.row[keep].astype(np.int64)) % 2
    pc = np.bitwise_count(coo.col[keep].astype(np.int64)) % 2
    if np.all(pr == pc):
        return "even"
    if np.all(pr != pc):
        return "odd"
    return "mixed"


# ---------------------------------------------------------------- interactions

@dataclass(frozen=True)
class InteractionTerm:
    """One interaction term on 1-based sites.

    Kinds
    -----
    hop(j, k, t)             ``t a_j* a_k + conj(t) a_k* a_j``
    pair(j, k, delta)        ``delta a_j a_k + conj(delta) a_k* a_j*``
    chem(j, mu)              ``mu n_j``
    density_density(j, k, K) ``K n_j n_k``
    raw_monomial(ops, c)     ``c * op_1 op_2 ...`` with ``ops`` a tuple of
                             ``(site, dagger)``; an empty tuple is ``c * 1``.
                             Hermiticity of the total is checked on assembly.
    """

    kind: str
    sites: tuple
    coeff: complex

    @staticmethod
    def hop(j: int, k: int, t: complex) -> "InteractionTerm":
        return InteractionTerm("hop", (j, k), complex(t))

    @staticmethod
    def pair(j: int, k: int, delta: complex) -> "InteractionTerm":
        return InteractionTerm("pair", (j, k), complex(delta))

    @staticmethod
    def chem(j: int, mu: float) -> "InteractionTerm":
        return InteractionTerm("chem", (j,), complex(mu))

    @staticmethod
    def density_density(j: int, k: int, K: float) -> "InteractionTerm":
        return InteractionTerm("density_density", (j, k), complex(K))

    @staticmethod
    def raw_monomial(ops, coeff: complex) -> "InteractionTerm":
        ops = tuple((int(s), bool(d)) for s, d in ops)
        return InteractionTerm("raw_monomial", ops, complex(coeff))

    @staticmethod
    def constant(c: float) -> "InteractionTerm":
        return InteractionTerm("raw_monomial", (), complex(c))

    def max_site(self) -> int:
        if self.kind == "raw_monomial":
            return max((s for s, _ in self.sites), default=0)
        return max(self.sites)

    def matrix(self, L: int) -> sp.csr_matrix:
        g = fock_generators(L)
        a, ad = g.a, g.adag
        for s in (x[0] if self.kind == "raw_monomial" else x for x in self.sites):
            if not 1 <= s <= L:
                raise ValueError(f"site {s} outside 1..{L}")
        c = self.coeff
        if self.kind == "hop":
            j, k = (s - 1 for s in self.sites)
            m = c * ad[j] @ a[k]
            return (m + m.conj().T).tocsr()
        if self.kind == "pair":
            j, k = (s - 1 for s in self.sites)
            m = c * a[j] @ a[k]
            return (m + m.conj().T).tocsr()
        if self.kind == "chem":
            j = self.sites[0] - 1
            return (c * ad[j] @ a[j]).tocsr()
        if self.kind == "density_density":
            j, k = (s - 1 for s in self.sites)
            return (c * ad[j] @ a[j] @ ad[k] @ a[k]).tocsr()
        if self.kind == "raw_monomial":
            m = sp.identity(1 << L, format="csr", dtype=complex) * c
            for s, dag in self.sites:
                m = m @ (ad[s - 1] if dag else a[s - 1])
            return m.tocsr()
        raise ValueError(f"unknown term kind {self.kind!r}")


def assemble(L: int, terms, check: bool = True, tol: float = 1e-12) -> FockOperator:
    """Sum of interaction terms as a sparse Fock operator.

    Raises
    ------
    NonHermitian
        If the total is not Hermitian.
    OddParity
        If the total does not commute with the parity operator.
    """
    _check_L(L)
    H = sp.csr_matrix((1 << L, 1 << L), dtype=complex)
    for t in terms:
        H = H + t.matrix(L)
    H.eliminate_zeros()
    op = FockOperator(L, H)
    if check:
        if not op.is_hermitian(tol):
            raise NonHermitian("assembled operator is not Hermitian")
        if op.parity_grade != "even":
            raise OddParity(f"assembled operator is {op.parity_grade}")
    return op


def chain_terms(spec: ChainSpec) -> list:
    """Interaction list of a chain, with sites re-indexed to ``1..L``.

    Chemical terms are ``mu_j (n_j - 1/2)`` and the quartic term is
    ``K (2 n_j - 1)(2 n_k - 1)`` on every bond, so the quadratic part equals
    ``1/2 (a*, a) H (a; a*)`` for ``H = build_bdg(spec)`` without shift.
    """
    terms = []
    for j, k, w, delta, pj, pk in spec.bonds():
        if w != 0:
            terms.append(InteractionTerm.hop(j + 1, k + 1, -w * np.conj(pj) * pk))
        if delta != 0:
            terms.append(InteractionTerm.pair(j + 1, k + 1, delta * pj * pk))
        K = spec.quartic_K
        if K != 0:
            terms.append(InteractionTerm.density_density(j + 1, k + 1, 4.0 * K))
            terms.append(InteractionTerm.chem(j + 1, -2.0 * K))
            terms.append(InteractionTerm.chem(k + 1, -2.0 * K))
            terms.append(InteractionTerm.constant(K))
    for j, mu in enumerate(spec.mu):
        if mu != 0:
            terms.append(InteractionTerm.chem(j + 1, mu))
            terms.append(InteractionTerm.constant(-0.5 * mu))
    return terms


def chain_hamiltonian(spec: ChainSpec) -> FockOperator:
    return assemble(spec.L, chain_terms(spec))


# ---------------------------------------------------------------- ground spaces

@dataclass
class GroundSpaceReport:
    """Lowest eigenvalue cluster of a Fock Hamiltonian.

    ``parities`` lists the parity of each ground vector in ``states`` (columns),
    which are eigenvectors of ``P`` inside the ground space. ``gap`` is the
    distance to the next distinct level (``nan`` if not resolved).
    """

    E0: float
    degeneracy: int
    parities: list
    gap: float
    states: np.ndarray
    low_energies: np.ndarray

    @property
    def E1(self) -> float:
        return self.E0 + self.gap

    @property
    def parity0(self) -> int:
        """Ground-state parity if all ground vectors share it, else 0."""
        ps = set(self.parities)
        return ps.pop() if len(ps) == 1 else 0


def _lowest(H: FockOperator, k: int):
    if H.L <= DENSE_MAX_SITES:
        lam, V = np.linalg.eigh(H.dense())
        return lam, V
    rng = np.random.default_rng(12345)
    v0 = rng.standard_normal(H.matrix.shape[0]) + 0j
    lam, V = spla.eigsh(H.matrix, k=k, which="SA", v0=v0, tol=1e-13, ncv=max(4 * k, 40))
    order = np.argsort(lam)
    return lam[order], V[:, order]


def ground_space(H: FockOperator, degeneracy_tol: float | None = None, k: int = 6) -> GroundSpaceReport:
    """Ground energy, degeneracy, parities and gap.

    Dense diagonalization for ``L <= 10``, otherwise the ``k`` lowest
    eigenpairs from an implicitly restarted Lanczos solver. Ground vectors are
    rotated to diagonalize the parity operator.
    """
    lam, V = _lowest(H, k)
    E0 = float(lam[0])
    tol = 1e-7 * max(1.0, abs(E0)) if degeneracy_tol is None else degeneracy_tol
    deg = int(np.count_nonzero(lam - E0 < tol))
    G = V[:, :deg]
    P = fock_generators(H.L).P
    comm = H.matrix @ P - P @ H.matrix
    if comm.nnz and np.abs(comm.data).max() > 1e-10 * max(1.0, _maxabs(H.matrix)):
        raise OddParity("Hamiltonian does not commute with parity")
    pg = G.conj().T @ (P @ G)
    pv, R = np.linalg.eigh(0.5 * (pg + pg.conj().T))
    G = G @ R
    parities = [int(round(p)) for p in pv]
    rest = lam[deg:]
    gap = float(rest[0] - E0) if rest.size and deg < len(lam) and (H.L <= DENSE_MAX_SITES or deg < k) else float("nan")
    return GroundSpaceReport(E0, deg, parities, gap, G, lam[: min(len(lam), max(k, deg + 1))])


# ---------------------------------------------------------------- flux sweeps

@dataclass
class FluxSweep:
    """Per-angle ground space data of a flux sweep."""

    alpha: np.ndarray
    reports: list

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.reports])

    @property
    def gaps(self) -> np.ndarray:
        return self.column("gap")

    def gap_minimum(self) -> tuple[float, float]:
        g = self.gaps
        i = int(np.nanargmin(g))
        return float(self.alpha[i]), float(g[i])

    def parity_flips(self) -> list:
        """Angles between which the unique ground-state parity changes."""
        p = [r.parity0 for r in self.reports]
        flips = []
        last = None
        for a, q in zip(self.alpha, p):
            if q == 0:
                continue
            if last is not None and q != last[1]:
                flips.append((float(last[0]), float(a)))
            last = (a, q)
        return flips

    def rows(self):
        """Rows ``alpha, E0, E1, gap, degeneracy, parity0``."""
        for a, r in zip(self.alpha, self.reports):
            yield float(a), r.E0, r.E1, r.gap, r.degeneracy, r.parity0


def flux_sweep(spec: ChainSpec, alphas, degeneracy_tol: float | None = None) -> FluxSweep:
    """Ground space along a flux sweep of a closed chain (quadratic or quartic)."""
    if spec.boundary not in ("flux", "two_cell_flux"):
        raise ValueError("flux_sweep needs a flux or two_cell_flux boundary")
    alphas = np.asarray(alphas, dtype=float)
    if alphas.size == 0:
        raise ValueError("empty alpha grid")
    reports = [ground_space(chain_hamiltonian(spec.with_(alpha=float(a))), degeneracy_tol) for a in alphas]
    return FluxSweep(alphas, reports)


# ---------------------------------------------------------------- Majorana modes

def _norm(v) -> float:
    return float(np.linalg.norm(v))


def pair_modes(L: int, theta: float = 0.0):
    """Bond modes ``d_j = (b_{2j} + i b_{2j+1})/2`` for ``j = 1..L-1``."""
    b = fock_generators(L, theta).b
    return [0.5 * (b[2 * j - 1] + 1j * b[2 * j]) for j in range(1, L)]


def boundary_mode(L: int, sign: int = 1, theta: float = 0.0):
    """``d_bd = (b_{2L} + sign * i b_1)/2``."""
    b = fock_generators(L, theta).b
    return 0.5 * (b[2 * L - 1] + sign * 1j * b[0])


def vacuum(L: int) -> np.ndarray:
    v = np.zeros(1 << L, dtype=complex)
    v[0] = 1.0
    return v


def open_kitaev_state(L: int, occupations, theta: float = 0.0) -> np.ndarray:
    """``2^((L-1)/2) d_1^(i_1) ... d_{L-1}^(i_{L-1}) |Omega>`` with ``d^(1) = d*``."""
    d = pair_modes(L, theta)
    v = vacuum(L)
    for j in reversed(range(L - 1)):
        op = d[j].conj().T if occupations[j] else d[j]
        v = op @ v
    return 2.0 ** ((L - 1) / 2.0) * v


def open_kitaev_basis(L: int, theta: float = 0.0) -> dict:
    """Basis ``|i_bd; i_1, ..., i_{L-1}>`` of the open chain, for ``L <= 6``.

    The boundary-flipped states apply ``d_bd*`` if ``L + sum(i)`` is even and
    ``d_bd`` otherwise.
    """
    if L > 6:
        raise ValueError("explicit basis construction is limited to L <= 6")
    dbd = boundary_mode(L, 1, theta)
    basis = {}
    for occ in product((0, 1), repeat=L - 1):
        v = open_kitaev_state(L, occ, theta)
        basis[(0,) + occ] = v
        op = dbd.conj().T if (L + sum(occ)) % 2 == 0 else dbd
        basis[(1,) + occ] = op @ v
    return basis


def boundary_vanishing(L: int, occupations, theta: float = 0.0) -> tuple[float, float]:
    """Norms ``(||d_bd psi||, ||d_bd* psi||)`` for ``psi = |0; occupations>``."""
    v = open_kitaev_state(L, occupations, theta)
    dbd = boundary_mode(L, 1, theta)
    return _norm(dbd @ v), _norm(dbd.conj().T @ v)


def closed_boundary_vectors(L: int, theta: float = 0.0) -> dict:
    """Norms of ``d_bd^(+-) d_1 ... d_{L-1} |Omega>`` for the closed chain."""
    v = vacuum(L)
    for d in reversed(pair_modes(L, theta)):
        v = d @ v
    return {s: _norm(boundary_mode(L, s, theta) @ v) for s in (1, -1)}


# ---------------------------------------------------------------- interacting chain

def kst_mu_e(w: float, delta: float, K: float) -> float:
    """Chemical potential of the frustration-free line, ``4 sqrt(K^2 + wK + (w^2 - Delta^2)/4)``.

    Raises
    ------
    ParameterOutOfDomain
        If the radicand is negative or the result is not positive.
    """
    r = K * K + w * K + (w * w - delta * delta) / 4.0
    if r <= 0:
        raise ParameterOutOfDomain(f"mu_e is not real and positive (radicand {r})")
    return 4.0 * np.sqrt(r)


def kst_theta(w: float, delta: float, K: float) -> float:
    """Angle with ``tan(theta) = 2 Delta / mu_e`` (reduces to ``2w/mu_e`` on ``Delta = w``)."""
    return float(np.arctan2(2.0 * delta, kst_mu_e(w, delta, K)))


def kst_spec(L: int, w: float, delta: float, K: float, boundary: str = "open", alpha: float = 0.0) -> ChainSpec:
    """Interacting chain on the frustration-free line.

    ``H = sum_bonds [-w hop + Delta pair + K (2n_j - 1)(2n_k - 1)] - sum_j mu_j (n_j - 1/2)``
    with ``mu_j = mu_e`` in the bulk and ``mu_e / 2`` at the two ends of an
    open chain.
    """
    mu_e = kst_mu_e(w, delta, K)
    mu = np.full(L, -mu_e)
    if boundary == "open":
        mu[0] = mu[-1] = -mu_e / 2.0
    return ChainSpec(L=L, boundary=boundary, w=w, mu=mu, delta_magnitude=delta,
                     quartic_K=K, alpha=alpha)


def _subset_states(L: int, beta_pow, parity: int | None = None) -> np.ndarray:
    """Vector with amplitude ``f(|S|)`` on ``a*_S |Omega>`` (ordered product, sign +1)."""
    counts = np.bitwise_count(np.arange(1 << L, dtype=np.int64))
    amp = np.array([beta_pow(int(c)) for c in range(L + 1)], dtype=complex)[counts]
    if parity is not None:
        amp = np.where(counts % 2 == parity, amp, 0.0)
    return amp


def kst_states(L: int, w: float, delta: float, K: float) -> dict:
    """Explicit ground vectors of the open interacting chain.

    ``A+-|Omega> = prod_j (1 +- beta a_j*) |Omega>`` with ``beta^2 = cot(theta/2)``.
    With ``t = tan(theta/2)^(1/2) = 1/beta`` the amplitudes are proportional to
    ``(+-1)^|S| t^(L-|S|)``; the even and odd parts are rescaled separately
    so they stay finite when ``Delta = 0`` (``t = 0``). Negative ``Delta`` is
    handled by the gauge ``a -> i a``.
    """
    th = kst_theta(w, abs(delta), K)
    t = np.sqrt(np.tan(th / 2.0))
    phase = 1j if delta < 0 else 1.0
    out = {"theta": th, "beta": np.inf if t == 0 else 1.0 / t}
    for name, par in (("even", 0), ("odd", 1)):
        m = min(L - n for n in range(L + 1) if n % 2 == par)
        v = _subset_states(L, lambda n: (phase ** n) * t ** (L - n - m) if L - n >= m else 0.0, par)
        out[name] = v / np.linalg.norm(v)
    if t > 0:
        for name, s in (("plus", 1.0), ("minus", -1.0)):
            beta = 1.0 / t
            v = _subset_states(L, lambda n: (s * phase * beta) ** n)
            out[name] = v / np.linalg.norm(v)
    return out


def kst_local_terms(spec: ChainSpec) -> list:
    """Per-bond pieces of the interacting chain whose sum is the full Hamiltonian.

    Each bond carries ``-(mu_e/2)(n_j + n_k - 1)`` so that bulk sites collect
    ``mu_e`` and the ends of an open chain ``mu_e/2``.
    """
    mu_e = -float(spec.mu.max()) if spec.boundary != "open" else -2.0 * float(spec.mu[0])
    pieces = []
    for j, k, w, delta, pj, pk in spec.bonds():
        terms = [
            InteractionTerm.hop(j + 1, k + 1, -w * np.conj(pj) * pk),
            InteractionTerm.pair(j + 1, k + 1, delta * pj * pk),
            InteractionTerm.density_density(j + 1, k + 1, 4.0 * spec.quartic_K),
            InteractionTerm.chem(j + 1, -2.0 * spec.quartic_K - mu_e / 2.0),
            InteractionTerm.chem(k + 1, -2.0 * spec.quartic_K - mu_e / 2.0),
            InteractionTerm.constant(spec.quartic_K + mu_e / 2.0),
        ]
        pieces.append(assemble(spec.L, terms))
    return pieces


@dataclass
class KSTReport:
    L: int
    w: float
    delta: float
    K: float
    mu_e: float
    theta: float
    E0: float
    degeneracy: int
    parities: list
    gap: float
    residuals: dict
    ff_residual: float
    parity_swap_residual: float
    assembly_error: float

    def ok(self, tol: float = 1e-9) -> bool:
        return (self.degeneracy == 2 and sorted(self.parities) == [-1, 1]
                and max(self.residuals.values()) < tol and self.ff_residual < tol
                and self.parity_swap_residual < tol and self.assembly_error < tol)


def kst_build_and_verify(L: int, w: float, delta: float, K: float) -> KSTReport:
    """Assemble the open interacting chain and check its explicit ground states.

    Checks that the explicit vectors are eigenvectors at the ED ground
    energy, that the ground space is two-fold with opposite parities, that
    every bond term shifted by its own minimum annihilates them, and that
    parity exchanges ``A+`` and ``A-``.
    """
    if not 2 <= L <= 12:
        raise ParameterOutOfDomain("L must be in 2..12")
    spec = kst_spec(L, w, delta, K)
    H = chain_hamiltonian(spec)
    gs = ground_space(H)
    st = kst_states(L, w, delta, K)
    M = H.matrix
    residuals = {}
    for name in ("even", "odd", "plus", "minus"):
        if name in st:
            v = st[name]
            residuals[name] = _norm(M @ v - gs.E0 * v)
    pieces = kst_local_terms(spec)
    total = sum((p.matrix for p in pieces), sp.csr_matrix(M.shape, dtype=complex))
    diff = total - M
    assembly_error = _maxabs(diff) if diff.nnz else 0.0
    ff = 0.0
    for p in pieces:
        hmin = float(np.linalg.eigvalsh(p.dense()).min())
        for name in ("even", "odd"):
            v = st[name]
            ff = max(ff, _norm(p.matrix @ v - hmin * v))
    P = fock_generators(L).P
    swap = _norm(P @ st["plus"] - st["minus"]) if "plus" in st else 0.0
    return KSTReport(L, w, delta, K, kst_mu_e(w, delta, K), st["theta"], gs.E0, gs.degeneracy,
                     gs.parities, gs.gap, residuals, ff, swap, assembly_error)


def _qmode(L: int, j: int, k: int, theta: float, pj: complex, pk: complex):
    """``Q = c(-a_j*(1-n_k) + a_k*(1-n_j)) - s(a_j n_k + a_k n_j)`` with twisted ``a``."""
    g = fock_generators(L)
    a_j, a_k = pj * g.a[j], pk * g.a[k]
    ad_j, ad_k = a_j.conj().T, a_k.conj().T
    n_j, n_k = g.adag[j] @ g.a[j], g.adag[k] @ g.a[k]
    I = sp.identity(1 << L, format="csr", dtype=complex)
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return (c * (-ad_j @ (I - n_k) + ad_k @ (I - n_j)) - s * (a_j @ n_k + a_k @ n_j)).tocsr()


def _printed_bond(L: int, j: int, k: int, theta: float, t: float, pj: complex, pk: complex):
    """``-hop + (1+t) sin(theta) pair + (1+t) cos(theta)(1 - n_j - n_k) + (t/2)(2n_j-1)(2n_k-1) + 1 + t/2``."""
    g = fock_generators(L)
    I = sp.identity(1 << L, format="csr", dtype=complex)
    a_j, a_k = pj * g.a[j], pk * g.a[k]
    ad_j, ad_k = a_j.conj().T, a_k.conj().T
    n_j, n_k = g.adag[j] @ g.a[j], g.adag[k] @ g.a[k]
    hop = ad_j @ a_k + ad_k @ a_j
    pair = a_j @ a_k + ad_k @ ad_j
    return (-hop + (1 + t) * np.sin(theta) * pair + (1 + t) * np.cos(theta) * (I - n_j - n_k)
            + 0.5 * t * (2 * n_j - I) @ (2 * n_k - I) + (1 + 0.5 * t) * I).tocsr()


def kst_path_hamiltonian(L: int, w: float, delta: float, K: float, t: float,
                         alpha: float = 0.0, boundary: str = "flux"):
    """``H(alpha, t) = sum_bonds w [Q Q* + (1+t) Q* Q]`` and its bond pieces.

    The angle is fixed by ``tan(theta) = 2 Delta / mu_e``. At ``t = 2K/w`` the
    sum equals the interacting chain of :func:`kst_spec` up to a constant.
    Returns ``(H, Qs, printed)`` where ``printed`` lists the explicit bond
    formulas for comparison.
    """
    spec = ChainSpec(L=L, boundary=boundary, alpha=alpha)
    theta = kst_theta(w, delta, K)
    H = sp.csr_matrix((1 << L, 1 << L), dtype=complex)
    Qs, printed, pieces = [], [], []
    for j, k, _, _, pj, pk in spec.bonds():
        Q = _qmode(L, j, k, theta, pj, pk)
        piece = (Q @ Q.conj().T + (1 + t) * Q.conj().T @ Q).tocsr()
        Qs.append(Q)
        pieces.append(piece)
        printed.append(_printed_bond(L, j, k, theta, t, pj, pk))
        H = H + w * piece
    return FockOperator(L, H), Qs, pieces, printed


@dataclass
class PathReport:
    t_grid: np.ndarray
    identity_error: float
    annihilation_error: float
    min_eig_diff: list
    gaps: list
    E0: list
    degeneracies: list
    parities: list
    interacting_offset_error: float

    def ok(self, tol: float = 1e-9) -> bool:
        return (self.identity_error < 1e-10 and self.annihilation_error < tol
                and min(self.min_eig_diff) >= -1e-10 and self.interacting_offset_error < tol)


def kst_path_check(L: int, K: float, w: float = 1.0, delta: float | None = None,
                   t_grid=None, alpha: float = 0.0, boundary: str = "flux") -> PathReport:
    """Check the quadratic-to-interacting path ``t in [0, 2K/w]``.

    Verifies, per grid point, the bond identity against the explicit formula,
    that ``Q`` and ``Q*`` annihilate the ground vectors (``A+ - A-`` at
    ``alpha = 0`` and ``A+ + A-`` at ``alpha = pi`` for a closed chain, both
    for an open chain), and that ``H(t) - H(0)`` is positive semidefinite.
    Also checks that ``H(2K/w)`` differs from the interacting chain by a
    multiple of the identity.
    """
    delta = w if delta is None else delta
    t_end = 2.0 * K / w
    t_grid = np.linspace(0.0, t_end, 9) if t_grid is None else np.asarray(t_grid, dtype=float)
    st = kst_states(L, w, delta, K)
    if boundary == "open":
        claimed = [st["even"], st["odd"]]
    elif np.isclose(np.cos(alpha), 1.0):
        claimed = [st["odd"]]
    elif np.isclose(np.cos(alpha), -1.0):
        claimed = [st["even"]]
    else:
        claimed = []
    H0 = kst_path_hamiltonian(L, w, delta, K, 0.0, alpha, boundary)[0].dense()
    ident, ann = 0.0, 0.0
    mins, gaps, E0s, degs, pars = [], [], [], [], []
    for t in t_grid:
        H, Qs, pieces, printed = kst_path_hamiltonian(L, w, delta, K, float(t), alpha, boundary)
        for piece, pr in zip(pieces, printed):
            d = piece - pr
            ident = max(ident, _maxabs(d) if d.nnz else 0.0)
        for Q in Qs:
            for v in claimed:
                ann = max(ann, _norm(Q @ v), _norm(Q.conj().T @ v))
        mins.append(float(np.linalg.eigvalsh(H.dense() - H0).min()))
        gs = ground_space(H)
        gaps.append(gs.gap)
        E0s.append(gs.E0)
        degs.append(gs.degeneracy)
        pars.append(gs.parities)
    Hend = kst_path_hamiltonian(L, w, delta, K, t_end, alpha, boundary)[0].dense()
    Hint = chain_hamiltonian(kst_spec(L, w, delta, K, boundary, alpha)).dense()
    D = Hend / w - Hint / w
    c = np.trace(D).real / D.shape[0]
    off = float(np.abs(D - c * np.eye(D.shape[0])).max())
    return PathReport(t_grid, ident, ann, mins, gaps, E0s, degs, pars, off)


def kst_three_stage_parities(L: int, K: float, w: float = 1.0, delta: float | None = None) -> list:
    """Ground parities at ``H(0, 2K/w)``, ``H(0, 0)``, ``H(pi, 0)``, ``H(pi, 2K/w)`` (closed chain)."""
    delta = w if delta is None else delta
    out = []
    for alpha, t in ((0.0, 2 * K / w), (0.0, 0.0), (np.pi, 0.0), (np.pi, 2 * K / w)):
        H = kst_path_hamiltonian(L, w, delta, K, t, alpha)[0]
        gs = ground_space(H)
        out.append(gs.parity0 if gs.degeneracy == 1 else 0)
    return out


# ---------------------------------------------------------------- martingale method

def majorana_bond_chain(w, signs, closed: bool = False):
    """Bond operators ``h_j = w_j (1 + (-1)^{s_j} i b_{2j} b_{2j+1})`` on ``N`` sites.

    ``w`` holds the bond magnitudes and ``signs`` the exponents ``s_j``
    (callers pass signed ``w`` and leave ``signs`` unset), so
    every bond has spectrum ``{0, 2 w_j}``. A closed chain adds the bond
    ``i b_{2N} b_1``. Sites are numbered ``1..N`` (two-sided chains are
    re-indexed).
    """
    w = np.asarray(w, dtype=float)
    nb = len(w)
    N = nb if closed else nb + 1
    g = fock_generators(N)
    I = sp.identity(1 << N, format="csr", dtype=complex)
    bonds = []
    for j in range(nb):
        left = g.b[2 * j + 1]
        right = g.b[(2 * j + 2) % (2 * N)]
        bonds.append((w[j] * (I + (-1) ** int(signs[j]) * 1j * left @ right)).tocsr())
    return N, bonds


def _kernel_projection(M: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    lam, U = np.linalg.eigh(M)
    Z = U[:, np.abs(lam) < tol * max(1.0, np.abs(lam).max())]
    return Z @ Z.conj().T


@dataclass
class MartingaleReport:
    n_sites: int
    gamma: float
    commutator: float
    annihilation: float
    min_eig: float
    gap: float

    def ok(self, tol: float = 1e-10) -> bool:
        return self.commutator < tol and self.annihilation < tol and self.min_eig >= -tol


def martingale_identities(w, signs=None, closed: bool = False) -> MartingaleReport:
    """Telescoping-sequence identities for a Majorana bond chain.

    ``H_n`` is the sum of the first ``n`` bonds, ``h_n = H_n - H_{n-1}``,
    ``g_n`` the kernel projection of ``h_n``, and
    ``E_0 = 1 - P_Ker(H_1)``, ``E_n = P_Ker(H_n) - P_Ker(H_{n+1})``,
    ``E_last = P_Ker(H_last)``. Checks ``[E_n, g_{n+1}] = 0``,
    ``E_n g_{n+1} E_n = 0`` and ``h_n - gamma (1 - g_n) >= 0`` with
    ``gamma = min |w| / 2``.
    """
    w = np.asarray(w, dtype=float)
    signs = (w < 0).astype(int) if signs is None else np.asarray(signs, dtype=int)
    w = np.abs(w)
    N, bonds = majorana_bond_chain(w, signs, closed)
    if N > 8:
        raise ValueError("dense martingale check limited to 8 sites")
    h = [b.toarray() for b in bonds]
    dim = 1 << N
    I = np.eye(dim)
    H = [np.zeros((dim, dim), dtype=complex)]
    for x in h:
        H.append(H[-1] + x)
    nmax = len(h)
    PK = [None] + [_kernel_projection(H[n]) for n in range(1, nmax + 1)]
    g = [None] + [_kernel_projection(x) for x in h]
    E = [I - PK[1]] + [PK[n] - PK[n + 1] for n in range(1, nmax)] + [PK[nmax]]
    gamma = float(w.min()) / 2.0
    comm = ann = 0.0
    for n in range(nmax):
        comm = max(comm, float(np.abs(E[n] @ g[n + 1] - g[n + 1] @ E[n]).max()))
        ann = max(ann, float(np.abs(E[n] @ g[n + 1] @ E[n]).max()))
    mine = min(float(np.linalg.eigvalsh(h[n - 1] - gamma * (I - g[n])).min()) for n in range(1, nmax + 1))
    lam = np.linalg.eigvalsh(H[-1])
    E0 = lam[0]
    above = lam[lam > E0 + 1e-9]
    gap = float(above[0] - E0) if above.size else float("nan")
    return MartingaleReport(N, gamma, comm, ann, mine, gap)


def bond_chain_gap(w, signs=None, closed: bool = False) -> float:
    """Spectral gap of ``sum_j h_j`` by sparse diagonalization (up to 14 sites)."""
    w = np.asarray(w, dtype=float)
    signs = (w < 0).astype(int) if signs is None else np.asarray(signs, dtype=int)
    w = np.abs(w)
    N, bonds = majorana_bond_chain(w, signs, closed)
    H = FockOperator(N, sum(bonds[1:], bonds[0]))
    gs = ground_space(H)
    return gs.gap
