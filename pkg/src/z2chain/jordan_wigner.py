"""Jordan-Wigner transform between even fermionic terms and Pauli strings.

Conventions
-----------
Spin basis states share the Fock labels: bit ``j - 1`` set means site ``j``
is occupied, which is ``sigma^z_j = +1``. Hence ``n_j = (1 + Z_j)/2`` and::

    a_j = prod_{k<j} (-Z_k) sigma^-_j,   sigma^- = (X - iY)/2

In Majorana form, ``b_{2j-1} = S_j X_j``, ``b_{2j} = -S_j Y_j`` and
``Z_j = i b_{2j-1} b_{2j}`` with ``S_j = prod_{k<j} (-Z_k)``. The fermion
parity maps to ``(-1)^L prod_j Z_j``.

Both directions pass through the Majorana normal form (sorted index
tuples), which is also the canonical form used to compare fermionic term
lists.

Text format
-----------
One Pauli string per line, ``coeff  X3 Z5 Y7``; an identity string has no
letters. Lines starting with ``#`` are comments; a header ``# L=<n>`` fixes
the number of sites.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import NonHermitian, NonLocalizable, OddParity, WraparoundTerm
from .fock import InteractionTerm, chain_terms
from .models import ChainSpec

_LETTERS = ("I", "X", "Y", "Z")
_COEFF_ATOL = 1e-14

# (p, q) -> (phase, r) with sigma_p sigma_q = phase * sigma_r
_PAULI_MUL = {}
for _p in _LETTERS:
    _PAULI_MUL[("I", _p)] = (1, _p)
    _PAULI_MUL[(_p, "I")] = (1, _p)
    _PAULI_MUL[(_p, _p)] = (1, "I")
for _p, _q, _r in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
    _PAULI_MUL[(_p, _q)] = (1j, _r)
    _PAULI_MUL[(_q, _p)] = (-1j, _r)


# ---------------------------------------------------------------- Pauli algebra

@dataclass(frozen=True)
class PauliString:
    """``coefficient * prod_sites letter_site`` with letters sorted by site."""

    coefficient: complex
    letters: tuple = ()

    def __post_init__(self):
        items = self.letters.items() if isinstance(self.letters, dict) else self.letters
        norm = []
        for site, letter in sorted((int(s), str(l).upper()) for s, l in items):
            if letter not in ("X", "Y", "Z"):
                if letter == "I":
                    continue
                raise ValueError(f"unknown Pauli letter {letter!r}")
            if norm and norm[-1][0] == site:
                raise ValueError(f"site {site} appears twice")
            if site < 1:
                raise ValueError("sites are numbered from 1")
            norm.append((site, letter))
        object.__setattr__(self, "letters", tuple(norm))
        object.__setattr__(self, "coefficient", complex(self.coefficient))

    @property
    def mapping(self) -> dict:
        return dict(self.letters)

    def max_site(self) -> int:
        return max((s for s, _ in self.letters), default=0)

    def label(self) -> str:
        return " ".join(f"{l}{s}" for s, l in self.letters)


def _pauli_mul(a: tuple, b: tuple) -> tuple[complex, tuple]:
    da, db = dict(a), dict(b)
    phase = 1 + 0j
    out = {}
    for s in sorted(set(da) | set(db)):
        ph, r = _PAULI_MUL[(da.get(s, "I"), db.get(s, "I"))]
        phase *= ph
        if r != "I":
            out[s] = r
    return phase, tuple(sorted(out.items()))


def _add(acc: dict, key, c: complex):
    acc[key] = acc.get(key, 0j) + c


def _prune(acc: dict, atol: float = _COEFF_ATOL) -> dict:
    return {k: v for k, v in acc.items() if abs(v) > atol}


def _sum_mul(x: dict, y: dict, mul) -> dict:
    out: dict = {}
    for ka, ca in x.items():
        for kb, cb in y.items():
            ph, k = mul(ka, kb)
            if ph != 0:
                _add(out, k, ph * ca * cb)
    return out


@dataclass
class SpinHamiltonian:
    """Sum of Pauli strings on ``L`` sites with merged, real coefficients.

    Raises
    ------
    NonHermitian
        If a merged coefficient has an imaginary part above ``1e-12``.
    """

    L: int
    terms: list = field(default_factory=list)

    def __post_init__(self):
        acc: dict = {}
        for t in self.terms:
            if not isinstance(t, PauliString):
                t = PauliString(*t)
            if t.max_site() > self.L:
                raise ValueError(f"string {t.label()} exceeds L={self.L}")
            _add(acc, t.letters, t.coefficient)
        acc = _prune(acc)
        for k, v in acc.items():
            if abs(v.imag) > 1e-12 * max(1.0, abs(v)):
                raise NonHermitian(f"string {k} has complex coefficient {v}")
        self.terms = [PauliString(v.real, k) for k, v in sorted(acc.items(), key=lambda kv: _sort_key(kv[0]))]

    def as_dict(self) -> dict:
        return {t.letters: t.coefficient.real for t in self.terms}

    def coefficient(self, letters) -> float:
        key = PauliString(1, letters).letters
        return self.as_dict().get(key, 0.0)

    def isclose(self, other: "SpinHamiltonian", atol: float = 1e-12) -> bool:
        a, b = self.as_dict(), other.as_dict()
        return self.L == other.L and all(abs(a.get(k, 0) - b.get(k, 0)) <= atol for k in set(a) | set(b))

    def dumps(self) -> str:
        lines = [f"# L={self.L}"]
        for t in self.terms:
            c = repr(float(t.coefficient.real))
            lines.append(f"{c}  {t.label()}".rstrip())
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, L: int | None = None) -> "SpinHamiltonian":
        terms = []
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("L="):
                    L = int(body[2:])
                continue
            parts = line.split()
            try:
                coeff = complex(parts[0].replace("i", "j"))
                letters = [(int(p[1:]), p[0]) for p in parts[1:]]
            except (ValueError, IndexError) as exc:
                raise ValueError(f"line {n}: cannot parse {raw!r}") from exc
            terms.append(PauliString(coeff, letters))
        if L is None:
            L = max((t.max_site() for t in terms), default=1)
        return cls(L, terms)


def _sort_key(letters: tuple):
    return (len(letters), [(s, l) for s, l in letters])


# ---------------------------------------------------------------- Majorana algebra

def _maj_mul(a: tuple, b: tuple) -> tuple[int, tuple]:
    """Product of two sorted Majorana monomials: ``(sign, sorted monomial)``."""
    seq = list(a) + list(b)
    sign = 1
    # insertion sort counting transpositions, cancelling b_m^2 = 1
    out: list = []
    for m in seq:
        pos = len(out)
        while pos > 0 and out[pos - 1] > m:
            pos -= 1
        sign *= -1 if (len(out) - pos) % 2 else 1
        if pos > 0 and out[pos - 1] == m:
            # move m next to its twin, then cancel the pair
            out.pop(pos - 1)
        else:
            out.insert(pos, m)
    return sign, tuple(out)


def _fermion_to_majorana(site: int, dagger: bool) -> dict:
    """``a_j = (b_{2j-1} + i b_{2j})/2`` and ``a_j* = (b_{2j-1} - i b_{2j})/2``."""
    s = -1j if dagger else 1j
    return {(2 * site - 1,): 0.5 + 0j, (2 * site,): 0.5 * s}


def _term_monomials(t: InteractionTerm) -> list:
    """The term as a list of ``(coeff, ((site, dagger), ...))``."""
    c = t.coeff
    if t.kind == "hop":
        j, k = t.sites
        return [(c, ((j, True), (k, False))), (np.conj(c), ((k, True), (j, False)))]
    if t.kind == "pair":
        j, k = t.sites
        return [(c, ((j, False), (k, False))), (np.conj(c), ((k, True), (j, True)))]
    if t.kind == "chem":
        j, = t.sites
        return [(c, ((j, True), (j, False)))]
    if t.kind == "density_density":
        j, k = t.sites
        return [(c, ((j, True), (j, False), (k, True), (k, False)))]
    if t.kind == "raw_monomial":
        return [(c, t.sites)]
    raise ValueError(f"unknown term kind {t.kind!r}")


def majorana_normal_form(terms) -> dict:
    """Canonical form of a fermionic term list: sorted Majorana monomial -> coefficient."""
    acc: dict = {}
    for t in terms:
        for c, ops in _term_monomials(t):
            poly = {(): complex(c)}
            for site, dag in ops:
                poly = _sum_mul(poly, _fermion_to_majorana(site, dag), _maj_mul)
            for k, v in poly.items():
                _add(acc, k, v)
    return _prune(acc)


def _majorana_pauli(m: int) -> dict:
    """``b_{2j-1} = S_j X_j`` and ``b_{2j} = -S_j Y_j``."""
    j = (m + 1) // 2
    sign = (-1) ** (j - 1)
    letters = tuple((k, "Z") for k in range(1, j)) + ((j, "X" if m % 2 else "Y"),)
    return {letters: complex(sign if m % 2 else -sign)}


def _pauli_majorana(site: int, letter: str) -> dict:
    """Inverse dictionary for one Pauli letter."""
    if letter == "Z":
        return {(2 * site - 1, 2 * site): 1j}
    string = {(): 1 + 0j}
    for k in range(1, site):
        string = _sum_mul(string, {(2 * k - 1, 2 * k): -1j}, _maj_mul)
    if letter == "X":
        return _sum_mul(string, {(2 * site - 1,): 1 + 0j}, _maj_mul)
    return _sum_mul(string, {(2 * site,): -1 + 0j}, _maj_mul)


# ---------------------------------------------------------------- transforms

def _check_open(L: int, t: InteractionTerm):
    sites = [s for s, _ in t.sites] if t.kind == "raw_monomial" else list(t.sites)
    for s in sites:
        if not 1 <= s <= L:
            raise ValueError(f"site {s} outside 1..{L}")
    if L > 2 and t.kind in ("hop", "pair", "density_density") and {1, L} <= set(sites):
        raise WraparoundTerm(f"term {t.kind}{t.sites} closes the chain")


def jw_forward(L, terms=None) -> SpinHamiltonian:
    """Pauli-string form of an even open-chain fermionic Hamiltonian.

    Parameters
    ----------
    L : int or ChainSpec
        A spec may be passed alone in place of ``L``.
    terms : list of InteractionTerm or ChainSpec

    Raises
    ------
    WraparoundTerm
        For closed chains or a bond joining sites 1 and L.
    OddParity
        If a monomial has odd degree.
    """
    if isinstance(L, ChainSpec):
        L, terms = L.L, L
    if isinstance(terms, ChainSpec):
        if terms.closed:
            raise WraparoundTerm("closed chains have no local spin form")
        L, terms = terms.L, chain_terms(terms)
    terms = list(terms)
    for t in terms:
        _check_open(L, t)
    acc: dict = {}
    for mono, c in majorana_normal_form(terms).items():
        if len(mono) % 2:
            raise OddParity("odd fermionic monomial")
        poly = {(): c}
        for m in mono:
            poly = _sum_mul(poly, _majorana_pauli(m), _pauli_mul)
        for k, v in poly.items():
            _add(acc, k, v)
    return SpinHamiltonian(L, [PauliString(v, k) for k, v in acc.items()])


def _majorana_to_terms(poly: dict) -> list:
    """Site-ordered fermionic monomials for a Majorana polynomial.

    A site with one Majorana contributes ``a + a*`` or ``-i a + i a*``; a site
    with both contributes ``b_{2j-1} b_{2j} = i (1 - 2 n_j)``.
    """
    acc: dict = {}
    for mono, c in poly.items():
        by_site: dict = {}
        for m in mono:
            by_site.setdefault((m + 1) // 2, []).append(m)
        choices = [((), c)]
        for site in sorted(by_site):
            ms = by_site[site]
            if len(ms) == 2:
                local = [((), 1j), (((site, True), (site, False)), -2j)]
            elif ms[0] % 2:
                local = [(((site, False),), 1), (((site, True),), 1)]
            else:
                local = [(((site, False),), -1j), (((site, True),), 1j)]
            choices = [(ops + lo, cc * lc) for ops, cc in choices for lo, lc in local]
        for ops, cc in choices:
            _add(acc, ops, cc)
    return [InteractionTerm.raw_monomial(ops, c) for ops, c in sorted(_prune(acc).items())]


def jw_inverse(H: SpinHamiltonian) -> list:
    """Fermionic terms of a spin Hamiltonian, as site-ordered raw monomials.

    Every local factor is one of ``a_j``, ``a_j*``, ``n_j``; together with
    site ordering this is a canonical form, so equal operators give equal
    term lists.

    Raises
    ------
    NonLocalizable
        If a string has an odd number of X/Y letters: its image is parity-odd
        and has no representation as an even fermionic term.
    """
    acc: dict = {}
    for t in H.terms:
        odd = sum(1 for _, l in t.letters if l in ("X", "Y"))
        if odd % 2:
            raise NonLocalizable(f"string {t.label()} is parity-odd")
        poly = {(): t.coefficient}
        for s, l in t.letters:
            poly = _sum_mul(poly, _pauli_majorana(s, l), _maj_mul)
        for k, v in poly.items():
            _add(acc, k, v)
    return _majorana_to_terms(_prune(acc))


def normal_forms_close(x: dict, y: dict, atol: float = 1e-12) -> bool:
    return all(abs(x.get(k, 0) - y.get(k, 0)) <= atol for k in set(x) | set(y))


# ---------------------------------------------------------------- matrices

_LOCAL = {
    "I": sp.identity(2, format="csr", dtype=complex),
    "X": sp.csr_matrix(np.array([[0, 1], [1, 0]], dtype=complex)),
    # basis order (bit 0 = down, bit 1 = up)
    "Y": sp.csr_matrix(np.array([[0, 1j], [-1j, 0]], dtype=complex)),
    "Z": sp.csr_matrix(np.array([[-1, 0], [0, 1]], dtype=complex)),
}


def pauli_matrix(L: int, letters) -> sp.csr_matrix:
    """``2^L`` matrix of a Pauli string; site 1 is the least significant bit."""
    d = dict(PauliString(1, letters).letters)
    m = sp.identity(1, format="csr", dtype=complex)
    for s in range(L, 0, -1):
        m = sp.kron(m, _LOCAL[d.get(s, "I")], format="csr")
    return m


def spin_matrix(H: SpinHamiltonian) -> sp.csr_matrix:
    dim = 1 << H.L
    out = sp.csr_matrix((dim, dim), dtype=complex)
    for t in H.terms:
        out = out + t.coefficient * pauli_matrix(H.L, t.letters)
    return out.tocsr()


# ---------------------------------------------------------------- model dictionaries

def ising_spin_hamiltonian(L: int, J_x: float, mu: float) -> SpinHamiltonian:
    """``-J_x sum X_j X_{j+1} - h sum Z_j`` with ``h = -mu/2``.

    This is the image of the open Kitaev chain with ``w = Delta = J_x`` and
    chemical term ``mu (n_j - 1/2)``.
    """
    h = -mu / 2.0
    terms = [PauliString(-J_x, {j: "X", j + 1: "X"}) for j in range(1, L)]
    terms += [PauliString(-h, {j: "Z"}) for j in range(1, L + 1)]
    return SpinHamiltonian(L, terms)


def xyz_spin_hamiltonian(L: int, w: float, delta: float, K: float, mu) -> SpinHamiltonian:
    """``sum [-J_x XX - J_y YY + J_z ZZ] + sum (mu_j/2) Z_j``.

    ``J_x = (w + Delta)/2``, ``J_y = (w - Delta)/2``, ``J_z = K``: the image
    of the open chain ``-w hop + Delta pair + K (2n-1)(2n-1) + mu_j (n_j - 1/2)``.
    """
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (L,))
    Jx, Jy = (w + delta) / 2.0, (w - delta) / 2.0
    terms = []
    for j in range(1, L):
        terms += [PauliString(-Jx, {j: "X", j + 1: "X"}),
                  PauliString(-Jy, {j: "Y", j + 1: "Y"}),
                  PauliString(K, {j: "Z", j + 1: "Z"})]
    terms += [PauliString(mu[j - 1] / 2.0, {j: "Z"}) for j in range(1, L + 1)]
    return SpinHamiltonian(L, terms)


def xy_spin_hamiltonian(L: int, mu: float, rho: float) -> SpinHamiltonian:
    """``-1/2 sum [(1+rho) XX + (1-rho) YY] + (mu/2) sum Z``, the image of the XY chain."""
    return xyz_spin_hamiltonian(L, 1.0, rho, 0.0, mu)


def parity_string(L: int) -> SpinHamiltonian:
    """Image ``(-1)^L prod_j Z_j`` of the fermion parity."""
    return SpinHamiltonian(L, [PauliString((-1) ** L, {j: "Z" for j in range(1, L + 1)})])
