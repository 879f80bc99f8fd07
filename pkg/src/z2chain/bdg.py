"""Bogoliubov-de Gennes matrices, Majorana forms, diagonalization and the Kitaev index.

Conventions
-----------
A quadratic Hamiltonian is written ``H = 1/2 (a*, a) H (a; a*)`` with the
BdG matrix ``H = [[h, D], [-conj(D), -conj(h)]]`` in (particle, hole) block
order, ``D`` antisymmetric. Particle-hole symmetry reads
``K conj(H) K = -H`` with ``K`` the block swap.

Majorana operators are ``b_{2j-1} = e^{i t/2} a_j + e^{-i t/2} a_j*`` and
``b_{2j} = -i e^{i t/2} a_j + i e^{-i t/2} a_j*``, ordered as
``b = (b_1, b_3, ..., b_{2L-1}; b_2, b_4, ..., b_{2L})``. The Majorana form
``A`` is the real skew matrix with ``H = (i/2) b^T A b + const``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GaplessHamiltonian, NonHermitian, NotParticleHoleSymmetric
from .report import Z2Report
from .skewlin import (
    DEFAULT_TOL,
    SkewMatrix,
    _gram_schmidt,
    as_skew,
    canonical_form,
    kernel_dim,
    pfaffian_slog,
)

_CHECK_TOL = 1e-12


def swap_blocks(L: int) -> np.ndarray:
    """The real structure ``K = 1 (x) sigma_1`` in (particle, hole) block order."""
    I = np.eye(L)
    Z = np.zeros((L, L))
    return np.block([[Z, I], [I, Z]])


def majorana_change(L: int, theta: float = 0.0) -> np.ndarray:
    """The unitary ``C_theta`` with ``(a; a*) = C_theta b / sqrt(2)``."""
    I = np.eye(L)
    e = np.exp(0.5j * theta)
    cstar = np.block([[e * I, np.conj(e) * I], [-1j * e * I, 1j * np.conj(e) * I]]) / np.sqrt(2.0)
    return cstar.conj().T


@dataclass(frozen=True)
class BdGMatrix:
    """Hermitian, particle-hole symmetric ``2L x 2L`` matrix."""

    L: int
    H: np.ndarray

    def __post_init__(self):
        H = np.array(self.H, dtype=complex)
        L = int(self.L)
        if L < 1 or H.shape != (2 * L, 2 * L):
            raise ValueError(f"expected a {2 * L}x{2 * L} matrix, got shape {H.shape}")
        scale = max(1.0, np.abs(H).max())
        if np.abs(H - H.conj().T).max() > _CHECK_TOL * scale:
            raise NonHermitian("BdG matrix is not Hermitian")
        H = 0.5 * (H + H.conj().T)
        K = swap_blocks(L)
        if np.abs(K @ H.conj() @ K + H).max() > _CHECK_TOL * scale:
            raise NotParticleHoleSymmetric("K conj(H) K != -H")
        H = 0.5 * (H - K @ H.conj() @ K)
        H.setflags(write=False)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "H", H)

    @classmethod
    def from_blocks(cls, h, D) -> "BdGMatrix":
        """Build from the one-body block ``h`` and the pairing block ``D``."""
        h = np.asarray(h, dtype=complex)
        D = np.asarray(D, dtype=complex)
        return cls(h.shape[0], np.block([[h, D], [-D.conj(), -h.conj()]]))

    @property
    def h(self) -> np.ndarray:
        return self.H[: self.L, : self.L]

    @property
    def D(self) -> np.ndarray:
        return self.H[: self.L, self.L:]

    def norm(self) -> float:
        return float(np.linalg.norm(self.H, 2))

    def trace_constant(self) -> float:
        """Constant ``c`` with ``a* h a + 1/2 (a* D a* + h.c.) = 1/2 (a*,a) H (a;a*) + c``."""
        return 0.5 * float(np.trace(self.h).real)


@dataclass(frozen=True)
class CanonicalTransform:
    """Unitary ``W`` on particle-hole space commuting with the real structure."""

    W: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=complex)
        n = W.shape[0]
        if np.abs(W @ W.conj().T - np.eye(n)).max() > 1e-10:
            raise ValueError("W is not unitary")
        K = swap_blocks(n // 2)
        if np.abs(K @ W.conj() @ K - W).max() > 1e-10:
            raise ValueError("W does not commute with the real structure")
        object.__setattr__(self, "W", W)

    def orthogonal(self) -> np.ndarray:
        """The real orthogonal ``C* W C`` acting on Majorana space."""
        C = majorana_change(self.W.shape[0] // 2)
        O = C.conj().T @ self.W @ C
        return O.real


@dataclass(frozen=True)
class ComplexStructure:
    """Real ``2L x 2L`` matrix with ``J^T = -J`` and ``J^2 = -1``."""

    J: np.ndarray

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float)
        n = J.shape[0]
        if np.abs(J + J.T).max(initial=0.0) > 1e-10 or np.abs(J @ J + np.eye(n)).max(initial=0.0) > 1e-10:
            raise ValueError("not a complex structure")
        J = 0.5 * (J - J.T)
        J.setflags(write=False)
        object.__setattr__(self, "J", J)

    @property
    def L(self) -> int:
        return self.J.shape[0] // 2

    def to_bdg(self) -> BdGMatrix:
        """The flat BdG matrix ``sgn H`` whose flattening is this structure."""
        C = majorana_change(self.L)
        return BdGMatrix(self.L, -1j * C @ self.J @ C.conj().T)


def majorana_form(H: BdGMatrix, theta: float = 0.0) -> SkewMatrix:
    """Real skew matrix ``A = -(i/2) C_theta* H C_theta``.

    Raises
    ------
    NotParticleHoleSymmetric
        If the transformed matrix is not real to ``1e-10 * ||H||``.
    """
    C = majorana_change(H.L, theta)
    A = -0.5j * (C.conj().T @ H.H @ C)
    if np.abs(A.imag).max() > 1e-10 * max(1.0, H.norm()):
        raise NotParticleHoleSymmetric("Majorana form has an imaginary part")
    return SkewMatrix(A.real)


def bdg_from_majorana(A, theta: float = 0.0) -> BdGMatrix:
    """Inverse of :func:`majorana_form`."""
    A = as_skew(A)
    C = majorana_change(A.L, theta)
    return BdGMatrix(A.L, 2j * C @ A.entries @ C.conj().T)


def bogoliubov_diagonalize(H: BdGMatrix, tol: float = DEFAULT_TOL):
    """Canonical transformation bringing ``H`` to ``diag(E, -E)``.

    Returns
    -------
    (CanonicalTransform, ndarray)
        ``W`` with ``W H W* = diag(E, -E)`` and the ascending energies ``E >= 0``.
    """
    A = majorana_form(H)
    cf = canonical_form(A, tol)
    C = majorana_change(H.L)
    W = C @ cf.orthogonal @ C.conj().T
    return CanonicalTransform(W), 2.0 * cf.energies


def reference_structure(L: int) -> np.ndarray:
    """Flattened Majorana form of the trivial chain with positive chemical potential."""
    I = np.eye(L)
    Z = np.zeros((L, L))
    return -np.block([[Z, I], [-I, Z]])


def normalized_pfaffian_sign(A) -> tuple[int, float]:
    """Pfaffian sign relative to the reference pairing.

    ``Pf`` in (odd; even) ordering differs from the interleaved ordering by
    ``(-1)^(L(L-1)/2)``. Multiplying it back makes the trivial chain +1 for
    every ``L``.
    """
    A = as_skew(A)
    s, logabs = pfaffian_slog(A)
    L = A.L
    return s * (-1 if (L * (L - 1) // 2) % 2 else 1), logabs


def flatten_skew(A, tol: float = DEFAULT_TOL, complete_kernel: bool = False):
    """Polar part of a skew matrix, as a complex structure.

    Returns
    -------
    (ComplexStructure, float)
        The structure and the smallest canonical energy.
    """
    A = as_skew(A)
    cf = canonical_form(A, tol)
    L = A.L
    V = cf.orthogonal
    scale = A.norm()
    thr = tol * (scale if scale > 0 else 1.0)
    zero = cf.energies < thr
    if zero.any() and not complete_kernel:
        raise GaplessHamiltonian(f"{int(zero.sum())} zero mode(s) below tol")
    s = np.where(zero, 0.0, 1.0)
    Z = np.zeros((L, L))
    polar = V.T @ np.block([[Z, np.diag(s)], [-np.diag(s), Z]]) @ V
    if zero.any():
        rows = np.vstack([V[:L][zero], V[L:][zero]])
        P = rows.T @ rows
        q = _gram_schmidt(P.T, rank=rows.shape[0], min_norm=1e-6)
        for p in range(0, q.shape[0] - 1, 2):
            polar += np.outer(q[p], q[p + 1]) - np.outer(q[p + 1], q[p])
    # Sign chosen so that J corresponds to i H |H|^{-1}.
    gap = float(cf.energies[0]) if L else 0.0
    return ComplexStructure(-polar), gap


def flatten(H, tol: float = DEFAULT_TOL, complete_kernel: bool = False) -> ComplexStructure:
    """Complex structure ``C* (i H |H|^{-1}) C`` on the real Majorana space.

    Parameters
    ----------
    H : BdGMatrix or SkewMatrix
    tol : float
        Relative threshold for zero modes.
    complete_kernel : bool
        If True, zero modes are completed by the fixed structure
        ``[[0, 1], [-1, 0]]`` in the orthonormalized kernel basis; otherwise a
        zero mode raises :class:`GaplessHamiltonian`.
    """
    A = majorana_form(H) if isinstance(H, BdGMatrix) else H
    return flatten_skew(A, tol, complete_kernel)[0]


def kitaev_index(H: BdGMatrix, tol: float = DEFAULT_TOL) -> Z2Report:
    """Kitaev Z2 index of a gapped BdG Hamiltonian.

    The sign is computed twice: as the normalized Pfaffian sign of the
    Majorana form and as ``ind2`` of the flattened structure against the
    trivial chain. Both routes are stored in ``data``.

    Raises
    ------
    GaplessHamiltonian
        If the smallest singular value of ``H`` is below ``tol * ||H||``.
    """
    norm = H.norm()
    smin = float(np.linalg.svd(H.H, compute_uv=False).min())
    if norm == 0 or smin <= tol * norm:
        raise GaplessHamiltonian(f"gap {smin:.3e} below tol * norm")
    A = majorana_form(H)
    sign, logabs = normalized_pfaffian_sign(A)
    J = flatten(A, tol)
    k = kernel_dim(SkewMatrix(reference_structure(H.L) + J.J), tol)
    ind_sign = -1 if (k // 2) % 2 else 1
    if ind_sign != sign:
        raise RuntimeError(
            f"Pfaffian sign {sign} and reference index {ind_sign} disagree; increase tol")
    raw_sign, _ = pfaffian_slog(A)
    return Z2Report(
        sign=sign,
        kernel_counts=[k],
        tol=tol,
        data={"pfaffian_sign_raw": raw_sign, "log_abs_pfaffian": logabs, "gap": smin},
    )
