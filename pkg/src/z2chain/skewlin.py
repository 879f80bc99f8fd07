"""Real skew-symmetric linear algebra: Pfaffian, canonical form, kernel counts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import OddDimension

DEFAULT_TOL = 1e-8
_SKEW_RTOL = 1e-12


@dataclass(frozen=True)
class SkewMatrix:
    """Dense real skew-symmetric matrix of even dimension.

    Construction checks antisymmetry to a relative tolerance of 1e-12 and
    then stores the exactly antisymmetrized part.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if np.iscomplexobj(a):
            if np.abs(a.imag).max(initial=0.0) > _SKEW_RTOL * max(1.0, np.abs(a).max(initial=0.0)):
                raise ValueError("skew matrix has a non-negligible imaginary part")
            a = a.real
        a = np.array(a, dtype=float)
        if a.shape[0] % 2:
            raise OddDimension(f"dimension {a.shape[0]} is odd")
        scale = max(1.0, np.abs(a).max(initial=0.0))
        if np.abs(a + a.T).max(initial=0.0) > _SKEW_RTOL * scale:
            raise ValueError("matrix is not skew-symmetric")
        a = 0.5 * (a - a.T)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def L(self) -> int:
        return self.n // 2

    def norm(self) -> float:
        """Spectral norm."""
        if self.n == 0:
            return 0.0
        return float(np.linalg.norm(self.entries, 2))


@dataclass(frozen=True)
class CanonicalSkewForm:
    """Orthogonal reduction ``V A V^T = [[0, diag(E)], [-diag(E), 0]]``."""

    energies: np.ndarray
    orthogonal: np.ndarray
    det_sign: int

    def block_form(self) -> np.ndarray:
        L = len(self.energies)
        e = np.diag(self.energies)
        z = np.zeros((L, L))
        return np.block([[z, e], [-e, z]])


def as_skew(A) -> SkewMatrix:
    return A if isinstance(A, SkewMatrix) else SkewMatrix(np.asarray(A))


def _parlett_reid(A) -> tuple[int, np.ndarray]:
    """Sign and absolute pivots of the skew Parlett-Reid reduction.

    Partial pivoting; each row and column interchange flips the sign. The
    Pfaffian of the resulting tridiagonal form is the product of its odd
    superdiagonal entries. A zero pivot gives sign 0.
    """
    if not isinstance(A, SkewMatrix):
        a = np.asarray(A, dtype=float)
        if a.ndim == 2 and a.shape[0] % 2:
            raise OddDimension(f"dimension {a.shape[0]} is odd")
        A = SkewMatrix(a)
    a = np.array(A.entries, dtype=float)
    n = a.shape[0]
    sign = 1
    pivots = []
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(a[k + 1:, k])))
        if kp != k + 1:
            a[[k + 1, kp], :] = a[[kp, k + 1], :]
            a[:, [k + 1, kp]] = a[:, [kp, k + 1]]
            sign = -sign
        piv = a[k, k + 1]
        if piv == 0.0:
            return 0, np.zeros(0)
        if piv < 0:
            sign = -sign
        pivots.append(abs(piv))
        if k + 2 < n:
            tau = a[k, k + 2:] / piv
            col = a[k + 2:, k + 1].copy()
            a[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return sign, np.asarray(pivots)


def pfaffian_slog(A) -> tuple[int, float]:
    """Sign and log-modulus of the Pfaffian.

    Returns ``(0, -inf)`` for a singular matrix.
    """
    sign, piv = _parlett_reid(A)
    if sign == 0:
        return 0, -np.inf
    return sign, float(np.sum(np.log(piv)))


def pfaffian(A) -> float:
    """Pfaffian of a real skew-symmetric matrix.

    Raises
    ------
    OddDimension
        If the dimension is odd.
    """
    sign, piv = _parlett_reid(A)
    if sign == 0:
        return 0.0
    return float(sign * np.prod(piv))


def orthogonal_det_sign(V: np.ndarray) -> int:
    """Sign of ``det V`` for a real orthogonal matrix, without a floating determinant.

    Householder QR writes ``V = H_1 ... H_n R``. Each reflector with nonzero
    ``tau`` has determinant -1 and ``R`` is diagonal with entries ``+-1``, so
    the sign is fixed by counting reflections and negative pivots.
    """
    V = np.asarray(V, dtype=float)
    if V.size == 0:
        return 1
    (qr, tau), _ = scipy.linalg.qr(V, mode="raw")
    reflections = int(np.count_nonzero(tau))
    negatives = int(np.count_nonzero(np.diag(qr) < 0))
    return -1 if (reflections + negatives) % 2 else 1


def _fix_phase(u: np.ndarray) -> np.ndarray:
    """Rotate a complex vector so its largest component is real positive."""
    i = int(np.argmax(np.abs(u)))
    return u * (np.abs(u[i]) / u[i])


def canonical_form(A, tol: float = DEFAULT_TOL) -> CanonicalSkewForm:
    """Orthogonal canonical form of a real skew-symmetric matrix.

    Parameters
    ----------
    A : SkewMatrix or array_like
    tol : float
        Energies below ``tol * ||A||`` are treated as zero modes; their real
        basis is taken from the null space of ``A`` directly.

    Returns
    -------
    CanonicalSkewForm
        Energies ascending, ties in the order produced by the eigensolver.
    """
    A = as_skew(A)
    a = A.entries
    n, L = A.n, A.L
    if n == 0:
        return CanonicalSkewForm(np.zeros(0), np.zeros((0, 0)), 1)
    scale = A.norm()
    thr = tol * (scale if scale > 0 else 1.0)
    # iA is Hermitian; eigenvalues come in pairs +-E.
    lam, U = np.linalg.eigh(1j * a)
    pos = lam[L:]
    upos = U[:, L:]
    nonzero = pos >= thr
    nz = int(np.count_nonzero(~nonzero))
    firsts, seconds, energies = [], [], []
    if nz:
        # Real orthonormal basis of the kernel, paired in order.
        _, s, vt = np.linalg.svd(a)
        kern = vt[n - 2 * nz:][::-1]
        kern = _gram_schmidt(kern)
        for p in range(nz):
            firsts.append(kern[2 * p])
            seconds.append(kern[2 * p + 1])
            energies.append(0.0)
    for idx in np.nonzero(nonzero)[0]:
        u = _fix_phase(upos[:, idx])
        x = np.sqrt(2.0) * u.real
        y = np.sqrt(2.0) * u.imag
        # A x = E y and A y = -E x, so rows (y, x) produce +E in the block form.
        firsts.append(y)
        seconds.append(x)
        energies.append(float(pos[idx]))
    V = np.vstack(firsts + seconds)
    energies = np.asarray(energies)
    order = np.argsort(energies, kind="stable")
    energies = energies[order]
    V = np.vstack([V[:L][order], V[L:][order]])
    return CanonicalSkewForm(energies, V, orthogonal_det_sign(V))


def _gram_schmidt(rows: np.ndarray, rank: int | None = None, min_norm: float = 1e-10) -> np.ndarray:
    """Orthonormalize rows in input order (modified Gram-Schmidt, two passes).

    Rows whose residual norm falls below ``min_norm`` are skipped; at most
    ``rank`` vectors are returned.
    """
    out = []
    for r in rows:
        if rank is not None and len(out) >= rank:
            break
        v = np.array(r, dtype=float)
        for _ in range(2):
            for q in out:
                v = v - (q @ v) * q
        nv = np.linalg.norm(v)
        if nv > min_norm:
            out.append(v / nv)
    return np.array(out)


def kernel_dim(A, tol: float = DEFAULT_TOL) -> int:
    """Number of eigenvalues with modulus below ``tol * ||A||`` (or ``tol`` if A = 0).

    For a skew-symmetric input the count is always even: only the
    non-negative half of the paired spectrum of ``iA`` is thresholded.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if isinstance(A, SkewMatrix):
        a, skew = A.entries, True
    else:
        a = np.asarray(A)
        if a.size == 0:
            return 0
        skew = np.allclose(a, -a.T, atol=1e-12 * max(1.0, np.abs(a).max()))
        symmetric = np.allclose(a, a.conj().T, atol=1e-12 * max(1.0, np.abs(a).max()))
        if not (skew or symmetric):
            raise ValueError("kernel_dim expects a skew-symmetric or Hermitian matrix")
        if skew and np.iscomplexobj(a):
            skew = np.abs(a.imag).max() == 0
            a = a.real if skew else a
    if a.size == 0:
        return 0
    if skew:
        a = np.asarray(a, dtype=float)
        lam = np.linalg.eigvalsh(1j * 0.5 * (a - a.T))
        half = lam[a.shape[0] // 2:]
        scale = float(np.abs(lam).max())
        thr = tol * (scale if scale > 0 else 1.0)
        return 2 * int(np.count_nonzero(half < thr))
    lam = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    scale = float(np.abs(lam).max())
    thr = tol * (scale if scale > 0 else 1.0)
    return int(np.count_nonzero(np.abs(lam) < thr))
