"""Z2 index of pairs of complex structures and Z2-valued spectral flow along paths."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bdg import BdGMatrix, ComplexStructure, flatten, flatten_skew, majorana_form, normalized_pfaffian_sign
from .errors import GaplessEndpoint, GaplessHamiltonian, PartitionFailure
from .report import Z2Report
from .skewlin import DEFAULT_TOL, SkewMatrix, as_skew, canonical_form, kernel_dim

__all__ = [
    "Z2Report",
    "HamiltonianPath",
    "ind2",
    "sf2_endpoints",
    "sf2_path",
    "relative_index",
]


def _J(x) -> np.ndarray:
    return x.J if isinstance(x, ComplexStructure) else np.asarray(x, dtype=float)


def ind2(J0, J1, tol: float = DEFAULT_TOL) -> Z2Report:
    """``(-1)^(dim Ker(J0 + J1) / 2)`` for two complex structures of equal size."""
    a, b = _J(J0), _J(J1)
    if a.shape != b.shape:
        raise ValueError("complex structures differ in dimension")
    k = kernel_dim(SkewMatrix(a + b), tol)
    return Z2Report(sign=-1 if (k // 2) % 2 else 1, kernel_counts=[k], tol=tol)


def _skew_of(x) -> SkewMatrix:
    if isinstance(x, BdGMatrix):
        return majorana_form(x)
    return as_skew(x)


def _min_energy(A: SkewMatrix) -> tuple[float, float]:
    """Smallest canonical energy and the spectral norm."""
    E = canonical_form(A).energies
    return (float(E[0]) if E.size else 0.0), A.norm()


def sf2_endpoints(A0, A1, tol: float = DEFAULT_TOL) -> int:
    """Product of the Pfaffian signs of two invertible skew matrices.

    Raises
    ------
    GaplessEndpoint
        If either matrix has a zero mode below ``tol * ||A||``.
    """
    signs = []
    for A in (A0, A1):
        A = _skew_of(A)
        e, n = _min_energy(A)
        if n == 0 or e <= tol * n:
            raise GaplessEndpoint("endpoint is not invertible")
        signs.append(normalized_pfaffian_sign(A)[0])
    return signs[0] * signs[1]


@dataclass
class HamiltonianPath:
    """A sampled path ``t -> H(t)`` of BdG or skew matrices.

    ``grid`` is the initial partition; its first and last entries are the
    endpoints, which must be gapped.
    """

    sampler: Callable[[float], object]
    grid: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 1.0, 11))
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 1 or g.size < 2 or np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing with at least two points")
        self.grid = g
        for t in (g[0], g[-1]):
            e, n = _min_energy(_skew_of(self.sampler(float(t))))
            if n == 0 or e <= self.tol * n:
                raise GaplessEndpoint(f"path endpoint t={t} is gapless")

    def skew(self, t: float) -> SkewMatrix:
        return _skew_of(self.sampler(float(t)))


def sf2_path(path: HamiltonianPath, tol: float = DEFAULT_TOL, max_refine: int = 20) -> Z2Report:
    """Z2-valued spectral flow along a sampled path.

    Each sample is flattened to a complex structure (zero modes completed by a
    fixed structure). Segments are bisected until consecutive structures are
    closer than ``2 - tol`` in spectral norm; ``ind2`` is then multiplied over
    the segments. In finite dimension every pair of structures is admissible,
    so a segment that is still a jump after ``max_refine`` bisections is kept
    as it is and its ``ind2`` enters the product. Such a segment must contain
    a gap closing: its smallest energy must lie below
    ``tol * ||A|| + 4 ||A(b) - A(a)||``, because the flattening moves by at
    most about ``2 ||dA|| / gap``. The minimizing parameter is recorded as a
    crossing. Sample points whose smallest energy is below ``tol * ||A||`` are
    recorded as crossings too. A segment whose step ``||A(b) - A(a)||`` has
    not shrunk below ``2^(-depth/2)`` times its initial value is treated as a
    discontinuity.

    Raises
    ------
    PartitionFailure
        If a jump persists without a gap closing after ``max_refine``
        bisections, or the path is discontinuous.
    """
    cache: dict[float, tuple] = {}

    def sample(t: float):
        if t not in cache:
            A = path.skew(t)
            J, gap = flatten_skew(A, tol, complete_kernel=True)
            cache[t] = (A, J.J, gap, A.norm())
        return cache[t]

    partition: list[float] = []
    counts: list[int] = []
    crossings: list[float] = []
    crossing_gaps: list[float] = []

    def note_crossing(t, gap):
        crossings.append(float(t))
        crossing_gaps.append(float(gap))

    def segment(a: float, b: float, depth: int, step0: float):
        Aa, Ja, ga, na = sample(a)
        Ab, Jb, gb, nb = sample(b)
        if np.linalg.norm(Ja - Jb, 2) < 2.0 - tol:
            counts.append(kernel_dim(SkewMatrix(Ja + Jb), tol))
            partition.append(b)
            return
        step = np.linalg.norm(Ab.entries - Aa.entries, 2)
        if depth == 0:
            step0 = step
        if depth < max_refine:
            m = 0.5 * (a + b)
            segment(a, m, depth + 1, step0)
            segment(m, b, depth + 1, step0)
            return
        if step > step0 * 2.0 ** (-depth / 2):
            raise PartitionFailure(f"path is not continuous near [{a}, {b}] (step {step:.3e})")
        bound = tol * max(na, nb, 1e-300) + 4.0 * step
        t_min, g_min = (a, ga) if ga <= gb else (b, gb)
        if g_min > bound:
            raise PartitionFailure(
                f"jump on [{a}, {b}] without gap closing (min energy {g_min:.3e})")
        counts.append(kernel_dim(SkewMatrix(Ja + Jb), tol))
        partition.append(b)
        if not any(abs(t_min - c) < 1e-6 for c in crossings):
            note_crossing(t_min, g_min)

    grid = path.grid
    partition.append(float(grid[0]))
    for a, b in zip(grid[:-1], grid[1:]):
        segment(float(a), float(b), 0, 0.0)
    for t in sorted(cache):
        _, _, g, n = cache[t]
        if g < tol * (n if n > 0 else 1.0) and not any(abs(t - c) < 1e-6 for c in crossings):
            note_crossing(t, g)
    order = np.argsort(crossings)
    total = sum(counts)
    return Z2Report(
        sign=-1 if (total // 2) % 2 else 1,
        kernel_counts=counts,
        crossings=[crossings[i] for i in order],
        tol=tol,
        partition=partition,
        data={"crossing_min_energy": [crossing_gaps[i] for i in order],
              "samples": len(cache)},
    )


def _projection(H: BdGMatrix) -> np.ndarray:
    lam, U = np.linalg.eigh(H.H)
    up = U[:, lam > 0]
    return up @ up.conj().T


def relative_index(H0: BdGMatrix, H1: BdGMatrix, tol: float = DEFAULT_TOL) -> Z2Report:
    """Relative index ``(-1)^dim(E0 ^ (1 - E1))`` of two gapped BdG Hamiltonians.

    ``data`` holds ``dim_meet = dim(E0 ^ (1 - E1))`` (half the kernel count)
    and the Hilbert-Schmidt norm of ``E0 - E1``, where ``E`` is the positive
    spectral projection.

    Raises
    ------
    GaplessHamiltonian
        If either Hamiltonian has a zero mode.
    """
    if H0.L != H1.L:
        raise ValueError("Hamiltonians act on different spaces")
    J0 = flatten(H0, tol)
    J1 = flatten(H1, tol)
    rep = ind2(J0, J1, tol)
    k = rep.kernel_counts[0]
    rep.data = {
        "dim_meet": k // 2,
        "hs_norm": float(np.linalg.norm(_projection(H0) - _projection(H1))),
    }
    return rep
