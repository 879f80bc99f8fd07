"""The Z2Report result type shared by index and spectral-flow routines."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Z2Report:
    """A Z2 sign with the diagnostics that produced it.

    Attributes
    ----------
    sign : int
        +1 or -1.
    kernel_counts : list of int
        ``kernel_dim(J_a + J_b)`` for each segment or pair that was compared.
        Every entry is even and ``sign = (-1)**(sum(kernel_counts) // 2)``.
    crossings : list of float
        Path parameters where the smallest energy dropped below tolerance.
    tol : float
        Relative tolerance used for kernel counting.
    partition : list of float
        Path parameters of the final partition (empty for a single pair).
    data : dict
        Extra diagnostics (Pfaffian values, gaps, Hilbert-Schmidt norms, ...).
    """

    sign: int
    kernel_counts: list = field(default_factory=list)
    crossings: list = field(default_factory=list)
    tol: float = 1e-8
    partition: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        if any(k % 2 for k in self.kernel_counts):
            raise ValueError("kernel counts must be even")
        if self.kernel_counts:
            expected = -1 if (sum(self.kernel_counts) // 2) % 2 else 1
            if expected != self.sign:
                raise ValueError("sign inconsistent with kernel counts")
