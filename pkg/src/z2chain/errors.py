"""Exception and warning types shared across the package."""


class Z2ChainError(Exception):
    """Base class for all package errors."""


class OddDimension(Z2ChainError, ValueError):
    """A skew-symmetric matrix of odd dimension was supplied."""


class NonHermitian(Z2ChainError, ValueError):
    """An operator expected to be Hermitian is not."""


class NotParticleHoleSymmetric(Z2ChainError, ValueError):
    """A BdG matrix violates particle-hole symmetry."""


class GaplessHamiltonian(Z2ChainError):
    """A zero mode was found where a gapped Hamiltonian is required."""


class GaplessEndpoint(GaplessHamiltonian):
    """An endpoint of a path is not invertible."""


class PartitionFailure(Z2ChainError):
    """Adaptive refinement of a path partition did not converge."""


class QuarticNotQuadratic(Z2ChainError, ValueError):
    """A quadratic builder was asked to handle a quartic interaction."""


class OddParity(Z2ChainError, ValueError):
    """An assembled interaction does not commute with fermion parity."""


class ParameterOutOfDomain(Z2ChainError, ValueError):
    """Model parameters outside the domain where a construction exists."""


class WraparoundTerm(Z2ChainError, ValueError):
    """A term couples the last and first site of a chain."""


class NonLocalizable(Z2ChainError, ValueError):
    """A Pauli string has no finite fermionic preimage."""


class ConfigError(Z2ChainError, ValueError):
    """Invalid experiment configuration."""


class NonStabilized(UserWarning):
    """A truncated index did not stabilize between truncation sizes."""


class NonStabilizedError(Z2ChainError):
    """Raised instead of the warning when strict mode is requested."""
