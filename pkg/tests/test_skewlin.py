import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from z2chain.errors import OddDimension
from z2chain.skewlin import (
    SkewMatrix,
    canonical_form,
    kernel_dim,
    orthogonal_det_sign,
    pfaffian,
    pfaffian_slog,
)


def pf_expansion(a):
    """Pfaffian by expansion along the first row (independent oracle)."""
    n = a.shape[0]
    if n == 0:
        return 1.0
    total = 0.0
    for j in range(1, n):
        keep = [k for k in range(n) if k not in (0, j)]
        total += (-1) ** (j + 1) * a[0, j] * pf_expansion(a[np.ix_(keep, keep)])
    return total


def random_skew(seed, n):
    m = np.random.default_rng(seed).standard_normal((n, n))
    return m - m.T


skew_cases = st.tuples(st.integers(0, 2**32 - 1), st.integers(1, 8).map(lambda k: 2 * k))


def test_pfaffian_2x2_and_4x4_closed_forms():
    a = np.array([[0, 3.0], [-3.0, 0]])
    assert pfaffian(a) == 3.0
    b = random_skew(1, 4)
    expected = b[0, 1] * b[2, 3] - b[0, 2] * b[1, 3] + b[0, 3] * b[1, 2]
    assert pfaffian(b) == pytest.approx(expected, rel=1e-13)


def test_pfaffian_of_standard_block_form_is_one():
    L = 3
    I, Z = np.eye(L), np.zeros((L, L))
    # (odd; even) ordering: Pf = (-1)^(L(L-1)/2)
    assert pfaffian(np.block([[Z, I], [-I, Z]])) == -1.0
    interleaved = np.kron(np.eye(L), np.array([[0, 1.0], [-1.0, 0]]))
    assert pfaffian(interleaved) == 1.0


def test_pfaffian_singular_and_empty():
    a = np.zeros((4, 4))
    assert pfaffian_slog(a) == (0, -np.inf)
    assert pfaffian(a) == 0.0
    assert pfaffian(np.zeros((0, 0))) == 1.0


def test_odd_dimension_raises():
    with pytest.raises(OddDimension):
        pfaffian(np.zeros((3, 3)))
    with pytest.raises(OddDimension):
        SkewMatrix(np.zeros((5, 5)))


def test_non_skew_rejected():
    with pytest.raises(ValueError):
        SkewMatrix(np.eye(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4, 6, 8]))
def test_pfaffian_matches_expansion(seed, n):
    a = random_skew(seed, n)
    assert pfaffian(a) == pytest.approx(pf_expansion(a), rel=1e-9, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(skew_cases)
def test_pfaffian_squared_is_determinant(case):
    a = random_skew(*case)
    det = np.linalg.det(a)
    assert pfaffian(a) ** 2 == pytest.approx(det, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(skew_cases, st.integers(0, 2**32 - 1))
def test_pfaffian_transformation_law(case, vseed):
    a = random_skew(*case)
    v = np.random.default_rng(vseed).standard_normal(a.shape)
    lhs = pfaffian(v @ a @ v.T)
    assert lhs == pytest.approx(np.linalg.det(v) * pfaffian(a), rel=1e-7, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(skew_cases)
def test_canonical_form_reconstructs(case):
    a = random_skew(*case)
    cf = canonical_form(a)
    V = cf.orthogonal
    assert np.allclose(V @ V.T, np.eye(a.shape[0]), atol=1e-10)
    assert np.allclose(V @ a @ V.T, cf.block_form(), atol=1e-9)
    assert np.all(np.diff(cf.energies) >= 0)
    assert cf.det_sign == int(np.sign(np.linalg.det(V)))
    # Pf(A) = det(V) Pf(block) with Pf(block) = (-1)^(L(L-1)/2) prod E
    L = a.shape[0] // 2
    block_pf = (-1) ** (L * (L - 1) // 2) * np.prod(cf.energies)
    assert pfaffian(a) == pytest.approx(cf.det_sign * block_pf, rel=1e-8)


def test_canonical_form_with_kernel():
    a = np.zeros((6, 6))
    a[0, 1], a[1, 0] = 2.0, -2.0
    cf = canonical_form(a)
    assert np.allclose(cf.energies, [0.0, 0.0, 2.0])
    assert np.allclose(cf.orthogonal @ a @ cf.orthogonal.T, cf.block_form(), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_orthogonal_det_sign(seed, n):
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, n)))
    assert orthogonal_det_sign(q) == int(np.sign(np.linalg.det(q)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(0, 5))
def test_kernel_dim_skew_is_even_and_exact(seed, L, r):
    r = min(r, L)
    rng = np.random.default_rng(seed)
    E = np.concatenate([np.zeros(r), rng.uniform(0.5, 2.0, L - r)])
    Z = np.zeros((L, L))
    block = np.block([[Z, np.diag(E)], [-np.diag(E), Z]])
    q, _ = np.linalg.qr(rng.standard_normal((2 * L, 2 * L)))
    k = kernel_dim(SkewMatrix(q @ block @ q.T))
    assert k == 2 * r


def test_kernel_dim_hermitian_and_validation():
    assert kernel_dim(np.diag([0.0, 1.0, 0.0])) == 2
    with pytest.raises(ValueError):
        kernel_dim(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ValueError):
        kernel_dim(np.eye(2), tol=0)
