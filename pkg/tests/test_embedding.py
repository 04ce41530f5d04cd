import math
import struct
from fractions import Fraction

import numpy as np
import pytest

from permsphere.embedding import (
    CACHE_MAGIC,
    DimensionError,
    _construct,
    all_permutation_matrices,
    build_basis,
    constraint_normals,
    from_sphere,
    lift,
    load_basis,
    project,
    save_basis,
    to_sphere,
)

from conftest import all_perm_matrices, random_unit


def test_n2_basis_is_the_checkerboard_vector():
    basis = build_basis(2)
    assert basis.Q.shape == (4, 1)
    # the only unit vector orthogonal to all row/column-sum normals of a 2x2
    np.testing.assert_allclose(basis.Q[:, 0], [0.5, -0.5, -0.5, 0.5], atol=1e-15)


def test_n2_identity_embeds_to_plus_one():
    y = to_sphere(np.eye(2), build_basis(2))
    np.testing.assert_allclose(y, [1.0], atol=1e-15)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 8])
def test_basis_is_orthonormal(n):
    Q = build_basis(n).Q
    assert Q.shape == (n * n, (n - 1) ** 2)
    assert np.abs(Q.T @ Q - np.eye((n - 1) ** 2)).max() <= 1e-10


def test_n5_columns_orthogonal_to_all_constraint_normals():
    W = constraint_normals(5)
    assert W.shape == (25, 10)
    assert np.abs(W.T @ build_basis(5).Q).max() <= 1e-10


def test_construction_is_bit_reproducible():
    a = _construct(6).Q
    b = _construct(6).Q
    assert a.tobytes() == b.tobytes()


def test_sign_convention_first_nonzero_positive():
    Q = build_basis(5).Q
    for col in Q.T:
        first = col[np.abs(col) > 1e-12][0]
        assert first > 0


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_radius_exact_in_rational_arithmetic(n):
    center = Fraction(1, n)
    for P in all_perm_matrices(n):
        sq = sum((Fraction(int(v)) - center) ** 2 for v in P.ravel())
        assert sq == n - 1


def test_n3_unnormalized_radius_is_sqrt2():
    basis = build_basis(3)
    for P in all_perm_matrices(3):
        raw = basis.Q.T @ (P.ravel() - 1 / 3)
        assert np.linalg.norm(raw) == pytest.approx(math.sqrt(2), abs=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_center_of_mass_is_uniform(n):
    mats = all_perm_matrices(n)
    np.testing.assert_allclose(mats.mean(axis=0), np.full((n, n), 1 / n), atol=1e-12)


def test_isometry_at_n4():
    basis = build_basis(4)
    mats = all_perm_matrices(4)
    ys = project(mats, basis)
    flat = mats.reshape(len(mats), -1)
    for a in range(len(mats)):
        d_sphere = math.sqrt(3) * np.linalg.norm(ys - ys[a], axis=1)
        d_frob = np.linalg.norm(flat - flat[a], axis=1)
        np.testing.assert_allclose(d_sphere, d_frob, atol=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_projection_loses_no_norm(n):
    basis = build_basis(n)
    for P in all_perm_matrices(n):
        centered = P.ravel() - 1 / n
        assert np.linalg.norm(basis.Q.T @ centered) == pytest.approx(np.linalg.norm(centered), abs=1e-10)


def test_lift_inverts_to_sphere_at_n5():
    basis = build_basis(5)
    for P in all_perm_matrices(5):
        np.testing.assert_allclose(lift(to_sphere(P, basis), basis), P, atol=1e-10)


def test_lift_rejects_zero_vector():
    with pytest.raises(ValueError):
        lift(np.zeros(1), build_basis(2))


def test_lift_of_midpoint_is_doubly_stochastic_affine():
    basis = build_basis(3)
    mats = all_perm_matrices(3)
    y = to_sphere(mats[0], basis) + to_sphere(mats[3], basis)
    T = lift(y / np.linalg.norm(y), basis)
    np.testing.assert_allclose(T.sum(axis=0), 1.0, atol=1e-10)
    np.testing.assert_allclose(T.sum(axis=1), 1.0, atol=1e-10)


def test_dimension_mismatch_errors():
    basis = build_basis(3)
    with pytest.raises(DimensionError):
        to_sphere(np.eye(4), basis)
    with pytest.raises(DimensionError):
        lift(np.ones(9) / 3, basis)
    with pytest.raises(DimensionError):
        from_sphere(np.ones(9) / 3, basis)


def test_to_sphere_rejects_non_permutations():
    with pytest.raises(ValueError):
        to_sphere(np.full((3, 3), 1 / 3), build_basis(3))


def test_build_basis_rejects_small_n():
    with pytest.raises(DimensionError):
        build_basis(1)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_round_trip_exhaustive(n):
    basis = build_basis(n)
    for P in all_permutation_matrices(n):
        assert np.array_equal(from_sphere(to_sphere(P, basis), basis), P)


@pytest.mark.parametrize("n", [25, 50])
def test_round_trip_large_random(n, rng):
    basis = build_basis(n)
    for _ in range(1000):
        P = np.eye(n)[rng.permutation(n)]
        assert np.array_equal(from_sphere(to_sphere(P, basis), basis), P)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
def test_from_sphere_matches_exhaustive_nearest(n, rng):
    basis = build_basis(n)
    mats = all_perm_matrices(n)
    for y in random_unit(rng, (n - 1) ** 2, size=100):
        T = lift(y, basis)
        k = np.argmin(np.linalg.norm((mats - T).reshape(len(mats), -1), axis=1))
        assert np.array_equal(from_sphere(y, basis), mats[k])


def test_small_tangent_perturbation_rounds_back(rng):
    basis = build_basis(3)
    mats = all_perm_matrices(3)
    ys = project(mats, basis)
    # half the minimal chord between embedded permutations bounds safe perturbations
    gaps = [np.linalg.norm(a - b) for i, a in enumerate(ys) for b in ys[i + 1:]]
    assert 0.05 < min(gaps) / 2
    y0 = to_sphere(np.eye(3), basis)
    for _ in range(50):
        t = rng.standard_normal(4)
        t -= (t @ y0) * y0
        y = y0 + 0.05 * t / np.linalg.norm(t)
        assert np.array_equal(from_sphere(y / np.linalg.norm(y), basis), np.eye(3))


def test_cache_file_layout(tmp_path):
    basis = build_basis(4)
    path = tmp_path / "q.bin"
    save_basis(basis, path)
    raw = path.read_bytes()
    magic, version, n = struct.unpack_from("<4sII", raw)
    assert (magic, version, n) == (CACHE_MAGIC, 1, 4)
    assert len(raw) == 12 + 8 * 16 * 9
    body = np.frombuffer(raw[12:], dtype="<f8").reshape(16, 9)
    assert body.tobytes() == basis.Q.astype("<f8").tobytes()
    assert load_basis(path).Q.tobytes() == basis.Q.tobytes()


def test_cache_dir_round_trip(tmp_path):
    b1 = build_basis(5, cache_dir=tmp_path)
    assert (tmp_path / "basis_n5.bin").exists()
    b2 = build_basis(5, cache_dir=tmp_path)
    assert b1.Q.tobytes() == b2.Q.tobytes()


def test_corrupt_cache_rejected(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"XXXX" + bytes(8))
    with pytest.raises(ValueError):
        load_basis(path)
