"""Matrix exponentials, generator sets, orbits, and serialization."""

import numpy as np
import pytest

from splineae import (
    GeneratorSet,
    OrbitSpec,
    first_order_transform,
    gen_orbit_dataset,
    generators_from_dict,
    generators_to_dict,
    init_generators,
    make_named_generator,
    matrix_exp,
    orbit_point,
)
from splineae.errors import ConfigError, DegenerateError, IngestionError, ShapeError
from splineae.numerics import make_rng

ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


def taylor_exp(M, order=40):
    """Raw Taylor series, independent of the scaling-and-squaring code path."""
    E = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, order + 1):
        term = term @ M / k
        E = E + term
    return E


def test_matrix_exp_zero_matrix_is_identity():
    assert np.array_equal(matrix_exp(np.zeros((3, 3))), np.eye(3))


@pytest.mark.parametrize("seed", range(8))
def test_matrix_exp_matches_taylor_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    G = rng.standard_normal((n, n))
    G = G / (2.0 * np.abs(G).sum(axis=0).max())
    E = matrix_exp(G)
    assert np.abs(E - taylor_exp(G)).max() <= 1e-13


def test_matrix_exp_rotation_closed_form():
    for theta in np.linspace(-10.0, 10.0, 41):
        E = matrix_exp(ROT, theta)
        want = np.array(
            [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
        )
        assert np.abs(E - want).max() <= 1e-12


def test_matrix_exp_group_law_and_inverse():
    rng = np.random.default_rng(3)
    G = rng.standard_normal((4, 4)) * 0.4
    a, b = 0.7, -1.3
    lhs = matrix_exp(G, a + b)
    rhs = matrix_exp(G, a) @ matrix_exp(G, b)
    assert np.abs(lhs - rhs).max() <= 1e-12
    inv = matrix_exp(G, -a)
    assert np.abs(matrix_exp(G, a) @ inv - np.eye(4)).max() <= 1e-12


def test_matrix_exp_rejects_nonsquare():
    with pytest.raises(ShapeError):
        matrix_exp(np.zeros((2, 3)))


def test_generator_set_validation():
    with pytest.raises(ConfigError):
        GeneratorSet([])
    with pytest.raises(ShapeError):
        GeneratorSet([np.zeros((2, 3))])
    with pytest.raises(ShapeError):
        GeneratorSet([np.zeros((2, 2)), np.zeros((3, 3))])
    gs = GeneratorSet([ROT, np.eye(2)])
    assert gs.h == 2 and gs.dim == 2


def test_orbit_point_single_rotation():
    gs = GeneratorSet([ROT])
    x0 = np.array([1.0, 0.0])
    for theta in (0.0, 0.5, np.pi):
        want = np.array([np.cos(theta), np.sin(theta)])
        assert np.abs(orbit_point(gs, x0, [theta]) - want).max() <= 1e-12


def test_orbit_point_factor_order_is_ascending_left_to_right():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    B = np.array([[0.0, 0.0], [1.0, 0.0]])
    gs = GeneratorSet([A, B])
    x0 = np.array([0.3, -0.8])
    got = orbit_point(gs, x0, [0.9, -0.4])
    want = matrix_exp(A, 0.9) @ (matrix_exp(B, -0.4) @ x0)
    assert np.abs(got - want).max() <= 1e-12
    other = matrix_exp(B, -0.4) @ (matrix_exp(A, 0.9) @ x0)
    assert np.abs(got - other).max() > 1e-3


def test_orbit_point_shape_contracts():
    gs = GeneratorSet([ROT])
    with pytest.raises(ShapeError):
        orbit_point(gs, np.zeros(3), [0.1])
    with pytest.raises(ShapeError):
        orbit_point(gs, np.zeros(2), [0.1, 0.2])


def test_first_order_transform_matches_direct_sum():
    rng = np.random.default_rng(5)
    gs = GeneratorSet([rng.standard_normal((3, 3)) for _ in range(2)])
    v = rng.standard_normal(3)
    eps = np.array([0.2, -0.7])
    want = v + eps[0] * gs.generators[0] @ v + eps[1] * gs.generators[1] @ v
    assert np.abs(first_order_transform(gs, eps, v) - want).max() <= 1e-14
    with pytest.raises(ShapeError):
        first_order_transform(gs, np.zeros(3), v)


def test_orbit_spec_rejects_zero_anchor_and_missing_count():
    gs = GeneratorSet([ROT])
    with pytest.raises(DegenerateError):
        OrbitSpec(np.zeros(2), gs, n=4)
    with pytest.raises(ConfigError):
        OrbitSpec(np.array([1.0, 0.0]), gs)
    with pytest.raises(ConfigError):
        OrbitSpec(np.array([1.0, 0.0]), gs, n=4, noise_std=-0.1)


def test_gen_orbit_dataset_explicit_thetas_noise_free():
    gs = GeneratorSet([ROT])
    thetas = np.array([0.0, 0.25, 1.5, 3.0])
    spec = OrbitSpec(np.array([1.0, 0.0]), gs, thetas=thetas)
    X, T = gen_orbit_dataset(spec, make_rng(0))
    assert T.shape == (4, 1)
    for i, t in enumerate(thetas):
        want = np.array([np.cos(t), np.sin(t)])
        assert np.abs(X[i] - want).max() <= 1e-12


def test_gen_orbit_dataset_sampled_thetas_respect_ranges():
    gs = GeneratorSet([ROT])
    spec = OrbitSpec(np.array([1.0, 0.0]), gs, n=50, theta_ranges=[(1.0, 2.0)])
    X, T = gen_orbit_dataset(spec, make_rng(1))
    assert X.shape == (50, 2) and T.shape == (50, 1)
    assert T.min() >= 1.0 and T.max() <= 2.0
    assert np.abs(np.linalg.norm(X, axis=1) - 1.0).max() <= 1e-12


def test_gen_orbit_dataset_noise_is_reproducible():
    gs = GeneratorSet([ROT])
    spec = OrbitSpec(np.array([1.0, 0.0]), gs, n=10, noise_std=0.05)
    X1, _ = gen_orbit_dataset(spec, make_rng(7))
    X2, _ = gen_orbit_dataset(spec, make_rng(7))
    assert np.array_equal(X1, X2)
    X3, _ = gen_orbit_dataset(spec, make_rng(8))
    assert not np.array_equal(X1, X3)


def test_gen_orbit_dataset_theta_width_mismatch():
    gs = GeneratorSet([ROT])
    spec = OrbitSpec(np.array([1.0, 0.0]), gs, thetas=np.zeros((3, 2)))
    with pytest.raises(ShapeError):
        gen_orbit_dataset(spec, make_rng(0))
    bad_ranges = OrbitSpec(np.array([1.0, 0.0]), gs, n=3, theta_ranges=[(0, 1), (0, 1)])
    with pytest.raises(ConfigError):
        gen_orbit_dataset(bad_ranges, make_rng(0))


def test_make_named_generator_stock_kinds():
    assert np.array_equal(make_named_generator("rotation2d").generators[0], ROT)
    shear = make_named_generator("shear2d").generators[0]
    assert np.array_equal(shear, np.array([[0.0, 1.0], [0.0, 0.0]]))
    gs = make_named_generator("block_rotations", 6)
    assert gs.h == 3 and gs.dim == 6
    for k, g in enumerate(gs.generators):
        want = np.zeros((6, 6))
        want[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = ROT
        assert np.array_equal(g, want)
    with pytest.raises(ConfigError):
        make_named_generator("rotation2d", 4)
    with pytest.raises(ConfigError):
        make_named_generator("block_rotations", 5)
    with pytest.raises(ConfigError):
        make_named_generator("mystery")


def test_init_generators_deterministic_and_flagged():
    a = init_generators(2, 4, 9)
    b = init_generators(2, 4, 9)
    assert a.learnable and a.h == 2 and a.dim == 4
    for ga, gb in zip(a.generators, b.generators):
        assert np.array_equal(ga, gb)
    c = init_generators(2, 4, 10, learnable=False)
    assert not c.learnable
    assert not np.array_equal(a.generators[0], c.generators[0])


def test_init_generators_accepts_generator_instance():
    rng = make_rng(4)
    a = init_generators(1, 3, rng)
    b = init_generators(1, 3, make_rng(4))
    assert np.array_equal(a.generators[0], b.generators[0])


def test_generators_round_trip_bit_exact():
    gs = init_generators(3, 5, 21)
    doc = generators_to_dict(gs)
    back = generators_from_dict(doc)
    assert back.learnable == gs.learnable
    for ga, gb in zip(gs.generators, back.generators):
        assert np.array_equal(ga, gb)


def test_generators_from_dict_rejects_bad_documents():
    with pytest.raises(IngestionError):
        generators_from_dict({"format": "something-else"})
    doc = generators_to_dict(init_generators(1, 2, 0))
    doc["generators"][0] = doc["generators"][0][:-1]
    with pytest.raises(ConfigError):
        generators_from_dict(doc)
