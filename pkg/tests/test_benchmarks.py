import math

import numpy as np
import pytest

from ohmopt.benchmarks import (
    REGISTRY,
    Transform,
    UnknownId,
    UnsupportedDim,
    apply_transform,
    lookup,
    make_benchmark,
    random_rotation,
    registry_dump,
    weierstrass,
)
from ohmopt.core import DimensionMismatch, make_rng


def weierstrass_direct(x, a=0.5, b=3.0, kmax=20):
    """Literal double sum with compensated summation (independent of the vectorised kernel)."""
    total = []
    for xi in x:
        for k in range(kmax + 1):
            total.append(a**k * math.cos(2 * math.pi * b**k * (xi + 0.5)))
    for k in range(kmax + 1):
        total.append(-len(x) * a**k * math.cos(math.pi * b**k))
    return math.fsum(total)


@pytest.mark.parametrize("key", sorted(REGISTRY))
def test_optimum_value(key):
    spec = REGISTRY[key]
    dim = spec.fixed_dim or 3
    p = make_benchmark(key, dim)
    x_star, f_star = p.known_optimum
    tol = 1e-10 if spec.polynomial else 1e-3
    assert abs(p.cost(x_star) - f_star) < tol


@pytest.mark.parametrize("key", sorted(REGISTRY))
def test_finite_on_box(key):
    spec = REGISTRY[key]
    dim = spec.fixed_dim or 3
    p = make_benchmark(key, dim)
    X = p.lower + make_rng(key).random((10**4, dim)) * p.width
    v = p.batch_cost(X)
    assert np.all(np.isfinite(v))
    np.testing.assert_allclose(v[:20], [p.cost(x) for x in X[:20]], rtol=1e-12, atol=1e-12)


def test_paper_points():
    assert make_benchmark("F2", 3).cost(np.zeros(3)) == 0.0
    assert make_benchmark("F9", 3).cost(np.ones(3)) == pytest.approx(3.0, abs=1e-12)
    assert abs(make_benchmark("F10", 3).cost(np.zeros(3))) < 1e-12
    assert abs(make_benchmark("F7", 3).cost(np.full(3, 420.9687))) < 1e-3


def test_lookup_aliases():
    assert lookup("F7").name == lookup("schwefel").name == lookup(7).name == lookup("7").name
    with pytest.raises(UnknownId):
        lookup("F21")
    with pytest.raises(UnknownId):
        lookup("nope")


def test_beale_is_two_dimensional():
    with pytest.raises(UnsupportedDim):
        make_benchmark("Beale", 3)
    assert make_benchmark("Beale", 2).cost(np.array([3.0, 0.5])) == pytest.approx(0.0, abs=1e-12)


def test_easom_generalization():
    p2, p3 = make_benchmark("Easom", 2), make_benchmark("Easom", 3)
    assert p2.cost(np.full(2, np.pi)) == pytest.approx(-1.0)
    assert p3.cost(np.full(3, np.pi)) == pytest.approx(-1.0)
    assert "dim > 2" in lookup("Easom").note


class TestWeierstrass:
    def test_origin(self):
        assert abs(weierstrass(np.zeros(3))) < 1e-12

    def test_direct_sum(self):
        assert weierstrass(np.array([0.25])) == pytest.approx(weierstrass_direct([0.25]), abs=1e-12)
        x = make_rng(3).uniform(-0.5, 0.5, 4)
        assert weierstrass(x) == pytest.approx(weierstrass_direct(x), abs=1e-11)

    def test_kmax_zero(self):
        x = np.array([0.1, -0.3])
        expected = np.sum(np.cos(2 * np.pi * (x + 0.5)) - np.cos(np.pi))
        assert weierstrass(x, kmax=0) == pytest.approx(expected, abs=1e-14)


class TestRotation:
    @pytest.mark.parametrize("dim", [2, 3, 10])
    def test_orthogonal(self, dim):
        R = random_rotation(dim, 5)
        np.testing.assert_allclose(R.T @ R, np.eye(dim), atol=1e-10)
        assert abs(abs(np.linalg.det(R)) - 1.0) < 1e-10

    def test_deterministic(self):
        np.testing.assert_array_equal(random_rotation(4, 9), random_rotation(4, 9))
        assert not np.allclose(random_rotation(4, 9), random_rotation(4, 10))

    def test_norm_preserved(self):
        R = random_rotation(3, 11)
        for x in make_rng(0).standard_normal((20, 3)):
            assert np.linalg.norm(R @ x) == pytest.approx(np.linalg.norm(x), abs=1e-10)


class TestTransform:
    def test_identity(self):
        base = make_benchmark("Rastrigin", 3)
        t = apply_transform(base, Transform(rotation=np.eye(3), shift=np.zeros(3)))
        X = base.lower + make_rng(1).random((100, 3)) * base.width
        np.testing.assert_allclose(t.batch_cost(X), base.batch_cost(X), rtol=0, atol=1e-12)

    def test_shift_moves_optimum(self):
        base = make_benchmark("Rastrigin", 3)
        s = np.array([1.0, -2.0, 0.5])
        t = apply_transform(base, Transform(shift=s, output_bias=7.0))
        assert t.cost(s) == pytest.approx(7.0, abs=1e-12)
        np.testing.assert_allclose(t.known_optimum[0], s)
        assert t.known_optimum[1] == 7.0

    def test_rotation_fixes_origin(self):
        base = make_benchmark("Ackley", 3)
        t = apply_transform(base, Transform(rotation=random_rotation(3, 2)))
        assert abs(t.cost(np.zeros(3))) < 1e-12

    def test_non_orthogonal_rejected(self):
        with pytest.raises(ValueError):
            Transform(rotation=np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            apply_transform(make_benchmark("Sphere", 3), Transform(shift=np.zeros(2)))

    def test_grid_minimum_preserved(self):
        # rotated + shifted 2-D Rastrigin: the grid minimum sits at the relocated optimum
        p = make_benchmark("F19", 2)
        x_star, f_star = p.known_optimum
        g = np.linspace(-0.05, 0.05, 201)
        G = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2) + x_star
        v = p.batch_cost(G)
        assert v.min() == pytest.approx(f_star, abs=1e-9)
        assert v.min() >= f_star - 1e-12


def test_registry_dump():
    d = registry_dump()
    assert [e["id"] for e in d] == [f"F{k}" for k in range(1, 21)]
    f13 = d[12]
    assert f13["transform"]["input_scale"] == 0.0512 and f13["transform"]["seed"] is not None
    assert d[6]["box"] == [-500.0, 500.0]
