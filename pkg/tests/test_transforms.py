import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg

from naxray.errors import DomainError, MissingRay, OffCenterIncidence
from naxray.fields import (
    ADDITIVE,
    MULTIPLICATIVE,
    DeltaFieldSpec,
    LatticeField,
    Sinogram,
    random_additive_field,
    random_multiplicative_field,
)
from naxray.geometry import Ray, ball_lattice_points, cell_chords, ray_lattice_points
from naxray.matrix_core import frobenius_norm, identity, mat_exp
from naxray.transforms import (
    attenuation_cell_factors,
    attenuation_cell_matrix,
    continuous_xray_delta,
    continuous_xray_numeric,
    discrete_scalar_xray,
    discrete_xray,
    factorize_weight,
    forward_project,
    induced_weight,
    lift_delta_field,
    star_transform,
    triangular_field,
    weighted_xray,
)

F = Fraction


def scalar_field(values, r=3, regime=ADDITIVE):
    return LatticeField(2, 1, r, regime, {z: [[v]] for z, v in values.items()})


def test_discrete_xray_orders_later_factors_left():
    a = np.array([[1, 2], [0, 1]], dtype=complex)
    b = np.array([[1, 0], [3, 1]], dtype=complex)
    field = LatticeField(2, 2, 2, MULTIPLICATIVE, {(0, 0): a, (1, 0): b})
    assert np.array_equal(discrete_xray(field, Ray((0, 0), (1, 0))), b @ a)
    assert np.array_equal(discrete_xray(field, Ray((0, 0), (-1, 0))), a @ b)


def test_reversal_gives_reverse_order_product():
    field = random_multiplicative_field(2, 3, 3, seed=5)
    for z in ball_lattice_points(3, 2):
        ray = Ray(z, (1, 2))
        pts = ray_lattice_points(ray, 3)
        expected = identity(3)
        for y in pts:  # reversed ray meets the points last-to-first
            expected = expected @ field[y]
        assert frobenius_norm(discrete_xray(field, ray.reversed()) - expected) < 1e-13


def test_abelian_reduction():
    f = random_additive_field(2, 1, 4, seed=2, M=2.0)
    expf = LatticeField(2, 1, 4, MULTIPLICATIVE, {z: mat_exp(f[z]) for z in f.support})
    for z in ball_lattice_points(4, 2):
        ray = Ray(z, (1, -1))
        got = discrete_xray(expf, ray)[0, 0]
        assert abs(got - cmath.exp(discrete_scalar_xray(f, ray))) < 1e-12 * abs(got)


def test_scalar_xray_examples():
    f = scalar_field({(0, 0): 1, (1, 1): 1, (-1, -1): 1})
    assert discrete_scalar_xray(f, Ray((0, 0), (1, 1))) == 3
    assert discrete_scalar_xray(scalar_field({}), Ray((0, 0), (1, 1))) == 0


def test_weighted_xray_examples():
    u = scalar_field({(0, 0): 2, (1, 0): 5, (2, 1): 7})
    ray = Ray((0, 0), (1, 0))
    assert weighted_xray(lambda y, th: 1, u, ray) == discrete_scalar_xray(u, ray)
    single = scalar_field({(1, 0): 5})
    assert weighted_xray(lambda y, th: 3j, single, ray) == 15j


def test_weighted_xray_matches_direct_sum():
    rng = np.random.default_rng(9)
    vals = {z: complex(*rng.normal(size=2)) for z in ball_lattice_points(3, 2)}
    u = scalar_field(vals)

    def w(y, th):
        return complex(y[0] + 2j * y[1] + 1)

    for z in ball_lattice_points(3, 2):
        ray = Ray(z, (2, 1))
        direct = 0j
        for y in ball_lattice_points(3, 2):
            dy = (y[0] - z[0], y[1] - z[1])
            if dy[0] * 1 - dy[1] * 2 == 0:
                direct += w(y, None) * vals[y]
        assert abs(weighted_xray(w, u, ray) - direct) < 1e-14 * max(1, abs(direct))


def test_triangular_field_examples():
    f = triangular_field({(0, 0): 2}, {(0, 0): 3}, {(0, 0): 5}, 1)
    assert np.array_equal(f[(0, 0)], np.array([[2, 15], [0, 1]]))
    trivial = triangular_field({(0, 0): 1}, {(0, 0): 1}, {(0, 0): 0}, 1)
    assert trivial.values == {}
    with pytest.raises(DomainError):
        triangular_field({(0, 0): 0}, {}, {}, 1)


def test_induced_weight_examples():
    w2 = {(0, 0): 3.0, (1, 0): 4.0, (2, 0): 5.0}
    ones = induced_weight({}, w2, (1, 0), 2)
    assert ones((0, 0)) == 3.0
    w1 = {(0, 0): 2.0, (1, 0): 7.0, (2, 0): 11.0}
    weight = induced_weight(w1, {(0, 0): 3.0}, (1, 0), 2)
    assert weight((0, 0)) == 3.0 * 7.0 * 11.0
    assert weight((2, 0)) == 1.0
    with pytest.raises(DomainError):
        weight((0, 0), (0, 1))


def test_factorize_weight_examples():
    w1, w2 = factorize_weight(lambda y, th: 1.0, (1, 0), 2)
    assert set(w1.values()) == {1} and set(w2.values()) == {1}
    w1, w2 = factorize_weight(lambda y, th: 5.0 if y == (0, 2) else 1.0, (1, 0), 2)
    assert w2[(0, 2)] == 5.0 and w1[(0, 2)] == 1.0
    with pytest.raises(DomainError):
        factorize_weight(lambda y, th: 0.0, (1, 0), 1)


def test_factorize_inverts_induced_weight_on_r3():
    rng = np.random.default_rng(4)
    pts = ball_lattice_points(3, 2)
    target = {z: cmath.rect(rng.uniform(0.5, 2), rng.uniform(-3, 3)) for z in pts}
    for theta in [(1, 0), (1, 1), (-1, 2)]:
        w1, w2 = factorize_weight(lambda y, th: target[tuple(y)], theta, 3)
        rebuilt = induced_weight(w1, w2, theta, 3)
        assert max(abs(rebuilt(z) - target[z]) for z in pts) < 1e-12


def test_lift_examples():
    base = scalar_field({(0, 0): 1.0}, r=1)
    spec = DeltaFieldSpec(base, {(0, 0): 1.0}, {(0, 0): 0.25})
    assert abs(lift_delta_field(spec)[(0, 0)][0, 0] - math.exp(0.5)) < 1e-15
    nil = LatticeField(2, 2, 1, ADDITIVE, {(0, 0): [[0, 1], [0, 0]]})
    spec = DeltaFieldSpec(nil, {(0, 0): 2.0}, {(0, 0): 0.25})
    assert frobenius_norm(lift_delta_field(spec)[(0, 0)] - np.array([[1, 1], [0, 1]])) < 1e-15


def test_delta_spec_rejects_overlaps():
    base = scalar_field({(0, 0): 1, (1, 0): 1}, r=1)
    with pytest.raises(DomainError):
        DeltaFieldSpec(base, {(0, 0): 1, (1, 0): 1}, {(0, 0): 0.5, (1, 0): 0.5})


def test_off_center_incidence_raises():
    base = scalar_field({(0, 0): 1.0, (2, 0): 1.0})
    spec = DeltaFieldSpec(base, {(0, 0): 1, (2, 0): 1}, {(0, 0): 0.2, (2, 0): 0.2})
    with pytest.raises(OffCenterIncidence):
        continuous_xray_delta(spec, Ray((0, F(1, 10)), (1, 0)))
    # tangent to the ball counts as touching it off-center
    with pytest.raises(OffCenterIncidence):
        continuous_xray_delta(spec, Ray((0, F(1, 5)), (1, 0)))
    exact = continuous_xray_delta(spec, Ray((0, 0), (1, 0)))
    assert abs(exact[0, 0] - math.exp(0.8)) < 1e-14


def test_star_transform_examples():
    f = scalar_field({(0, 0): 0.7})
    assert abs(star_transform(f, Ray((0, 0), (1, 0)))[0, 0] - math.exp(0.7)) < 1e-14
    assert np.array_equal(star_transform(f, Ray((F(7, 2), 0), (0, 1))), identity(1))
    assert np.array_equal(star_transform(scalar_field({}), Ray((0, 0), (1, 1))), identity(1))


def test_star_splitting_at_every_pivot():
    f = random_additive_field(2, 2, 3, seed=8, M=1.0)
    ray = Ray((F(1, 3), F(-1, 5)), (2, 3))
    total = star_transform(f, ray)
    chords = [c for c in cell_chords(ray, 3) if c.cell in f]
    for k, pivot in enumerate(chords):
        before = identity(2)
        for c in chords[:k]:
            before = mat_exp(c.length * f[c.cell]) @ before
        after = identity(2)
        for c in chords[k + 1:]:
            after = mat_exp(c.length * f[c.cell]) @ after
        split = after @ mat_exp(pivot.length * f[pivot.cell]) @ before
        assert frobenius_norm(split - total) < 1e-12


def test_numeric_oracle_examples():
    ray = Ray((0, 0), (1, 0))
    zero = continuous_xray_numeric(lambda x: np.zeros((2, 2)), ray, 0.1, -1, 1)
    assert np.array_equal(zero, identity(2))

    def box(x):
        # chord length 1.9928 is not a multiple of either step
        return np.array([[0.5]]) if -0.7537 <= x[0] < 1.2391 else np.array([[0.0]])

    errs = [abs(continuous_xray_numeric(box, ray, d, -1.0, 2.0)[0, 0] - math.exp(0.9964))
            for d in (1e-2, 1e-3)]
    assert errs[1] < 1e-3 and errs[1] < errs[0]


def test_numeric_oracle_approaches_star_transform():
    f = random_additive_field(2, 2, 2, seed=1, M=1.0)

    def piecewise(x):
        z = tuple(math.floor(c + 0.5) for c in x)
        return f[z] if z in f else np.zeros((2, 2))

    ray = Ray((F(1, 7), F(-2, 9)), (1, 2))
    exact = star_transform(f, ray)
    errs = [frobenius_norm(continuous_xray_numeric(piecewise, ray, d, -3.0, 3.0) - exact)
            for d in (1e-2, 1e-3)]
    assert errs[1] < 5e-3 and errs[1] < errs[0]


def test_attenuation_factor_examples():
    assert attenuation_cell_factors(0, 0.3) == (1, -0.3)
    w1, w2 = attenuation_cell_factors(1, 1)
    assert abs(w1 - math.exp(-1)) < 1e-16 and abs(w2 - (math.exp(-1) - 1)) < 1e-16
    w1, w2 = attenuation_cell_factors(1e-9, 0.5)
    assert abs(w2 + 0.5) < 1e-9


@pytest.mark.parametrize("a,u,delta", [(1.0, 2.0, 0.3), (0.4 - 0.2j, 1 + 1j, 0.7), (-0.5, 3.0, 0.25)])
def test_attenuation_generator_sign(a, u, delta):
    cell = attenuation_cell_matrix(a, u, delta)
    # the factors are the exponential of -delta * [[a, u], [0, 0]]
    consistent = scipy.linalg.expm(delta * np.array([[-a, -u], [0, 0]], dtype=complex))
    assert frobenius_norm(cell - consistent) < 1e-14
    # the generator [[-a, u], [0, 0]] flips the sign of the coupling entry
    flipped = scipy.linalg.expm(delta * np.array([[-a, u], [0, 0]], dtype=complex))
    assert abs(flipped[0, 1] + cell[0, 1]) < 1e-14
    assert abs(flipped[0, 0] - cell[0, 0]) < 1e-15


def test_forward_project_is_thread_count_invariant():
    field = random_multiplicative_field(2, 2, 3, seed=1)
    rays = [Ray(z, (1, 1)) for z in ball_lattice_points(3, 2)]
    one = forward_project(discrete_xray, field, rays, "S_dis", threads=1)
    many = forward_project(discrete_xray, field, rays, "S_dis", threads=4)
    assert [np.array_equal(a[1], b[1]) for a, b in zip(one.rays, many.rays)] == [True] * len(rays)


def test_sinogram_round_trip_and_missing_ray():
    field = random_multiplicative_field(2, 2, 2, seed=1)
    rays = [Ray((F(1, 3), 0), (1, 1)), Ray((0, 0), (0, 1))]
    sino = forward_project(discrete_xray, field, rays, "S_dis", threads=1)
    back = Sinogram.from_json(sino.to_json())
    assert back.meta == sino.meta
    for ray, value in sino.rays:
        assert np.array_equal(back[ray], value)
    with pytest.raises(MissingRay) as info:
        back[Ray((0, 0), (1, 0))]
    assert "dir=(1,0)" in str(info.value)
    with pytest.raises(DomainError):
        Sinogram([(rays[0], identity(2)), (rays[0], identity(2))], sino.meta)


def test_field_json_round_trip():
    field = random_additive_field(3, 2, 2, seed=3, M=1.0)
    back = LatticeField.from_json(field.to_json())
    assert back.max_residual(field) == 0.0 and back.M == field.M
    with pytest.raises(DomainError):
        LatticeField.from_json({"format": "other"})
    with pytest.raises(DomainError):
        LatticeField(2, 1, 1, ADDITIVE, {(2, 0): [[1]]})
