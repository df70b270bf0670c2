import math

import numpy as np
import pytest

from sphereflow.errors import SingularPointError
from sphereflow.geom import (
    CatadioptricPoint,
    PixelCoord,
    RotationSpec,
    SphereDir,
    UnitVec3,
    angular_to_pixel,
    angular_to_unitvec,
    is_rotation_matrix,
    latlon_to_pixel,
    pixel_to_angular,
    pixel_to_latlon,
    polar_from_unitvec,
    rotation_from_spec,
    sphere_to_catadioptric,
    unitvec_from_polar,
    unitvec_to_angular,
    wrap_angle,
)

SQRT2_2 = math.sqrt(2.0) / 2.0


def test_lift_known_values():
    v = angular_to_unitvec(SphereDir(math.pi / 4, math.pi / 2))
    assert abs(v.x) < 1e-15
    assert abs(v.y - SQRT2_2) < 1e-15
    assert abs(v.z - SQRT2_2) < 1e-15

    v = angular_to_unitvec(SphereDir(math.pi / 2, 0.0))
    assert np.allclose([v.x, v.y, v.z], [1.0, 0.0, 0.0], atol=1e-15)

    v = angular_to_unitvec(SphereDir(0.0, 1.2345))
    assert np.allclose([v.x, v.y, v.z], [0.0, 0.0, 1.0], atol=1e-15)


def test_inverse_lift_poles():
    d = unitvec_to_angular(UnitVec3(0.0, 0.0, 1.0))
    assert d.theta == 0.0 and d.phi == 0.0
    d = unitvec_to_angular(UnitVec3(0.0, 0.0, -1.0))
    assert d.theta == math.pi and d.phi == 0.0
    # a negative-zero x component must not flip phi to pi
    d = unitvec_to_angular(UnitVec3(-0.0, 0.0, 1.0))
    assert d.phi == 0.0


def test_angular_roundtrip_bulk():
    """Lift then inverse lift recovers the angles to 1e-12."""
    rng = np.random.default_rng(7)
    theta = rng.uniform(1e-6, math.pi - 1e-6, size=100_000)
    phi = rng.uniform(-math.pi + 1e-9, math.pi, size=100_000)
    x, y, z = unitvec_from_polar(theta, phi)
    t2, p2 = polar_from_unitvec(x, y, z)
    assert np.max(np.abs(t2 - theta)) < 1e-12
    assert np.max(np.abs(wrap_angle(p2 - phi))) < 1e-12


def test_signed_theta_reaches_same_sphere_point():
    # (-theta, phi) and (theta, phi + pi) are the same direction
    d1 = angular_to_unitvec(SphereDir(-0.3, 0.4))
    d2 = angular_to_unitvec(SphereDir(0.3, 0.4 + math.pi))
    assert np.allclose([d1.x, d1.y, d1.z], [d2.x, d2.y, d2.z], atol=1e-15)


def test_catadioptric_dual_forms_agree():
    """x/(1-z) form and cot(theta/2) form give the same plane point."""
    rng = np.random.default_rng(11)
    for _ in range(500):
        theta = rng.uniform(1e-3, math.pi - 1e-3)
        phi = rng.uniform(-math.pi, math.pi)
        p = sphere_to_catadioptric(angular_to_unitvec(SphereDir(theta, phi)))
        cot_half = 1.0 / math.tan(theta / 2.0)
        assert math.isclose(p.x, cot_half * math.cos(phi), rel_tol=0, abs_tol=1e-9)
        assert math.isclose(p.y, cot_half * math.sin(phi), rel_tol=0, abs_tol=1e-9)


def test_catadioptric_known_value():
    p = sphere_to_catadioptric(angular_to_unitvec(SphereDir(math.pi / 2, math.pi / 4)))
    assert math.isclose(p.x, SQRT2_2, abs_tol=1e-12)
    assert math.isclose(p.y, SQRT2_2, abs_tol=1e-12)
    assert isinstance(p, CatadioptricPoint)


def test_catadioptric_singular_pole():
    with pytest.raises(SingularPointError):
        sphere_to_catadioptric(UnitVec3(0.0, 0.0, 1.0))


def test_unitvec_rejects_non_unit():
    with pytest.raises(ValueError):
        UnitVec3(1.0, 1.0, 0.0)


def test_spheredir_normalizes_phi_and_bounds_theta():
    d = SphereDir(0.5, math.pi + 0.25)
    assert math.isclose(d.phi, -math.pi + 0.25, abs_tol=1e-12)
    with pytest.raises(ValueError):
        SphereDir(math.pi + 0.1, 0.0)
    with pytest.raises(ValueError):
        SphereDir(-math.pi / 2 - 0.1, 0.0)


def test_wrap_angle_edges():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert math.isclose(wrap_angle(3 * math.pi), math.pi, abs_tol=1e-12)
    assert math.isclose(wrap_angle(2 * math.pi), 0.0, abs_tol=1e-12)
    assert math.isclose(wrap_angle(math.pi + 0.25), -math.pi + 0.25, abs_tol=1e-12)
    a = wrap_angle(np.array([0.0, 7.0, -7.0]))
    assert np.allclose(a, [0.0, 7.0 - 2 * math.pi, 2 * math.pi - 7.0], atol=1e-12)


def test_pixel_latlon_centers():
    # top-left pixel center of a 2x4 raster
    lat, lon = pixel_to_latlon(0.0, 0.0, 2, 4)
    assert math.isclose(lon, -math.pi + math.pi / 4, abs_tol=1e-12)
    assert math.isclose(lat, math.pi / 2 - math.pi / 4, abs_tol=1e-12)
    row, col = latlon_to_pixel(lat, lon, 2, 4)
    assert math.isclose(row, 0.0, abs_tol=1e-12)
    assert math.isclose(col, 0.0, abs_tol=1e-12)


def test_pixel_roundtrip_bulk():
    rng = np.random.default_rng(3)
    h, w = 256, 512
    row = rng.uniform(0, h - 1, size=10_000)
    col = rng.uniform(0, w - 1, size=10_000)
    lat, lon = pixel_to_latlon(row, col, h, w)
    r2, c2 = latlon_to_pixel(lat, lon, h, w)
    assert np.max(np.abs(r2 - row)) < 1e-10
    assert np.max(np.abs(c2 - col)) < 1e-10


def test_pixel_coord_normalization():
    p = PixelCoord(-3.0, 515.5).normalized(256, 512)
    assert p.row == 0.0
    assert p.col == 3.5
    p = PixelCoord(300.0, -1.0).normalized(256, 512)
    assert p.row == 255.0
    assert p.col == 511.0


def test_pixel_angular_roundtrip():
    h, w = 128, 256
    rng = np.random.default_rng(5)
    for _ in range(200):
        p = PixelCoord(rng.uniform(0, h - 1), rng.uniform(0, w - 1))
        d = pixel_to_angular(p, h, w)
        q = angular_to_pixel(d, h, w)
        assert math.isclose(q.row, p.row, abs_tol=1e-9)
        assert math.isclose(q.col, p.col, abs_tol=1e-9)


def test_rotation_matrices_are_rotations():
    rng = np.random.default_rng(19)
    for _ in range(1000):
        spec = RotationSpec(*rng.uniform(-math.pi, math.pi, size=3))
        m = rotation_from_spec(spec)
        assert is_rotation_matrix(m, tol=1e-12)


def test_rotation_axis_conventions():
    # yaw rotates +x toward +y, i.e. increases longitude
    m = rotation_from_spec(RotationSpec(yaw=math.pi / 2))
    assert np.allclose(m @ [1, 0, 0], [0, 1, 0], atol=1e-12)
    # pitch rotates +y toward +z
    m = rotation_from_spec(RotationSpec(pitch=math.pi / 2))
    assert np.allclose(m @ [0, 1, 0], [0, 0, 1], atol=1e-12)
    # roll rotates +z toward +x
    m = rotation_from_spec(RotationSpec(roll=math.pi / 2))
    assert np.allclose(m @ [0, 0, 1], [1, 0, 0], atol=1e-12)


def test_rotation_composition_order():
    spec = RotationSpec(pitch=0.3, roll=-0.7, yaw=1.1)
    expected = (
        rotation_from_spec(RotationSpec(yaw=1.1))
        @ rotation_from_spec(RotationSpec(pitch=0.3))
        @ rotation_from_spec(RotationSpec(roll=-0.7))
    )
    assert np.allclose(rotation_from_spec(spec), expected, atol=1e-15)


def test_yaw_angles_add():
    a, b = 0.9, -2.2
    m = rotation_from_spec(RotationSpec(yaw=a)) @ rotation_from_spec(RotationSpec(yaw=b))
    assert np.allclose(m, rotation_from_spec(RotationSpec(yaw=a + b)), atol=1e-12)


def test_identity_spec():
    spec = RotationSpec()
    assert spec.is_identity
    assert np.allclose(rotation_from_spec(spec), np.eye(3), atol=0)


def test_is_rotation_matrix_rejects():
    assert not is_rotation_matrix(np.diag([1.0, 1.0, -1.0]))  # reflection
    assert not is_rotation_matrix(np.eye(3) * 2.0)
    assert not is_rotation_matrix(np.eye(4))
