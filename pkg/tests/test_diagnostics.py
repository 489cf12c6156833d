import json

import numpy as np
import pytest

from capvertex.diagnostics import (
    PlaneFit,
    SphereFit,
    diagnostics_report,
    fit_plane,
    fit_sphere,
    mean_curvature_field,
    measure_contact_angles,
    measure_vertex_angles,
    principal_curvatures,
    sphere_curvature_field,
    umbilicity_rms,
)
from capvertex.errors import DomainError
from capvertex.geometry import TrihedralConfig, WedgeConfig, vertex_angle
from capvertex.analytic import wente_halfcylinder
from capvertex.meshes import seed_mesh, structured_surface


def _fibonacci_sphere(n, center, radius):
    k = np.arange(n)
    phi = np.arccos(1.0 - 2.0 * (k + 0.5) / n)
    theta = np.pi * (1.0 + np.sqrt(5.0)) * k
    pts = np.column_stack([np.sin(phi) * np.cos(theta),
                           np.sin(phi) * np.sin(theta),
                           np.cos(phi)])
    return center + radius * pts


@pytest.fixture(scope="module")
def wedge_mesh():
    cfg = WedgeConfig.canonical(np.pi / 4, 2 * np.pi / 3, 2 * np.pi / 3)
    return seed_mesh(cfg, h=1.0, refinement_level=3)


def test_fit_sphere_recovers_exact_cloud():
    pts = _fibonacci_sphere(200, np.array([1.0, -2.0, 0.5]), 3.0)
    fit = fit_sphere(pts)
    assert isinstance(fit, SphereFit)
    assert fit.radius == pytest.approx(3.0, abs=1e-12)
    assert np.allclose(fit.center, [1.0, -2.0, 0.5], atol=1e-12)
    assert fit.rms < 1e-12


def test_fit_sphere_noisy_cloud_rms_tracks_noise():
    rng = np.random.default_rng(3)
    pts = _fibonacci_sphere(500, np.zeros(3), 2.0)
    pts += 1e-3 * rng.standard_normal(pts.shape)
    fit = fit_sphere(pts)
    assert fit.radius == pytest.approx(2.0, abs=5e-4)
    assert fit.rms < 2e-3
    assert fit.relative_rms == pytest.approx(fit.rms / fit.radius)


def test_fit_sphere_planar_cloud_falls_back_to_plane():
    rng = np.random.default_rng(5)
    xy = rng.uniform(-1, 1, size=(100, 2))
    pts = np.column_stack([xy, np.full(100, 0.7)])
    fit = fit_sphere(pts)
    assert isinstance(fit, PlaneFit)
    assert abs(abs(fit.normal[2]) - 1.0) < 1e-9
    assert fit.rms < 1e-12


def test_fit_sphere_rejects_tiny_clouds():
    with pytest.raises(DomainError):
        fit_sphere(np.zeros((3, 3)))


def test_fit_plane_recovers_tilted_plane():
    rng = np.random.default_rng(11)
    n = np.array([1.0, 2.0, 2.0]) / 3.0
    u, v = np.linalg.svd(n[None, :])[2][1:]
    coords = rng.uniform(-1, 1, size=(80, 2))
    pts = 0.25 * n + coords @ np.vstack([u, v])
    fit = fit_plane(pts)
    assert abs(abs(np.dot(fit.normal, n)) - 1.0) < 1e-12
    assert fit.rms < 1e-12


def test_cotan_mean_curvature_on_seeded_sphere(wedge_mesh):
    h = mean_curvature_field(wedge_mesh)
    interior = h[~np.isnan(h)]
    assert interior.size > 100
    # outward-bulging unit-radius cap: positive curvature near one
    assert np.median(interior) == pytest.approx(1.0, rel=5e-2)


def test_sphere_fit_curvature_on_seeded_sphere(wedge_mesh):
    h = sphere_curvature_field(wedge_mesh)
    interior = h[~np.isnan(h)]
    assert np.abs(interior - 1.0).max() < 1e-6


def test_principal_curvatures_sign_and_magnitude(wedge_mesh):
    k = principal_curvatures(wedge_mesh)
    interior = ~np.isnan(k[:, 0])
    assert np.allclose(k[interior], 1.0, atol=0.15)


def test_umbilicity_separates_sphere_from_cylinder():
    cfg = WedgeConfig.canonical(np.pi / 4, 2 * np.pi / 3, 2 * np.pi / 3)
    sphere = seed_mesh(cfg, h=1.0, refinement_level=3)
    sol = wente_halfcylinder(2.0, 1.0)
    ys = np.linspace(0.05, 0.95, 41)
    xs = np.linspace(0.0, 2.0, 41)
    grid = np.empty((41, 41, 3))
    grid[..., 0] = xs[:, None]
    grid[..., 1] = ys[None, :]
    grid[..., 2] = sol.height(ys)[None, :]
    cyl = structured_surface(grid)
    u_sphere = umbilicity_rms(sphere)
    u_cyl = umbilicity_rms(cyl)
    assert u_sphere < 0.05
    assert u_cyl > 10 * u_sphere


def test_contact_angles_exact_on_analytic_seed(wedge_mesh):
    angles = measure_contact_angles(wedge_mesh)
    assert set(angles) == {0, 1}
    for j, arr in angles.items():
        gamma = wedge_mesh.support.planes[j].gamma
        assert np.abs(arr - gamma).max() < 1e-9


def test_vertex_angles_exact_on_analytic_seed(wedge_mesh):
    measured = measure_vertex_angles(wedge_mesh)
    expected = vertex_angle(np.pi / 4, 2 * np.pi / 3, 2 * np.pi / 3).two_beta
    assert len(measured) == 2
    for val in measured.values():
        assert val == pytest.approx(expected, abs=1e-9)


def test_report_serialization_round_trip(tmp_path, wedge_mesh):
    rep = diagnostics_report(wedge_mesh)
    assert rep.sphere_radius == pytest.approx(1.0, abs=1e-9)
    assert rep.sphere_relative_rms < 1e-9
    assert rep.mean_curvature_cv < 1e-6

    json_path = tmp_path / "report.json"
    parsed = json.loads(rep.to_json(json_path))
    assert parsed["sphere_radius"] == rep.sphere_radius
    assert json_path.read_text() == rep.to_json()

    csv_path = tmp_path / "report.csv"
    rep.to_csv(csv_path)
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "key,value"
    keys = {line.split(",", 1)[0] for line in lines[1:]}
    assert "umbilicity" in keys and "sphere_radius" in keys
