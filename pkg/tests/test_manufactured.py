import numpy as np
import pytest

from inertial_robin.fem import load_quadrature
from inertial_robin.manufactured import (ManufacturedProblem, check_flux_jump,
                                         exact_gradient, exact_rate, exact_value, source_term)
from inertial_robin.mesh import Side, build_subdomain_mesh
from inertial_robin.interface import build_interface_coupling

from oracles import d4, fd_residual


def test_exact_examples():
    assert exact_value(0.25, 0.25, 1.0) == pytest.approx(1.0)
    ys = np.linspace(0, 1, 11)
    assert np.max(np.abs(exact_value(1.0, ys, 0.7))) < 1e-15
    np.testing.assert_allclose(exact_gradient(1.0, 0.25, 1.0), [2 * np.pi, 0.0], atol=1e-14)
    assert exact_rate(0.25, 0.75, 3.0) == pytest.approx(-1.0)


def test_gradient_matches_finite_differences(rng):
    x, y = rng.uniform(0, 2, 50), rng.uniform(0, 1, 50)
    g = exact_gradient(x, y, 0.6)
    np.testing.assert_allclose(g[:, 0], d4(lambda s: exact_value(s, y, 0.6), x), atol=1e-8)
    np.testing.assert_allclose(g[:, 1], d4(lambda s: exact_value(x, s, 0.6), y), atol=1e-8)
    np.testing.assert_allclose(exact_rate(x, y, 0.6), d4(lambda s: exact_value(x, y, s), 0.6),
                               atol=1e-10)


def test_source_examples():
    assert source_term(Side.OMEGA1, 0.25, 0.25, 0.0) == pytest.approx(1.0)
    assert abs(source_term(Side.OMEGA1, 0.5, 0.5, 1.0)) < 1e-12
    x, y, t = 0.3, 0.8, 0.4
    s = np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)
    base = source_term("omega1", x, y, t, rho=1.5)
    assert source_term("omega1", x, y, t, rho=3.0) - base == pytest.approx(1.5 * s, abs=1e-12)


@pytest.mark.parametrize("side", list(Side))
@pytest.mark.parametrize("t", [0.0, 0.5, 1.0])
def test_source_matches_pde_residual(side, t, rng):
    x0 = side.origin[0]
    x = x0 + rng.uniform(0, 1, 100)
    y = rng.uniform(0, 1, 100)
    problem = ManufacturedProblem(rho1=2.0, rho2=0.5)
    rho = problem.rho(side)
    f = problem.source(side)(x, y, t)
    assert np.max(np.abs(f - fd_residual(x, y, t, rho))) <= 1e-6


def test_source_symbolic():
    sympy = pytest.importorskip("sympy")
    x, y, t, rho = sympy.symbols("x y t rho")
    u = t * sympy.sin(2 * sympy.pi * x) * sympy.sin(2 * sympy.pi * y)
    beta = 2 + x**2 + y**2
    f = rho * sympy.diff(u, t) - sympy.diff(beta * sympy.diff(u, x), x) - sympy.diff(beta * sympy.diff(u, y), y)
    fn = sympy.lambdify((x, y, t, rho), f, "numpy")
    pts = np.random.default_rng(3).uniform(0, 1, (3, 40))
    np.testing.assert_allclose(source_term("omega2", pts[0] + 1, pts[1], pts[2], rho=4.0),
                               fn(pts[0] + 1, pts[1], pts[2], 4.0), rtol=1e-12, atol=1e-10)


def test_zero_source_mode():
    f = ManufacturedProblem(zero_source=True).source("omega2")
    out = f(np.linspace(1, 2, 7), np.linspace(0, 1, 7), 0.3)
    assert out.shape == (7,) and np.all(out == 0)


def test_flux_jump_examples():
    p = ManufacturedProblem()
    assert check_flux_jump(p, 0.25, 1.0) == 0
    assert check_flux_jump(p, 0.5, 0.5) == 0
    assert check_flux_jump(p, 1.0, 0.3) == 0


def test_boundary_and_interface_data_vanish():
    n = 8
    m1, m2 = build_subdomain_mesh(n, "omega1"), build_subdomain_mesh(n, "omega2")
    c = build_interface_coupling(m1, m2)
    for t in (0.0, 0.37, 1.0):
        for mesh in (m1, m2):
            x, y = mesh.nodes[mesh.dirichlet_nodes].T
            assert np.max(np.abs(exact_value(x, y, t))) < 1e-14
            xi, yi = mesh.nodes[mesh.interface_nodes].T
            assert np.max(np.abs(exact_value(xi, yi, t))) < 1e-14
        # two Gauss points per interface edge
        g = 0.5 + np.array([-0.5, 0.5]) / np.sqrt(3)
        yq = ((np.arange(n)[:, None] + g) / n).ravel()
        assert np.all(check_flux_jump(ManufacturedProblem(), yq, t) == 0)
        assert np.max(np.abs(exact_value(1.0, yq, t))) < 1e-14
    assert c.n == n


def test_source_vectorised_on_quadrature_points():
    mesh = build_subdomain_mesh(4, "omega2")
    pts, _ = load_quadrature(mesh)
    f = ManufacturedProblem().source("omega2")(pts[..., 0], pts[..., 1], 0.5)
    assert f.shape == pts.shape[:2]
