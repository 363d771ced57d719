import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from inertial_robin.analysis import (NORM_BARY, NORM_WEIGHTS, combine, convergence_rates,
                                     error_report, h1_seminorm_error, l2_error, triangle_quadrature)
from inertial_robin.fem import NodalField
from inertial_robin.manufactured import ManufacturedProblem, exact_gradient, exact_value
from inertial_robin.mesh import PATTERNS, SubdomainMesh, build_subdomain_mesh
from inertial_robin.schemes import SchemeConfig, run_simulation


def reference_monomial(i, j):
    """Exact integral of x^i y^j over the unit reference triangle."""
    return math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)


def test_rule_weights_and_points():
    assert NORM_WEIGHTS.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(NORM_BARY.sum(axis=1), 1.0, atol=1e-15)


@pytest.mark.parametrize("i,j", [(i, j) for i in range(5) for j in range(5) if i + j <= 4])
def test_rule_exact_to_degree_four(i, j):
    x, y = NORM_BARY[:, 1], NORM_BARY[:, 2]
    approx = 0.5 * np.sum(NORM_WEIGHTS * x**i * y**j)
    assert approx == pytest.approx(reference_monomial(i, j), rel=1e-14, abs=1e-16)


def test_rule_not_exact_at_degree_six():
    x = NORM_BARY[:, 1]
    approx = 0.5 * np.sum(NORM_WEIGHTS * x**6)
    assert abs(approx - reference_monomial(6, 0)) > 1e-6


def test_physical_quadrature_integrates_quartic():
    mesh = build_subdomain_mesh(3, "omega2", "crisscross")
    pts, w = triangle_quadrature(mesh)
    # int_1^2 int_0^1 x^2 y^2 = (7/3) (1/3)
    assert np.sum(w * pts[..., 0] ** 2 * pts[..., 1] ** 2) == pytest.approx(7 / 9, rel=1e-14)


@pytest.mark.parametrize("pattern", PATTERNS)
def test_linear_interpolant_has_zero_error(pattern):
    mesh = build_subdomain_mesh(5, "omega2", pattern)

    def lin(x, y, t):
        return 3 * x - 2 * y + t

    def lin_grad(x, y, t):
        return np.stack(np.broadcast_arrays(3.0 + 0 * x, -2.0 + 0 * y), axis=-1)

    u = lin(mesh.nodes[:, 0], mesh.nodes[:, 1], 0.5)
    assert l2_error(mesh, u, lin, 0.5) < 1e-13
    assert h1_seminorm_error(mesh, u, lin_grad, 0.5) < 1e-12


def test_zero_field_against_exact():
    mesh = build_subdomain_mesh(16, "omega1")
    z = NodalField(np.zeros(mesh.num_nodes), 0, "omega1")
    assert l2_error(mesh, z, exact_value, 1.0) == pytest.approx(0.5, abs=1e-14)
    assert h1_seminorm_error(mesh, z, exact_gradient, 1.0) == pytest.approx(np.pi * np.sqrt(2), abs=1e-13)
    assert l2_error(mesh, z, exact_value, 0.0) == 0.0
    assert h1_seminorm_error(mesh, z, exact_gradient, 0.0) == 0.0


def test_nonfinite_field_gives_inf():
    mesh = build_subdomain_mesh(3, "omega1")
    u = np.zeros(mesh.num_nodes)
    u[4] = np.inf
    assert math.isinf(l2_error(mesh, u, exact_value, 1.0))
    u[4] = np.nan
    assert math.isinf(h1_seminorm_error(mesh, u, exact_gradient, 1.0))


def test_combine():
    assert combine([3.0, 4.0]) == 5.0
    assert math.isinf(combine([1.0, math.inf]))


def test_rate_examples():
    np.testing.assert_allclose(convergence_rates([4e-2, 1e-2, 2.5e-3]), [2.0, 2.0])
    rates = convergence_rates([3.43107e-2, 9.20988e-3, 2.34374e-3, 5.88545e-4])
    np.testing.assert_allclose(rates, [1.897, 1.974, 1.994], atol=5e-4)
    assert convergence_rates([1e-2, math.inf]) == [None]
    assert convergence_rates([math.inf, 1e-2, 2.5e-3]) == [None, pytest.approx(2.0)]
    with pytest.raises(ValueError):
        convergence_rates([1e-2])


@pytest.mark.parametrize("pattern", PATTERNS)
def test_interpolation_error_is_second_order(pattern):
    errs = []
    for n in (8, 16, 32):
        total = []
        for side in ("omega1", "omega2"):
            mesh = build_subdomain_mesh(n, side, pattern)
            u = exact_value(mesh.nodes[:, 0], mesh.nodes[:, 1], 1.0)
            total.append(l2_error(mesh, u, exact_value, 1.0))
        errs.append(combine(total))
    for r in convergence_rates(errs):
        assert 1.8 <= r <= 2.2


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**16), pattern=st.sampled_from(PATTERNS))
def test_norms_invariant_under_node_reordering(seed, pattern):
    r = np.random.default_rng(seed)
    mesh = build_subdomain_mesh(4, "omega2", pattern)
    u = r.standard_normal(mesh.num_nodes)
    perm = r.permutation(mesh.num_nodes)
    inv = np.argsort(perm)
    shuffled = SubdomainMesh(mesh.subdivisions, mesh.side, mesh.nodes[perm], inv[mesh.triangles],
                             np.sort(inv[mesh.dirichlet_nodes]), inv[mesh.interface_nodes],
                             mesh.pattern)
    assert l2_error(shuffled, u[perm], exact_value, 0.4) == pytest.approx(
        l2_error(mesh, u, exact_value, 0.4), rel=1e-12)
    assert h1_seminorm_error(shuffled, u[perm], exact_gradient, 0.4) == pytest.approx(
        h1_seminorm_error(mesh, u, exact_gradient, 0.4), rel=1e-12)


def test_error_report_fields():
    run = run_simulation(SchemeConfig("coupled", 4, 1 / 16, T=0.5), ManufacturedProblem())
    rep = error_report(run)
    assert rep.scheme == "coupled" and rep.n == 4 and rep.h == 0.25
    assert rep.t_final == pytest.approx(0.5)
    assert rep.l2_error == pytest.approx(math.hypot(rep.l2["omega1"], rep.l2["omega2"]))
    assert rep.h1_error >= 0 and rep.l2_error >= 0
    row = rep.as_row()
    assert set(row) == {"scheme", "n", "h", "dt", "l2_error", "h1_error", "status"}
