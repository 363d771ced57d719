"""Error norms against the exact solution and observed convergence rates."""

from dataclasses import dataclass, field
import math

import numpy as np

from .fem import element_gradients
from .mesh import Side

# symmetric 6-point rule, exact for polynomials of degree 4 (barycentric, weights sum to 1)
_A1, _B1 = 0.445948490915964886, 0.108103018168070227
_A2, _B2 = 0.091576213509770743, 0.816847572980458514
NORM_BARY = np.array([
    [_A1, _A1, _B1], [_A1, _B1, _A1], [_B1, _A1, _A1],
    [_A2, _A2, _B2], [_A2, _B2, _A2], [_B2, _A2, _A2],
])
NORM_WEIGHTS = np.array([0.223381589678011466] * 3 + [0.109951743655321868] * 3)


def triangle_quadrature(mesh):
    """Physical quadrature points (T, 6, 2) and weights (T, 6) for norms."""
    p = mesh.nodes[mesh.triangles]
    pts = np.einsum("qk,tkd->tqd", NORM_BARY, p)
    weights = mesh.signed_areas()[:, None] * NORM_WEIGHTS[None, :]
    return pts, weights


def _values(field):
    return np.asarray(getattr(field, "values", field), dtype=float)


def l2_error(mesh, field, exact, t):
    """``||u_h - exact(., ., t)||_L2`` on one subdomain; inf for non-finite fields."""
    u = _values(field)
    if not np.all(np.isfinite(u)):
        return math.inf
    pts, w = triangle_quadrature(mesh)
    uh = np.einsum("qk,tk->tq", NORM_BARY, u[mesh.triangles])
    diff = uh - exact(pts[..., 0], pts[..., 1], t)
    return float(np.sqrt(np.sum(w * diff * diff)))


def h1_seminorm_error(mesh, field, exact_gradient, t):
    u = _values(field)
    if not np.all(np.isfinite(u)):
        return math.inf
    pts, w = triangle_quadrature(mesh)
    gh = element_gradients(mesh, u)[:, None, :]
    diff = gh - exact_gradient(pts[..., 0], pts[..., 1], t)
    return float(np.sqrt(np.sum(w * np.sum(diff * diff, axis=-1))))


def combine(errors):
    errors = list(errors)
    if any(math.isinf(e) for e in errors):
        return math.inf
    return math.sqrt(sum(e * e for e in errors))


def convergence_rates(errors):
    """``log2(e_k / e_{k+1})`` for a halving sequence; ``None`` where undefined."""
    errors = list(errors)
    if len(errors) < 2:
        raise ValueError("need at least two errors")
    rates = []
    for a, b in zip(errors[:-1], errors[1:]):
        if not (math.isfinite(a) and math.isfinite(b)) or a <= 0 or b <= 0:
            rates.append(None)
        else:
            rates.append(math.log2(a / b))
    return rates


@dataclass
class ErrorReport:
    scheme: str
    n: int
    h: float
    dt: float
    t_final: float
    status: str
    l2: dict
    h1: dict
    l2_error: float
    h1_error: float
    rates: list = field(default_factory=list)

    def as_row(self):
        return {
            "scheme": self.scheme, "n": self.n, "h": self.h, "dt": self.dt,
            "l2_error": self.l2_error, "h1_error": self.h1_error, "status": self.status,
        }


def error_report(run):
    """Per-subdomain and combined errors of a finished :class:`SimulationRun`."""
    cfg = run.config
    problem = run.problem
    t = run.t_final
    l2, h1 = {}, {}
    for side in Side:
        u = run.state.u[side]
        if run.diverged:
            l2[side.value] = h1[side.value] = math.inf
            continue
        mesh = run.mesh(side)
        l2[side.value] = l2_error(mesh, u, problem.exact_value, t)
        h1[side.value] = h1_seminorm_error(mesh, u, problem.exact_gradient, t)
    return ErrorReport(cfg.kind, cfg.n, 1.0 / cfg.n, cfg.dt, t, run.status, l2, h1,
                       combine(l2.values()), combine(h1.values()))
