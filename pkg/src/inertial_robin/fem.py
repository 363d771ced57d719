"""P1 assembly on a single subdomain mesh.

Matrices come back as ``scipy.sparse.csr_matrix``; duplicates from the
coordinate triplets are summed in sorted (row, col) order so the layout is
reproducible from run to run.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import InvalidCoefficient

_LOCAL_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


@dataclass(frozen=True)
class CoefficientField:
    """Diffusivity ``beta(x, y)`` (vectorised callable) and constant density."""

    beta: Callable
    rho: float = 1.0

    def __post_init__(self):
        if not self.rho > 0:
            raise InvalidCoefficient(f"density must be positive, got {self.rho}")


@dataclass
class NodalField:
    values: np.ndarray
    time_index: int
    side: str


def _csr(rows, cols, vals, size):
    A = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(size, size))
    A = A.tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def _pairs(mesh):
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1)
    cols = np.tile(tri, (1, 3))
    return rows, cols


def p1_gradients(mesh):
    """Constant gradients of the three local hat functions, shape (T, 3, 2)."""
    p = mesh.nodes[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    area2 = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    grads = np.empty(p.shape)
    for k in range(3):
        k1, k2 = (k + 1) % 3, (k + 2) % 3
        grads[:, k, 0] = (y[:, k1] - y[:, k2]) / area2
        grads[:, k, 1] = (x[:, k2] - x[:, k1]) / area2
    return grads


def assemble_mass(mesh, rho=1.0):
    area = mesh.signed_areas()
    local = rho * area[:, None, None] * _LOCAL_MASS
    rows, cols = _pairs(mesh)
    return _csr(rows, cols, local.reshape(len(area), 9), mesh.num_nodes)


def assemble_lumped_mass(mesh, rho=1.0):
    """Vertex-quadrature mass, one weight per node.

    Mathematically ``rho * sum(area/3)`` over the triangles at each node; it is
    taken as the row sums of the consistent matrix so the two agree bitwise.
    """
    return np.asarray(assemble_mass(mesh, rho).sum(axis=1)).ravel()


def assemble_stiffness(mesh, beta):
    if isinstance(beta, CoefficientField):
        beta = beta.beta
    centroids = mesh.nodes[mesh.triangles].mean(axis=1)
    bc = np.broadcast_to(np.asarray(beta(centroids[:, 0], centroids[:, 1]), dtype=float),
                         (len(centroids),))
    if not np.all(bc > 0):
        bad = int(np.argmin(bc))
        raise InvalidCoefficient(f"beta = {bc[bad]:g} <= 0 at centroid {centroids[bad]}")
    area = mesh.signed_areas()
    g = p1_gradients(mesh)
    local = np.einsum("tid,tjd->tij", g, g) * (bc * area)[:, None, None]
    rows, cols = _pairs(mesh)
    return _csr(rows, cols, local.reshape(len(area), 9), mesh.num_nodes)


# edge-midpoint rule; hat k is 1/2 at the two midpoints touching vertex k
_MID_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])


def load_quadrature(mesh):
    """Quadrature points (T, 3, 2) and per-point hat weights (T, 3, 3) for loads."""
    p = mesh.nodes[mesh.triangles]
    pts = np.einsum("qk,tkd->tqd", _MID_BARY, p)
    area = mesh.signed_areas()
    weights = (area / 3.0)[:, None, None] * _MID_BARY[None, :, :]
    return pts, weights


def assemble_load(mesh, f, t=0.0, quadrature=None):
    """``int f(x, y, t) phi_i`` for every node, edge-midpoint rule per triangle."""
    pts, weights = quadrature if quadrature is not None else load_quadrature(mesh)
    fq = np.broadcast_to(np.asarray(f(pts[..., 0], pts[..., 1], t), dtype=float), pts.shape[:2])
    local = np.einsum("tq,tqk->tk", fq, weights)
    out = np.zeros(mesh.num_nodes)
    np.add.at(out, mesh.triangles.ravel(), local.ravel())
    return out


def element_gradients(mesh, values):
    """Gradient of the P1 interpolant on every triangle, shape (T, 2)."""
    values = getattr(values, "values", values)
    g = p1_gradients(mesh)
    return np.einsum("tk,tkd->td", np.asarray(values)[mesh.triangles], g)


def element_gradient(mesh, field, triangle):
    values = getattr(field, "values", field)
    tri = mesh.triangles[triangle]
    g = p1_gradients(mesh)[triangle]
    return np.asarray(values)[tri] @ g


def write_coo(path, A):
    """Dump ``row col value`` lines with 0-based indices."""
    C = sp.coo_matrix(A)
    order = np.lexsort((C.col, C.row))
    with open(path, "w") as fh:
        for r, c, v in zip(C.row[order], C.col[order], C.data[order]):
            fh.write(f"{int(r)} {int(c)} {float(v)!r}\n")
