"""Structured P1 triangulations of the two unit squares sharing the edge x = 1."""

from dataclasses import dataclass
from enum import Enum
import csv

import numpy as np

from .errors import InvalidArgument

INTERFACE_X = 1.0
PATTERNS = ("diagonal", "crisscross")


class Side(str, Enum):
    OMEGA1 = "omega1"
    OMEGA2 = "omega2"

    @property
    def origin(self):
        return (0.0, 0.0) if self is Side.OMEGA1 else (1.0, 0.0)

    @property
    def normal(self):
        """Outward unit normal on the interface."""
        return np.array([1.0, 0.0]) if self is Side.OMEGA1 else np.array([-1.0, 0.0])

    @property
    def other(self):
        return Side.OMEGA2 if self is Side.OMEGA1 else Side.OMEGA1


@dataclass(frozen=True, eq=False)
class SubdomainMesh:
    """Uniform triangle mesh of one unit square.

    Node (i, j) of the (n+1) x (n+1) grid has index ``j*(n+1) + i``.
    With the ``crisscross`` pattern every cell also gets a centre node,
    numbered after the grid nodes in cell order.
    ``interface_nodes`` are ordered by increasing y and include the two
    corners, which are also listed in ``dirichlet_nodes``.
    """

    subdivisions: int
    side: Side
    nodes: np.ndarray
    triangles: np.ndarray
    dirichlet_nodes: np.ndarray
    interface_nodes: np.ndarray
    pattern: str = "diagonal"

    @property
    def n(self):
        return self.subdivisions

    @property
    def h(self):
        return 1.0 / self.subdivisions

    @property
    def origin(self):
        return self.side.origin

    @property
    def num_nodes(self):
        return len(self.nodes)

    @property
    def interior_nodes(self):
        mask = np.ones(self.num_nodes, dtype=bool)
        mask[self.dirichlet_nodes] = False
        mask[self.interface_nodes] = False
        return np.flatnonzero(mask)

    @property
    def interface_free(self):
        """Interface nodes strictly between the two corners."""
        return self.interface_nodes[1:-1]

    def signed_areas(self):
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def node_classes(self):
        classes = np.full(self.num_nodes, "interior", dtype=object)
        classes[self.interface_nodes] = "interface"
        # exterior boundary data wins at the two corners of the interface
        classes[self.dirichlet_nodes] = "dirichlet"
        return classes

    def write_csv(self, path):
        classes = self.node_classes()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["node_id", "x", "y", "class"])
            for k, (x, y) in enumerate(self.nodes):
                writer.writerow([k, repr(float(x)), repr(float(y)), classes[k]])


def build_subdomain_mesh(n, side, pattern="diagonal"):
    """Triangulate the unit square of ``side`` with n x n cells.

    ``diagonal`` splits each cell along its lower-left to upper-right
    diagonal. ``crisscross`` joins both diagonals at a centre node, giving
    four triangles per cell and a mesh symmetric under reflection in x.
    """
    if pattern not in PATTERNS:
        raise InvalidArgument(f"unknown mesh pattern {pattern!r}")
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 2:
        raise InvalidArgument(f"need an integer n >= 2, got {n!r}")
    n = int(n)
    side = Side(side)
    x0, y0 = side.origin
    ticks = np.arange(n + 1) / n
    xs = x0 + ticks
    ys = y0 + ticks
    iface_col = n if side is Side.OMEGA1 else 0
    xs[iface_col] = INTERFACE_X

    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1))
    ii = ii.ravel()
    jj = jj.ravel()
    nodes = np.column_stack([xs[ii], ys[jj]])

    ci, cj = np.meshgrid(np.arange(n), np.arange(n))
    ci = ci.ravel()
    cj = cj.ravel()
    a = cj * (n + 1) + ci
    b = a + 1
    c = a + n + 2
    d = a + n + 1
    if pattern == "diagonal":
        triangles = np.empty((2 * n * n, 3), dtype=np.int64)
        triangles[0::2] = np.column_stack([a, b, c])
        triangles[1::2] = np.column_stack([a, c, d])
    else:
        e = (n + 1) ** 2 + np.arange(n * n)
        centres = 0.5 * (nodes[a] + nodes[c])
        nodes = np.vstack([nodes, centres])
        triangles = np.empty((4 * n * n, 3), dtype=np.int64)
        triangles[0::4] = np.column_stack([a, b, e])
        triangles[1::4] = np.column_stack([b, c, e])
        triangles[2::4] = np.column_stack([c, d, e])
        triangles[3::4] = np.column_stack([d, a, e])

    on_boundary = (ii == 0) | (ii == n) | (jj == 0) | (jj == n)
    on_interface = ii == iface_col
    corner = on_interface & ((jj == 0) | (jj == n))
    dirichlet = np.flatnonzero(on_boundary & (~on_interface | corner))
    interface = iface_col + (n + 1) * np.arange(n + 1)

    for arr in (nodes, triangles, dirichlet, interface):
        arr.setflags(write=False)
    return SubdomainMesh(n, side, nodes, triangles, dirichlet, interface, pattern)


def interface_edge_list(mesh):
    """Interface edges ordered by y, each with its single adjacent triangle.

    Returns a list of ``((node_lo, node_hi), triangle_index)``.
    """
    on_iface = np.zeros(mesh.num_nodes, dtype=bool)
    on_iface[mesh.interface_nodes] = True
    owner = {}
    for t, tri in enumerate(mesh.triangles):
        hits = [v for v in tri if on_iface[v]]
        if len(hits) == 2:
            key = tuple(sorted(hits, key=lambda v: mesh.nodes[v, 1]))
            owner.setdefault(key, []).append(t)
    iface = mesh.interface_nodes
    edges = []
    for lo, hi in zip(iface[:-1], iface[1:]):
        tris = owner[(lo, hi)]
        assert len(tris) == 1
        edges.append(((int(lo), int(hi)), tris[0]))
    return edges
