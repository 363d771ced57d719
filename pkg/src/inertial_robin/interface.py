"""Coupling machinery on the shared edge x = 1.

The inertial operators are stored as diagonal weights: by the lumped-mass
diagonality, lifting an interface function by zero and taking the adjoint
under the lumped inner product leaves only the interface-node lumped masses.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InterfaceMismatch, InvalidArgument
from .fem import CoefficientField, assemble_lumped_mass, p1_gradients
from .mesh import Side, interface_edge_list

_GAUSS2 = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


@dataclass(frozen=True, eq=False)
class InterfaceCoupling:
    mesh1: object
    mesh2: object
    pairing: np.ndarray  # pairing[k] = (omega1 node, omega2 node) at the k-th y level
    inertial_weights_1: np.ndarray
    inertial_weights_2: np.ndarray
    gamma_mass: sp.csr_matrix

    @property
    def n(self):
        return self.mesh1.subdivisions

    def mesh(self, side):
        return self.mesh1 if Side(side) is Side.OMEGA1 else self.mesh2

    def inertial_weights(self, side):
        return self.inertial_weights_1 if Side(side) is Side.OMEGA1 else self.inertial_weights_2

    def interface_nodes(self, side):
        return self.pairing[:, 0] if Side(side) is Side.OMEGA1 else self.pairing[:, 1]


def build_gamma_mass(y):
    """1-D P1 mass matrix on the interface nodes with coordinates ``y``."""
    h = np.diff(y)
    m = len(y)
    main = np.zeros(m)
    main[:-1] += h / 3.0
    main[1:] += h / 3.0
    off = h / 6.0
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


def build_interface_coupling(mesh1, mesh2, rho1=1.0, rho2=1.0):
    if mesh1.subdivisions != mesh2.subdivisions:
        raise InterfaceMismatch(
            f"subdivisions differ: {mesh1.subdivisions} vs {mesh2.subdivisions}")
    if Side(mesh1.side) is not Side.OMEGA1 or Side(mesh2.side) is not Side.OMEGA2:
        raise InterfaceMismatch("expected an omega1 mesh and an omega2 mesh")
    i1, i2 = mesh1.interface_nodes, mesh2.interface_nodes
    y1, y2 = mesh1.nodes[i1], mesh2.nodes[i2]
    if not (np.array_equal(y1, y2)):
        raise InterfaceMismatch("interface nodes do not coincide")
    w1 = assemble_lumped_mass(mesh1, rho1)[i1]
    w2 = assemble_lumped_mass(mesh2, rho2)[i2]
    pairing = np.column_stack([i1, i2])
    for arr in (pairing, w1, w2):
        arr.setflags(write=False)
    return InterfaceCoupling(mesh1, mesh2, pairing, w1, w2, build_gamma_mass(y1[:, 1]))


def trace(values, coupling, side):
    values = getattr(values, "values", values)
    return np.asarray(values)[coupling.interface_nodes(side)]


def transfer_trace(field, coupling, direction=None):
    """Interface values of ``field`` in the common y-ordering.

    ``direction`` names the source side (``"omega1"`` / ``"omega2"``, or a
    ``"omega1->omega2"`` style string); it defaults to ``field.side``.
    A field tagged with a different side raises ``InvalidArgument``.
    """
    tag = getattr(field, "side", None)
    if direction is None:
        if tag is None:
            raise InvalidArgument("direction is required for untagged values")
        source = Side(tag)
    else:
        source = Side(str(direction).split("->")[0].strip())
    if tag is not None and Side(tag) is not source:
        raise InvalidArgument(f"field lives on {tag}, not on {source.value}")
    values = np.asarray(getattr(field, "values", field))
    if len(values) != coupling.mesh(source).num_nodes:
        raise InvalidArgument("field length does not match the source mesh")
    # both sides share the y-ordering, so the pairing is the identity on positions
    return values[coupling.interface_nodes(source)].copy()


def flux_operator(donor_mesh, beta, coupling=None):
    """Sparse (n+1, N) matrix G with ``G @ u`` the donor flux vector.

    Entry j of ``G @ u`` is ``sum_e int_e beta (grad u|tau(e) . n) xi_j ds``
    over the donor's interface edges, two Gauss points per edge.
    """
    if isinstance(beta, CoefficientField):
        beta = beta.beta
    normal = Side(donor_mesh.side).normal
    grads = p1_gradients(donor_mesh)
    rows, cols, vals = [], [], []
    for k, ((lo, hi), tri) in enumerate(interface_edge_list(donor_mesh)):
        ylo, yhi = donor_mesh.nodes[lo, 1], donor_mesh.nodes[hi, 1]
        length = yhi - ylo
        ys = ylo + _GAUSS2 * length
        bq = np.broadcast_to(np.asarray(beta(np.full(2, donor_mesh.nodes[lo, 0]), ys), dtype=float), (2,))
        # hats of the edge end points at the Gauss points
        phi_lo = 1.0 - _GAUSS2
        phi_hi = _GAUSS2
        w_lo = 0.5 * length * np.sum(bq * phi_lo)
        w_hi = 0.5 * length * np.sum(bq * phi_hi)
        dn = grads[tri] @ normal  # normal derivative of each local hat
        for local_node, dval in zip(donor_mesh.triangles[tri], dn):
            rows += [k, k + 1]
            cols += [local_node, local_node]
            vals += [w_lo * dval, w_hi * dval]
    n1 = len(donor_mesh.interface_nodes)
    G = sp.coo_matrix((vals, (rows, cols)), shape=(n1, donor_mesh.num_nodes)).tocsr()
    G.sum_duplicates()
    return G


def interface_flux_vector(donor_mesh, donor_field, beta, coupling=None):
    values = np.asarray(getattr(donor_field, "values", donor_field))
    return flux_operator(donor_mesh, beta, coupling) @ values


def gamma_mass_apply(coupling, alpha, values):
    values = np.asarray(values, dtype=float)
    if len(values) != coupling.gamma_mass.shape[0]:
        raise InvalidArgument("interface vector has the wrong length")
    return alpha * (coupling.gamma_mass @ values)
