"""Backward Euler time marching for the two-subdomain heat problem.

Five schemes share one :class:`Discretization`:

``coupled``  monolithic solve, interface nodes shared by both subdomains
``dn``       Dirichlet on the first side, Neumann on the second
``rr``       classical Robin-Robin with relaxation parameters alpha1, alpha2
``irn``      inertial Robin on the first side, Neumann on the second
``irr``      inertial Robin on both sides

"First side" is omega1 unless ``swap_roles`` is set. Exterior boundary data
is homogeneous; the two interface corners are treated as exterior Dirichlet
nodes in every scheme.
"""

from dataclasses import dataclass, field
import csv
import logging

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgument
from .fem import (assemble_load, assemble_lumped_mass, assemble_mass,
                  assemble_stiffness, load_quadrature)
from .interface import build_interface_coupling, flux_operator
from .mesh import PATTERNS, Side, build_subdomain_mesh
from .solvers import SPDSolver

log = logging.getLogger(__name__)

KINDS = ("coupled", "dn", "rr", "irn", "irr")
HISTORY_INITS = ("zero_rate", "exact_history")
FLUXES = ("residual", "gradient")

RUNNING = "running"
CONVERGED = "converged"
DIVERGED = "diverged"


@dataclass(frozen=True)
class SchemeConfig:
    kind: str
    n: int
    dt: float
    T: float = 1.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    history_init: str = "zero_rate"
    solver_tol: float = 1e-12
    divergence_threshold: float = 1e6
    swap_roles: bool = False
    lumped_coupled: bool = False
    solver: str = "direct"
    # scales the inertial interface weights only; 0 removes the inertial terms
    inertial_weight_scale: float = 1.0
    # "residual": flux recovered from the donor's own discrete equation at the
    # interface nodes; "gradient": beta grad(u).n of the adjacent donor triangle
    flux: str = "residual"
    mesh_pattern: str = "crisscross"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown scheme {self.kind!r}; choose from {KINDS}")
        if not self.dt > 0:
            raise InvalidArgument("dt must be positive")
        if not self.T > 0:
            raise InvalidArgument("T must be positive")
        if self.history_init not in HISTORY_INITS:
            raise InvalidArgument(f"history_init must be one of {HISTORY_INITS}")
        if self.solver not in ("direct", "cg"):
            raise InvalidArgument("solver must be 'direct' or 'cg'")
        if self.flux not in FLUXES:
            raise InvalidArgument(f"flux must be one of {FLUXES}")
        if self.mesh_pattern not in PATTERNS:
            raise InvalidArgument(f"mesh_pattern must be one of {PATTERNS}")
        if self.kind == "rr" and not (self.alpha1 > 0 and self.alpha2 > 0):
            raise InvalidArgument("rr needs alpha1 > 0 and alpha2 > 0")
        if self.steps < 1:
            raise InvalidArgument("T/dt rounds to zero steps")

    @property
    def steps(self):
        return int(round(self.T / self.dt))

    @property
    def t_final(self):
        return self.steps * self.dt

    @property
    def roles(self):
        if self.swap_roles:
            return Side.OMEGA2, Side.OMEGA1
        return Side.OMEGA1, Side.OMEGA2

    def alpha(self, side):
        return self.alpha1 if Side(side) is Side.OMEGA1 else self.alpha2


class Discretization:
    """Everything assembled once per run: meshes, matrices, coupling, solvers."""

    def __init__(self, problem, config):
        self.problem = problem
        self.config = config
        n, dt = config.n, config.dt
        self.dt = dt
        self.meshes = {s: build_subdomain_mesh(n, s, config.mesh_pattern) for s in Side}
        self.coupling = build_interface_coupling(
            self.meshes[Side.OMEGA1], self.meshes[Side.OMEGA2], problem.rho1, problem.rho2)
        self.mass = {}
        self.lumped = {}
        self.stiffness = {}
        self.flux = {}
        self._quad = {}
        self._sources = {}
        for s, mesh in self.meshes.items():
            rho = problem.rho(s)
            self.mass[s] = assemble_mass(mesh, rho)
            self.lumped[s] = assemble_lumped_mass(mesh, rho)
            self.stiffness[s] = assemble_stiffness(mesh, problem.beta(s))
            self.flux[s] = flux_operator(mesh, problem.beta(s))
            self._quad[s] = load_quadrature(mesh)
            self._sources[s] = problem.source(s)
        self._solvers = {}
        self._load_cache = {}

    def mesh(self, side):
        return self.meshes[Side(side)]

    def load(self, side, t):
        side = Side(side)
        key = (side, t)
        if key not in self._load_cache:
            if len(self._load_cache) > 8:
                self._load_cache.clear()
            self._load_cache[key] = assemble_load(
                self.meshes[side], self._sources[side], t, self._quad[side])
        return self._load_cache[key]

    def inertial_weights(self, side):
        return self.config.inertial_weight_scale * self.coupling.inertial_weights(side)

    def time_matrix(self, side, lumped=False):
        side = Side(side)
        if lumped:
            return sp.diags(self.lumped[side] / self.dt, format="csr")
        return self.mass[side] / self.dt

    def base_matrix(self, side, lumped=False):
        return (self.time_matrix(side, lumped) + self.stiffness[side]).tocsr()

    def flux_vector(self, side, u_new, u_old, t):
        """Interface flux of ``u_new`` out of ``side``, one entry per interface node."""
        side = Side(side)
        if self.config.flux == "gradient":
            return self.flux[side] @ u_new
        r = self.mass[side] @ (u_new - u_old) / self.dt + self.stiffness[side] @ u_new - self.load(side, t)
        return r[self.mesh(side).interface_nodes]

    def interface_embedding(self, side):
        """(N, n+1) selection matrix placing interface values on mesh nodes."""
        mesh = self.mesh(side)
        idx = mesh.interface_nodes
        m = len(idx)
        return sp.csr_matrix((np.ones(m), (idx, np.arange(m))), shape=(mesh.num_nodes, m))

    def system(self, key, build):
        """Cached ``(A, free, solver)`` for a system that is fixed over the run."""
        if key not in self._solvers:
            A, free = build()
            solver = SPDSolver(A[free][:, free], self.config.solver_tol, self.config.solver)
            self._solvers[key] = (A, free, solver)
        return self._solvers[key]

    def interpolate(self, side, t):
        x, y = self.mesh(side).nodes.T
        values = self.problem.exact_value(x, y, t)
        values[self.mesh(side).dirichlet_nodes] = 0.0
        return values


@dataclass
class SteppingState:
    """Current and previous nodal values on both sides at time index ``step``."""

    u: dict
    u_prev: dict
    step: int = 0
    t: float = 0.0
    status: str = RUNNING

    @property
    def u1(self):
        return self.u[Side.OMEGA1]

    @property
    def u2(self):
        return self.u[Side.OMEGA2]

    def advanced(self, new, t_next, threshold):
        state = SteppingState(new, dict(self.u), self.step + 1, t_next, RUNNING)
        for v in new.values():
            if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > threshold:
                state.status = DIVERGED
                break
        return state


def initial_state(disc):
    u0 = {s: disc.interpolate(s, 0.0) for s in Side}
    if disc.config.history_init == "exact_history":
        prev = {s: disc.interpolate(s, -disc.dt) for s in Side}
    else:
        prev = {s: v.copy() for s, v in u0.items()}
    return SteppingState(u0, prev)


def _free_nodes(mesh, pinned=()):
    mask = np.ones(mesh.num_nodes, dtype=bool)
    mask[mesh.dirichlet_nodes] = False
    mask[np.asarray(pinned, dtype=np.int64)] = False
    return np.flatnonzero(mask)


def subdomain_system(disc, side, extra=None, pin_interface=False, lumped=False):
    """Reduced matrix and free-node index set for one subdomain solve."""
    mesh = disc.mesh(side)
    A = disc.base_matrix(side, lumped)
    if extra is not None:
        A = (A + extra).tocsr()
    pinned = mesh.interface_free if pin_interface else ()
    free = _free_nodes(mesh, pinned)
    return A, free


def _solve_subdomain(disc, key, side, u_old, t, extra=None, rhs_extra=None, pinned_values=None):
    """One backward Euler solve on ``side`` with optional interface terms.

    ``extra`` is a zero-argument callable returning a matrix added to the
    system, called only when the system is first built. ``rhs_extra`` is a
    full-length vector added to the right-hand side. ``pinned_values`` fixes the non-corner interface
    nodes to the given values (length n+1, corners ignored).
    """
    mesh = disc.mesh(side)
    pin = pinned_values is not None
    A, free, solver = disc.system(
        key, lambda: subdomain_system(disc, side, extra() if extra else None, pin_interface=pin))
    rhs = disc.time_matrix(side) @ u_old + disc.load(side, t)
    if rhs_extra is not None:
        rhs = rhs + rhs_extra
    u = np.zeros(mesh.num_nodes)
    if pin:
        pinned = mesh.interface_free
        u[pinned] = pinned_values[1:-1]
        rhs = rhs - A[:, pinned] @ u[pinned]
    u[free] = solver.solve(rhs[free])
    return u


def _on_interface(disc, side, iface_vec):
    """Scatter an (n+1) interface vector onto the non-corner interface rows."""
    mesh = disc.mesh(side)
    out = np.zeros(mesh.num_nodes)
    out[mesh.interface_free] = iface_vec[1:-1]
    return out


def _iface(disc, side, values):
    return values[disc.mesh(side).interface_nodes]


def _diag_on_interface(disc, side, weights):
    mesh = disc.mesh(side)
    d = np.zeros(mesh.num_nodes)
    d[mesh.interface_free] = weights[1:-1]
    return sp.diags(d, format="csr")


def _roles(disc, roles):
    return roles if roles is not None else disc.config.roles


# -- monolithic -----------------------------------------------------------

class MergedSystem:
    """Global numbering with one unknown per interface node pair."""

    def __init__(self, disc):
        m1, m2 = disc.mesh(Side.OMEGA1), disc.mesh(Side.OMEGA2)
        n1, n2 = m1.num_nodes, m2.num_nodes
        glob2 = np.full(n2, -1, dtype=np.int64)
        glob2[m2.interface_nodes] = m1.interface_nodes
        rest = np.setdiff1d(np.arange(n2), m2.interface_nodes)
        glob2[rest] = n1 + np.arange(len(rest))
        self.size = n1 + len(rest)
        self.maps = {Side.OMEGA1: np.arange(n1), Side.OMEGA2: glob2}
        self.scatter = {
            s: sp.csr_matrix((np.ones(len(g)), (g, np.arange(len(g)))), shape=(self.size, len(g)))
            for s, g in self.maps.items()
        }
        dirichlet = np.union1d(m1.dirichlet_nodes, glob2[m2.dirichlet_nodes])
        mask = np.ones(self.size, dtype=bool)
        mask[dirichlet] = False
        self.free = np.flatnonzero(mask)

    def combine(self, mats):
        return sum(self.scatter[s] @ A @ self.scatter[s].T for s, A in mats.items()).tocsr()

    def gather(self, vecs):
        return sum(self.scatter[s] @ v for s, v in vecs.items())


def _merged(disc):
    if not hasattr(disc, "_merged"):
        disc._merged = MergedSystem(disc)
    return disc._merged


def step_coupled(state, disc, t_next):
    lumped = disc.config.lumped_coupled
    g = _merged(disc)
    _, _, solver = disc.system(
        ("coupled", lumped),
        lambda: (g.combine({s: disc.base_matrix(s, lumped) for s in Side}), g.free))
    rhs = g.gather({s: disc.time_matrix(s, lumped) @ state.u[s] + disc.load(s, t_next)
                    for s in Side})
    ug = np.zeros(g.size)
    ug[g.free] = solver.solve(rhs[g.free])
    new = {s: ug[g.maps[s]] for s in Side}
    return state.advanced(new, t_next, disc.config.divergence_threshold)


# -- partitioned ----------------------------------------------------------

def step_dn(state, disc, t_next, roles=None):
    a, b = _roles(disc, roles)
    ua = _solve_subdomain(disc, ("dn", a), a, state.u[a], t_next,
                          pinned_values=_iface(disc, b, state.u[b]))
    flux_a = disc.flux_vector(a, ua, state.u[a], t_next)
    ub = _solve_subdomain(disc, ("neumann", b), b, state.u[b], t_next,
                          rhs_extra=-_on_interface(disc, b, flux_a))
    return state.advanced({a: ua, b: ub}, t_next, disc.config.divergence_threshold)


def step_rr(state, disc, alpha1, alpha2, t_next, roles=None):
    a, b = _roles(disc, roles)
    alphas = {Side.OMEGA1: alpha1, Side.OMEGA2: alpha2}
    Mg = disc.coupling.gamma_mass

    def robin_solve(side, donor, donor_values, donor_flux):
        E = disc.interface_embedding(side)
        alpha = alphas[side]
        donor_trace = _iface(disc, donor, donor_values)
        rhs_iface = alpha * (Mg @ donor_trace) - donor_flux
        return _solve_subdomain(disc, ("rr", side, alpha), side, state.u[side], t_next,
                                extra=lambda: alpha * (E @ Mg @ E.T),
                                rhs_extra=_on_interface(disc, side, rhs_iface))

    ua = robin_solve(a, b, state.u[b], disc.flux_vector(b, state.u[b], state.u_prev[b], state.t))
    ub = robin_solve(b, a, ua, disc.flux_vector(a, ua, state.u[a], t_next))
    return state.advanced({a: ua, b: ub}, t_next, disc.config.divergence_threshold)


def _inertial_first_solve(state, disc, a, b, t_next):
    dt = disc.dt
    w = disc.inertial_weights(b)
    trace_now = _iface(disc, b, state.u[b])
    trace_prev = _iface(disc, b, state.u_prev[b])
    # w (u_a^n - u_b^{n-1})/dt = w (u_b^{n-1} - u_b^{n-2})/dt - flux_b^{n-1}
    rhs_iface = (w * (trace_now / dt + (trace_now - trace_prev) / dt)
                 - disc.flux_vector(b, state.u[b], state.u_prev[b], state.t))
    return _solve_subdomain(disc, ("inertial", a), a, state.u[a], t_next,
                            extra=lambda: _diag_on_interface(disc, a, w / dt),
                            rhs_extra=_on_interface(disc, a, rhs_iface))


def step_irn(state, disc, t_next, roles=None):
    a, b = _roles(disc, roles)
    ua = _inertial_first_solve(state, disc, a, b, t_next)
    ub = _solve_subdomain(disc, ("neumann", b), b, state.u[b], t_next,
                          rhs_extra=-_on_interface(disc, b, disc.flux_vector(a, ua, state.u[a], t_next)))
    return state.advanced({a: ua, b: ub}, t_next, disc.config.divergence_threshold)


def step_irr(state, disc, t_next, roles=None):
    a, b = _roles(disc, roles)
    dt = disc.dt
    ua = _inertial_first_solve(state, disc, a, b, t_next)
    w = disc.inertial_weights(a)
    fresh = _iface(disc, a, ua)
    old_full = state.u[a]
    old = _iface(disc, a, old_full)
    rhs_iface = w * (old / dt + (fresh - old) / dt) - disc.flux_vector(a, ua, old_full, t_next)
    ub = _solve_subdomain(disc, ("inertial", b), b, state.u[b], t_next,
                          extra=lambda: _diag_on_interface(disc, b, w / dt),
                          rhs_extra=_on_interface(disc, b, rhs_iface))
    return state.advanced({a: ua, b: ub}, t_next, disc.config.divergence_threshold)


def step(state, disc, t_next):
    cfg = disc.config
    if cfg.kind == "coupled":
        return step_coupled(state, disc, t_next)
    if cfg.kind == "dn":
        return step_dn(state, disc, t_next)
    if cfg.kind == "rr":
        return step_rr(state, disc, cfg.alpha1, cfg.alpha2, t_next)
    if cfg.kind == "irn":
        return step_irn(state, disc, t_next)
    return step_irr(state, disc, t_next)


# -- driver ---------------------------------------------------------------

@dataclass
class SimulationRun:
    config: SchemeConfig
    problem: object
    disc: Discretization
    state: SteppingState
    trajectory: list = field(default_factory=list)

    @property
    def status(self):
        return self.state.status

    @property
    def diverged(self):
        return self.state.status == DIVERGED

    @property
    def steps_taken(self):
        return self.state.step

    @property
    def t_final(self):
        return self.state.t

    @property
    def u1(self):
        return self.state.u1

    @property
    def u2(self):
        return self.state.u2

    def mesh(self, side):
        return self.disc.mesh(side)


def run_simulation(config, problem, record_trajectory=False, trace_log=None):
    """March ``config.steps`` backward Euler steps from the exact initial state."""
    disc = Discretization(problem, config)
    state = initial_state(disc)
    trajectory = [(state.t, state.u1.copy(), state.u2.copy())] if record_trajectory else []
    writer = None
    fh = None
    if trace_log is not None:
        fh = open(trace_log, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(["step", "t", "max_u1", "max_u2", "interface_residual"])
    try:
        for k in range(1, config.steps + 1):
            state = step(state, disc, k * config.dt)
            if record_trajectory:
                trajectory.append((state.t, state.u1.copy(), state.u2.copy()))
            if writer is not None:
                jump = _iface(disc, Side.OMEGA1, state.u1) - _iface(disc, Side.OMEGA2, state.u2)
                writer.writerow([k, f"{state.t:.6g}", f"{np.max(np.abs(state.u1)):.6e}",
                                 f"{np.max(np.abs(state.u2)):.6e}", f"{np.max(np.abs(jump)):.6e}"])
            if state.status == DIVERGED:
                log.info("%s n=%d diverged at step %d", config.kind, config.n, k)
                break
    finally:
        if fh is not None:
            fh.close()
    if state.status == RUNNING:
        state.status = CONVERGED
    return SimulationRun(config, problem, disc, state, trajectory)


def verify_inertial_identity(trajectory, disc):
    """Largest residual of the discrete interface identity along a trajectory.

    For every step and every non-corner interface hat the identity reads
    ``w1 d(u2)/dt + R2 = w1 d(u1)/dt - R1`` where ``R_i`` is the lumped-mass
    subdomain residual tested with the zero-extension of that hat and ``w1``
    are the omega1 inertial weights. Time derivatives are backward differences.
    """
    dt = disc.dt
    w1 = disc.coupling.inertial_weights_1[1:-1]
    worst = 0.0
    for (_, u1_old, u2_old), (t, u1, u2) in zip(trajectory[:-1], trajectory[1:]):
        residual = {}
        rate = {}
        for s, new, old in ((Side.OMEGA1, u1, u1_old), (Side.OMEGA2, u2, u2_old)):
            mesh = disc.mesh(s)
            r = disc.lumped[s] * (new - old) / dt + disc.stiffness[s] @ new - disc.load(s, t)
            residual[s] = r[mesh.interface_free]
            rate[s] = (new - old)[mesh.interface_free] / dt
        lhs = w1 * rate[Side.OMEGA2] + residual[Side.OMEGA2]
        rhs = w1 * rate[Side.OMEGA1] - residual[Side.OMEGA1]
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst
