"""First-order upwind advection of a passive tracer with implicit Euler steps.

The advection operator is built from a stationary flux field expressed as
directed cell-to-cell connections plus boundary in/outflows. Faces with zero
flux advect nothing. Implicit stepping solves
``(V / dt + U) T_new = V / dt * T_old + inflows + sources``
and is unconditionally stable, so the step size is purely an accuracy knob.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from .coupling import GlobalSystem, interface_fluxes
from .elimination import ReducedSystem, reduced_fluxes
from .errors import InflowBoundaryError, ProbeError, TransportError
from .fvdiscretize.bc import DIRICHLET, NEUMANN, BoundaryConditionSet
from .fvdiscretize.operators import reconstruct_fluxes
from .linsolve import factorize


@dataclass
class TransportState:
    """Tracer concentrations at one time level."""

    concentrations: np.ndarray
    time: float = 0.0
    dt: float = 0.0
    series: list = field(default_factory=list)


@dataclass
class FluxGraph:
    """A stationary flux field as directed connections and boundary flows.

    ``connections`` holds (i, j, q) with q positive from cell i to cell j.
    ``boundary`` holds (subdomain, face, cell, q_out) with q_out positive
    out of the domain. Cell indices refer to the vector space of the
    transported field (global dofs, or kept-local dofs for reduced runs).
    """

    n_cells: int
    connections: tuple
    boundary: list
    volumes: np.ndarray


def flux_graph_from_system(system: GlobalSystem, p: np.ndarray) -> FluxGraph:
    """Connection data of a full mixed-dimensional solve."""
    mesh = system.mesh
    conn_i, conn_j, conn_q = [], [], []
    boundary = []
    for sd, disc in enumerate(system.discs):
        grid = mesh.subdomains[sd]
        fluxes = reconstruct_fluxes(disc, p[mesh.subdomain_slice(sd)])
        csr = grid.cell_faces_csr
        offset = mesh.dof_offset(sd)
        for f in range(grid.n_faces):
            sl = slice(csr.indptr[f], csr.indptr[f + 1])
            cells = csr.indices[sl]
            sgns = csr.data[sl]
            if cells.size == 2:
                c_plus = cells[np.flatnonzero(sgns > 0)[0]]
                c_minus = cells[np.flatnonzero(sgns < 0)[0]]
                conn_i.append(offset + c_plus)
                conn_j.append(offset + c_minus)
                conn_q.append(fluxes[f])
            elif not grid.internal_boundary[f]:
                q_out = float(sgns[0]) * fluxes[f]
                boundary.append((sd, f, offset + int(cells[0]), q_out))
    for c, flux in zip(system.couplings, interface_fluxes(system, p)):
        conn_i.extend(c.higher_dofs.tolist())
        conn_j.extend(c.lower_dofs.tolist())
        conn_q.extend(flux.tolist())
    return FluxGraph(
        n_cells=mesh.n_dofs,
        connections=(np.array(conn_i, dtype=int), np.array(conn_j, dtype=int), np.array(conn_q)),
        boundary=boundary,
        volumes=mesh.all_cell_volumes(),
    )


def flux_graph_from_reduced(reduced: ReducedSystem, p_kept: np.ndarray) -> FluxGraph:
    """Connection data of a reduced solve, in kept-local indices.

    Internal and interface fluxes come directly from the reduced connection
    stencil; boundary fluxes are reconstructed on the kept subdomains.
    Boundary data on eliminated subdomains is not representable here (their
    external faces carry no-flow conditions in the supported cases).
    """
    system = reduced.system
    if system is None:
        raise TransportError("reduced system lacks its originating global system")
    mesh = system.mesh
    i_loc, j_loc, q = reduced_fluxes(reduced, p_kept)
    kept_local = -np.ones(mesh.n_dofs, dtype=int)
    kept_local[reduced.kept] = np.arange(reduced.kept.size)
    boundary = []
    volumes = mesh.all_cell_volumes()[reduced.kept]
    for sd, disc in enumerate(system.discs):
        grid = mesh.subdomains[sd]
        dofs = np.arange(mesh.dof_offset(sd), mesh.dof_offset(sd) + grid.n_cells)
        locs = kept_local[dofs]
        if np.any(locs < 0):
            continue  # eliminated subdomain
        fluxes = reconstruct_fluxes(disc, p_kept[locs])
        csr = grid.cell_faces_csr
        for f in range(grid.n_faces):
            sl = slice(csr.indptr[f], csr.indptr[f + 1])
            cells = csr.indices[sl]
            sgns = csr.data[sl]
            if cells.size == 1 and not grid.internal_boundary[f]:
                q_out = float(sgns[0]) * fluxes[f]
                boundary.append((sd, f, int(locs[cells[0]]), q_out))
    return FluxGraph(
        n_cells=reduced.kept.size,
        connections=(i_loc, j_loc, q),
        boundary=boundary,
        volumes=volumes,
    )


def upwind_operator(
    graph: FluxGraph, transport_bcs: list[BoundaryConditionSet]
) -> tuple[sps.csr_matrix, np.ndarray]:
    """Upwind advection operator and boundary inflow vector.

    The upstream cell's concentration multiplies each connection flux;
    inflow Dirichlet boundaries contribute prescribed concentrations, Neumann
    transport boundaries prescribe the tracer flux itself. Zero-flux faces
    contribute nothing.

    Raises:
        InflowBoundaryError: An inflow face without transport data.
    """
    n = graph.n_cells
    rows, cols, vals = [], [], []
    inflow = np.zeros(n)
    ci, cj, cq = graph.connections
    for i, j, q in zip(ci, cj, cq):
        if q > 0.0:
            upstream = i
        elif q < 0.0:
            upstream = j
        else:
            continue
        rows += [i, j]
        cols += [upstream, upstream]
        vals += [q, -q]
    for sd, f, cell, q_out in graph.boundary:
        bc = transport_bcs[sd]
        kind = bc.kind[f]
        if kind == NEUMANN:
            area = bc.grid.face_areas[f]
            inflow[cell] -= bc.value_at(f) * area
        elif q_out > 0.0:
            rows.append(cell)
            cols.append(cell)
            vals.append(q_out)
        elif q_out < 0.0:
            if kind == DIRICHLET:
                inflow[cell] += -q_out * bc.value_at(f)
            else:
                raise InflowBoundaryError(
                    f"inflow face {f} of subdomain {sd} has no transport boundary condition"
                )
    operator = sps.csr_matrix((vals, (rows, cols)), shape=(n, n))
    operator.sum_duplicates()
    return operator, inflow


def implicit_euler_step(
    state: TransportState,
    volumes: np.ndarray,
    operator: sps.csr_matrix,
    inflow: np.ndarray,
    source_rates: np.ndarray | None,
    dt: float,
    factor=None,
) -> TransportState:
    """One implicit Euler step of the advection equation.

    ``source_rates`` are per-cell integrated tracer rates. A prefactorized
    step matrix may be supplied for repeated stepping.
    """
    if dt <= 0.0:
        raise TransportError(f"step size must be positive, got {dt}")
    n = volumes.size
    mass = volumes / dt
    if factor is None:
        factor = factorize(sps.diags(mass) + operator)
    rhs = mass * state.concentrations + inflow
    if source_rates is not None:
        rhs = rhs + source_rates
    new = factor.solve(rhs)
    return TransportState(
        concentrations=new, time=state.time + dt, dt=dt, series=state.series
    )


def resolve_probe(mesh, point: np.ndarray, dims=None) -> int:
    """Global dof of the cell nearest to a probe point.

    Raises:
        ProbeError: If several cells tie for the nearest distance, listing
            the candidates.
    """
    point = np.asarray(point, dtype=float)
    centres = mesh.all_cell_centres()
    dof_dims = mesh.dof_dims()
    mask = np.ones(mesh.n_dofs, dtype=bool)
    if dims is not None:
        mask = np.isin(dof_dims, np.atleast_1d(dims))
    dofs = np.flatnonzero(mask)
    dist = np.linalg.norm(centres[dofs] - point, axis=1)
    best = dist.min()
    tol = 1e-12 * max(mesh.domain_diameter(), 1.0)
    ties = dofs[dist <= best + tol]
    if ties.size != 1:
        listing = ", ".join(
            f"dof {d} at {np.array2string(centres[d], precision=6)}" for d in ties
        )
        raise ProbeError(f"probe {point} is ambiguous between: {listing}")
    return int(ties[0])


def monitor(state: TransportState, cell: int) -> tuple[float, float]:
    """Record and return the (time, concentration) sample of one cell."""
    sample = (state.time, float(state.concentrations[cell]))
    state.series.append(sample)
    return sample


class TracerSimulation:
    """Implicit-Euler advection on a fixed flux field, with monitoring."""

    def __init__(
        self,
        graph: FluxGraph,
        transport_bcs: list[BoundaryConditionSet],
        initial: np.ndarray,
        dt: float,
        source_rates: np.ndarray | None = None,
    ):
        self.graph = graph
        self.operator, self.inflow = upwind_operator(graph, transport_bcs)
        self.dt = float(dt)
        self.source_rates = source_rates
        self.state = TransportState(np.asarray(initial, dtype=float).copy(), 0.0, self.dt)
        self._factor = factorize(sps.diags(graph.volumes / self.dt) + self.operator)
        # Outflow terms that entered the operator (advective upwind outflow).
        self._outflow = [
            (cell, q_out)
            for sd, f, cell, q_out in graph.boundary
            if transport_bcs[sd].kind[f] != NEUMANN and q_out > 0.0
        ]
        self._mass_error_abs = 0.0
        self._mass_scale = 0.0
        self.bounds = (float(self.state.concentrations.min()), float(self.state.concentrations.max()))

    def step(self, probe_cell: int | None = None) -> TransportState:
        previous = self.state.concentrations
        self.state = implicit_euler_step(
            self.state, self.graph.volumes, self.operator, self.inflow,
            self.source_rates, self.dt, factor=self._factor,
        )
        current = self.state.concentrations
        self._account(previous, current)
        self.bounds = (
            min(self.bounds[0], float(current.min())),
            max(self.bounds[1], float(current.max())),
        )
        if probe_cell is not None:
            monitor(self.state, probe_cell)
        return self.state

    @property
    def mass_accounting_error(self) -> float:
        """Largest storage-vs-throughflow mismatch, relative to the largest
        throughflow magnitude encountered."""
        return self._mass_error_abs / max(self._mass_scale, 1e-300)

    def _account(self, previous: np.ndarray, current: np.ndarray):
        """Independent mass bookkeeping from the boundary list."""
        storage = float(self.graph.volumes @ (current - previous)) / self.dt
        through = float(self.inflow.sum())
        for cell, q_out in self._outflow:
            through -= q_out * current[cell]
        if self.source_rates is not None:
            through += float(np.sum(self.source_rates))
        self._mass_error_abs = max(self._mass_error_abs, abs(storage - through))
        self._mass_scale = max(self._mass_scale, abs(storage), abs(through))

    def run(self, n_steps: int, probe_cell: int | None = None) -> TransportState:
        for _ in range(n_steps):
            self.step(probe_cell)
        return self.state


def write_series_csv(path, series) -> None:
    """Monitored samples as CSV with header ``time,concentration``."""
    with open(path, "w") as handle:
        handle.write("time,concentration\n")
        for t, value in series:
            handle.write(f"{t:.17g},{value:.17g}\n")
