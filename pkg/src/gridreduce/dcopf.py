"""DC optimal power flow as a linear program.

Variables are bus voltage angles and generator outputs. The flow on branch k
is b_k (theta_src - theta_dst) with b_k = x / (r^2 + x^2) in MW per radian
after scaling by the source-side base voltage squared, so ohmic impedances
feed the model directly. One power-balance equality per bus makes the
equality duals the locational marginal prices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .model import CONVERTER, LINE, Grid

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical_failure"


class UnsupportedBranchError(Exception):
    pass


@dataclass(frozen=True)
class OpfSolution:
    """Dispatch, flow magnitudes, prices and solve status.

    flow holds the absolute branch flow in MW; in this lossless model both
    terminals of a branch carry the same magnitude.
    """

    dispatch: dict[int, float]
    flow: dict[int, float]
    lmp: dict[int, float]
    objective: float
    status: str


@dataclass(frozen=True)
class OpfProblem:
    c: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    a_ub: np.ndarray | None
    b_ub: np.ndarray | None
    lower: np.ndarray
    upper: np.ndarray
    bus_column: dict[int, int]
    gen_column: dict[int, int]
    balance_row: dict[int, int]
    # branch id -> (susceptance MW/rad, src column, dst column)
    branch_terms: dict[int, tuple[float, int, int]]
    cost_constant_total: float


def build_problem(grid: Grid) -> OpfProblem:
    """Assemble the LP for a valid, connected grid."""
    for br in grid.branches:
        if br.kind == CONVERTER:
            raise UnsupportedBranchError(f"branch {br.id}: converter branches have no flow model here")
        if br.series_reactance == 0.0:
            if br.kind == LINE:
                raise UnsupportedBranchError(f"branch {br.id}: zero-reactance branch")
            # a zero-reactance transformer would carry no flow at all
            raise UnsupportedBranchError(f"branch {br.id}: zero-reactance {br.kind} cannot carry flow")

    n_bus = len(grid.buses)
    n_gen = len(grid.generators)
    n_var = n_bus + n_gen
    bus_column = {b.id: i for i, b in enumerate(grid.buses)}
    gen_column = {g.id: n_bus + i for i, g in enumerate(grid.generators)}
    balance_row = {b.id: i for i, b in enumerate(grid.buses)}

    a_eq = np.zeros((n_bus, n_var))
    b_eq = np.zeros(n_bus)
    for l in grid.loads:
        b_eq[balance_row[l.bus]] += l.p_demand
    for g in grid.generators:
        a_eq[balance_row[g.bus], gen_column[g.id]] = 1.0

    branch_terms: dict[int, tuple[float, int, int]] = {}
    rated: list[tuple[float, int, int, float]] = []
    for br in grid.branches:
        kv = grid.bus_by_id[br.src_bus].base_kv
        r, x = br.series_resistance, br.series_reactance
        b_mw = x / (r * r + x * x) * kv * kv  # MW per radian of angle spread
        s, d = bus_column[br.src_bus], bus_column[br.dst_bus]
        branch_terms[br.id] = (b_mw, s, d)
        # outflow b(ts - td) leaves src and enters dst
        a_eq[balance_row[br.src_bus], s] -= b_mw
        a_eq[balance_row[br.src_bus], d] += b_mw
        a_eq[balance_row[br.dst_bus], s] += b_mw
        a_eq[balance_row[br.dst_bus], d] -= b_mw
        if br.rating is not None:
            rated.append((b_mw, s, d, br.rating))

    a_ub = None
    b_ub = None
    if rated:
        a_ub = np.zeros((2 * len(rated), n_var))
        b_ub = np.zeros(2 * len(rated))
        for i, (b_mw, s, d, rating) in enumerate(rated):
            a_ub[2 * i, s] = b_mw
            a_ub[2 * i, d] = -b_mw
            b_ub[2 * i] = rating
            a_ub[2 * i + 1, s] = -b_mw
            a_ub[2 * i + 1, d] = b_mw
            b_ub[2 * i + 1] = rating

    lower = np.full(n_var, -np.inf)
    upper = np.full(n_var, np.inf)
    for g in grid.generators:
        lower[gen_column[g.id]] = g.p_min
        upper[gen_column[g.id]] = g.p_max
    ref = grid.reference_bus
    if ref is not None:
        lower[bus_column[ref]] = 0.0
        upper[bus_column[ref]] = 0.0

    c = np.zeros(n_var)
    for g in grid.generators:
        c[gen_column[g.id]] = g.cost_linear

    return OpfProblem(
        c=c,
        a_eq=a_eq,
        b_eq=b_eq,
        a_ub=a_ub,
        b_ub=b_ub,
        lower=lower,
        upper=upper,
        bus_column=bus_column,
        gen_column=gen_column,
        balance_row=balance_row,
        branch_terms=branch_terms,
        cost_constant_total=sum(g.cost_constant for g in grid.generators),
    )


_STATUS = {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}


def solve(problem: OpfProblem, tolerance: float = 1e-6) -> OpfSolution:
    """Solve the LP; infeasible and unbounded cases come back in status."""
    tol = max(float(tolerance), 1e-9)
    res = linprog(
        problem.c,
        A_ub=problem.a_ub,
        b_ub=problem.b_ub,
        A_eq=problem.a_eq,
        b_eq=problem.b_eq,
        bounds=np.column_stack((problem.lower, problem.upper)),
        method="highs",
        options={
            "primal_feasibility_tolerance": tol,
            "dual_feasibility_tolerance": tol,
        },
    )
    status = _STATUS.get(res.status, NUMERICAL_FAILURE)
    if status != OPTIMAL:
        return OpfSolution(dispatch={}, flow={}, lmp={}, objective=float("nan"), status=status)

    x = res.x
    dispatch = {gid: float(x[col]) for gid, col in problem.gen_column.items()}
    flow = {
        bid: abs(float(b_mw * (x[s] - x[d])))
        for bid, (b_mw, s, d) in problem.branch_terms.items()
    }
    duals = res.eqlin.marginals
    lmp = {bus_id: float(duals[row]) for bus_id, row in problem.balance_row.items()}
    objective = float(res.fun) + problem.cost_constant_total
    return OpfSolution(dispatch=dispatch, flow=flow, lmp=lmp, objective=objective, status=status)


def flows_at_limit(solution: OpfSolution, grid: Grid, loading_threshold: float) -> set[int]:
    """Rated branches carrying flow at or above the threshold fraction."""
    out = set()
    for br in grid.branches:
        if br.rating is None:
            continue
        f = solution.flow.get(br.id, 0.0)
        if f > 0.0 and f >= loading_threshold * br.rating:
            out.add(br.id)
    return out
