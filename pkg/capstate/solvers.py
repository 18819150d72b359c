# **************************************************************************
# *
# * Authors:     Grigory Sharov (gsharov@mrc-lmb.cam.ac.uk) [1]
# *
# * [1] MRC Laboratory of Molecular Biology (MRC-LMB)
# *
# * This program is free software; you can redistribute it and/or modify
# * it under the terms of the GNU General Public License as published by
# * the Free Software Foundation; either version 3 of the License, or
# * (at your option) any later version.
# *
# * This program is distributed in the hope that it will be useful,
# * but WITHOUT ANY WARRANTY; without even the implied warranty of
# * MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# * GNU General Public License for more details.
# *
# * You should have received a copy of the GNU General Public License
# * along with this program; if not, write to the Free Software
# * Foundation, Inc., 59 Temple Place, Suite 330, Boston, MA
# * 02111-1307  USA
# *
# *  All comments concerning this program package may be sent to the
# *  e-mail address 'gsharov@mrc-lmb.cam.ac.uk'
# *
# **************************************************************************

"""
Capacity and rate-region solvers for causal-state channels.

Every causal-state problem is solved on its strategy channel. Single-user
capacity is exact (Blahut-Arimoto with a capacity bracket); broadcast, relay
and multiple access results are achievable values under the strategy
parametrization, found by multi-restart ascent or sampling, and can be
cross-checked against an exhaustive lattice oracle.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import logsumexp, softmax

from capstate.channels import (BroadcastStateChannel, MACStateChannel, RelayStateChannel,
                               StateChannel, check_bc_degraded, check_relay_degraded,
                               check_stochastic, induced_bc_strategy_channel,
                               induced_relay_joint, induced_strategy_channel,
                               mac_strategy_tensor, relay_strategy_tensor, strategy_tables)
from capstate.probcore import (Factor, JointPmf, assemble_joint, entropy_along,
                               mutual_information, xlog2x)
from capstate.utils.errors import CapExceededError, DegradednessError
from capstate.utils.hull import ORIGIN, downward_closed_boundary, polygon_contains
from capstate.utils.simplex import (finest_resolution, lattice_size, project_simplex,
                                    random_pmfs, simplex_lattice)
from capstate.utils.tools import env_int, logger

EXACT_LABEL = "exact"
BOUND_LABEL = "achievable lower bound under the strategy parametrization"
OUTER_LABEL = "sampled outer bound; containment test uses margin"

DEFAULT_GRID_BUDGET = 10 ** 7
DEFAULT_RESTARTS = 32
DEFAULT_LAMBDA_POINTS = 33
DEFAULT_SAMPLES = 4096
LOG_FLOOR = 1e-15


class SolveStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITER = "max-iter"


@dataclass(frozen=True, eq=False)
class SolveReport:
    """ Result of one optimization.
    `terms` holds the named information quantities at the argmax (and the
    bracket for Blahut-Arimoto), `argmax` the maximizing distributions.
    """
    value: float
    status: SolveStatus
    label: str
    terms: dict[str, float] = field(default_factory=dict)
    argmax: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    iterations: int = 0
    restarts: int = 0
    oracle_gap: Optional[float] = None

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError(f"Invalid solver value {self.value}")


@dataclass(frozen=True)
class RatePoint:
    r1: float
    r2: float

    def __post_init__(self):
        if self.r1 < 0 or self.r2 < 0:
            raise ValueError(f"Rates must be nonnegative, got ({self.r1}, {self.r2})")


@dataclass(frozen=True, eq=False)
class RateRegion:
    """ Convex, downward-closed region stored by its upper-right boundary.
    Vertices run from the R2 axis to the R1 axis; `provenance` says where each
    vertex came from and `witnesses` holds the distributions achieving it.
    """
    vertices: tuple[RatePoint, ...]
    provenance: tuple[str, ...]
    witnesses: tuple[dict, ...] = field(repr=False)
    label: str

    @classmethod
    def from_points(cls,
                    points: Sequence[tuple[float, float]],
                    provenance: Sequence[str],
                    witnesses: Sequence[dict],
                    label: str) -> "RateRegion":
        coords, sources = downward_closed_boundary(np.asarray(points, dtype=float))
        vertices = tuple(RatePoint(float(x), float(y)) for x, y in coords)
        prov = tuple("origin" if s == ORIGIN else provenance[s] for s in sources)
        wit = tuple({} if s == ORIGIN else witnesses[s] for s in sources)
        return cls(vertices, prov, wit, label)

    def as_array(self) -> np.ndarray:
        return np.array([[v.r1, v.r2] for v in self.vertices])

    def contains(self, point: tuple[float, float], margin: float = 1e-9) -> bool:
        return polygon_contains(self.as_array(), np.asarray(point, dtype=float), margin)

    def contains_region(self, other: "RateRegion", slack: float = 1e-9) -> bool:
        return all(self.contains((v.r1, v.r2), slack) for v in other.vertices)

    def max_weighted(self, lam: float) -> float:
        arr = self.as_array()
        return float(np.max(lam * arr[:, 0] + (1.0 - lam) * arr[:, 1]))

    def max_sum_rate(self) -> float:
        return float(self.as_array().sum(axis=1).max())

    def supporting_witness(self, point: tuple[float, float]) -> dict:
        """ Witness of the vertex with the most slack over `point` in both rates. """
        best, best_slack = None, -np.inf
        for vertex, witness in zip(self.vertices, self.witnesses):
            slack = min(vertex.r1 - point[0], vertex.r2 - point[1])
            if witness and slack > best_slack:
                best, best_slack = witness, slack
        if best is None:
            raise ValueError("Region has no vertex with a generating distribution")
        return best


# ---------------------------------------------------------------------------
# Vectorized information quantities
# ---------------------------------------------------------------------------
def _log2(p: np.ndarray) -> np.ndarray:
    return np.log2(np.maximum(p, LOG_FLOOR))


def dmc_mutual_information(p: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """ I(X;Y) for input pmfs stacked along the last axis of `p` and a DMC kernel. """
    return entropy_along(p @ kernel) - p @ entropy_along(kernel)


def _pick_best(values: np.ndarray, candidates: np.ndarray) -> int:
    """ Index of the largest value; ties go to the lexicographically smallest candidate. """
    best = values.max()
    tied = np.flatnonzero(values == best)
    if tied.size == 1:
        return int(tied[0])
    flat = candidates[tied].reshape(tied.size, -1)
    order = np.lexsort(flat.T[::-1])
    return int(tied[order[0]])


def _ascent_step(x: np.ndarray,
                 fx: np.ndarray,
                 grad: np.ndarray,
                 objective: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 step: np.ndarray,
                 backtracks: int = 30,
                 sigma: float = 1e-4) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """ One projected-gradient step for every batch member, with Armijo backtracking.
    x has shape (R, ..., d) with simplices along the last axis; objective(cand, rows)
    evaluates members `rows` at `cand`. Returns new x, values and step sizes.
    """
    n = x.shape[0]
    bshape = (n,) + (1,) * (x.ndim - 1)
    new_x, new_f, step = x.copy(), fx.copy(), step.copy()
    pending = np.arange(n)
    for _ in range(backtracks):
        if pending.size == 0:
            break
        cand = project_simplex(x[pending] + step.reshape(bshape)[pending] * grad[pending])
        f_cand = objective(cand, pending)
        gain = np.sum((grad[pending] * (cand - x[pending])).reshape(pending.size, -1), axis=1)
        ok = f_cand >= fx[pending] + sigma * gain
        done = pending[ok]
        new_x[done], new_f[done] = cand[ok], f_cand[ok]
        step[pending[~ok]] *= 0.5
        pending = pending[~ok]
    step[np.setdiff1d(np.arange(n), pending)] *= 2.0
    return new_x, new_f, np.clip(step, 1e-12, 1e3)


# ---------------------------------------------------------------------------
# Oracle
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class OracleResult:
    value: float
    argmax: tuple[np.ndarray, ...]
    evaluations: int
    resolution: int


def grid_budget(budget: Optional[int] = None) -> int:
    return budget or env_int("CAPSTATE_GRID_BUDGET", DEFAULT_GRID_BUDGET)


def grid_oracle_maximize(objective: Callable[..., np.ndarray],
                         dims: Sequence[int],
                         resolution: int,
                         budget: Optional[int] = None,
                         batched: bool = True,
                         chunk: int = 65536) -> OracleResult:
    """ Exhaustive maximization over the product of simplex lattices.

    objective takes one pmf per simplex; with batched=True each argument is a
    (B, d_k) array and the result a (B,) array. Lattice points are visited in
    lexicographic order, so ties resolve to the smallest distribution vector.
    """
    dims = list(dims)
    budget = grid_budget(budget)
    sizes = [lattice_size(d, resolution) for d in dims]
    total = math.prod(sizes)
    if total > budget:
        raise CapExceededError(f"Oracle lattice has {total} points at resolution {resolution}, "
                               f"budget is {budget}")
    lattices = [simplex_lattice(d, resolution) for d in dims]

    best_value, best_index = -np.inf, 0
    for start in range(0, total, chunk):
        index = np.arange(start, min(start + chunk, total))
        parts = np.unravel_index(index, sizes)
        args = [lattice[part] for lattice, part in zip(lattices, parts)]
        if batched:
            values = np.asarray(objective(*args), dtype=float)
        else:
            values = np.array([objective(*(a[i] for a in args)) for i in range(index.size)])
        k = int(np.argmax(values))
        if values[k] > best_value:
            best_value, best_index = float(values[k]), int(index[k])

    parts = np.unravel_index(best_index, sizes)
    argmax = tuple(lattice[int(part)].copy() for lattice, part in zip(lattices, parts))
    return OracleResult(best_value, argmax, total, resolution)


def _oracle_resolution(dims: Sequence[int], resolution: Optional[int], budget: Optional[int]) -> int:
    budget = grid_budget(budget)
    finest = finest_resolution(list(dims), budget)
    if resolution is None:
        return finest
    if resolution > finest:
        logger.warning("Oracle resolution %d exceeds the budget for simplices %s, using %d",
                       resolution, list(dims), finest)
        return finest
    return resolution


# ---------------------------------------------------------------------------
# Single-user
# ---------------------------------------------------------------------------
def blahut_arimoto(kernel: np.ndarray,
                   tol: float = 1e-10,
                   max_iter: int = 200_000) -> SolveReport:
    """ Capacity of a DMC p(y|x) (rows = inputs).
    Stops when the bracket I(p) <= C <= max_x D(W_x || pW) closes to tol;
    the reported value is the lower end, achieved by the returned input pmf.
    """
    kernel = np.asarray(kernel, dtype=float)
    if tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    verdict = check_stochastic(kernel, ("x",))
    if not verdict:
        raise ValueError(verdict.describe())

    log_w = np.where(kernel > 0, np.log2(np.where(kernel > 0, kernel, 1.0)), 0.0)
    p = np.full(kernel.shape[0], 1.0 / kernel.shape[0])
    status = SolveStatus.MAX_ITER
    lower = upper = 0.0
    iteration = 0
    for iteration in range(1, max_iter + 1):
        r = p @ kernel
        log_r = np.log2(np.where(r > 0, r, 1.0))
        divergence = np.sum(kernel * (log_w - log_r), axis=1)
        lower, upper = float(p @ divergence), float(divergence.max())
        if upper - lower <= tol:
            status = SolveStatus.CONVERGED
            break
        p = p * np.exp2(divergence - upper)
        p /= p.sum()

    if status is SolveStatus.MAX_ITER:
        logger.warning("Blahut-Arimoto stopped after %d iterations, bracket gap %.3e",
                       iteration, upper - lower)
    return SolveReport(value=max(lower, 0.0), status=status, label=EXACT_LABEL,
                       terms={"lower": max(lower, 0.0), "upper": upper},
                       argmax={"input_pmf": p}, iterations=iteration)


def single_user_capacity(ch: StateChannel,
                         tol: float = 1e-10,
                         cap: Optional[int] = None,
                         oracle_resolution: Optional[int] = None,
                         oracle: bool = False,
                         budget: Optional[int] = None) -> SolveReport:
    """ C = max over p(t) of I(T;Y) on the strategy channel. """
    kernel = induced_strategy_channel(ch, cap)
    report = blahut_arimoto(kernel, tol)
    argmax = {"strategy_pmf": report.argmax["input_pmf"],
              "strategies": strategy_tables(ch.x_size, ch.s_size, cap)}
    report = replace(report, argmax=argmax)
    logger.info("Capacity %.6f bits after %d iterations (%s)", report.value,
                report.iterations, report.status.value, extra={"prefix": "single"})

    if oracle or oracle_resolution is not None:
        resolution = _oracle_resolution([kernel.shape[0]], oracle_resolution, budget)
        result = grid_oracle_maximize(lambda p: dmc_mutual_information(p, kernel),
                                      [kernel.shape[0]], resolution, budget)
        report = replace(report, oracle_gap=result.value - report.value)
        logger.info("Oracle at resolution %d: %.6f bits", resolution, result.value,
                    extra={"prefix": "single"})
    return report


# ---------------------------------------------------------------------------
# Degraded broadcast
# ---------------------------------------------------------------------------
def bc_point_terms(ch: BroadcastStateChannel,
                   p_u2: np.ndarray,
                   p_t_given_u2: np.ndarray,
                   cap: Optional[int] = None) -> dict[str, float]:
    """ I(T;Y1|U2), I(U2;Y2), I(U2;Y1) and I(T;Y1) for one superposition input law. """
    kernel = induced_bc_strategy_channel(ch, cap)
    joint = assemble_joint([
        Factor(np.asarray(p_u2, dtype=float), (), ("U2",)),
        Factor(np.asarray(p_t_given_u2, dtype=float), ("U2",), ("T",)),
        Factor(kernel, ("T",), ("Y1", "Y2")),
    ])
    return {"I(T;Y1|U2)": mutual_information(joint, {"T"}, {"Y1"}, {"U2"}),
            "I(U2;Y2)": mutual_information(joint, {"U2"}, {"Y2"}),
            "I(U2;Y1)": mutual_information(joint, {"U2"}, {"Y1"}),
            "I(T;Y1)": mutual_information(joint, {"T"}, {"Y1"})}


class _BroadcastObjective:
    """ Batched rate terms of the superposition region and their block gradients.
    a: (R, K) cloud pmfs, c: (R, K, T) satellite conditionals.
    """
    def __init__(self, kernel: np.ndarray):
        self.w1 = kernel.sum(axis=2)
        self.w2 = kernel.sum(axis=1)
        self.h1 = entropy_along(self.w1)

    def rates(self, a: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s1 = c @ self.w1
        s2 = c @ self.w2
        r2 = np.einsum("rk,rky->ry", a, s2)
        i1 = entropy_along(s1) - c @ self.h1
        r1_rate = np.sum(a * i1, axis=-1)
        r2_rate = entropy_along(r2) - np.sum(a * entropy_along(s2), axis=-1)
        return r1_rate, r2_rate

    def value(self, lam: float, a: np.ndarray, c: np.ndarray) -> np.ndarray:
        r1, r2 = self.rates(a, c)
        return lam * r1 + (1.0 - lam) * r2

    def gradients(self, lam: float, a: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s1 = c @ self.w1
        s2 = c @ self.w2
        r2 = np.einsum("rk,rky->ry", a, s2)
        i1 = entropy_along(s1) - c @ self.h1
        log_s2 = _log2(s2)
        log_r2 = _log2(r2)[:, None, :]
        divergence = np.sum(s2 * (log_s2 - log_r2), axis=-1)
        grad_a = lam * i1 + (1.0 - lam) * divergence
        grad_c = (lam * (-(_log2(s1) @ self.w1.T) - self.h1)
                  + (1.0 - lam) * ((log_s2 - log_r2) @ self.w2.T))
        return grad_a, a[..., None] * grad_c


def _bc_lambda_point(objective: _BroadcastObjective,
                     lam: float,
                     cloud_size: int,
                     restarts: int,
                     seed: np.random.SeedSequence,
                     max_iter: int,
                     tol: float) -> tuple[SolveReport, tuple[float, float]]:
    rng = np.random.default_rng(seed)
    n_t = objective.w1.shape[0]
    a = random_pmfs(rng, cloud_size, restarts)
    c = random_pmfs(rng, n_t, restarts * cloud_size).reshape(restarts, cloud_size, n_t)
    f = objective.value(lam, a, c)
    step_a = np.ones(restarts)
    step_c = np.ones(restarts)
    status, stall = SolveStatus.MAX_ITER, 0
    iteration = 0
    for iteration in range(1, max_iter + 1):
        previous = f.copy()
        grad_a, _ = objective.gradients(lam, a, c)
        a, f, step_a = _ascent_step(a, f, grad_a,
                                    lambda cand, rows: objective.value(lam, cand, c[rows]), step_a)
        _, grad_c = objective.gradients(lam, a, c)
        c, f, step_c = _ascent_step(c, f, grad_c,
                                    lambda cand, rows: objective.value(lam, a[rows], cand), step_c)
        stall = stall + 1 if np.max(f - previous) <= tol else 0
        if stall >= 3:
            status = SolveStatus.CONVERGED
            break

    candidates = np.concatenate([a, c.reshape(restarts, -1)], axis=1)
    best = _pick_best(f, candidates)
    r1, r2 = objective.rates(a[best:best + 1], c[best:best + 1])
    point = (max(float(r1[0]), 0.0), max(float(r2[0]), 0.0))
    report = SolveReport(value=max(float(f[best]), 0.0), status=status, label=BOUND_LABEL,
                         terms={"lambda": lam, "I(T;Y1|U2)": point[0], "I(U2;Y2)": point[1]},
                         argmax={"p_u2": a[best].copy(), "p_t_given_u2": c[best].copy()},
                         iterations=iteration, restarts=restarts)
    return report, point


def bc_region(ch: BroadcastStateChannel,
              lambda_grid_size: int = DEFAULT_LAMBDA_POINTS,
              restarts: int = DEFAULT_RESTARTS,
              seed: int = 0,
              cloud_size: Optional[int] = None,
              tol: float = 1e-10,
              max_iter: int = 300,
              workers: int = 1,
              cap: Optional[int] = None,
              oracle_resolution: Optional[int] = None,
              oracle: bool = False,
              budget: Optional[int] = None) -> tuple[RateRegion, list[SolveReport]]:
    """ Superposition region {R1 <= I(T;Y1|U2), R2 <= I(U2;Y2)} of a degraded
    broadcast channel, traced by weighted sums over a uniform lambda grid.
    """
    verdict = check_bc_degraded(ch)
    if not verdict:
        raise DegradednessError(f"Broadcast channel is not physically degraded: {verdict.describe()}")
    kernel = induced_bc_strategy_channel(ch, cap)
    n_t = kernel.shape[0]
    cloud_size = cloud_size or n_t + 1
    objective = _BroadcastObjective(kernel)
    lambdas = np.linspace(0.0, 1.0, lambda_grid_size) if lambda_grid_size > 1 else np.array([0.5])
    seeds = np.random.SeedSequence(seed).spawn(len(lambdas))

    def task(k: int):
        return _bc_lambda_point(objective, float(lambdas[k]), cloud_size, restarts,
                                seeds[k], max_iter, tol)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        results = list(executor.map(task, range(len(lambdas))))

    if oracle or oracle_resolution is not None:
        results = [(_bc_oracle(objective, report, cloud_size, oracle_resolution, budget), point)
                   for report, point in results]

    points, provenance, witnesses = [], [], []
    for report, point in results:
        points.append(point)
        provenance.append(f"lambda={report.terms['lambda']:.6f}")
        witnesses.append(report.argmax)

    # axis corners: one receiver served alone at its single-user capacity
    c1 = single_user_capacity(ch.receiver_channel(1), cap=cap)
    c2 = single_user_capacity(ch.receiver_channel(2), cap=cap)
    clouds = max(cloud_size, n_t)
    corner1 = {"p_u2": np.eye(clouds)[0],
               "p_t_given_u2": np.tile(c1.argmax["strategy_pmf"], (clouds, 1))}
    corner2_clouds = np.full((clouds, n_t), 1.0 / n_t)
    corner2_clouds[:n_t] = np.eye(n_t)
    corner2 = {"p_u2": np.concatenate([c2.argmax["strategy_pmf"], np.zeros(clouds - n_t)]),
               "p_t_given_u2": corner2_clouds}
    points += [(c1.value, 0.0), (0.0, c2.value)]
    provenance += ["corner-r1", "corner-r2"]
    witnesses += [corner1, corner2]

    region = RateRegion.from_points(points, provenance, witnesses,
                                    f"{BOUND_LABEL} (|U2|={cloud_size})")
    logger.info("Broadcast region: %d lambda points, %d boundary vertices, corners (%.6f, 0) (0, %.6f)",
                len(lambdas), len(region.vertices), c1.value, c2.value, extra={"prefix": "bc"})
    return region, [report for report, _ in results]


def _bc_oracle(objective: _BroadcastObjective,
               report: SolveReport,
               cloud_size: int,
               resolution: Optional[int],
               budget: Optional[int]) -> SolveReport:
    n_t = objective.w1.shape[0]
    lam = report.terms["lambda"]
    dims = [cloud_size] + [n_t] * cloud_size
    resolution = _oracle_resolution(dims, resolution, budget)

    def evaluate(a, *rows):
        return objective.value(lam, a, np.stack(rows, axis=1))

    result = grid_oracle_maximize(evaluate, dims, resolution, budget)
    return replace(report, oracle_gap=result.value - report.value)


# ---------------------------------------------------------------------------
# Degraded relay
# ---------------------------------------------------------------------------
RELAY_TERMS = ("I(T,T1;Y)", "I(T;Y1|T1,S)")


def relay_rate_terms(ch: RelayStateChannel, q: JointPmf, cap: Optional[int] = None) -> dict[str, float]:
    """ Single-letter quantities of the decode-and-forward scheme for input law q(t,t1). """
    joint = induced_relay_joint(ch, q, cap)
    return {"I(T,T1;Y)": mutual_information(joint, {"T", "T1"}, {"Y"}),
            "I(T;Y1|T1,S)": mutual_information(joint, {"T"}, {"Y1"}, {"T1", "S"}),
            "I(T1;Y)": mutual_information(joint, {"T1"}, {"Y"}),
            "I(T;Y|T1)": mutual_information(joint, {"T"}, {"Y"}, {"T1"})}


class _RelayObjective:
    """ Batched min-structure terms of the relay capacity and their gradients.
    q: (R, T*T1) joint strategy pmfs, flattened row-major.
    """
    def __init__(self, tensor: np.ndarray, state_probs: np.ndarray):
        self.n_t, self.n_t1 = tensor.shape[:2]
        self.p_s = state_probs
        w_y = np.einsum("absyz,s->aby", tensor, state_probs)
        self.w_y = w_y.reshape(self.n_t * self.n_t1, -1)
        self.h_y = entropy_along(self.w_y)
        self.v = tensor.sum(axis=3)  # p(y1|t,t1,s)
        self.h_v = np.einsum("abs,s->ab", entropy_along(self.v), state_probs).ravel()

    def terms(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cooperative = entropy_along(q @ self.w_y) - q @ self.h_y
        q3 = q.reshape(-1, self.n_t, self.n_t1)
        m = np.einsum("rab,absz->rbsz", q3, self.v)
        q1 = q3.sum(axis=1)
        h_cond = (-np.einsum("rbsz,s->r", xlog2x(m), self.p_s)
                  + np.sum(xlog2x(q1), axis=-1))
        relay = h_cond - q @ self.h_v
        return cooperative, relay

    def smoothed(self, beta: float, q: np.ndarray) -> np.ndarray:
        a, b = self.terms(q)
        return -logsumexp(np.stack([-beta * a, -beta * b]), axis=0) / beta

    def gradient(self, beta: float, q: np.ndarray) -> np.ndarray:
        a, b = self.terms(q)
        weights = softmax(np.stack([-beta * a, -beta * b]), axis=0)
        r = q @ self.w_y
        grad_a = -(_log2(r) @ self.w_y.T) - self.h_y
        q3 = q.reshape(-1, self.n_t, self.n_t1)
        m = np.einsum("rab,absz->rbsz", q3, self.v)
        q1 = q3.sum(axis=1)
        inner = np.einsum("absz,rbsz->rabs", self.v, _log2(m))
        grad_b = (np.einsum("rabs,s->rab", _log2(q1)[:, None, :, None] - inner, self.p_s)
                  .reshape(q.shape[0], -1) - self.h_v)
        return weights[0][:, None] * grad_a + weights[1][:, None] * grad_b

    def exact(self, q: np.ndarray) -> np.ndarray:
        a, b = self.terms(q)
        return np.minimum(a, b)


def relay_capacity(ch: RelayStateChannel,
                   restarts: int = DEFAULT_RESTARTS,
                   seed: int = 0,
                   tol: float = 1e-9,
                   max_iter: int = 400,
                   beta_range: tuple[float, float] = (8.0, 2.0 ** 14),
                   cap: Optional[int] = None,
                   oracle_resolution: Optional[int] = None,
                   oracle: bool = False,
                   budget: Optional[int] = None) -> SolveReport:
    """ max over q(t,t1) of min{I(T,T1;Y), I(T;Y1|T1,S)} by projected-gradient
    ascent on an annealed soft-min, all restarts advanced together.
    """
    verdict = check_relay_degraded(ch)
    if not verdict:
        raise DegradednessError(f"Relay channel is not physically degraded: {verdict.describe()}")
    tensor = relay_strategy_tensor(ch, cap)
    objective = _RelayObjective(tensor, ch.state_pmf.probs)
    dim = objective.n_t * objective.n_t1

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    q = random_pmfs(rng, dim, restarts)
    best_q = q.copy()
    best_value = objective.exact(q)
    step = np.ones(restarts)
    anneal = max(1, (2 * max_iter) // 3)
    status, stall = SolveStatus.MAX_ITER, 0
    iteration = 0
    for iteration in range(1, max_iter + 1):
        frac = min(1.0, (iteration - 1) / anneal)
        beta = beta_range[0] * (beta_range[1] / beta_range[0]) ** frac
        f = objective.smoothed(beta, q)
        grad = objective.gradient(beta, q)
        q, f, step = _ascent_step(q, f, grad,
                                  lambda cand, rows: objective.smoothed(beta, cand), step)
        exact = objective.exact(q)
        improved = exact > best_value + tol
        best_q[improved], best_value[improved] = q[improved], exact[improved]
        if frac >= 1.0:
            stall = 0 if improved.any() else stall + 1
            if stall >= 25:
                status = SolveStatus.CONVERGED
                break

    best = _pick_best(best_value, best_q)
    q_best = best_q[best].reshape(objective.n_t, objective.n_t1)
    cooperative, relay = objective.terms(best_q[best:best + 1])
    terms = {"I(T,T1;Y)": max(float(cooperative[0]), 0.0),
             "I(T;Y1|T1,S)": max(float(relay[0]), 0.0)}
    value = min(terms.values())
    terms["binding"] = 0.0 if terms["I(T,T1;Y)"] <= terms["I(T;Y1|T1,S)"] else 1.0
    report = SolveReport(value=value, status=status, label=BOUND_LABEL, terms=terms,
                         argmax={"q": q_best}, iterations=iteration, restarts=restarts)
    logger.info("Relay rate %.6f bits, binding term %s (%s)", value,
                RELAY_TERMS[int(terms["binding"])], status.value, extra={"prefix": "relay"})

    if oracle or oracle_resolution is not None:
        resolution = _oracle_resolution([dim], oracle_resolution, budget)
        result = grid_oracle_maximize(objective.exact, [dim], resolution, budget)
        report = replace(report, oracle_gap=result.value - report.value)
        logger.info("Oracle at resolution %d: %.6f bits", resolution, result.value,
                    extra={"prefix": "relay"})
    return report


def binding_term(report: SolveReport) -> str:
    """ Name of the relay term that limits the rate. """
    return RELAY_TERMS[int(report.terms.get("binding", 0.0))]


# ---------------------------------------------------------------------------
# Multiple access
# ---------------------------------------------------------------------------
def _mac_kernel(ch: MACStateChannel, expansion: int, cap: Optional[int]) -> np.ndarray:
    """ p(y|u1,u2) over auxiliary alphabets T_k x {1..expansion}; letter u maps to t = u // expansion. """
    tensor = mac_strategy_tensor(ch, cap)
    kernel = np.einsum("absy,s->aby", tensor, ch.state_pmf.probs)
    if expansion > 1:
        kernel = np.repeat(np.repeat(kernel, expansion, axis=0), expansion, axis=1)
    return kernel


def mac_rate_terms(q: np.ndarray, kernel: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """ I(U1;Y|U2), I(U2;Y|U1), I(U1,U2;Y) for joint input pmfs q of shape (B, U1, U2). """
    h_cells = entropy_along(kernel)
    h_given_both = np.einsum("bij,ij->b", q, h_cells)
    total = entropy_along(np.einsum("bij,ijy->by", q, kernel)) - h_given_both
    given_u2 = (-np.sum(xlog2x(np.einsum("bij,ijy->bjy", q, kernel)), axis=(1, 2))
                + np.sum(xlog2x(q.sum(axis=1)), axis=1))
    given_u1 = (-np.sum(xlog2x(np.einsum("bij,ijy->biy", q, kernel)), axis=(1, 2))
                + np.sum(xlog2x(q.sum(axis=2)), axis=1))
    return given_u2 - h_given_both, given_u1 - h_given_both, total


def _pentagon_corners(i1: np.ndarray, i2: np.ndarray, i_sum: np.ndarray) -> np.ndarray:
    """ The two dominant corners of {R1<=i1, R2<=i2, R1+R2<=i_sum}, shape (2B, 2). """
    i1, i2, i_sum = (np.maximum(v, 0.0) for v in (i1, i2, i_sum))
    a = np.minimum(i1, i_sum)
    b = np.minimum(i2, i_sum)
    first = np.column_stack([a, np.minimum(b, i_sum - a)])
    second = np.column_stack([np.minimum(a, i_sum - b), b])
    return np.vstack([first, second])


def _lattice_for(dims: list[int], count: int) -> list[np.ndarray]:
    resolution = finest_resolution(dims, max(count, 1))
    return [simplex_lattice(d, resolution) for d in dims]


def _product_samples(n1: int, n2: int, sample_count: int,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, list[str]]:
    lat1, lat2 = _lattice_for([n1, n2], sample_count)
    g1 = np.repeat(lat1, lat2.shape[0], axis=0)
    g2 = np.tile(lat2, (lat1.shape[0], 1))
    p1 = np.vstack([np.full((1, n1), 1.0 / n1), g1, random_pmfs(rng, n1, sample_count)])
    p2 = np.vstack([np.full((1, n2), 1.0 / n2), g2, random_pmfs(rng, n2, sample_count)])
    labels = (["uniform"] + [f"grid-{i}" for i in range(g1.shape[0])]
              + [f"sample-{i}" for i in range(sample_count)])
    return p1, p2, labels


def _collapse(p: np.ndarray, expansion: int) -> np.ndarray:
    return p.reshape(-1, expansion).sum(axis=1) if expansion > 1 else p


def _mac_points(kernel: np.ndarray, q_batches, labels: list[str], chunk: int = 2048):
    points = []
    for start in range(0, len(labels), chunk):
        q = q_batches(start, min(start + chunk, len(labels)))
        i1, i2, i_sum = mac_rate_terms(q, kernel)
        corners = _pentagon_corners(i1, i2, i_sum)
        n = q.shape[0]
        points.append(np.stack([corners[:n], corners[n:]], axis=1))
    return np.concatenate(points, axis=0)  # (B, 2 corners, 2)


def _mac_inner_points(ch: MACStateChannel, sample_count: int, seed: np.random.SeedSequence,
                      expansion: int, cap: Optional[int]):
    kernel = _mac_kernel(ch, expansion, cap)
    n1, n2 = kernel.shape[:2]
    rng = np.random.default_rng(seed)
    p1, p2, labels = _product_samples(n1, n2, sample_count, rng)
    corners = _mac_points(kernel, lambda a, b: p1[a:b, :, None] * p2[a:b, None, :], labels)

    points, provenance, witnesses = [], [], []
    for i, label in enumerate(labels):
        witness = {"p_t1": _collapse(p1[i], expansion), "p_t2": _collapse(p2[i], expansion)}
        for k in range(2):
            points.append(tuple(corners[i, k]))
            provenance.append(f"inner:{label}")
            witnesses.append(witness)

    # single-sender corners: freeze the other sender on one strategy, solve exactly
    base = _mac_kernel(ch, 1, cap)
    t1, t2 = base.shape[:2]
    if t1 * t2 <= 4096:
        for j in range(t2):
            report = blahut_arimoto(base[:, j, :])
            points.append((report.value, 0.0))
            provenance.append(f"inner:sender1|t2={j}")
            witnesses.append({"p_t1": report.argmax["input_pmf"], "p_t2": np.eye(t2)[j]})
        for i in range(t1):
            report = blahut_arimoto(base[i, :, :])
            points.append((0.0, report.value))
            provenance.append(f"inner:sender2|t1={i}")
            witnesses.append({"p_t1": np.eye(t1)[i], "p_t2": report.argmax["input_pmf"]})
    return points, provenance, witnesses


def mac_inner_region(ch: MACStateChannel,
                     sample_count: int = DEFAULT_SAMPLES,
                     seed: int = 0,
                     expansion: int = 1,
                     cap: Optional[int] = None) -> RateRegion:
    """ Convex hull of the MAC pentagons over product strategy laws p(t1)p(t2). """
    product_seed, _ = np.random.SeedSequence(seed).spawn(2)
    points, provenance, witnesses = _mac_inner_points(ch, sample_count, product_seed, expansion, cap)
    region = RateRegion.from_points(points, provenance, witnesses,
                                    f"{BOUND_LABEL} (inner, expansion={expansion})")
    logger.info("MAC inner region: %d candidate points, max sum rate %.6f",
                len(points), region.max_sum_rate(), extra={"prefix": "mac"})
    return region


def mac_outer_region(ch: MACStateChannel,
                     sample_count: int = DEFAULT_SAMPLES,
                     seed: int = 0,
                     expansion: int = 1,
                     cap: Optional[int] = None) -> RateRegion:
    """ Sampled approximation, from below, of the outer bound over joint laws p(t1,t2).
    Product laws are joint laws, so the inner candidates drawn from the same seed
    are included and the result always contains mac_inner_region.
    """
    product_seed, joint_seed = np.random.SeedSequence(seed).spawn(2)
    points, provenance, witnesses = _mac_inner_points(ch, sample_count, product_seed, expansion, cap)

    kernel = _mac_kernel(ch, expansion, cap)
    n1, n2 = kernel.shape[:2]
    rng = np.random.default_rng(joint_seed)
    (lattice,) = _lattice_for([n1 * n2], sample_count)
    joint = np.vstack([lattice, random_pmfs(rng, n1 * n2, sample_count)]).reshape(-1, n1, n2)
    labels = [f"grid-{i}" for i in range(lattice.shape[0])] + [f"sample-{i}" for i in range(sample_count)]
    corners = _mac_points(kernel, lambda a, b: joint[a:b], labels)
    for i, label in enumerate(labels):
        for k in range(2):
            points.append(tuple(corners[i, k]))
            provenance.append(f"outer:{label}")
            witnesses.append({"p_u1u2": joint[i]})

    region = RateRegion.from_points(points, provenance, witnesses,
                                    f"{OUTER_LABEL} (expansion={expansion})")
    logger.info("MAC outer region: %d candidate points, max sum rate %.6f",
                len(points), region.max_sum_rate(), extra={"prefix": "mac"})
    return region
