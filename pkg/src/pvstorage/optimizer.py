"""Multi-objective search over sizing and operating decision vectors.

Both objectives (net present value, self-sufficiency ratio) are maximised.
Two engines share the archive and ranking machinery: a modified firefly
algorithm with chaotic attractiveness and Levy-flight random walks, and a
standard NSGA-II baseline with simulated binary crossover and polynomial
mutation. Runs are deterministic for a fixed seed.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np


class OptimizerError(ValueError):
    """Raised for invalid optimizer configuration."""


class EvaluationError(RuntimeError):
    """Objective evaluation failed; carries the offending decision vector."""

    def __init__(self, vector, cause):
        super().__init__(f"objective evaluation failed for vector {np.asarray(vector).tolist()}: {cause}")
        self.vector = np.asarray(vector, dtype=np.float64)
        self.cause = cause


class VariableKind(Enum):
    CONTINUOUS = "continuous"
    INTEGER_HOUR = "integer-hour"
    DAY_OF_YEAR = "day-of-year"


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float
    upper: float
    kind: VariableKind = VariableKind.CONTINUOUS

    def __post_init__(self):
        if not self.lower < self.upper:
            raise OptimizerError(
                f"variable {self.name!r}: lower bound {self.lower} must be below upper {self.upper}"
            )


@dataclass(frozen=True)
class DecisionSpace:
    """Bounded decision vector layout."""

    variables: tuple

    def __post_init__(self):
        variables = tuple(self.variables)
        if not variables:
            raise OptimizerError("decision space needs at least one variable")
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise OptimizerError("variable names must be unique")
        object.__setattr__(self, "variables", variables)

    def __len__(self) -> int:
        return len(self.variables)

    @property
    def names(self) -> tuple:
        return tuple(v.name for v in self.variables)

    @property
    def lower(self) -> np.ndarray:
        return np.array([v.lower for v in self.variables])

    @property
    def upper(self) -> np.ndarray:
        return np.array([v.upper for v in self.variables])

    @property
    def integer_mask(self) -> np.ndarray:
        return np.array(
            [v.kind is not VariableKind.CONTINUOUS for v in self.variables]
        )

    def clip_round(self, position: np.ndarray) -> np.ndarray:
        """Clamp to bounds and round the integer-valued variables."""
        pos = np.minimum(np.maximum(position, self.lower), self.upper)
        mask = self.integer_mask
        if mask.any():
            pos = pos.copy()
            pos[mask] = np.rint(pos[mask])
        return pos


@dataclass
class Firefly:
    """One candidate: position, objectives and ranking metadata."""

    position: np.ndarray
    objectives: tuple = (0.0, 0.0)
    rank: int = 0
    crowding: float = 0.0
    violation: float = 0.0


@dataclass(frozen=True)
class MomfaParams:
    """Firefly engine parameters."""

    population: int = 40
    beta0: float = 0.2  # attractiveness floor at infinite distance
    gamma: float = 1.0  # absorption coefficient
    alpha0: float = 1.0  # initial random-walk weight
    theta: float = 0.9  # per-iteration random-walk decay
    eta: float = 4.0  # logistic-map parameter for initialisation
    tau: float = 1.5  # Levy stability parameter
    seed: int = 0

    def __post_init__(self):
        if self.population < 1:
            raise OptimizerError("population must be at least 1")
        if not 0 <= self.gamma:
            raise OptimizerError("gamma must be non-negative")
        if not 0 < self.theta < 1:
            raise OptimizerError("theta must be in (0, 1)")
        if not 0 < self.eta <= 4:
            raise OptimizerError("eta must be in (0, 4]")
        if not 1 < self.tau <= 2:
            raise OptimizerError("tau must be in (1, 2]")


@dataclass(frozen=True)
class NsgaParams:
    """NSGA-II engine parameters."""

    population: int = 40
    crossover_prob: float = 0.9
    sbx_eta: float = 15.0
    mutation_eta: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise OptimizerError("population must be at least 2")


# ----------------------------------------------------------------------
# Dominance machinery
# ----------------------------------------------------------------------

def dominates(a, b, violation_a: float = 0.0, violation_b: float = 0.0) -> bool:
    """Constrained dominance with both objectives maximised.

    A feasible point dominates any infeasible one; among infeasible points
    the smaller violation wins; among feasible points standard dominance
    applies.
    """
    if violation_a == 0.0 and violation_b > 0.0:
        return True
    if violation_a > 0.0 and violation_b == 0.0:
        return False
    if violation_a > 0.0 and violation_b > 0.0:
        return violation_a < violation_b
    ge = a[0] >= b[0] and a[1] >= b[1]
    gt = a[0] > b[0] or a[1] > b[1]
    return ge and gt


def non_dominated_sort(points, violations=None) -> np.ndarray:
    """1-based non-domination ranks (rank 1 is the Pareto front).

    Equal objective pairs share a rank. NaN objectives are rejected.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise OptimizerError("points must be an (n, 2) array of objective pairs")
    if np.any(np.isnan(pts)):
        raise OptimizerError("NaN objective values cannot be ranked")
    n = pts.shape[0]
    viol = np.zeros(n) if violations is None else np.asarray(violations, dtype=np.float64)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    dominance_count = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            if dominates(pts[i], pts[j], viol[i], viol[j]):
                dominated_by[i].append(j)
                dominance_count[j] += 1
            elif dominates(pts[j], pts[i], viol[j], viol[i]):
                dominated_by[j].append(i)
                dominance_count[i] += 1
    ranks = np.zeros(n, dtype=np.int64)
    current = [i for i in range(n) if dominance_count[i] == 0]
    rank = 1
    while current:
        nxt = []
        for i in current:
            ranks[i] = rank
            for j in dominated_by[i]:
                dominance_count[j] -= 1
                if dominance_count[j] == 0:
                    nxt.append(j)
        current = nxt
        rank += 1
    return ranks


def crowding_distances(points) -> np.ndarray:
    """NSGA-II crowding distance within one front (extremes are infinite)."""
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for m in range(pts.shape[1]):
        order = np.argsort(pts[:, m], kind="stable")
        lo, hi = pts[order[0], m], pts[order[-1], m]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        if hi > lo:
            gaps = (pts[order[2:], m] - pts[order[:-2], m]) / (hi - lo)
            dist[order[1:-1]] += gaps
    return dist


def assign_ranks_and_crowding(population: Sequence[Firefly]) -> None:
    """Annotate a population with ranks and per-front crowding distances."""
    objs = np.array([f.objectives for f in population])
    viols = np.array([f.violation for f in population])
    ranks = non_dominated_sort(objs, viols)
    for f, r in zip(population, ranks):
        f.rank = int(r)
    for rank in np.unique(ranks):
        idx = np.nonzero(ranks == rank)[0]
        dists = crowding_distances(objs[idx])
        for i, d in zip(idx, dists):
            population[i].crowding = float(d)


class ParetoArchive:
    """Bounded archive of mutually non-dominated feasible solutions."""

    def __init__(self, capacity: int = 100):
        if capacity < 1:
            raise OptimizerError("archive capacity must be at least 1")
        self.capacity = capacity
        self.entries: list[Firefly] = []

    def __len__(self) -> int:
        return len(self.entries)

    def points(self) -> np.ndarray:
        if not self.entries:
            return np.empty((0, 2))
        return np.array([e.objectives for e in self.entries])

    def update(self, candidates: Iterable[Firefly]) -> None:
        for cand in candidates:
            if cand.violation > 0.0:
                continue
            dominated = False
            survivors = []
            duplicate = False
            for entry in self.entries:
                if dominates(entry.objectives, cand.objectives):
                    dominated = True
                    survivors = self.entries
                    break
                if not dominates(cand.objectives, entry.objectives):
                    if entry.objectives == cand.objectives and np.array_equal(
                        entry.position, cand.position
                    ):
                        duplicate = True
                    survivors.append(entry)
            if dominated or duplicate:
                continue
            survivors.append(
                Firefly(
                    position=np.array(cand.position, dtype=np.float64),
                    objectives=tuple(cand.objectives),
                    rank=1,
                    violation=0.0,
                )
            )
            self.entries = survivors
        if len(self.entries) > self.capacity:
            self._truncate()

    def _truncate(self) -> None:
        objs = self.points()
        dists = crowding_distances(objs)
        order = sorted(range(len(self.entries)), key=lambda i: (-dists[i], i))
        keep = sorted(order[: self.capacity])
        self.entries = [self.entries[i] for i in keep]


def hypervolume(front, reference) -> float:
    """Exact 2-D hypervolume of a maximised front against a reference point.

    Every front point must dominate the reference.
    """
    pts = front.points() if isinstance(front, ParetoArchive) else np.asarray(front, dtype=np.float64)
    if pts.size == 0:
        return 0.0
    pts = pts.reshape(-1, 2)
    ref = np.asarray(reference, dtype=np.float64)
    if np.any(pts[:, 0] < ref[0]) or np.any(pts[:, 1] < ref[1]):
        raise OptimizerError("reference point is not dominated by every front point")
    return _hypervolume_filtered(pts, ref)


def _hypervolume_filtered(pts: np.ndarray, ref: np.ndarray) -> float:
    """Hypervolume of the points that dominate the reference (others ignored)."""
    keep = (pts[:, 0] >= ref[0]) & (pts[:, 1] >= ref[1])
    pts = pts[keep]
    if pts.size == 0:
        return 0.0
    order = np.argsort(-pts[:, 0], kind="stable")
    pts = pts[order]
    volume = 0.0
    prev_f2 = ref[1]
    for f1, f2 in pts:
        if f2 > prev_f2:
            volume += (f1 - ref[0]) * (f2 - prev_f2)
            prev_f2 = f2
    return float(volume)


# ----------------------------------------------------------------------
# Firefly engine pieces
# ----------------------------------------------------------------------

def logistic_map_step(x: float, eta: float = 4.0) -> float:
    """One logistic-map iterate."""
    return eta * x * (1.0 - x)


_LOGISTIC_EXCLUDED = (0.25, 0.5, 0.75)


def _draw_chaos_seed(rng: np.random.Generator) -> float:
    while True:
        x = rng.random()
        if 1e-9 < x < 1.0 - 1e-9 and x not in _LOGISTIC_EXCLUDED:
            return x


def logistic_init(n: int, space: DecisionSpace, seed, eta: float = 4.0) -> np.ndarray:
    """Chaotic initial population: one logistic-map stream per dimension,
    mapped affinely onto the variable bounds. Deterministic per seed."""
    if n < 1:
        raise OptimizerError("population size must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    dims = len(space)
    positions = np.empty((n, dims))
    lower, upper = space.lower, space.upper
    for d in range(dims):
        x = _draw_chaos_seed(rng)
        for k in range(n):
            x = logistic_map_step(x, eta)
            if not 1e-12 < x < 1.0 - 1e-12:
                # the map collapsed onto an absorbing state; restart the stream
                x = _draw_chaos_seed(rng)
            positions[k, d] = lower[d] + x * (upper[d] - lower[d])
    for k in range(n):
        positions[k] = space.clip_round(positions[k])
    return positions


def chaos_beta_step(prev: float) -> float:
    """Gauss-map step driving the chaotic attractiveness: frac(1/x), 0 at 0."""
    if prev == 0.0:
        return 0.0
    inv = 1.0 / prev
    return inv - math.floor(inv)


def attractiveness(beta_chaos: float, beta0: float, gamma: float, r: float) -> float:
    """Distance-decayed attractiveness between two fireflies."""
    if r < 0:
        raise OptimizerError("distance must be non-negative")
    return (beta_chaos - beta0) * math.exp(-gamma * r * r) + beta0


def levy_sigma(tau: float) -> float:
    """Scale of the Levy numerator draw for stability parameter tau."""
    num = math.gamma(1.0 + tau) * math.sin(math.pi * tau / 2.0)
    den = math.gamma((1.0 + tau) / 2.0) * tau * 2.0 ** ((tau - 1.0) / 2.0)
    return (num / den) ** (1.0 / tau)


def levy_step(u: float, v: float, tau: float) -> float:
    """Heavy-tailed step u / |v|^(1/tau); v must be non-zero."""
    if v == 0.0:
        raise OptimizerError("v must be non-zero (samplers redraw zero v)")
    return u / abs(v) ** (1.0 / tau)


def levy_sample(rng: np.random.Generator, tau: float) -> float:
    """Draw one Levy-flight step (zero v draws are rejected)."""
    u = rng.normal(0.0, levy_sigma(tau))
    v = rng.normal()
    while v == 0.0:
        v = rng.normal()
    return levy_step(u, v, tau)


def move_firefly(
    xi,
    xj,
    space: DecisionSpace,
    params: MomfaParams,
    iteration: int,
    rng: np.random.Generator,
    beta_chaos: float,
    with_random_walk: bool = True,
) -> np.ndarray:
    """Move firefly i toward a brighter firefly j.

    Moves are computed on bound-normalised coordinates so the absorption
    coefficient and the random-walk weight are dimensionless: attraction
    uses the chaotic attractiveness at the normalised distance, and the
    random walk scales with alpha0 * theta^iteration drawing an independent
    signed Levy step per dimension. The attraction term is affine-invariant,
    so it lands on the same point in problem units. The result is clamped to
    bounds with integer variables rounded.

    ``with_random_walk=False`` applies the attraction term only; the engine
    uses it to add the stochastic term once per firefly per iteration
    instead of once per brighter peer.
    """
    pi = np.asarray(getattr(xi, "position", xi), dtype=np.float64)
    pj = np.asarray(getattr(xj, "position", xj), dtype=np.float64)
    lower, upper = space.lower, space.upper
    span = upper - lower
    ni = (pi - lower) / span
    nj = (pj - lower) / span
    r = float(np.linalg.norm(ni - nj))
    beta = attractiveness(beta_chaos, params.beta0, params.gamma, r)
    new = ni + beta * (nj - ni)
    if with_random_walk:
        alpha = params.alpha0 * params.theta**iteration
        for d in range(pi.size):
            sign = np.sign(rng.random() - 0.5)
            new[d] += alpha * sign * levy_sample(rng, params.tau)
    return space.clip_round(lower + new * span)


# ----------------------------------------------------------------------
# Run harness shared by both engines
# ----------------------------------------------------------------------

@dataclass
class OptimizerRun:
    """Outcome of one optimisation run."""

    archive: ParetoArchive
    evaluations: int
    algorithm: str
    seed: int
    seconds: float
    hv_trace: np.ndarray | None = None
    hv_reference: tuple | None = None


def _evaluate_positions(problem, positions, violation_fn, threads: int):
    def _one(pos):
        try:
            f1, f2 = problem(pos)
        except Exception as exc:  # noqa: BLE001 - wrapped with the vector attached
            raise EvaluationError(pos, exc) from exc
        return float(f1), float(f2)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            objectives = list(pool.map(_one, positions))
    else:
        objectives = [_one(pos) for pos in positions]
    violations = [
        float(violation_fn(obj)) if violation_fn is not None else 0.0
        for obj in objectives
    ]
    return objectives, violations


def _telemetry_reference(objectives) -> tuple:
    objs = np.asarray(objectives, dtype=np.float64)
    lo = objs.min(axis=0)
    span = objs.max(axis=0) - lo
    margin = np.maximum(0.05 * span, 1e-9)
    ref = lo - margin
    return float(ref[0]), float(ref[1])


def momfa_run(
    problem: Callable,
    space: DecisionSpace,
    params: MomfaParams,
    budget: int,
    violation_fn: Callable | None = None,
    initial_points=None,
    archive_capacity: int = 100,
    threads: int = 1,
    telemetry: bool = False,
) -> OptimizerRun:
    """Run the modified firefly engine for a fixed evaluation budget.

    Each iteration every firefly moves toward each firefly of better rank
    (or equal rank and larger crowding distance), with the Levy random walk
    applied once per firefly on its final pairwise move so noise does not
    grow with the number of brighter peers; fireflies with no brighter peer
    take a pure random-walk move. The archive keeps all feasible rank-1
    points, truncated by crowding distance.
    """
    n = params.population
    if budget < n:
        raise OptimizerError(f"budget {budget} is below the population size {n}")
    start = time.perf_counter()
    rng = np.random.default_rng(params.seed)
    positions = logistic_init(n, space, rng, params.eta)
    if initial_points is not None:
        seeds = np.atleast_2d(np.asarray(initial_points, dtype=np.float64))
        for k in range(min(len(seeds), n)):
            positions[k] = space.clip_round(seeds[k])
    objectives, violations = _evaluate_positions(problem, positions, violation_fn, threads)
    evaluations = n

    archive = ParetoArchive(archive_capacity)
    hv_ref = _telemetry_reference(objectives) if telemetry else None
    hv_trace: list[float] = []

    def _sync_archive():
        pop = [
            Firefly(positions[i].copy(), objectives[i], violation=violations[i])
            for i in range(n)
        ]
        assign_ranks_and_crowding(pop)
        archive.update([f for f in pop if f.rank == 1])
        if telemetry:
            hv_trace.append(_hypervolume_filtered(archive.points(), np.asarray(hv_ref)))
        return pop

    population = _sync_archive()
    beta_chaos = _draw_chaos_seed(rng)
    iteration = 0
    while evaluations + n <= budget:
        iteration += 1
        beta_chaos = chaos_beta_step(beta_chaos)
        if beta_chaos == 0.0:
            beta_chaos = _draw_chaos_seed(rng)
        old_positions = positions.copy()
        ranks = [f.rank for f in population]
        crowds = [f.crowding for f in population]
        for i in range(n):
            targets = [
                j
                for j in range(n)
                if ranks[j] < ranks[i]
                or (ranks[j] == ranks[i] and crowds[j] > crowds[i])
            ]
            current = positions[i]
            if not targets:
                current = move_firefly(
                    current, current, space, params, iteration, rng, beta_chaos
                )
            else:
                for k, j in enumerate(targets):
                    current = move_firefly(
                        current, old_positions[j], space, params, iteration, rng,
                        beta_chaos, with_random_walk=(k == len(targets) - 1),
                    )
            positions[i] = current
        objectives, violations = _evaluate_positions(problem, positions, violation_fn, threads)
        evaluations += n
        population = _sync_archive()
    return OptimizerRun(
        archive=archive,
        evaluations=evaluations,
        algorithm="momfa",
        seed=params.seed,
        seconds=time.perf_counter() - start,
        hv_trace=np.asarray(hv_trace) if telemetry else None,
        hv_reference=hv_ref,
    )


# ----------------------------------------------------------------------
# NSGA-II engine
# ----------------------------------------------------------------------

def _crowded_better(a: Firefly, b: Firefly) -> bool:
    if a.rank != b.rank:
        return a.rank < b.rank
    return a.crowding > b.crowding


def _tournament(rng, population) -> Firefly:
    i = rng.integers(len(population))
    j = rng.integers(len(population))
    a, b = population[i], population[j]
    return a if _crowded_better(a, b) else b


def _sbx_crossover(rng, p1, p2, lower, upper, eta_c, prob):
    c1, c2 = p1.copy(), p2.copy()
    if rng.random() > prob:
        return c1, c2
    for d in range(p1.size):
        if rng.random() > 0.5 or p1[d] == p2[d]:
            continue
        x1, x2 = min(p1[d], p2[d]), max(p1[d], p2[d])
        u = rng.random()
        if u <= 0.5:
            beta = (2.0 * u) ** (1.0 / (eta_c + 1.0))
        else:
            beta = (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta_c + 1.0))
        v1 = 0.5 * ((x1 + x2) - beta * (x2 - x1))
        v2 = 0.5 * ((x1 + x2) + beta * (x2 - x1))
        if rng.random() < 0.5:
            v1, v2 = v2, v1
        c1[d] = min(max(v1, lower[d]), upper[d])
        c2[d] = min(max(v2, lower[d]), upper[d])
    return c1, c2


def _polynomial_mutation(rng, child, lower, upper, eta_m, rate):
    for d in range(child.size):
        if rng.random() >= rate:
            continue
        x = child[d]
        span = upper[d] - lower[d]
        if span <= 0:
            continue
        u = rng.random()
        delta1 = (x - lower[d]) / span
        delta2 = (upper[d] - x) / span
        mpow = 1.0 / (eta_m + 1.0)
        if u < 0.5:
            val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - delta1) ** (eta_m + 1.0)
            delta = val**mpow - 1.0
        else:
            val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - delta2) ** (eta_m + 1.0)
            delta = 1.0 - val**mpow
        child[d] = min(max(x + delta * span, lower[d]), upper[d])
    return child


def nsga2_run(
    problem: Callable,
    space: DecisionSpace,
    params: NsgaParams,
    budget: int,
    violation_fn: Callable | None = None,
    archive_capacity: int = 100,
    threads: int = 1,
    telemetry: bool = False,
) -> OptimizerRun:
    """Standard generational NSGA-II over the same decision space.

    Binary tournaments on (rank, crowding), simulated binary crossover and
    polynomial mutation at rate 1/dims; elitist survival from the combined
    parent and offspring pool. With budget equal to the population size the
    archive is the non-dominated subset of the initial population.
    """
    n = params.population
    if budget < n:
        raise OptimizerError(f"budget {budget} is below the population size {n}")
    start = time.perf_counter()
    rng = np.random.default_rng(params.seed)
    lower, upper = space.lower, space.upper
    positions = np.array(
        [space.clip_round(rng.uniform(lower, upper)) for _ in range(n)]
    )
    objectives, violations = _evaluate_positions(problem, positions, violation_fn, threads)
    evaluations = n
    population = [
        Firefly(positions[i].copy(), objectives[i], violation=violations[i])
        for i in range(n)
    ]
    assign_ranks_and_crowding(population)

    archive = ParetoArchive(archive_capacity)
    hv_ref = _telemetry_reference(objectives) if telemetry else None
    hv_trace: list[float] = []
    archive.update([f for f in population if f.rank == 1])
    if telemetry:
        hv_trace.append(_hypervolume_filtered(archive.points(), np.asarray(hv_ref)))

    mutation_rate = 1.0 / len(space)
    while evaluations + n <= budget:
        children = []
        while len(children) < n:
            p1 = _tournament(rng, population)
            p2 = _tournament(rng, population)
            c1, c2 = _sbx_crossover(
                rng, p1.position, p2.position, lower, upper, params.sbx_eta, params.crossover_prob
            )
            for child in (c1, c2):
                if len(children) >= n:
                    break
                child = _polynomial_mutation(
                    rng, child, lower, upper, params.mutation_eta, mutation_rate
                )
                children.append(space.clip_round(child))
        child_positions = np.array(children)
        child_objs, child_viols = _evaluate_positions(
            problem, child_positions, violation_fn, threads
        )
        evaluations += n
        pool = population + [
            Firefly(child_positions[i].copy(), child_objs[i], violation=child_viols[i])
            for i in range(n)
        ]
        assign_ranks_and_crowding(pool)
        pool.sort(key=lambda f: (f.rank, -f.crowding))
        population = pool[:n]
        assign_ranks_and_crowding(population)
        archive.update([f for f in pool if f.rank == 1])
        if telemetry:
            hv_trace.append(_hypervolume_filtered(archive.points(), np.asarray(hv_ref)))
    return OptimizerRun(
        archive=archive,
        evaluations=evaluations,
        algorithm="nsga2",
        seed=params.seed,
        seconds=time.perf_counter() - start,
        hv_trace=np.asarray(hv_trace) if telemetry else None,
        hv_reference=hv_ref,
    )
