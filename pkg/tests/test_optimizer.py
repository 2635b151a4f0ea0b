import math

import numpy as np
import pytest

from pvstorage import optimizer as opt
from pvstorage.optimizer import (
    DecisionSpace,
    Firefly,
    MomfaParams,
    NsgaParams,
    ParetoArchive,
    Variable,
    VariableKind,
)


def unit_space(dims=1, lo=0.0, hi=1.0):
    return DecisionSpace(
        tuple(Variable(f"x{d}", lo, hi) for d in range(dims))
    )


def parabola_problem(x):
    """Analytic two-objective test problem: f1 = x, f2 = 1 - x^2."""
    v = float(np.atleast_1d(x)[0])
    return v, 1.0 - v * v


def brute_force_ranks(points):
    """Independent O(n^2) non-domination ranking via boolean matrices."""
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    ge = (pts[:, None, :] >= pts[None, :, :]).all(axis=2)
    gt = (pts[:, None, :] > pts[None, :, :]).any(axis=2)
    dominates = ge & gt
    ranks = np.zeros(n, dtype=int)
    remaining = np.ones(n, dtype=bool)
    rank = 1
    while remaining.any():
        active = dominates[np.ix_(remaining, remaining)]
        idx = np.nonzero(remaining)[0]
        front_local = ~active.any(axis=0)
        ranks[idx[front_local]] = rank
        remaining[idx[front_local]] = False
        rank += 1
    return ranks


# ----------------------------------------------------------------------
# Building blocks
# ----------------------------------------------------------------------

class TestLogistic:
    def test_map_step(self):
        assert opt.logistic_map_step(0.3) == pytest.approx(0.84)

    def test_init_within_bounds_and_affine(self):
        space = unit_space(3, lo=-5.0, hi=100.0)
        pop = opt.logistic_init(12, space, seed=42)
        assert pop.shape == (12, 3)
        assert np.all(pop >= -5.0) and np.all(pop <= 100.0)

    def test_init_deterministic(self):
        space = unit_space(4)
        a = opt.logistic_init(20, space, seed=9)
        b = opt.logistic_init(20, space, seed=9)
        assert np.array_equal(a, b)

    def test_init_spreads_values(self):
        pop = opt.logistic_init(50, unit_space(1), seed=1)
        assert pop.std() > 0.15

    def test_integer_variables_rounded(self):
        space = DecisionSpace(
            (Variable("h", 0.0, 8759.0, VariableKind.INTEGER_HOUR),)
        )
        pop = opt.logistic_init(30, space, seed=3)
        assert np.array_equal(pop, np.rint(pop))


class TestChaosBeta:
    def test_zero_is_absorbing(self):
        assert opt.chaos_beta_step(0.0) == 0.0

    def test_fractional_inverse(self):
        assert opt.chaos_beta_step(0.4) == pytest.approx(0.5)

    def test_exact_quarter_maps_to_zero(self):
        assert opt.chaos_beta_step(0.25) == 0.0


class TestAttractiveness:
    def test_zero_distance_gives_chaos_value(self):
        assert opt.attractiveness(0.7, 0.2, 1.0, 0.0) == pytest.approx(0.7)

    def test_infinite_distance_floors_at_beta0(self):
        assert opt.attractiveness(0.9, 0.2, 1.0, 50.0) == pytest.approx(0.2)

    def test_reference_value(self):
        assert opt.attractiveness(1.0, 0.2, 1.0, 1.0) == pytest.approx(
            0.8 * math.exp(-1.0) + 0.2, rel=1e-6
        )
        assert opt.attractiveness(1.0, 0.2, 1.0, 1.0) == pytest.approx(0.49430, abs=5e-6)


class TestLevy:
    def test_gamma_function_sanity(self):
        assert math.gamma(1.0) == pytest.approx(1.0)
        assert math.gamma(0.5) == pytest.approx(math.sqrt(math.pi))

    def test_zero_numerator(self):
        assert opt.levy_step(0.0, 3.7, 1.5) == 0.0

    def test_unit_case(self):
        assert opt.levy_step(1.0, 1.0, 1.5) == pytest.approx(1.0)

    def test_reference_value(self):
        assert opt.levy_step(2.0, 4.0, 1.5) == pytest.approx(0.79370, abs=5e-6)

    def test_zero_denominator_rejected(self):
        with pytest.raises(opt.OptimizerError):
            opt.levy_step(1.0, 0.0, 1.5)

    def test_sampler_deterministic(self):
        a = [opt.levy_sample(np.random.default_rng(5), 1.5) for _ in range(3)]
        b = [opt.levy_sample(np.random.default_rng(5), 1.5) for _ in range(3)]
        assert a == b


class TestMoveFirefly:
    def space(self):
        return unit_space(2, lo=-100.0, hi=100.0)

    def test_full_attraction_lands_on_target(self):
        params = MomfaParams(alpha0=0.0, gamma=0.0)
        # gamma 0 and beta_chaos 1 give beta = 1 at any distance
        new = opt.move_firefly(
            np.array([0.0, 0.0]), np.array([10.0, 0.0]), self.space(), params,
            1, np.random.default_rng(0), beta_chaos=1.0,
        )
        assert np.allclose(new, [10.0, 0.0], atol=1e-12)

    def test_null_move(self):
        params = MomfaParams(alpha0=0.0, gamma=0.0)
        new = opt.move_firefly(
            np.array([3.0, 4.0]), np.array([10.0, 0.0]), self.space(), params,
            2, np.random.default_rng(0), beta_chaos=0.0,
        )
        assert np.allclose(new, [3.0, 4.0], atol=1e-12)

    def test_half_attraction(self):
        params = MomfaParams(alpha0=0.0, gamma=0.0)
        new = opt.move_firefly(
            np.array([0.0, 0.0]), np.array([10.0, 0.0]), self.space(), params,
            1, np.random.default_rng(0), beta_chaos=0.5,
        )
        assert np.allclose(new, [5.0, 0.0], atol=1e-12)

    def test_clamped_to_bounds(self):
        space = unit_space(1, lo=0.0, hi=1.0)
        params = MomfaParams(alpha0=50.0, theta=0.9)
        for seed in range(10):
            new = opt.move_firefly(
                np.array([0.5]), np.array([0.5]), space, params, 0,
                np.random.default_rng(seed), beta_chaos=0.5,
            )
            assert 0.0 <= new[0] <= 1.0

    def test_contraction_without_noise(self):
        params = MomfaParams(alpha0=0.0, gamma=0.0)
        xi = np.array([0.0, 0.0])
        xj = np.array([8.0, 6.0])
        rng = np.random.default_rng(0)
        prev = np.linalg.norm(xj - xi)
        for _ in range(5):
            xi = opt.move_firefly(xi, xj, self.space(), params, 1, rng, beta_chaos=0.4)
            dist = np.linalg.norm(xj - xi)
            assert dist < prev or dist == 0.0
            prev = dist

    def test_alpha_sequence_decays_geometrically(self):
        params = MomfaParams(alpha0=1.0, theta=0.9)
        alphas = [params.alpha0 * params.theta**t for t in range(10)]
        ratios = [b / a for a, b in zip(alphas, alphas[1:])]
        assert np.allclose(ratios, params.theta, rtol=1e-12)


# ----------------------------------------------------------------------
# Sorting, archive, hypervolume
# ----------------------------------------------------------------------

class TestNonDominatedSort:
    def test_strict_dominance(self):
        ranks = opt.non_dominated_sort([(1.0, 1.0), (2.0, 2.0)])
        assert list(ranks) == [2, 1]

    def test_mutual_non_dominance(self):
        ranks = opt.non_dominated_sort([(1.0, 3.0), (2.0, 2.0), (3.0, 1.0)])
        assert list(ranks) == [1, 1, 1]

    def test_equal_points_share_rank(self):
        ranks = opt.non_dominated_sort([(1.0, 1.0), (1.0, 1.0), (2.0, 2.0)])
        assert ranks[0] == ranks[1]

    def test_matches_brute_force(self):
        for seed in range(10):
            pts = np.random.default_rng(seed).uniform(0, 1, size=(100, 2))
            assert np.array_equal(opt.non_dominated_sort(pts), brute_force_ranks(pts))

    def test_nan_rejected(self):
        with pytest.raises(opt.OptimizerError):
            opt.non_dominated_sort([(np.nan, 1.0)])

    def test_constrained_domination(self):
        # the feasible point outranks better-objective infeasible ones
        pts = [(10.0, 10.0), (1.0, 1.0), (5.0, 5.0)]
        viols = [1.0, 0.0, 0.5]
        ranks = opt.non_dominated_sort(pts, viols)
        assert ranks[1] == 1
        assert ranks[2] == 2  # smaller violation beats larger
        assert ranks[0] == 3


class TestCrowding:
    def test_extremes_are_infinite(self):
        pts = np.array([[0.0, 3.0], [1.0, 2.0], [2.0, 1.0], [3.0, 0.0]])
        dists = opt.crowding_distances(pts)
        assert np.isinf(dists[0]) and np.isinf(dists[3])
        assert np.isfinite(dists[1]) and np.isfinite(dists[2])


class TestArchive:
    def test_never_holds_dominated_entries(self):
        rng = np.random.default_rng(11)
        archive = ParetoArchive(capacity=200)
        for _ in range(20):
            batch = [
                Firefly(position=rng.uniform(0, 1, 2), objectives=tuple(rng.uniform(0, 1, 2)))
                for _ in range(20)
            ]
            archive.update(batch)
            pts = archive.points()
            assert np.all(brute_force_ranks(pts) == 1)

    def test_capacity_truncation_keeps_extremes(self):
        archive = ParetoArchive(capacity=5)
        xs = np.linspace(0.0, 1.0, 50)
        archive.update(
            [Firefly(position=np.array([x]), objectives=(x, 1.0 - x)) for x in xs]
        )
        assert len(archive) == 5
        objs = archive.points()
        assert objs[:, 0].max() == pytest.approx(1.0)
        assert objs[:, 1].max() == pytest.approx(1.0)

    def test_infeasible_never_admitted(self):
        archive = ParetoArchive()
        archive.update([Firefly(position=np.zeros(1), objectives=(9.0, 9.0), violation=0.1)])
        assert len(archive) == 0


class TestHypervolume:
    def test_single_point(self):
        assert opt.hypervolume(np.array([[1.0, 1.0]]), (0.0, 0.0)) == pytest.approx(1.0)

    def test_two_point_front(self):
        assert opt.hypervolume(np.array([[1.0, 2.0], [2.0, 1.0]]), (0.0, 0.0)) == pytest.approx(3.0)

    def test_empty_front(self):
        assert opt.hypervolume(np.empty((0, 2)), (0.0, 0.0)) == 0.0

    def test_dominated_interior_point_adds_nothing(self):
        base = opt.hypervolume(np.array([[2.0, 2.0]]), (0.0, 0.0))
        more = opt.hypervolume(np.array([[2.0, 2.0], [1.0, 1.0]]), (0.0, 0.0))
        assert more == pytest.approx(base)

    def test_reference_must_be_dominated(self):
        with pytest.raises(opt.OptimizerError):
            opt.hypervolume(np.array([[1.0, 1.0]]), (2.0, 0.0))


# ----------------------------------------------------------------------
# Engine runs on the analytic problem
# ----------------------------------------------------------------------

class TestMomfaRun:
    def test_front_quality(self):
        run = opt.momfa_run(
            parabola_problem, unit_space(1), MomfaParams(seed=1), budget=2000
        )
        pts = run.archive.points()
        assert len(pts) >= 10
        deviation = np.abs(pts[:, 1] - (1.0 - pts[:, 0] ** 2))
        assert deviation.max() <= 1e-2
        assert pts[:, 0].min() <= 0.05 and pts[:, 0].max() >= 0.95
        assert run.evaluations == 2000

    def test_population_one_random_walk(self):
        run = opt.momfa_run(
            parabola_problem, unit_space(1), MomfaParams(population=1, seed=3), budget=50
        )
        assert run.evaluations == 50
        pts = run.archive.points()
        assert len(pts) >= 1
        assert np.all(brute_force_ranks(pts) == 1)

    def test_deterministic(self):
        runs = [
            opt.momfa_run(parabola_problem, unit_space(1), MomfaParams(seed=7), budget=400)
            for _ in range(2)
        ]
        assert np.array_equal(runs[0].archive.points(), runs[1].archive.points())
        assert np.array_equal(
            np.array([e.position for e in runs[0].archive.entries]),
            np.array([e.position for e in runs[1].archive.entries]),
        )

    def test_budget_below_population_rejected(self):
        with pytest.raises(opt.OptimizerError):
            opt.momfa_run(parabola_problem, unit_space(1), MomfaParams(), budget=10)

    def test_evaluator_failure_carries_vector(self):
        def broken(x):
            raise RuntimeError("boom")

        with pytest.raises(opt.EvaluationError) as err:
            opt.momfa_run(broken, unit_space(1), MomfaParams(seed=1), budget=40)
        assert err.value.vector.shape == (1,)

    def test_hypervolume_trace_non_decreasing(self):
        run = opt.momfa_run(
            parabola_problem, unit_space(1), MomfaParams(seed=2), budget=800,
            archive_capacity=10_000, telemetry=True,
        )
        trace = run.hv_trace
        assert trace is not None and len(trace) > 1
        assert np.all(np.diff(trace) >= -1e-12)

    def test_constraint_keeps_archive_feasible(self):
        run = opt.momfa_run(
            parabola_problem, unit_space(1), MomfaParams(seed=5), budget=600,
            violation_fn=lambda obj: max(0.0, 0.5 - obj[1]),
        )
        pts = run.archive.points()
        assert np.all(pts[:, 1] >= 0.5)

    def test_initial_points_seeded(self):
        target = np.array([0.123456])
        seen = []

        def spy(x):
            seen.append(float(np.atleast_1d(x)[0]))
            return parabola_problem(x)

        opt.momfa_run(
            spy, unit_space(1), MomfaParams(seed=1, population=5), budget=5,
            initial_points=[target],
        )
        assert seen[0] == pytest.approx(0.123456)

    def test_threads_do_not_change_result(self):
        a = opt.momfa_run(parabola_problem, unit_space(1), MomfaParams(seed=4), budget=200, threads=1)
        b = opt.momfa_run(parabola_problem, unit_space(1), MomfaParams(seed=4), budget=200, threads=4)
        assert np.array_equal(a.archive.points(), b.archive.points())


class TestNsga2Run:
    def test_front_quality(self):
        run = opt.nsga2_run(
            parabola_problem, unit_space(1), NsgaParams(seed=1), budget=2000
        )
        pts = run.archive.points()
        deviation = np.abs(pts[:, 1] - (1.0 - pts[:, 0] ** 2))
        assert deviation.max() <= 2e-2
        assert run.evaluations == 2000

    def test_budget_equal_population_returns_initial_front(self):
        run = opt.nsga2_run(
            parabola_problem, unit_space(1), NsgaParams(population=30, seed=2), budget=30
        )
        assert run.evaluations == 30
        pts = run.archive.points()
        assert np.all(brute_force_ranks(pts) == 1)

    def test_deterministic(self):
        runs = [
            opt.nsga2_run(parabola_problem, unit_space(1), NsgaParams(seed=9), budget=400)
            for _ in range(2)
        ]
        assert np.array_equal(runs[0].archive.points(), runs[1].archive.points())

    def test_equal_evaluation_counts_with_momfa(self):
        m = opt.momfa_run(parabola_problem, unit_space(1), MomfaParams(seed=1), budget=500)
        n = opt.nsga2_run(parabola_problem, unit_space(1), NsgaParams(seed=1), budget=500)
        assert m.evaluations == n.evaluations


class TestSpace:
    def test_bounds_must_be_ordered(self):
        with pytest.raises(opt.OptimizerError):
            Variable("x", 1.0, 1.0)

    def test_clip_round(self):
        space = DecisionSpace(
            (
                Variable("a", 0.0, 10.0),
                Variable("h", 0.0, 100.0, VariableKind.INTEGER_HOUR),
            )
        )
        out = space.clip_round(np.array([-5.0, 42.7]))
        assert out[0] == 0.0
        assert out[1] == 43.0
