import numpy as np
import pytest

from hierpoll.channels import make_channel
from hierpoll.errors import (
    GridTooLarge,
    InvalidAction,
    InvalidCostSpec,
    ModelShapeMismatch,
    UncertifiedDominance,
    ZeroLikelihood,
)
from hierpoll.pomdp import (
    CostSpec,
    FreudenthalGrid,
    PollingModel,
    belief_cost,
    cost_matrix,
    evaluate_policy_on_grid,
    filter_update,
    freudenthal_interpolate,
    grid_size,
    model_distance,
    myopic_policy,
    validate_belief,
    value_iteration,
    verify_myopic_bound,
    verify_ordinal_sensitivity,
    verify_sensitivity_bounds,
)
from hierpoll.presets import example1_costs, example1_model
from hierpoll.stochastic import matrix_power

from conftest import random_stochastic


@pytest.fixture
def model(O1, O2, P3):
    return example1_model(rho=0.5)


class TestCostSpec:
    def test_monotonicity_rejected(self):
        with pytest.raises(InvalidCostSpec):
            CostSpec.expectation([0.25, 0.5], [0.5, 1.0])  # S increasing
        with pytest.raises(InvalidCostSpec):
            CostSpec.expectation([0.5, 0.25], [1.0, 0.5])  # w decreasing

    def test_intent_monotonicity(self):
        from hierpoll.stochastic import ConvexPolynomial
        betas = (ConvexPolynomial([1.0]), ConvexPolynomial([0.5, 0.5]))
        CostSpec.intent([1.0, 0.5], betas, entropy_weights=[2.0, 1.0], offsets=[1.0, 2.0])
        with pytest.raises(InvalidCostSpec):
            CostSpec.intent([1.0, 0.5], betas, entropy_weights=[1.0, 2.0], offsets=[1.0, 2.0])

    def test_intent_measurement_average(self):
        from hierpoll.stochastic import ConvexPolynomial
        betas = (ConvexPolynomial([0.5, 0.5]),)
        spec = CostSpec.intent([1.0, 0.5], betas, entropy_weights=[1.0], offsets=[1.0])
        assert spec.measurement[0] == pytest.approx(0.75)


class TestBeliefCost:
    def test_vertex_cost_is_measurement(self):
        spec = example1_costs()
        for u, S in [(1, 0.5), (2, 0.25)]:
            assert belief_cost(np.array([1.0, 0, 0]), u, spec) == pytest.approx(S)

    def test_published_cost_values_at_uniform(self):
        spec = example1_costs()
        pi = np.full(3, 1 / 3)
        assert belief_cost(pi, 1, spec) == pytest.approx(0.5 + 0.5 * (2 / 3), abs=1e-12)
        assert belief_cost(pi, 2, spec) == pytest.approx(0.25 + 2 / 3, abs=1e-12)

    def test_intent_vertex_keeps_offset(self):
        from hierpoll.stochastic import ConvexPolynomial
        spec = CostSpec.intent([0.7], (ConvexPolynomial([1.0]),),
                               entropy_weights=[2.0], offsets=[3.0])
        assert belief_cost(np.array([0.0, 1.0]), 1, spec) == pytest.approx(0.7 + 3.0)

    def test_invalid_action(self):
        with pytest.raises(InvalidAction):
            belief_cost(np.array([1.0, 0.0]), 3, example1_costs())

    def test_concavity(self, rng):
        spec = example1_costs()
        from hierpoll.stochastic import ConvexPolynomial
        intent = CostSpec.intent([0.5, 0.25], (ConvexPolynomial([1.0]), ConvexPolynomial([0.0, 1.0])),
                                 entropy_weights=[2.0, 1.0], offsets=[1.0, 2.0])
        for costs in (spec, intent):
            for _ in range(50):
                p1 = rng.dirichlet(np.ones(3))
                p2 = rng.dirichlet(np.ones(3))
                lam = rng.uniform()
                mid = lam * p1 + (1 - lam) * p2
                for u in (1, 2):
                    assert belief_cost(mid, u, costs) >= (
                        lam * belief_cost(p1, u, costs)
                        + (1 - lam) * belief_cost(p2, u, costs) - 1e-10)


class TestMyopicPolicy:
    def test_threshold_rule(self):
        spec = example1_costs()
        assert myopic_policy(np.full(3, 1 / 3), spec) == 1        # pi'pi = 1/3 < 0.5
        assert myopic_policy(np.array([1.0, 0, 0]), spec) == 2    # pi'pi = 1

    def test_threshold_boundary(self, rng):
        spec = example1_costs()
        for _ in range(50):
            pi = rng.dirichlet(np.ones(3))
            want = 1 if pi @ pi <= 0.5 else 2
            assert myopic_policy(pi, spec) == want

    def test_tie_breaks_to_action_one(self):
        spec = CostSpec.expectation([0.5, 0.5], [0.5, 1.0])
        assert myopic_policy(np.array([1.0, 0.0, 0.0]), spec) == 1


class TestFilterUpdate:
    def test_perfect_observation(self, P3):
        model = PollingModel(P3, (make_channel(np.eye(3)),),
                             CostSpec.expectation([0.5], [0.5]), rho=0.5)
        pi = np.full(3, 1 / 3)
        post, sigma = filter_update(pi, 1, 1, model)
        assert np.allclose(post, [0, 1, 0])
        assert sigma == pytest.approx(float((P3.T @ pi)[1]))

    def test_uninformative_observation(self, P3):
        model = PollingModel(P3, (make_channel(np.full((3, 4), 0.25)),),
                             CostSpec.expectation([0.5], [0.5]), rho=0.5)
        pi = np.array([0.6, 0.3, 0.1])
        post, sigma = filter_update(pi, 2, 1, model)
        assert np.allclose(post, P3.T @ pi)
        assert sigma == pytest.approx(0.25)

    def test_hand_evaluated_update(self, model, P3, O1):
        pi = np.full(3, 1 / 3)
        pred = P3.T @ pi
        want = O1[:, 0] * pred
        want = want / want.sum()
        post, sigma = filter_update(pi, 0, 1, model)
        assert np.allclose(post, want, atol=1e-14)
        assert sigma == pytest.approx(float((O1[:, 0] * pred).sum()))

    def test_zero_likelihood(self, P3):
        O = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
        model = PollingModel(P3, (make_channel(O),),
                             CostSpec.expectation([0.5], [0.5]), rho=0.5)
        with pytest.raises(ZeroLikelihood):
            filter_update(np.full(3, 1 / 3), 1, 1, model)

    def test_likelihoods_sum_to_one(self, model, rng):
        for _ in range(200):
            pi = rng.dirichlet(np.ones(3))
            u = int(rng.integers(1, 3))
            total = 0.0
            for y in range(3):
                post, sigma = filter_update(pi, y, u, model)
                validate_belief(post)
                total += sigma
            assert total == pytest.approx(1.0, abs=1e-10)


class TestFreudenthalGrid:
    def test_grid_size_formula(self):
        assert FreudenthalGrid(60, 3).size == grid_size(60, 3) == 1891

    def test_exact_on_grid_points(self, rng):
        grid = FreudenthalGrid(7, 3)
        values = rng.normal(size=grid.size)
        got = grid.interpolate(values, grid.points)
        assert np.abs(got - values).max() < 1e-12

    def test_reproduces_affine_functions(self, rng):
        grid = FreudenthalGrid(9, 4)
        a = rng.normal(size=4)
        values = grid.points @ a
        for _ in range(100):
            pi = rng.dirichlet(np.ones(4))
            got = grid.interpolate(values, pi[None, :])[0]
            assert got == pytest.approx(float(pi @ a), abs=1e-12)

    def test_weights_are_convex_combination(self, rng):
        grid = FreudenthalGrid(11, 3)
        for _ in range(200):
            pi = rng.dirichlet(np.ones(3))
            idx, w = grid.interpolation_data(pi[None, :])
            assert w.min() >= -1e-12
            assert w.sum() == pytest.approx(1.0, abs=1e-12)
            recon = (grid.points[idx[0]] * w[0][:, None]).sum(axis=0)
            assert np.abs(recon - pi).max() < 1e-9

    def test_matches_bruteforce_simplex_search(self, rng):
        # oracle: enumerate every simplex of the triangulation and locate
        # the query by solving for barycentric coordinates
        from itertools import permutations
        grid = FreudenthalGrid(10, 3)
        values = rng.normal(size=grid.size)

        def oracle(pi):
            xi = grid.M * np.cumsum(pi[::-1])[::-1]
            for g in range(grid.size):
                base = np.cumsum(grid.lattice[g][::-1])[::-1].astype(float)
                for perm in permutations(range(1, grid.X)):
                    verts = [base.copy()]
                    for p in perm:
                        nxt = verts[-1].copy()
                        nxt[p] += 1
                        verts.append(nxt)
                    Vm = np.stack(verts, axis=1)
                    try:
                        lam = np.linalg.solve(Vm, xi)
                    except np.linalg.LinAlgError:
                        continue
                    if lam.min() < -1e-9:
                        continue
                    comp = Vm - np.vstack([Vm[1:], np.zeros((1, grid.X + 0))])
                    comps = np.rint(comp.T).astype(np.int64)
                    idx = grid.index_of(comps)
                    if (idx < 0).any():
                        continue
                    return float(lam @ values[idx])
            raise AssertionError("no containing simplex found")

        for _ in range(25):
            pi = rng.dirichlet(np.ones(3))
            fast = grid.interpolate(values, pi[None, :])[0]
            assert fast == pytest.approx(oracle(pi), abs=1e-9)

    def test_freudenthal_interpolate_entry_point(self, model):
        gvf = value_iteration(model, M=10)
        g = 17
        assert freudenthal_interpolate(gvf, gvf.points[g]) == pytest.approx(
            float(gvf.values[g]), abs=1e-12)

    def test_neighbor_pairs_are_one_move_apart(self):
        grid = FreudenthalGrid(4, 3)
        pairs = grid.neighbor_pairs()
        for a, b in pairs:
            assert np.abs(grid.lattice[a] - grid.lattice[b]).sum() == 2


class TestValueIteration:
    def test_rho_zero_recovers_myopic(self, O1, O2, P3):
        model = example1_model(rho=0.0)
        gvf = value_iteration(model, M=15)
        myopic = np.argmin(cost_matrix(gvf.points, model.costs), axis=1) + 1
        assert np.array_equal(gvf.policy, myopic)
        want = cost_matrix(gvf.points, model.costs).min(axis=1)
        assert np.abs(gvf.values - want).max() < 1e-12

    def test_sup_norm_contraction(self, model):
        gvf = value_iteration(model, M=12)
        deltas = gvf.sweep_deltas
        # after the first sweep the change sequence decays like rho^n
        assert np.all(deltas[2:] <= model.rho * deltas[1:-1] + 1e-9)

    def test_converged_flag_and_tolerance(self, model):
        gvf = value_iteration(model, M=12, tol=1e-8)
        assert gvf.converged
        assert gvf.sweep_deltas[-1] < 1e-8

    def test_grid_too_large(self, model):
        with pytest.raises(GridTooLarge):
            value_iteration(model, M=3000, max_points=10_000)

    def test_policy_evaluation_of_optimal_policy_matches(self, model):
        gvf = value_iteration(model, M=12)
        evald = evaluate_policy_on_grid(model, gvf.policy, M=12)
        assert np.abs(evald - gvf.values).max() < 1e-6


class TestMyopicBound:
    def test_example_model_small_grid(self):
        for rho in (0.3, 0.5):
            report = verify_myopic_bound(example1_model(rho), M=24)
            assert report.holds
            assert report.violations == ()

    def test_rho_zero_policies_identical(self):
        model = example1_model(rho=0.0)
        report = verify_myopic_bound(model, M=18)
        assert report.holds
        gvf = value_iteration(model, M=18)
        myopic = np.argmin(cost_matrix(gvf.points, model.costs), axis=1) + 1
        assert np.array_equal(gvf.policy, myopic)

    def test_inverted_costs_unconstructible(self):
        with pytest.raises(InvalidCostSpec):
            CostSpec.expectation([0.25, 0.5], [1.0, 0.5])

    def test_randomized_garbled_models(self, rng):
        # random certified-chain models, X <= 4 and U <= 3: the bound must
        # hold at M = 30
        for trial in range(4):
            X = int(rng.integers(2, 5))
            U = int(rng.integers(2, 4))
            P = random_stochastic(X, X, rng)
            chans = [make_channel(random_stochastic(X, X, rng))]
            for _ in range(U - 1):
                R = random_stochastic(X, X, rng)
                chans.append(make_channel(chans[-1].matrix.entries @ R))
            S = np.sort(rng.uniform(0.1, 1.0, size=U))[::-1]
            w = np.cumsum(rng.uniform(0.1, 0.5, size=U))
            model = PollingModel(P, tuple(chans), CostSpec.expectation(S, w),
                                 rho=float(rng.uniform(0.2, 0.7)))
            assert verify_myopic_bound(model, M=30).holds


class TestModelDistance:
    def test_identical_models(self, model):
        dist = model_distance(model, model)
        assert dist.distance == 0.0
        # G = max_i,u C(e_i, u) / (1 - rho) = 0.5 / 0.5
        assert dist.cost_bound == pytest.approx(1.0)

    def test_single_entry_perturbation(self, P3, O1, O2):
        eps = 0.01
        O1p = O1.copy()
        O1p[0, 0] += eps
        O1p[0, 1] -= eps
        theta = example1_model(rho=0.5)
        gamma = PollingModel(P3, (make_channel(O1p), make_channel(O2)),
                             example1_costs(), rho=0.5)
        dist = model_distance(theta, gamma)
        assert dist.distance == pytest.approx(2 * eps * P3[:, 0].max(), abs=1e-12)

    def test_shape_mismatch(self, model, P3, O1):
        other = PollingModel(P3, (make_channel(O1),),
                             CostSpec.expectation([0.5], [0.5]), rho=0.5)
        with pytest.raises(ModelShapeMismatch):
            model_distance(model, other)


class TestSensitivityBounds:
    def test_identical_models_zero_gap(self, model):
        report = verify_sensitivity_bounds(model, model, M=12)
        assert report.distance == 0.0
        assert report.holds

    def test_perturbed_channel(self, P3, O1, O2):
        eps = 0.01
        O1p = O1.copy()
        O1p[0, 0] += eps
        O1p[0, 1] -= eps
        theta = example1_model(rho=0.5)
        gamma = PollingModel(P3, (make_channel(O1p), make_channel(O2)),
                             example1_costs(), rho=0.5)
        report = verify_sensitivity_bounds(theta, gamma, M=20)
        assert report.holds
        assert report.cost_bound == pytest.approx(1.0)


class TestOrdinalSensitivity:
    def test_garbled_network_costs_more(self, P3, O1, O2):
        theta1 = example1_model(rho=0.5)
        theta2 = PollingModel(
            P3,
            (make_channel(O2), make_channel(matrix_power(O2, 2))),
            example1_costs(), rho=0.5)
        report = verify_ordinal_sensitivity(theta1, theta2, M=20)
        assert report.holds

    def test_identical_models_equal_values(self, model):
        report = verify_ordinal_sensitivity(model, model, M=12)
        assert report.holds
        assert report.max_excess == pytest.approx(0.0, abs=1e-12)

    def test_uncertified_rejected(self, P3, O1, O2):
        theta1 = example1_model(rho=0.5)
        theta2 = PollingModel(P3, (make_channel(np.eye(3)), make_channel(O2)),
                              example1_costs(), rho=0.5)
        with pytest.raises(UncertifiedDominance):
            verify_ordinal_sensitivity(theta1, theta2, M=12)
