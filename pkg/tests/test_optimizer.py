"""Tests for TL-H2Opt."""

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from mortl.core.exceptions import (
    DimensionMismatch,
    LineSearchFailed,
    NonFiniteResult,
)
from mortl.models.models import (
    CostGradient,
    Horizon,
    OptimizerConfig,
    ReducedModel,
    StateSpaceModel,
)
from mortl.services.cost import cost_and_gradient, cost_only
from mortl.services.harness import random_model
from mortl.services.optimizer import (
    pack,
    pack_gradient,
    parameter_count,
    tl_h2opt,
    unpack,
    wolfe_line_search,
)
from mortl.services.reducers import tl_bt
from tests.oracles import random_reduced


class TestPacking:
    """Test the flat parameter vector."""

    def test_parameter_count(self) -> None:
        """Test r^2 + r m + p r for (r, m, p) = (3, 2, 1)."""
        assert parameter_count((3, 2, 1)) == 18
        assert pack(random_reduced(3, 2, 1, seed=0)).size == 18

    def test_unpack_inverts_pack(self) -> None:
        """Test unpack(pack(x)) = x."""
        red = random_reduced(3, 2, 2, seed=1)
        back = unpack(pack(red), (3, 2, 2))
        assert np.array_equal(back.A, red.A)
        assert np.array_equal(back.B, red.B)
        assert np.array_equal(back.C, red.C)

    def test_unpack_rejects_non_finite_entries(self) -> None:
        """Test that a NaN parameter is a numerical failure."""
        vector = np.zeros(parameter_count((1, 1, 1)))
        vector[1] = np.nan
        with pytest.raises(NonFiniteResult):
            unpack(vector, (1, 1, 1))

    def test_row_major_order(self) -> None:
        """Test that A_r comes first, row by row."""
        red = ReducedModel(
            A=[[1.0, 2.0], [3.0, 4.0]], B=[[5.0], [6.0]], C=[[7.0, 8.0]]
        )
        assert pack(red).tolist() == [1, 2, 3, 4, 5, 6, 7, 8]

    def test_packing_preserves_inner_products(self) -> None:
        """Test <grad, delta> = dot(pack(grad), pack(delta))."""
        rng = np.random.default_rng(2)
        grad = CostGradient(
            J=0.0,
            grad_Ar=rng.standard_normal((2, 2)),
            grad_Br=rng.standard_normal((2, 3)),
            grad_Cr=rng.standard_normal((1, 2)),
        )
        delta = random_reduced(2, 3, 1, seed=3)
        matrix_product = (
            np.trace(grad.grad_Ar.T @ delta.A)
            + np.trace(grad.grad_Br.T @ delta.B)
            + np.trace(grad.grad_Cr.T @ delta.C)
        )
        assert pack_gradient(grad) @ pack(delta) == pytest.approx(
            matrix_product, abs=1e-14
        )

    def test_wrong_length(self) -> None:
        """Test that a vector of the wrong length is refused."""
        with pytest.raises(DimensionMismatch):
            unpack(np.zeros(5), (2, 1, 1))


class TestLineSearch:
    """Test the strong Wolfe line search on a quadratic."""

    def test_returns_a_wolfe_step(self) -> None:
        """Test both Wolfe conditions on f(x) = ||x||^2 / 2."""
        x0 = np.array([3.0, -4.0])
        direction = -x0
        config = OptimizerConfig()

        def phi(alpha: float):
            x = x0 + alpha * direction
            return 0.5 * float(x @ x), x

        f0, slope0 = 12.5, float(x0 @ direction)
        alpha, value, grad = wolfe_line_search(
            phi, direction, f0, slope0, 0.01, config
        )
        assert value <= f0 + config.wolfe_c1 * alpha * slope0
        assert abs(grad @ direction) <= -config.wolfe_c2 * slope0

    def test_shrinks_past_infeasible_points(self) -> None:
        """Test that an infeasible trial step is halved."""
        x0 = np.array([1.0])
        direction = np.array([-1.0])

        def phi(alpha: float):
            if alpha > 1.5:
                return np.inf, None
            x = x0 + alpha * direction
            return 0.5 * float(x @ x), x

        alpha, _, _ = wolfe_line_search(
            phi, direction, 0.5, -1.0, 4.0, OptimizerConfig()
        )
        assert 0 < alpha <= 1.5

    def test_fails_on_ascent(self) -> None:
        """Test that no step is found along an ascent direction."""

        def phi(alpha: float):
            return 1.0 + alpha, np.array([1.0])

        with pytest.raises(LineSearchFailed):
            wolfe_line_search(
                phi, np.array([1.0]), 1.0, -1.0, 1.0, OptimizerConfig()
            )


def grid_oracle() -> float:
    """Return min J over scalar reduced models of the two-state example.

    For h(t) = e^{-t} + e^{-10t} and g(t) = k e^{at} on [0, 1], the best
    k is int h e^{at} / int e^{2at} and
    J(a) = int h^2 - (int h e^{at})^2 / int e^{2at}.
    """

    def window(k):
        k = np.asarray(k, dtype=float)
        small = np.abs(k) < 1e-12
        return np.where(small, 1.0, np.expm1(k) / np.where(small, 1.0, k))

    energy = window(-2.0) + 2 * window(-11.0) + window(-20.0)

    def J(a):
        cross = window(a - 1.0) + window(a - 10.0)
        return energy - cross**2 / window(2 * a)

    grid = np.linspace(-30.0, 5.0, 35001)
    values = J(grid)
    best = grid[int(np.argmin(values))]
    polished = minimize_scalar(
        lambda a: float(J(a)),
        bounds=(best - 1e-3, best + 1e-3),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(polished.fun)


class TestTlH2Opt:
    """Test the quasi-Newton minimization."""

    def test_copy_stops_immediately(self) -> None:
        """Test that the global minimum ends at iteration 0."""
        full = random_model(3, seed=4)
        init = ReducedModel(A=full.A, B=full.B, C=full.C)
        report = tl_h2opt(full, Horizon(tau=1.0), init)
        assert report.iterations == 0
        assert report.termination == "gradient"
        assert report.grad_trace[0] < 1e-8

    def test_two_state_example_matches_grid(self) -> None:
        """Test the converged J against a grid search over (a, b, c)."""
        full = StateSpaceModel(
            A=np.diag([-1.0, -10.0]), B=[[1.0], [1.0]], C=[[1.0, 1.0]]
        )
        h = Horizon(tau=1.0)
        init, _ = tl_bt(full, h, 1)
        report = tl_h2opt(full, h, init, OptimizerConfig(grad_tol=1e-10))
        J_final = report.J_trace[-1]
        assert J_final == pytest.approx(grid_oracle(), rel=1e-6, abs=1e-12)

    @pytest.mark.parametrize("seed", [5, 6, 7])
    def test_cost_trace_is_non_increasing(self, seed: int) -> None:
        """Test the trace and that the result beats the init."""
        full = random_model(6, 1, 1, seed=seed)
        h = Horizon(tau=1.0)
        init, _ = tl_bt(full, h, 2)
        report = tl_h2opt(full, h, init, OptimizerConfig(max_iter=100))
        trace = np.array(report.J_trace)
        assert np.all(np.diff(trace) <= 1e-12 * (1 + trace[:-1]))
        assert trace[-1] <= cost_only(full, init, h) + 1e-12
        assert report.iterations == len(trace) - 1

    def test_gradient_termination_meets_tolerance(self) -> None:
        """Test first-order optimality at a "gradient" termination."""
        full = random_model(5, 1, 1, seed=8)
        h = Horizon(tau=1.0)
        init, _ = tl_bt(full, h, 1)
        config = OptimizerConfig(grad_tol=1e-6, max_iter=500)
        report = tl_h2opt(full, h, init, config)
        assert report.termination == "gradient"
        grad = cost_and_gradient(full, report.model, h)
        assert grad.norm_inf() < config.grad_tol * (1 + abs(grad.J))

    def test_similar_inits_reach_the_same_cost(self) -> None:
        """Test that a change of initial coordinates reaches the same J."""
        full = random_model(5, 1, 1, seed=9)
        h = Horizon(tau=1.0)
        init, _ = tl_bt(full, h, 2)
        T = np.array([[1.0, 0.1], [0.0, 1.2]])
        config = OptimizerConfig(grad_tol=1e-9)
        first = tl_h2opt(full, h, init, config)
        second = tl_h2opt(full, h, init.similar(T), config)
        assert second.J_trace[-1] == pytest.approx(
            first.J_trace[-1], rel=1e-6
        )

    def test_line_search_failure_is_flagged(self, mocker) -> None:
        """Test that a failed line search returns the iterate flagged."""
        mocker.patch(
            "mortl.services.optimizer.wolfe_line_search",
            side_effect=LineSearchFailed("no step"),
        )
        full = random_model(4, seed=10)
        h = Horizon(tau=1.0)
        init, _ = tl_bt(full, h, 1)
        report = tl_h2opt(full, h, init)
        assert report.flagged
        assert report.termination == "line_search"
        assert np.array_equal(report.model.A, init.A)

    def test_max_iter_zero(self) -> None:
        """Test that no step is taken when max_iter is 0."""
        full = random_model(4, seed=11)
        h = Horizon(tau=1.0)
        init, _ = tl_bt(full, h, 2)
        report = tl_h2opt(full, h, init, OptimizerConfig(max_iter=0))
        assert report.termination == "max_iter"
        assert report.J_trace == [pytest.approx(cost_only(full, init, h))]
