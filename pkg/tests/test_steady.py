"""Steady-state solver: exactness, asymptotics, uniqueness, convergence."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nicholson.grid import Grid1D
from nicholson.model import CoefficientSpec, ModelParams, build_coefficients
from nicholson.steady import (
    NewtonConvergenceError,
    NewtonOptions,
    assemble_laplacian,
    solve_steady_state,
    steady_residual,
    write_steady_csv,
)

from conftest import constant_model, figure_model

# Finite-difference residual floor scales like eps/h^2, so fine grids
# cannot hit the default 1e-10 tolerance; see NewtonOptions.
FINE = NewtonOptions(tol=1e-8)


class TestLaplacian:
    def test_row_sums_vanish_exactly(self):
        lap = assemble_laplacian(Grid1D(length=3.0, n_points=47))
        row_sums = lap.toarray().sum(axis=1)
        assert np.all(row_sums == 0.0)

    def test_weighted_symmetry_exact(self):
        grid = Grid1D(length=2.0, n_points=31)
        lap = assemble_laplacian(grid)
        weighted = np.diag(grid.weights) @ lap.toarray()
        assert np.array_equal(weighted, weighted.T)

    def test_neumann_eigenfunction(self):
        # cos(pi x / L) has Laplacian eigenvalue -(pi/L)^2 and zero flux
        grid = Grid1D(length=3.0, n_points=301)
        lap = assemble_laplacian(grid)
        mode = np.cos(np.pi * grid.nodes / grid.length)
        exact = -((np.pi / grid.length) ** 2) * mode
        assert np.abs(lap.apply(mode) - exact).max() < 2e-4

    def test_apply_matches_matrix(self):
        grid = Grid1D(length=1.0, n_points=21)
        lap = assemble_laplacian(grid)
        rng = np.random.default_rng(7)
        v = rng.standard_normal(21)
        assert np.allclose(lap.apply(v), lap.toarray() @ v, atol=1e-12)


class TestConstantCoefficients:
    def test_exact_constant_steady_state(self):
        # with constant p, delta the solution is u = log(p/delta) exactly
        grid = Grid1D(length=3.0, n_points=101)
        model = constant_model(2.5, grid, r=1.0)
        steady = solve_steady_state(model)
        assert np.abs(steady.u - 2.5).max() < 1e-10

    @given(st.floats(min_value=0.2, max_value=5.0),
           st.floats(min_value=0.05, max_value=20.0))
    @settings(max_examples=25, deadline=None)
    def test_exact_for_random_c0_and_r(self, c0, r):
        grid = Grid1D(length=2.0, n_points=41)
        model = constant_model(c0, grid, r=r)
        steady = solve_steady_state(model)
        assert np.abs(steady.u - c0).max() < 1e-8


class TestFigureCases:
    def test_fig1_converges_and_is_positive(self, fig1_model):
        steady = solve_steady_state(fig1_model)
        assert steady.residual_norm < 1e-9
        assert steady.u.min() > 0
        residual = steady_residual(steady.u, fig1_model)
        assert np.abs(residual).max() < 1e-9

    def test_fig2_small_r_approaches_c0(self, fig2_model):
        # u_r -> c0 with an O(r) correction
        steady = solve_steady_state(fig2_model)
        c0 = fig2_model.coeffs.c0
        assert np.abs(steady.u - c0).max() < 1e-3
        coarse = np.abs(steady.u - c0).max()
        finer = solve_steady_state(fig2_model.with_r(1e-4))
        assert np.abs(finer.u - c0).max() < 0.2 * coarse

    def test_uniqueness_from_spread_out_starts(self, fig1_model):
        c0 = fig1_model.coeffs.c0
        n = fig1_model.grid.n_points
        solutions = [
            solve_steady_state(fig1_model, u0=np.full(n, scale * c0)).u
            for scale in (0.5, 1.0, 2.0)
        ]
        assert np.abs(solutions[0] - solutions[1]).max() < 1e-8
        assert np.abs(solutions[0] - solutions[2]).max() < 1e-8


class TestGridConvergence:
    def test_second_order_ratio(self):
        # errors against a fine reference must shrink 4x per halving
        reference_grid = Grid1D(length=3.0, n_points=1201)
        reference = solve_steady_state(
            figure_model("fig2", reference_grid, r=10.0), opts=FINE
        )
        errors = {}
        for n in (151, 301, 601):
            grid = Grid1D(length=3.0, n_points=n)
            steady = solve_steady_state(
                figure_model("fig2", grid, r=10.0), opts=FINE
            )
            stride = 1200 // (n - 1)
            shared = reference.u[::stride]
            errors[n] = np.abs(steady.u - shared).max()
        ratio_1 = errors[151] / errors[301]
        ratio_2 = errors[301] / errors[601]
        assert ratio_1 == pytest.approx(4.0, rel=0.25)
        assert ratio_2 == pytest.approx(4.0, rel=0.25)


class TestErrorPaths:
    def test_rejects_nonpositive_r(self, fig1_model):
        with pytest.raises(ValueError, match="r"):
            solve_steady_state(fig1_model.with_r(0.0))

    def test_rejects_nonpositive_c0(self):
        grid = Grid1D(length=1.0, n_points=21)
        coeffs = build_coefficients(
            CoefficientSpec.constant(1.0), CoefficientSpec.constant(2.0), grid
        )
        model = ModelParams(r=1.0, a=1.0, tau=0.0, grid=grid, coeffs=coeffs)
        with pytest.raises(ValueError, match="c0"):
            solve_steady_state(model)

    def test_iteration_cap_raises(self, fig1_model):
        n = fig1_model.grid.n_points
        with pytest.raises(NewtonConvergenceError) as info:
            solve_steady_state(
                fig1_model,
                opts=NewtonOptions(tol=1e-10, max_iter=1),
                u0=np.full(n, 20.0),
            )
        assert info.value.iterations == 1
        assert info.value.last_residual > 0


class TestPositivityProperty:
    @given(st.floats(min_value=2.2, max_value=40.0),
           st.floats(min_value=0.0, max_value=1.0),
           st.floats(min_value=0.05, max_value=5.0))
    @settings(max_examples=20, deadline=None)
    def test_solution_positive_for_sinusoid_families(self, base, amp, r):
        grid = Grid1D(length=3.0, n_points=101)
        coeffs = build_coefficients(
            CoefficientSpec.sinusoid(base, amp, 1.0, kind="sin"),
            CoefficientSpec.sinusoid(2.0, 1.0, 0.2, kind="cos"),
            grid,
        )
        model = ModelParams(r=r, a=2.5, tau=0.0, grid=grid, coeffs=coeffs)
        if coeffs.c0 <= 0:
            return
        steady = solve_steady_state(model)
        assert steady.u.min() > 0


class TestCsv:
    def test_format_and_determinism(self, tmp_path, fig1_model):
        steady = solve_steady_state(fig1_model)
        path_a = tmp_path / "a.csv"
        path_b = tmp_path / "b.csv"
        write_steady_csv(path_a, fig1_model.grid, steady)
        write_steady_csv(path_b, fig1_model.grid, steady)
        body = path_a.read_text(encoding="utf-8")
        assert body.splitlines()[0] == "x,u"
        assert len(body.splitlines()) == fig1_model.grid.n_points + 1
        assert body == path_b.read_text(encoding="utf-8")
