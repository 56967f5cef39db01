import math
import random

import numpy as np
import pytest

from vocab_toolkit.derivative import (
    DEFAULT_GAMMA_LADDER,
    derivative_ladder_pairs,
    dflops_dv,
    fit_gamma,
    predict_nv,
    solve_v_root,
)
from vocab_toolkit.errors import SolverError, ValidationError
from vocab_toolkit.records import flops_cost


def fd_derivative(n_nv, v, d, h, fert, step=1e-4):
    """Five-point central difference of the cost in v (O(step^4) accurate)."""
    hstep = v * step
    values = [flops_cost(n_nv, v + k * hstep, d, h, fert) for k in (-2, -1, 1, 2)]
    return (values[0] - 8 * values[1] + 8 * values[2] - values[3]) / (12 * hstep)


class TestDerivative:
    def test_matches_finite_differences(self, paper_fert):
        rng = random.Random(5)
        for _ in range(200):
            n_nv = math.exp(rng.uniform(math.log(30e6), math.log(5e9)))
            d = rng.choice([512, 768, 1024, 2048, 3200])
            h = math.exp(rng.uniform(math.log(1e8), math.log(1e12)))
            v = math.exp(rng.uniform(math.log(2e3), math.log(1.5e5)))
            got = dflops_dv(n_nv, v, d, h, paper_fert)
            assert not got.clamped
            expected = fd_derivative(n_nv, v, d, h, paper_fert)
            scale = 6.0 * h * d  # magnitude of one additive term
            assert got.value == pytest.approx(expected, rel=1e-6, abs=1e-9 * scale)

    def test_balancing_terms_near_root(self, paper_fert):
        # At v near 1e4 for a 33M/512 shape the two terms nearly cancel.
        got = dflops_dv(33e6, 10000, 512, 1e9, paper_fert)
        assert abs(got.value) < 0.05 * 6e9 * eval_f(10000, paper_fert) * 512

    def test_clamped_region_reports_flag(self, paper_fert):
        got = dflops_dv(33e6, 250000, 512, 1e9, paper_fert)
        assert got.clamped
        assert got.value == pytest.approx(6 * 1e9 * eval_f(200000, paper_fert) * 512, rel=1e-12)
        assert got.value > 0

    def test_stationary_point_of_fertility(self, paper_fert):
        # The quadratic's turning point lies above the clamp for this fit,
        # so the derivative there is the flat-region value 6h*f*d > 0.
        v_star = paper_fert.argmin_v
        got = dflops_dv(33e6, v_star, 512, 1e9, paper_fert)
        assert got.clamped
        assert got.value > 0


def eval_f(v, fert):
    from vocab_toolkit.fertility import eval_fertility

    return eval_fertility(v, fert)


class TestRoot:
    def test_small_model(self, paper_fert):
        root = solve_v_root(33e6, 512, paper_fert)
        assert not root.boundary
        assert root.vocab_size == pytest.approx(1.0e4, rel=0.05)

    def test_3b_model(self, paper_fert):
        root = solve_v_root(3e9, 3200, paper_fert)
        assert not root.boundary
        assert root.vocab_size == pytest.approx(6.6e4, rel=0.05)

    @pytest.mark.parametrize("n_nv,d", [(33e6, 512), (3e9, 3200)])
    def test_matches_grid_argmin(self, paper_fert, n_nv, d):
        root = solve_v_root(n_nv, d, paper_fert)
        grid = np.geomspace(2000, 200000, 10000)
        costs = [flops_cost(n_nv, float(v), d, 1e9, paper_fert) for v in grid]
        best = float(grid[int(np.argmin(costs))])
        step = grid[1] / grid[0]
        assert abs(math.log(root.vocab_size / best)) <= math.log(step)

    def test_independent_of_h(self, paper_fert):
        # H cancels: the minimizing v is the same across three decades.
        root = solve_v_root(302e6, 1024, paper_fert)
        for h in (1e8, 1e10, 1e12):
            grid = np.geomspace(2000, 200000, 2000)
            costs = [flops_cost(302e6, float(v), 1024, h, paper_fert) for v in grid]
            best = float(grid[int(np.argmin(costs))])
            assert best == pytest.approx(root.vocab_size, rel=2e-3)

    def test_boundary_flag_when_no_crossing(self, paper_fert):
        # An enormous model with a tiny width keeps the cost falling in v
        # all the way to the clamp.
        root = solve_v_root(1e13, 1.0, paper_fert)
        assert root.boundary
        assert root.vocab_size == paper_fert.clamp_v


class TestGamma:
    def test_two_point_exact(self):
        fit = fit_gamma([(1e6, 1e3), (4e6, 2e3)])
        assert fit.gamma == pytest.approx(0.5, abs=1e-9)
        assert fit.anchor_n_nv == 1e6
        assert fit.anchor_n_v == 1e3

    def test_duplicated_pairs_leave_gamma_unchanged(self):
        pairs = [(1e6, 1e3), (4e6, 2e3), (9e6, 3e3)]
        fit = fit_gamma(pairs)
        fit_dup = fit_gamma(pairs + pairs[1:])
        assert fit_dup.gamma == pytest.approx(fit.gamma, abs=1e-6)

    def test_all_anchor_pairs_rejected(self):
        with pytest.raises(ValidationError, match="undefined|anchor"):
            fit_gamma([(1e6, 1e3), (1e6, 1e3)])

    def test_ladder_gamma_in_reference_band(self, paper_fert):
        pairs = derivative_ladder_pairs(paper_fert)
        assert [n for n, _ in pairs] == list(DEFAULT_GAMMA_LADDER)
        fit = fit_gamma(pairs)
        assert 0.82 <= fit.gamma <= 0.84


class TestPredict:
    def test_anchor_identity(self, derived_gamma):
        n_v, _ = predict_nv(derived_gamma, derived_gamma.anchor_n_nv)
        assert n_v == pytest.approx(derived_gamma.anchor_n_v, rel=1e-12)

    def test_3b_reference(self, derived_gamma):
        _, vocab = predict_nv(derived_gamma, 3e9, embed_dim=3200)
        assert vocab == pytest.approx(43000, rel=0.01)

    def test_70b_reference(self, derived_gamma):
        _, vocab = predict_nv(derived_gamma, 70e9, embed_dim=8192)
        assert vocab == pytest.approx(231000, rel=0.02)

    def test_power_law_exactness(self, derived_gamma):
        base, _ = predict_nv(derived_gamma, 1e9)
        scaled, _ = predict_nv(derived_gamma, 3.7e9)
        assert scaled / base == pytest.approx(3.7**derived_gamma.gamma, rel=1e-12)

    def test_monotone_and_ratio_decreasing(self, derived_gamma):
        sizes = np.geomspace(50e6, 500e9, 40)
        n_vs = [predict_nv(derived_gamma, float(n))[0] for n in sizes]
        assert all(a < b for a, b in zip(n_vs, n_vs[1:]))
        ratios = [nv / n for nv, n in zip(n_vs, sizes)]
        assert all(a > b for a, b in zip(ratios, ratios[1:]))

    def test_vocab_is_multiple_of_128(self, derived_gamma):
        _, vocab = predict_nv(derived_gamma, 13e9)
        assert vocab % 128 == 0
