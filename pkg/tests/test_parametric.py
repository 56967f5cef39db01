import math

import numpy as np
import pytest

from vocab_toolkit.errors import UnderdeterminedError, ValidationError
from vocab_toolkit.parametric import (
    ParametricLoss,
    dloss_dv_at_budget,
    eval_loss,
    fit_params,
    loss_at_budget,
    loss_surface,
    optimal_v_chars,
    optimal_v_flops,
)
from vocab_toolkit.synth import SynthPlan, generate

# Reference prediction table rows: (n_nv, dim, budget, published optimum).
TABLE_ROWS = [
    (3e9, 3200, 1.3e21, 37_000),
    (7e9, 4096, 7.1e21, 60_000),
    (13e9, 5120, 2.4e22, 81_000),
    (30e9, 6048, 1.3e23, 142_000),
    (70e9, 8192, 7.1e23, 218_000),
    (130e9, 12288, 2.4e24, 248_000),
    (300e9, 16384, 1.3e25, 383_000),
]

# Plant whose capacity terms are O(0.1..1) on the desk-scale grid, so
# recovery stays identifiable under noise; the bundled constants put the
# vocabulary term below any noise floor.
CONDITIONED_PLANT = ParametricLoss(
    E=2.0, A1=20.0, A2=5.0, B=30.0, alpha1=0.30, alpha2=0.22, beta=0.30
)


class TestEval:
    def test_asymptote_is_minus_e(self, paper_ploss, paper_fert):
        loss = eval_loss(paper_ploss, 1e14, 1e13, 1e16, paper_fert, embed_dim=16384)
        assert loss == pytest.approx(-paper_ploss.E, abs=1e-3)
        assert loss > -paper_ploss.E

    def test_any_finite_point_above_asymptote(self, paper_ploss, paper_fert):
        for n_nv, d, _, _ in TABLE_ROWS[:3]:
            assert eval_loss(paper_ploss, n_nv, 32000 * d, 1e10, paper_fert, embed_dim=d) > -5.533

    def test_surface_strictly_decreasing_in_each_input(self, paper_ploss):
        base = (302e6, 16384 * 1024.0, 1.2e9)
        ref = loss_surface(paper_ploss, *base)
        assert loss_surface(paper_ploss, base[0] * 2, base[1], base[2]) < ref
        assert loss_surface(paper_ploss, base[0], base[1] * 2, base[2]) < ref
        assert loss_surface(paper_ploss, base[0], base[1], base[2] * 2) < ref

    def test_jointly_decreasing_through_fertility(self, paper_ploss, paper_fert):
        # Scaling capacity and data together always helps, even though the
        # vocabulary term alone is not monotone at fixed characters.
        base = (302e6, 16384 * 1024.0, 4.3e9)
        ref = eval_loss(paper_ploss, *base, paper_fert, embed_dim=1024)
        grown = eval_loss(
            paper_ploss, base[0] * 2, base[1] * 2, base[2] * 2, paper_fert, embed_dim=1024
        )
        assert grown < ref

    def test_validation(self, paper_ploss, paper_fert):
        with pytest.raises(ValidationError):
            eval_loss(paper_ploss, -1, 1e6, 1e9, paper_fert)
        with pytest.raises(ValidationError):
            ParametricLoss(E=-1, A1=1, A2=1, B=1, alpha1=0.4, alpha2=0.6, beta=0.4)


class TestOptimalVFlops:
    @pytest.mark.parametrize("n_nv,d,budget,published", TABLE_ROWS)
    def test_reference_rows_within_15_percent(self, paper_ploss, n_nv, d, budget, published):
        opt = optimal_v_flops(paper_ploss, n_nv, d, budget)
        assert not opt.boundary
        assert opt.vocab_size == pytest.approx(published, rel=0.15)

    def test_derivative_matches_finite_differences(self, paper_ploss):
        # Difference only the vocabulary-dependent terms of the substituted
        # loss; the constant offset cancels analytically and keeping it would
        # only add float cancellation noise to the oracle.
        p, n_nv, d, budget = paper_ploss, 3e9, 3200, 1.3e21

        def v_part(v):
            return p.A2 / (v * d) ** p.alpha2 + p.B * (6 * (n_nv + v * d) / budget) ** p.beta

        for v in np.geomspace(2e3, 1e6, 50):
            got = dloss_dv_at_budget(p, n_nv, d, budget, float(v))
            step = v * 1e-4
            values = [v_part(float(v + k * step)) for k in (-2, -1, 1, 2)]
            fd = (values[0] - 8 * values[1] + 8 * values[2] - values[3]) / (12 * step)
            assert got == pytest.approx(fd, rel=1e-6, abs=1e-30)

    def test_matches_grid_argmin(self, paper_ploss):
        opt = optimal_v_flops(paper_ploss, 3e9, 3200, 1.3e21)
        grid = np.geomspace(1e3, 1e7, 10000)
        losses = [loss_at_budget(paper_ploss, 3e9, 3200, 1.3e21, float(v)) for v in grid]
        best = float(grid[int(np.argmin(losses))])
        assert abs(opt.vocab_size - best) <= 128 + best * 0.001

    def test_monotone_in_budget(self, paper_ploss):
        budgets = np.geomspace(1e20, 1e24, 12)
        optima = [optimal_v_flops(paper_ploss, 3e9, 3200, float(c)).vocab_size for c in budgets]
        assert all(a <= b for a, b in zip(optima, optima[1:]))

    def test_boundary_flag(self, paper_ploss):
        # Budget so large that the data term never catches up inside the
        # search interval: minimum sits at the upper boundary.
        opt = optimal_v_flops(paper_ploss, 1e9, 64, 1e30)
        assert opt.boundary

    def test_rounds_to_128(self, paper_ploss):
        assert optimal_v_flops(paper_ploss, 3e9, 3200, 1.3e21).vocab_size % 128 == 0


class TestOptimalVChars:
    def test_non_decreasing_in_chars(self, paper_ploss, paper_fert):
        optima = [
            optimal_v_chars(paper_ploss, 302e6, 1024, float(h), paper_fert)
            for h in np.geomspace(1e8, 1e13, 12)
        ]
        assert all(a <= b for a, b in zip(optima, optima[1:]))

    def test_reference_scale_direction(self, paper_ploss, paper_fert):
        # Around the 302M reference scale the optimum shrinks with less data
        # and grows with more.
        low = optimal_v_chars(paper_ploss, 302e6, 1024, 4.3e9, paper_fert)
        mid = optimal_v_chars(paper_ploss, 302e6, 1024, 4.3e10, paper_fert)
        high = optimal_v_chars(paper_ploss, 302e6, 1024, 4.3e11, paper_fert)
        assert low < mid < high

    def test_matches_grid_argmin(self, paper_ploss, paper_fert):
        h = 4.3e10
        got = optimal_v_chars(paper_ploss, 302e6, 1024, h, paper_fert)
        grid = np.geomspace(1e3, paper_fert.clamp_v, 10000)
        losses = [
            eval_loss(paper_ploss, 302e6, float(v) * 1024, h, paper_fert, embed_dim=1024)
            for v in grid
        ]
        best = float(grid[int(np.argmin(losses))])
        assert abs(got - best) <= 128 + best * 0.001

    def test_huge_h_stops_at_clamp(self, paper_ploss, paper_fert):
        got = optimal_v_chars(paper_ploss, 302e6, 1024, 1e18, paper_fert)
        assert got == pytest.approx(paper_fert.clamp_v, rel=0.01)

    def test_rounds_to_128(self, paper_ploss, paper_fert):
        assert optimal_v_chars(paper_ploss, 302e6, 1024, 4.3e10, paper_fert) % 128 == 0


class TestFit:
    def test_noiseless_recovery_of_reference_constants(self, paper_ploss, paper_fert):
        plan = SynthPlan(ploss=paper_ploss, fert=paper_fert, noise=0.0, seed=1)
        fit = fit_params(generate(plan), flops_floor=0.0, fert=paper_fert)
        assert fit.alpha1 == pytest.approx(paper_ploss.alpha1, abs=1e-4)
        assert fit.alpha2 == pytest.approx(paper_ploss.alpha2, abs=1e-4)
        assert fit.beta == fit.alpha1
        for name in ("E", "A1", "A2", "B"):
            assert getattr(fit, name) == pytest.approx(getattr(paper_ploss, name), rel=1e-3)

    def test_noisy_recovery_with_conditioned_plant(self, paper_fert):
        plan = SynthPlan(ploss=CONDITIONED_PLANT, fert=paper_fert, noise=0.01, seed=3)
        fit = fit_params(generate(plan), flops_floor=0.0, fert=paper_fert)
        assert fit.alpha1 == pytest.approx(CONDITIONED_PLANT.alpha1, abs=0.02)
        assert fit.alpha2 == pytest.approx(CONDITIONED_PLANT.alpha2, abs=0.02)

    def test_constant_shift_absorbed_by_e(self, paper_fert):
        plan = SynthPlan(ploss=CONDITIONED_PLANT, fert=paper_fert, noise=0.0, seed=5)
        records = generate(plan)
        shift = 0.5
        shifted = [
            type(r)(**{**r.__dict__, "loss_u": r.loss_u + shift, "lm_loss": r.lm_loss + shift})
            for r in records
        ]
        fit = fit_params(shifted, flops_floor=0.0, fert=paper_fert)
        assert fit.E == pytest.approx(CONDITIONED_PLANT.E - shift, rel=1e-3)
        assert fit.alpha1 == pytest.approx(CONDITIONED_PLANT.alpha1, abs=1e-3)
        assert fit.alpha2 == pytest.approx(CONDITIONED_PLANT.alpha2, abs=1e-3)
        assert fit.A2 == pytest.approx(CONDITIONED_PLANT.A2, rel=0.01)

    def test_exponents_within_bounds(self, paper_fert):
        plan = SynthPlan(ploss=CONDITIONED_PLANT, fert=paper_fert, noise=0.05, seed=7)
        fit = fit_params(generate(plan), flops_floor=0.0, fert=paper_fert)
        assert 0.1 < fit.alpha1 < 1.0
        assert 0.1 < fit.alpha2 < 1.0

    def test_flops_floor_filters(self, paper_ploss, paper_fert):
        plan = SynthPlan(ploss=paper_ploss, fert=paper_fert, noise=0.0, seed=1)
        records = generate(plan)
        ceiling = max(r.flops for r in records)
        with pytest.raises(UnderdeterminedError, match="FLOPs floor"):
            fit_params(records, flops_floor=ceiling * 10, fert=paper_fert)

    def test_diversity_errors_name_axis(self, paper_ploss, paper_fert):
        plan = SynthPlan(
            ploss=paper_ploss,
            fert=paper_fert,
            vocab_list=(16384,),
            checkpoints=12,
            noise=0.0,
        )
        with pytest.raises(UnderdeterminedError, match="vocab_size"):
            fit_params(generate(plan), flops_floor=0.0, fert=paper_fert)

    def test_requires_fertility(self, paper_ploss, paper_fert):
        plan = SynthPlan(ploss=paper_ploss, fert=paper_fert, noise=0.0)
        with pytest.raises(ValidationError):
            fit_params(generate(plan), flops_floor=0.0, fert=None)


class TestJson:
    def test_round_trip(self, tmp_path, paper_ploss):
        path = tmp_path / "ploss.json"
        paper_ploss.save(path)
        back = ParametricLoss.load(path)
        assert back == paper_ploss
        import json

        assert set(json.loads(path.read_text())) == {
            "E", "A1", "A2", "B", "alpha1", "alpha2", "beta",
        }
