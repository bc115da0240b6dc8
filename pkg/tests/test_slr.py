import numpy as np
import pytest

from decarbplan.linmodel import BackendOptions, SolveError
from decarbplan.plan import build_planning_model
from decarbplan.slr import SlrConfig, SlrEngine, solve_monolithic, solve_slr

from .conftest import make_grid, make_system, make_thermal

from .test_plan import permissive_policy


@pytest.fixture(scope="module")
def tiny_pm(tiny_system, tiny_cluster):
    return build_planning_model(tiny_system, [tiny_cluster], "v2g")


@pytest.fixture(scope="module")
def tiny_mono(tiny_pm):
    return solve_monolithic(tiny_pm)


class TestMonolithic:
    def test_slacks_pinned_to_zero(self, tiny_pm, tiny_mono):
        x = tiny_mono.x
        for rp, rn in tiny_pm.slack_pairs():
            assert x[rp] == 0.0 and x[rn] == 0.0

    def test_balance_residual_negligible(self, tiny_mono):
        assert tiny_mono.max_residual < 1e-6

    def test_infeasible_raises(self):
        grid = make_grid()
        system = make_system(
            grid=grid, load_base=500.0, load_amp=0.0,
            thermal=(make_thermal("gas1", min_up=1, min_down=1),),
            renewables=(), storage=(), hydro=(),
            policy=permissive_policy(grid.years))
        pm = build_planning_model(system, [], "fixed")
        with pytest.raises(SolveError):
            solve_monolithic(pm)


class TestSurrogate:
    def test_equals_objective_at_feasible_point(self, tiny_pm, tiny_mono):
        engine = SlrEngine(tiny_pm)
        val = engine.surrogate_value(tiny_mono.x)
        assert val == pytest.approx(tiny_mono.objective, rel=1e-6)

    def test_penalty_must_be_positive(self, tiny_pm):
        with pytest.raises(ValueError):
            SlrEngine(tiny_pm, SlrConfig(residual_penalty=0.0))

    def test_every_variable_in_some_block(self, tiny_pm):
        engine = SlrEngine(tiny_pm)
        covered = set()
        for arr in engine.block_vars.values():
            covered.update(int(v) for v in arr)
        assert covered == set(range(tiny_pm.model.num_vars))


class TestMultiplierUpdate:
    def _stub_engine(self, tiny_pm, **cfg):
        engine = SlrEngine(tiny_pm, SlrConfig(**cfg))
        n = engine.num_residuals
        engine.weights = np.ones(n)
        engine.residuals = lambda x: np.full(n, 10.0)
        engine._solve_subset = lambda subset: np.zeros(tiny_pm.model.num_vars)
        return engine

    def test_positive_residual_pushes_multipliers_down(self, tiny_pm):
        engine = self._stub_engine(tiny_pm)
        it = engine.dual_iterate()
        assert it.max_residual == pytest.approx(10.0)
        assert np.all(engine.multipliers < 0)
        np.testing.assert_allclose(engine.multipliers, -it.step * 10.0)

    def test_step_shrinks_with_accepted_updates(self, tiny_pm):
        engine = self._stub_engine(tiny_pm, alpha=0.5)
        s1 = engine.dual_iterate().step
        s2 = engine.dual_iterate().step
        assert 0 < s2 == pytest.approx(0.5 * s1)

    def test_clip_keeps_multipliers_inside_penalty(self, tiny_pm):
        engine = self._stub_engine(tiny_pm, step0=1e9, residual_penalty=100.0)
        engine.dual_iterate()
        np.testing.assert_allclose(engine.multipliers, -90.0)
        assert np.all(np.abs(engine.multipliers)
                      < engine.config.residual_penalty)


class TestDualLoop:
    def test_weak_duality(self, tiny_pm, tiny_mono):
        engine = SlrEngine(tiny_pm, SlrConfig(max_iterations=3))
        engine.run_dual()
        tol = 1e-4 * abs(tiny_mono.objective) + 1e-6
        for it in engine.iterates:
            assert it.dual_value <= tiny_mono.objective + tol

    def test_low_penalty_leaves_residual(self, tiny_pm, tiny_mono):
        # penalty below the marginal generation cost: the relaxed problem
        # prefers slack, residuals persist and multipliers start moving
        engine = SlrEngine(tiny_pm, SlrConfig(residual_penalty=0.01,
                                              max_iterations=3,
                                              tolerance_fraction=0.0))
        for _ in range(3):
            it = engine.dual_iterate()
        assert it.max_residual > engine.tolerance
        assert np.any(engine.multipliers != 0)
        assert it.dual_value <= tiny_mono.objective + 1e-6

    def test_subset_enlargement_when_no_descent(self, tiny_pm):
        # if a partial solve cannot improve the surrogate, the subset must
        # grow until it spans every block
        engine = SlrEngine(tiny_pm, SlrConfig(tolerance_fraction=-1.0,
                                              max_iterations=2))
        n = engine.num_residuals
        engine.weights = np.ones(n)
        engine.residuals = lambda x: np.full(n, 10.0)
        engine._solve_subset = lambda subset: np.zeros(tiny_pm.model.num_vars)
        engine.run_dual()
        assert len(engine.iterates) == 2
        assert engine.iterates[0].subset_size == len(engine.block_keys)
        assert engine.iterates[1].subset_size == len(engine.block_keys)

    def test_write_log(self, tiny_pm, tmp_path):
        import pandas as pd
        engine = SlrEngine(tiny_pm, SlrConfig(max_iterations=1))
        engine.run_dual()
        path = tmp_path / "iterations.csv"
        engine.write_log(path)
        df = pd.read_csv(path)
        assert list(df.columns) == ["k", "dual_value", "max_residual",
                                    "l2_residual", "step", "subset_size",
                                    "seconds"]
        assert len(df) == len(engine.iterates)


class TestRecovery:
    def test_requires_dual_first(self, tiny_pm):
        with pytest.raises(SolveError):
            SlrEngine(tiny_pm).recover_primal()

    def test_recovered_close_to_monolithic(self, tiny_pm, tiny_mono):
        sol = solve_slr(tiny_pm)
        assert sol.mode == "slr"
        assert sol.max_residual <= 1e-6 + SlrEngine(tiny_pm).tolerance
        gap = (sol.objective - tiny_mono.objective) / abs(tiny_mono.objective)
        assert gap <= 0.01
        assert sol.meta["dual_iterations"] >= 1
        assert sol.meta["unfix_rounds"] >= 0

    def test_unfix_path_recovers_from_bad_fixing(self, tiny_pm, tiny_mono):
        engine = SlrEngine(tiny_pm, SlrConfig(max_iterations=1))
        engine.run_dual()
        # poison the incumbent so every stable binary is fixed to an
        # infeasible commitment; recovery must back off and still succeed
        x = engine.x.copy()
        x[engine.binary_idx] = 0.0
        engine.x = x
        engine.binary_history = [np.zeros(len(engine.binary_idx))] * 3
        sol = engine.recover_primal()
        assert sol.meta["unfix_rounds"] >= 1
        gap = (sol.objective - tiny_mono.objective) / abs(tiny_mono.objective)
        assert gap <= 0.01
