"""Harness tests: monolithic solver, norms, manufactured solutions,
scenario runner, CSV reports, configuration, and the CLI."""

import numpy as np
import pytest

import rrlab.cli as cli
from rrlab.interface import IterationConfig, run_pr
from rrlab.lab import (ConfigError, CsvReport, ScenarioConfig,
                       default_problem, field_error_norm, glue_fields,
                       global_trace, least_squares_order, mms_exact_nodal,
                       mms_spec, parse_config, references_from_monolithic,
                       restrict_field, run_mms_spatial, run_mms_temporal,
                       run_scenario, setup_problem, solve_monolithic,
                       spec_from_scenario)
from rrlab.mesh import ProblemSpec, build_mesh
from rrlab.subsolve import SpaceTimeField


def small_config(**kw):
    kw.setdefault("scenario", "converge")
    kw.setdefault("nx", 8)
    kw.setdefault("ny", 8)
    kw.setdefault("n_steps", 8)
    kw.setdefault("tol", 1e-9)
    kw.setdefault("max_iter", 100)
    return ScenarioConfig(**kw)


class TestMonolithic:
    def test_zero_source(self):
        spec = ProblemSpec(dimension=2, nx=4, ny=4, interface_x=0.5,
                           source=None, n_steps=4)
        setup = setup_problem(spec)
        assert not solve_monolithic(setup).values.any()

    def test_1d_three_node_hand_case(self):
        # single free dof: u^k = (f + (m/tau) u^{k-1}) / (m/tau + k_stiff)
        spec = ProblemSpec(dimension=1, nx=2, interface_x=0.5,
                           source=lambda x, t: np.ones_like(x),
                           horizon=1.0, n_steps=2)
        setup = setup_problem(spec)
        u = solve_monolithic(setup)
        tau, m, k, f = 0.5, 1.0 / 3.0, 4.0, 0.5
        u1 = f / (m / tau + k)
        u2 = (f + m / tau * u1) / (m / tau + k)
        np.testing.assert_allclose(u.values[1:, 0], [u1, u2], rtol=1e-14)

    def test_residual_diagnostic(self):
        setup = setup_problem(default_problem(nx=4, n_steps=4))
        u = solve_monolithic(setup)
        assert setup.mono.residual(u) < 1e-12
        bumped = u.values.copy()
        bumped[2, 0] += 1.0
        assert setup.mono.residual(SpaceTimeField(bumped, "global")) > 1e-3

    def test_monolithic_matches_converged_transmission(self):
        spec = default_problem(nx=8, n_steps=8)
        setup = setup_problem(spec)
        refs = references_from_monolithic(setup)
        cfg = IterationConfig(s=1.0, tol=1e-12, max_iter=100)
        eta, rep = run_pr(setup.solvers, cfg)
        assert rep.status == "converged"
        for i, (solver, ops, ref) in enumerate(
                [(setup.solver_1, setup.ops_1, refs.u1_ref),
                 (setup.solver_2, setup.ops_2, refs.u2_ref)], start=1):
            u = solver.dirichlet_solve(eta=eta, loads=ops.loads)
            err = field_error_norm(u, ref, ops.M, ops.K, ops.grid.tau)
            assert err <= 10 * cfg.tol


class TestFieldNorms:
    def test_identical_fields(self):
        setup = setup_problem(default_problem(nx=4, n_steps=4))
        u = solve_monolithic(setup)
        g = setup.global_ops
        assert field_error_norm(u, u, g.M, g.K, g.grid.tau) == 0.0

    def test_homogeneity(self):
        setup = setup_problem(default_problem(nx=4, n_steps=4))
        g = setup.global_ops
        u = solve_monolithic(setup)
        zero = SpaceTimeField(np.zeros_like(u.values), "global")
        double = SpaceTimeField(2 * u.values, "global")
        n1 = field_error_norm(u, zero, g.M, g.K, g.grid.tau)
        n2 = field_error_norm(double, zero, g.M, g.K, g.grid.tau)
        assert n2 == pytest.approx(2 * n1, rel=1e-13)

    def test_matches_direct_summation(self):
        setup = setup_problem(default_problem(nx=4, n_steps=4))
        g = setup.global_ops
        rng = np.random.default_rng(0)
        vals = rng.standard_normal((5, g.n_dofs))
        vals[0] = 0.0
        u = SpaceTimeField(vals, "global")
        zero = SpaceTimeField(np.zeros_like(vals), "global")
        MK = (g.M + g.K).toarray()
        direct = np.sqrt(sum(g.grid.tau * v @ MK @ v for v in vals[1:]))
        assert field_error_norm(u, zero, g.M, g.K, g.grid.tau) == \
            pytest.approx(direct, rel=1e-13)


class TestGluing:
    def test_restrict_glue_roundtrip_exact(self):
        setup = setup_problem(default_problem(nx=8, n_steps=4))
        u = solve_monolithic(setup)
        u1 = restrict_field(u, setup.dec, 1)
        u2 = restrict_field(u, setup.dec, 2)
        reglued = glue_fields(u1, u2, setup.dec)
        np.testing.assert_array_equal(reglued.values, u.values)

    def test_global_trace_matches_restrictions(self):
        setup = setup_problem(default_problem(nx=8, n_steps=4))
        u = solve_monolithic(setup)
        eta = global_trace(u, setup.dec)
        u1 = restrict_field(u, setup.dec, 1)
        np.testing.assert_array_equal(
            eta.values, u1.values[1:, setup.dec.interior_1.size:])


class TestManufacturedSolutions:
    def test_exact_solution_vanishes_at_boundary_and_start(self):
        spec = mms_spec(2, 8, 8, 1.0)
        mesh = build_mesh(spec)
        all_nodes = np.arange(mesh.n_nodes)
        vals = mms_exact_nodal(mesh, all_nodes, np.array([0.0, 0.5]), 2)
        assert not vals[0].any()
        np.testing.assert_allclose(vals[1][mesh.boundary], 0.0, atol=1e-14)

    def test_spatial_errors_decrease_quadratically(self):
        rows = run_mms_spatial(1.0, levels=(4, 8, 16))
        errs = [r.l2_error for r in rows]
        assert errs[0] > errs[1] > errs[2]
        order = least_squares_order([r.h for r in rows], errs)
        assert order == pytest.approx(2.0, abs=0.2)

    def test_temporal_self_convergence_first_order(self):
        rows = run_mms_temporal(1.0, steps=(4, 8, 16), nx=8)
        order = least_squares_order([r.tau for r in rows],
                                    [r.l2_error for r in rows])
        assert order == pytest.approx(1.0, abs=0.2)


class TestConfigParsing:
    def test_parse_with_comments_and_lists(self):
        text = """
        # a comment
        scenario = spectrum
        nx = 8            # trailing comment
        s_values = 0.5, 2.0
        theta = 0.5
        """
        cfg = parse_config(text)
        assert cfg.scenario == "spectrum"
        assert cfg.nx == 8
        assert cfg.s_values == (0.5, 2.0)
        assert cfg.theta == 0.5

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config("scenario = converge\nnz = 4\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("scenario = converge\nnx = eight\n")

    def test_unknown_scenario_rejected(self):
        with pytest.raises(ConfigError, match="unknown scenario"):
            parse_config("scenario = warp\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigError, match="key=value"):
            parse_config("scenario converge\n")

    def test_echo_is_reparseable(self):
        cfg = small_config(s=0.3, s_values=(0.25, 4.0))
        text = "\n".join(f"{k} = {v}" for k, v in cfg.echo().items())
        assert parse_config(text) == cfg

    def test_spec_from_scenario_piecewise_alpha(self):
        from rrlab.assembly import element_diffusion
        cfg = small_config(alpha_left=2.0, alpha_right=5.0)
        spec = spec_from_scenario(cfg)
        mesh = build_mesh(spec)
        alpha = element_diffusion(spec, mesh)
        assert set(np.unique(alpha)) == {2.0, 5.0}


class TestCsvReport:
    def test_render_format(self):
        rep = CsvReport(["a", "b"], [[1.0, 1.0 / 3.0]], {"scenario": "x"})
        text = rep.render()
        lines = text.strip().split("\n")
        assert lines[0].startswith("# rrlab ")
        assert lines[1].startswith("# timestamp = ")
        assert "# scenario = x" in lines
        assert lines[-2] == "a,b"
        assert lines[-1] == "1,0.33333333333333331"

    def test_rectangular_enforced(self):
        rep = CsvReport(["a", "b"], [[1.0]], {})
        with pytest.raises(ValueError, match="rectangular"):
            rep.render()

    def test_determinism_modulo_timestamp(self):
        cfg = small_config(scenario="equivalence", iterations=3)
        r1 = run_scenario(cfg).report.render()
        r2 = run_scenario(cfg).report.render()
        strip = lambda s: [l for l in s.split("\n") if not l.startswith("# timestamp")]
        assert strip(r1) == strip(r2)


class TestScenarios:
    def test_converge_scenario(self):
        result = run_scenario(small_config())
        assert result.violation is None
        rep = result.report
        assert rep.columns == ["n", "delta_eta_H", "err_X1", "err_X2",
                               "gap1", "gap2", "sp_residual"]
        ns = [row[0] for row in rep.rows]
        assert ns == list(range(1, len(ns) + 1))
        assert rep.rows[-1][1] <= 1e-9            # converged increment
        assert rep.metadata["scenario"] == "converge"

    def test_converge_scenario_default_desk_problem(self):
        # the unmodified default configuration reaches "converged"
        result = run_scenario(ScenarioConfig())
        assert result.violation is None
        assert result.report.rows[-1][1] <= 1e-10

    def test_converge_scenario_violation_on_max_iter(self):
        result = run_scenario(small_config(max_iter=2, tol=1e-14))
        assert result.violation is not None
        assert "max_iter" in result.violation

    def test_converge_scenario_rr_pde_variant_matches(self):
        pr = run_scenario(small_config()).report
        rr = run_scenario(small_config(variant="rr_pde")).report
        assert len(pr.rows) == len(rr.rows)
        for a, b in zip(pr.rows, rr.rows):
            # same iterates up to roundoff, hence near-identical diagnostics
            assert a[2] == pytest.approx(b[2], rel=1e-8, abs=1e-13)
            assert a[3] == pytest.approx(b[3], rel=1e-8, abs=1e-13)

    def test_unknown_variant_rejected(self):
        with pytest.raises(ConfigError, match="variant"):
            small_config(variant="jacobi")

    def test_equivalence_scenario(self):
        result = run_scenario(small_config(scenario="equivalence",
                                           iterations=5))
        rep = result.report
        assert rep.columns == ["n", "max_rel_discrepancy"]
        assert len(rep.rows) == 5
        assert max(row[1] for row in rep.rows) <= 1e-10

    def test_spectrum_scenario(self):
        result = run_scenario(small_config(scenario="spectrum",
                                           n_steps=4, s_values=(0.5, 1.0)))
        rep = result.report
        assert rep.columns[:2] == ["s", "rho"]
        assert len(rep.rows) == 2
        for row in rep.rows:
            assert 0 < row[1] < 1          # contraction
            assert min(row[2:5]) > 0       # bijectivity indicators

    def test_coercivity_scenario_deterministic(self):
        cfg = small_config(scenario="coercivity", samples=5, nx=4, n_steps=4)
        r1 = run_scenario(cfg).report
        r2 = run_scenario(cfg).report
        assert r1.rows == r2.rows
        assert all(row[1] > 0 for row in r1.rows)
        assert r1.rows[-1][2] == min(row[1] for row in r1.rows)

    def test_mms_scenario_columns(self):
        cfg = small_config(scenario="mms", mesh_levels=(4, 8))
        rep = run_scenario(cfg).report
        assert rep.columns == ["h", "tau", "l2_error", "x_error",
                               "observed_order"]
        assert len(rep.rows) == 2 + 3      # spatial levels + temporal levels

    def test_seed_override_recorded(self):
        result = run_scenario(small_config(scenario="equivalence",
                                           iterations=2), seed=42)
        assert result.report.metadata["seed"] == "42"


class TestCli:
    def write_config(self, tmp_path, text):
        p = tmp_path / "scenario.cfg"
        p.write_text(text)
        return str(p)

    def test_run_writes_report(self, tmp_path):
        cfg = self.write_config(
            tmp_path,
            "scenario = equivalence\nnx = 8\nny = 8\nn_steps = 4\n"
            "iterations = 3\n")
        out = tmp_path / "out"
        code = cli.main(["run", cfg, "--out", str(out)])
        assert code == 0
        text = (out / "equivalence.csv").read_text()
        assert "n,max_rel_discrepancy" in text
        assert "# seed = 0" in text

    def test_run_invalid_config_exits_2_no_file(self, tmp_path):
        cfg = self.write_config(tmp_path, "scenario = warp\n")
        out = tmp_path / "out"
        assert cli.main(["run", cfg, "--out", str(out)]) == 2
        assert not (out / "warp.csv").exists()

    def test_run_missing_file_exits_2(self, tmp_path):
        assert cli.main(["run", str(tmp_path / "nope.cfg")]) == 2

    def test_run_threshold_violation_exits_4(self, tmp_path):
        cfg = self.write_config(
            tmp_path,
            "scenario = converge\nnx = 8\nny = 8\nn_steps = 4\n"
            "tol = 1e-14\nmax_iter = 2\n")
        out = tmp_path / "out"
        assert cli.main(["run", cfg, "--out", str(out)]) == 4
        assert (out / "converge.csv").exists()   # data still written

    def test_run_seed_override(self, tmp_path):
        cfg = self.write_config(
            tmp_path, "scenario = coercivity\nnx = 4\nny = 4\n"
                      "n_steps = 4\nsamples = 2\n")
        out = tmp_path / "out"
        assert cli.main(["run", cfg, "--out", str(out), "--seed", "7"]) == 0
        assert "# seed = 7" in (out / "coercivity.csv").read_text()

    def test_check_wiring(self, monkeypatch):
        import rrlab.acceptance
        monkeypatch.setattr(rrlab.acceptance, "run_acceptance", lambda: 0)
        assert cli.main(["check"]) == 0
