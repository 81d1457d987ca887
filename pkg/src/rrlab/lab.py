"""Experiment harness: reference solves, manufactured solutions,
scenario runner, and CSV reporting.

Scenarios are configured by flat ``key=value`` text files ('#' starts a
comment).  Every report echoes its full configuration, the seed, and a
version string, so a run can be reproduced from its output file alone.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import __version__
from .assembly import (GlobalOperators, build_global_operators,
                       build_subdomain_operators)
from .interface import (IterationConfig, PRReferences, SteklovOperator,
                        assemble_dense, run_equivalence, run_iteration,
                        spectral_analysis)
from .mesh import Decomposition, Mesh, ProblemSpec, build_mesh, decompose
from .subsolve import (InterfaceSignal, MonolithicSolver, SpaceTimeField,
                       SubdomainSolver)

__all__ = [
    "ConfigError", "ThresholdViolation", "LabSetup", "setup_problem",
    "default_problem", "solve_monolithic", "restrict_field", "glue_fields",
    "global_trace", "references_from_monolithic", "field_error_norm",
    "space_time_l2_norm", "mms_spec", "mms_exact_nodal", "run_mms_spatial",
    "run_mms_temporal", "least_squares_order", "ScenarioConfig",
    "parse_config", "run_scenario", "ScenarioResult", "CsvReport",
]


class ConfigError(ValueError):
    """A scenario configuration could not be understood."""


class ThresholdViolation(RuntimeError):
    """A scenario-level acceptance threshold was violated."""


# ---------------------------------------------------------------------------
# Problem setup bundles
# ---------------------------------------------------------------------------

@dataclass
class LabSetup:
    """Everything needed to run iterations on one problem."""

    spec: ProblemSpec
    mesh: Mesh
    dec: Decomposition
    ops_1: object
    ops_2: object
    global_ops: GlobalOperators
    solver_1: SubdomainSolver
    solver_2: SubdomainSolver
    mono: MonolithicSolver

    @property
    def solvers(self):
        return (self.solver_1, self.solver_2)


def setup_problem(spec: ProblemSpec) -> LabSetup:
    """Assemble mesh, decomposition, and all solvers for a spec."""
    mesh = build_mesh(spec)
    dec = decompose(mesh, spec)
    ops_1 = build_subdomain_operators(spec, mesh, dec, 1)
    ops_2 = build_subdomain_operators(spec, mesh, dec, 2)
    global_ops = build_global_operators(spec, mesh, dec)
    return LabSetup(spec, mesh, dec, ops_1, ops_2, global_ops,
                    SubdomainSolver(ops_1), SubdomainSolver(ops_2),
                    MonolithicSolver(global_ops))


def default_problem(nx: int = 16, n_steps: int = 16,
                    theta: float = 1.0) -> ProblemSpec:
    """The desk-scale default: unit square split at x = 1/2 with a
    diffusion jump (1 left, 3 right) and a unit source."""
    return ProblemSpec(
        dimension=2, nx=nx, ny=nx, length_x=1.0, length_y=1.0,
        interface_x=0.5,
        diffusion=lambda x, y: np.where(x < 0.5, 1.0, 3.0),
        source=lambda x, y, t: np.ones_like(x),
        horizon=1.0, n_steps=n_steps, theta=theta)


def solve_monolithic(setup: LabSetup) -> SpaceTimeField:
    """theta-scheme solve on the undecomposed mesh."""
    return setup.mono.solve()


# ---------------------------------------------------------------------------
# Restriction, gluing, and norms
# ---------------------------------------------------------------------------

def restrict_field(u: SpaceTimeField, dec: Decomposition, i: int) -> SpaceTimeField:
    """Restrict a monolithic field to subdomain i dof ordering."""
    return SpaceTimeField(dec.restrict(i, u.values), f"omega{i}")


def glue_fields(u1: SpaceTimeField, u2: SpaceTimeField,
                dec: Decomposition) -> SpaceTimeField:
    """Glue two subdomain fields into a monolithic field.

    Interface values are averaged; for a converged transmission pair the
    two traces agree to solver tolerance, so the average is harmless.
    """
    free = dec.free
    out = np.zeros((u1.values.shape[0], free.size))
    pos1 = np.searchsorted(free, dec.interior_1)
    pos2 = np.searchsorted(free, dec.interior_2)
    posg = np.searchsorted(free, dec.interface)
    n1 = dec.interior_1.size
    n2 = dec.interior_2.size
    out[:, pos1] = u1.values[:, :n1]
    out[:, pos2] = u2.values[:, :n2]
    out[:, posg] = 0.5 * (u1.values[:, n1:] + u2.values[:, n2:])
    return SpaceTimeField(out, "global")


def global_trace(u: SpaceTimeField, dec: Decomposition) -> InterfaceSignal:
    """Interface trace of a monolithic field."""
    pos = np.searchsorted(dec.free, dec.interface)
    return InterfaceSignal(u.values[1:, pos].copy(), "primal")


def references_from_monolithic(setup: LabSetup) -> PRReferences:
    u_ref = solve_monolithic(setup)
    return PRReferences(
        eta_ref=global_trace(u_ref, setup.dec),
        u1_ref=restrict_field(u_ref, setup.dec, 1),
        u2_ref=restrict_field(u_ref, setup.dec, 2))


def field_error_norm(u: SpaceTimeField, u_ref: SpaceTimeField,
                     M, K, tau: float) -> float:
    """L2-in-time, H1-in-space norm of the difference of two fields."""
    if u.values.shape != u_ref.values.shape:
        raise ValueError("fields have mismatched shapes")
    d = u.values[1:] - u_ref.values[1:]
    total = np.sum(d * ((M + K) @ d.T).T)
    return float(np.sqrt(max(tau * total, 0.0)))


def space_time_l2_norm(values: np.ndarray, M, tau: float) -> float:
    """Discrete L2(space-time) norm of step values (steps 1..n)."""
    total = np.sum(values * (M @ values.T).T)
    return float(np.sqrt(max(tau * total, 0.0)))


# ---------------------------------------------------------------------------
# Manufactured solutions
# ---------------------------------------------------------------------------

def mms_spec(dimension: int, nx: int, n_steps: int, theta: float,
             alpha: float = 1.0) -> ProblemSpec:
    """Problem whose exact solution is a product of sines in space and
    (1 - exp(-t)) in time; zero initial and boundary values hold by
    construction.  Constant diffusion keeps the source regular."""
    pi = np.pi
    if dimension == 1:
        lap = alpha * pi ** 2

        def source(x, t):
            return np.sin(pi * x) * (np.exp(-t) + lap * (1.0 - np.exp(-t)))
    else:
        lap = alpha * 2.0 * pi ** 2

        def source(x, y, t):
            return (np.sin(pi * x) * np.sin(pi * y)
                    * (np.exp(-t) + lap * (1.0 - np.exp(-t))))
    return ProblemSpec(
        dimension=dimension, nx=nx, ny=nx if dimension == 2 else 0,
        interface_x=0.5, diffusion=alpha, source=source,
        horizon=1.0, n_steps=n_steps, theta=theta)


def mms_exact_nodal(mesh: Mesh, dof_nodes: np.ndarray, times: np.ndarray,
                    dimension: int) -> np.ndarray:
    """Exact manufactured solution sampled at nodes and times."""
    pi = np.pi
    coords = mesh.nodes[dof_nodes]
    if dimension == 1:
        shape = np.sin(pi * coords[:, 0])
    else:
        shape = np.sin(pi * coords[:, 0]) * np.sin(pi * coords[:, 1])
    return (1.0 - np.exp(-times))[:, None] * shape[None, :]


@dataclass(frozen=True)
class MmsRow:
    h: float
    tau: float
    l2_error: float
    x_error: float
    order: float      # pairwise observed order, nan on the first row


def _mms_errors(spec: ProblemSpec):
    mesh = build_mesh(spec)
    dec = decompose(mesh, spec)
    ops = build_global_operators(spec, mesh, dec)
    u = MonolithicSolver(ops).solve()
    times = np.arange(1, spec.n_steps + 1) * spec.tau
    exact = mms_exact_nodal(mesh, ops.dof_nodes, times, spec.dimension)
    e = u.values[1:] - exact
    l2 = space_time_l2_norm(e, ops.M, spec.tau)
    x = np.sqrt(space_time_l2_norm(e, ops.M, spec.tau) ** 2
                + space_time_l2_norm(e, ops.K, spec.tau) ** 2)
    return l2, float(x)


def run_mms_spatial(theta: float, levels=(4, 8, 16),
                    dimension: int = 2) -> list[MmsRow]:
    """Spatial refinement study against the exact solution.

    The time step is tied to the mesh (tau ~ h^2 for theta = 1,
    tau ~ h for theta = 1/2) so the temporal error refines at least as
    fast as the spatial one.
    """
    rows = []
    prev = None
    for nx in levels:
        n_steps = max(4, nx * nx // 4) if theta == 1.0 else max(4, nx)
        spec = mms_spec(dimension, nx, n_steps, theta)
        l2, x = _mms_errors(spec)
        h = spec.length_x / nx
        order = np.nan
        if prev is not None:
            order = float(np.log(prev[1] / l2) / np.log(prev[0] / h))
        rows.append(MmsRow(h, spec.tau, l2, x, order))
        prev = (h, l2)
    return rows


def run_mms_temporal(theta: float, steps=(4, 8, 16), ref_factor: int = 8,
                     nx: int = 16, dimension: int = 2) -> list[MmsRow]:
    """Temporal self-convergence study on a fixed mesh.

    Each step count is compared against a fine-step reference on the
    same mesh, which removes the spatial error floor and exposes the
    pure temporal order of the theta scheme.
    """
    ref_steps = max(steps) * ref_factor
    spec_ref = mms_spec(dimension, nx, ref_steps, theta)
    mesh = build_mesh(spec_ref)
    dec = decompose(mesh, spec_ref)
    ops_ref = build_global_operators(spec_ref, mesh, dec)
    u_ref = MonolithicSolver(ops_ref).solve()

    rows = []
    prev = None
    for n_steps in steps:
        spec = mms_spec(dimension, nx, n_steps, theta)
        ops = build_global_operators(spec, mesh, dec)
        u = MonolithicSolver(ops).solve()
        stride = ref_steps // n_steps
        e = u.values[1:] - u_ref.values[stride::stride]
        l2 = space_time_l2_norm(e, ops.M, spec.tau)
        x = np.sqrt(l2 ** 2 + space_time_l2_norm(e, ops.K, spec.tau) ** 2)
        order = np.nan
        if prev is not None:
            order = float(np.log(prev[1] / l2) / np.log(prev[0] / spec.tau))
        rows.append(MmsRow(spec.length_x / nx, spec.tau, l2, float(x), order))
        prev = (spec.tau, l2)
    return rows


def least_squares_order(scales, errors) -> float:
    """Convergence order as the least-squares slope of log(err)."""
    return float(np.polyfit(np.log(scales), np.log(errors), 1)[0])


# ---------------------------------------------------------------------------
# Scenario configuration
# ---------------------------------------------------------------------------

_SCENARIOS = ("converge", "equivalence", "spectrum", "coercivity", "mms")


@dataclass
class ScenarioConfig:
    """Flat configuration of one scenario run."""

    scenario: str = "converge"
    dimension: int = 2
    nx: int = 16
    ny: int = 16
    length_x: float = 1.0
    length_y: float = 1.0
    interface_x: float = 0.5
    alpha_left: float = 1.0
    alpha_right: float = 3.0
    horizon: float = 1.0
    n_steps: int = 16
    theta: float = 1.0
    source: str = "constant"
    source_scale: float = 1.0
    s: float = 1.0
    tol: float = 1e-10
    max_iter: int = 200
    variant: str = "pr_interface"
    iterations: int = 50
    s_values: tuple = (0.1, 1.0, 10.0)
    mesh_levels: tuple = (4, 8, 16)
    samples: int = 50
    phi: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in _SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; "
                              f"choose one of {_SCENARIOS}")
        if self.variant not in ("pr_interface", "rr_pde"):
            raise ConfigError(f"unknown variant {self.variant!r}")
        if not self.s_values or not self.mesh_levels:
            raise ConfigError("sweep lists must be nonempty")

    def echo(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                out[f.name] = ",".join(_fmt(x) for x in v)
            else:
                out[f.name] = _fmt(v)
        return out


_INT_KEYS = {"dimension", "nx", "ny", "n_steps", "max_iter", "iterations",
             "samples", "seed"}
_FLOAT_KEYS = {"length_x", "length_y", "interface_x", "alpha_left",
               "alpha_right", "horizon", "theta", "source_scale", "s",
               "tol", "phi"}
_LIST_FLOAT_KEYS = {"s_values"}
_LIST_INT_KEYS = {"mesh_levels"}
_STR_KEYS = {"scenario", "source", "variant"}


def parse_config(text: str) -> ScenarioConfig:
    """Parse flat key=value configuration text."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        try:
            if key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _LIST_FLOAT_KEYS:
                values[key] = tuple(float(x) for x in val.split(",") if x.strip())
            elif key in _LIST_INT_KEYS:
                values[key] = tuple(int(x) for x in val.split(",") if x.strip())
            elif key in _STR_KEYS:
                values[key] = val
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    try:
        return ScenarioConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def spec_from_scenario(cfg: ScenarioConfig) -> ProblemSpec:
    """Build the ProblemSpec described by a scenario configuration."""
    a_left, a_right = cfg.alpha_left, cfg.alpha_right
    gx = cfg.interface_x

    if cfg.dimension == 1:
        def diffusion(x):
            return np.where(x < gx, a_left, a_right)
    else:
        def diffusion(x, y):
            return np.where(x < gx, a_left, a_right)

    if cfg.source == "zero":
        source = None
    elif cfg.source == "constant":
        scale = cfg.source_scale
        if cfg.dimension == 1:
            def source(x, t):
                return np.full_like(x, scale)
        else:
            def source(x, y, t):
                return np.full_like(x, scale)
    else:
        raise ConfigError(f"unknown source {cfg.source!r}")

    try:
        return ProblemSpec(
            dimension=cfg.dimension, nx=cfg.nx, ny=cfg.ny,
            length_x=cfg.length_x, length_y=cfg.length_y,
            interface_x=gx, diffusion=diffusion, source=source,
            horizon=cfg.horizon, n_steps=cfg.n_steps, theta=cfg.theta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# CSV reports
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


@dataclass
class CsvReport:
    """Rectangular numeric report with metadata comment lines."""

    columns: list
    rows: list
    metadata: dict = field(default_factory=dict)

    def render(self) -> str:
        lines = [f"# rrlab {__version__}"]
        lines.append(f"# timestamp = {datetime.datetime.now().isoformat()}")
        for k, v in self.metadata.items():
            lines.append(f"# {k} = {v}")
        lines.append(",".join(self.columns))
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("report rows must be rectangular")
            lines.append(",".join(_fmt(float(x)) for x in row))
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())


@dataclass
class ScenarioResult:
    report: CsvReport
    violation: str | None = None


# ---------------------------------------------------------------------------
# Scenario runner
# ---------------------------------------------------------------------------

def run_scenario(cfg: ScenarioConfig, seed: int | None = None) -> ScenarioResult:
    """Run one scenario and build its CSV report.

    Raises ConfigError for invalid configurations; solver failures
    propagate.  A non-converged converge run is reported with a
    violation message (the CLI turns it into exit code 4).
    """
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    meta = cfg.echo()
    runner = {
        "converge": _run_converge,
        "equivalence": _run_equivalence_scenario,
        "spectrum": _run_spectrum,
        "coercivity": _run_coercivity,
        "mms": _run_mms,
    }[cfg.scenario]
    columns, rows, violation = runner(cfg)
    return ScenarioResult(CsvReport(columns, rows, meta), violation)


def _run_converge(cfg):
    setup = setup_problem(spec_from_scenario(cfg))
    refs = references_from_monolithic(setup)
    it = IterationConfig(s=cfg.s, tol=cfg.tol, max_iter=cfg.max_iter,
                         variant=cfg.variant)
    eta, report = run_iteration(setup.solvers, it, references=refs)
    rows = [
        [n + 1, report.increments[n], report.errors_1[n], report.errors_2[n],
         report.gaps_1[n], report.gaps_2[n], report.residuals[n]]
        for n in range(report.n_iterations)
    ]
    violation = None
    if report.status != "converged":
        violation = (f"iteration finished with status {report.status!r} "
                     f"after {report.n_iterations} iterations")
    cols = ["n", "delta_eta_H", "err_X1", "err_X2", "gap1", "gap2",
            "sp_residual"]
    return cols, rows, violation


def _run_equivalence_scenario(cfg):
    setup = setup_problem(spec_from_scenario(cfg))
    disc = run_equivalence(setup.solvers, cfg.s, cfg.iterations)
    rows = [[n + 1, d] for n, d in enumerate(disc)]
    return ["n", "max_rel_discrepancy"], rows, None


def _run_spectrum(cfg):
    setup = setup_problem(spec_from_scenario(cfg))
    ops = setup.ops_1
    n_steps, n_g = ops.grid.n_steps, ops.n_interface
    S1 = assemble_dense(SteklovOperator(setup.solver_1).apply, n_steps, n_g)
    S2 = assemble_dense(SteklovOperator(setup.solver_2).apply, n_steps, n_g)
    rows_out = []
    for r in spectral_analysis(S1, S2, ops.M_gamma, ops.grid.tau, cfg.s_values):
        rows_out.append([r.s, r.rho, r.sv_min_sJ_S1, r.sv_min_sJ_S2,
                         r.sv_min_S1_S2, r.eig_min_sym_S1, r.eig_min_sym_S2])
    cols = ["s", "rho", "sv_min_sJS1", "sv_min_sJS2", "sv_min_S1S2",
            "eig_min_symS1", "eig_min_symS2"]
    return cols, rows_out, None


def _run_coercivity(cfg):
    from .fracnorm import parabolic_coercivity, random_smooth_field
    setup = setup_problem(spec_from_scenario(cfg))
    rng = np.random.default_rng(cfg.seed)
    rows = []
    running_min = np.inf
    for sample in range(cfg.samples):
        u = random_smooth_field(setup.mesh, setup.dec, setup.ops_1, rng)
        rep = parabolic_coercivity(setup.ops_1, u, cfg.phi)
        running_min = min(running_min, rep.ratio_full)
        rows.append([sample, rep.ratio_full, running_min])
    return ["sample", "ratio", "min_so_far"], rows, None


def _run_mms(cfg):
    rows_out = []
    for r in run_mms_spatial(cfg.theta, levels=cfg.mesh_levels,
                             dimension=cfg.dimension):
        rows_out.append([r.h, r.tau, r.l2_error, r.x_error, r.order])
    for r in run_mms_temporal(cfg.theta):
        rows_out.append([r.h, r.tau, r.l2_error, r.x_error, r.order])
    cols = ["h", "tau", "l2_error", "x_error", "observed_order"]
    return cols, rows_out, None
