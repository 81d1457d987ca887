"""Discrete Steklov-Poincare algebra and interface iterations.

The Steklov-Poincare operator of a subdomain maps an interface trace to
the variational flux of the trace-lifted homogeneous solve; discretely
it is exactly the interface Schur complement of the weighted space-time
system.  The Robin-Robin method is realized twice: as the
Peaceman-Rachford iteration on interface signals, and as alternating
Robin subdomain sweeps at the PDE level.  Both paths use the same
resolvent (one Robin solve, never an inner iteration), so their iterates
agree to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .assembly import lumped_interface_mass, robin_coefficient
from .subsolve import InterfaceSignal, SpaceTimeField, SubdomainSolver

__all__ = [
    "SteklovOperator", "IterationConfig", "ConvergenceReport",
    "apply_riesz", "interface_gram", "interface_source",
    "solve_robin_resolvent", "pr_step", "run_pr", "run_rr", "run_iteration",
    "RobinSweepState", "init_robin_sweep", "robin_sweep", "run_equivalence",
    "h_norm", "dual_norm", "assemble_dense", "dense_riesz",
    "spectral_analysis", "SpectralRow", "monotone_gap",
]

DENSE_COLUMN_GUARD = 2000


# ---------------------------------------------------------------------------
# Elementary interface operators
# ---------------------------------------------------------------------------

class SteklovOperator:
    """Matrix-free trace-to-flux map of one subdomain."""

    def __init__(self, solver: SubdomainSolver):
        self.solver = solver
        self.index = solver.ops.index

    def apply(self, eta: InterfaceSignal) -> InterfaceSignal:
        """Flux of the homogeneous Dirichlet solve with trace eta."""
        u = self.solver.dirichlet_solve(eta=eta, loads=None)
        return self.solver.flux_recovery(u, loads=None)

    __call__ = apply


def apply_riesz(eta: InterfaceSignal, M_gamma, tau: float) -> InterfaceSignal:
    """Riesz map of the interface L2(space-time) inner product.

    (J eta)^k = tau * M_Gamma eta^k, a dual signal.
    """
    if eta.kind != "primal":
        raise ValueError("Riesz map acts on primal signals")
    Mg = M_gamma.toarray() if hasattr(M_gamma, "toarray") else np.asarray(M_gamma)
    return InterfaceSignal(tau * (eta.values @ Mg.T), "dual")


def interface_gram(eta: InterfaceSignal, M_gamma, s: float, tau: float) -> InterfaceSignal:
    """The s-weighted interface pairing used by the Robin exchange.

    Returns the dual signal robin_coefficient(s, tau) * tau *
    ML_Gamma eta^k with ML_Gamma the lumped interface mass, i.e. the
    "s J" term of the resolvent and reflection operators under the
    package's Robin pairing convention.
    """
    if eta.kind != "primal":
        raise ValueError("interface pairing acts on primal signals")
    coef = robin_coefficient(s, tau) * tau
    ML = lumped_interface_mass(M_gamma)
    return InterfaceSignal(coef * (eta.values @ ML.T.toarray()), "dual")


def interface_source(solver: SubdomainSolver) -> InterfaceSignal:
    """Interface source of one subdomain: minus the flux of the
    zero-trace solve with the assembled loads."""
    loads = solver.ops.loads
    u = solver.dirichlet_solve(eta=None, loads=loads)
    sigma = solver.flux_recovery(u, loads=loads)
    return InterfaceSignal(-sigma.values, "dual")


def solve_robin_resolvent(solver: SubdomainSolver, rhs: InterfaceSignal,
                          s: float) -> InterfaceSignal:
    """Solve (s J + S_i) eta = rhs with a single Robin subdomain solve."""
    if rhs.kind != "dual":
        raise ValueError("resolvent right-hand side must be a dual signal")
    u = solver.robin_solve(s, lam=rhs, loads=None)
    return solver.trace(u)


def monotone_gap(S: SteklovOperator, eta_ref: InterfaceSignal,
                 eta_n: InterfaceSignal,
                 S_eta_ref: InterfaceSignal | None = None,
                 S_eta_n: InterfaceSignal | None = None) -> float:
    """Monotonicity gap <S eta_ref - S eta_n, eta_ref - eta_n>.

    Nonnegative for the discrete Steklov-Poincare operators; tends to
    zero along a convergent interface iteration.
    """
    a = S_eta_ref if S_eta_ref is not None else S.apply(eta_ref)
    b = S_eta_n if S_eta_n is not None else S.apply(eta_n)
    return (a - b).pair(eta_ref - eta_n)


# ---------------------------------------------------------------------------
# Norms on interface signals
# ---------------------------------------------------------------------------

def h_norm(eta: InterfaceSignal, M_gamma, tau: float) -> float:
    """L2(interface x time) norm: sqrt(sum_k tau eta_k^T M_Gamma eta_k)."""
    Mg = M_gamma.toarray() if hasattr(M_gamma, "toarray") else np.asarray(M_gamma)
    vals = eta.values
    return float(np.sqrt(max(tau * np.sum(vals * (vals @ Mg.T)), 0.0)))


def dual_norm(sigma: InterfaceSignal, M_gamma, tau: float) -> float:
    """Norm of a dual signal in the dual of the L2 pairing."""
    if sigma.kind != "dual":
        raise ValueError("dual_norm expects a dual signal")
    Mg = M_gamma.toarray() if hasattr(M_gamma, "toarray") else np.asarray(M_gamma)
    w = np.linalg.solve(Mg, sigma.values.T).T
    return float(np.sqrt(max(np.sum(sigma.values * w) / tau, 0.0)))


# ---------------------------------------------------------------------------
# Peaceman-Rachford interface iteration
# ---------------------------------------------------------------------------

@dataclass
class IterationConfig:
    """Parameters of the interface iteration."""

    s: float = 1.0
    tol: float = 1e-10
    max_iter: int = 200
    variant: str = "pr_interface"
    eta0: InterfaceSignal | None = None

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError("Robin parameter s must be positive")
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.variant not in ("pr_interface", "rr_pde"):
            raise ValueError(f"unknown iteration variant {self.variant!r}")


@dataclass
class ConvergenceReport:
    """Per-iteration diagnostics of an interface iteration run."""

    increments: list = field(default_factory=list)     # ||eta^n - eta^{n-1}||_H
    errors_1: list = field(default_factory=list)       # X-norm field errors
    errors_2: list = field(default_factory=list)
    gaps_1: list = field(default_factory=list)         # monotone gaps
    gaps_2: list = field(default_factory=list)
    residuals: list = field(default_factory=list)      # preconditioned residual
    status: str = "max_iter"

    @property
    def n_iterations(self) -> int:
        return len(self.increments)


def pr_step(solvers, chi_sum: InterfaceSignal, eta: InterfaceSignal,
            s: float) -> InterfaceSignal:
    """One Peaceman-Rachford double sweep on the interface.

    eta half = (sJ + S1)^-1 ((sJ - S2) eta + chi),
    eta next = (sJ + S2)^-1 ((sJ - S1) eta half + chi),
    where chi = chi_1 + chi_2.  With chi = 0 the map is linear and its
    fixed point is zero; in general fixed points solve
    (S1 + S2) eta = chi.
    """
    s1, s2 = solvers
    ops = s1.ops
    tau = ops.grid.tau
    Mg = ops.M_gamma

    S2_eta = SteklovOperator(s2).apply(eta)
    rhs = interface_gram(eta, Mg, s, tau) - S2_eta + chi_sum
    eta_half = solve_robin_resolvent(s1, rhs, s)

    S1_half = SteklovOperator(s1).apply(eta_half)
    rhs = interface_gram(eta_half, Mg, s, tau) - S1_half + chi_sum
    return solve_robin_resolvent(s2, rhs, s)


@dataclass
class PRReferences:
    """Reference data enabling error and gap tracking inside run_pr."""

    eta_ref: InterfaceSignal
    u1_ref: SpaceTimeField
    u2_ref: SpaceTimeField


def _run_iteration(solvers, config: IterationConfig, advance, state,
                   references: PRReferences | None):
    """Shared driver: advance the interface iterate, track diagnostics.

    ``advance(state)`` returns (state, eta_next).  When ``references``
    is given, each iteration also records the subdomain X-norm errors of
    the interface-parametrized fields, the monotone gaps against the
    reference trace, and the Steklov-Poincare residual pushed through
    the resolvent (the iteration's own metric); this costs two extra
    Dirichlet solves per iteration.
    """
    s1, s2 = solvers
    ops = s1.ops
    tau, Mg = ops.grid.tau, ops.M_gamma
    n_steps, n_g = ops.grid.n_steps, ops.n_interface

    chi_1 = interface_source(s1)
    chi_2 = interface_source(s2)
    chi_sum = chi_1 + chi_2

    eta = config.eta0.copy() if config.eta0 is not None else \
        InterfaceSignal(np.zeros((n_steps, n_g)), "primal")

    report = ConvergenceReport()
    track = references is not None
    if track:
        S1_ref = s1.flux_recovery(references.u1_ref, s1.ops.loads) + chi_1
        S2_ref = s2.flux_recovery(references.u2_ref, s2.ops.loads) + chi_2

    scale0 = None
    for n in range(1, config.max_iter + 1):
        state, eta_next = advance(state)
        inc = h_norm(eta_next - eta, Mg, tau)
        eta = eta_next
        report.increments.append(inc)

        if track:
            u1 = s1.dirichlet_solve(eta=eta, loads=s1.ops.loads)
            u2 = s2.dirichlet_solve(eta=eta, loads=s2.ops.loads)
            S1_eta = s1.flux_recovery(u1, s1.ops.loads) + chi_1
            S2_eta = s2.flux_recovery(u2, s2.ops.loads) + chi_2
            from .lab import field_error_norm     # local import, no cycle at load
            report.errors_1.append(field_error_norm(
                u1, references.u1_ref, s1.ops.M, s1.ops.K, tau))
            report.errors_2.append(field_error_norm(
                u2, references.u2_ref, s2.ops.M, s2.ops.K, tau))
            diff = references.eta_ref - eta
            report.gaps_1.append((S1_ref - S1_eta).pair(diff))
            report.gaps_2.append((S2_ref - S2_eta).pair(diff))
            resid = (S1_eta + S2_eta) - chi_sum
            precond = solve_robin_resolvent(s2, resid, config.s)
            report.residuals.append(h_norm(precond, Mg, tau))

        if scale0 is None:
            scale0 = inc
        if not np.isfinite(inc) or (scale0 > 0 and inc > 1e6 * scale0):
            report.status = "diverged"
            return eta, report
        if inc <= config.tol:
            report.status = "converged"
            return eta, report

    report.status = "max_iter"
    return eta, report


def run_pr(solvers, config: IterationConfig,
           references: PRReferences | None = None):
    """Run the interface Peaceman-Rachford iteration.

    Returns (eta, report); see _run_iteration for the diagnostics.
    """
    chi_sum = interface_source(solvers[0]) + interface_source(solvers[1])

    def advance(eta):
        eta_next = pr_step(solvers, chi_sum, eta, config.s)
        return eta_next, eta_next

    n_steps = solvers[0].ops.grid.n_steps
    n_g = solvers[0].ops.n_interface
    eta0 = config.eta0 if config.eta0 is not None else \
        InterfaceSignal(np.zeros((n_steps, n_g)), "primal")
    return _run_iteration(solvers, config, advance, eta0, references)


def run_rr(solvers, config: IterationConfig,
           references: PRReferences | None = None):
    """Run the PDE-level Robin-Robin sweep.

    The interface iterate is the trace of the second subdomain's Robin
    solution; it coincides with the Peaceman-Rachford iterate of run_pr
    to roundoff, so the two drivers are interchangeable.
    """
    state0 = init_robin_sweep(solvers, config.s, eta0=config.eta0)

    def advance(state):
        state = robin_sweep(solvers, state, config.s)
        return state, solvers[1].trace(state.u2)

    return _run_iteration(solvers, config, advance, state0, references)


def run_iteration(solvers, config: IterationConfig,
                  references: PRReferences | None = None):
    """Dispatch on config.variant: pr_interface or rr_pde."""
    driver = run_pr if config.variant == "pr_interface" else run_rr
    return driver(solvers, config, references)


# ---------------------------------------------------------------------------
# PDE-level Robin-Robin sweep
# ---------------------------------------------------------------------------

@dataclass
class RobinSweepState:
    """State carried between PDE-level Robin-Robin sweeps."""

    u1: SpaceTimeField | None
    u2: SpaceTimeField
    lam1: InterfaceSignal        # Robin data for the next Omega_1 solve


def _robin_exchange(solver: SubdomainSolver, u: SpaceTimeField,
                    s: float) -> InterfaceSignal:
    """Robin data extracted from a neighbour solution.

    Computed variationally: s-weighted interface pairing of the trace
    minus the recovered flux.  Never by geometric differencing.
    """
    ops = solver.ops
    tr = solver.trace(u)
    sig = solver.flux_recovery(u, ops.loads)
    return interface_gram(tr, ops.M_gamma, s, ops.grid.tau) - sig


def init_robin_sweep(solvers, s: float,
                     eta0: InterfaceSignal | None = None) -> RobinSweepState:
    """Initial sweep state consistent with the interface iteration.

    Builds u2^0 as the Dirichlet solve with trace eta0 (zero by default)
    and subdomain-2 loads, then extracts its Robin exchange data.
    """
    s1, s2 = solvers
    ops = s2.ops
    if eta0 is None:
        eta0 = InterfaceSignal(
            np.zeros((ops.grid.n_steps, ops.n_interface)), "primal")
    u2 = s2.dirichlet_solve(eta=eta0, loads=s2.ops.loads)
    lam1 = _robin_exchange(s2, u2, s)
    return RobinSweepState(None, u2, lam1)


def robin_sweep(solvers, state: RobinSweepState, s: float) -> RobinSweepState:
    """One alternating Robin-Robin sweep at the PDE level.

    Solves Omega_1 with Robin data from the current u2, then Omega_2
    with Robin data from the new u1.  The trace of the returned u2
    reproduces the interface iterate of pr_step exactly (to roundoff).
    """
    s1, s2 = solvers
    u1 = s1.robin_solve(s, lam=state.lam1, loads=s1.ops.loads)
    lam2 = _robin_exchange(s1, u1, s)
    u2 = s2.robin_solve(s, lam=lam2, loads=s2.ops.loads)
    lam1 = _robin_exchange(s2, u2, s)
    return RobinSweepState(u1, u2, lam1)


def run_equivalence(solvers, s: float, n_iterations: int):
    """Run the interface and the PDE-level iterations in lockstep.

    Returns a list of per-iteration maximum relative discrepancies
    between the PR interface iterate and the trace of the Robin-Robin
    u2, measured in the interface L2 norm.
    """
    s1, s2 = solvers
    ops = s1.ops
    tau, Mg = ops.grid.tau, ops.M_gamma
    chi_sum = interface_source(s1) + interface_source(s2)
    eta = InterfaceSignal(
        np.zeros((ops.grid.n_steps, ops.n_interface)), "primal")
    state = init_robin_sweep(solvers, s)
    discrepancies = []
    for _ in range(n_iterations):
        eta = pr_step(solvers, chi_sum, eta, s)
        state = robin_sweep(solvers, state, s)
        tr = s2.trace(state.u2)
        num = h_norm(tr - eta, Mg, tau)
        den = h_norm(eta, Mg, tau)
        discrepancies.append(num / den if den > 0 else num)
    return discrepancies


# ---------------------------------------------------------------------------
# Dense probing and spectral analysis
# ---------------------------------------------------------------------------

def assemble_dense(apply_fn, n_steps: int, n_interface: int,
                   guard: int = DENSE_COLUMN_GUARD) -> np.ndarray:
    """Probe a linear interface operator with unit primal signals.

    Column (k * n_interface + g) is the flattened output for the unit
    signal at step k, dof g (time-major flattening).
    """
    n_cols = n_steps * n_interface
    if n_cols > guard:
        raise ValueError(
            f"dense probing guard exceeded: {n_cols} columns > {guard}")
    out = np.zeros((n_cols, n_cols))
    for j in range(n_cols):
        e = np.zeros(n_cols)
        e[j] = 1.0
        sig = InterfaceSignal(e.reshape(n_steps, n_interface), "primal")
        out[:, j] = apply_fn(sig).values.ravel()
    return out


def dense_riesz(M_gamma, tau: float, n_steps: int) -> np.ndarray:
    """Dense matrix of the Riesz map: block-diagonal tau * M_Gamma."""
    Mg = M_gamma.toarray() if hasattr(M_gamma, "toarray") else np.asarray(M_gamma)
    return np.kron(np.eye(n_steps), tau * Mg)


@dataclass(frozen=True)
class SpectralRow:
    """Spectral diagnostics of the interface iteration at one s."""

    s: float
    rho: float
    sv_min_sJ_S1: float
    sv_min_sJ_S2: float
    sv_min_S1_S2: float
    eig_min_sym_S1: float
    eig_min_sym_S2: float


def spectral_analysis(S1: np.ndarray, S2: np.ndarray, M_gamma, tau: float,
                      s_values) -> list[SpectralRow]:
    """Dense spectral portrait of the Peaceman-Rachford iteration.

    For each s: spectral radius of the linear part
    (sJ + S2)^-1 (sJ - S1) (sJ + S1)^-1 (sJ - S2), minimum singular
    values of sJ + S_i and S1 + S2, and minimum eigenvalues of the
    symmetric parts of S_i.  J here is the interface pairing actually
    used by the iteration (the Robin-weight convention).
    """
    n_steps = S1.shape[0] // (M_gamma.shape[0])
    ML = lumped_interface_mass(M_gamma).toarray()
    sym1 = scipy.linalg.eigvalsh(0.5 * (S1 + S1.T)).min()
    sym2 = scipy.linalg.eigvalsh(0.5 * (S2 + S2.T)).min()
    sv_sum = scipy.linalg.svdvals(S1 + S2).min()
    rows = []
    for s in s_values:
        coef = robin_coefficient(s, tau) * tau
        J = np.kron(np.eye(n_steps), coef * ML)
        T = np.linalg.solve(J + S2, (J - S1) @ np.linalg.solve(J + S1, (J - S2)))
        rho = float(np.abs(np.linalg.eigvals(T)).max())
        rows.append(SpectralRow(
            s=float(s),
            rho=rho,
            sv_min_sJ_S1=float(scipy.linalg.svdvals(J + S1).min()),
            sv_min_sJ_S2=float(scipy.linalg.svdvals(J + S2).min()),
            sv_min_S1_S2=float(sv_sum),
            eig_min_sym_S1=float(sym1),
            eig_min_sym_S2=float(sym2),
        ))
    return rows
