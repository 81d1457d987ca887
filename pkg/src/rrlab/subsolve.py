"""Time-stepping subdomain solvers and variational flux recovery.

Solvers advance the theta scheme step by step.  Dirichlet data is
imposed by moving the known interface values to the right-hand side of
the interior rows (the trace of the result is exact).  The Robin solve
adds the weighted interface mass to the (Gamma, Gamma) block.

The variational flux is the interface-row residual of the space-time
operator, scaled by the temporal quadrature weight; it is the
discretization-consistent weak normal derivative, and it makes the
interface Schur complement of the space-time system coincide exactly
with the Steklov-Poincare application.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import GlobalOperators, SubdomainOperators, build_step_operators

__all__ = [
    "SpaceTimeField", "InterfaceSignal", "Factorization",
    "factorize_steps", "SubdomainSolver", "MonolithicSolver",
]


class SolverFailure(RuntimeError):
    """A linear solve could not be completed."""


@dataclass
class SpaceTimeField:
    """Nodal values over (time step, dof); row 0 is the initial slice.

    The initial slice must vanish (homogeneous initial condition).
    """

    values: np.ndarray          # (n_steps + 1, n_dofs)
    domain: str = "subdomain"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("field values must be 2D (steps+1, dofs)")
        if np.any(self.values[0] != 0.0):
            raise ValueError("initial slice of a space-time field must be zero")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @property
    def n_steps(self) -> int:
        return self.values.shape[0] - 1

    def copy(self) -> "SpaceTimeField":
        return SpaceTimeField(self.values.copy(), self.domain)


@dataclass
class InterfaceSignal:
    """Interface values over steps k = 1..n_steps.

    ``kind`` is "primal" for nodal trace values and "dual" for
    functional coefficients (temporal weight already included), so a
    duality pairing is a plain dot product.
    """

    values: np.ndarray          # (n_steps, n_interface)
    kind: str = "primal"

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.kind not in ("primal", "dual"):
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("signal contains non-finite values")

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    def copy(self) -> "InterfaceSignal":
        return InterfaceSignal(self.values.copy(), self.kind)

    def _like(self, values) -> "InterfaceSignal":
        return InterfaceSignal(values, self.kind)

    def __add__(self, other: "InterfaceSignal") -> "InterfaceSignal":
        if self.kind != other.kind:
            raise ValueError("cannot add signals of different kinds")
        return self._like(self.values + other.values)

    def __sub__(self, other: "InterfaceSignal") -> "InterfaceSignal":
        if self.kind != other.kind:
            raise ValueError("cannot subtract signals of different kinds")
        return self._like(self.values - other.values)

    def __mul__(self, a: float) -> "InterfaceSignal":
        return self._like(self.values * float(a))

    __rmul__ = __mul__

    def pair(self, other: "InterfaceSignal") -> float:
        """Duality pairing of a dual signal with a primal signal."""
        if {self.kind, other.kind} != {"primal", "dual"}:
            raise ValueError("pairing requires one primal and one dual signal")
        return float(np.sum(self.values * other.values))


class Factorization:
    """Sparse LU of one step matrix, with provenance for error reports."""

    def __init__(self, matrix: sp.spmatrix, label: str = "step matrix",
                 spd: bool = False):
        self.label = label
        self.spd = spd
        self.shape = matrix.shape
        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"{label}: matrix must be square")
        try:
            self._lu = spla.splu(matrix.tocsc())
        except RuntimeError as exc:
            raise SolverFailure(f"singular {label}: {exc}") from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        out = self._lu.solve(np.asarray(rhs, dtype=float))
        if not np.all(np.isfinite(out)):
            raise SolverFailure(f"non-finite solution from {self.label}")
        return out


def factorize_steps(matrices, labels=None):
    """Factorize a collection of per-step matrices.

    With a uniform time step all steps share a matrix, so callers
    normally pass a single-element list and reuse the factorization.
    """
    labels = labels or [f"step matrix {i}" for i in range(len(matrices))]
    return [Factorization(A, lab) for A, lab in zip(matrices, labels)]


class SubdomainSolver:
    """Factorized theta-scheme solver for one subdomain.

    Immutable after construction; factorizations are cached per mode, so
    repeated solves with new data are cheap.
    """

    def __init__(self, ops: SubdomainOperators):
        self.ops = ops
        self.A, self.C = build_step_operators(ops)
        nI = ops.n_interior
        self._A_II = self.A[:nI][:, :nI].tocsc()
        self._A_IG = self.A[:nI][:, nI:].tocsr()
        self._A_G = self.A[nI:].tocsr()      # interface rows of A
        self._C_G = self.C[nI:].tocsr()
        self._C_I = self.C[:nI].tocsr()
        self._dirichlet = None
        self._robin: dict[float, Factorization] = {}

    # -- factorizations ---------------------------------------------------

    def _dirichlet_factor(self) -> Factorization:
        if self._dirichlet is None:
            self._dirichlet = Factorization(
                self._A_II, f"subdomain {self.ops.index} Dirichlet block", spd=True)
        return self._dirichlet

    def _robin_factor(self, s: float) -> Factorization:
        if s <= 0:
            raise ValueError("Robin parameter s must be positive")
        key = float(s)
        if key not in self._robin:
            A_rob, _ = build_step_operators(self.ops, s=key)
            self._robin[key] = Factorization(
                A_rob, f"subdomain {self.ops.index} Robin matrix (s={key})")
        return self._robin[key]

    # -- helpers -----------------------------------------------------------

    def _check_loads(self, loads):
        grid = self.ops.grid
        if loads is None:
            return np.zeros((grid.n_steps, self.ops.n_dofs))
        loads = np.asarray(loads, dtype=float)
        if loads.shape != (grid.n_steps, self.ops.n_dofs):
            raise ValueError(
                f"loads shape {loads.shape} does not match "
                f"({grid.n_steps}, {self.ops.n_dofs})")
        return loads

    def _check_signal(self, signal, kind):
        if signal is None:
            return np.zeros((self.ops.grid.n_steps, self.ops.n_interface))
        if signal.kind != kind:
            raise ValueError(f"expected a {kind} signal, got {signal.kind}")
        if signal.values.shape != (self.ops.grid.n_steps, self.ops.n_interface):
            raise ValueError("signal shape does not match the interface")
        return signal.values

    def trace(self, u: SpaceTimeField) -> InterfaceSignal:
        """Interface trace of a subdomain field (steps 1..n)."""
        return InterfaceSignal(u.values[1:, self.ops.n_interior:].copy(), "primal")

    # -- solves ------------------------------------------------------------

    def dirichlet_solve(self, eta: InterfaceSignal | None = None,
                        loads: np.ndarray | None = None) -> SpaceTimeField:
        """Solve with prescribed interface trace ``eta`` and given loads.

        With loads = 0 this realizes the harmonic-extension solution
        operator; with eta = 0 it is the interior source solve.  The
        trace of the result equals eta exactly.
        """
        grid = self.ops.grid
        nI, n = self.ops.n_interior, self.ops.n_dofs
        eta_v = self._check_signal(eta, "primal")
        loads = self._check_loads(loads)
        fac = self._dirichlet_factor()
        u = np.zeros((grid.n_steps + 1, n))
        for k in range(1, grid.n_steps + 1):
            rhs = loads[k - 1] + self.C @ u[k - 1]
            g = eta_v[k - 1]
            u[k, nI:] = g
            if nI:
                u[k, :nI] = fac.solve(rhs[:nI] - self._A_IG @ g)
        return SpaceTimeField(u, f"omega{self.ops.index}")

    def robin_solve(self, s: float, lam: InterfaceSignal | None = None,
                    loads: np.ndarray | None = None) -> SpaceTimeField:
        """Solve with Robin interface data ``lam`` (a dual signal).

        Satisfies flux_recovery(u, loads) + s * M_Gamma trace(u) = lam
        exactly, step by step.
        """
        grid = self.ops.grid
        n = self.ops.n_dofs
        lam_v = self._check_signal(lam, "dual")
        loads = self._check_loads(loads)
        fac = self._robin_factor(s)
        u = np.zeros((grid.n_steps + 1, n))
        for k in range(1, grid.n_steps + 1):
            rhs = loads[k - 1] + self.C @ u[k - 1]
            rhs[self.ops.n_interior:] += lam_v[k - 1] / grid.tau
            u[k] = fac.solve(rhs)
        return SpaceTimeField(u, f"omega{self.ops.index}")

    def flux_recovery(self, u: SpaceTimeField,
                      loads: np.ndarray | None = None) -> InterfaceSignal:
        """Variational flux: weighted interface-row residual of u.

        sigma^k = tau * (A u^k - C u^{k-1} - f^k) restricted to the
        interface rows.  Dual signal (weight inside).
        """
        grid = self.ops.grid
        if u.values.shape != (grid.n_steps + 1, self.ops.n_dofs):
            raise ValueError("field shape does not match the subdomain")
        loads = self._check_loads(loads)
        nI = self.ops.n_interior
        sigma = np.empty((grid.n_steps, self.ops.n_interface))
        for k in range(1, grid.n_steps + 1):
            res = self._A_G @ u.values[k] - self._C_G @ u.values[k - 1]
            sigma[k - 1] = grid.tau * (res - loads[k - 1][nI:])
        return InterfaceSignal(sigma, "dual")


class MonolithicSolver:
    """theta-scheme solver on the undecomposed dof set."""

    def __init__(self, ops: GlobalOperators):
        self.ops = ops
        self.A, self.C = build_step_operators(ops)
        self._factor = Factorization(self.A.tocsc(), "monolithic step matrix")

    def solve(self, loads: np.ndarray | None = None) -> SpaceTimeField:
        grid = self.ops.grid
        loads = self.ops.loads if loads is None else np.asarray(loads, dtype=float)
        u = np.zeros((grid.n_steps + 1, self.ops.n_dofs))
        for k in range(1, grid.n_steps + 1):
            u[k] = self._factor.solve(loads[k - 1] + self.C @ u[k - 1])
        return SpaceTimeField(u, "global")

    def residual(self, u: SpaceTimeField,
                 loads: np.ndarray | None = None) -> float:
        """Relative space-time residual of a candidate field."""
        grid = self.ops.grid
        loads = self.ops.loads if loads is None else loads
        num = 0.0
        den = 0.0
        for k in range(1, grid.n_steps + 1):
            r = self.A @ u.values[k] - self.C @ u.values[k - 1] - loads[k - 1]
            num += grid.tau * float(r @ r)
            den += grid.tau * float(loads[k - 1] @ loads[k - 1])
        if den == 0.0:
            return np.sqrt(num)
        return np.sqrt(num / den)
