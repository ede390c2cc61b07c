"""Reduced unconstrained problem and its conjugate-gradient resolution.

With ``X = (Phi, Psi)`` the state is eliminated through
``W = calA^-1 (calB Phi + calCa Psi + calF)``, which turns the constrained
minimization into ``J*(X) = 0.5 (X^T M X + 2 d^T X + q)``. ``M`` is only
ever applied, never formed.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .assembly import BlockOperators, CoupledSystem, build_blocks
from .linalg import Factorization

log = logging.getLogger(__name__)


class NotPositiveDefiniteError(ArithmeticError):
    """Raised when CG meets a direction with non-positive curvature."""


class ConvergenceError(RuntimeError):
    """Raised when CG exhausts its iteration budget; carries the residual history."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = list(history)


class ReducedOperator:
    """Matrix-free reduced Hessian ``M`` with the linear term ``d`` and constant ``q``.

    Parameters
    ----------
    blocks : BlockOperators or CoupledSystem
        Assembled stacked operators.
    backend : str
        Passed to :class:`~mixdim.linalg.Factorization` for the 3D block.
    """

    def __init__(self, blocks, backend: str = "auto"):
        if isinstance(blocks, CoupledSystem):
            blocks = build_blocks(blocks)
        self.blocks: BlockOperators = blocks
        b = blocks
        self.N = b.N
        self.n_phi = b.n_phi
        self.n_psi = b.n_psi
        self.fac_A = Factorization(b.A, "spd", backend=backend)
        # the bordered saddle block is indefinite as soon as Q has rows
        kind = "indefinite" if b.n_mult > 0 else "spd"
        self.fac_Ahat = Factorization(b.Ahat, kind, backend="superlu")
        self._BT = b.calB.T.tocsr()
        self._CaT = b.calCa.T.tocsr()
        self._CT = b.calC.T.tocsr()
        self._d = None
        self._q = None
        self._WF = None
        self.n_apply = 0

    @property
    def size(self) -> int:
        return self.n_phi + self.n_psi

    def solve_calA(self, rhs, transpose: bool = False) -> np.ndarray:
        """Block solve with ``calA`` (or its transpose): 3D block and 1D saddle block separately."""
        rhs = np.asarray(rhs, dtype=float)
        out = np.empty_like(rhs)
        out[:self.N] = self.fac_A.solve(rhs[:self.N], transpose)
        out[self.N:] = self.fac_Ahat.solve(rhs[self.N:], transpose)
        return out

    def split(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape != (self.size,):
            raise ValueError(f"X has shape {X.shape}, expected ({self.size},)")
        return X[:self.n_phi], X[self.n_phi:]

    def apply(self, dX) -> np.ndarray:
        """``M dX`` via one forward and one adjoint block solve."""
        b = self.blocks
        dphi, dpsi = self.split(dX)
        dW = self.solve_calA(b.calB @ dphi + b.calCa @ dpsi)
        dP = self.solve_calA(b.calG @ dW - b.calC @ dpsi, transpose=True)
        self.n_apply += 1
        return np.concatenate([
            self._BT @ dP,
            self._CaT @ dP - self._CT @ dW + 2.0 * (b.Gpsi @ dpsi),
        ])

    __matmul__ = apply

    def _linear_terms(self):
        b = self.blocks
        WF = self.solve_calA(b.calF)
        PF = self.solve_calA(b.calG @ WF, transpose=True)
        self._d = np.concatenate([self._BT @ PF, self._CaT @ PF - self._CT @ WF])
        self._q = float(WF @ (b.calG @ WF))
        self._WF = WF

    @property
    def d(self) -> np.ndarray:
        if self._d is None:
            self._linear_terms()
        return self._d

    @property
    def q(self) -> float:
        if self._q is None:
            self._linear_terms()
        return self._q

    def J(self, X, MX=None) -> float:
        """``J*(X)``; pass a cached ``M X`` to avoid an extra application."""
        X = np.asarray(X, dtype=float)
        if MX is None:
            MX = self.apply(X)
        return 0.5 * float(X @ MX + 2.0 * self.d @ X + self.q)

    def recover(self, X):
        """Full state ``W = (U, Uhat, multipliers)`` for the controls ``X``."""
        b = self.blocks
        phi, psi = self.split(X)
        return self.solve_calA(b.calB @ phi + b.calCa @ psi + b.calF)

    def functional(self, W, psi) -> float:
        """Discrete mismatch functional evaluated directly from the state and ``Psi``."""
        b = self.blocks
        return 0.5 * float(W @ (b.calG @ W) - 2.0 * W @ (b.calC @ psi) + 2.0 * psi @ (b.Gpsi @ psi))


def apply_M(op: ReducedOperator, dX) -> np.ndarray:
    return op.apply(dX)


def compute_d_q(op: ReducedOperator):
    return op.d, op.q


@dataclass
class SolverState:
    """Result of :func:`cg_solve`."""

    X: np.ndarray
    r: np.ndarray
    dX: np.ndarray
    iterations: int
    history: list = field(default_factory=list)
    tol: float = 1e-6
    max_iter: int = 0
    converged: bool = False
    restarts: int = 0
    J_history: list = field(default_factory=list)
    n_phi: int = 0

    @property
    def phi(self) -> np.ndarray:
        return self.X[:self.n_phi]

    @property
    def psi(self) -> np.ndarray:
        return self.X[self.n_phi:]

    @property
    def res_rel(self) -> float:
        return self.history[-1] if self.history else 0.0

    def write_history(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "res_rel"])
            for k, v in enumerate(self.history):
                w.writerow([k, repr(float(v))])


def cg_solve(op, tol: float = 1e-6, max_iter: int | None = None, x0=None, d=None,
             check_every: int = 50, drift_tol: float = 1e-6, track_J: bool = False,
             callback=None) -> SolverState:
    """Conjugate gradient for ``M X + d = 0``.

    ``op`` needs ``apply`` (or ``@``) and, unless ``d`` is given, a ``d``
    attribute. Stops when ``||r|| / ||d|| <= tol``. Every ``check_every``
    iterations the recurrence residual is compared with a recomputed
    ``M X + d``; if they disagree by more than ``drift_tol`` (relative to
    ``||d||``) the iteration restarts from the true residual.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    apply = op.apply if hasattr(op, "apply") else (lambda v: op @ v)
    d = np.asarray(op.d if d is None else d, dtype=float)
    n = d.shape[0]
    if max_iter is None:
        max_iter = max(10 * n, 100)
    n_phi = getattr(op, "n_phi", 0)
    dnorm = float(np.linalg.norm(d))
    if dnorm == 0.0:
        X = np.zeros(n)
        return SolverState(X, np.zeros(n), np.zeros(n), 0, [0.0], tol, max_iter, True, n_phi=n_phi)

    X = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    MX = apply(X) if x0 is not None else np.zeros(n)
    r = MX + d
    dX = -r
    rr = float(r @ r)
    history = [np.sqrt(rr) / dnorm]
    J_hist = [0.5 * float(X @ MX + 2.0 * d @ X)] if track_J else []
    restarts = 0
    k = 0
    while history[-1] > tol:
        if k >= max_iter:
            raise ConvergenceError(
                f"CG did not reach tol={tol:g} in {max_iter} iterations (last {history[-1]:.3e})", history
            )
        MdX = apply(dX)
        curv = float(dX @ MdX)
        if not curv > 0.0:
            raise NotPositiveDefiniteError(f"operator not positive definite: dX^T M dX = {curv:.3e} at iteration {k}")
        zeta = rr / curv
        X += zeta * dX
        r += zeta * MdX
        if track_J:
            MX += zeta * MdX
        k += 1
        if check_every and k % check_every == 0:
            r_true = apply(X) + d
            if np.linalg.norm(r_true - r) > drift_tol * dnorm:
                log.info("CG residual drift at iteration %d, restarting", k)
                r = r_true
                rr = float(r @ r)
                dX = -r
                restarts += 1
                history.append(np.sqrt(rr) / dnorm)
                if track_J:
                    MX = r_true - d
                    J_hist.append(0.5 * float(X @ MX + 2.0 * d @ X))
                if callback is not None:
                    callback(k, X, history[-1])
                continue
        rr_new = float(r @ r)
        beta = rr_new / rr
        dX = -r + beta * dX
        rr = rr_new
        history.append(np.sqrt(rr) / dnorm)
        if track_J:
            J_hist.append(0.5 * float(X @ MX + 2.0 * d @ X))
        if callback is not None:
            callback(k, X, history[-1])
    return SolverState(X, r, dX, k, history, tol, max_iter, True, restarts, J_hist, n_phi)


def recover_state(op: ReducedOperator, X):
    """``(U, Uhat, multipliers)`` for controls ``X``."""
    W = op.recover(X)
    b = op.blocks
    n_hat = b.n_hat - b.n_mult
    return W[:b.N], W[b.N:b.N + n_hat], W[b.N + n_hat:]


__all__ = [
    "ConvergenceError",
    "NotPositiveDefiniteError",
    "ReducedOperator",
    "SolverState",
    "apply_M",
    "cg_solve",
    "compute_d_q",
    "recover_state",
]
