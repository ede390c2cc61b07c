"""Sparse storage helpers, direct factorizations and small dense solves."""
from __future__ import annotations

import glob
import logging
import os
import site
import sys
import warnings

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)


class FactorizationError(RuntimeError):
    pass


def _find_mkl_rt():
    roots = {sys.prefix, sys.base_prefix, "/usr/local", "/usr", site.USER_BASE or ""}
    for root in sorted(r for r in roots if r):
        hits = sorted(glob.glob(f"{root}/lib*/**/libmkl_rt.so*", recursive=True), key=len)
        if hits:
            return hits[0]
    return None


def _load_pardiso():
    if "PYPARDISO_MKL_RT" not in os.environ:
        path = _find_mkl_rt()
        if path:
            os.environ["PYPARDISO_MKL_RT"] = path
    try:
        import pypardiso
    except (ImportError, OSError):
        return None
    return pypardiso


_pypardiso = _load_pardiso()
HAVE_PARDISO = _pypardiso is not None


def finalize(m) -> sp.csr_matrix:
    """CSR with summed duplicates, sorted column indices and no explicit zeros."""
    m = sp.csr_matrix(m, dtype=np.float64)
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    return m


def is_symmetric(m, rtol=1e-12) -> bool:
    m = sp.csr_matrix(m)
    scale = abs(m).max() if m.nnz else 0.0
    diff = m - m.T
    return diff.nnz == 0 or abs(diff).max() <= rtol * scale


class Factorization:
    """Reusable direct factorization of a square sparse matrix.

    ``kind`` is ``"spd"`` or ``"indefinite"``. The SPD path refuses matrices
    that hit a non-positive pivot, so it doubles as a positive-definiteness test.
    """

    def __init__(self, m, kind: str = "spd", backend: str = "auto"):
        if kind not in ("spd", "indefinite"):
            raise ValueError(f"unknown factorization kind {kind!r}")
        m = sp.csr_matrix(m, dtype=np.float64)
        if m.shape[0] != m.shape[1]:
            raise FactorizationError(f"matrix is not square: {m.shape}")
        self.shape = m.shape
        self.kind = kind
        if backend == "auto":
            backend = "pardiso" if (kind == "spd" and HAVE_PARDISO and m.shape[0] >= 5000) else "superlu"
        if backend == "pardiso" and not HAVE_PARDISO:
            raise FactorizationError("pypardiso is not available")
        self.backend = backend
        self.perm = None
        if m.shape[0] == 0:
            self._solve = lambda b, trans: b.copy()
            return
        empty = np.flatnonzero(np.diff(m.indptr) == 0)
        if len(empty):
            raise FactorizationError(f"structurally singular: row {int(empty[0])} is empty")
        if kind == "spd":
            self._factor_spd(m)
        else:
            self._factor_lu(m)

    def _factor_spd(self, m):
        if self.backend == "pardiso":
            upper = sp.triu(m, format="csr")
            upper.sort_indices()
            solver = _pypardiso.PyPardisoSolver(mtype=2)
            self._pardiso = solver
            try:
                solver.factorize(upper)
            except _pypardiso.pardiso_wrapper.PyPardisoError as exc:
                raise FactorizationError(f"matrix is not positive definite (pardiso error {exc})") from None
            self._upper = upper

            def solve(b, trans):
                return solver.solve(upper, b)

            self._solve = solve
            return
        try:
            lu = spla.splu(
                m.tocsc(),
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:
            raise FactorizationError(f"factorization failed: {exc}") from None
        pivots = lu.U.diagonal()
        if not np.array_equal(lu.perm_r, lu.perm_c) or np.any(pivots <= 0.0):
            raise FactorizationError("matrix is not positive definite (non-positive pivot)")
        self.perm = lu.perm_c
        self._solve = lambda b, trans: lu.solve(b, trans="T" if trans else "N")

    def _factor_lu(self, m):
        try:
            lu = spla.splu(m.tocsc(), permc_spec="COLAMD")
        except RuntimeError as exc:
            raise FactorizationError(f"matrix is singular: {exc}") from None
        self.perm = lu.perm_c
        self._solve = lambda b, trans: lu.solve(b, trans="T" if trans else "N")

    def __del__(self):
        solver = getattr(self, "_pardiso", None)
        if solver is not None:
            try:
                solver.free_memory(everything=False)
            except Exception:  # noqa: BLE001 - interpreter shutdown
                pass

    def solve(self, b, transpose: bool = False) -> np.ndarray:
        b = np.asarray(b, dtype=np.float64)
        if b.shape[0] != self.shape[0]:
            raise ValueError(f"rhs length {b.shape[0]} does not match matrix size {self.shape[0]}")
        return self._solve(np.ascontiguousarray(b), transpose)


def factorize(m, kind: str = "spd", backend: str = "auto") -> Factorization:
    return Factorization(m, kind, backend)


def spmv(m, x, transpose: bool = False) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    rows, cols = m.shape
    n_in = rows if transpose else cols
    if x.shape[0] != n_in:
        raise ValueError(f"dimension mismatch: matrix {m.shape}, vector {x.shape[0]} (transpose={transpose})")
    return m.T @ x if transpose else m @ x


def dense_solve(m, b) -> np.ndarray:
    m = np.asarray(m.toarray() if sp.issparse(m) else m, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("dense_solve needs a square matrix")
    try:
        with warnings.catch_warnings():
            # singularity is reported below as FactorizationError
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(m, check_finite=True)
    except ValueError as exc:
        raise FactorizationError(str(exc)) from None
    diag = np.abs(np.diag(lu))
    if diag.min() <= np.finfo(float).eps * max(1.0, diag.max()) * m.shape[0]:
        raise FactorizationError("matrix is singular to working precision")
    return scipy.linalg.lu_solve((lu, piv), b)


def write_matrix(path, m, comment: str = "") -> None:
    """Coordinate-format (1-based) text dump of a sparse block."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(m), comment=comment)


def read_matrix(path) -> sp.csr_matrix:
    return sp.csr_matrix(scipy.io.mmread(str(path)))
