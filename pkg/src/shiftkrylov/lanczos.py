"""Complex symmetric Lanczos recurrence.

One run of this three-term recurrence supplies the basis vectors and
tridiagonal coefficients consumed by every per-shift solver: shifting the
matrix by ``sigma*I`` leaves the Krylov space unchanged, so the basis is
generated once and shared.

The recurrence orthogonalizes under the bilinear product ``u^T v`` and
normalizes each vector to ``v^T v = 1`` (not unit 2-norm). Only the two most
recent vectors are retained in solver mode; :func:`run_diagnostic` keeps the
whole basis for verification work.

Termination and breakdown are distinguished by two relative thresholds:
``||v~|| <= termination_tol * ||b||`` signals an invariant subspace (lucky
termination, every shifted system is then solvable exactly within it), while
``|v~^T v~| <= breakdown_tol * ||v~||^2`` with a non-negligible ``v~`` is a
serious breakdown of the bilinear pairing and aborts the process.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BreakdownError, FlopCounter, SparseSymMatrix, bilinear_dot, principal_sqrt, spmv

__all__ = [
    "BREAKDOWN_TOL",
    "TERMINATION_TOL",
    "LanczosRecord",
    "LanczosState",
    "LanczosStep",
    "lanczos_init",
    "lanczos_step",
    "run_diagnostic",
]

# Relative degeneracy thresholds, both at machine-epsilon scale.
BREAKDOWN_TOL = 1e-14
TERMINATION_TOL = 1e-14


@dataclass
class LanczosState:
    """Rolling state of the recurrence: the two newest basis vectors and the
    coefficients of the last completed step."""

    v_prev: np.ndarray
    v_curr: np.ndarray
    alpha: complex
    beta_prev: complex
    beta: complex
    g1: complex
    bnorm2: float
    n: int = 0
    finished: bool = False


@dataclass(frozen=True)
class LanczosStep:
    """Data published by one step ``n``: everything a per-shift update needs.

    ``lucky`` marks an invariant subspace; then ``beta == 0`` and ``v_next``
    is the zero vector.
    """

    n: int
    alpha: complex
    beta_prev: complex
    beta: complex
    v: np.ndarray
    v_next: np.ndarray
    lucky: bool


def lanczos_init(
    A: SparseSymMatrix,
    b,
    breakdown_tol: float = BREAKDOWN_TOL,
) -> LanczosState:
    """Start the recurrence: ``v_1 = b / (b^T b)^{1/2}``, ``g_1 = (b^T b)^{1/2}``.

    Real ``A`` and real ``b`` keep the whole basis in float64. Raises
    :class:`BreakdownError` when ``b^T b`` is negligible relative to
    ``||b||^2`` (the bilinear pairing is degenerate at the start, e.g.
    ``b = (1+1j, 1-1j)``).
    """
    b = np.asarray(b)
    if b.shape != (A.n,):
        raise ValueError(f"rhs length {b.shape} does not match matrix dimension {A.n}")
    real_path = A.is_real and b.dtype.kind != "c"
    if not real_path:
        b = b.astype(np.complex128)
    bnorm2 = float(np.linalg.norm(b))
    if bnorm2 == 0.0:
        raise ValueError("rhs must be nonzero")
    btb = bilinear_dot(b, b)
    if abs(btb) <= breakdown_tol * bnorm2**2:
        raise BreakdownError("bilinear", 0, f"|b^T b| = {abs(btb):.3e} vs ||b||^2 = {bnorm2**2:.3e}")
    g1 = principal_sqrt(btb)
    v1 = b / g1
    return LanczosState(
        v_prev=np.zeros_like(v1),
        v_curr=v1,
        alpha=0.0,
        beta_prev=0.0,
        beta=0.0,
        g1=g1,
        bnorm2=bnorm2,
    )


def lanczos_step(
    state: LanczosState,
    A: SparseSymMatrix,
    counter: FlopCounter | None = None,
    breakdown_tol: float = BREAKDOWN_TOL,
    termination_tol: float = TERMINATION_TOL,
) -> LanczosStep:
    """Advance one step: compute ``alpha_n``, ``v~ = A v_n - alpha_n v_n -
    beta_{n-1} v_{n-1}``, ``beta_n = (v~^T v~)^{1/2}`` (principal branch) and
    the normalized ``v_{n+1}``.

    Returns the step data and advances the state. On lucky termination the
    state is marked finished and further calls raise ``RuntimeError``; a
    serious breakdown raises :class:`BreakdownError` and leaves the state
    unusable.
    """
    if state.finished:
        raise RuntimeError("Lanczos process already terminated")
    n = state.n + 1
    v = state.v_curr
    Av = spmv(A, v, counter=counter)
    alpha = bilinear_dot(v, Av)
    vt = Av - alpha * v - state.beta_prev * state.v_prev
    vt_norm = float(np.linalg.norm(vt))
    if vt_norm <= termination_tol * state.bnorm2:
        beta = 0.0
        v_next = np.zeros_like(vt)
        lucky = True
        state.finished = True
    else:
        vtvt = bilinear_dot(vt, vt)
        if abs(vtvt) <= breakdown_tol * vt_norm**2:
            raise BreakdownError(
                "bilinear", n, f"|v~^T v~| = {abs(vtvt):.3e} vs ||v~||^2 = {vt_norm**2:.3e}"
            )
        beta = principal_sqrt(vtvt)
        v_next = vt / beta
        lucky = False
    step = LanczosStep(
        n=n,
        alpha=alpha,
        beta_prev=state.beta_prev,
        beta=beta,
        v=v,
        v_next=v_next,
        lucky=lucky,
    )
    state.v_prev = v
    state.v_curr = v_next
    state.alpha = alpha
    state.beta_prev = beta
    state.beta = beta
    state.n = n
    return step


@dataclass
class LanczosRecord:
    """Full transcript of a diagnostic run: every coefficient and basis
    vector, for factorization and orthogonality checks at desk scale."""

    alphas: np.ndarray
    betas: np.ndarray
    vectors: np.ndarray  # shape (N, k+1): v_1 .. v_{k+1}
    g1: complex
    bnorm2: float
    lucky_step: int | None = None

    @property
    def steps(self) -> int:
        return len(self.alphas)

    def tridiagonal(self, sigma=0.0, rectangular: bool = True) -> np.ndarray:
        """Materialize ``T_{n+1,n} + sigma [I; 0]`` (or the square ``T_n +
        sigma I`` when ``rectangular`` is false) from the recorded
        coefficients."""
        n = self.steps
        dtype = np.result_type(self.alphas.dtype, self.betas.dtype, type(sigma))
        rows = n + 1 if rectangular else n
        T = np.zeros((rows, n), dtype=dtype)
        for k in range(n):
            T[k, k] = self.alphas[k] + sigma
            if k + 1 < n:
                T[k, k + 1] = self.betas[k]
            if k + 1 < rows:
                T[k + 1, k] = self.betas[k]
        return T


def run_diagnostic(A: SparseSymMatrix, b, steps: int) -> LanczosRecord:
    """Run up to ``steps`` Lanczos steps keeping the whole basis.

    Stops early on lucky termination. Intended for verification only; memory
    grows as ``N * steps``.
    """
    state = lanczos_init(A, b)
    vectors = [state.v_curr]
    alphas, betas = [], []
    lucky_step = None
    for _ in range(steps):
        step = lanczos_step(state, A)
        alphas.append(step.alpha)
        betas.append(step.beta)
        vectors.append(step.v_next)
        if step.lucky:
            lucky_step = step.n
            break
    return LanczosRecord(
        alphas=np.asarray(alphas),
        betas=np.asarray(betas),
        vectors=np.column_stack(vectors),
        g1=state.g1,
        bnorm2=state.bnorm2,
        lucky_step=lucky_step,
    )
