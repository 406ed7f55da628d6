"""Expected-cost-minimizing liquidation strategies.

The execution cost of a deterministic strategy is the quadratic form
``1/2 xi . Gram . xi`` assembled from the kernel's two-sided extension; a
strategy is optimal for its liquidation constraint exactly when the impact
it accumulates, ``sum_l tilde(t_k - t_l) xi_l``, is the same vector at every
trade time (the Lagrange condition).  This module provides the generic KKT
solve, the closed-form solution for matrix-exponential decay, the
diagonalization route for commuting kernels, buy-only/sell-only basis
strategies, and dyadic grid refinement toward the continuous-time optimum.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
import numpy as np
import scipy.linalg

from .grids import TimeGrid, equidistant_grid
from .kernels import (
    DecayKernel,
    DiagCongruenceKernel,
    ExpDecay,
    MatrixExpKernel,
    MatrixFunctionKernel,
    _maxabs,
    check_shape_properties,
    check_structure,
)
from .posdef import PSD_REL_TOL, assemble_gram, classify_positive_definite

__all__ = [
    "Strategy",
    "SolveResult",
    "BasisDecomposition",
    "RefineResult",
    "UnboundedCostError",
    "cost",
    "solve_kkt",
    "lagrange_residual",
    "solve_exp_closed_form",
    "solve_1d_exp",
    "simultaneous_diagonalize",
    "solve_commuting",
    "basis_strategies",
    "refine",
    "solve_best",
]

RESIDUAL_REL_TOL = 1e-8
LIQUIDATION_TOL = 1e-10


class UnboundedCostError(ValueError):
    """The Gram on this grid has a negative direction: cost is unbounded below."""

    def __init__(self, message, direction=None, min_eig=None):
        super().__init__(message)
        self.direction = direction
        self.min_eig = min_eig


@dataclass(frozen=True)
class Strategy:
    """Trade sizes per grid time and asset; positive entries are buys."""

    trades: np.ndarray  # (N, K)
    grid: TimeGrid

    def __post_init__(self):
        trades = np.asarray(self.trades, dtype=float)
        if trades.ndim == 1:
            trades = trades[:, None]
        if trades.shape[0] != self.grid.n:
            raise ValueError(
                f"strategy has {trades.shape[0]} trades for a grid of {self.grid.n} times"
            )
        if not np.all(np.isfinite(trades)):
            raise ValueError("trades must be finite")
        trades = trades.copy()
        trades.setflags(write=False)
        object.__setattr__(self, "trades", trades)

    @property
    def dimension(self) -> int:
        return self.trades.shape[1]

    @property
    def liquidates(self) -> np.ndarray:
        """The initial portfolio this strategy liquidates: ``-sum_k xi_k``."""
        return -self.trades.sum(axis=0)


@dataclass(frozen=True)
class SolveResult:
    strategy: Strategy
    lam: np.ndarray  # Lagrange multiplier, one entry per asset
    cost: float
    unique: bool
    residual: float  # max_k || sum_l tilde(t_k-t_l) xi_l - lam ||_inf


@dataclass(frozen=True)
class BasisDecomposition:
    """Orthonormal directions v_i and one optimal strategy liquidating each.

    ``vectors[i]`` is v_i (a row), ``strategies[i]`` liquidates v_i with
    sign-constant components, and ``rotation`` is the orthogonal matrix whose
    rows are the v_i (the kernel diagonalizes as rotation^T diag rotation).
    """

    vectors: np.ndarray  # (K, K), row i = v_i
    strategies: tuple  # K strategies
    rotation: np.ndarray  # (K, K)


@dataclass(frozen=True)
class RefineResult:
    levels: tuple  # ((N, cost), ...) per dyadic level
    finest: SolveResult


def _as_trades(strategy, grid: TimeGrid) -> np.ndarray:
    if isinstance(strategy, Strategy):
        trades = strategy.trades
    else:
        trades = np.asarray(strategy, dtype=float)
        if trades.ndim == 1:
            trades = trades[:, None]
    if trades.shape[0] != grid.n:
        raise ValueError("strategy and grid sizes do not match")
    return trades


def cost(kernel: DecayKernel, grid: TimeGrid, strategy) -> float:
    """Expected execution cost ``1/2 xi . Gram . xi`` of a strategy."""
    trades = _as_trades(strategy, grid)
    if trades.shape[1] != kernel.dimension:
        raise ValueError("strategy asset count does not match the kernel dimension")
    gram = assemble_gram(kernel, grid)
    return 0.5 * gram.quadratic_form(trades)


def lagrange_residual(kernel: DecayKernel, grid: TimeGrid, strategy):
    """Optimality certificate for a liquidating strategy.

    Returns ``(lambda_hat, residual)`` where ``lambda_hat`` is the mean over
    trade times of the accumulated-impact vectors and ``residual`` their
    maximum deviation from it; a residual of (numerical) zero certifies
    optimality for the portfolio the strategy liquidates.
    """
    trades = _as_trades(strategy, grid)
    gram = assemble_gram(kernel, grid)
    impact = (gram.blocks @ trades.ravel()).reshape(grid.n, -1)
    lambda_hat = impact.mean(axis=0)
    residual = float(np.max(np.abs(impact - lambda_hat))) if grid.n else 0.0
    return lambda_hat, residual


def _check_result(kernel, grid, trades, lam, x0, unique, gram=None) -> SolveResult:
    """Wrap a solved strategy, enforcing the certificate tolerances."""
    colsum_err = _maxabs(trades.sum(axis=0) + x0)
    if colsum_err > LIQUIDATION_TOL:
        raise ArithmeticError(f"liquidation constraint violated by {colsum_err:.3e}")
    if gram is None:
        gram = assemble_gram(kernel, grid)
    impact = (gram.blocks @ trades.ravel()).reshape(grid.n, -1)
    residual = float(np.max(np.abs(impact - lam)))
    if residual > RESIDUAL_REL_TOL * (1.0 + _maxabs(lam)):
        raise ArithmeticError(
            f"Lagrange residual {residual:.3e} exceeds tolerance; the solve is unreliable"
        )
    strategy = Strategy(trades, grid)
    return SolveResult(
        strategy=strategy,
        lam=np.asarray(lam, dtype=float),
        cost=0.5 * gram.quadratic_form(trades),
        unique=unique,
        residual=residual,
    )


def _kkt_solve_gram(gram_blocks: np.ndarray, n: int, k: int, x0: np.ndarray, method: str):
    """Solve the equality-constrained quadratic program on an assembled Gram.

    Stationarity and the liquidation constraint form one symmetric system
    ``[[Gram, A^T], [A, 0]] [xi; -lam] = [0; -x0]`` with ``A`` summing the
    trade vectors.  Strictly positive Grams go through an LU factorization
    (plus one iterative-refinement pass); singular-but-PSD Grams get the
    minimum-norm solution from a rank-revealing least-squares solve.
    """
    nk = n * k
    eigs = np.linalg.eigvalsh(gram_blocks)
    tol = PSD_REL_TOL * (1.0 + _maxabs(gram_blocks))
    if eigs[0] < -tol:
        vals, vecs = np.linalg.eigh(gram_blocks)
        raise UnboundedCostError(
            f"Gram matrix has eigenvalue {vals[0]:.3e}: cost unbounded below on this grid",
            direction=vecs[:, 0].reshape(n, k),
            min_eig=float(vals[0]),
        )
    strict = bool(eigs[0] > tol)

    A = np.tile(np.eye(k), n)
    M = np.zeros((nk + k, nk + k))
    M[:nk, :nk] = gram_blocks
    M[:nk, nk:] = A.T
    M[nk:, :nk] = A
    rhs = np.zeros(nk + k)
    rhs[nk:] = -np.asarray(x0, dtype=float)

    if method == "auto":
        method = "factor" if strict else "lstsq"
    if method == "factor":
        lu = scipy.linalg.lu_factor(M)
        sol = scipy.linalg.lu_solve(lu, rhs)
        sol += scipy.linalg.lu_solve(lu, rhs - M @ sol)
    elif method == "lstsq":
        sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
    else:
        raise ValueError("method must be 'auto', 'factor' or 'lstsq'")

    trades = sol[:nk].reshape(n, k)
    lam = -sol[nk:]
    return trades, lam, strict


def solve_kkt(kernel: DecayKernel, grid: TimeGrid, x0, method: str = "auto") -> SolveResult:
    """Optimal liquidation of ``x0`` on a grid by solving the KKT system.

    Raises :class:`UnboundedCostError` when the Gram is indefinite on the
    grid.  On a PSD-but-singular Gram the returned strategy is the
    minimum-norm optimizer and ``unique`` is False.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (kernel.dimension,):
        raise ValueError(f"x0 must have {kernel.dimension} components")
    gram = assemble_gram(kernel, grid)
    trades, lam, strict = _kkt_solve_gram(gram.blocks, grid.n, kernel.dimension, x0, method)
    return _check_result(kernel, grid, trades, lam, x0, unique=strict, gram=gram)


def solve_1d_exp(rate: float, grid: TimeGrid, y: float) -> np.ndarray:
    """Optimal single-asset liquidation of ``y`` under exponential decay.

    Closed form: with ``a_n = exp(-rate * (t_n - t_{n-1}))``, the optimal
    trades are ``eta_1 = lam / (1 + a_2)``,
    ``eta_n = (1/(1+a_n) - a_{n+1}/(1+a_{n+1})) lam`` in the interior, and
    ``eta_N = lam / (1 + a_N)``, where ``lam`` normalizes the total to -y.
    """
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    n = grid.n
    if n < 2:
        raise ValueError("the closed form needs at least two trade times")
    a = np.exp(-rate * np.diff(grid.times))  # a[j] = a_{j+2} in 1-based terms
    denom = 2.0 / (1.0 + a[0]) + np.sum((1.0 - a[1:]) / (1.0 + a[1:]))
    lam = -y / denom
    eta = np.empty(n)
    eta[0] = lam / (1.0 + a[0])
    if n > 2:
        eta[1:-1] = (1.0 / (1.0 + a[:-1]) - a[1:] / (1.0 + a[1:])) * lam
    eta[-1] = lam / (1.0 + a[-1])
    return eta


def solve_exp_closed_form(B, grid: TimeGrid, x0) -> SolveResult:
    """Optimal liquidation for the matrix-exponential kernel ``exp(-tB)``.

    Implements the closed form with ``A_n = exp(-(t_n - t_{n-1}) B)``:
    ``lam = -[2(I+A_2)^-1 + sum_n (I-A_n)(I+A_n)^-1]^-1 x0``,
    ``xi_1 = (I+A_2)^-1 lam``,
    ``xi_n = (I+A_n)^-1 lam - A_{n+1}(I+A_{n+1})^-1 lam``,
    ``xi_N = (I+A_N)^-1 lam``.  On an equidistant grid the simplified form
    ``lam = -(I+A)(N I - (N-2) A)^-1 x0`` with ``xi_i = (I-A) xi_1`` is used
    and checked to coincide with the general formulas to 1e-12.
    """
    B = np.asarray(B, dtype=float)
    kernel = MatrixExpKernel(B)  # validates symmetry and shape
    if np.min(kernel.eigenvalues) <= 1e-12:
        raise ValueError(
            f"B must be strictly positive definite; smallest eigenvalue "
            f"{np.min(kernel.eigenvalues):.3e}"
        )
    n, k = grid.n, kernel.dimension
    if n < 2:
        raise ValueError("the closed form needs at least two trade times")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    eye = np.eye(k)

    gaps = np.diff(grid.times)
    A = [scipy.linalg.expm(-h * B) for h in gaps]  # A[j] = A_{j+2}
    lead = [np.linalg.solve(eye + a, eye) for a in A]  # (I + A_n)^-1
    coeff = 2.0 * lead[0]
    for a, la in zip(A[1:], lead[1:]):
        coeff += (eye - a) @ la
    lam = -np.linalg.solve(coeff, x0)
    trades = np.empty((n, k))
    trades[0] = lead[0] @ lam
    for j in range(1, n - 1):
        trades[j] = lead[j - 1] @ lam - A[j] @ (lead[j] @ lam)
    trades[-1] = lead[-1] @ lam

    if np.max(np.abs(gaps - gaps[0])) <= 1e-12 * max(gaps[0], 1.0):
        a = A[0]
        xi1 = -np.linalg.solve(n * eye - (n - 2) * a, x0)
        lam_eq = (eye + a) @ xi1
        eq = np.empty_like(trades)
        eq[0] = xi1
        eq[1:-1] = ((eye - a) @ xi1)[None, :]
        eq[-1] = xi1
        gap = max(_maxabs(eq - trades), _maxabs(lam_eq - lam))
        if gap > 1e-12 * (1.0 + _maxabs(trades)):
            raise ArithmeticError(
                f"equidistant and general closed forms disagree by {gap:.3e}"
            )
        trades, lam = eq, lam_eq

    return _check_result(kernel, grid, trades, lam, x0, unique=True)


def _diagonal_frame(kernel: DecayKernel, sample_times, seed: int):
    """Rotation whose rows are common eigendirections, plus per-direction
    exponential rates when the family provides them (else None)."""
    if isinstance(kernel, MatrixExpKernel):
        return kernel.eigvecs.T, kernel.eigenvalues
    if isinstance(kernel, MatrixFunctionKernel) and isinstance(kernel.fn, ExpDecay):
        return kernel.eigvecs.T, kernel.fn.rate * kernel.eigenvalues
    if isinstance(kernel, DiagCongruenceKernel) and all(
        isinstance(g, ExpDecay) for g in kernel.decays
    ):
        return kernel.O, np.array([g.rate for g in kernel.decays])
    O, _ = simultaneous_diagonalize(kernel, sample_times, seed=seed)
    return O, None


def simultaneous_diagonalize(kernel: DecayKernel, sample_times, seed: int = 0):
    """Common orthogonal frame of a symmetric commuting kernel.

    Diagonalizes one random positive combination of the sampled kernel
    values (a generic combination splits shared eigenspaces) and verifies
    off-diagonal leakage at every sample time; one retry with fresh weights,
    then an error naming the worst offending time.  Returns ``(O, gs)``
    where ``G(t) = O^T diag(gs) O`` and ``gs[i]`` samples the i-th scalar
    decay over ``sample_times``.
    """
    sample_times = np.atleast_1d(np.asarray(sample_times, dtype=float))
    symmetric, commuting = check_structure(kernel, sample_times)
    if not (symmetric and commuting):
        raise ValueError(
            f"simultaneous diagonalization needs a symmetric commuting kernel "
            f"(symmetric={symmetric}, commuting={commuting})"
        )
    values = kernel.at_many(sample_times)
    norms = np.max(np.abs(values), axis=(1, 2))
    rng = np.random.default_rng(seed)
    worst_time, worst_gap = None, np.inf
    for _ in range(2):
        weights = rng.uniform(0.5, 1.5, size=values.shape[0])
        mix = np.einsum("t,tij->ij", weights, values)
        _, vecs = np.linalg.eigh(0.5 * (mix + mix.T))
        O = vecs.T
        rotated = np.einsum("ij,tjk,lk->til", O, values, O)
        off = rotated - rotated * np.eye(kernel.dimension)
        gaps = np.max(np.abs(off), axis=(1, 2))
        tols = 1e-9 * (1.0 + norms)
        if np.all(gaps <= tols):
            gs = np.einsum("tii->it", rotated)
            return O, gs
        i = int(np.argmax(gaps - tols))
        if gaps[i] < worst_gap:
            worst_gap, worst_time = gaps[i], float(sample_times[i])
    raise ArithmeticError(
        f"kernel does not diagonalize to tolerance; worst off-diagonal leakage "
        f"{worst_gap:.3e} at t={worst_time}"
    )


def _solve_1d_gram(gram1d: np.ndarray, y: float):
    """1D KKT solve on a scalar-kernel Gram; returns (eta, lam, strict)."""
    n = gram1d.shape[0]
    eta, lam, strict = _kkt_solve_gram(gram1d, n, 1, np.array([y]), "auto")
    return eta[:, 0], float(lam[0]), strict


def solve_commuting(kernel: DecayKernel, grid: TimeGrid, x0, seed: int = 0) -> SolveResult:
    """Optimal liquidation for a symmetric commuting kernel.

    Rotates the portfolio into the kernel's common eigenbasis, solves one
    single-asset problem per direction (closed form when the decay is
    exponential, a 1D KKT solve otherwise), and rotates back.  The cost is
    the sum of the single-asset costs.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n, k = grid.n, kernel.dimension
    O, rates = _diagonal_frame(kernel, grid.times, seed)

    lags = np.abs(grid.lags())
    rotated = np.einsum("ij,tjk,lk->til", O, kernel.tilde_many(lags.ravel()), O)
    diag = np.einsum("tii->ti", rotated).reshape(n, n, k)

    y = O @ x0
    trades_rot = np.empty((n, k))
    lam_rot = np.empty(k)
    total_cost = 0.0
    unique = True
    for i in range(k):
        gram1d = diag[:, :, i]
        eigs = np.linalg.eigvalsh(gram1d)
        tol = PSD_REL_TOL * (1.0 + _maxabs(gram1d))
        if eigs[0] < -tol:
            raise UnboundedCostError(
                f"decay component {i} is not positive definite on this grid "
                f"(eigenvalue {eigs[0]:.3e})",
                min_eig=float(eigs[0]),
            )
        strict = bool(eigs[0] > tol)
        if rates is not None and n >= 2:
            eta = solve_1d_exp(float(rates[i]), grid, float(y[i]))
            lam_i = float(
                np.mean(gram1d @ eta)
            )  # exact multiplier up to roundoff; certified below
        else:
            eta, lam_i, strict = _solve_1d_gram(gram1d, float(y[i]))
        trades_rot[:, i] = eta
        lam_rot[i] = lam_i
        total_cost += 0.5 * float(eta @ gram1d @ eta)
        unique = unique and strict

    trades = trades_rot @ O
    lam = O.T @ lam_rot
    result = _check_result(kernel, grid, trades, lam, x0, unique=unique)
    # the summed 1D costs and the full quadratic form agree to roundoff;
    # keep the summed value so the route stays independent of solve_kkt
    return SolveResult(result.strategy, result.lam, total_cost, result.unique, result.residual)


def basis_strategies(kernel: DecayKernel, grid: TimeGrid, seed: int = 0) -> BasisDecomposition:
    """Sign-constant optimal strategies along the kernel's eigendirections.

    For a symmetric, nonnegative, nonincreasing, convex, commuting kernel:
    liquidating one unit of eigendirection v_i optimally trades
    ``eta^i_k v_i`` with single-signed ``eta^i``; any portfolio written as
    ``sum alpha_i v_i`` is then liquidated optimally by the matching linear
    combination.
    """
    t_max = grid.span if grid.span > 0 else 1.0
    report = check_shape_properties(kernel, t_max=t_max, seed=seed)
    if not (report.symmetric and report.commuting):
        raise ValueError("basis strategies need a symmetric commuting kernel")
    sampled = []
    for name in ("nonnegative", "nonincreasing", "convex"):
        verdict = getattr(report, name)
        if verdict.value is not True:
            raise ValueError(f"basis strategies need a {name} kernel")
        if verdict.method == "sampled":
            sampled.append(name)
    if sampled:
        warnings.warn(
            f"shape properties {sampled} accepted from sampled evidence only",
            stacklevel=2,
        )

    n, k = grid.n, kernel.dimension
    O, rates = _diagonal_frame(kernel, grid.times, seed)
    lags = np.abs(grid.lags())
    rotated = np.einsum("ij,tjk,lk->til", O, kernel.tilde_many(lags.ravel()), O)
    diag = np.einsum("tii->ti", rotated).reshape(n, n, k)

    strategies = []
    for i in range(k):
        if rates is not None and n >= 2:
            eta = solve_1d_exp(float(rates[i]), grid, 1.0)
        elif n == 1:
            eta = np.array([-1.0])
        else:
            eta, _, _ = _solve_1d_gram(diag[:, :, i], 1.0)
        strategies.append(Strategy(np.outer(eta, O[i]), grid))
    return BasisDecomposition(vectors=O.copy(), strategies=tuple(strategies), rotation=O)


def solve_best(
    kernel: DecayKernel, grid: TimeGrid, x0, seed: int = 0, cross_check: bool = False
):
    """Dispatch to the best applicable solver.

    Precedence: matrix-exponential closed form, then the commuting-kernel
    route, then the generic KKT solve.  With ``cross_check=True`` the chosen
    route is verified against the KKT solve to 1e-8 in the max norm;
    disagreement raises with both strategies attached.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    result, route = None, "kkt"
    if grid.n >= 2:
        B = None
        if isinstance(kernel, MatrixExpKernel):
            B = kernel.B
        elif isinstance(kernel, MatrixFunctionKernel) and isinstance(kernel.fn, ExpDecay):
            B = kernel.fn.rate * kernel.B
        if B is not None and np.linalg.eigvalsh(0.5 * (B + B.T))[0] > 1e-12:
            result, route = solve_exp_closed_form(B, grid, x0), "closed_form"
    if result is None:
        try:
            sym, comm = check_structure(kernel, grid.times)
        except RuntimeError:
            sym = comm = False
        if sym and comm:
            try:
                result, route = solve_commuting(kernel, grid, x0, seed=seed), "commuting"
            except (ValueError, ArithmeticError):
                result = None
    if result is None:
        return solve_kkt(kernel, grid, x0), "kkt"

    if cross_check:
        reference = solve_kkt(kernel, grid, x0)
        gap = _maxabs(result.strategy.trades - reference.strategy.trades)
        if gap > 1e-8:
            err = ArithmeticError(
                f"solver cross-check failed: {route} and kkt disagree by {gap:.3e}"
            )
            err.results = (result, reference)
            raise err
    return result, route


def refine(
    kernel: DecayKernel,
    horizon: float,
    x0,
    max_levels: int,
    rel_tol: float = 0.0,
    seed: int = 0,
) -> RefineResult:
    """Approach the continuous-time optimum on dyadic equidistant grids.

    Solves on ``N = 2**level + 1`` points for ``level = 1..max_levels``;
    nested grids make the cost sequence nonincreasing, and refinement stops
    early once the relative cost drop falls below ``rel_tol``.  The finest
    Lagrange residual is the discrete counterpart of the continuous-time
    optimality condition.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if max_levels < 1:
        raise ValueError("need at least one refinement level")
    report = classify_positive_definite(kernel, seed=seed)
    if report.verdict == "not_pd":
        raise UnboundedCostError(
            "kernel is not positive definite; refinement has no limit",
            direction=None if report.witness is None else report.witness.trades,
            min_eig=report.min_eig,
        )
    levels = []
    finest = None
    previous = None
    for level in range(1, max_levels + 1):
        grid = equidistant_grid(horizon, 2**level + 1)
        finest, _ = solve_best(kernel, grid, x0, seed=seed)
        levels.append((grid.n, finest.cost))
        if previous is not None:
            if finest.cost > previous + 1e-10 * abs(previous):
                raise ArithmeticError(
                    f"cost increased under refinement: {previous!r} -> {finest.cost!r}"
                )
            drop = previous - finest.cost
            if drop < rel_tol * max(abs(previous), 1e-300):
                break
        previous = finest.cost
    return RefineResult(levels=tuple(levels), finest=finest)
