"""Matrix-valued decay kernels for multi-asset transient price impact.

A decay kernel is a function ``G : [0, inf) -> R^{KxK}``; ``G[i, j](t)`` is
the impact on the price of asset ``i``, a lag ``t`` after trading one unit
of asset ``j``.  The two-sided extension ``tilde`` mirrors the kernel to
negative lags by transposition and symmetrizes the value at lag 0; it is the
function that enters the execution-cost quadratic form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "ScalarFunction",
    "ExpDecay",
    "GaussianSquared",
    "LinearPolya",
    "Constant",
    "PowerCapped",
    "DecayKernel",
    "PermanentKernel",
    "MatrixExpKernel",
    "MatrixFunctionKernel",
    "DiagCongruenceKernel",
    "Exp2x2Kernel",
    "CrossExpKernel",
    "Linear2x2Kernel",
    "ClampedExpKernel",
    "JordanExpKernel",
    "ScalarTimesMatrixKernel",
    "LeftMultiplyKernel",
    "CongruenceKernel",
    "PlusTemporaryKernel",
    "make_matrix_function_kernel",
    "transform_kernel",
    "check_structure",
    "check_shape_properties",
    "analytic_shape_flags",
    "ShapeWitness",
    "Verdict",
    "PropertyReport",
]

SYM_TOL = 1e-10
PSD_EIG_FLOOR = -1e-10
MAX_CONDITION = 1e12
SHAPE_TOL = 1e-9


def _maxabs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def _as_square(M, name: str, k: Optional[int] = None) -> np.ndarray:
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {M.shape}")
    if k is not None and M.shape[0] != k:
        raise ValueError(f"{name} must be {k}x{k}, got {M.shape[0]}x{M.shape[0]}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} must have finite entries")
    return M


def _check_symmetric(M: np.ndarray, name: str) -> None:
    if _maxabs(M - M.T) > SYM_TOL * (1.0 + _maxabs(M)):
        raise ValueError(f"{name} must be symmetric")


def _symmetric_psd_eig(B: np.ndarray, name: str):
    """Eigendecomposition of a symmetric PSD matrix.

    Rejects asymmetry beyond ``SYM_TOL`` and eigenvalues below
    ``PSD_EIG_FLOOR``; surviving tiny negative eigenvalues are clamped to 0.
    """
    _check_symmetric(B, name)
    vals, vecs = np.linalg.eigh(0.5 * (B + B.T))
    if vals[0] < PSD_EIG_FLOOR:
        raise ValueError(
            f"{name} must be positive semidefinite; smallest eigenvalue {vals[0]:.3e}"
        )
    return np.maximum(vals, 0.0), vecs


# ---------------------------------------------------------------------------
# scalar decay profiles
# ---------------------------------------------------------------------------


class ScalarFunction:
    """Scalar decay profile ``g(x)`` for ``x >= 0``.

    Subclasses carry analytic flags (monotonicity, convexity and whether
    ``t -> g(|t|)`` is a positive definite function) that downstream
    classification may rely on without sampling.  ``positive_definite`` is
    ``None`` when unknown.
    """

    tag: str
    nonincreasing: bool
    convex: bool
    nonconstant: bool
    positive_definite: Optional[bool]
    strictly_positive_definite: bool

    def __call__(self, x):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ExpDecay(ScalarFunction):
    """``x -> exp(-rate * x)``."""

    rate: float
    tag = "exp_decay"
    nonincreasing = True
    convex = True
    nonconstant = True
    positive_definite = True
    strictly_positive_definite = True

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError("exp_decay rate must be positive")

    def __call__(self, x):
        return np.exp(-self.rate * np.asarray(x, dtype=float))

    def to_dict(self):
        return {"tag": self.tag, "rate": self.rate}


@dataclass(frozen=True)
class GaussianSquared(ScalarFunction):
    """``x -> exp(-x**2)``; nonincreasing but not convex on [0, inf)."""

    tag = "gaussian_sq"
    nonincreasing = True
    convex = False
    nonconstant = True
    positive_definite = True
    strictly_positive_definite = True

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-(x * x))

    def to_dict(self):
        return {"tag": self.tag}


@dataclass(frozen=True)
class LinearPolya(ScalarFunction):
    """``x -> max(level - slope * x, 0)``: linear decay hitting zero."""

    level: float
    slope: float
    tag = "linear_polya"
    nonincreasing = True
    convex = True
    nonconstant = True
    positive_definite = True
    strictly_positive_definite = True

    def __post_init__(self):
        if not (self.level > 0 and self.slope > 0):
            raise ValueError("linear_polya needs positive level and slope")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.maximum(self.level - self.slope * x, 0.0)

    def to_dict(self):
        return {"tag": self.tag, "level": self.level, "slope": self.slope}


@dataclass(frozen=True)
class Constant(ScalarFunction):
    """``x -> value`` with ``value >= 0``."""

    value: float
    tag = "constant"
    nonincreasing = True
    convex = True
    nonconstant = False
    positive_definite = True
    strictly_positive_definite = False

    def __post_init__(self):
        if not (self.value >= 0 and math.isfinite(self.value)):
            raise ValueError("constant value must be nonnegative")

    def __call__(self, x):
        return np.full(np.asarray(x, dtype=float).shape, self.value)

    def to_dict(self):
        return {"tag": self.tag, "value": self.value}


@dataclass(frozen=True)
class PowerCapped(ScalarFunction):
    """``x -> min(x**-exponent, cap)``: capped power-law decay.

    Nonincreasing but not convex (downward derivative jump where the cap
    releases), and not known to be positive definite in general.
    """

    exponent: float
    cap: float
    tag = "power_capped"
    nonincreasing = True
    convex = False
    nonconstant = True
    positive_definite = None
    strictly_positive_definite = False

    def __post_init__(self):
        if not (self.exponent > 0 and self.cap > 0):
            raise ValueError("power_capped needs positive exponent and cap")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            raw = np.where(x > 0, x, np.inf) ** (-self.exponent)
        return np.minimum(raw, self.cap)

    def to_dict(self):
        return {"tag": self.tag, "exponent": self.exponent, "cap": self.cap}


_SCALAR_TAGS = {
    "exp_decay": lambda d: ExpDecay(rate=float(d["rate"])),
    "gaussian_sq": lambda d: GaussianSquared(),
    "linear_polya": lambda d: LinearPolya(level=float(d["level"]), slope=float(d["slope"])),
    "constant": lambda d: Constant(value=float(d["value"])),
    "power_capped": lambda d: PowerCapped(exponent=float(d["exponent"]), cap=float(d["cap"])),
}


def scalar_function_from_dict(d: dict) -> ScalarFunction:
    try:
        tag = d["tag"]
        factory = _SCALAR_TAGS[tag]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"unknown scalar function description: {d!r}") from exc
    return factory(d)


# ---------------------------------------------------------------------------
# decay kernels
# ---------------------------------------------------------------------------


class DecayKernel:
    """Base class; immutable after construction and safe to share."""

    dimension: int
    family: str

    def _values(self, ts: np.ndarray) -> np.ndarray:
        """Kernel values at nonnegative lags, shape (len(ts), K, K)."""
        raise NotImplementedError

    def at_many(self, ts) -> np.ndarray:
        """``G(t)`` for an array of lags ``t >= 0``, shape (m, K, K)."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if ts.size and np.min(ts) < 0:
            raise ValueError("decay kernels are defined for lags t >= 0")
        return self._values(ts)

    def at(self, t: float) -> np.ndarray:
        """``G(t)`` for a single lag ``t >= 0``."""
        return self.at_many([float(t)])[0]

    def tilde_many(self, ts) -> np.ndarray:
        """Two-sided extension at arbitrary lags, shape (m, K, K).

        ``G(t)`` for ``t > 0``, ``G(-t)^T`` for ``t < 0`` and the
        symmetrized value (plus any temporary jump) at ``t == 0``.
        """
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = self._values(np.abs(ts))
        neg = ts < 0
        if np.any(neg):
            out[neg] = np.transpose(out[neg], (0, 2, 1))
        zero = ts == 0
        if np.any(zero):
            g0 = out[zero]
            out[zero] = 0.5 * (g0 + np.transpose(g0, (0, 2, 1)))
        return out

    def tilde(self, t: float) -> np.ndarray:
        return self.tilde_many([float(t)])[0]

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(K={self.dimension})"


class PermanentKernel(DecayKernel):
    """Constant kernel ``G(t) = G0``: purely permanent impact."""

    family = "permanent"

    def __init__(self, G0):
        G0 = _as_square(G0, "G0")
        G0.setflags(write=False)
        self.G0 = G0
        self.dimension = G0.shape[0]

    def _values(self, ts):
        return np.broadcast_to(self.G0, (ts.size, *self.G0.shape)).copy()

    def to_dict(self):
        return {"family": self.family, "G0": self.G0.tolist()}


class _EigenBasisKernel(DecayKernel):
    """Kernels of the form ``G(t) = sum_i g_i(t) u_i u_i^T`` with
    orthonormal ``u_i`` (stored as columns of ``eigvecs``)."""

    eigvecs: np.ndarray  # (K, K), columns are the common eigenvectors

    def _diagonals(self, ts: np.ndarray) -> np.ndarray:
        """Per-eigendirection decay values, shape (m, K)."""
        raise NotImplementedError

    def _values(self, ts):
        d = self._diagonals(ts)
        return np.einsum("ij,tj,kj->tik", self.eigvecs, d, self.eigvecs)


class MatrixExpKernel(_EigenBasisKernel):
    """``G(t) = exp(-t B)`` for symmetric positive semidefinite ``B``."""

    family = "matrix_exp"

    def __init__(self, B):
        B = _as_square(B, "B")
        self.eigenvalues, self.eigvecs = _symmetric_psd_eig(B, "B")
        B.setflags(write=False)
        self.B = B
        self.dimension = B.shape[0]

    def _diagonals(self, ts):
        return np.exp(-np.outer(ts, self.eigenvalues))

    def to_dict(self):
        return {"family": self.family, "B": self.B.tolist()}


class MatrixFunctionKernel(_EigenBasisKernel):
    """``G(t) = g(t B)`` through the spectral decomposition of ``B``.

    With ``B = O^T diag(rho) O`` symmetric PSD, ``G(t)`` applies the scalar
    profile to each eigenvalue: ``O^T diag(g(t rho_1), ..., g(t rho_K)) O``.
    """

    family = "matrix_function"

    def __init__(self, B, fn: ScalarFunction):
        B = _as_square(B, "B")
        self.eigenvalues, self.eigvecs = _symmetric_psd_eig(B, "B")
        B.setflags(write=False)
        self.B = B
        self.fn = fn
        self.dimension = B.shape[0]

    def _diagonals(self, ts):
        return self.fn(np.outer(ts, self.eigenvalues))

    def to_dict(self):
        return {"family": self.family, "B": self.B.tolist(), "scalar_fn": self.fn.to_dict()}


class DiagCongruenceKernel(_EigenBasisKernel):
    """``G(t) = O^T diag(g_1(t), ..., g_K(t)) O`` for orthogonal ``O``."""

    family = "diag_congruence"

    def __init__(self, O, decays: Sequence[ScalarFunction]):
        O = _as_square(O, "O")
        k = O.shape[0]
        if _maxabs(O @ O.T - np.eye(k)) > 1e-9:
            raise ValueError("O must be orthogonal")
        if len(decays) != k:
            raise ValueError(f"need {k} scalar decays, got {len(decays)}")
        O.setflags(write=False)
        self.O = O
        self.eigvecs = O.T
        self.decays = tuple(decays)
        self.dimension = k

    def _diagonals(self, ts):
        return np.stack([g(ts) for g in self.decays], axis=1)

    def to_dict(self):
        return {
            "family": self.family,
            "O": self.O.tolist(),
            "decays": [g.to_dict() for g in self.decays],
        }


class Exp2x2Kernel(DecayKernel):
    """Coordinate-wise exponential 2x2 kernel ``G_ij(t) = a_ij exp(-b_ij t)``."""

    family = "exp2x2"

    def __init__(self, a11, a12, a21, a22, b11, b12, b21, b22):
        a = np.array([[a11, a12], [a21, a22]], dtype=float)
        b = np.array([[b11, b12], [b21, b22]], dtype=float)
        if not (np.all(a > 0) and np.all(b > 0) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("exp2x2 parameters must all be positive reals")
        a.setflags(write=False)
        b.setflags(write=False)
        self.a = a
        self.b = b
        self.dimension = 2

    def _values(self, ts):
        return self.a * np.exp(-ts[:, None, None] * self.b)

    def to_dict(self):
        a, b = self.a, self.b
        return {
            "family": self.family,
            "a11": a[0, 0], "a12": a[0, 1], "a21": a[1, 0], "a22": a[1, 1],
            "b11": b[0, 0], "b12": b[0, 1], "b21": b[1, 0], "b22": b[1, 1],
        }


class CrossExpKernel(DecayKernel):
    """Symmetric 2x2 kernel with own-impact rate ``kappa`` and cross-impact
    ``rho * exp(-kappa_tilde * t)`` off the diagonal."""

    family = "cross_exp"

    def __init__(self, kappa, kappa_tilde, rho):
        for name, v in (("kappa", kappa), ("kappa_tilde", kappa_tilde), ("rho", rho)):
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a positive real")
        self.kappa = float(kappa)
        self.kappa_tilde = float(kappa_tilde)
        self.rho = float(rho)
        self.dimension = 2

    def _values(self, ts):
        own = np.exp(-self.kappa * ts)
        cross = self.rho * np.exp(-self.kappa_tilde * ts)
        out = np.empty((ts.size, 2, 2))
        out[:, 0, 0] = own
        out[:, 1, 1] = own
        out[:, 0, 1] = cross
        out[:, 1, 0] = cross
        return out

    def to_dict(self):
        return {
            "family": self.family,
            "kappa": self.kappa,
            "kappa_tilde": self.kappa_tilde,
            "rho": self.rho,
        }


class Linear2x2Kernel(DecayKernel):
    """Coordinate-wise linear decay ``G_ij(t) = max(a_ij - b_ij t, 0)``."""

    family = "linear2x2"

    def __init__(self, a11, a12, a21, a22, b11, b12, b21, b22):
        a = np.array([[a11, a12], [a21, a22]], dtype=float)
        b = np.array([[b11, b12], [b21, b22]], dtype=float)
        if not (np.all(a > 0) and np.all(b > 0) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("linear2x2 parameters must all be positive reals")
        a.setflags(write=False)
        b.setflags(write=False)
        self.a = a
        self.b = b
        self.dimension = 2

    def _values(self, ts):
        return np.maximum(self.a - ts[:, None, None] * self.b, 0.0)

    def to_dict(self):
        a, b = self.a, self.b
        return {
            "family": self.family,
            "a11": a[0, 0], "a12": a[0, 1], "a21": a[1, 0], "a22": a[1, 1],
            "b11": b[0, 0], "b12": b[0, 1], "b21": b[1, 0], "b22": b[1, 1],
        }


class ClampedExpKernel(DecayKernel):
    """Fixed nonsymmetric 2x2 kernel, exponential in ``min(t, 1)``.

    Nonnegative, nonincreasing and convex, yet admits grids whose cost
    quadratic form goes negative; the defect sits at very low frequencies,
    i.e. it only shows on long-span grids.
    """

    family = "clamped_exp"

    def __init__(self):
        self.dimension = 2

    def _values(self, ts):
        tau = np.minimum(ts, 1.0)
        e = np.exp(-tau)
        out = np.empty((ts.size, 2, 2))
        out[:, 0, 0] = e
        out[:, 1, 1] = e
        out[:, 0, 1] = 0.125 * np.exp(-2.0 * tau)
        out[:, 1, 0] = 0.125 * np.exp(-3.0 * tau)
        return out

    def to_dict(self):
        return {"family": self.family}


class JordanExpKernel(DecayKernel):
    """``G(t) = exp(-t J)`` for the nonsymmetric Jordan block
    ``J = [[b, 1], [0, b]]``: equals ``exp(-tb) * [[1, -t], [0, 1]]``."""

    family = "jordan_exp"

    def __init__(self, b):
        if not (b > 0 and math.isfinite(b)):
            raise ValueError("b must be a positive real")
        self.b = float(b)
        self.dimension = 2

    def _values(self, ts):
        e = np.exp(-self.b * ts)
        out = np.zeros((ts.size, 2, 2))
        out[:, 0, 0] = e
        out[:, 1, 1] = e
        out[:, 0, 1] = -ts * e
        return out

    def to_dict(self):
        return {"family": self.family, "b": self.b}


class ScalarTimesMatrixKernel(DecayKernel):
    """Separable kernel ``G(t) = g(t) * L``."""

    family = "scalar_times_matrix"

    def __init__(self, g: ScalarFunction, L):
        L = _as_square(L, "L")
        L.setflags(write=False)
        self.g = g
        self.L = L
        self.dimension = L.shape[0]

    def _values(self, ts):
        return self.g(ts)[:, None, None] * self.L

    def to_dict(self):
        return {"family": self.family, "g": self.g.to_dict(), "L": self.L.tolist()}


class LeftMultiplyKernel(DecayKernel):
    """``G(t) = L @ G_inner(t)``."""

    family = "left_multiply"

    def __init__(self, L, inner: DecayKernel):
        L = _as_square(L, "L", inner.dimension)
        L.setflags(write=False)
        self.L = L
        self.inner = inner
        self.dimension = inner.dimension

    def _values(self, ts):
        return self.L @ self.inner._values(ts)

    def to_dict(self):
        return {"family": self.family, "L": self.L.tolist(), "inner": self.inner.to_dict()}


class CongruenceKernel(DecayKernel):
    """``G(t) = L^T @ G_inner(t) @ L`` for invertible ``L``."""

    family = "congruence"

    def __init__(self, L, inner: DecayKernel):
        L = _as_square(L, "L", inner.dimension)
        cond = np.linalg.cond(L)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise ValueError(f"L must be invertible; condition number {cond:.3e}")
        L.setflags(write=False)
        self.L = L
        self.condition_number = float(cond)
        self.inner = inner
        self.dimension = inner.dimension

    def _values(self, ts):
        return self.L.T @ self.inner._values(ts) @ self.L

    def to_dict(self):
        return {"family": self.family, "L": self.L.tolist(), "inner": self.inner.to_dict()}


class PlusTemporaryKernel(DecayKernel):
    """Inner kernel plus a temporary-impact jump ``H0`` at lag 0 only."""

    family = "plus_temporary"

    def __init__(self, H0, inner: DecayKernel):
        H0 = _as_square(H0, "H0", inner.dimension)
        sym_eigs = np.linalg.eigvalsh(0.5 * (H0 + H0.T))
        if sym_eigs[0] < PSD_EIG_FLOOR:
            raise ValueError(
                f"H0 must be a nonnegative matrix; symmetric part has eigenvalue {sym_eigs[0]:.3e}"
            )
        H0.setflags(write=False)
        self.H0 = H0
        self.inner = inner
        self.dimension = inner.dimension

    def _values(self, ts):
        out = self.inner._values(ts)
        zero = ts == 0
        if np.any(zero):
            out[zero] += self.H0
        return out

    def to_dict(self):
        return {"family": self.family, "H0": self.H0.tolist(), "inner": self.inner.to_dict()}


def make_matrix_function_kernel(B, fn: ScalarFunction) -> MatrixFunctionKernel:
    """Build ``G(t) = g(t B)`` from a symmetric PSD ``B`` and scalar profile."""
    return MatrixFunctionKernel(B, fn)


_TRANSFORM_MODES = {
    "scalar_times_matrix",
    "left_multiply",
    "congruence",
    "plus_temporary",
}


def transform_kernel(mode: str, args: dict, inner: Optional[DecayKernel] = None) -> DecayKernel:
    """Wrap ``inner`` with one of the kernel transformations.

    ``scalar_times_matrix`` stands alone (the result ignores ``inner``); the
    other modes require it.
    """
    if mode not in _TRANSFORM_MODES:
        raise ValueError(f"unknown transform mode {mode!r}")
    if mode == "scalar_times_matrix":
        return ScalarTimesMatrixKernel(args["g"], args["L"])
    if inner is None:
        raise ValueError(f"transform {mode!r} requires an inner kernel")
    if mode == "left_multiply":
        return LeftMultiplyKernel(args["L"], inner)
    if mode == "congruence":
        return CongruenceKernel(args["L"], inner)
    return PlusTemporaryKernel(args["H0"], inner)


_KERNEL_FAMILIES = {}


def kernel_from_dict(d: dict) -> DecayKernel:
    """Rebuild a kernel from its serialized description."""
    try:
        family = d["family"]
        factory = _KERNEL_FAMILIES[family]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"unknown kernel description: {d!r}") from exc
    return factory(d)


_KERNEL_FAMILIES.update(
    {
        "permanent": lambda d: PermanentKernel(d["G0"]),
        "matrix_exp": lambda d: MatrixExpKernel(d["B"]),
        "matrix_function": lambda d: MatrixFunctionKernel(
            d["B"], scalar_function_from_dict(d["scalar_fn"])
        ),
        "diag_congruence": lambda d: DiagCongruenceKernel(
            d["O"], [scalar_function_from_dict(g) for g in d["decays"]]
        ),
        "exp2x2": lambda d: Exp2x2Kernel(
            d["a11"], d["a12"], d["a21"], d["a22"], d["b11"], d["b12"], d["b21"], d["b22"]
        ),
        "cross_exp": lambda d: CrossExpKernel(d["kappa"], d["kappa_tilde"], d["rho"]),
        "linear2x2": lambda d: Linear2x2Kernel(
            d["a11"], d["a12"], d["a21"], d["a22"], d["b11"], d["b12"], d["b21"], d["b22"]
        ),
        "clamped_exp": lambda d: ClampedExpKernel(),
        "jordan_exp": lambda d: JordanExpKernel(d["b"]),
        "scalar_times_matrix": lambda d: ScalarTimesMatrixKernel(
            scalar_function_from_dict(d["g"]), d["L"]
        ),
        "left_multiply": lambda d: LeftMultiplyKernel(d["L"], kernel_from_dict(d["inner"])),
        "congruence": lambda d: CongruenceKernel(d["L"], kernel_from_dict(d["inner"])),
        "plus_temporary": lambda d: PlusTemporaryKernel(d["H0"], kernel_from_dict(d["inner"])),
    }
)


# ---------------------------------------------------------------------------
# structure checks: symmetry and the commuting property
# ---------------------------------------------------------------------------


def _isclose(x, y) -> bool:
    return math.isclose(x, y, rel_tol=1e-12, abs_tol=1e-14)


def _structure_analytic(kernel: DecayKernel):
    """(symmetric, commuting) where known in closed form, else None."""
    if isinstance(kernel, (CrossExpKernel, MatrixExpKernel, MatrixFunctionKernel, DiagCongruenceKernel)):
        return True, True
    if isinstance(kernel, Exp2x2Kernel):
        a, b = kernel.a, kernel.b
        symmetric = _isclose(a[0, 1], a[1, 0]) and _isclose(b[0, 1], b[1, 0])
        all_rates_equal = all(_isclose(b.flat[0], x) for x in b.flat[1:])
        commuting = all_rates_equal or (
            _isclose(b[0, 0], b[1, 1])
            and _isclose(b[0, 1], b[1, 0])
            and _isclose(a[0, 0], a[1, 1])
        )
        return symmetric, commuting
    if isinstance(kernel, PermanentKernel):
        return _maxabs(kernel.G0 - kernel.G0.T) <= SYM_TOL * (1.0 + _maxabs(kernel.G0)), True
    if isinstance(kernel, JordanExpKernel):
        # exp(-tJ) matrices are upper-triangular Toeplitz, hence commute
        return False, True
    if isinstance(kernel, ClampedExpKernel):
        return False, False
    if isinstance(kernel, ScalarTimesMatrixKernel):
        sym = _maxabs(kernel.L - kernel.L.T) <= SYM_TOL * (1.0 + _maxabs(kernel.L))
        return sym, True
    return None


def _structure_sampled(values: np.ndarray):
    norms = np.max(np.abs(values), axis=(1, 2))
    asym = np.max(np.abs(values - np.transpose(values, (0, 2, 1))), axis=(1, 2))
    sym = bool(np.all(asym <= SYM_TOL * (1.0 + norms)))

    commuting = True
    m = values.shape[0]
    for start in range(0, m, 64):  # chunked so the pair tensor stays small
        block = values[start : start + 64]
        prod = np.einsum("aij,bjk->abik", block, values)
        prod_rev = np.einsum("bij,ajk->abik", values, block)
        gap = np.max(np.abs(prod - prod_rev), axis=(2, 3))
        tol = SYM_TOL * (1.0 + np.outer(norms[start : start + 64], norms))
        if np.any(gap > tol):
            commuting = False
            break
    return sym, commuting


def check_structure(kernel: DecayKernel, sample_times) -> tuple:
    """Decide whether the kernel is symmetric and commuting.

    Families with a closed-form answer return it directly; a sampled check
    over ``sample_times`` backs it up (an analytic "yes" contradicted by a
    sampled violation raises, since that indicates a numerical breakdown).
    Other kernels are decided purely by sampling.
    """
    sample_times = np.asarray(sample_times, dtype=float)
    if sample_times.size == 0:
        raise ValueError("sample_times must be nonempty")
    if np.min(sample_times) < 0:
        raise ValueError("sample_times must be nonnegative")
    values = kernel.at_many(sample_times)
    sym_sampled, comm_sampled = _structure_sampled(values)
    analytic = _structure_analytic(kernel)
    if analytic is None:
        return sym_sampled, comm_sampled
    sym, comm = analytic
    if (sym and not sym_sampled) or (comm and not comm_sampled):
        raise RuntimeError(
            f"analytic structure verdict ({sym}, {comm}) contradicted by sampling "
            f"({sym_sampled}, {comm_sampled}) for family {kernel.family!r}"
        )
    return sym, comm


# ---------------------------------------------------------------------------
# shape properties: nonnegative / nonincreasing / convex quadratic forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShapeWitness:
    """Concrete violation: lag(s) and a direction whose quadratic form
    breaks the property (for nonconstancy: a direction whose form is flat)."""

    times: tuple
    direction: np.ndarray


@dataclass(frozen=True)
class Verdict:
    value: Optional[bool]  # True / False / None (undetermined)
    method: str  # "analytic" or "sampled"
    witness: Optional[ShapeWitness] = None


@dataclass(frozen=True)
class PropertyReport:
    symmetric: bool
    commuting: bool
    nonnegative: Verdict
    nonincreasing: Verdict
    convex: Verdict
    nonconstant_forms: Verdict


def _direction_set(k: int, n_directions: int, rng) -> np.ndarray:
    """Axes, all (e_i +- e_j)/sqrt(2) pairs, and random unit directions."""
    rows = [np.eye(k)]
    for i in range(k):
        for j in range(i + 1, k):
            for sign in (1.0, -1.0):
                v = np.zeros(k)
                v[i] = 1.0
                v[j] = sign
                rows.append((v / np.sqrt(2.0))[None, :])
    if n_directions > 0:
        x = rng.standard_normal((n_directions, k))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        rows.append(x)
    return np.vstack(rows)


def _sampled_shape_verdicts(kernel, ts, directions):
    """Falsification-only checks on an equidistant lag grid."""
    values = kernel.at_many(ts)
    sym_values = 0.5 * (values + np.transpose(values, (0, 2, 1)))

    # nonnegativity through the symmetric part, one tolerance per lag
    eigs = np.linalg.eigvalsh(sym_values)
    norms = np.max(np.abs(values), axis=(1, 2))
    bad = eigs[:, 0] < -SHAPE_TOL * (1.0 + norms)
    if np.any(bad):
        i = int(np.argmin(eigs[:, 0] + SHAPE_TOL * (1.0 + norms)))
        vecs = np.linalg.eigh(sym_values[i])[1]
        nonneg = Verdict(False, "sampled", ShapeWitness((float(ts[i]),), vecs[:, 0]))
    else:
        nonneg = Verdict(True, "sampled")

    forms = np.einsum("di,tij,dj->dt", directions, values, directions)
    tol = SHAPE_TOL * (1.0 + np.max(np.abs(forms), axis=1))

    diffs = np.diff(forms, axis=1)
    viol = diffs > tol[:, None]
    if np.any(viol):
        d, t = np.unravel_index(np.argmax(diffs - tol[:, None]), diffs.shape)
        noninc = Verdict(
            False, "sampled", ShapeWitness((float(ts[t]), float(ts[t + 1])), directions[d])
        )
    else:
        noninc = Verdict(True, "sampled")

    second = np.diff(forms, n=2, axis=1)
    viol = second < -tol[:, None]
    if np.any(viol):
        d, t = np.unravel_index(np.argmin(second + tol[:, None]), second.shape)
        convex = Verdict(
            False,
            "sampled",
            ShapeWitness((float(ts[t]), float(ts[t + 1]), float(ts[t + 2])), directions[d]),
        )
    else:
        convex = Verdict(True, "sampled")

    ranges = np.max(forms, axis=1) - np.min(forms, axis=1)
    flat = ranges <= tol
    if np.any(flat):
        d = int(np.argmin(ranges - tol))
        nonconst = Verdict(False, "sampled", ShapeWitness(tuple(ts), directions[d]))
    else:
        nonconst = Verdict(True, "sampled")

    return nonneg, noninc, convex, nonconst


def _search_shape_witness(kernel, prop: str, t_max: float) -> Optional[ShapeWitness]:
    """Locate a concrete violation of a shape property known to fail.

    Scans increasingly long, dense lag grids; directions come from the
    eigenvectors of the relevant (difference) matrices, so any violation
    visible in double precision is found.  Returns None if the violation
    lies beyond floating-point range.
    """
    floor = 1e-13
    for span in (t_max, 4.0 * t_max, 32.0 * t_max, 256.0 * t_max):
        ts = np.linspace(0.0, span, 4097)
        values = kernel.at_many(ts)
        sym = 0.5 * (values + np.transpose(values, (0, 2, 1)))
        if prop == "nonnegative":
            eigs = np.linalg.eigvalsh(sym)
            i = int(np.argmin(eigs[:, 0]))
            if eigs[i, 0] < -floor * (1.0 + _maxabs(values[i])):
                vec = np.linalg.eigh(sym[i])[1][:, 0]
                return ShapeWitness((float(ts[i]),), vec)
        elif prop == "nonincreasing":
            d = sym[1:] - sym[:-1]
            eigs = np.linalg.eigvalsh(d)
            i = int(np.argmax(eigs[:, -1]))
            if eigs[i, -1] > floor * (1.0 + _maxabs(values[i])):
                vec = np.linalg.eigh(d[i])[1][:, -1]
                return ShapeWitness((float(ts[i]), float(ts[i + 1])), vec)
        elif prop == "convex":
            d2 = sym[:-2] - 2.0 * sym[1:-1] + sym[2:]
            eigs = np.linalg.eigvalsh(d2)
            i = int(np.argmin(eigs[:, 0]))
            if eigs[i, 0] < -floor * (1.0 + _maxabs(values[i])):
                vec = np.linalg.eigh(d2[i])[1][:, 0]
                return ShapeWitness((float(ts[i]), float(ts[i + 1]), float(ts[i + 2])), vec)
    return None


def analytic_shape_flags(kernel: DecayKernel) -> Optional[dict]:
    """Closed-form nonnegative/nonincreasing/convex answers, when available.

    Covers the coordinate-wise exponential and linear 2x2 families and the
    simultaneously diagonalizable families (whose shape properties hold
    exactly when every scalar decay on the diagonal has them).  Returns None
    for kernels that have to be sampled.
    """
    if isinstance(kernel, (Exp2x2Kernel, CrossExpKernel)):
        if isinstance(kernel, CrossExpKernel):
            a = np.array([[1.0, kernel.rho], [kernel.rho, 1.0]])
            b = np.array(
                [[kernel.kappa, kernel.kappa_tilde], [kernel.kappa_tilde, kernel.kappa]]
            )
        else:
            a, b = kernel.a, kernel.b
        rates_ok = min(b[0, 1], b[1, 0]) >= 0.5 * (b[0, 0] + b[1, 1])
        return {
            "nonnegative": rates_ok
            and 0.25 * (a[0, 1] + a[1, 0]) ** 2 <= a[0, 0] * a[1, 1],
            "nonincreasing": rates_ok
            and 0.25 * (a[0, 1] * b[0, 1] + a[1, 0] * b[1, 0]) ** 2
            <= a[0, 0] * b[0, 0] * a[1, 1] * b[1, 1],
            "convex": rates_ok
            and 0.25 * (a[0, 1] * b[0, 1] ** 2 + a[1, 0] * b[1, 0] ** 2) ** 2
            <= a[0, 0] * b[0, 0] ** 2 * a[1, 1] * b[1, 1] ** 2,
        }

    if isinstance(kernel, Linear2x2Kernel):
        a, b = kernel.a, kernel.b
        ratios = a / b
        ratios_ok = max(ratios[0, 1], ratios[1, 0]) <= min(ratios[0, 0], ratios[1, 1])
        # The quadratic form t -> x^T G(t) x is piecewise linear with a
        # slope jump of sum b_ij x_i x_j at each kink a_ij / b_ij, so
        # convexity holds iff at every distinct kink location the jump
        # matrix is nonnegative.
        groups = {}
        for i in range(2):
            for j in range(2):
                for r in groups:
                    if _isclose(ratios[i, j], r):
                        groups[r][i, j] += b[i, j]
                        break
                else:
                    m = np.zeros((2, 2))
                    m[i, j] = b[i, j]
                    groups[ratios[i, j]] = m
        return {
            "nonnegative": ratios_ok
            and 0.25 * (a[0, 1] + a[1, 0]) ** 2 <= a[0, 0] * a[1, 1],
            "nonincreasing": ratios_ok
            and 0.25 * (b[0, 1] + b[1, 0]) ** 2 <= b[0, 0] * b[1, 1],
            "convex": all(
                np.linalg.eigvalsh(0.5 * (m + m.T))[0] >= 0.0 for m in groups.values()
            ),
        }

    if isinstance(kernel, MatrixExpKernel):
        return {"nonnegative": True, "nonincreasing": True, "convex": True}
    if isinstance(kernel, MatrixFunctionKernel):
        # zero-rate eigendirections contribute constants, which have all
        # three properties regardless of the profile
        active = bool(np.any(kernel.eigenvalues > 1e-12))
        return {
            "nonnegative": True,
            "nonincreasing": kernel.fn.nonincreasing or not active,
            "convex": kernel.fn.convex or not active,
        }
    if isinstance(kernel, DiagCongruenceKernel):
        return {
            "nonnegative": True,
            "nonincreasing": all(g.nonincreasing for g in kernel.decays),
            "convex": all(g.convex for g in kernel.decays),
        }
    return None


def _flags_to_verdicts(kernel, flags, t_max):
    out = []
    for prop in ("nonnegative", "nonincreasing", "convex"):
        if flags[prop]:
            out.append(Verdict(True, "analytic"))
        else:
            out.append(Verdict(False, "analytic", _search_shape_witness(kernel, prop, t_max)))
    return tuple(out)


def check_shape_properties(
    kernel: DecayKernel,
    t_max: float,
    n_samples: int = 400,
    n_directions: int = 16,
    seed: int = 0,
    method: str = "auto",
) -> PropertyReport:
    """Check nonnegativity, monotonicity, convexity and nonconstancy.

    The three coordinate-wise 2x2 families get exact analytic verdicts (with
    a numerically located witness when a property fails); everything else is
    decided by sampling on an equidistant lag grid over ``[0, t_max]`` with
    the direction set of the report.  Sampled verdicts are falsifiable only:
    ``True`` means "no violation found".  ``method="sampled"`` forces the
    sampled path for any family.
    """
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    if n_samples < 3:
        raise ValueError("need at least 3 lag samples")
    rng = np.random.default_rng(seed)
    ts = np.linspace(0.0, t_max, n_samples)
    directions = _direction_set(kernel.dimension, n_directions, rng)
    # pairwise commutator sampling is quadratic in the sample count; a
    # coarse subgrid is plenty for the structure verdict
    structure_ts = ts if n_samples <= 48 else ts[:: max(1, n_samples // 48)]
    symmetric, commuting = check_structure(kernel, structure_ts)

    nonneg = noninc = convex = None
    if method == "auto":
        flags = analytic_shape_flags(kernel)
        if flags is not None:
            nonneg, noninc, convex = _flags_to_verdicts(kernel, flags, t_max)
    elif method != "sampled":
        raise ValueError("method must be 'auto' or 'sampled'")

    s_nonneg, s_noninc, s_convex, nonconst = _sampled_shape_verdicts(kernel, ts, directions)
    if nonneg is None:
        nonneg, noninc, convex = s_nonneg, s_noninc, s_convex

    return PropertyReport(
        symmetric=symmetric,
        commuting=commuting,
        nonnegative=nonneg,
        nonincreasing=noninc,
        convex=convex,
        nonconstant_forms=nonconst,
    )
