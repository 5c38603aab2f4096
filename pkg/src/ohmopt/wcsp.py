"""Weighted common-spatial-pattern (CSP) objective on synthetic trial covariances.

Each trial index ``i`` holds one class-1 and one class-2 trace-normalized
spatial covariance.  For trial weights ``a`` (numerator) and ``b``
(denominator), both projected onto the probability simplex, the objective is
the top generalized eigenvalue of the pencil

    A(a) = sum_i a_i S_{i,c},    B(b) = sum_i b_i (S_{i,1} + S_{i,2}),

i.e. the best Rayleigh quotient ``w'Aw / w'Bw`` over spatial filters ``w``.
The *cost* is its negation, so minimizers maximize class-``c`` variance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.linalg

from ._backend import njit, pick
from .core import OptError, Problem, make_rng


class DegenerateTrial(OptError, ValueError):
    pass


class IllConditioned(OptError, ArithmeticError):
    pass


REG_RELATIVE = 1e-8
COND_LIMIT = 1e12


def normalized_covariance(E) -> np.ndarray:
    """``E E' / trace(E E')`` for a channels x samples recording ``E``.

    >>> normalized_covariance(np.eye(2))
    array([[0.5, 0. ],
           [0. , 0.5]])
    """
    E = np.asarray(E, dtype=np.float64)
    if E.ndim != 2 or E.shape[0] < 2 or E.shape[1] < E.shape[0]:
        raise ValueError(f"need channels x samples with samples >= channels >= 2, got {E.shape}")
    if not np.all(np.isfinite(E)):
        raise ValueError("recording contains non-finite values")
    C = E @ E.T
    tr = np.trace(C)
    if tr < 1e-30:
        raise DegenerateTrial(f"trace {tr:.3g} too small to normalize")
    C = C / tr
    return 0.5 * (C + C.T)


# ---------------------------------------------------------------------------
# power iteration on the pencil
# ---------------------------------------------------------------------------


@njit
def _power_nb(A, B, Binv, x0, iters, tol):
    n = A.shape[0]
    x = x0.copy()
    lam = np.nan
    Ax = np.empty(n)
    for k in range(iters):
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += A[i, j] * x[j]
            Ax[i] = acc
        y = Binv @ Ax
        By = B @ y
        nb = 0.0
        for i in range(n):
            nb += y[i] * By[i]
        nb = np.sqrt(nb)
        for i in range(n):
            x[i] = y[i] / nb
        num = 0.0
        Axn = A @ x
        for i in range(n):
            num += x[i] * Axn[i]
        # x is B-normalized, so the quotient is just x'Ax
        prev = lam
        lam = num
        if tol > 0.0 and k > 0 and abs(lam - prev) <= tol * abs(lam):
            break
    nrm = 0.0
    for i in range(n):
        nrm += x[i] * x[i]
    nrm = np.sqrt(nrm)
    return lam, x / nrm


def _power_np(A, B, Binv, x0, iters, tol):
    x = x0.copy()
    lam = np.nan
    for k in range(iters):
        y = Binv @ (A @ x)
        x = y / np.sqrt(y @ (B @ y))
        prev, lam = lam, float(x @ (A @ x))
        if tol > 0.0 and k > 0 and abs(lam - prev) <= tol * abs(lam):
            break
    return lam, x / np.linalg.norm(x)


_power = pick(_power_nb, _power_np)


def regularize(B, *, strict: bool = False):
    """Return ``B`` or ``B + 1e-8 trace(B)/N I`` when it is ill-conditioned.

    With ``strict`` an ill-conditioned ``B`` raises :class:`IllConditioned`
    instead.
    """
    B = np.asarray(B, dtype=np.float64)
    ev = np.linalg.eigvalsh(B)
    if ev[-1] <= 0 or not np.all(np.isfinite(ev)):
        raise IllConditioned("denominator matrix is not positive definite")
    if ev[0] >= ev[-1] / COND_LIMIT:
        return B
    if strict:
        raise IllConditioned(f"condition number {ev[-1] / max(ev[0], 1e-300):.3g} exceeds {COND_LIMIT:.0e}")
    N = B.shape[0]
    B = B + REG_RELATIVE * np.trace(B) / N * np.eye(N)
    ev = np.linalg.eigvalsh(B)
    if ev[0] < ev[-1] / COND_LIMIT:
        raise IllConditioned("regularization could not restore a usable denominator")
    return B


def _start_vector(n, rng):
    if rng is not None:
        return rng.standard_normal(n)
    # fixed, non-symmetric start so the cost stays a pure function of the weights
    return 1.0 + np.arange(n) / n


def power_iteration_pencil(A, B, iters: int = 7, rng=None, x0=None, tol: float = 0.0,
                           strict: bool = True):
    """Dominant generalized eigenpair of ``A w = lambda B w``.

    Iterates ``x <- B^{-1} A x`` with B-normalization; the eigenvalue is the
    Rayleigh quotient of the final iterate and the returned eigenvector has
    unit Euclidean norm.  ``tol > 0`` stops once the eigenvalue's relative
    change drops below it.

    Raises :class:`IllConditioned` for an ill-conditioned ``B`` unless
    ``strict=False``, in which case ``B`` is regularized first.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = regularize(B, strict=strict)
    if iters < 1:
        raise ValueError("iters must be positive")
    x0 = _start_vector(A.shape[0], rng) if x0 is None else np.asarray(x0, dtype=np.float64)
    Binv = np.linalg.inv(B)
    Binv = 0.5 * (Binv + Binv.T)
    lam, w = _power(A, np.ascontiguousarray(B), Binv, x0, int(iters), float(tol))
    return float(lam), w


def dense_top_eig(A, B):
    """Reference solver: top eigenpair from LAPACK's symmetric-definite driver."""
    vals, vecs = scipy.linalg.eigh(A, B)
    w = vecs[:, -1]
    return float(vals[-1]), w / np.linalg.norm(w)


def csp_filters(A, B, k: int, iters: int = 300, tol: float = 1e-14):
    """Top ``k`` pencil eigenpairs by power iteration with B-orthogonal deflation.

    Returns ``(lams, W)`` where the columns of ``W`` satisfy ``W' B W = I``.
    """
    A = np.asarray(A, dtype=np.float64)
    B = regularize(B, strict=False)
    n = A.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}]")
    Binv = np.linalg.inv(B)
    W = np.zeros((n, k))
    lams = np.zeros(k)
    Ad = A.copy()
    for col in range(k):
        x = _start_vector(n, None)
        lam = np.nan
        for it in range(iters):
            y = Binv @ (Ad @ x)
            # keep the iterate B-orthogonal to the filters already found
            y -= W[:, :col] @ (W[:, :col].T @ (B @ y))
            x = y / np.sqrt(y @ B @ y)
            prev, lam = lam, float(x @ Ad @ x)
            if it and abs(lam - prev) <= tol * max(abs(lam), 1e-300):
                break
        W[:, col] = x
        lams[col] = lam
        Bx = B @ x
        Ad = Ad - lam * np.outer(Bx, Bx)
    return lams, W


# ---------------------------------------------------------------------------
# trial sets and weights
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialSet:
    """Paired class-1 / class-2 covariances, shapes ``(n_trials, N, N)``."""

    cov1: np.ndarray
    cov2: np.ndarray
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c1 = np.array(self.cov1, dtype=np.float64)
        c2 = np.array(self.cov2, dtype=np.float64)
        if c1.shape != c2.shape or c1.ndim != 3 or c1.shape[1] != c1.shape[2]:
            raise ValueError(f"cov1/cov2 must share shape (n, N, N), got {c1.shape} and {c2.shape}")
        c1.setflags(write=False)
        c2.setflags(write=False)
        object.__setattr__(self, "cov1", c1)
        object.__setattr__(self, "cov2", c2)

    @property
    def n_trials(self) -> int:
        return self.cov1.shape[0]

    @property
    def n_channels(self) -> int:
        return self.cov1.shape[1]

    def covs(self, c: int) -> np.ndarray:
        if c not in (1, 2):
            raise ValueError("class must be 1 or 2")
        return self.cov1 if c == 1 else self.cov2

    def check(self, tol: float = 1e-12):
        """Raise ``ValueError`` unless every covariance is symmetric, PSD and unit-trace."""
        for C in (self.cov1, self.cov2):
            if np.max(np.abs(C - np.swapaxes(C, 1, 2))) > tol:
                raise ValueError("covariance not symmetric")
            if np.max(np.abs(np.trace(C, axis1=1, axis2=2) - 1.0)) > tol:
                raise ValueError("covariance trace differs from 1")
            if np.min(np.linalg.eigvalsh(C)) < -1e-10:
                raise ValueError("covariance not positive semi-definite")

    def scaled(self, factor: float) -> "TrialSet":
        return TrialSet(self.cov1 * factor, self.cov2 * factor, self.seed, dict(self.meta))

    # -- persistence -------------------------------------------------------
    def save(self, path):
        """Write to ``.npz`` (binary) or ``.json``; both keep dims, seed and 64-bit data."""
        path = Path(path)
        header = {"n_trials": self.n_trials, "n_channels": self.n_channels, "seed": self.seed,
                  "meta": self.meta, "format": "wcsp-trialset-v1"}
        if path.suffix == ".json":
            doc = dict(header, cov1=self.cov1.reshape(-1).tolist(), cov2=self.cov2.reshape(-1).tolist())
            path.write_text(json.dumps(doc))
        else:
            with open(path, "wb") as fh:
                np.savez(fh, cov1=self.cov1, cov2=self.cov2, header=np.array(json.dumps(header)))

    @classmethod
    def load(cls, path) -> "TrialSet":
        path = Path(path)
        if path.suffix == ".json":
            doc = json.loads(path.read_text())
            shape = (doc["n_trials"], doc["n_channels"], doc["n_channels"])
            c1 = np.array(doc["cov1"], dtype=np.float64).reshape(shape)
            c2 = np.array(doc["cov2"], dtype=np.float64).reshape(shape)
            return cls(c1, c2, doc.get("seed"), doc.get("meta", {}))
        with np.load(path) as z:
            header = json.loads(str(z["header"]))
            return cls(z["cov1"], z["cov2"], header.get("seed"), header.get("meta", {}))


def synth_trials(seed: int, n_trials: int = 20, n_channels: int = 16, n_samples: int = 2048,
                 class_separation: float = 1.0, jitter: float = 0.5, n_active: int = 2) -> TrialSet:
    """Synthetic two-class recordings reduced to normalized covariances.

    Both classes share one random mixing matrix.  Class 1 boosts the variance
    of source 0, class 2 that of source 1, each by ``(1 + class_separation)``
    squared, scaled per trial by an informativeness factor in ``[0, 1]`` so
    that some trials carry the class contrast and others mostly noise.  Every
    trial also gets a log-normal per-source scale jitter.  Channels are
    zero-meaned before the covariance is taken.
    """
    if n_samples < n_channels:
        raise ValueError("n_samples must be >= n_channels")
    rng = make_rng(seed, 0xC5)
    M = rng.standard_normal((n_channels, n_channels))
    info = rng.random(n_trials) ** 2
    covs = np.empty((2, n_trials, n_channels, n_channels))
    for i in range(n_trials):
        for k in range(2):
            scale = np.exp(jitter * rng.standard_normal(n_channels))
            boost = 1.0 + class_separation * info[i]
            scale[k % n_active] *= boost
            S = rng.standard_normal((n_channels, n_samples)) * scale[:, None]
            E = M @ S
            E -= E.mean(axis=1, keepdims=True)
            covs[k, i] = normalized_covariance(E)
    meta = {"n_samples": n_samples, "class_separation": class_separation, "jitter": jitter}
    return TrialSet(covs[0], covs[1], seed, meta)


def erp_average(trials: TrialSet, group: int = 1) -> TrialSet:
    """Average consecutive covariances in groups of ``group`` (1 = unchanged)."""
    if group <= 1:
        return trials
    n = trials.n_trials // group
    if n == 0:
        raise ValueError("group larger than the number of trials")

    def avg(C):
        G = C[: n * group].reshape(n, group, *C.shape[1:]).mean(axis=1)
        return G / np.trace(G, axis1=1, axis2=2)[:, None, None]

    return TrialSet(avg(trials.cov1), avg(trials.cov2), trials.seed, dict(trials.meta, erp_group=group))


def project_simplex(v) -> np.ndarray:
    """Clip negatives and renormalize to unit sum (uniform if nothing is positive)."""
    r = np.maximum(np.asarray(v, dtype=np.float64), 0.0)
    s = r.sum()
    if not s > 0.0:
        return np.full(r.shape, 1.0 / r.size)
    return r / s


def _projection_vjp(v, g):
    """Pull ``g = d cost / d p`` back through ``p = project_simplex(v)``."""
    r = np.maximum(v, 0.0)
    s = r.sum()
    if not s > 0.0:
        return np.zeros_like(g)
    p = r / s
    return (v > 0.0) * (g - p @ g) / s


def pencil(trials: TrialSet, a, b, c: int = 1):
    """``(A, B)`` for already-projected weights ``a`` and ``b``."""
    A = np.tensordot(a, trials.covs(c), axes=1)
    B = np.tensordot(b, trials.cov1 + trials.cov2, axes=1)
    return 0.5 * (A + A.T), 0.5 * (B + B.T)


@dataclass(frozen=True)
class WcspSolverConfig:
    """How the pencil is solved inside the cost.

    ``solver="power"`` runs power iteration up to ``iters`` steps with early
    stopping at relative tolerance ``tol``; ``"dense"`` calls LAPACK.
    """

    solver: str = "power"
    iters: int = 500
    tol: float = 1e-13


def _solve(A, B, cfg: WcspSolverConfig):
    if cfg.solver == "dense":
        B = regularize(B, strict=False)
        return dense_top_eig(A, B)
    if cfg.solver != "power":
        raise ValueError(f"unknown solver {cfg.solver!r}")
    return power_iteration_pencil(A, B, cfg.iters, tol=cfg.tol, strict=False)


def wcsp_cost(trials: TrialSet, a, b, c: int = 1, cfg: WcspSolverConfig = WcspSolverConfig()) -> float:
    """Negated top Rayleigh quotient for simplex-projected weights ``a`` and ``b``."""
    pa, pb = project_simplex(a), project_simplex(b)
    A, B = pencil(trials, pa, pb, c)
    lam, w = _solve(A, B, cfg)
    return -float((w @ A @ w) / (w @ B @ w))


def wcsp_value_and_grad(trials: TrialSet, a, b, c: int = 1, cfg: WcspSolverConfig = WcspSolverConfig()):
    """Cost and its gradient with respect to the raw (unprojected) weights.

    The filter ``w`` is held at the pencil solution; at the exact maximizer
    this is the full derivative (the quotient is stationary in ``w``).  The
    simplex-projection Jacobian centres each gradient on its weighted mean,
    i.e. projects it onto the simplex tangent, and masks clipped entries.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    pa, pb = project_simplex(a), project_simplex(b)
    A, B = pencil(trials, pa, pb, c)
    _, w = _solve(A, B, cfg)
    qa = np.einsum("j,ijk,k->i", w, trials.covs(c), w)
    qb = np.einsum("j,ijk,k->i", w, trials.cov1 + trials.cov2, w)
    num = pa @ qa
    den = pb @ qb
    ga = -qa / den
    gb = num * qb / den**2
    return -num / den, _projection_vjp(a, ga), _projection_vjp(b, gb)


def wcsp_grad(trials: TrialSet, a, b, c: int = 1, cfg: WcspSolverConfig = WcspSolverConfig()):
    _, ga, gb = wcsp_value_and_grad(trials, a, b, c, cfg)
    return ga, gb


class WcspObjective:
    """Picklable cost/gradient over the stacked parameter vector ``[a, b]``."""

    def __init__(self, trials: TrialSet, c: int = 1, cfg: WcspSolverConfig = WcspSolverConfig()):
        self.trials = trials
        self.c = c
        self.cfg = cfg
        self.n = trials.n_trials

    def split(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        return theta[: self.n], theta[self.n:]

    def __call__(self, theta) -> float:
        a, b = self.split(theta)
        return wcsp_cost(self.trials, a, b, self.c, self.cfg)

    def gradient(self, theta) -> np.ndarray:
        a, b = self.split(theta)
        ga, gb = wcsp_grad(self.trials, a, b, self.c, self.cfg)
        return np.concatenate([ga, gb])


def wcsp_problem(trials: TrialSet, c: int = 1, cfg: WcspSolverConfig = WcspSolverConfig()):
    """Box-constrained :class:`~ohmopt.hybrid.GradProblem` over ``[a, b]`` in ``[0, 1]``."""
    from .hybrid import GradProblem

    obj = WcspObjective(trials, c, cfg)
    dim = 2 * trials.n_trials
    base = Problem(dim, np.zeros(dim), np.ones(dim), obj, name="wcsp",
                   meta={"seed": trials.seed, "class": c})
    return GradProblem(base, obj.gradient)


# Instance used by the hybrid-ordering check and the "wcsp" harness problem.
DEFAULT_INSTANCE = {"seed": 20240611, "n_trials": 20, "n_channels": 16, "n_samples": 2048,
                    "class_separation": 1.0, "jitter": 0.5}


def default_instance() -> TrialSet:
    return synth_trials(**DEFAULT_INSTANCE)
