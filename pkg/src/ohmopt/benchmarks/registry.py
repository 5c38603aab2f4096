"""F1-F20 benchmark registry with rotation/shift/scale wrappers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import _backend
from ..core import DimensionMismatch, Problem, make_rng
from . import _jit, functions


class UnknownId(KeyError):
    pass


class UnsupportedDim(ValueError):
    pass


_BASE = {
    "rosenbrock": (_jit.rosenbrock, functions.rosenbrock),
    "sphere": (_jit.sphere, functions.sphere),
    "dixon_price": (_jit.dixon_price, functions.dixon_price),
    "beale": (_jit.beale, functions.beale),
    "easom": (_jit.easom, functions.easom),
    "quartic": (_jit.quartic, functions.quartic),
    "schwefel": (_jit.schwefel, functions.schwefel),
    "weierstrass": (_jit.weierstrass, functions.weierstrass),
    "rastrigin": (_jit.rastrigin, functions.rastrigin),
    "ackley": (_jit.ackley, functions.ackley),
    "griewank": (_jit.griewank, functions.griewank),
    "expanded_schaffer": (_jit.expanded_schaffer, functions.expanded_schaffer),
}

WEIERSTRASS_PARAMS = (0.5, 3.0, 20)


def base_kernel(name: str, backend: Optional[str] = None):
    nb, npy = _BASE[name]
    backend = backend or _backend.BACKEND
    if name == "weierstrass":
        a, b, kmax = WEIERSTRASS_PARAMS
        if backend == "numba":
            return lambda X: nb(X, a, b, kmax)
        return lambda X: npy(X, a, b, kmax)
    return nb if backend == "numba" else npy


def weierstrass(x, a: float = 0.5, b: float = 3.0, kmax: int = 20) -> float:
    """Weierstrass function with the constant term subtracted so that f(0) = 0."""
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return float(functions.weierstrass(X, a, b, int(kmax))[0])


def _dixon_price_opt(d):
    i = np.arange(1, d + 1, dtype=np.float64)
    return 2.0 ** (-(2.0 ** i - 2.0) / 2.0 ** i)


@dataclass(frozen=True)
class BenchmarkSpec:
    index: int
    name: str
    base: str
    box: tuple
    optimum: object  # callable dim -> location in base coordinates
    f_opt: float = 0.0
    polynomial: bool = False
    fixed_dim: Optional[int] = None
    rotated: bool = False
    shifted: bool = False
    input_scale: float = 1.0
    default_seed: Optional[int] = None
    note: str = ""


def _zeros(d):
    return np.zeros(d)


REGISTRY = {
    s.index: s
    for s in [
        BenchmarkSpec(1, "Rosenbrock", "rosenbrock", (-100.0, 100.0), np.ones, polynomial=True),
        BenchmarkSpec(2, "Sphere", "sphere", (-5.12, 5.12), _zeros, polynomial=True),
        BenchmarkSpec(3, "DixonPrice", "dixon_price", (-10.0, 10.0), _dixon_price_opt, polynomial=True),
        BenchmarkSpec(4, "Beale", "beale", (-4.5, 4.5), lambda d: np.array([3.0, 0.5]),
                      polynomial=True, fixed_dim=2),
        BenchmarkSpec(5, "Easom", "easom", (-100.0, 100.0), lambda d: np.full(d, np.pi), f_opt=-1.0,
                      note="dim > 2 uses -(-1)^d prod cos(x_i) exp(-sum (x_i - pi)^2)"),
        BenchmarkSpec(6, "Quartic", "quartic", (-1.28, 1.28), _zeros, polynomial=True),
        BenchmarkSpec(7, "Schwefel", "schwefel", (-500.0, 500.0), lambda d: np.full(d, 420.9687)),
        BenchmarkSpec(8, "Weierstrass", "weierstrass", (-0.5, 0.5), _zeros),
        BenchmarkSpec(9, "Rastrigin", "rastrigin", (-5.12, 5.12), _zeros),
        BenchmarkSpec(10, "Ackley", "ackley", (-32.768, 32.768), _zeros),
        BenchmarkSpec(11, "Griewank", "griewank", (-600.0, 600.0), _zeros),
        BenchmarkSpec(12, "RotatedAckley", "ackley", (-32.768, 32.768), _zeros,
                      rotated=True, default_seed=1012),
        BenchmarkSpec(13, "RotatedRastrigin", "rastrigin", (-5.12, 5.12), _zeros,
                      rotated=True, shifted=True, input_scale=0.0512, default_seed=1013),
        BenchmarkSpec(14, "RotatedSchwefel", "schwefel", (-500.0, 500.0), lambda d: np.full(d, 420.9687),
                      rotated=True, input_scale=6.0, default_seed=1014,
                      note="scaled inputs leave the base domain; values below f_opt exist in the box"),
        BenchmarkSpec(15, "RotatedGriewank", "griewank", (-600.0, 600.0), _zeros,
                      rotated=True, input_scale=6.0, default_seed=1015),
        BenchmarkSpec(16, "RotatedWeierstrass", "weierstrass", (-0.5, 0.5), _zeros,
                      rotated=True, input_scale=0.005, default_seed=1016),
        BenchmarkSpec(17, "RotateShiftExpandedScaffer", "expanded_schaffer", (-100.0, 100.0), _zeros,
                      rotated=True, shifted=True, default_seed=1017),
        BenchmarkSpec(18, "RotateShiftGriewank", "griewank", (-600.0, 600.0), _zeros,
                      rotated=True, shifted=True, input_scale=6.0, default_seed=1018),
        BenchmarkSpec(19, "RotateShiftRastrigin", "rastrigin", (-5.12, 5.12), _zeros,
                      rotated=True, shifted=True, default_seed=1019),
        BenchmarkSpec(20, "RotateShiftAckley", "ackley", (-32.768, 32.768), _zeros,
                      rotated=True, shifted=True, default_seed=1020),
    ]
}

_BY_NAME = {s.name.lower(): s.index for s in REGISTRY.values()}


def lookup(key) -> BenchmarkSpec:
    """Resolve ``7``, ``"F7"``, ``"7"`` or ``"schwefel"`` to a spec."""
    if isinstance(key, BenchmarkSpec):
        return key
    k = key
    if isinstance(k, str):
        s = k.strip().lower()
        if s in _BY_NAME:
            return REGISTRY[_BY_NAME[s]]
        s = s[1:] if s.startswith("f") else s
        if not s.isdigit():
            raise UnknownId(key)
        k = int(s)
    if k not in REGISTRY:
        raise UnknownId(key)
    return REGISTRY[k]


def resolve_dim(key, dim: int) -> int:
    spec = lookup(key)
    return spec.fixed_dim if spec.fixed_dim is not None else dim


class Objective:
    """Picklable callable ``z = R (s (x - shift)); f(z) + bias``."""

    def __init__(self, base: str, dim: int, rotation=None, shift=None, input_scale=1.0,
                 output_bias=0.0, backend=None):
        self.base = base
        self.dim = dim
        self.rotation = None if rotation is None else np.ascontiguousarray(rotation, dtype=np.float64)
        self.shift = None if shift is None else np.asarray(shift, dtype=np.float64)
        self.input_scale = float(input_scale)
        self.output_bias = float(output_bias)
        self.backend = backend
        self._kernel = base_kernel(base, backend)

    def __getstate__(self):
        state = self.__dict__.copy()
        del state["_kernel"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._kernel = base_kernel(self.base, self.backend)

    def _z(self, X):
        Z = X
        if self.shift is not None:
            Z = Z - self.shift
        if self.input_scale != 1.0:
            Z = Z * self.input_scale
        if self.rotation is not None:
            Z = Z @ self.rotation.T
        return np.ascontiguousarray(Z)

    def batch(self, X):
        X = np.asarray(X, dtype=np.float64)
        out = self._kernel(self._z(X))
        if self.output_bias:
            out = out + self.output_bias
        return out

    def __call__(self, x):
        return float(self.batch(np.asarray(x, dtype=np.float64).reshape(1, -1))[0])


@dataclass(frozen=True)
class Transform:
    rotation: Optional[np.ndarray] = None
    shift: Optional[np.ndarray] = None
    input_scale: float = 1.0
    output_bias: float = 0.0

    def __post_init__(self):
        if self.rotation is not None:
            R = np.asarray(self.rotation, dtype=np.float64)
            if R.ndim != 2 or R.shape[0] != R.shape[1]:
                raise DimensionMismatch("rotation must be square")
            if np.max(np.abs(R.T @ R - np.eye(len(R)))) > 1e-10:
                raise ValueError("rotation is not orthogonal to 1e-10")


def random_rotation(dim: int, seed: int) -> np.ndarray:
    """Orthogonal matrix from QR of a seeded standard-normal matrix (sign-fixed)."""
    if dim < 1:
        raise ValueError("dim must be positive")
    G = make_rng(seed, dim, 0).standard_normal((dim, dim))
    Q, R = np.linalg.qr(G)
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s


def _shift_vector(spec: BenchmarkSpec, dim: int, seed: int) -> np.ndarray:
    lo, hi = spec.box
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return mid + 0.8 * half * make_rng(seed, dim, 1).uniform(-1.0, 1.0, dim)


def apply_transform(base: Problem, t: Transform) -> Problem:
    """Wrap ``base`` so the new cost is ``base(R (s (x - shift))) + bias``."""
    d = base.dim
    if t.rotation is not None and np.shape(t.rotation) != (d, d):
        raise DimensionMismatch("rotation shape does not match problem dim")
    if t.shift is not None and np.shape(t.shift) != (d,):
        raise DimensionMismatch("shift length does not match problem dim")
    R = None if t.rotation is None else np.asarray(t.rotation, dtype=np.float64)
    shift = None if t.shift is None else np.asarray(t.shift, dtype=np.float64)
    s = float(t.input_scale)

    if isinstance(base.cost, Objective) and base.cost.rotation is None and base.cost.shift is None \
            and base.cost.input_scale == 1.0:
        obj = Objective(base.cost.base, d, R, shift, s, base.cost.output_bias + t.output_bias,
                        base.cost.backend)
        cost, batch = obj, obj.batch
    else:
        def _z(X):
            Z = X if shift is None else X - shift
            Z = Z * s
            return Z if R is None else Z @ R.T

        def cost(x):
            return float(base.cost(_z(np.asarray(x, dtype=np.float64)))) + t.output_bias

        if base.batch_cost is not None:
            def batch(X):
                return base.batch_cost(_z(np.asarray(X, dtype=np.float64))) + t.output_bias
        else:
            batch = None

    opt = None
    if base.known_optimum is not None:
        z_star, f_star = base.known_optimum
        x_star = np.asarray(z_star, dtype=np.float64)
        if R is not None:
            x_star = R.T @ x_star
        x_star = x_star / s
        if shift is not None:
            x_star = x_star + shift
        opt = (x_star, float(f_star) + t.output_bias)
    return Problem(d, base.lower, base.upper, cost, batch, opt, base.name,
                   dict(base.meta, transformed=True))


def make_benchmark(key, dim: int, seed: Optional[int] = None, backend: Optional[str] = None) -> Problem:
    """Build F1-F20 as a :class:`Problem` with its box and known optimum."""
    spec = lookup(key)
    if dim < 1:
        raise UnsupportedDim("dim must be positive")
    if spec.fixed_dim is not None and dim != spec.fixed_dim:
        raise UnsupportedDim(f"{spec.name} is only defined for dim={spec.fixed_dim}")
    if spec.base in ("rosenbrock", "dixon_price") and dim < 2:
        raise UnsupportedDim(f"{spec.name} needs dim >= 2")
    lo = np.full(dim, spec.box[0])
    hi = np.full(dim, spec.box[1])
    obj = Objective(spec.base, dim, backend=backend)
    meta = {"index": spec.index, "polynomial": spec.polynomial}
    base = Problem(dim, lo, hi, obj, obj.batch, (spec.optimum(dim), spec.f_opt),
                   f"F{spec.index}_{spec.name}", meta)
    if not spec.rotated:
        return base
    seed = spec.default_seed if seed is None else seed
    t = Transform(
        rotation=random_rotation(dim, seed),
        shift=_shift_vector(spec, dim, seed) if spec.shifted else None,
        input_scale=spec.input_scale,
    )
    p = apply_transform(base, t)
    p.meta.update(meta, seed=seed)
    return p


def registry_dump() -> list:
    """JSON-ready description of every registered benchmark."""
    out = []
    for spec in REGISTRY.values():
        d = spec.fixed_dim or 2
        out.append({
            "id": f"F{spec.index}",
            "index": spec.index,
            "name": spec.name,
            "box": list(spec.box),
            "dims": {"fixed": spec.fixed_dim} if spec.fixed_dim else {"min": 2 if spec.base in ("rosenbrock", "dixon_price") else 1},
            "optimum": {
                "value": spec.f_opt,
                "location_dim2": None if spec.rotated else [float(v) for v in spec.optimum(d)],
            },
            "transform": None if not spec.rotated else {
                "rotation": True,
                "shift": spec.shifted,
                "input_scale": spec.input_scale,
                "seed": spec.default_seed,
            },
            "polynomial": spec.polynomial,
            "note": spec.note,
        })
    return out
