"""Loop kernels for the benchmark functions, compiled with numba when available."""
import math

import numpy as np

from .._backend import njit

TWO_PI = 2.0 * math.pi


@njit
def rosenbrock(X):
    n, d = X.shape
    out = np.empty(n)
    for r in range(n):
        s = 0.0
        for i in range(d - 1):
            a = X[r, i]
            t = X[r, i + 1] - a * a
            s += 100.0 * t * t + (1.0 - a) * (1.0 - a)
        out[r] = s
    return out


@njit
def sphere(X):
    n, d = X.shape
    out = np.empty(n)
    for r in range(n):
        s = 0.0
        for i in range(d):
            s += X[r, i] * X[r, i]
        out[r] = s
    return out


@njit
def dixon_price(X):
    n, d = X.shape
    out = np.empty(n)
    for r in range(n):
        s = (X[r, 0] - 1.0) ** 2
        for i in range(1, d):
            t = 2.0 * X[r, i] * X[r, i] - X[r, i - 1]
            s += (i + 1.0) * t * t
        out[r] = s
    return out


@njit
def beale(X):
    n = X.shape[0]
    out = np.empty(n)
    for r in range(n):
        x = X[r, 0]
        y = X[r, 1]
        out[r] = (1.5 - x + x * y) ** 2 + (2.25 - x + x * y * y) ** 2 + (2.625 - x + x * y ** 3) ** 2
    return out


@njit
def easom(X):
    n, d = X.shape
    sign = -1.0 if d % 2 == 0 else 1.0
    out = np.empty(n)
    for r in range(n):
        p = 1.0
        s = 0.0
        for i in range(d):
            p *= math.cos(X[r, i])
            t = X[r, i] - math.pi
            s += t * t
        out[r] = sign * p * math.exp(-s)
    return out


@njit
def quartic(X):
    n, d = X.shape
    out = np.empty(n)
    for r in range(n):
        s = 0.0
        for i in range(d):
            x2 = X[r, i] * X[r, i]
            s += (i + 1.0) * x2 * x2
        out[r] = s
    return out


@njit
def schwefel(X):
    n, d = X.shape
    out = np.empty(n)
    for r in range(n):
        s = 0.0
        for i in range(d):
            x = X[r, i]
            s += x * math.sin(math.sqrt(abs(x)))
        out[r] = 418.9829 * d - s
    return out


@njit
def weierstrass(X, a, b, kmax):
    n, d = X.shape
    const = 0.0
    for k in range(kmax + 1):
        const += a ** k * math.cos(math.pi * b ** k)
    out = np.empty(n)
    for r in range(n):
        s = 0.0
        for i in range(d):
            xi = X[r, i] + 0.5
            for k in range(kmax + 1):
                s += a ** k * math.cos(TWO_PI * b ** k * xi)
        out[r] = s - d * const
    return out


@njit
def rastrigin(X):
    n, d = X.shape
    out = np.empty(n)
    for r in range(n):
        s = 0.0
        for i in range(d):
            x = X[r, i]
            s += x * x - 10.0 * math.cos(TWO_PI * x) + 10.0
        out[r] = s
    return out


@njit
def ackley(X):
    n, d = X.shape
    out = np.empty(n)
    for r in range(n):
        s1 = 0.0
        s2 = 0.0
        for i in range(d):
            x = X[r, i]
            s1 += x * x
            s2 += math.cos(TWO_PI * x)
        out[r] = -20.0 * math.exp(-0.2 * math.sqrt(s1 / d)) - math.exp(s2 / d) + 20.0 + math.e
    return out


@njit
def griewank(X):
    n, d = X.shape
    out = np.empty(n)
    for r in range(n):
        s = 0.0
        p = 1.0
        for i in range(d):
            x = X[r, i]
            s += x * x
            p *= math.cos(x / math.sqrt(i + 1.0))
        out[r] = s / 4000.0 - p + 1.0
    return out


@njit
def expanded_schaffer(X):
    n, d = X.shape
    out = np.empty(n)
    for r in range(n):
        s = 0.0
        for i in range(d):
            u = X[r, i]
            v = X[r, (i + 1) % d]
            r2 = u * u + v * v
            t = math.sin(math.sqrt(r2))
            s += (t * t - 0.5) / (1.0 + 0.001 * r2) ** 2 + 0.5
        out[r] = s
    return out
