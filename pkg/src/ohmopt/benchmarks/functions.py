"""Vectorised numpy benchmark functions.

Every function takes an ``(n, d)`` array and returns ``n`` values.  The numba
twins live in :mod:`ohmopt.benchmarks._jit`.
"""
import numpy as np

TWO_PI = 2.0 * np.pi


def rosenbrock(X):
    X = np.asarray(X, dtype=np.float64)
    a, b = X[:, :-1], X[:, 1:]
    return np.sum(100.0 * (b - a * a) ** 2 + (1.0 - a) ** 2, axis=1)


def sphere(X):
    X = np.asarray(X, dtype=np.float64)
    return np.sum(X * X, axis=1)


def dixon_price(X):
    X = np.asarray(X, dtype=np.float64)
    i = np.arange(2, X.shape[1] + 1, dtype=np.float64)
    return (X[:, 0] - 1.0) ** 2 + np.sum(i * (2.0 * X[:, 1:] ** 2 - X[:, :-1]) ** 2, axis=1)


def beale(X):
    X = np.asarray(X, dtype=np.float64)
    x, y = X[:, 0], X[:, 1]
    return (1.5 - x + x * y) ** 2 + (2.25 - x + x * y * y) ** 2 + (2.625 - x + x * y ** 3) ** 2


def easom(X):
    # -(-1)^d prod cos(x_i) exp(-sum (x_i - pi)^2); the standard form for d = 2
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    sign = -1.0 if d % 2 == 0 else 1.0
    return sign * np.prod(np.cos(X), axis=1) * np.exp(-np.sum((X - np.pi) ** 2, axis=1))


def quartic(X):
    X = np.asarray(X, dtype=np.float64)
    i = np.arange(1, X.shape[1] + 1, dtype=np.float64)
    return np.sum(i * X ** 4, axis=1)


def schwefel(X):
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    return 418.9829 * d - np.sum(X * np.sin(np.sqrt(np.abs(X))), axis=1)


def weierstrass(X, a=0.5, b=3.0, kmax=20):
    X = np.asarray(X, dtype=np.float64)
    k = np.arange(kmax + 1, dtype=np.float64)
    ak = a ** k
    bk = b ** k
    inner = np.cos(TWO_PI * bk[None, None, :] * (X[:, :, None] + 0.5)) @ ak
    const = np.sum(ak * np.cos(np.pi * bk))
    return np.sum(inner, axis=1) - X.shape[1] * const


def rastrigin(X):
    X = np.asarray(X, dtype=np.float64)
    return np.sum(X * X - 10.0 * np.cos(TWO_PI * X) + 10.0, axis=1)


def ackley(X):
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    s1 = np.sum(X * X, axis=1) / d
    s2 = np.sum(np.cos(TWO_PI * X), axis=1) / d
    return -20.0 * np.exp(-0.2 * np.sqrt(s1)) - np.exp(s2) + 20.0 + np.e


def griewank(X):
    X = np.asarray(X, dtype=np.float64)
    i = np.sqrt(np.arange(1, X.shape[1] + 1, dtype=np.float64))
    return np.sum(X * X, axis=1) / 4000.0 - np.prod(np.cos(X / i), axis=1) + 1.0


def expanded_schaffer(X):
    X = np.asarray(X, dtype=np.float64)
    Y = np.roll(X, -1, axis=1)
    r2 = X * X + Y * Y
    p = (np.sin(np.sqrt(r2)) ** 2 - 0.5) / (1.0 + 0.001 * r2) ** 2 + 0.5
    return np.sum(p, axis=1)
