"""Independent dense reference implementations.

These follow the textbook recurrences step by step with plain numpy on dense
arrays.  They share no code with the package, so agreement between the two is
evidence that both are right.
"""

import math

import numpy as np


def soft(beta, alpha):
    return np.sign(beta) * np.maximum(np.abs(beta) - alpha, 0.0)


def lasso_draws(seed, n, mu, H):
    rng = np.random.default_rng(seed)
    return [rng.choice(n, size=mu, replace=False) for _ in range(H)]


def svm_draws(seed, m, H):
    rng = np.random.default_rng(seed)
    return [int(rng.integers(0, m, size=1)[0]) for _ in range(H)]


def accbcd(A, b, lam, mu, draws):
    """Accelerated BCD; returns the list of x_h = theta_h^2 y_h + z_h, h >= 1."""
    m, n = A.shape
    q = math.ceil(n / mu)
    theta = mu / n
    y, z = np.zeros(n), np.zeros(n)
    yt, zt = A @ y, A @ z - b
    xs, thetas = [], []
    for sel in draws:
        As = A[:, sel]
        v = np.linalg.eigvalsh(As.T @ As).max()
        if v > 1e-300:
            eta = 1.0 / (q * theta * v)
            r = As.T @ (theta ** 2 * yt + zt)
            g = z[sel] - eta * r
            dz = soft(g, lam * eta) - z[sel]
            c = (1.0 - q * theta) / theta ** 2
            z[sel] += dz
            zt += As @ dz
            y[sel] -= c * dz
            yt -= c * (As @ dz)
        theta = (math.sqrt(theta ** 4 + 4 * theta ** 2) - theta ** 2) / 2
        thetas.append(theta)
        xs.append(theta ** 2 * y + z)
    return xs, thetas


def bcd(A, b, lam, draws):
    """Plain proximal BCD with step 1/lambda_max of the block Gram."""
    n = A.shape[1]
    x = np.zeros(n)
    r = A @ x - b
    xs = []
    for sel in draws:
        As = A[:, sel]
        v = np.linalg.eigvalsh(As.T @ As).max()
        if v > 1e-300:
            eta = 1.0 / v
            g = x[sel] - eta * (As.T @ r)
            dx = soft(g, lam * eta) - x[sel]
            x[sel] += dx
            r += As @ dx
        xs.append(x.copy())
    return xs


def svm_dcd(A, labels, lam, loss, draws):
    """Dual coordinate descent; returns the lists of alpha_h and x_h."""
    m, n = A.shape
    gamma = 0.0 if loss == "L1" else 0.5 / lam
    nu = lam if loss == "L1" else np.inf
    alpha, x = np.zeros(m), np.zeros(n)
    alphas, xs = [], []
    for i in draws:
        a = A[i]
        eta = a @ a + gamma
        g = labels[i] * (a @ x) - 1.0 + gamma * alpha[i]
        pg = abs(min(max(alpha[i] - g, 0.0), nu) - alpha[i])
        if pg != 0.0 and eta > 0.0:
            theta = min(max(alpha[i] - g / eta, 0.0), nu) - alpha[i]
            alpha[i] += theta
            x += theta * labels[i] * a
        alphas.append(alpha.copy())
        xs.append(x.copy())
    return alphas, xs


def lasso_objective(A, b, lam, x):
    r = A @ x - b
    return 0.5 * float(r @ r) + lam * float(np.abs(x).sum())


def svm_gap(A, labels, lam, loss, alpha, x):
    gamma = 0.0 if loss == "L1" else 0.5 / lam
    hinge = np.maximum(1.0 - labels * (A @ x), 0.0)
    losses = hinge if loss == "L1" else hinge ** 2
    primal = 0.5 * float(x @ x) + lam * float(losses.sum())
    dual = float(alpha.sum()) - 0.5 * float(x @ x) - 0.5 * gamma * float(alpha @ alpha)
    return primal - dual


def gram_loops(Y):
    """Triple-loop Y^T Y."""
    m, k = Y.shape
    G = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            G[i, j] = math.fsum(Y[t, i] * Y[t, j] for t in range(m))
    return G


def libsvm_lines(A, labels):
    """Reference writer for the LIBSVM text format."""
    out = []
    for i in range(A.shape[0]):
        nz = np.flatnonzero(A[i])
        feats = " ".join(f"{j + 1}:{float(A[i, j])!r}" for j in nz)
        out.append(f"{float(labels[i])!r} {feats}".rstrip())
    return "\n".join(out) + "\n"
