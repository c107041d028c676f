"""Weighted L2 logistic regression on a deterministic 200-row fixture.

The objective mirrors the learner: weighted mean log-loss on weight-standardized
features plus (l2 / 2) * |beta|^2, intercept unpenalized. Solved with BFGS to
tight tolerance; prints raw-scale intercept and coefficients.
"""
import math

import numpy as np
from scipy.optimize import minimize


def fixture():
    rows, labels, weights = [], [], []
    for i in range(200):
        x1 = 2.0 * math.sin(0.7 * i)
        x2 = math.cos(1.3 * i) + 0.001 * i
        p = 1 / (1 + math.exp(-(0.5 + 1.2 * x1 - 0.8 * x2)))
        u = (i * 0.6180339887498949) % 1.0
        rows.append([x1, x2])
        labels.append(1.0 if u < p else 0.0)
        weights.append(1.0 + i % 3)
    return np.array(rows), np.array(labels), np.array(weights)


X, y, w = fixture()
mu = (w[:, None] * X).sum(0) / w.sum()
sd = np.sqrt((w[:, None] * (X - mu) ** 2).sum(0) / w.sum())
Z = (X - mu) / sd


def objective(theta, l2):
    s = theta[0] + Z @ theta[1:]
    loss = np.sum(w * (np.logaddexp(0, s) - y * s)) / w.sum()
    return loss + 0.5 * l2 * np.sum(theta[1:] ** 2)


print(f"positives = {int(y.sum())}")
for l2 in (0.0, 0.05):
    th = minimize(objective, np.zeros(3), args=(l2,), method="BFGS",
                  options={"gtol": 1e-12}).x
    coef = th[1:] / sd
    icpt = th[0] - np.sum(th[1:] * mu / sd)
    print(f"l2={l2}: intercept {icpt:.12g} coef {coef[0]:.12g} {coef[1]:.12g} "
          f"loss {objective(th, 0.0):.12g}")
