"""Brute-force plan for the allocation fixture used in test_decision.cpp."""
import math

price, ltv = 8000, 2500
r1 = [(0, 0, 0), (5, 3, 1000), (10, 10, 2000), (15, 72, 3000)]
r2 = [(0, 0, 0), (5, 10, 1000), (15, 72, 3000)]
p1 = [0.30, 0.33, 0.38, 0.45]
p2 = [0.15, 0.19, 0.27]
threshold = 0.06


def cost(c):
    pct, _, cap = c
    return min(price * pct // 100, cap) if pct else 0


p_star = p1[0] + (1 - p1[0]) * p2[0]
best = None
for j in range(4):
    for k in range(3):
        if j == 0 and k == 0:
            continue
        p = p1[j] + (1 - p1[j]) * p2[k]
        c = (p1[j] * cost(r1[j]) + (1 - p1[j]) * p2[k] * cost(r2[k])) / p
        lift = p - p_star
        roi = math.inf if c == 0 and lift > 0 else (0 if c == 0 else lift * ltv / c)
        print(f"({j},{k}) p={p:.6f} cost={c:.6f} lift={lift:.6f} roi={roi:.6f}")
        if lift >= threshold and (best is None or (roi, -c) > (best[2], -best[3])):
            best = (j, k, roi, c, p, lift)
print(f"best j={best[0]} k={best[1]} roi={best[2]:.17g} cost={best[3]:.17g} "
      f"p={best[4]:.17g} lift={best[5]:.17g} p_star={p_star:.17g}")
