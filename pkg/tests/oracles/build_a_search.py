"""Grid/analytic oracle for the diagonal alignment matrices.

For real diagonals, minimizes (a*ci + cj/a)^2 per coordinate by dense 1-D
grid search and compares with sqrt(|cj/ci|).  For the complex rules, checks
the residual a*ci + cj/a vanishes for the constructed entries.  Independent
of the package.
"""

import cmath
import random


def real_coord_loss(a, ci, cj):
    return (a * ci + cj / a) ** 2


def grid_min_real(ci, cj, lo=1e-3, hi=1e3, steps=2_000_001):
    # log-spaced dense grid
    import math

    best_a, best_v = None, None
    llo, lhi = math.log(lo), math.log(hi)
    for i in range(steps):
        a = math.exp(llo + (lhi - llo) * i / (steps - 1))
        v = real_coord_loss(a, ci, cj)
        if best_v is None or v < best_v:
            best_a, best_v = a, v
    return best_a, best_v


def complex_entry(ci, cj, big=1e3, small=1e-3):
    if ci == 0 and cj == 0:
        return complex(1.0, 1.0)
    if ci == 0:
        return complex(big, 0.0)
    if cj == 0:
        return complex(small, small)
    p = ci * cj
    if p > 0:
        return complex(0.0, (cj / ci) ** 0.5)
    return complex((-cj / ci) ** 0.5, 0.0)


if __name__ == "__main__":
    import math

    # Example: ci=(1,4), cj=(4,1) -> diag(2, 0.5)
    for ci, cj in [(1.0, 4.0), (4.0, 1.0)]:
        a_star, v = grid_min_real(ci, cj)
        print(f"ci={ci} cj={cj}: grid argmin a = {a_star:.6f}  (formula {math.sqrt(abs(cj/ci)):.6f}), loss {v:.3e}")

    # Complex residual checks
    for ci, cj in [(1.0, -4.0), (1.0, 4.0)]:
        a = complex_entry(ci, cj)
        res = a * ci + cj / a
        print(f"ci={ci} cj={cj}: entry = {a}, residual = {res}, |residual|^2 = {abs(res)**2:.3e}")

    # Random no-mixed-zero pairs: residual always ~0
    rng = random.Random(0)
    worst = 0.0
    for _ in range(1000):
        ci = rng.uniform(-5, 5) or 1.0
        cj = rng.uniform(-5, 5) or 1.0
        a = complex_entry(ci, cj)
        worst = max(worst, abs(a * ci + cj / a) ** 2)
    print("worst |residual|^2 over 1000 random nonzero pairs:", worst)
