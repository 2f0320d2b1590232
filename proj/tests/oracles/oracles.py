"""Independent reference values for the C++ test suite.

Planning values come from a plain recursion over the raw history tree with
posterior filtering (no memoization, rational arithmetic where cheap);
alpha_eff comes from scipy's HiGHS solver; conditional KL is enumerated
with Python fractions. Run from the repository root:

    python3 tests/oracles/oracles.py
"""
import itertools
import json
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog


def load(name):
    with open(f"data/{name}.json") as f:
        return json.load(f)


def as_frac(x):
    if isinstance(x, list):
        return [as_frac(v) for v in x]
    return Fraction(x)


def tree_value(th, w, exact=True):
    """Optimal blind value from unnormalized context weights w."""
    conv = as_frac if exact else (lambda x: x)
    T, O, init, r = conv(th["transitions"]), conv(th["obs_kernel"]), conv(th["initial"]), conv(th["reward"])
    M, S, A, NO, H = th["M"], th["S"], th["A"], th["O"], th["H"]

    def v(t, s, w):
        best = None
        for a in range(A):
            tot = 0
            for o in range(NO):
                wo = [w[m] * O[m][s][a][o] for m in range(M)]
                mo = sum(wo)
                if mo == 0:
                    continue
                tot += mo * r[o]
                if t < H:
                    for s2 in range(S):
                        w2 = [wo[m] * T[m][s][a][s2] for m in range(M)]
                        if sum(w2) > 0:
                            tot += v(t + 1, s2, w2)
            if best is None or tot > best:
                best = tot
        return best

    total = 0
    for s in range(S):
        w1 = [w[m] * init[m][s] for m in range(M)]
        if sum(w1) > 0:
            total += v(1, s, w1)
    return total


def blind_value(th, exact=True):
    conv = as_frac if exact else (lambda x: x)
    return tree_value(th, conv(th["mixing"]), exact)


def informed_value(th, exact=True, dedupe=False):
    conv = as_frac if exact else (lambda x: x)
    p, E = conv(th["mixing"]), conv(th["emission"])
    cache = {}
    total = 0
    for iota in range(th["I"]):
        w = [p[m] * E[iota][m] for m in range(th["M"])]
        z = sum(w)
        if z == 0:
            continue
        key = tuple(round(float(x / z), 13) for x in w) if dedupe else None
        if dedupe and key in cache:
            total += z * cache[key]
            continue
        val = tree_value(th, [x / z for x in w], exact)
        if dedupe:
            cache[key] = val
        total += z * val
    return total


def alpha_eff(E):
    E = np.asarray(E, dtype=float)
    I, M = E.shape
    best = np.inf
    for mask in range(1, 2**M - 1):
        P = [m for m in range(M) if mask >> m & 1]
        N = [m for m in range(M) if not mask >> m & 1]
        c = np.r_[np.zeros(M), np.ones(I)]
        A = np.block([[E, -np.eye(I)], [-E, -np.eye(I)]])
        Aeq = np.zeros((2, M + I))
        Aeq[0, P] = 1
        Aeq[1, N] = 1
        bounds = [(0, None) if m in P else (None, 0) for m in range(M)] + [(0, None)] * I
        res = linprog(c, A_ub=A, b_ub=np.zeros(2 * I), A_eq=Aeq, b_eq=[0.5, -0.5],
                      bounds=bounds, method="highs",
                      options={"primal_feasibility_tolerance": 1e-10,
                               "dual_feasibility_tolerance": 1e-10})
        best = min(best, res.fun)
    return best


def conditional_law(th, iota, actions):
    """Exact P(tau | iota) for an open-loop action list, as a dict."""
    p, E = as_frac(th["mixing"]), as_frac(th["emission"])
    T, O, init = as_frac(th["transitions"]), as_frac(th["obs_kernel"]), as_frac(th["initial"])
    M, S, NO, H = th["M"], th["S"], th["O"], th["H"]
    w = [p[m] * E[iota][m] for m in range(M)]
    z = sum(w)
    law = {}

    def walk(t, s, w, hist):
        a = actions[t - 1]
        for o in range(NO):
            wo = [w[m] * O[m][s][a][o] for m in range(M)]
            if sum(wo) == 0:
                continue
            if t == H:
                law[hist + ((s, a, o),)] = sum(wo) / z
                continue
            for s2 in range(S):
                w2 = [wo[m] * T[m][s][a][s2] for m in range(M)]
                if sum(w2) > 0:
                    walk(t + 1, s2, w2, hist + ((s, a, o),))

    for s in range(S):
        w1 = [w[m] * init[m][s] for m in range(M)]
        if sum(w1) > 0:
            walk(1, s, w1, ())
    return law


def kl(p0, p1):
    import math
    total = 0.0
    for k, a in p0.items():
        b = p1[k]
        if a != b:
            total += float(a) * math.log1p(float(a / b - 1))
    return total


def main():
    out = {}
    tiny = load("tiny_mdp")
    out["tiny_blind"] = float(blind_value(tiny))
    out["tiny_informed"] = float(informed_value(tiny))
    m2 = load("mixed_m2")
    out["m2_blind"] = float(blind_value(m2))
    out["m2_informed"] = float(informed_value(m2))
    out["m2_alpha"] = alpha_eff(m2["emission"])
    hard, ref = load("hard_m8"), load("hard_m8_reference")
    out["hard_blind"] = blind_value(hard, exact=False)
    out["hard_informed"] = informed_value(hard, exact=False, dedupe=True)
    out["hard_alpha"] = alpha_eff(hard["emission"])
    hard_symbol = hard["I"] - 1
    optimal = [0, 7, 6]
    flipped = [0, 7, 7]
    out["kl_hard_opt"] = kl(conditional_law(ref, hard_symbol, optimal),
                            conditional_law(hard, hard_symbol, optimal))
    out["kl_hard_sub"] = kl(conditional_law(ref, hard_symbol, flipped),
                            conditional_law(hard, hard_symbol, flipped))
    out["kl_sym0_sub"] = kl(conditional_law(ref, 0, flipped), conditional_law(hard, 0, flipped))
    for k, v in out.items():
        print(f"{k} = {v!r}")


if __name__ == "__main__":
    main()
