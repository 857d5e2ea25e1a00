"""Independent oracles shared by the test suite.

Everything here deliberately avoids the library's closed forms: expectations
are computed by exhaustive enumeration, game values by Shapley-Snow kernel
enumeration (optimal strategies of a matrix game live on square submatrices).
"""

from itertools import combinations, product

import numpy as np

from prophet_sharp import DiscreteDistribution, QuantileIncrements


def enumerate_prophet(dist: DiscreteDistribution, n: int) -> float:
    """E max of n iid draws by summing over all |atoms|^n outcomes."""
    total = 0.0
    for seq in product(range(dist.values.size), repeat=n):
        prob = float(np.prod(dist.probs[list(seq)]))
        total += prob * float(dist.values[list(seq)].max())
    return total


def enumerate_rule_reward(dist, n: int, theta: float, p: float) -> float:
    """Expected reward of tau_p(theta) by exhaustive enumeration.

    Walks every atom sequence; tie steps branch on the Bernoulli(p) outcome
    with the matching weight, so randomization is integrated exactly.
    """
    values, probs = dist.values, dist.probs
    total = 0.0
    for seq in product(range(values.size), repeat=n):
        xs = values[list(seq)]
        prob = float(np.prod(probs[list(seq)]))

        def walk(t: int, weight: float) -> float:
            if t == n - 1:
                return weight * xs[n - 1]
            x = xs[t]
            if x > theta:
                return weight * x
            if x == theta:
                return weight * p * x + walk(t + 1, weight * (1.0 - p))
            return walk(t + 1, weight)

        total += prob * walk(0, 1.0)
    return total


def _adjugate(B: np.ndarray) -> np.ndarray:
    k = B.shape[0]
    if k == 1:
        return np.ones((1, 1))
    cof = np.empty_like(B)
    for i in range(k):
        for j in range(k):
            minor = np.delete(np.delete(B, i, axis=0), j, axis=1)
            cof[i, j] = (-1.0) ** (i + j) * np.linalg.det(minor)
    return cof.T


def enumerated_game_value(G: np.ndarray, tol: float = 1e-9) -> float:
    """Value of the game where the row player maximizes x^T G y.

    Enumerates all square submatrices (Shapley-Snow kernels) and returns the
    first candidate whose strategies certify a saddle point.
    """
    G = np.asarray(G, dtype=np.float64)
    rows, cols = G.shape
    for k in range(1, min(rows, cols) + 1):
        for I in combinations(range(rows), k):
            for J in combinations(range(cols), k):
                B = G[np.ix_(I, J)]
                adj = _adjugate(B)
                den = float(adj.sum())
                if abs(den) < 1e-13:
                    continue
                v = float(np.linalg.det(B)) / den
                x = np.zeros(rows)
                x[list(I)] = adj.sum(axis=0) / den
                y = np.zeros(cols)
                y[list(J)] = adj.sum(axis=1) / den
                if x.min() < -1e-10 or y.min() < -1e-10:
                    continue
                x, y = np.maximum(x, 0.0), np.maximum(y, 0.0)
                x, y = x / x.sum(), y / y.sum()
                if (G.T @ x).min() >= v - tol and (G @ y).max() <= v + tol:
                    return v
    raise AssertionError("no certified Shapley-Snow kernel found")


def oracle_minmax(M: np.ndarray) -> float:
    """min_mu max_i (M mu)_i  (the row player of M maximizes)."""
    return enumerated_game_value(M)


def oracle_maxmin(M: np.ndarray) -> float:
    """max_mu min_i (M mu)_i  (the column player of M maximizes)."""
    return enumerated_game_value(M.T)


def random_dist(rng, max_atoms: int = 5, vmax: float = 3.0) -> DiscreteDistribution:
    k = int(rng.integers(1, max_atoms + 1))
    values = np.sort(rng.choice(np.linspace(0.0, vmax, 200), size=k, replace=False))
    probs = rng.dirichlet(np.ones(k))
    probs = probs / probs.sum()
    return DiscreteDistribution(values, probs)


def random_grid_member(rng, N: int, scale: float = 2.0) -> DiscreteDistribution:
    v = rng.exponential(scale / N, size=N - 1)
    v[rng.random(N - 1) < 0.4] = 0.0
    return QuantileIncrements(N, v).to_distribution()
