"""Game kernels on the unit square and their discretized payoff matrices.

The ratio kernel R and difference kernel A drive the two zero-sum games; the
matrices evaluate them on the uniform level grid {i/N}.  Also: the
discretization error bounds, the support-exclusion constant, and the
Lipschitz constants used by search certificates and property tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._backend import HAS_NUMBA, backend, njit, prange


class KernelKind(str, Enum):
    RATIO = "ratio"
    DIFFERENCE = "difference"


def kernel_r(x: float, y: float, n: int) -> float:
    """Ratio kernel R(x, y); the diagonal is 1 by definition (also at (1,1))."""
    _check_point(x, y, n)
    if x == y:
        return 1.0
    if x > y:
        return (1.0 - x ** (n - 1) * y) / (1.0 - y**n)
    if y == 1.0:
        # continuous limit of the x < y branch
        return (1.0 - x**n) / (1.0 - x) / n
    return (1.0 - y) / (1.0 - y**n) * (1.0 - x**n) / (1.0 - x)


def kernel_a(x: float, y: float, n: int) -> float:
    """Difference kernel A(x, y) >= 0; vanishes on the diagonal."""
    _check_point(x, y, n)
    if x == y:
        return 0.0
    if x > y:
        return y * (x ** (n - 1) - y ** (n - 1))
    return (1.0 - y) * (_power_sum(y, n) - _power_sum(x, n))


def stop_weight(x: float, y, n: int):
    """Reward weight b(x, y) = (1-x^{n-1}) min{1, (1-y)/(1-x)} + x^{n-1}(1-y).

    This is the integrand of the quantile representation of the rule reward;
    R(x, y) = b(x, y) / (1 - y^n).  Vectorized in y.
    """
    y = np.asarray(y, dtype=np.float64)
    if x >= 1.0:
        return 1.0 - y
    low = 1.0 - x ** (n - 1) * y  # y <= x
    high = (1.0 - y) * (1.0 - x**n) / (1.0 - x)  # y > x
    return np.where(y <= x, low, high)


def _power_sum(z: float, n: int) -> float:
    """sum_{k=1}^{n-1} z^k."""
    if z == 1.0:
        return float(n - 1)
    return (z - z**n) / (1.0 - z)


def _check_point(x, y, n):
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ValueError(f"kernel arguments must lie in [0, 1], got ({x!r}, {y!r})")
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"horizon must be an integer >= 2, got {n!r}")


@dataclass(frozen=True)
class PayoffMatrix:
    """Dense (N-1) x (N-1) payoff matrix; rows = stopper levels, cols = adversary."""

    kind: KernelKind
    n: int
    N: int
    entries: np.ndarray

    def __post_init__(self):
        entries = np.ascontiguousarray(self.entries, dtype=np.float64)
        if entries.shape != (self.N - 1, self.N - 1):
            raise ValueError(f"entries must be {(self.N - 1, self.N - 1)}, got {entries.shape}")
        object.__setattr__(self, "kind", KernelKind(self.kind))
        object.__setattr__(self, "entries", entries)

    def to_csv(self) -> str:
        lines = [",".join(format(v, ".17g") for v in row) for row in self.entries]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {"kind": self.kind.value, "n": self.n, "N": self.N,
             "rows": [[float(v) for v in row] for row in self.entries]}
        )

    @classmethod
    def from_json(cls, text: str) -> "PayoffMatrix":
        obj = json.loads(text)
        return cls(KernelKind(obj["kind"]), int(obj["n"]), int(obj["N"]),
                   np.asarray(obj["rows"], dtype=np.float64))


def _ratio_entries_numpy(n: int, N: int) -> np.ndarray:
    g = np.arange(1, N, dtype=np.float64) / N
    X, Y = g[:, None], g[None, :]
    lower = (1.0 - X ** (n - 1) * Y) / (1.0 - Y**n)
    upper = ((1.0 - X**n) / (1.0 - X)) * ((1.0 - Y) / (1.0 - Y**n))
    out = np.where(X > Y, lower, upper)
    np.fill_diagonal(out, 1.0)
    return out


def _diff_entries_numpy(n: int, N: int) -> np.ndarray:
    g = np.arange(1, N, dtype=np.float64) / N
    X, Y = g[:, None], g[None, :]
    lower = Y * (X ** (n - 1) - Y ** (n - 1))
    upper = (1.0 - Y) * ((Y - Y**n) / (1.0 - Y) - (X - X**n) / (1.0 - X))
    out = np.where(X > Y, lower, upper)
    np.fill_diagonal(out, 0.0)
    return out


if HAS_NUMBA:

    @njit(cache=True, parallel=True)
    def _ratio_entries_numba(n, N, out):  # pragma: no cover - executed off-interpreter
        for i in prange(1, N):
            x = i / N
            for j in range(1, N):
                y = j / N
                if i == j:
                    out[i - 1, j - 1] = 1.0
                elif i > j:
                    out[i - 1, j - 1] = (1.0 - x ** (n - 1) * y) / (1.0 - y**n)
                else:
                    out[i - 1, j - 1] = ((1.0 - x**n) / (1.0 - x)) * ((1.0 - y) / (1.0 - y**n))

    @njit(cache=True, parallel=True)
    def _diff_entries_numba(n, N, out):  # pragma: no cover
        for i in prange(1, N):
            x = i / N
            for j in range(1, N):
                y = j / N
                if i == j:
                    out[i - 1, j - 1] = 0.0
                elif i > j:
                    out[i - 1, j - 1] = y * (x ** (n - 1) - y ** (n - 1))
                else:
                    out[i - 1, j - 1] = (1.0 - y) * (
                        (y - y**n) / (1.0 - y) - (x - x**n) / (1.0 - x)
                    )


def payoff_matrix(kind: KernelKind | str, n: int, N: int) -> PayoffMatrix:
    """Discretized game matrix R_N or A_N on levels {1/N, ..., (N-1)/N}."""
    kind = KernelKind(kind)
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"horizon must be an integer >= 2, got {n!r}")
    if not isinstance(N, (int, np.integer)) or N < 3:
        raise ValueError(f"grid size must be an integer >= 3, got {N!r}")
    n, N = int(n), int(N)
    if backend() == "numba":
        out = np.empty((N - 1, N - 1))
        if kind is KernelKind.RATIO:
            _ratio_entries_numba(n, N, out)
        else:
            _diff_entries_numba(n, N, out)
    else:
        out = _ratio_entries_numpy(n, N) if kind is KernelKind.RATIO else _diff_entries_numpy(n, N)
    return PayoffMatrix(kind, n, N, out)


def reward_weights(n: int, N: int) -> np.ndarray:
    """Matrix B with B[i-1, j-1] = stop_weight(i/N, j/N, n); R_N = B / d per column."""
    g = np.arange(1, N, dtype=np.float64) / N
    X, Y = g[:, None], g[None, :]
    low = 1.0 - X ** (n - 1) * Y
    high = (1.0 - Y) * (1.0 - X**n) / (1.0 - X)
    return np.where(Y <= X, low, high)


def prophet_weights(n: int, N: int) -> np.ndarray:
    """Vector d with d[j-1] = 1 - (j/N)^n (prophet weight of increment j)."""
    g = np.arange(1, N, dtype=np.float64) / N
    return 1.0 - g**n


def err_bound_diff(n: int, N: int) -> float:
    """Discretization error bound (n-1)/(2N) for the difference game, n >= 2."""
    if n < 2 or N < 1:
        raise ValueError(f"need n >= 2 and N >= 1, got n={n!r}, N={N!r}")
    return (n - 1) / (2.0 * N)


def err_bound_ratio(n: int, N: int) -> float:
    """Discretization error bound (n-1) / (2N [(1-1/e)^2 - 1/(n-1)]), n >= 4."""
    if n < 4:
        raise ValueError(f"the ratio error bound requires n >= 4, got {n!r}")
    if N < 1:
        raise ValueError(f"need N >= 1, got {N!r}")
    return (n - 1) / (2.0 * N * ((1.0 - math.exp(-1.0)) ** 2 - 1.0 / (n - 1)))


def support_cutoff(n: int) -> float:
    """c_n = -ln(1 - (1-1/e)^2 + 1/(n-1)); the optimal stopper strategy puts
    no mass on levels in [1 - c_n/n, 1].  Defined for n >= 4."""
    if n < 4:
        raise ValueError(f"the support cutoff requires n >= 4, got {n!r}")
    return -math.log(1.0 - (1.0 - math.exp(-1.0)) ** 2 + 1.0 / (n - 1))


def lipschitz_a(n: int) -> float:
    """Lipschitz constant n-1 of the difference kernel in either argument."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n!r}")
    return float(n - 1)


def lipschitz_r(n: int, eps: float) -> float:
    """Lipschitz constant (n-1)/(1-(1-eps)^n) of R for x restricted to [0, 1-eps]."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n!r}")
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps!r}")
    return (n - 1) / (1.0 - (1.0 - eps) ** n)
