"""Potentials V on the half line: Fibonacci, constant, periodic and file-backed."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

THETA = (math.sqrt(5.0) - 1.0) / 2.0
MAX_SITES = 10_000_000  # n*theta mod 1 stays exact enough below this


@dataclass(frozen=True)
class Potential:
    """Finite prefix V_1..V_N of a real potential.

    ``values[0]`` holds V_1.  ``kind`` is one of ``fibonacci``, ``periodic``,
    ``file`` or ``constant``; ``param`` is lambda, the period, the source path
    or the constant respectively.
    """

    values: np.ndarray
    kind: str = "file"
    param: object = None
    _sup: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64).ravel()
        if arr.size == 0:
            raise ValueError("potential must have at least one site")
        if not np.all(np.isfinite(arr)):
            raise ValueError("potential values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "_sup", float(np.max(np.abs(arr))))
        if self.kind == "periodic":
            p = int(self.param)
            if p < 1 or (arr.size > p and not np.array_equal(arr[p:], arr[:-p])):
                raise ValueError("values are not periodic with period %d" % p)

    @property
    def sup_norm(self) -> float:
        return self._sup

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, Potential):
            return NotImplemented
        return (self.kind, self.param) == (other.kind, other.param) and np.array_equal(
            self.values, other.values
        )

    def __hash__(self):
        return hash((self.kind, str(self.param), self.values.tobytes()))

    def prefix(self, q: int) -> np.ndarray:
        """First q values (V_1..V_q)."""
        if q < 1 or q > self.values.size:
            raise ValueError("q=%d outside stored range 1..%d" % (q, self.values.size))
        return self.values[:q]

    def at(self, n):
        """Values at integer sites n.

        Stored sites come from ``values``; other sites follow the generating
        rule (Fibonacci formula, constant, periodic tiling).  File potentials
        have no rule beyond 1..N.
        """
        n = np.asarray(n, dtype=np.int64)
        if self.kind == "fibonacci":
            return _fib_values(float(self.param), n)
        if self.kind == "constant":
            return np.full(n.shape, float(self.param))
        if self.kind == "periodic":
            return self.values[(n - 1) % int(self.param)]
        if n.size and (n.min() < 1 or n.max() > self.values.size):
            raise ValueError("no extension rule for kind %r beyond sites 1..%d" % (self.kind, self.values.size))
        return self.values[n - 1]

    def two_sided(self, m: int):
        """Values on sites -m..m for the full-line operator."""
        return self.at(np.arange(-m, m + 1))

    def half_line(self, N: int, side: int = 1):
        """V_{side*1}, ..., V_{side*N}: the potential of H^+ or (reflected) H^-."""
        return self.at(side * np.arange(1, N + 1))


def _fib_values(lam, n):
    n = np.asarray(n, dtype=np.float64)
    x = n * THETA
    frac = x - np.floor(x)
    return np.where((frac >= 1.0 - THETA) & (frac < 1.0), lam, 0.0)


def fibonacci_potential(lam: float, N: int) -> Potential:
    """V_n = lam * 1[{n theta} in [1-theta, 1)] for n = 1..N."""
    if not lam > 0:
        raise ValueError("lambda must be positive, got %r" % lam)
    N = int(N)
    if N < 1:
        raise ValueError("N must be at least 1")
    if N > MAX_SITES:
        raise ValueError("N=%d exceeds the %d-site cap" % (N, MAX_SITES))
    return Potential(_fib_values(lam, np.arange(1, N + 1)), "fibonacci", float(lam))


def constant_potential(c: float, N: int) -> Potential:
    if N < 1:
        raise ValueError("N must be at least 1")
    return Potential(np.full(int(N), float(c)), "constant", float(c))


def periodize(V: Potential, q: int, N: int) -> Potential:
    """q-periodic extension of V_1..V_q out to N sites."""
    if q < 1 or q > len(V):
        raise ValueError("period q=%d exceeds stored length %d" % (q, len(V)))
    if N < q:
        raise ValueError("N must be at least q")
    base = V.values[:q]
    return Potential(np.resize(base, int(N)), "periodic", int(q))


def load_potential(path) -> Potential:
    """Read one real per line; '#' lines and blank lines are skipped."""
    path = Path(path)
    text = path.read_bytes().decode("utf-8")
    vals = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            x = float(line)
        except ValueError:
            raise ValueError("%s: line %d: cannot parse %r as a real" % (path, lineno, line)) from None
        if not math.isfinite(x):
            raise ValueError("%s: line %d: non-finite value" % (path, lineno))
        vals.append(x)
    if not vals:
        raise ValueError("%s: no values" % path)
    return Potential(np.array(vals), "file", str(path))


def save_potential(V: Potential, path) -> None:
    # repr round-trips doubles exactly
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# kind=%s param=%s\n" % (V.kind, V.param))
        for x in V.values:
            fh.write(repr(float(x)) + "\n")
