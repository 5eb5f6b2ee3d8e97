"""Exact reference data: Bessel functions and zeros, disk and rectangle spectra
with parity labels, and closed-form Green's functions of the unit disk."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import _backend
from .errors import BracketingFailed, CoincidentPoints, DomainError, EvaluationTooClose
from .geometry import SymmetricMesh


class Problem(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    PROBLEM_P = "p"


class Parity(str, enum.Enum):
    EVEN = "even"
    ODD = "odd"
    MIXED = "mixed"


@dataclass(frozen=True)
class LabeledEigenvalue:
    value: float
    problem: Problem
    parity: Parity
    indices: tuple[int, int]
    source: Problem = None  # Dirichlet or Neumann series a problem-P entry comes from

    def __post_init__(self):
        if self.source is None:
            object.__setattr__(self, "source", self.problem)


# ---------------------------------------------------------------------------
# Bessel functions of the first kind

MAX_ORDER = 50
ZERO_SCAN_LIMIT = 200.0
ZERO_TOL = 1e-12


def _series(m: int, x: float) -> float:
    t = 1.0
    for i in range(1, m + 1):
        t *= 0.5 * x / i
    q = 0.25 * x * x
    s = t
    k = 1
    while True:
        t *= -q / (k * (k + m))
        s += t
        if abs(t) <= 1e-17 * abs(s):
            return s
        k += 1


def _miller(nmax: int, x: float) -> np.ndarray:
    """``J_0 .. J_nmax`` at ``x > 0`` by backward recurrence.

    Normalized with ``J_0 + 2 sum J_2k = 1``.  The start order grows with
    ``x`` so that the neglected tail is below double precision.
    """
    big = max(nmax, x)
    start = int(big + 30 + 8 * big ** (1 / 3))
    start += start % 2
    vals = np.zeros(nmax + 1)
    jp, j = 0.0, 1e-300
    norm = 0.0
    for n in range(start, 0, -1):
        jm = 2.0 * n / x * j - jp
        jp, j = j, jm
        if abs(j) > 1e250:
            j *= 1e-250
            jp *= 1e-250
            vals *= 1e-250
            norm *= 1e-250
        if n - 1 <= nmax:
            vals[n - 1] = j
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm += 2.0 * j
    norm += j
    return vals / norm


def _use_series(m: int, x: float) -> bool:
    # below this point the series terms decrease monotonically: no cancellation
    return x < 2.0 * math.sqrt(m + 1)


def bessel_j(m: int, x: float) -> float:
    """``J_m(x)`` for integer ``0 <= m <= 50`` and ``x >= 0``.

    Ascending series while ``x < 2 sqrt(m + 1)``, Miller's backward
    recurrence otherwise; about 15 correct digits in absolute terms.
    """
    m = int(m)
    if not 0 <= m <= MAX_ORDER + 1:
        raise DomainError(f"order {m} outside [0, {MAX_ORDER}]")
    x = float(x)
    if x < 0 or math.isnan(x):
        raise DomainError(f"negative argument {x}")
    if x == 0.0:
        return 1.0 if m == 0 else 0.0
    if _use_series(m, x):
        return _series(m, x)
    return float(_miller(m, x)[m])


def bessel_jp(m: int, x: float) -> float:
    """Derivative ``J_m'(x)``."""
    if m == 0:
        return -bessel_j(1, x)
    return 0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x))


@lru_cache(maxsize=None)
def _zeros_upto(m: int, derivative: bool, upto: float) -> tuple[float, ...]:
    f = (lambda x: bessel_jp(m, x)) if derivative else (lambda x: bessel_j(m, x))
    # every positive zero of J_m and J_m' exceeds 1.8, apart from the trivial
    # zero of J_0' at the origin, so the scan starts at 0.5
    grid = np.concatenate([[0.5], np.arange(1.0, upto + 1.0)])
    zeros = []
    fa = f(grid[0])
    for a, b in zip(grid[:-1], grid[1:]):
        fb = f(b)
        if fa == 0.0:
            zeros.append(float(a))
        elif fa * fb < 0:
            lo, hi, flo = a, b, fa
            while hi - lo > ZERO_TOL:
                mid = 0.5 * (lo + hi)
                fm = f(mid)
                if fm == 0.0:
                    lo = hi = mid
                    break
                if (fm < 0) == (flo < 0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            zeros.append(0.5 * (lo + hi))
        fa = fb
    return tuple(zeros)


def bessel_zero(m: int, k: int, derivative: bool = False) -> float:
    """``k``-th positive zero of ``J_m`` (or of ``J_m'``).

    Sign changes are bracketed on a unit grid and refined by bisection to
    ``1e-12``.  The scan is extended up to ``x = 200``.
    """
    if not 0 <= m <= MAX_ORDER or k < 1:
        raise ValueError("need 0 <= m <= 50 and k >= 1")
    upto = 32.0
    while True:
        z = _zeros_upto(int(m), bool(derivative), upto)
        if len(z) >= k:
            return z[k - 1]
        if upto >= ZERO_SCAN_LIMIT:
            raise BracketingFailed(f"zero {k} of J_{m}{chr(39) if derivative else ''} beyond {ZERO_SCAN_LIMIT}")
        upto = min(2 * upto, ZERO_SCAN_LIMIT)


# ---------------------------------------------------------------------------
# exact spectra


def _parity(even: bool) -> Parity:
    return Parity.EVEN if even else Parity.ODD


def _disk_modes(problem: Problem, zmax: float) -> list[tuple[float, int, int]]:
    """``(z, m, k)`` with ``z <= zmax``, one entry per angular function."""
    modes = []
    if problem is Problem.NEUMANN:
        modes.append((0.0, 0, 0))
    m = 0
    # j_{m,1} > m and j'_{m,1} > m for m >= 1, so higher orders cannot contribute
    while m <= min(zmax, MAX_ORDER):
        for k, z in enumerate(_zeros_upto(m, problem is Problem.NEUMANN, math.ceil(zmax)), start=1):
            if z <= zmax:
                modes += [(z, m, k)] * (1 if m == 0 else 2)
        m += 1
    return modes


def disk_spectrum(radius: float, problem, count: int) -> list[LabeledEigenvalue]:
    """Lowest ``count`` eigenvalues of the disk with multiplicity.

    ``indices = (m, k)``: angular order and radial index; the Neumann constant
    mode is ``(0, 0)``.  Problem P merges even Dirichlet and odd Neumann modes.
    """
    problem = Problem(problem)
    if not 1 <= count <= 100:
        raise ValueError("count must be in [1, 100]")
    zmax = 12.0
    while True:
        if problem is Problem.PROBLEM_P:
            modes = [(z, m, k, Problem.DIRICHLET) for z, m, k in _disk_modes(Problem.DIRICHLET, zmax) if m % 2 == 0]
            modes += [(z, m, k, Problem.NEUMANN) for z, m, k in _disk_modes(Problem.NEUMANN, zmax) if m % 2 == 1]
        else:
            modes = [(z, m, k, problem) for z, m, k in _disk_modes(problem, zmax)]
        if len(modes) >= count or zmax >= ZERO_SCAN_LIMIT:
            break
        zmax = min(1.5 * zmax, ZERO_SCAN_LIMIT)
    modes.sort(key=lambda t: (t[0], t[1], t[2]))
    r2 = radius * radius
    return [LabeledEigenvalue(float(z * z / r2), problem, _parity(m % 2 == 0), (m, k), src)
            for z, m, k, src in modes[:count]]


def rectangle_spectrum(a: float, b: float, problem, count: int) -> list[LabeledEigenvalue]:
    """Lowest ``count`` eigenvalues ``pi^2 (m^2/a^2 + n^2/b^2)`` of the ``a x b`` rectangle."""
    problem = Problem(problem)
    if not 1 <= count <= 500:
        raise ValueError("count must be in [1, 500]")
    bound = 4.0 * math.pi ** 2 * (1 / a ** 2 + 1 / b ** 2)
    while True:
        mmax = int(a * math.sqrt(bound) / math.pi) + 1
        nmax = int(b * math.sqrt(bound) / math.pi) + 1
        modes = []
        for m in range(mmax + 1):
            for n in range(nmax + 1):
                even = (m + n) % 2 == 0
                dirichlet_ok = m >= 1 and n >= 1
                if problem is Problem.DIRICHLET and not dirichlet_ok:
                    continue
                if problem is Problem.PROBLEM_P and even and not dirichlet_ok:
                    continue
                lam = math.pi ** 2 * (m * m / (a * a) + n * n / (b * b))
                if lam <= bound:
                    src = problem
                    if problem is Problem.PROBLEM_P:
                        src = Problem.DIRICHLET if even else Problem.NEUMANN
                    modes.append((lam, m, n, even, src))
        if len(modes) >= count:
            break
        bound *= 2.0
    modes.sort(key=lambda t: (t[0], t[1], t[2]))
    return [LabeledEigenvalue(lam, problem, _parity(even), (m, n), src)
            for lam, m, n, even, src in modes[:count]]


# ---------------------------------------------------------------------------
# Green's functions of the unit disk

_COINCIDE = 1e-14


def _point(p, name, closed):
    p = np.asarray(p, dtype=float).reshape(2)
    r = math.hypot(p[0], p[1])
    if (r > 1.0 + 1e-12) if closed else (r >= 1.0):
        raise DomainError(f"{name}={tuple(p)} outside the unit disk")
    return p


def _logs(x, y):
    """``ln|x - y|`` and ``ln(|y| |x - y/|y|^2|)``; the latter is smooth at ``y = 0``."""
    d = math.hypot(x[0] - y[0], x[1] - y[1])
    if d < _COINCIDE:
        raise CoincidentPoints(f"x={tuple(x)} coincides with singular point {tuple(y)}")
    dot = x[0] * y[0] + x[1] * y[1]
    q = 1.0 - 2.0 * dot + (x[0] ** 2 + x[1] ** 2) * (y[0] ** 2 + y[1] ** 2)
    return math.log(d), 0.5 * math.log(q)


def green_dirichlet_disk(x, y) -> float:
    """Dirichlet Green's function of the unit disk (method of images)."""
    x, y = _point(x, "x", True), _point(y, "y", False)
    l1, l2 = _logs(x, y)
    return -(l1 - l2) / (2 * math.pi)


def green_neumann_disk(x, y, normalization: float = 0.0) -> float:
    """Neumann function of the unit disk with constant flux ``-1/(2 pi)``.

    The bare kernel already has zero mean over the unit circle, so the default
    ``normalization = 0`` is the zero-boundary-average choice.
    """
    x, y = _point(x, "x", True), _point(y, "y", False)
    l1, l2 = _logs(x, y)
    return -(l1 + l2) / (2 * math.pi) + normalization


def green_p_disk(x, y, normalization: float = 0.0) -> float:
    """Green's function of the antipodal nonlocal problem on the unit disk.

    ``G_P(x, y) = [G_D(x, y) + G_D(x, -y) + G_N(x, y) - G_N(x, -y)] / 2``.
    """
    x, y = _point(x, "x", True), _point(y, "y", False)
    ys = -y
    gd = green_dirichlet_disk(x, y) + green_dirichlet_disk(x, ys)
    gn = green_neumann_disk(x, y, normalization) - green_neumann_disk(x, ys, normalization)
    return 0.5 * (gd + gn)


def green_p_closed(x, y) -> np.ndarray:
    """Vectorized ``G_P`` in the simplified form the quadrature uses.

    The ``ln|x + y|`` terms of the Dirichlet and Neumann parts cancel, leaving
    ``-(1/4 pi) ln(|x - y|^2 / (1 + 2 x.y + |x|^2 |y|^2))``, singular only at ``x = y``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    d2 = ((x - y) ** 2).sum(axis=1)
    q = 1.0 + 2.0 * (x * y).sum(axis=1) + (x * x).sum(axis=1) * (y * y).sum(axis=1)
    return -np.log(d2 / q) / (4 * math.pi)


class GreensKind(str, enum.Enum):
    DIRICHLET_DISK = "dirichlet_disk"
    NEUMANN_DISK = "neumann_disk"
    PROBLEM_P_DISK = "problem_p_disk"


@dataclass(frozen=True)
class GreensKernel:
    kind: GreensKind
    normalization: float = 0.0

    def __call__(self, x, y) -> float:
        if self.kind is GreensKind.DIRICHLET_DISK:
            return green_dirichlet_disk(x, y)
        if self.kind is GreensKind.NEUMANN_DISK:
            return green_neumann_disk(x, y, self.normalization)
        return green_p_disk(x, y, self.normalization)


SEPARATION = 0.2


def solve_via_green(
    f: Callable[[np.ndarray], np.ndarray],
    eval_points: Sequence,
    quad_mesh: SymmetricMesh,
) -> np.ndarray:
    """``u(x) = int G_P(x, y) f(y) dy`` by one-point (centroid) quadrature.

    ``f`` maps an ``(n, 2)`` array of points to ``n`` values.  Each evaluation
    point must lie at least ``SEPARATION`` times the diameter of the nearest
    quadrature cell away from that cell's centroid; error is ``O(h^2 log h)``.
    """
    from scipy.spatial import cKDTree

    x = np.ascontiguousarray(np.atleast_2d(np.asarray(eval_points, dtype=float)))
    if np.any(np.hypot(x[:, 0], x[:, 1]) >= 1.0):
        raise DomainError("evaluation points must lie inside the unit disk")
    cent = np.ascontiguousarray(quad_mesh.nodes[quad_mesh.triangles].mean(axis=1))
    diam = quad_mesh.triangle_diameters()
    dist, idx = cKDTree(cent).query(x)
    bad = dist < SEPARATION * diam[idx]
    if np.any(bad):
        raise EvaluationTooClose(f"{int(bad.sum())} evaluation point(s) too close to quadrature nodes")
    w = np.ascontiguousarray(quad_mesh.triangle_areas() * np.asarray(f(cent), dtype=float))
    return _backend.green_p_sum(x, cent, w)
