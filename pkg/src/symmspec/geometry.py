"""Centrally symmetric planar domains and antipodally invariant triangulations.

A mesh is produced by triangulating the upper half of the domain (``x2 >= 0``)
and gluing it to its image under ``x -> -x``.  Nodes on the cut chord are
shared by both halves, so the node involution is exact by construction and no
floating-point matching is ever needed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .errors import ConfigError, MeshDegenerate, SymmetryBroken

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class DomainKind(str, enum.Enum):
    DISK = "disk"
    ELLIPSE = "ellipse"
    RECTANGLE = "rectangle"
    POLAR_PERTURBED = "polar_perturbed"


@dataclass(frozen=True)
class DomainSpec:
    """Parametric description of a centrally symmetric planar domain.

    Only the fields belonging to ``kind`` are meaningful:

    * ``disk_radius`` for a disk,
    * ``semi_axes = (a, b)`` for an ellipse ``(x/a)^2 + (y/b)^2 < 1``,
    * ``side_lengths = (a, b)`` for the rectangle ``|x| < a/2, |y| < b/2``,
    * ``polar_r0`` and ``polar_terms = ((k, eps_k), ...)`` for the star domain
      with boundary ``r(theta) = r0 + sum eps_k cos(2 k theta)``.
    """

    kind: DomainKind
    disk_radius: Optional[float] = None
    semi_axes: Optional[tuple[float, float]] = None
    side_lengths: Optional[tuple[float, float]] = None
    polar_r0: Optional[float] = None
    polar_terms: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        kind = DomainKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is DomainKind.DISK:
            if self.disk_radius is None or not self.disk_radius > 0:
                raise ValueError("disk needs a positive radius")
        elif kind is DomainKind.ELLIPSE:
            if self.semi_axes is None or len(self.semi_axes) != 2 or min(self.semi_axes) <= 0:
                raise ValueError("ellipse needs two positive semi-axes")
            object.__setattr__(self, "semi_axes", tuple(float(v) for v in self.semi_axes))
        elif kind is DomainKind.RECTANGLE:
            if self.side_lengths is None or len(self.side_lengths) != 2 or min(self.side_lengths) <= 0:
                raise ValueError("rectangle needs two positive side lengths")
            object.__setattr__(self, "side_lengths", tuple(float(v) for v in self.side_lengths))
        else:
            if self.polar_r0 is None or not self.polar_r0 > 0:
                raise ValueError("polar domain needs a positive r0")
            terms = tuple((int(k), float(e)) for k, e in self.polar_terms)
            if any(k < 1 for k, _ in terms):
                raise ValueError("polar frequencies must be positive integers")
            if self.polar_r0 <= sum(abs(e) for _, e in terms):
                raise ValueError("polar boundary radius must stay positive: r0 > sum |eps_k|")
            object.__setattr__(self, "polar_terms", terms)

    # convenience constructors
    @classmethod
    def disk(cls, radius=1.0):
        return cls(DomainKind.DISK, disk_radius=float(radius))

    @classmethod
    def ellipse(cls, a, b):
        return cls(DomainKind.ELLIPSE, semi_axes=(a, b))

    @classmethod
    def rectangle(cls, a, b):
        return cls(DomainKind.RECTANGLE, side_lengths=(a, b))

    @classmethod
    def polar(cls, r0, terms: Sequence[tuple[int, float]] = ()):
        return cls(DomainKind.POLAR_PERTURBED, polar_r0=float(r0), polar_terms=tuple(terms))

    def label(self) -> str:
        k = self.kind
        if k is DomainKind.DISK:
            return f"disk_r{self.disk_radius:.6g}"
        if k is DomainKind.ELLIPSE:
            return "ellipse_{:.6g}x{:.6g}".format(*self.semi_axes)
        if k is DomainKind.RECTANGLE:
            return "rect_{:.6g}x{:.6g}".format(*self.side_lengths)
        eps = "_".join(f"{k}:{e:.6g}" for k, e in self.polar_terms) or "none"
        return f"polar_r{self.polar_r0:.6g}_{eps}"

    def scaled(self, s: float) -> "DomainSpec":
        k = self.kind
        if k is DomainKind.DISK:
            return replace(self, disk_radius=self.disk_radius * s)
        if k is DomainKind.ELLIPSE:
            return replace(self, semi_axes=(self.semi_axes[0] * s, self.semi_axes[1] * s))
        if k is DomainKind.RECTANGLE:
            return replace(self, side_lengths=(self.side_lengths[0] * s, self.side_lengths[1] * s))
        return replace(self, polar_r0=self.polar_r0 * s,
                       polar_terms=tuple((m, e * s) for m, e in self.polar_terms))

    def radial(self, theta):
        """Boundary distance from the origin in direction ``theta``."""
        theta = np.asarray(theta, dtype=float)
        k = self.kind
        if k is DomainKind.DISK:
            return np.full_like(theta, self.disk_radius)
        if k is DomainKind.ELLIPSE:
            a, b = self.semi_axes
            return a * b / np.hypot(b * np.cos(theta), a * np.sin(theta))
        if k is DomainKind.RECTANGLE:
            a, b = self.side_lengths
            c, s = np.abs(np.cos(theta)), np.abs(np.sin(theta))
            with np.errstate(divide="ignore"):
                return np.minimum(np.where(c > 0, 0.5 * a / c, np.inf),
                                  np.where(s > 0, 0.5 * b / s, np.inf))
        r = np.full_like(theta, self.polar_r0)
        for m, e in self.polar_terms:
            r = r + e * np.cos(2 * m * theta)
        return r

    def contains(self, points) -> np.ndarray:
        """Strict interior test for an ``(n, 2)`` array of points."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        x, y = p[:, 0], p[:, 1]
        k = self.kind
        if k is DomainKind.DISK:
            return x * x + y * y < self.disk_radius ** 2
        if k is DomainKind.ELLIPSE:
            a, b = self.semi_axes
            return (x / a) ** 2 + (y / b) ** 2 < 1.0
        if k is DomainKind.RECTANGLE:
            a, b = self.side_lengths
            return (np.abs(x) < 0.5 * a) & (np.abs(y) < 0.5 * b)
        return np.hypot(x, y) < self.radial(np.arctan2(y, x))

    def inradius(self) -> float:
        """Distance from the origin to the nearest boundary point."""
        k = self.kind
        if k is DomainKind.DISK:
            return self.disk_radius
        if k is DomainKind.ELLIPSE:
            return min(self.semi_axes)
        if k is DomainKind.RECTANGLE:
            return 0.5 * min(self.side_lengths)
        theta = np.linspace(0.0, np.pi, 20001)
        return float(self.radial(theta).min())


def area(spec: DomainSpec) -> float:
    """Exact area of the domain."""
    k = spec.kind
    if k is DomainKind.DISK:
        return math.pi * spec.disk_radius ** 2
    if k is DomainKind.ELLIPSE:
        return math.pi * spec.semi_axes[0] * spec.semi_axes[1]
    if k is DomainKind.RECTANGLE:
        return spec.side_lengths[0] * spec.side_lengths[1]
    # 1/2 int r^2 dtheta; cross terms between distinct frequencies integrate to zero
    by_freq: dict[int, float] = {}
    for m, e in spec.polar_terms:
        by_freq[m] = by_freq.get(m, 0.0) + e
    return math.pi * spec.polar_r0 ** 2 + 0.5 * math.pi * sum(e * e for e in by_freq.values())


def normalize_area(spec: DomainSpec, target: float = math.pi) -> DomainSpec:
    """Rescale ``spec`` so that its area equals ``target``.

    Eigenvalues of the Laplacian transform as ``lam(s * Omega) = lam(Omega) / s**2``.
    Parameters are rounded to 13 significant digits so that ``s * Omega`` and
    ``Omega`` normalize to the same spec (and hence the same mesh) despite
    rounding in ``s``.
    """
    s = math.sqrt(target / area(spec))
    out = spec.scaled(s)
    r = _round_sig
    k = out.kind
    if k is DomainKind.DISK:
        return replace(out, disk_radius=r(out.disk_radius))
    if k is DomainKind.ELLIPSE:
        return replace(out, semi_axes=tuple(map(r, out.semi_axes)))
    if k is DomainKind.RECTANGLE:
        return replace(out, side_lengths=tuple(map(r, out.side_lengths)))
    return replace(out, polar_r0=r(out.polar_r0), polar_terms=tuple((m, r(e)) for m, e in out.polar_terms))


def _round_sig(x: float, digits: int = 13) -> float:
    return float(f"{x:.{digits - 1}e}")


# ---------------------------------------------------------------------------
# meshing


@dataclass
class SymmetricMesh:
    """Triangulation with an exact antipodal node involution.

    ``involution[i]`` is the node at ``-nodes[i]``.  ``boundary_pairs`` lists each
    antipodal boundary pair once as ``(master, slave)`` where the slave is the
    node with ``x1 < 0`` (ties on ``x1 == 0`` resolved by ``x2 < 0``).
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_nodes: np.ndarray
    involution: np.ndarray
    boundary_pairs: np.ndarray
    h: float
    domain: Optional[DomainSpec] = field(default=None, compare=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def triangle_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def polygon_area(self) -> float:
        return float(self.triangle_areas().sum())

    def triangle_diameters(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e = [np.linalg.norm(p[:, i] - p[:, j], axis=1) for i, j in ((0, 1), (1, 2), (2, 0))]
        return np.max(e, axis=0)

    def validate(self) -> None:
        """Check every structural invariant, raising on the first failure."""
        n = self.n_nodes
        sig = self.involution
        if sig.shape != (n,) or not np.array_equal(np.sort(sig), np.arange(n)):
            raise SymmetryBroken("involution is not a permutation")
        if not np.array_equal(sig[sig], np.arange(n)):
            raise SymmetryBroken("involution is not self-inverse")
        if np.any(sig == np.arange(n)):
            raise SymmetryBroken("involution has a fixed point")
        if not np.all(self.nodes[sig] == -self.nodes):
            raise SymmetryBroken("reflected coordinates are not exact negations")
        tri_set = {tuple(sorted(t)) for t in self.triangles.tolist()}
        for t in self.triangles.tolist():
            if tuple(sorted(sig[t].tolist())) not in tri_set:
                raise SymmetryBroken(f"image of triangle {t} is not a triangle")
        areas = self.triangle_areas()
        if np.any(areas < 1e-12 * self.h ** 2):
            raise MeshDegenerate("triangle with (near) zero or negative area")
        bnd = set(self.boundary_nodes.tolist())
        seen: list[int] = []
        for i, j in self.boundary_pairs.tolist():
            if sig[i] != j:
                raise SymmetryBroken(f"boundary pair ({i}, {j}) is not antipodal")
            seen += [i, j]
        if sorted(seen) != sorted(bnd) or len(seen) != len(bnd):
            raise SymmetryBroken("boundary nodes are not covered exactly once by pairs")


def _arc_points(spec: DomainSpec, h: float) -> np.ndarray:
    """Boundary points of the upper half from (R0, 0) to (-R0, 0), spacing ~h."""
    if spec.kind is DomainKind.RECTANGLE:
        a, b = spec.side_lengths
        corners = np.array([[a / 2, 0.0], [a / 2, b / 2], [-a / 2, b / 2], [-a / 2, 0.0]])
        pts = [corners[:1]]
        for p, q in zip(corners[:-1], corners[1:]):
            m = max(1, math.ceil(np.linalg.norm(q - p) / h - 1e-9))
            s = np.arange(1, m + 1)[:, None] / m
            seg = p + s * (q - p)
            seg[-1] = q
            pts.append(seg)
        return np.vstack(pts)

    if spec.kind is DomainKind.DISK:
        curve = lambda t: spec.disk_radius * np.column_stack([np.cos(t), np.sin(t)])  # noqa: E731
    elif spec.kind is DomainKind.ELLIPSE:
        a, b = spec.semi_axes
        curve = lambda t: np.column_stack([a * np.cos(t), b * np.sin(t)])  # noqa: E731
    else:
        curve = lambda t: spec.radial(t)[:, None] * np.column_stack([np.cos(t), np.sin(t)])  # noqa: E731

    fine = np.linspace(0.0, np.pi, 8193)
    c = curve(fine)
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(c, axis=0), axis=1))])
    m = max(2, math.ceil(s[-1] / h - 1e-9))
    t = np.interp(np.linspace(0.0, s[-1], m + 1), s, fine)
    pts = curve(t)
    r0 = float(spec.radial(np.array([0.0]))[0])
    pts[0] = (r0, 0.0)
    pts[-1] = (-r0, 0.0)
    return pts


def _cut_points(r0: float, h: float) -> np.ndarray:
    """Interior nodes on the chord ``x2 = 0``, mirror-exact and avoiding the origin."""
    nseg = math.ceil(2 * r0 / h - 1e-9)
    if nseg % 2 == 0:
        nseg += 1
    x = np.empty(nseg - 1)
    half = (nseg - 1) // 2
    step = 2 * r0 / nseg
    for j in range(1, half + 1):
        x[j - 1] = -r0 + j * step
    x[half:] = -x[:half][::-1]
    return np.column_stack([x, np.zeros_like(x)])


def _lattice_points(spec: DomainSpec, h: float, arc: np.ndarray) -> np.ndarray:
    # dense boundary sample for distance queries
    sub = 8
    w = np.linspace(0.0, 1.0, sub, endpoint=False)[:, None, None]
    dense = (arc[:-1][None] * (1 - w) + arc[1:][None] * w).reshape(-1, 2)
    tree = cKDTree(np.vstack([dense, arc[-1:]]))

    rmax = float(np.max(np.linalg.norm(arc, axis=1)))
    dy = h * math.sqrt(3) / 2
    rows = []
    j = 1
    while j * dy < rmax:
        shift = 0.5 * h if j % 2 else 0.0
        x = np.arange(-rmax - shift, rmax + h, h) + shift
        rows.append(np.column_stack([x, np.full_like(x, j * dy)]))
        j += 1
    if not rows:
        return np.empty((0, 2))
    cand = np.vstack(rows)
    cand = cand[spec.contains(cand)]
    dist, _ = tree.query(cand)
    return cand[dist > 0.55 * h]


def _upper_triangles(pts: np.ndarray, spec: DomainSpec) -> np.ndarray:
    tri = Delaunay(pts).simplices
    c = pts[tri].mean(axis=1)
    keep = (c[:, 1] > 0) & spec.contains(c)
    tri = tri[keep]
    p = pts[tri]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    signed = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    tri = tri[np.abs(signed) > 0]
    signed = signed[np.abs(signed) > 0]
    flip = signed < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    return tri.astype(np.int64)


def _relax(pts: np.ndarray, nfixed: int, spec: DomainSpec, iterations: int = 6) -> np.ndarray:
    """Laplacian smoothing of the free (lattice) nodes."""
    pts = pts.copy()
    for _ in range(iterations):
        tri = _upper_triangles(pts, spec)
        edges = np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        edges = np.vstack([edges, edges[:, ::-1]])
        edges = np.unique(edges, axis=0)
        acc = np.zeros_like(pts)
        np.add.at(acc, edges[:, 0], pts[edges[:, 1]])
        deg = np.bincount(edges[:, 0], minlength=len(pts)).astype(float)
        free = np.arange(nfixed, len(pts))
        free = free[deg[free] > 0]
        new = acc[free] / deg[free, None]
        ok = spec.contains(new) & (new[:, 1] > 0)
        pts[free[ok]] = new[ok]
    return pts


def _check_half_boundary(tri: np.ndarray, expected: set) -> None:
    edges = np.sort(np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    if np.any(counts > 2):
        raise MeshDegenerate("non-manifold edge in half-domain triangulation")
    outer = {tuple(e) for e in uniq[counts == 1].tolist()}
    if outer != expected:
        raise MeshDegenerate("half-domain triangulation does not recover the boundary")


def build_mesh(spec: DomainSpec, h: float) -> SymmetricMesh:
    """Triangulate ``spec`` with target edge length ``h``.

    The upper half is triangulated (boundary arc, cut chord, smoothed hexagonal
    interior lattice, Delaunay), then reflected through the origin.
    """
    h = float(h)
    if not h > 0:
        raise ValueError("mesh size must be positive")
    if h >= spec.inradius():
        raise ValueError(f"mesh size {h} is not below the inradius {spec.inradius():.6g}")

    arc = _arc_points(spec, h)
    na = len(arc)
    r0 = arc[0, 0]
    cut = _cut_points(r0, h)
    nc = len(cut)
    inner = _lattice_points(spec, h, arc)
    pts = np.vstack([arc, cut, inner])
    nfixed = na + nc
    pts = _relax(pts, nfixed, spec)
    tri = _upper_triangles(pts, spec)

    # chord nodes ordered by x: (-R0, 0), interior cut nodes, (R0, 0)
    chord = np.concatenate([[na - 1], np.arange(na, na + nc), [0]])
    expected = {tuple(sorted((i, i + 1))) for i in range(na - 1)}
    expected |= {tuple(sorted((int(chord[i]), int(chord[i + 1])))) for i in range(len(chord) - 1)}
    _check_half_boundary(tri, expected)

    nh = len(pts)
    is_chord = np.zeros(nh, dtype=bool)
    is_chord[chord] = True
    off = np.flatnonzero(~is_chord)
    sigma_half = np.empty(nh, dtype=np.int64)
    sigma_half[off] = nh + np.arange(len(off))
    sigma_half[chord] = chord[::-1]

    nodes = np.vstack([pts, -pts[off]])
    sigma = np.empty(len(nodes), dtype=np.int64)
    sigma[:nh] = sigma_half
    sigma[nh:] = off
    triangles = np.vstack([tri, sigma_half[tri]])

    arc_idx = np.arange(na)
    boundary = np.concatenate([arc_idx, sigma_half[arc_idx[1:-1]]])
    pairs = []
    for i in arc_idx:
        j = int(sigma_half[i])
        if i == na - 1:
            continue  # (R0,0) <-> (-R0,0) already listed from i = 0
        pairs.append(_order_pair(nodes, int(i), j))
    mesh = SymmetricMesh(
        nodes=nodes,
        triangles=triangles,
        boundary_nodes=boundary.astype(np.int64),
        involution=sigma,
        boundary_pairs=np.array(pairs, dtype=np.int64).reshape(-1, 2),
        h=h,
        domain=spec,
    )
    mesh.validate()
    return mesh


def _order_pair(nodes: np.ndarray, i: int, j: int) -> tuple[int, int]:
    """Return ``(master, slave)``."""
    xi, xj = nodes[i], nodes[j]
    if xi[0] < 0 or (xi[0] == 0 and xi[1] < 0):
        return j, i
    return i, j


# ---------------------------------------------------------------------------
# domain files

_TOP_KEYS = {"kind", "radius", "semi_axes", "side_lengths", "polar", "mesh"}
_KIND_KEYS = {
    DomainKind.DISK: "radius",
    DomainKind.ELLIPSE: "semi_axes",
    DomainKind.RECTANGLE: "side_lengths",
    DomainKind.POLAR_PERTURBED: "polar",
}


def parse_domain(text: str) -> tuple[DomainSpec, Optional[float]]:
    """Parse a TOML domain file, returning the spec and the optional ``mesh.h``.

    Example::

        kind = "polar_perturbed"
        polar = { r0 = 1.0, terms = [[1, 0.1]] }
        [mesh]
        h = 0.05
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid domain file: {exc}") from exc
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    if "kind" not in data:
        raise ConfigError("missing 'kind'")
    try:
        kind = DomainKind(str(data["kind"]).lower())
    except ValueError:
        raise ConfigError(f"unknown kind {data['kind']!r}") from None
    needed = _KIND_KEYS[kind]
    extra = (set(_KIND_KEYS.values()) & set(data)) - {needed}
    if needed not in data or extra:
        raise ConfigError(f"kind {kind.value!r} requires exactly the '{needed}' field")

    h = None
    if "mesh" in data:
        mesh = data["mesh"]
        if not isinstance(mesh, dict) or set(mesh) - {"h"}:
            raise ConfigError("mesh table accepts only 'h'")
        h = mesh.get("h")
        if h is not None and (not isinstance(h, (int, float)) or h <= 0):
            raise ConfigError("mesh.h must be a positive number")
        h = None if h is None else float(h)

    try:
        if kind is DomainKind.DISK:
            spec = DomainSpec.disk(_number(data["radius"]))
        elif kind is DomainKind.ELLIPSE:
            spec = DomainSpec.ellipse(*_pair(data["semi_axes"]))
        elif kind is DomainKind.RECTANGLE:
            spec = DomainSpec.rectangle(*_pair(data["side_lengths"]))
        else:
            polar = data["polar"]
            if not isinstance(polar, dict) or set(polar) - {"r0", "terms"} or "r0" not in polar:
                raise ConfigError("polar table needs 'r0' and optional 'terms'")
            terms = []
            for t in polar.get("terms", []):
                if not isinstance(t, list) or len(t) != 2 or not isinstance(t[0], int):
                    raise ConfigError("polar terms must be [k, eps] with integer k")
                terms.append((t[0], _number(t[1])))
            spec = DomainSpec.polar(_number(polar["r0"]), terms)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return spec, h


def load_domain(path) -> tuple[DomainSpec, Optional[float]]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read domain file: {exc}") from exc
    return parse_domain(text)


def format_domain(spec: DomainSpec, h: Optional[float] = None) -> str:
    """Inverse of :func:`parse_domain`."""
    lines = [f'kind = "{spec.kind.value}"']
    k = spec.kind
    if k is DomainKind.DISK:
        lines.append(f"radius = {spec.disk_radius!r}")
    elif k is DomainKind.ELLIPSE:
        lines.append("semi_axes = [{!r}, {!r}]".format(*spec.semi_axes))
    elif k is DomainKind.RECTANGLE:
        lines.append("side_lengths = [{!r}, {!r}]".format(*spec.side_lengths))
    else:
        terms = ", ".join(f"[{m}, {e!r}]" for m, e in spec.polar_terms)
        lines.append(f"polar = {{ r0 = {spec.polar_r0!r}, terms = [{terms}] }}")
    if h is not None:
        lines += ["", "[mesh]", f"h = {float(h)!r}"]
    return "\n".join(lines) + "\n"


def _number(v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}")
    return float(v)


def _pair(v) -> tuple[float, float]:
    if not isinstance(v, list) or len(v) != 2:
        raise ConfigError(f"expected [a, b], got {v!r}")
    return _number(v[0]), _number(v[1])
