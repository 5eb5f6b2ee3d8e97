"""Parity classification, the two-series check, and the inequality harness.

Equal-measure comparisons normalize every domain to area pi, so the
comparison ball is always the unit disk and its eigenvalues come from the
Bessel oracle.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .assembly import apply_dirichlet, apply_nonlocal, assemble_free
from .eigensolve import DEFAULT_TOL, Spectrum, smallest_eigenpairs
from .errors import MissingVectors
from .geometry import DomainSpec, SymmetricMesh, area, build_mesh, normalize_area
from .oracles import Parity, bessel_zero, disk_spectrum

CLUSTER_TOL = 1e-6
AMBIGUITY_TOL = 1e-6
SAME_MESH_TOL = 1e-6
CROSS_ORACLE_TOL = 0.02
STRICT_MIN_GAP = 1e-3


def _fmt(x) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# classification


@dataclass
class ClassifiedEntry:
    eigenvalue: float
    parity: Parity
    odd_residual: float
    even_residual: float
    cluster_id: int


@dataclass
class ClassifiedSpectrum:
    entries: list[ClassifiedEntry]
    cluster_tol: float
    vectors: Optional[np.ndarray] = field(default=None, repr=False)

    def values(self, parity: Optional[Parity] = None) -> np.ndarray:
        return np.array([e.eigenvalue for e in self.entries
                         if parity is None or e.parity is Parity(parity)])

    def parities(self) -> list[Parity]:
        return [e.parity for e in self.entries]


def cluster_indices(values, tol: float) -> list[list[int]]:
    """Group sorted ``values`` whose consecutive relative gap is below ``tol``."""
    groups: list[list[int]] = []
    for i, v in enumerate(values):
        if groups:
            prev = values[groups[-1][-1]]
            scale = max(abs(v), abs(prev))
            if abs(v - prev) <= tol * scale:
                groups[-1].append(i)
                continue
        groups.append([i])
    return groups


def classify(spec: Spectrum, mesh: SymmetricMesh, cluster_tol: float = CLUSTER_TOL) -> ClassifiedSpectrum:
    """Label eigenvectors even or odd under ``x -> -x``.

    Near-degenerate eigenvalues are grouped; inside a group the basis is
    rotated onto eigenvectors of the antipodal permutation ``S``.  The
    residuals ``||v -/+ S v||_M / (sqrt 2 ||v||_M)`` measure the distance from
    even and odd symmetry and satisfy ``even^2 + odd^2 = 2``.
    """
    if spec.eigenvectors is None:
        raise MissingVectors("classification needs eigenvectors")
    V = spec.full_vectors()
    M = assemble_free(mesh).mass
    sig = mesh.involution
    lam = np.asarray(spec.eigenvalues)
    out_vals, out_vecs, entries = [], [], []
    for cid, idx in enumerate(cluster_indices(lam, cluster_tol)):
        Vc = V[:, idx]
        MVc = M @ Vc
        C = MVc.T @ Vc[sig]
        C = 0.5 * (C + C.T)
        G = MVc.T @ Vc
        w, U = _generalized_eigh(C, 0.5 * (G + G.T))
        if np.any(np.abs(w) < 1.0 - AMBIGUITY_TOL):
            rot, vals, labels = Vc, lam[idx], [Parity.MIXED] * len(idx)
        else:
            rot = Vc @ U
            vals = (U * U).T @ lam[idx] / np.einsum("ij,ij->j", U, G @ U)
            labels = [Parity.EVEN if s > 0 else Parity.ODD for s in w]
        for j in range(rot.shape[1]):
            v = rot[:, j]
            nv = math.sqrt(v @ (M @ v))
            plus, minus = v + v[sig], v - v[sig]
            odd_res = math.sqrt(max(plus @ (M @ plus), 0.0)) / (math.sqrt(2) * nv)
            even_res = math.sqrt(max(minus @ (M @ minus), 0.0)) / (math.sqrt(2) * nv)
            entries.append(ClassifiedEntry(float(vals[j]), labels[j], odd_res, even_res, cid))
            out_vecs.append(v / nv)
            out_vals.append(vals[j])
    return ClassifiedSpectrum(entries, cluster_tol, np.column_stack(out_vecs))


def _generalized_eigh(C, G):
    from scipy.linalg import eigh

    w, U = eigh(C, G)
    order = np.argsort(-w, kind="stable")
    return w[order], U[:, order]


# ---------------------------------------------------------------------------
# two-series identity


@dataclass
class UnionReport:
    merged: np.ndarray
    sources: list[str]
    problem_p: np.ndarray
    deltas: np.ndarray
    tol: float
    complete: bool

    @property
    def passed(self) -> bool:
        return self.complete and bool(np.all(self.deltas <= self.tol))


def verify_union(p: Spectrum, d: ClassifiedSpectrum, nmn: ClassifiedSpectrum,
                 count: int, tol: float = SAME_MESH_TOL) -> UnionReport:
    """Compare the first ``count`` problem-P eigenvalues with the sorted merge of
    even Dirichlet and odd Neumann eigenvalues."""
    even_d = d.values(Parity.EVEN)
    odd_n = nmn.values(Parity.ODD)
    merged = np.concatenate([even_d, odd_n])
    sources = np.array(["dirichlet"] * len(even_d) + ["neumann"] * len(odd_n))
    order = np.argsort(merged, kind="stable")
    merged, sources = merged[order][:count], [str(s) for s in sources[order][:count]]
    # entries past the largest computed value of either series may be missing
    horizon = min(d.values().max(initial=np.inf), nmn.values().max(initial=np.inf))
    complete = len(merged) == count and len(p.eigenvalues) >= count and merged[-1] <= horizon * (1 + tol)
    pv = np.asarray(p.eigenvalues[:count])
    n = min(len(merged), len(pv))
    deltas = np.abs(merged[:n] - pv[:n]) / np.abs(pv[:n])
    return UnionReport(merged, sources, pv, deltas, tol, complete)


# ---------------------------------------------------------------------------
# inequality harness


class CheckStatus(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    WARN = "warn"


@dataclass
class Check:
    name: str
    lhs: float
    rhs: float
    relation: str
    margin: float
    budget: float
    status: CheckStatus
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status is not CheckStatus.FAIL


@dataclass
class InequalityReport:
    domain_id: str
    area: float
    h: float
    lambda1_P: float
    lambda1_D: float
    lambda2_N: float
    checks: list[Check]
    lambda2_P: float = math.nan
    lambda2_D: float = math.nan
    lambda3_N: float = math.nan
    refined: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    aspect: float = math.nan

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        d = asdict(self)
        for c in d["checks"]:
            c["status"] = CheckStatus(c["status"]).value
            c["pass"] = c["status"] != CheckStatus.FAIL.value
        d["all_pass"] = self.all_pass
        return d

    def to_json(self, header: Optional[dict] = None) -> str:
        d = self.to_dict()
        if header is not None:
            d = {"config": header, **d}
        return json.dumps(_jsonable(d), indent=2, sort_keys=False) + "\n"


def _jsonable(obj):
    # repr() keeps 17 significant digits and maps nan to a string JSON can hold
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


@dataclass(frozen=True)
class BallReference:
    """Unit-disk (area pi) reference values from the Bessel oracle."""

    lambda1_P: float
    lambda2_P: float
    lambda1_D: float
    p: float
    diameter: float = 2.0


def ball_reference() -> BallReference:
    p = bessel_zero(1, 1, derivative=True)
    j01 = bessel_zero(0, 1)
    distinct = sorted({round(e.value, 12) for e in disk_spectrum(1.0, "p", 6)})
    return BallReference(lambda1_P=p * p, lambda2_P=distinct[1], lambda1_D=j01 * j01, p=p)


def _quantities(spec: DomainSpec, h: float, tol: float) -> dict:
    mesh = build_mesh(spec, h)
    free = assemble_free(mesh)
    n = smallest_eigenpairs(free, 3, tol).eigenvalues
    d = smallest_eigenpairs(apply_dirichlet(free, mesh), 2, tol).eigenvalues
    p = smallest_eigenpairs(apply_nonlocal(free, mesh), 2, tol).eigenvalues
    return dict(lambda1_P=p[0], lambda2_P=p[1], lambda1_D=d[0], lambda2_D=d[1],
                lambda2_N=n[1], lambda3_N=n[2], n_nodes=mesh.n_nodes)


# (name, relation, kind, lhs(q, B), rhs(q, B))
#   kind: "same_mesh" equality, "strict", "strict_gap" (strict + relative gap), "weak"
# inverse_norm uses the area-matched unit disk, d = 2, so d^2 / (4 p^2) = 1 / p^2
_CHECKS = [
    ("p1_equals_n2", "==", "same_mesh", lambda q, B: q["lambda1_P"], lambda q, B: q["lambda2_N"]),
    ("p1_below_d1", "<", "strict", lambda q, B: q["lambda1_P"], lambda q, B: q["lambda1_D"]),
    ("n2_below_d1", "<", "strict_gap", lambda q, B: q["lambda2_N"], lambda q, B: q["lambda1_D"]),
    ("n3_below_d2", "<", "strict_gap", lambda q, B: q["lambda3_N"], lambda q, B: q["lambda2_D"]),
    ("ball_max_p1", "<=", "weak", lambda q, B: q["lambda1_P"], lambda q, B: B.lambda1_P),
    ("ball_max_ratio", "<=", "weak", lambda q, B: q["lambda1_P"] / q["lambda1_D"], lambda q, B: B.lambda1_P / B.lambda1_D),
    ("ball_min_gap", ">=", "weak", lambda q, B: q["lambda1_D"] - q["lambda1_P"], lambda q, B: B.lambda1_D - B.lambda1_P),
    ("inverse_p1", ">=", "weak", lambda q, B: 1 / q["lambda1_P"], lambda q, B: 1 / B.lambda1_P),
    ("inverse_sum", ">=", "weak", lambda q, B: 1 / q["lambda1_P"] + 1 / q["lambda2_P"],
     lambda q, B: 1 / B.lambda1_P + 1 / B.lambda2_P),
    ("inverse_norm", ">=", "weak", lambda q, B: 1 / q["lambda1_P"], lambda q, B: B.diameter ** 2 / (4 * B.p ** 2)),
]


def _slack(relation, lhs, rhs):
    # non-negative exactly when the relation holds
    if relation in ("<", "<="):
        return rhs - lhs
    if relation in (">", ">="):
        return lhs - rhs
    return -abs(lhs - rhs)


def inequality_report(spec: DomainSpec, h: float, tol: float = DEFAULT_TOL,
                      estimate: bool = True, domain_id: Optional[str] = None) -> InequalityReport:
    """Run every eigenvalue identity and inequality on ``spec`` scaled to area pi.

    Discretization error of each check quantity is estimated from a second
    solve at ``h / 2`` as ``4/3 |q_h - q_{h/2}|`` (second-order convergence).
    Strict inequalities must hold with slack above twice that estimate;
    non-strict ones may be violated by at most twice the estimate.
    """
    spec_n = normalize_area(spec, math.pi)
    B = ball_reference()
    q = _quantities(spec_n, h, tol)
    q2 = _quantities(spec_n, h / 2, tol) if estimate else None

    checks = []
    for name, rel, kind, lhs_f, rhs_f in _CHECKS:
        lhs, rhs = float(lhs_f(q, B)), float(rhs_f(q, B))
        margin = abs(lhs - rhs)
        slack = _slack(rel, lhs, rhs)
        est = 0.0
        if q2 is not None:
            est = 4.0 / 3.0 * abs(slack - _slack(rel, float(lhs_f(q2, B)), float(rhs_f(q2, B))))
        budget = 2.0 * est
        note = ""
        if kind == "same_mesh":
            budget = SAME_MESH_TOL * abs(rhs)
            ok = margin <= budget
        elif kind in ("strict", "strict_gap"):
            ok = slack > budget
            if kind == "strict_gap":
                ok = ok and slack > STRICT_MIN_GAP * abs(rhs)
        else:
            ok = slack >= -budget
        checks.append(Check(name, lhs, rhs, rel, margin, budget,
                            CheckStatus.PASS if ok else CheckStatus.FAIL, note))

    warnings = []
    literal = math.pi * B.p / B.diameter
    inv = 1.0 / q["lambda1_P"]
    lit_ok = inv >= literal
    msg = ("literal norm bound ||L^-1|| >= pi p / d = {:.6g} is not met by 1/lambda1 = {:.6g}; "
           "the bound is not dimensionally consistent with ||L^-1|| = 1/lambda1, "
           "so inverse_norm checks as 1/lambda1 >= d^2/(4 p^2)").format(literal, inv)
    checks.append(Check("inverse_norm_literal", inv, literal, ">=", abs(inv - literal), 0.0,
                        CheckStatus.PASS if lit_ok else CheckStatus.WARN, "" if lit_ok else msg))
    if not lit_ok:
        warnings.append(msg)

    return InequalityReport(
        domain_id=domain_id or spec_n.label(),
        area=area(spec_n),
        h=float(h),
        lambda1_P=float(q["lambda1_P"]),
        lambda1_D=float(q["lambda1_D"]),
        lambda2_N=float(q["lambda2_N"]),
        checks=checks,
        lambda2_P=float(q["lambda2_P"]),
        lambda2_D=float(q["lambda2_D"]),
        lambda3_N=float(q["lambda3_N"]),
        refined={k: float(v) for k, v in q2.items()} if q2 else {},
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# shape families


class Family(str, enum.Enum):
    ELLIPSE = "ellipse"
    POLAR_PERTURBED = "polar_perturbed"
    RECTANGLE = "rectangle"


FAMILY_RANGES = {
    Family.ELLIPSE: (1.0, 2.0),
    Family.POLAR_PERTURBED: (0.0, 0.3),
    Family.RECTANGLE: (1.0, 2.5),
}


def family_member(family, param: float) -> DomainSpec:
    """Area-pi member of ``family`` (aspect ratio, or ``eps`` for the polar family)."""
    family = Family(family)
    if family is Family.ELLIPSE:
        return DomainSpec.ellipse(math.sqrt(param), 1 / math.sqrt(param))
    if family is Family.RECTANGLE:
        return DomainSpec.rectangle(math.sqrt(math.pi * param), math.sqrt(math.pi / param))
    return normalize_area(DomainSpec.polar(1.0, [(1, param)]), math.pi)


@dataclass
class FamilySweep:
    family: Family
    params: list[float]
    reports: list[InequalityReport]
    extremal_ok: bool

    @property
    def all_pass(self) -> bool:
        return self.extremal_ok and all(r.all_pass for r in self.reports)

    def summary_csv(self, header: Optional[dict] = None) -> str:
        buf = io.StringIO()
        for k, v in (header or {}).items():
            buf.write(f"# {k}={v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["domain_id", "aspect", "lambda1P", "lambda1D", "lambda2N",
                    "margin_13", "margin_14", "margin_15", "all_pass"])
        for r in self.reports:
            w.writerow([r.domain_id, _fmt(r.aspect), _fmt(r.lambda1_P), _fmt(r.lambda1_D), _fmt(r.lambda2_N),
                        _fmt(r.check("ball_max_p1").margin), _fmt(r.check("ball_max_ratio").margin),
                        _fmt(r.check("ball_min_gap").margin), str(r.all_pass).lower()])
        return buf.getvalue()


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("SYMM_SPEC_THREADS", "1")))
    except ValueError:
        return 1


def sweep_family(family, steps: int, h: float, tol: float = DEFAULT_TOL) -> FamilySweep:
    """Reports for ``steps`` area-pi members of increasing asymmetry.

    Also checks that the largest first problem-P eigenvalue is attained at the
    most ball-like (first) member, up to the members' discretization budgets.
    """
    family = Family(family)
    if steps < 2:
        raise ValueError("a sweep needs at least two steps")
    lo, hi = FAMILY_RANGES[family]
    params = [float(v) for v in np.linspace(lo, hi, steps)]

    def run(i):
        r = inequality_report(family_member(family, params[i]), h, tol,
                              domain_id=f"{family.value}_{i:02d}")
        r.aspect = params[i]
        return r

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        reports = list(pool.map(run, range(steps)))
    lam = np.array([r.lambda1_P for r in reports])
    best = int(np.argmax(lam))
    slack = reports[0].check("ball_max_p1").budget + reports[best].check("ball_max_p1").budget
    extremal_ok = lam[0] >= lam[best] - slack
    return FamilySweep(family, params, reports, bool(extremal_ok))
