import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from symmspec.errors import CoincidentPoints, DomainError, EvaluationTooClose
from symmspec.geometry import DomainSpec, build_mesh
from symmspec.oracles import (
    GreensKernel,
    GreensKind,
    Parity,
    Problem,
    bessel_j,
    bessel_jp,
    bessel_zero,
    disk_spectrum,
    green_dirichlet_disk,
    green_neumann_disk,
    green_p_closed,
    green_p_disk,
    rectangle_spectrum,
    solve_via_green,
)

# first zeros, from scipy.special.jn_zeros / jnp_zeros
J01, J11, JP11, JP21 = 2.404825557695773, 3.8317059702075125, 1.8411837813406593, 3.0542369282271404


# Bessel functions

@settings(max_examples=300, deadline=None)
@given(st.integers(0, 50), st.floats(0.0, 120.0))
def test_bessel_j_matches_scipy(m, x):
    assert abs(bessel_j(m, x) - special.jv(m, x)) < 5e-14


@pytest.mark.parametrize("m", [0, 1, 2, 7])
def test_bessel_derivative_matches_scipy(m):
    for x in np.linspace(0.1, 40, 57):
        assert abs(bessel_jp(m, x) - special.jvp(m, x)) < 5e-14


def test_bessel_special_values():
    assert bessel_j(0, 0.0) == 1.0 and bessel_j(3, 0.0) == 0.0
    with pytest.raises(DomainError):
        bessel_j(0, -1.0)
    with pytest.raises(DomainError):
        bessel_j(60, 1.0)


def test_known_zeros():
    assert bessel_zero(0, 1) == pytest.approx(J01, abs=1e-11)
    assert bessel_zero(1, 1) == pytest.approx(J11, abs=1e-11)
    assert bessel_zero(1, 1, derivative=True) == pytest.approx(JP11, abs=1e-11)
    assert bessel_zero(2, 1, derivative=True) == pytest.approx(JP21, abs=1e-11)
    # the constant used throughout the ball comparisons
    assert round(bessel_zero(1, 1, derivative=True), 4) == 1.8412


@pytest.mark.parametrize("m", [0, 1, 3, 10, 20])
def test_zeros_match_scipy(m):
    ours = [bessel_zero(m, k) for k in range(1, 11)]
    np.testing.assert_allclose(ours, special.jn_zeros(m, 10), atol=1e-11)
    ours = [bessel_zero(m, k, derivative=True) for k in range(1, 11)]
    ref = special.jnp_zeros(m, 10) if m > 0 else special.jnp_zeros(0, 10)
    np.testing.assert_allclose(ours, ref, atol=1e-11)


@pytest.mark.parametrize("m", range(0, 21))
def test_zero_interlacing(m):
    # j_{m,k} < j_{m+1,k} < j_{m,k+1}, and j'_{m,k} < j_{m,k} for m >= 1
    for k in range(1, 6):
        a, b, c = bessel_zero(m, k), bessel_zero(m + 1, k), bessel_zero(m, k + 1)
        assert a < b < c
        if m >= 1:
            assert bessel_zero(m, k, derivative=True) < a


def test_zero_bad_arguments():
    with pytest.raises(ValueError):
        bessel_zero(0, 0)
    with pytest.raises(ValueError):
        bessel_zero(51, 1)


# exact spectra

def test_disk_p_spectrum_values():
    vals = [e.value for e in disk_spectrum(1.0, "p", 10)]
    distinct = sorted({round(v, 10) for v in vals})
    np.testing.assert_allclose(distinct, [3.38996, 5.78319, 17.650, 26.375, 28.424, 30.471], rtol=5e-5)
    assert vals[0] == vals[1] == pytest.approx(JP11 ** 2, rel=1e-12)


def test_disk_p_is_merge_of_series():
    d = [e for e in disk_spectrum(1.0, "dirichlet", 60) if e.parity is Parity.EVEN]
    n = [e for e in disk_spectrum(1.0, "neumann", 60) if e.parity is Parity.ODD]
    merged = sorted([e.value for e in d] + [e.value for e in n])[:20]
    p = disk_spectrum(1.0, "p", 20)
    np.testing.assert_array_equal([e.value for e in p], merged)
    for e in p:
        assert e.source is (Problem.DIRICHLET if e.parity is Parity.EVEN else Problem.NEUMANN)


def test_disk_labels_and_scaling():
    n = disk_spectrum(1.0, "neumann", 3)
    assert n[0].value == 0.0 and n[0].indices == (0, 0) and n[0].parity is Parity.EVEN
    assert n[1].parity is Parity.ODD and n[1].indices == (1, 1)
    d2 = disk_spectrum(2.0, "dirichlet", 1)[0].value
    assert d2 == pytest.approx(J01 ** 2 / 4, rel=1e-12)


def test_rectangle_spectra():
    a = b = math.sqrt(math.pi)
    p = [e.value for e in rectangle_spectrum(a, b, "p", 6)]
    np.testing.assert_allclose(p[:3], [math.pi, math.pi, 2 * math.pi], rtol=1e-14)
    assert rectangle_spectrum(1, 1, "neumann", 1)[0].value == 0.0
    d = rectangle_spectrum(1, 2, "dirichlet", 2)
    assert d[0].value == pytest.approx(math.pi ** 2 * 1.25) and d[0].indices == (1, 1)
    p = rectangle_spectrum(1, 1, "p", 2)
    assert [e.value for e in p] == pytest.approx([math.pi ** 2] * 2)
    assert all(e.parity is Parity.ODD for e in p)


def test_rectangle_p_is_merge():
    a, b = 1.3, 0.9
    d = [e.value for e in rectangle_spectrum(a, b, "dirichlet", 200) if e.parity is Parity.EVEN]
    n = [e.value for e in rectangle_spectrum(a, b, "neumann", 200) if e.parity is Parity.ODD]
    p = [e.value for e in rectangle_spectrum(a, b, "p", 30)]
    np.testing.assert_allclose(p, sorted(d + n)[:30], rtol=1e-14)


# Green's functions

def _random_pairs(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        x, y = rng.uniform(-0.95, 0.95, (2, 2))
        if np.hypot(*x) < 0.95 and np.hypot(*y) < 0.95 and np.hypot(*(x - y)) > 1e-3 and np.hypot(*(x + y)) > 1e-3:
            out.append((x, y))
    return out


def test_kernel_symmetry():
    for x, y in _random_pairs(100, 0):
        for g in (green_dirichlet_disk, green_neumann_disk, green_p_disk):
            assert abs(g(x, y) - g(y, x)) <= 1e-12


def test_p_kernel_at_origin_source():
    for x, _ in _random_pairs(20, 1):
        assert green_p_disk(x, [0.0, 0.0]) == green_dirichlet_disk(x, [0.0, 0.0])


def test_boundary_behaviour():
    rng = np.random.default_rng(2)
    for th in rng.uniform(0, 2 * np.pi, 20):
        x = np.array([math.cos(th), math.sin(th)])
        y = rng.uniform(-0.6, 0.6, 2)
        assert abs(green_dirichlet_disk(x, y)) < 1e-14
        assert abs(green_p_disk(x, y) + green_p_disk(-x, y)) <= 1e-10


def _normal_derivative(g, x, y, eps=1e-5):
    n = x / np.linalg.norm(x)
    return (g(x, y) - g(x - eps * n, y)) / eps


def test_boundary_fluxes():
    y = np.array([0.3, -0.2])
    for th in np.linspace(0, 2 * np.pi, 8, endpoint=False):
        x = np.array([math.cos(th), math.sin(th)])
        # Neumann function: constant flux -1/(2 pi); problem P: flux even under x -> -x
        assert _normal_derivative(green_neumann_disk, x, y) == pytest.approx(-1 / (2 * math.pi), abs=1e-4)
        assert _normal_derivative(green_p_disk, x, y) == pytest.approx(_normal_derivative(green_p_disk, -x, y), abs=1e-4)


def test_neumann_boundary_mean_zero():
    y = np.array([0.4, 0.1])
    th = np.linspace(0, 2 * np.pi, 4000, endpoint=False)
    vals = [green_neumann_disk([math.cos(t), math.sin(t)], y) for t in th]
    assert abs(np.mean(vals)) < 1e-12


def test_harmonic_away_from_source():
    step = 1e-3
    for x, y in _random_pairs(10, 3):
        x = 0.8 * x
        if min(np.hypot(*(x - y)), np.hypot(*(x + y))) < 0.1:
            continue
        for g in (green_dirichlet_disk, green_neumann_disk, green_p_disk):
            lap = sum(g(x + d, y) + g(x - d, y) for d in (np.array([step, 0]), np.array([0, step])))
            lap = (lap - 4 * g(x, y)) / step ** 2
            assert abs(lap) < 1e-4


def test_normalization_independence():
    for x, y in _random_pairs(30, 4):
        a = green_p_disk(x, y, normalization=0.0)
        b = green_p_disk(x, y, normalization=7.5)
        assert abs(a - b) <= 1e-14
    k = GreensKernel(GreensKind.PROBLEM_P_DISK, normalization=-3.0)
    x, y = _random_pairs(1, 5)[0]
    assert abs(k(x, y) - green_p_disk(x, y)) <= 1e-14


def test_closed_form_matches_definition():
    for x, y in _random_pairs(50, 6):
        assert green_p_closed(x, y)[0] == pytest.approx(green_p_disk(x, y), abs=1e-13)


def test_green_errors():
    with pytest.raises(CoincidentPoints):
        green_dirichlet_disk([0.1, 0.2], [0.1, 0.2])
    with pytest.raises(DomainError):
        green_p_disk([0.1, 0.2], [1.0, 0.0])
    with pytest.raises(DomainError):
        green_dirichlet_disk([1.5, 0.0], [0.1, 0.0])


@pytest.fixture(scope="module")
def quad_mesh():
    return build_mesh(DomainSpec.disk(1.0), 0.05)


def _targets(mesh, r=0.8):
    return mesh.nodes[np.hypot(mesh.nodes[:, 0], mesh.nodes[:, 1]) <= r]


def test_solve_via_green_zero_load(quad_mesh):
    u = solve_via_green(lambda p: np.zeros(len(p)), _targets(quad_mesh)[:20], quad_mesh)
    assert np.all(u == 0.0)


def test_solve_via_green_odd_load(quad_mesh):
    # odd data gives the odd solution with zero normal derivative: u = x1 (3 - r^2) / 8
    x = _targets(quad_mesh)
    u = solve_via_green(lambda p: p[:, 0], x, quad_mesh)
    exact = x[:, 0] * (3 - (x ** 2).sum(axis=1)) / 8
    assert np.abs(u - exact).max() < 0.02 * np.abs(exact).max()


def test_solve_via_green_constant_load(quad_mesh):
    x = _targets(quad_mesh)
    u = solve_via_green(lambda p: np.ones(len(p)), x, quad_mesh)
    exact = (1 - (x ** 2).sum(axis=1)) / 4
    assert np.abs(u - exact).max() < 0.02 * exact.max()


def test_solve_via_green_separation(quad_mesh):
    cent = quad_mesh.nodes[quad_mesh.triangles[:3]].mean(axis=1)
    with pytest.raises(EvaluationTooClose):
        solve_via_green(lambda p: np.ones(len(p)), cent, quad_mesh)
    with pytest.raises(DomainError):
        solve_via_green(lambda p: np.ones(len(p)), [[1.0, 0.0]], quad_mesh)
