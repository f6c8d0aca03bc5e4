import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate
from scipy.special import erfcx

from aggdiff import core
from aggdiff.errors import InvalidArgumentError, InvalidDataError


def gaussian(x, m=1.0, s=1.0):
    return m * np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2 * math.pi))


# -- grid and field ---------------------------------------------------------

def test_grid_example():
    g = core.make_grid(1.0, 4)
    assert g.dx == 0.5
    np.testing.assert_array_equal(g.centers, [-0.75, -0.25, 0.25, 0.75])
    np.testing.assert_array_equal(g.faces, [-1.0, -0.5, 0.0, 0.5, 1.0])


@pytest.mark.parametrize("L,n", [(0.0, 8), (-1.0, 8), (1.0, 7), (1.0, 0), (math.inf, 8), (1.0, 2.5)])
def test_grid_rejects_bad_arguments(L, n):
    with pytest.raises(InvalidArgumentError):
        core.make_grid(L, n)


@given(st.floats(0.01, 1e3), st.integers(1, 2000))
def test_centers_mirror_exactly(L, half):
    g = core.make_grid(L, 2 * half)
    np.testing.assert_array_equal(g.centers, -g.centers[::-1])
    assert g.faces[half] == 0.0


def test_field_validation_and_immutability():
    g = core.make_grid(1.0, 8)
    with pytest.raises(InvalidArgumentError):
        core.Field(g, np.zeros(7))
    with pytest.raises(InvalidDataError):
        core.Field(g, np.full(8, np.nan))
    with pytest.raises(InvalidArgumentError):
        core.Field(g, np.zeros(8), time=-1.0)
    src = np.ones(8)
    f = core.Field(g, src)
    src[0] = 5.0
    assert f.values[0] == 1.0
    with pytest.raises(ValueError):
        f.values[0] = 2.0


# -- kernels ----------------------------------------------------------------

@pytest.mark.parametrize("spec", [core.Chemotaxis(), core.OddGaussian(1.7, 0.6), core.ZeroKernel()])
@pytest.mark.parametrize("n", [8, 64, 4096])
def test_antisymmetric_kernels_have_zero_integral_bitwise(spec, n):
    k = core.sample_kernel(spec, core.make_grid(20.0, n))
    assert k.total_integral == 0.0
    assert k.antisymmetric
    np.testing.assert_array_equal(k.samples, -k.samples[::-1])


def test_chemotaxis_l1_norm_is_exact_cell_integral():
    # |K'| integrated over the cells with offsets 1..n-1 on both sides
    g = core.make_grid(20.0, 4096)
    k = core.sample_kernel(core.Chemotaxis(), g)
    dx = g.dx
    expected = math.exp(-0.5 * dx) - math.exp(-(g.n_cells - 0.5) * dx)
    assert k.l1_norm == pytest.approx(expected, rel=1e-13)
    assert k.l1_norm == pytest.approx(1.0, abs=5e-3)


def test_chemotaxis_samples_are_cell_averages():
    g = core.make_grid(3.0, 16)
    k = core.sample_kernel(core.Chemotaxis(), g)
    dx = g.dx
    for j in (1, 2, 5, 15):
        avg, _ = integrate.quad(lambda x: -0.5 * math.exp(-x), (j - 0.5) * dx, (j + 0.5) * dx, epsabs=0, epsrel=1e-13)
        assert k.at_offset(j) == pytest.approx(avg / dx, rel=1e-13)
        assert k.at_offset(-j) == -k.at_offset(j)
    assert k.at_offset(0) == 0.0


@pytest.mark.parametrize("a,w", [(1.0, 1.0), (0.5 / math.sqrt(2 * math.pi), 1.0), (2.0, 0.3)])
def test_gaussian_mollifier_integral(a, w):
    g = core.make_grid(20.0, 4096)
    k = core.sample_kernel(core.GaussianMollifier(a, w), g)
    spec = core.GaussianMollifier(a, w)
    assert spec.total_integral == pytest.approx(a * w * math.sqrt(2 * math.pi), rel=1e-15)
    assert k.total_integral == pytest.approx(spec.total_integral, rel=1e-13)
    assert k.l1_norm == pytest.approx(spec.total_integral, rel=1e-13)
    assert not k.antisymmetric


def test_tabulated_matches_closed_form_odd_gaussian(tmp_path):
    x = np.linspace(-12, 12, 24001)
    y = x * np.exp(-x * x / 2)
    path = tmp_path / "k.txt"
    np.savetxt(path, np.column_stack([x, y]), header="x K'(x)")
    spec = core.load_tabulated(path)
    g = core.make_grid(10.0, 512)
    tab = core.sample_kernel(spec, g)
    ref = core.sample_kernel(core.OddGaussian(1.0, 1.0), g)
    assert np.max(np.abs(tab.samples - ref.samples)) < 1e-6
    assert abs(tab.total_integral) < 1e-12


def test_tabulated_rejects_bad_tables(tmp_path):
    with pytest.raises(InvalidDataError):
        core.Tabulated([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(InvalidDataError):
        core.Tabulated([0.0, 1.0], [1.0, np.inf])
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1 2\n1 2 3\n")
    with pytest.raises(InvalidDataError):
        core.load_tabulated(bad)


# -- convolution ------------------------------------------------------------

@pytest.mark.parametrize("n", [8, 64, 1024])
@pytest.mark.parametrize("spec", [core.Chemotaxis(), core.GaussianMollifier(0.8, 0.7), core.OddGaussian(1.0, 0.4)])
def test_fft_matches_direct_summation(n, spec):
    rng = np.random.default_rng(n)
    g = core.make_grid(6.0, n)
    k = core.sample_kernel(spec, g)
    u = core.Field(g, rng.random(n))
    fast = core.convolve(k, u).values
    slow = core.convolve_direct(k, u).values
    assert np.max(np.abs(fast - slow)) <= 1e-12 * np.max(np.abs(slow))


def test_convolution_is_linear_not_circular():
    # mass parked in the last cell must not wrap around to the first
    g = core.make_grid(5.0, 64)
    k = core.sample_kernel(core.Chemotaxis(), g)
    u = np.zeros(64)
    u[-1] = 1.0
    b = core.convolve(k, core.Field(g, u)).values
    np.testing.assert_allclose(b, core.convolve_direct(k, core.Field(g, u)).values, rtol=0, atol=1e-16)
    assert b[0] > 0  # attraction toward the right end, no wrapped sign flip


def test_convolve_grid_mismatch():
    k = core.sample_kernel(core.Chemotaxis(), core.make_grid(1.0, 8))
    with pytest.raises(InvalidArgumentError):
        core.convolve(k, core.Field(core.make_grid(1.0, 16), np.zeros(16)))


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float64, 128, elements=st.floats(-1e3, 1e3)),
    arrays(np.float64, 128, elements=st.floats(-1e3, 1e3)),
    st.floats(-10, 10),
    st.floats(-10, 10),
)
def test_convolution_linearity(u, w, a, b):
    g = core.make_grid(4.0, 128)
    k = core.sample_kernel(core.OddGaussian(1.0, 0.5), g)
    lhs = core.convolve(k, core.Field(g, a * u + b * w)).values
    rhs = a * core.convolve(k, core.Field(g, u)).values + b * core.convolve(k, core.Field(g, w)).values
    scale = (abs(a) * np.abs(u).max() + abs(b) * np.abs(w).max()) * k.l1_norm + 1e-300
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, 32, elements=st.floats(0, 10)))
def test_even_density_odd_kernel_gives_odd_velocity(half):
    g = core.make_grid(3.0, 64)
    u = np.concatenate([half[::-1], half])
    for spec in (core.Chemotaxis(), core.OddGaussian(2.0, 0.5)):
        b = core.convolve(core.sample_kernel(spec, g), core.Field(g, u)).values
        assert np.max(np.abs(b + b[::-1])) <= 1e-13 * max(np.max(np.abs(b)), 1e-300)


def test_chemotaxis_potential_convolution_against_closed_form():
    g = core.make_grid(20.0, 2048)
    u = core.field_from_function(g, gaussian)
    v = core.convolve(core.chemotaxis_potential(g), u).values
    # K * G_sigma has a closed form through erfc; compare at a few points
    def exact(x):
        return 0.25 * math.exp(-x * x / 2) * (erfcx((1 - x) / math.sqrt(2)) + erfcx((1 + x) / math.sqrt(2)))

    for i in (1024, 1100, 1500, 300):
        assert v[i] == pytest.approx(exact(g.centers[i]), abs=5 * g.dx**2)


# -- quadratures ------------------------------------------------------------

def test_mass_and_norms_of_constants():
    g = core.make_grid(2.5, 40)
    u = core.Field(g, np.full(40, 3.0))
    assert core.mass(u) == pytest.approx(15.0, rel=1e-15)
    for p in (1, 2, 3.5):
        assert core.lp_norm(u, p) == pytest.approx(3.0 * 5.0 ** (1 / p), rel=1e-14)
    assert core.lp_norm(u, math.inf) == 3.0


def test_lp_norm_single_peak_and_errors():
    g = core.make_grid(1.0, 8)
    v = np.zeros(8)
    v[3] = 3.0
    assert core.lp_norm(core.Field(g, v), math.inf) == 3.0
    with pytest.raises(InvalidArgumentError):
        core.lp_norm(core.Field(g, v), 0.5)


def test_l2_norm_of_heat_kernel():
    g = core.make_grid(20.0, 4096)
    u = core.field_from_function(g, lambda x: np.exp(-x * x / 4) / math.sqrt(4 * math.pi))
    assert core.lp_norm(u, 2) == pytest.approx((8 * math.pi) ** -0.25, abs=1e-4)


def test_first_moment_examples():
    g = core.make_grid(20.0, 4096)
    assert core.first_moment(core.Field(g, np.zeros(4096))) == 0.0
    u = core.field_from_function(g, gaussian)
    oracle, _ = integrate.quad(lambda x: abs(x) * gaussian(x), -20, 20, points=[0], epsabs=1e-14)
    assert core.first_moment(u) == pytest.approx(oracle, abs=1e-4)
    assert core.first_moment(u) == pytest.approx(math.sqrt(2 / math.pi), abs=1e-4)
    spike = np.zeros(4096)
    spike[2047] = spike[2048] = 1.0
    M = core.mass(core.Field(g, spike))
    assert core.first_moment(core.Field(g, spike)) == pytest.approx(M * g.centers[2048], rel=1e-15)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, 50, elements=st.floats(-1e6, 1e6)), st.floats(0.1, 100))
def test_holder_interpolation(values, L):
    u = core.Field(core.make_grid(L, 50), values)
    l1, l2, li = (core.lp_norm(u, p) for p in (1, 2, math.inf))
    # one-ulp-scale slack for the rounding in the three separate sums
    assert l2 <= math.sqrt(l1 * li) * (1 + 1e-14)


# -- rescaling --------------------------------------------------------------

def test_rescale_identity():
    g = core.make_grid(5.0, 64)
    u = core.field_from_function(g, gaussian, time=2.0)
    r = core.rescale(u, 1.0, g)
    np.testing.assert_array_equal(r.values, u.values)
    assert r.time == 2.0


def test_rescale_rejects_nonpositive_factor():
    g = core.make_grid(5.0, 64)
    with pytest.raises(InvalidArgumentError):
        core.rescale(core.Field(g, np.zeros(64)), 0.0, g)


@pytest.mark.parametrize("lam", [2.0, 4.0, 8.0])
def test_rescale_of_heat_kernel_is_self_similar(lam):
    M = 1.5
    fine = core.make_grid(80.0, 2 ** 15)
    target = core.make_grid(10.0, 1024)
    t = lam**2
    u = core.field_from_function(fine, lambda x: M * np.exp(-x * x / (4 * t)) / math.sqrt(4 * math.pi * t), time=t)
    r = core.rescale(u, lam, target)
    exact = M * np.exp(-target.centers**2 / 4) / math.sqrt(4 * math.pi)
    assert r.time == pytest.approx(1.0)
    assert np.max(np.abs(r.values - exact)) < 2 * (lam * fine.dx) ** 2
    assert core.mass(r) == pytest.approx(M, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, 32, elements=st.floats(0, 1e3)), st.floats(0.05, 20))
def test_rescale_keeps_nonnegative_data_nonnegative(values, lam):
    g = core.make_grid(2.0, 32)
    assert np.all(core.rescale(core.Field(g, values), lam, g).values >= 0)
