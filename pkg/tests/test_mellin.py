import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from frshift.mellin import (MellinMultiplier, PdoSymbol, SampledFunction,
                            SupportWarning, UnboundedSymbolError,
                            apply_convolution, apply_pdo, make_grid,
                            mellin_forward, mellin_inverse, mult_r_p_beta,
                            mult_s_p, phi_inv, phi_map, s_norm_real_line,
                            stechkin_bound, tv_norm)


def gaussian(grid, c=0.0, w=1.0, freq=0.0):
    x = grid.x
    return SampledFunction(grid, np.exp(-0.5 * ((x - c) / w) ** 2 + 1j * freq * x))


def test_grid_layout():
    g = make_grid(2.0, 8)
    np.testing.assert_allclose(g.x, [-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5])
    assert list(g.k) == [0, 1, 2, 3, -4, -3, -2, -1]
    assert g.dxi == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("L, n", [(0, 8), (-1, 8), (1, 6), (1, 2)])
def test_grid_rejects_bad_sizes(L, n):
    with pytest.raises(ValueError):
        make_grid(L, n)


def test_gaussian_transform(grid12):
    spec = mellin_forward(gaussian(grid12))
    ref = np.sqrt(2 * np.pi) * np.exp(-grid12.xi ** 2 / 2)
    np.testing.assert_allclose(spec, ref, atol=1e-13)


def test_shifted_gaussian_picks_up_phase(grid12):
    spec = mellin_forward(gaussian(grid12, c=1.5))
    xi = grid12.xi
    ref = np.sqrt(2 * np.pi) * np.exp(-xi ** 2 / 2 - 1j * 1.5 * xi)
    np.testing.assert_allclose(spec, ref, atol=1e-12)


@given(st.integers(0, 2 ** 31 - 1))
def test_round_trip_and_parseval(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(5.0, 64)
    f = SampledFunction(g, rng.normal(size=64) + 1j * rng.normal(size=64))
    spec = mellin_forward(f)
    back = mellin_inverse(spec, g)
    np.testing.assert_allclose(back.values, f.values, atol=1e-12)
    lhs = np.sum(np.abs(f.values) ** 2) * g.h
    rhs = np.sum(np.abs(spec) ** 2) * g.dxi / (2 * np.pi)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_column_stacks_transform_independently(grid12):
    a, b = gaussian(grid12).values, gaussian(grid12, c=1, freq=2).values
    both = SampledFunction(grid12, np.stack([a, b], axis=1))
    spec = mellin_forward(both)
    np.testing.assert_allclose(spec[:, 1], mellin_forward(SampledFunction(grid12, b)))


def test_phi_maps_norms(grid12):
    p = 3.0
    f = SampledFunction(grid12, np.exp(-grid12.x ** 2) * np.exp(-grid12.x / p))
    g = phi_map(f, p)
    assert g.norm_mu(p) == pytest.approx(f.norm(p), rel=1e-12)
    np.testing.assert_allclose(phi_inv(g, p).values, f.values)


@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
@pytest.mark.parametrize("x", [-30.0, -2.0, -0.3, 0.0, 0.7, 5.0, 40.0])
def test_s_multiplier_against_mpmath(p, x):
    ref = complex(mp.coth(mp.pi * (x + 1j / p)))
    assert mult_s_p(p, x) == pytest.approx(ref, rel=1e-13, abs=1e-15)


@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
@pytest.mark.parametrize("beta", [0.5, math.pi, 5.5])
@pytest.mark.parametrize("x", [-20.0, -1.0, 0.0, 0.4, 3.0, 25.0])
def test_r_multiplier_against_mpmath(p, beta, x):
    w = x + 1j / p
    ref = complex(mp.exp(w * (mp.pi - beta)) / mp.sinh(mp.pi * w))
    assert mult_r_p_beta(p, beta, x) == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_multipliers_survive_huge_arguments():
    x = np.array([-1e4, 1e4])
    s = mult_s_p(2.0, x)
    r = mult_r_p_beta(2.0, math.pi, x)
    np.testing.assert_allclose(s, [-1, 1])
    assert np.all(np.isfinite(r)) and np.all(np.abs(r) < 1e-300)


def test_r_beta_domain():
    with pytest.raises(ValueError):
        mult_r_p_beta(2.0, 0.0, 0.0)


def test_convolutions_compose_multiplicatively(grid12):
    f = gaussian(grid12, w=0.8, freq=1.0)
    s = MellinMultiplier.s_p(grid12, 2.0)
    r = MellinMultiplier.r_p_beta(grid12, 2.0)
    # the intermediate has slow exponential tails; the wrap is shared by both sides
    sr = apply_convolution(s, apply_convolution(r, f), check_support=False)
    prod = MellinMultiplier(grid12, s.values * r.values)
    np.testing.assert_allclose(sr.values, apply_convolution(prod, f).values,
                               atol=1e-13)


def test_constant_multiplier_is_scaling(grid12):
    f = gaussian(grid12)
    out = apply_convolution(MellinMultiplier.constant(grid12, 2 - 1j), f)
    np.testing.assert_allclose(out.values, (2 - 1j) * f.values, atol=1e-13)


def test_support_warning(grid12):
    wide = gaussian(grid12, c=11.0)
    with pytest.warns(SupportWarning):
        apply_convolution(MellinMultiplier.constant(grid12, 1.0), wide)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        apply_convolution(MellinMultiplier.constant(grid12, 1.0), gaussian(grid12))


def test_pdo_with_symbol_free_of_x_is_convolution():
    g = make_grid(8.0, 512)
    f = gaussian(g, freq=0.5)
    sym = PdoSymbol(lambda x, xi: mult_s_p(2.0, xi) + 0 * x, "s")
    m = MellinMultiplier.s_p(g, 2.0)
    np.testing.assert_allclose(apply_pdo(sym, f).values,
                               apply_convolution(m, f).values, atol=1e-11)


def test_pdo_with_symbol_free_of_xi_is_multiplication():
    g = make_grid(8.0, 512)
    f = gaussian(g)
    sym = PdoSymbol(lambda x, xi: np.cos(x) + 0 * xi, "cos")
    np.testing.assert_allclose(apply_pdo(sym, f, block=100).values,
                               np.cos(g.x) * f.values, atol=1e-12)


def test_pdo_refuses_unbounded_symbol():
    g = make_grid(8.0, 64)
    sym = PdoSymbol(lambda x, xi: np.exp(xi ** 2) + 0 * x, "wild")
    with pytest.raises(UnboundedSymbolError):
        apply_pdo(sym, gaussian(g))


def test_total_variation_closed_forms(grid12):
    # for p = 2: s is tanh(pi x) and r_{2,pi} is -i sech(pi x)
    assert tv_norm(MellinMultiplier.s_p(grid12, 2.0)) == pytest.approx(2.0, abs=1e-9)
    assert tv_norm(MellinMultiplier.r_p_beta(grid12, 2.0)) == pytest.approx(2.0, abs=1e-9)


def test_stechkin_bound_dominates_l2_norm(grid12):
    assert s_norm_real_line(2.0) == pytest.approx(1.0)
    assert s_norm_real_line(4.0) == pytest.approx(1 / math.tan(math.pi / 8))
    f = gaussian(grid12, w=0.5, freq=2.0)
    m = MellinMultiplier.s_p(grid12, 2.0)
    ratio = apply_convolution(m, f).norm_mu() / f.norm_mu()
    assert ratio <= stechkin_bound(m, p=2.0)
    assert stechkin_bound(m, p=2.0) == pytest.approx(3.0, abs=1e-9)
    with pytest.raises(ValueError):
        stechkin_bound(m)


def test_tiny_grid_and_phi_values():
    g = make_grid(math.log(4), 4)
    np.testing.assert_allclose(g.t, [0.25, 0.5, 1, 2])
    one = SampledFunction(g, np.ones(4))
    np.testing.assert_allclose(phi_map(one, 2.0).values, np.sqrt([0.25, 0.5, 1, 2]))
    g8 = make_grid(math.log(8), 4)
    assert phi_map(SampledFunction(g8, np.ones(4)), 1.5).values[-1] == pytest.approx(
        (8 ** 0.5) ** (2 / 3))


def test_mellin_wave_is_a_single_bin(grid12):
    k = 37
    wave = SampledFunction(grid12, np.exp(1j * grid12.xi[k] * grid12.x))
    spec = mellin_forward(wave)
    assert np.argmax(np.abs(spec)) == k
    others = np.delete(np.abs(spec), k)
    assert others.max() < 1e-9 * abs(spec[k])
    m = MellinMultiplier.r_p_beta(grid12, 2.0)
    out = apply_convolution(m, wave, check_support=False)
    np.testing.assert_allclose(out.values, m.values[k] * wave.values, atol=1e-12)
