import numpy as np
import pytest

from gupopt import deformations as de
from gupopt import fock
from gupopt.errors import OutOfRegimeError

OMEGA = 2 * np.pi * 1e5


def params(mass, **kw):
    base = dict(mass=mass, omega_m=OMEGA, finesse=1e5, wavelength=1064e-9, n_photons=1e8)
    base.update(kw)
    return de.PhysicalParams(**base)


def test_constants_values():
    c = de.CONSTANTS
    assert c.M_P == 2.2e-8
    assert c.L_P == 1.6e-35
    # the derived Planck length is consistent with the rounded one to ~1%
    assert c.planck_length_derived == pytest.approx(c.L_P, rel=0.01)


def test_mu_strength_arithmetic():
    s = de.dimensionless_strength(de.DeformationModel.mu(1.0), params(1e-11))
    assert s == pytest.approx((1e-11 / 2.2e-8) ** 2, rel=1e-12)
    assert s == pytest.approx(2.07e-7, rel=0.01)


def test_beta_strength_arithmetic():
    c = de.CONSTANTS
    s = de.dimensionless_strength(de.DeformationModel.beta(1.0), params(1e-7))
    expected = c.hbar * OMEGA * 1e-7 / (c.M_P * c.c) ** 2
    assert s == pytest.approx(expected, rel=1e-12)
    assert s == pytest.approx(1.5e-37, rel=0.05)


def test_gamma_strength_arithmetic():
    c = de.CONSTANTS
    p = params(1e-9)
    s = de.dimensionless_strength(de.DeformationModel.gamma(1.0), p)
    assert s == pytest.approx(np.sqrt(c.hbar * 1e-9 * OMEGA) / (c.M_P * c.c), rel=1e-12)


def test_zero_strength_maps_to_zero():
    p = params(1e-10)
    for kind in ("beta", "gamma", "mu"):
        assert de.dimensionless_strength(de.DeformationModel(kind, 0.0), p) == 0.0
    assert de.dimensionless_strength(de.DeformationModel.none(), p) == 0.0


def test_strength_linearity_in_bare_parameter():
    p = params(1e-9)
    for kind in ("beta", "gamma", "mu"):
        s1 = de.dimensionless_strength(de.DeformationModel(kind, 1.0), p)
        for k in (0.5, 2.0, 7.0):
            sk = de.dimensionless_strength(de.DeformationModel(kind, k), p)
            assert sk == pytest.approx(k * s1, rel=1e-12)


def test_lambda_and_x0():
    c = de.CONSTANTS
    p = params(1e-11)
    assert p.x0 == pytest.approx(np.sqrt(c.hbar / (1e-11 * OMEGA)), rel=1e-12)
    assert p.lam == pytest.approx(4e5 * p.x0 / 1064e-9, rel=1e-12)


def test_nested_commutators_none():
    nc = de.nested_commutators(de.DeformationModel.none(), 0.0)
    assert nc.c1 == {0: 1.0}
    assert nc.c2 == {} and nc.c3 == {}


def test_nested_commutators_beta():
    nc = de.nested_commutators(de.DeformationModel.beta(1.0), 1e-3)
    assert nc.c1 == {0: 1.0, 2: 1e-3}
    assert nc.c2 == {1: 2e-3}
    assert nc.c3 == {0: 2e-3}  # constant 2*beta


def test_nested_commutators_gamma_and_mu():
    ncg = de.nested_commutators(de.DeformationModel.gamma(1.0), 1e-3)
    assert ncg.c1 == {0: 1.0, 1: -1e-3}
    assert ncg.c2 == {0: -1e-3}
    assert ncg.c3 == {}
    ncm = de.nested_commutators(de.DeformationModel.mu(1.0), 1e-3)
    assert ncm.c1 == {0: 1.0 + 1e-3}
    assert ncm.c2 == {} and ncm.c3 == {}


def _commutator_with_deformed_momentum(kind, strength, dim=24):
    x, p = fock.quadratures(dim)
    p_def = de.deformed_momentum(p, de.DeformationModel(kind, 1.0), strength)
    return x.matrix @ p_def.matrix - p_def.matrix @ x.matrix


def test_deformed_momentum_noop():
    _, p = fock.quadratures(12)
    for kind in ("beta", "gamma", "mu"):
        out = de.deformed_momentum(p, de.DeformationModel(kind, 1.0), 0.0)
        assert out is p


@pytest.mark.parametrize("strength", [1e-4, 1e-3])
def test_beta_commutator_representation(strength):
    # [X, P'] = i (1 + beta P^2) + O(beta^2) on the interior block
    dim = 24
    comm = _commutator_with_deformed_momentum("beta", strength, dim)
    _, p = fock.quadratures(dim)
    target = 1j * (np.eye(dim) + strength * (p.matrix @ p.matrix))
    cut = dim - 4
    err = np.abs(comm[:cut, :cut] - target[:cut, :cut]).max()
    assert err < 10 * strength**2 * dim  # O(beta^2) with a dim-scale constant


@pytest.mark.parametrize("strength", [1e-4, 1e-3])
def test_gamma_commutator_representation(strength):
    # [X, P'] = i (1 - gamma P) + O(gamma^2) on the interior block
    dim = 24
    comm = _commutator_with_deformed_momentum("gamma", strength, dim)
    _, p = fock.quadratures(dim)
    target = 1j * (np.eye(dim) - strength * p.matrix)
    cut = dim - 4
    assert np.abs(comm[:cut, :cut] - target[:cut, :cut]).max() < 10 * strength**2 * dim


def test_mu_commutator_is_exact_rescaling():
    dim = 24
    strength = 0.05
    comm = _commutator_with_deformed_momentum("mu", strength, dim)
    cut = dim - 2
    target = 1j * (1 + strength) * np.eye(dim)
    assert np.abs(comm[:cut, :cut] - target[:cut, :cut]).max() < 1e-12


def test_strength_regime_guard():
    _, p = fock.quadratures(8)
    with pytest.raises(OutOfRegimeError):
        de.deformed_momentum(p, de.DeformationModel.beta(1.0), 1.5)
    with pytest.warns(UserWarning):
        de.deformed_momentum(p, de.DeformationModel.gamma(1.0), 0.5)
    # mu is exact: no guard
    de.deformed_momentum(p, de.DeformationModel.mu(1.0), 1.5)


def test_composite_chi_endpoints():
    assert de.composite_chi(1, "uncorrelated") == 1.0
    assert de.composite_chi(1, "fully-correlated") == 1.0
    assert de.composite_chi(100, "uncorrelated") == pytest.approx(0.01)
    assert de.composite_chi(100, "fully-correlated") == pytest.approx(1e-4)


def test_composite_chi_relation():
    for n in (2, 5, 100, 1234):
        assert de.composite_chi(n, "fully-correlated") == pytest.approx(
            de.composite_chi(n, "uncorrelated") / n, rel=1e-14
        )


def test_composite_chi_invalid():
    with pytest.raises(ValueError):
        de.composite_chi(0, "uncorrelated")
    with pytest.raises(ValueError):
        de.composite_chi(10, "partial")


def test_model_validation():
    with pytest.raises(ValueError):
        de.DeformationModel("delta", 1.0)
    with pytest.raises(ValueError):
        de.DeformationModel("beta", -1.0)
    with pytest.raises(ValueError):
        de.DeformationModel("none", 0.5)


def test_params_validation():
    with pytest.raises(ValueError):
        params(-1e-11)
    with pytest.raises(ValueError):
        params(1e-11, eta=1.5)
    with pytest.raises(ValueError):
        params(1e-11, n_thermal=-1.0)
