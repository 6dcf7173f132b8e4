import numpy as np
import pytest

from idpns.state import (
    AdmissibilityError,
    GasModel,
    SolutionField,
    assemble_state,
    check_admissible,
    entropy_and_derivative,
    flux,
    is_admissible,
    pressure,
    specific_entropy,
    thermodynamics,
)


def random_states(rng, n, dim):
    rho = 10.0 ** rng.uniform(-2, 2, n)
    e = 10.0 ** rng.uniform(-2, 2, n)
    v = rng.uniform(-5, 5, (n, dim))
    return assemble_state(rho, v, e, dim)


def test_gas_model_derived_quantities():
    gas = GasModel(gamma=1.4, mu=0.01, prandtl=0.75)
    assert gas.c_v == pytest.approx(1.0 / 0.4)
    assert gas.c_p == pytest.approx(1.4 / 0.4)
    # kappa/c_v = (c_p/c_v) mu / Pr = gamma mu / Pr
    assert gas.kappa_over_cv == pytest.approx(1.4 * 0.01 / 0.75)


def test_gas_model_rejects_bad_gamma():
    with pytest.raises(ValueError):
        GasModel(gamma=1.0)
    with pytest.raises(ValueError):
        GasModel(gamma=1.4, mu=-1.0)


def test_thermodynamics_ideal_gas_relations():
    gas = GasModel(gamma=1.4)
    u = assemble_state(np.array([2.0]), np.array([[3.0]]), np.array([1.5]), 1)
    th = thermodynamics(u, gas, 1)
    assert th.e[0] == pytest.approx(1.5)
    assert th.p[0] == pytest.approx(0.4 * 2.0 * 1.5)
    assert th.c[0] == pytest.approx(np.sqrt(1.4 * th.p[0] / 2.0))
    # s = (1/(gamma-1)) ln e - ln rho
    assert th.s[0] == pytest.approx(np.log(1.5) / 0.4 - np.log(2.0))


def test_assemble_state_roundtrip():
    rng = np.random.default_rng(7)
    for dim in (1, 2):
        u = random_states(rng, 40, dim)
        gas = GasModel(gamma=1.4)
        th = thermodynamics(u, gas, dim)
        u2 = assemble_state(u[:, 0], u[:, 1 : 1 + dim] / u[:, :1], th.e, dim)
        assert np.allclose(u2, u, rtol=1e-14, atol=0.0)


def test_admissibility_checks():
    good = assemble_state(np.array([1.0]), np.array([[0.5]]), np.array([1.0]), 1)
    assert is_admissible(good, 1)
    bad_rho = good.copy()
    bad_rho[0, 0] = -1.0
    assert not is_admissible(bad_rho, 1)
    bad_e = good.copy()
    bad_e[0, 2] = 0.125  # E = kinetic energy only, e = 0
    assert not is_admissible(bad_e, 1)
    with pytest.raises(AdmissibilityError):
        check_admissible(bad_rho, 1, "unit test")


def test_flux_1d_matches_hand_computation():
    gas = GasModel(gamma=1.4)
    rho, v, e = 2.0, 3.0, 1.5
    u = assemble_state(np.array([rho]), np.array([[v]]), np.array([e]), 1)
    p = 0.4 * rho * e
    f = flux(u, gas, 1)[0]
    E = rho * e + 0.5 * rho * v**2
    assert f[0, 0] == pytest.approx(rho * v)
    assert f[1, 0] == pytest.approx(rho * v**2 + p)
    assert f[2, 0] == pytest.approx(v * (E + p))


def test_flux_2d_rotation_equivariance():
    gas = GasModel(gamma=1.4)
    rng = np.random.default_rng(3)
    u = random_states(rng, 10, 2)
    theta = 0.7
    R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    u_rot = u.copy()
    u_rot[:, 1:3] = u[:, 1:3] @ R.T
    f = flux(u, gas, 2)
    f_rot = flux(u_rot, gas, 2)
    # scalar rows rotate as vectors in the direction index
    assert np.allclose(f_rot[:, 0, :], f[:, 0, :] @ R.T, atol=1e-12)
    assert np.allclose(f_rot[:, 3, :], f[:, 3, :] @ R.T, atol=1e-12)
    # momentum block transforms as a 2-tensor
    assert np.allclose(f_rot[:, 1:3, :], np.einsum("ab,nbc,dc->nad", R, f[:, 1:3, :], R), atol=1e-11)


def test_entropy_derivative_matches_finite_differences():
    gas = GasModel(gamma=1.4)
    rng = np.random.default_rng(11)
    for dim in (1, 2):
        # moderate states so the centered difference stays admissible
        rho = rng.uniform(0.5, 2.0, 25)
        e = rng.uniform(0.5, 2.0, 25)
        v = rng.uniform(-1.0, 1.0, (25, dim))
        u = assemble_state(rho, v, e, dim)
        eta, deta = entropy_and_derivative(u, gas, dim)
        assert np.allclose(eta, u[:, 0] * specific_entropy(u, gas, dim))
        for k in range(dim + 2):
            h = 1e-6 * np.maximum(np.abs(u[:, k]), 1.0)
            up = u.copy()
            um = u.copy()
            up[:, k] += h
            um[:, k] -= h
            fd = (up[:, 0] * specific_entropy(up, gas, dim)
                  - um[:, 0] * specific_entropy(um, gas, dim)) / (2.0 * h)
            assert np.allclose(deta[:, k], fd, rtol=1e-6, atol=1e-8)


def test_pressure_positive_on_admissible_states():
    rng = np.random.default_rng(5)
    u = random_states(rng, 100, 2)
    gas = GasModel(gamma=1.4)
    assert (pressure(u, gas, 2) > 0).all()


def test_solution_field_copy_is_independent():
    u = assemble_state(np.array([1.0, 2.0]), np.zeros((2, 1)), np.ones(2), 1)
    f = SolutionField(u, 1, 0.5)
    g = f.copy()
    g.u[0, 0] = 99.0
    assert f.u[0, 0] == 1.0
    assert g.t == f.t
