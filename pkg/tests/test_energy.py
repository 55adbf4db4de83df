"""Energy budgets, transfer efficiencies, and the two-station power region."""

import numpy as np
import pytest

from ecomp import (
    EnergyState,
    TransferModel,
    as_beta_matrix,
    available_power,
    grid_neutrality_check,
    power_region_boundary,
)


def test_budget_combines_renewable_grid_and_circuit():
    es = EnergyState(re=np.array([4.0, 1.0]), grid=2.0, circuit=1.5)
    np.testing.assert_allclose(es.budget, [4.5, 1.5])
    assert es.n_bs == 2


def test_energy_state_rejects_negative_supply():
    with pytest.raises(ValueError):
        EnergyState(re=np.array([-1.0, 2.0]))
    with pytest.raises(ValueError):
        EnergyState(re=np.array([1.0]), grid=0.0, circuit=1.0)
    with pytest.raises(ValueError):
        EnergyState(re=np.array([1.0]), pa_eff=0.0)


def test_as_beta_matrix_scalar_expansion():
    bm = as_beta_matrix(0.7, 3)
    assert bm.shape == (3, 3)
    assert np.all(np.diag(bm) == 0.0)
    off = ~np.eye(3, dtype=bool)
    assert np.all(bm[off] == 0.7)


def test_as_beta_matrix_validates_range_and_shape():
    with pytest.raises(ValueError):
        as_beta_matrix(1.2, 2)
    with pytest.raises(ValueError):
        as_beta_matrix(np.ones((2, 3)), 2)


def test_transfer_model_rejects_relay_dominated_efficiencies():
    # A direct link may not be weaker than relaying through a third station.
    beta = np.array([[0.0, 0.3, 0.9], [0.9, 0.0, 0.9], [0.9, 0.9, 0.0]])
    with pytest.raises(ValueError):
        TransferModel(beta=beta)


def test_available_power_accounts_for_flows():
    beta = as_beta_matrix(0.5, 2)
    e = np.array([[0.0, 4.0], [0.0, 0.0]])
    tm = TransferModel(beta=beta, e=e)
    es = EnergyState(re=np.array([10.0, 3.0]))
    assert available_power(es, tm, 0) == pytest.approx(6.0)   # sent 4
    assert available_power(es, tm, 1) == pytest.approx(5.0)   # received 2


def test_grid_neutrality_balances_injection_draw_and_loss():
    beta = as_beta_matrix(0.6, 3)
    e = np.array([[0.0, 2.0, 1.0], [0.0, 0.0, 0.5], [0.0, 0.0, 0.0]])
    tm = TransferModel(beta=beta, e=e)
    injected, drawn, lost = grid_neutrality_check(tm)
    assert injected == pytest.approx(3.5)
    assert drawn + lost == pytest.approx(injected)
    assert drawn == pytest.approx(0.6 * 3.5)


def test_power_region_contains_the_no_transfer_corner():
    pts = power_region_boundary([6.0, 2.0], 0.5)
    corner = pts[np.isclose(pts[:, 0], 6.0)]
    assert corner.size and np.any(np.isclose(corner[:, 1], 2.0))


def test_power_region_extremes_and_monotonicity():
    e1, e2, beta = 6.0, 2.0, 0.5
    pts = power_region_boundary([e1, e2], beta)
    assert pts[0, 0] == 0.0
    np.testing.assert_allclose(pts[0, 1], e2 + beta * e1)
    np.testing.assert_allclose(pts[-1, 0], e1 + beta * e2)
    np.testing.assert_allclose(pts[-1, 1], 0.0)
    assert np.all(np.diff(pts[:, 0]) >= 0)
    assert np.all(np.diff(pts[:, 1]) <= 1e-12)


def test_power_region_without_transfers_is_the_budget_box():
    pts = power_region_boundary([6.0, 2.0], 0.0)
    np.testing.assert_allclose(pts[:, 1], 2.0)
    np.testing.assert_allclose(pts[-1, 0], 6.0)
