import math

import pytest

import relu_lqr as rl


def test_riccati_base_case():
    sol = rl.riccati_solve(rl.base_case())
    assert sol.k_star == pytest.approx(-6.4495972995286931344, rel=1e-14)
    assert sol.p_star == pytest.approx(2.5804637569575823821, rel=1e-14)


def test_cost_and_gradient_per_region():
    sys = rl.base_case()
    p1, p2, region = rl.value_coeffs(sys, rl.Gains(-2.0, -14.0))
    assert region == "PN"
    assert p1 == pytest.approx(3.9245863793766833397, rel=1e-13)
    assert rl.cost(sys, rl.Gains(-2.0, -14.0)) == pytest.approx(4.423055021161985379, rel=1e-13)
    g1, g2 = rl.grad_mu(sys, rl.Gains(-12.0, -15.0))
    assert g1 == pytest.approx(-0.39903293126876744576, rel=1e-11)
    assert g2 == pytest.approx(-0.42850076078728473764, rel=1e-11)


def test_invalid_system_raises():
    sys = rl.base_case()
    sys.gamma = 1.5
    with pytest.raises(rl.InvalidInputError):
        sys.validate()
    with pytest.raises(rl.UnstableError):
        rl.cost(rl.base_case(), rl.Gains(5.0, 0.0))


def test_short_training_run_decreases_gap():
    hist = rl.train(rl.base_case(), m=200, seed=1, max_iters=200)
    assert len(hist.rows) == 201
    assert hist.rows[-1].gap < hist.rows[0].gap
    assert all(row.safe for row in hist.rows)


def test_edge_case_keeps_negative_gain_at_zero():
    theta0 = rl.edge_case_network(7)
    hist = rl.train(rl.base_case(), theta0=theta0, max_iters=500)
    assert all(row.K2 == 0.0 for row in hist.rows)
    assert hist.rows[-1].J > hist.J_star


def test_regime_ledger_contraction_factor():
    led = rl.regime_ledger(rl.base_case(), beta=1e7, m=1000, iota=0.01, L_mu=50.0, alpha_mu=0.5)
    assert led["rho_m"] == pytest.approx(1 - led["eta"] * led["lambda_star"] * 0.5, abs=1e-14)
    assert led["m0"] == 18662719067
    assert math.isfinite(led["Xi_star"])
