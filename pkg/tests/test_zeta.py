import math

import numpy as np
import pytest

from ipszeta.dk import DKParams, dk_entries, dk_local_operator
from ipszeta.errors import SingularFactor, SizeCapExceeded
from ipszeta.operators import (
    build_global_kronecker,
    config_bits,
    config_index,
    make_local_operator,
    qca_rotation_local,
    random_local_operator,
)
from ipszeta.zeta import (
    BinomialWeights,
    c_r,
    power_trace_coefficients,
    qca_rotation_check,
    spectral_radius_estimate,
    t_case_c_r,
    t_case_log_zeta,
    trace_path_sum,
    zeta_det,
    zeta_log_series,
)

from conftest import oracle_c_r, oracle_global


def test_power_traces_match_oracle(rng):
    for fam in ("pca", "qca", "general"):
        for n in (1, 2, 3, 5):
            loc = random_local_operator(fam, rng)
            got = power_trace_coefficients(loc, n, 6)
            for r in range(1, 7):
                ref = oracle_c_r(loc, n, r)
                assert abs(got[r - 1] - ref) < 1e-11 * max(1.0, abs(ref))
                if r == 6:
                    assert abs(c_r(loc, n, r) - ref) < 1e-11 * max(1.0, abs(ref))


def test_power_traces_single_site():
    loc = dk_local_operator(DKParams(0.4, 0.7))
    assert np.allclose(power_trace_coefficients(loc, 1, 5), 1.0)


def test_trace_cap():
    loc = dk_local_operator(DKParams(0.4, 0.7))
    with pytest.raises(SizeCapExceeded):
        power_trace_coefficients(loc, 15, 2)


def test_xor_rule_return_rates():
    # deterministic rule: new left bit = xor of the old pair
    loc = dk_local_operator(DKParams(1.0, 0.0))
    coeffs = power_trace_coefficients(loc, 3, 8)

    def xor_step(idx):
        bits = config_bits(idx, 3)
        new = [bits[0] ^ bits[1], bits[1] ^ bits[2], bits[2]]
        return config_index(new)

    for r in range(1, 9):
        returned = 0
        for start in range(8):
            idx = start
            for _ in range(r):
                idx = xor_step(idx)
            returned += idx == start
        assert abs(coeffs[r - 1] - returned / 8) < 1e-12

    assert abs(coeffs[0] - 0.25) < 1e-12
    assert abs(coeffs[1] - 0.5) < 1e-12
    assert abs(coeffs[2] - 0.25) < 1e-12
    assert abs(coeffs[3] - 1.0) < 1e-12


def test_xor_rule_period_four():
    loc = dk_local_operator(DKParams(1.0, 0.0))
    g = build_global_kronecker(loc, 3).dense
    assert np.abs(np.linalg.matrix_power(g, 4) - np.eye(8)).max() < 1e-12


def test_trace_path_sum_small(rng):
    for n in (1, 2, 4):
        loc = random_local_operator("general", rng)
        ref = np.trace(oracle_global(loc, n))
        assert abs(trace_path_sum(loc, n) - ref) < 1e-11 * max(1.0, abs(ref))


def test_t_family_coefficients():
    for p in (0.1, 0.3, 0.5):
        loc = make_local_operator(dk_entries(p, 2 * p))
        for n in (2, 4, 6):
            for r in (1, 2, 5, 10):
                assert abs(c_r(loc, n, r) - t_case_c_r(p, n, r)) < 1e-9


def test_pca_coefficients_real_and_bounded(rng):
    for _ in range(15):
        loc = random_local_operator("pca", rng)
        coeffs = power_trace_coefficients(loc, 5, 8)
        assert np.abs(coeffs.imag).max() < 1e-12
        assert np.abs(coeffs).max() <= 1.0 + 1e-12


def test_t_case_c_r_frozen_values():
    assert t_case_c_r(1.0, 5, 7) == pytest.approx(1.0)
    assert t_case_c_r(0.0, 4, 3) == pytest.approx(0.125)
    assert t_case_c_r(0.3, 3, 2) == pytest.approx(0.297025)
    loc = make_local_operator(dk_entries(0.3, 0.6))
    assert abs(c_r(loc, 3, 1) - 0.4225) < 1e-12
    assert abs(c_r(loc, 3, 2) - 0.297025) < 1e-12


def test_t_case_log_zeta_frozen_values():
    assert t_case_log_zeta(1.0, 4, 0.3) == pytest.approx(-math.log(0.7))
    want = -(0.25 * math.log(0.5) + 0.5 * math.log(1 - 0.3 * 0.5)
             + 0.25 * math.log(1 - 0.09 * 0.5))
    assert t_case_log_zeta(0.3, 3, 0.5) == pytest.approx(want, abs=1e-14)
    assert t_case_log_zeta(0.3, 3, 0.0) == 0.0


def test_series_at_zero_and_det_at_zero():
    loc = dk_local_operator(DKParams(0.4, 0.7))
    assert zeta_log_series(loc, 3, 10).evaluate(0.0) == 0.0
    assert zeta_det(loc, 3, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_xor_series_matches_determinant_log():
    loc = dk_local_operator(DKParams(1.0, 0.0))
    series = zeta_log_series(loc, 3, 40)
    got = series.evaluate(0.1)
    g = build_global_kronecker(loc, 3).dense
    eigs = np.linalg.eigvals(g)
    want = -np.sum(np.log(1 - 0.1 * eigs)) / 8
    assert abs(got - want) < 1e-12


def test_rotation_coefficient_frozen_values():
    assert abs(c_r(qca_rotation_local(0.0), 4, 3) - 1.0) < 1e-12
    assert abs(c_r(qca_rotation_local(np.pi / 3), 4, 1) - 0.125) < 1e-9
    assert abs(c_r(qca_rotation_local(np.pi / 2), 3, 2) - 1.0) < 1e-12


def test_t_case_log_zeta_matches_series():
    p = 0.4
    loc = make_local_operator(dk_entries(p, 2 * p))
    n, u = 4, 0.3
    series = zeta_log_series(loc, n, 200)
    assert abs(series.evaluate(u) - t_case_log_zeta(p, n, u)) < 1e-9


def test_t_case_log_zeta_singularity():
    with pytest.raises(SingularFactor):
        t_case_log_zeta(1.0, 3, 1.0)


def test_series_vs_determinant(rng):
    for fam in ("pca", "complex-stochastic"):
        for n in (2, 3, 4):
            loc = random_local_operator(fam, rng)
            series = zeta_log_series(loc, n, 80)
            u = 0.4 * series.radius_hint
            lhs = np.exp(series.evaluate(u))
            rhs = zeta_det(loc, n, u)
            assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(rhs))
            bound = series.truncation_bound(u)
            assert bound is not None and bound < 1e-9


def test_truncation_bound_behavior():
    loc = dk_local_operator(DKParams(0.4, 0.7))
    series = zeta_log_series(loc, 3, 20)
    inside = series.truncation_bound(0.3 * series.radius_hint)
    nearer = series.truncation_bound(0.8 * series.radius_hint)
    assert inside is not None and nearer is not None and inside < nearer
    assert series.truncation_bound(2.0 * series.radius_hint) is None


def test_single_site_zeta_closed_form():
    loc = dk_local_operator(DKParams(0.3, 0.9))
    for u in (0.1, 0.5):
        assert abs(zeta_det(loc, 1, u) - 1.0 / (1.0 - u)) < 1e-14
        series = zeta_log_series(loc, 1, 120)
        assert abs(np.exp(series.evaluate(u)) - 1.0 / (1.0 - u)) < 1e-12


def test_zeta_det_singular_guard():
    loc = dk_local_operator(DKParams(1.0, 0.0))  # eigenvalue 1 in the spectrum
    with pytest.raises(SingularFactor):
        zeta_det(loc, 3, 1.0)


def test_binomial_weights():
    w = BinomialWeights.for_n(5)
    assert abs(sum(w.weights) - 1.0) < 1e-14
    for k, wk in enumerate(w.weights):
        assert wk == pytest.approx(math.comb(5, k) / 32)
    assert list(w.signed_support()) == [2 * k - 5 for k in range(6)]


def test_qca_rotation_coefficients_and_report():
    rep = qca_rotation_check(0.7, 5, 25, tol=1e-9)
    assert rep.passed
    assert rep.worst_residual < 1e-12
    loc = qca_rotation_local(0.7)
    for r in (1, 3, 10):
        assert abs(c_r(loc, 3, r) - np.cos(0.7 * r) ** 2) < 1e-12


def test_spectral_radius_estimate_sane():
    loc = dk_local_operator(DKParams(0.6, 0.9))
    g = build_global_kronecker(loc, 4).dense
    true_rho = np.abs(np.linalg.eigvals(g)).max()
    est = spectral_radius_estimate(loc, 4)
    assert 0.5 * true_rho <= est <= 2.0 * true_rho
