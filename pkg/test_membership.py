"""Φ / Φ_0 membership, stability tables and the small-Λ limits."""

import numpy as np
import pytest

from phi4.membership import check_phi, check_small_lambda_limits, check_stability
from phi4.sequences import GreenSequence, build_h_max, build_h_min

LAM = 0.01


@pytest.mark.parametrize("builder", [build_h_max, build_h_min])
def test_envelopes_are_members_of_phi0(builder):
    report = check_phi(builder(LAM, 25))
    assert report.phi_member
    assert report.phi0_member
    assert report.failures() == []
    assert report.n == list(range(1, 26, 2))


def test_doubled_upper_envelope_leaves_the_bracket():
    report = check_phi(build_h_max(LAM, 25).scaled(2.0))
    assert not any(report.bracket_ok)
    assert not report.phi0_member


def test_positive_fourth_moment_breaks_the_sign_pattern():
    h = build_h_max(LAM, 11)
    signs = np.array(h.signs)
    signs[1] = 1
    report = check_phi(GreenSequence(LAM, signs, h.log_abs))
    assert report.sign_ok[1] is False
    assert report.delta_positive[1] is False
    assert not report.phi_member
    assert (3, "sign_ok") in report.failures()


def test_singular_extraction_is_reported_not_raised():
    h = GreenSequence.from_values(LAM, [1.0, 0.0, 0.0, 0.0, 0.0])
    report = check_phi(h)
    assert not report.phi_member
    assert report.delta_positive[2] is False


def test_growth_bound_with_a_tiny_k0():
    report = check_phi(build_h_max(LAM, 25), k0=1e-3)
    assert not all(report.bound_ok)
    assert not report.phi_member


def test_stability_table_at_small_coupling():
    table = check_stability([0.001, 0.01], n_max=25, nu_max=20, starts=("max", "min"))
    low, high = table.rows
    assert all(s.startswith("converged") for s in low.statuses.values())
    assert set(high.statuses.values()) == {"running"}
    assert low.stable and high.stable
    assert high.iterates_checked == 2 * 21
    assert table.largest_stable_lambda == 0.01


@pytest.mark.parametrize("lam", [0.03, 0.05])
def test_lower_envelope_iterates_stay_in_phi0(lam):
    table = check_stability([lam], n_max=25, nu_max=20, starts=("min",))
    assert table.rows[0].stable, table.rows[0].first_failure


def test_upper_envelope_is_unstable_at_lambda_003():
    row = check_stability([0.03], n_max=25, nu_max=20, starts=("max",)).rows[0]
    assert not row.stable
    assert row.first_failure.startswith("max: singular(nu=2, n=23)")


def test_stability_table_without_stable_rows():
    table = check_stability([0.01], n_max=9, nu_max=3, starts=("max",), k0=1e-6)
    assert not table.rows[0].stable
    assert table.largest_stable_lambda is None


def test_small_coupling_limits():
    rows = {r.n: r for r in check_small_lambda_limits([1, 3, 7], lambda_small=1e-8)}
    assert rows[3].target == 6.0
    assert rows[3].measured == pytest.approx(6.0, rel=1e-4)
    assert rows[7].target == 126.0
    assert rows[7].measured == pytest.approx(126.0, rel=1e-4)
    assert abs(rows[1].measured) < 1e-6
