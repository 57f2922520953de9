"""A/B/C terms, the mapping M*, the fixed-point iteration and the contraction estimate."""

import numpy as np
import pytest

from config import PAD_MARGIN, TOL_CONVERGE
from errors import PaddingRequiredError, SingularityError, UsageError
from phi4.dynamics import (
    contraction_estimate,
    equation_residual,
    extract_delta,
    iterate,
    map_star,
    pad,
    term_A,
    term_B,
    term_C,
)
from phi4.sequences import GreenSequence, build_h0, build_h_max, build_h_min, delta_max, delta_min

LAM = 0.01
N_MAX = 25
N_WORK = N_MAX + 2 * PAD_MARGIN


@pytest.fixture(scope="module")
def h_min():
    return build_h_min(LAM, 29)


@pytest.fixture(scope="module")
def converged():
    """Fixed point at Λ = 0.001 reached from the upper envelope."""
    trace = iterate(build_h_max(0.001, N_WORK), nu_max=60, start_label="max", n_max=N_MAX)
    assert trace.status.kind == "converged"
    return trace


def _value(term):
    sign, log_abs = term
    return 0.0 if sign == 0 else sign * 10.0**log_abs


# ── Terms ────────────────────────────────────────────────────
def test_term_A_reads_two_entries_up(h_min):
    assert _value(term_A(h_min, 3)) == pytest.approx(-LAM * h_min.value(5))
    zero_top = GreenSequence.from_values(LAM, [1.0, -0.05, 0.0])
    assert term_A(zero_top, 3) == (0, float("-inf"))


def test_term_A_beyond_the_grid_needs_padding(h_min):
    with pytest.raises(PaddingRequiredError) as err:
        term_A(h_min, 29)
    assert err.value.needed == 31


def test_term_B_single_and_double_partition(h_min):
    h2, h4 = h_min.value(1), h_min.value(3)
    assert _value(term_B(h_min, 3, include_j2_zero=False)) == pytest.approx(-9 * LAM * h4 * h2)
    assert _value(term_B(h_min, 3, include_j2_zero=True)) == pytest.approx(-12 * LAM * h4 * h2)


def test_term_B_vanishes_above_h2_when_j2_zero_is_excluded():
    h = GreenSequence.from_values(LAM, [1.0, 0.0, 0.0, 0.0])
    assert term_B(h, 5, include_j2_zero=False)[0] == 0


def test_term_C_low_orders(h_min):
    h2, h4 = h_min.value(1), h_min.value(3)
    assert _value(term_C(h_min, 3)) == pytest.approx(-6 * LAM * h2**3)
    assert _value(term_C(h_min, 5)) == pytest.approx(-60 * LAM * h4 * h2**2)


@pytest.mark.parametrize("n", [3, 5, 7, 13, 25])
def test_term_signs_follow_the_alternation(h_min, n):
    expected = (-1) ** ((n - 1) // 2)
    assert term_A(h_min, n)[0] == expected
    assert term_C(h_min, n)[0] == expected
    assert term_B(h_min, n)[0] == -expected


# ── Equation residual ────────────────────────────────────────
def test_residual_of_the_free_sequence():
    h = GreenSequence.from_values(LAM, [1.0, 0.0, 0.0])
    assert equation_residual(h, 1) == 0.0


def test_envelopes_do_not_solve_the_equations():
    assert equation_residual(build_h_max(LAM, 11), 7) > 1e-6


def test_fixed_point_solves_the_equations(converged):
    h = converged.final.h
    for n in range(1, N_MAX - 3, 2):
        assert equation_residual(h, n) <= 10 * TOL_CONVERGE


# ── The mapping ──────────────────────────────────────────────
def test_map_star_loses_the_top_entry_and_pads_it_back():
    h = build_h_max(LAM, 15)
    primed, diag = map_star(h)
    assert primed.n_work == 13
    assert sorted(diag.entries) == list(range(3, 14, 2))
    padded, _ = map_star(h, pad_policy="envelope", pad_source=h)
    assert padded.n_work == 15
    assert padded.entry(15) == h.entry(15)
    zero_padded, _ = map_star(h, pad_policy="zero")
    assert zero_padded.sign(15) == 0


def test_map_star_preserves_sign_alternation():
    primed, _ = map_star(build_h_max(LAM, 27))
    for n in range(3, 26, 2):
        assert primed.sign(n) == (-1) ** ((n - 1) // 2)


@pytest.mark.slow
def test_one_step_on_a_thousand_entries_stays_finite():
    h = build_h_max(LAM, 1001)
    primed, _ = map_star(h, pad_policy="envelope", pad_source=h)
    assert primed.n_work == 1001
    assert primed.is_finite()
    assert primed.log10_abs(999) > 100


def test_extract_delta_inverts_map_star():
    primed, diag = map_star(build_h_min(LAM, 27))
    delta = extract_delta(primed)
    for n, entry in diag.entries.items():
        assert delta.at(n) == pytest.approx(entry.delta, rel=1e-12)
    assert delta.delta1 == pytest.approx(diag.delta1, rel=1e-10)


def test_map_star_on_a_vanishing_tail_is_singular():
    h = GreenSequence.from_values(LAM, [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(SingularityError) as err:
        map_star(h)
    assert err.value.n == 3


def test_delta3_denominator_crossing_is_singular():
    # |A^4| = ΛH^6 = 1 against |H^4| = 0.01 drives 1 + D_3 far below zero
    h = GreenSequence.from_values(0.1, [1.0, -0.01, 10.0, -1.0, 1.0])
    with pytest.raises(SingularityError) as err:
        map_star(h)
    assert err.value.n == 3
    with pytest.raises(SingularityError):
        map_star(h, judge_upto=1)


def test_higher_crossing_is_singular_up_to_the_judged_n():
    h = GreenSequence.from_values(0.1, [1.0, -0.01, 0.001, -10.0, 1.0])
    with pytest.raises(SingularityError) as err:
        map_star(h)
    assert err.value.n == 5

    primed, diag = map_star(h, judge_upto=3)
    assert diag.crossings == [5]
    assert diag.entries[5].delta < 0.0
    assert primed.sign(5) == -1
    assert primed.sign(3) == -1


@pytest.mark.parametrize("m", [3, 9, 13])
def test_map_star_output_depends_only_on_lower_and_nearby_entries(m):
    """Moving input H^{m+1} leaves every output below n = m - 2 bit-identical and moves the rest."""
    h = build_h_min(LAM, 21)
    eps = np.zeros(h.signs.size)
    eps[(m - 1) // 2] = 1e-3
    base, _ = map_star(h)
    moved, _ = map_star(h.perturbed(eps))
    for n in range(1, base.n_work + 1, 2):
        if n < m - 2:
            assert moved.entry(n) == base.entry(n)
        else:
            assert moved.log10_abs(n) != base.log10_abs(n)


def test_map_star_needs_room_for_the_a_term():
    with pytest.raises(UsageError):
        map_star(GreenSequence.from_values(LAM, [1.0, -0.05]))


def test_unknown_pad_policy():
    h = build_h_max(LAM, 9)
    with pytest.raises(UsageError):
        pad(h.truncate(7), 9, "mirror", h)
    with pytest.raises(UsageError):
        iterate(h, pad_policy="mirror")


# ── Iteration ────────────────────────────────────────────────
def test_zero_iterations_keep_only_the_start():
    trace = iterate(build_h_max(LAM, 11), nu_max=0, n_max=7)
    assert len(trace.snapshots) == 1
    assert trace.status.kind == "running"


@pytest.mark.parametrize("lam", [0.001, 0.01])
@pytest.mark.parametrize("start", ["max", "min"])
def test_small_couplings_converge(lam, start):
    builder = build_h_max if start == "max" else build_h_min
    trace = iterate(builder(lam, N_WORK), nu_max=60, start_label=start, n_max=N_MAX)
    assert trace.status.kind == "converged"
    assert trace.status.nu <= 60


def test_n_max_must_fit_the_start():
    h = build_h_max(LAM, 11)
    with pytest.raises(UsageError):
        iterate(h)  # the default margin does not fit
    for bad in (1, 8, 11):
        with pytest.raises(UsageError):
            iterate(h, n_max=bad)


def test_crossings_in_the_margin_do_not_end_the_run():
    # with only two margin entries the top one crosses 1 + D_n <= 0 from ν = 2 on
    trace = iterate(build_h_max(LAM, N_MAX + 4), nu_max=40, tol_converge=1e-8, start_label="max", n_max=N_MAX)
    assert trace.status.kind == "converged"


def test_status_ignores_the_margin_entries():
    trace = iterate(build_h_max(LAM, N_WORK), nu_max=60, start_label="max", n_max=N_MAX)
    assert trace.status.kind == "converged"
    assert all(s.delta.values[(N_MAX + 1) // 2 - 1] > 0.0 for s in trace.snapshots)


def test_agreement_of_the_starts_at_the_smallest_coupling():
    """Λ = 0.001: within 1e-3 by ν = 6 and 1e-8 by ν = 10 on every n <= 25."""
    k_max = (N_MAX + 1) // 2
    traces = [iterate(b(0.001, N_WORK), nu_max=20, n_max=N_MAX) for b in (build_h_max, build_h_min)]
    for nu, tol in ((6, 1e-3), (10, 1e-8)):
        a, b = (t.snapshots[min(nu, len(t.snapshots) - 1)].delta.values[1:k_max] for t in traces)
        np.testing.assert_allclose(a, b, rtol=tol)


def test_agreement_of_the_starts_at_lambda_001_low_orders():
    """Λ = 0.01 agrees within 1e-3 by ν = 6 on n <= 15; the higher entries approach more slowly."""
    traces = [iterate(b(LAM, N_WORK), nu_max=10, n_max=N_MAX) for b in (build_h_max, build_h_min)]
    a, b = (t.snapshots[6].delta.values[1:8] for t in traces)
    np.testing.assert_allclose(a, b, rtol=1e-3)


@pytest.mark.parametrize("lam", [0.001, 0.01])
def test_envelope_starts_approach_monotonically(lam):
    k_max = (N_MAX + 1) // 2
    from_max = iterate(build_h_max(lam, N_WORK), nu_max=20, n_max=N_MAX)
    from_min = iterate(build_h_min(lam, N_WORK), nu_max=20, n_max=N_MAX)
    dmax = np.array([s.delta.values[1:k_max] for s in from_max.snapshots])
    dmin = np.array([s.delta.values[1:k_max] for s in from_min.snapshots])
    assert np.all(np.diff(dmax, axis=0) <= 1e-9 * dmax[:-1])
    assert np.all(np.diff(dmin, axis=0) >= -1e-9 * dmin[:-1])


@pytest.mark.parametrize("lam, n", [(0.03, 23), (0.05, 17), (0.15, 5)])
def test_upper_envelope_crosses_at_larger_couplings(lam, n):
    trace = iterate(build_h_max(lam, N_WORK), nu_max=20, start_label="max", n_max=N_MAX)
    assert trace.status.kind == "singular"
    assert trace.status.n == n


def test_both_starts_reach_the_same_fixed_point(converged):
    other = iterate(build_h_min(0.001, N_WORK), nu_max=60, start_label="min", n_max=N_MAX)
    k_max = (N_MAX + 1) // 2
    a = converged.final.delta.values[1:k_max]
    b = other.final.delta.values[1:k_max]
    np.testing.assert_allclose(a, b, rtol=1e-9)


def test_first_step_moves_into_the_band():
    """One step from each envelope moves δ towards the interior of the band."""
    from_max = iterate(build_h_max(LAM, N_WORK), nu_max=1)
    from_min = iterate(build_h_min(LAM, N_WORK), nu_max=1)
    for n in range(3, 26, 2):
        k = (n - 1) // 2
        assert from_max.snapshots[1].delta.values[k] <= delta_max(n, LAM) * (1 + 1e-12)
        assert from_min.snapshots[1].delta.values[k] >= delta_min(n, LAM) * (1 - 1e-12)


def test_fixed_point_delta_stays_positive(converged):
    assert np.all(converged.final.delta.values[1:] > 0.0)


def test_iteration_is_deterministic():
    a = iterate(build_h0(LAM, 15), nu_max=5, n_max=11)
    b = iterate(build_h0(LAM, 15), nu_max=5, n_max=11)
    assert a.status == b.status
    np.testing.assert_array_equal(a.final.h.log_abs, b.final.h.log_abs)


# ── Contraction estimate ─────────────────────────────────────
def test_contraction_below_one_at_small_coupling():
    stats = contraction_estimate(LAM, 25, rho=1e-3, num_pairs=8, seed=7)
    assert stats.pairs == 8
    assert 0.0 < stats.max_q < 1.0
    assert stats.mean_q <= stats.max_q


def test_contraction_estimate_is_seeded():
    a = contraction_estimate(LAM, 13, rho=1e-3, num_pairs=4, seed=11)
    b = contraction_estimate(LAM, 13, rho=1e-3, num_pairs=4, seed=11)
    assert a.qs == b.qs


def test_contraction_estimate_rejects_bad_arguments():
    with pytest.raises(UsageError):
        contraction_estimate(LAM, 13, rho=0.0, num_pairs=4, seed=1)
    with pytest.raises(UsageError):
        contraction_estimate(LAM, 13, rho=1e-3, num_pairs=0, seed=1)
