"""Envelopes, bracketing sequences, H_0 and the weighted sup-norm."""

import math

import numpy as np
import pytest

from errors import DomainError, UsageError
from phi4.dynamics import extract_delta
from phi4.sequences import (
    GreenSequence,
    build_h0,
    build_h_max,
    build_h_min,
    delta_max,
    delta_min,
    envelope_table,
    norm_weights,
    seq_distance,
    seq_norm,
)


# ── Splitting envelopes ──────────────────────────────────────
def test_delta_max_values():
    assert delta_max(3, 0.01) == pytest.approx(0.06)
    assert delta_max(5, 0.01, d0=0.001) == pytest.approx(0.6 / 1.0006)
    assert delta_max(5, 1e-12) == pytest.approx(0.0, abs=1e-9)


def test_delta_min_values():
    assert delta_min(3, 0.01) == pytest.approx(0.06 / 1.090054)
    assert delta_min(5, 0.01) == pytest.approx(0.375)


@pytest.mark.parametrize("lam", np.logspace(-6, 0, 13).tolist())
def test_envelope_band_is_ordered(lam):
    for n in range(3, 202, 2):
        assert 0.0 < delta_min(n, lam) < delta_max(n, lam)


def test_envelopes_reach_the_free_splitting_at_tiny_coupling():
    lam = 1e-8
    assert delta_max(3, lam) / lam == pytest.approx(6.0, rel=1e-4)
    assert delta_min(3, lam) / lam == pytest.approx(6.0, rel=1e-4)
    for n in range(5, 52, 2):
        target = 3 * n * (n - 1)
        assert delta_max(n, lam) / lam == pytest.approx(target, rel=1e-4)
        assert delta_min(n, lam) / lam == pytest.approx(target, rel=1e-4)


@pytest.mark.parametrize("n, lam", [(4, 0.01), (1, 0.01), (3, 0.0), (5, -0.1)])
def test_envelopes_reject_bad_arguments(n, lam):
    with pytest.raises(DomainError):
        delta_max(n, lam)


# ── Bracketing sequences ─────────────────────────────────────
def test_h_max_closed_forms():
    h = build_h_max(0.1, 9)
    assert h.value(1) == pytest.approx(1.1236)
    assert h.value(3) == pytest.approx(-0.6 * 1.1236**3)
    assert h.value(3) == pytest.approx(-0.851111, rel=1e-5)


def test_h_min_closed_forms():
    h = build_h_min(0.01, 9)
    assert h.value(1) == 1.0
    assert h.value(3) == pytest.approx(-delta_min(3, 0.01))
    assert h.value(3) == pytest.approx(-0.0550432, rel=1e-5)


def test_envelopes_vanish_with_the_coupling():
    h = build_h_min(1e-10, 11)
    assert h.value(1) == 1.0
    assert all(abs(h.value(n)) < 1e-8 for n in range(3, 12, 2))


@pytest.mark.parametrize("lam", [0.001, 0.01, 0.1])
def test_envelopes_alternate_in_sign_and_nest(lam):
    h_max, h_min = build_h_max(lam, 25), build_h_min(lam, 25)
    for n in range(1, 26, 2):
        expected = 1 if n == 1 else (-1) ** ((n - 1) // 2)
        assert h_max.sign(n) == h_min.sign(n) == expected
        assert h_min.log10_abs(n) <= h_max.log10_abs(n) + 1e-12


def test_extract_delta_inverts_the_envelope_construction():
    lam = 0.01
    d_min = extract_delta(build_h_min(lam, 25))
    d_max = extract_delta(build_h_max(lam, 25))
    assert d_max.at(3) == pytest.approx(6 * lam, rel=1e-12)
    for n in range(3, 26, 2):
        assert d_min.at(n) == pytest.approx(delta_min(n, lam), rel=1e-12)
    for n in range(5, 26, 2):
        assert d_max.at(n) == pytest.approx(delta_max(n, lam), rel=1e-12)


def test_delta1_of_unit_h2_is_zero():
    assert extract_delta(build_h_min(0.01, 5)).delta1 == 0.0


# ── Fundamental sequence ─────────────────────────────────────
def test_h0_second_moment():
    lam = 0.01
    h0 = build_h0(lam, 9)
    assert h0.value(1) == pytest.approx(1.0 + lam * delta_min(3, lam), rel=1e-14)
    assert h0.value(1) == pytest.approx(1.000550, rel=1e-6)
    assert build_h0(1e-9, 9).value(1) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("lam", [0.001, 0.01, 0.05, 0.1])
def test_h0_sixth_moment_is_positive(lam):
    assert build_h0(lam, 9).sign(5) == 1


@pytest.mark.parametrize("lam", [0.001, 0.01, 0.03, 0.05])
def test_h0_alternates_and_lies_between_the_envelopes(lam):
    h0, h_max, h_min = build_h0(lam, 25), build_h_max(lam, 25), build_h_min(lam, 25)
    for n in range(1, 26, 2):
        assert h0.sign(n) == (1 if n == 1 else (-1) ** ((n - 1) // 2))
        assert h_min.log10_abs(n) - 1e-12 <= h0.log10_abs(n) <= h_max.log10_abs(n) + 1e-12


# ── Norm ─────────────────────────────────────────────────────
def test_norm_weights():
    w = norm_weights(1e-9, 5)
    assert w.at(1) == pytest.approx(1.0)
    assert norm_weights(0.1, 5).at(3) == pytest.approx(0.6 * 1.1236**3)
    w = norm_weights(0.01, 7)
    assert w.at(5) == pytest.approx(20 * delta_max(5, 0.01) * w.at(3) * w.at(1) ** 2)


def test_norm_of_h_max_low_entries_is_one():
    lam = 0.1
    h = build_h_max(lam, 5).truncate(3)
    assert seq_norm(h, norm_weights(lam, 3)) == pytest.approx(1.0)


def test_norm_zero_and_homogeneity():
    lam = 0.01
    w = norm_weights(lam, 11)
    assert seq_norm(GreenSequence.zeros(lam, 11), w) == 0.0
    h = build_h0(lam, 11)
    assert seq_norm(h.scaled(-2.5), w) == pytest.approx(2.5 * seq_norm(h, w))


def test_distance_properties():
    lam = 0.01
    w = norm_weights(lam, 15)
    h, g = build_h_max(lam, 15), build_h_min(lam, 15)
    assert seq_distance(h, h, w) == 0.0
    assert seq_distance(h, g, w) == pytest.approx(seq_distance(g, h, w))
    assert seq_distance(h, g, w) > 0.0


def test_grid_mismatch_is_a_usage_error():
    lam = 0.01
    with pytest.raises(UsageError):
        seq_norm(build_h_max(lam, 9), norm_weights(lam, 11))
    with pytest.raises(UsageError):
        seq_distance(build_h_max(lam, 9), build_h_max(lam, 11), norm_weights(lam, 9))


# ── Container ────────────────────────────────────────────────
def test_sequence_is_immutable_and_truncates():
    h = build_h_max(0.01, 11)
    with pytest.raises(ValueError):
        h.log_abs[0] = 0.0
    short = h.truncate(7)
    assert short.n_work == 7
    assert np.array_equal(short.signs, h.signs[:4])
    assert short.extended(h).n_work == 11


def test_values_survive_factorial_growth():
    h = build_h_max(0.05, 201)
    assert h.is_finite()
    assert h.log10_abs(201) > 100
    assert math.isinf(h.value(201)) or abs(h.value(201)) > 1e100


def test_envelope_table_rows():
    rows = envelope_table(0.01, 9)
    assert [r["n"] for r in rows] == [1, 3, 5, 7, 9]
    assert math.isnan(rows[0]["delta_max"])
    assert rows[1]["delta_max"] == pytest.approx(0.06)
