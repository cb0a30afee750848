"""Constructive shooting: words of 1's and 3's realized on the segment L.

The witness alphas asserted bitwise come from deterministic grid scans; they
were frozen from instrumented runs and survive tolerance halving (checked
explicitly below by re-integrating every witness).
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from lorenzlab import Params, TargetWord, equilibria, point_on_L, shoot_word
from lorenzlab.sequence import (
    ConditionAFailed,
    endpoint_behaviors,
    sigma_transition_audit,
    trace_word_at_alpha,
    _sample_args,
    _shoot_sample,
)

from conftest import PARAMS_12


def test_point_on_l_spans_p0_to_p1(geometry12):
    p0_end = point_on_L(1.0, geometry12)
    p1_end = point_on_L(0.0, geometry12)
    assert np.allclose(p0_end, equilibria(PARAMS_12).p0, atol=1e-12)
    assert np.allclose(p1_end, geometry12.p1, atol=1e-12)
    with pytest.raises(ValueError):
        point_on_L(-0.1, geometry12)
    with pytest.raises(ValueError):
        point_on_L(1.1, geometry12)


def test_target_word_parsing():
    assert TargetWord.parse("131").letters == (1, 3, 1)
    for bad in ("2", "13x", ""):
        with pytest.raises(ValueError):
            TargetWord.parse(bad)


def test_every_target_word_realized(word_shoots):
    for word, res in word_shoots:
        target = TargetWord.parse(word).letters
        assert res.achieved_word == target
        lo, hi = res.alpha_interval
        assert lo <= res.witness_alpha <= hi
        assert len(res.certificates) == len(target)


def test_known_witness_alphas(word_shoots):
    by_word = dict(word_shoots)
    assert by_word["1"].witness_alpha == 0.35965625
    assert by_word["313"].witness_alpha == 0.3248444213867187


def test_interval_chain_nested(word_shoots):
    for word, res in word_shoots:
        chain = res.interval_chain
        assert chain[0] == (1e-3, 1.0 - 1e-3)
        for (alo, ahi), (blo, bhi) in zip(chain, chain[1:]):
            assert alo <= blo <= bhi <= ahi
        assert chain[-1] == res.alpha_interval


def test_certificates_carry_anchored_evidence(word_shoots):
    for word, res in word_shoots:
        target = TargetWord.parse(word).letters
        for j, cert in enumerate(res.certificates):
            assert cert.letter_index == j
            assert cert.target_letter == target[j]
            blo, bhi = cert.interval_before
            alo, ahi = cert.interval_after
            assert blo <= alo <= ahi <= bhi
            assert alo <= cert.anchor_alpha <= ahi
            assert cert.anchor_word[: j + 1] == target[: j + 1]
            # the anchor's next symbol is already at least 4, either as a
            # completed letter or as an open-tail flip count
            completed = (
                len(cert.anchor_word) > j + 1 and cert.anchor_word[j + 1] >= 4
            )
            assert completed or cert.anchor_tail_flips >= 4


def test_witness_words_survive_tolerance_halving(word_shoots, geometry12):
    for word, res in word_shoots:
        target = TargetWord.parse(word).letters
        n = len(target)
        for tols in ((1e-10, 1e-12), (5e-11, 5e-13)):
            s = trace_word_at_alpha(
                res.witness_alpha,
                PARAMS_12,
                geometry12,
                res.horizon_used,
                n,
                rel_tol=tols[0],
                abs_tol=tols[1],
            )
            assert s.word[:n] == target
            assert not s.degenerate


def test_anchor_traces_reproduce_on_reintegration(word_shoots, geometry12):
    for word, res in word_shoots:
        cert = res.certificates[-1]
        s = trace_word_at_alpha(
            cert.anchor_alpha,
            PARAMS_12,
            geometry12,
            cert.horizon,
            len(res.achieved_word),
        )
        assert s.word == cert.anchor_word
        assert s.tail_flips == cert.anchor_tail_flips


def test_transition_audit_clean_on_fine_grid(geometry12):
    samples = [
        _shoot_sample(
            _sample_args(a, PARAMS_12, geometry12.p1, 60.0, 4, 1e-10, 1e-12)
        )
        for a in np.linspace(0.30, 0.40, 9)
    ]
    audit = sigma_transition_audit(samples)
    assert audit.clean
    assert audit.alarms == ()


@pytest.mark.parametrize("R", [9.0, 11.0, 13.0, 15.0, 16.5])
def test_endpoint_behaviors_where_ordering_holds(sweep_10_1, R):
    by_R = dict(zip(sweep_10_1.grid, sweep_10_1.verdicts))
    assert by_R[R].holds
    rep = endpoint_behaviors(Params(10.0, 1.0, R))
    assert rep.both_pass
    assert math.isinf(rep.near_one_first_zero_t)


def test_endpoint_behaviors_reference_values():
    rep = endpoint_behaviors(PARAMS_12)
    assert rep.both_pass
    assert rep.near_one_first_flip_t == pytest.approx(0.6932293928906808, abs=1e-9)
    assert rep.near_zero_flips_after_first_zero == 82


def test_endpoint_behaviors_requires_event_ordering():
    with pytest.raises(ConditionAFailed):
        endpoint_behaviors(Params(10.0, 1.0, 7.5))


def test_shoot_rejects_bad_inputs():
    with pytest.raises(ValueError):
        shoot_word(TargetWord.parse("131313131"), PARAMS_12)
    with pytest.raises(ConditionAFailed):
        shoot_word(TargetWord.parse("1"), Params(10.0, 1.0, 7.5))
