import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rsmoment import tracefmla as tf
from rsmoment.numfield import (Q_SQRT2, Q_SQRT5, FieldElement, embed_float,
                               is_totally_positive, norm, trace)


def kq_oracle(m, n, c):
    """Independent complex-exponential enumeration."""
    if c == 1:
        return 1.0 + 0.0j
    tot = 0.0 + 0.0j
    for x in range(1, c):
        if math.gcd(x, c) == 1:
            xb = pow(x, -1, c)
            tot += cmath.exp(2j * math.pi * (m * x + n * xb) / c)
    return tot


def test_kq_spec_examples():
    assert tf.kloosterman_q(1, 1, 1) == 1.0
    assert abs(tf.kloosterman_q(1, 1, 2) - 1.0) < 1e-12
    assert abs(tf.kloosterman_q(1, 1, 3) + 1.0) < 1e-12


@given(st.integers(1, 30), st.integers(1, 30), st.integers(1, 120))
@settings(max_examples=80, deadline=None)
def test_kq_oracle_symmetry_and_realness(m, n, c):
    v = tf.kloosterman_q(m, n, c)
    o = kq_oracle(m, n, c)
    assert abs(v - o.real) < 1e-8
    assert abs(o.imag) < 1e-10
    assert abs(v - tf.kloosterman_q(n, m, c)) < 1e-9


def test_kq_weil_bound_sample():
    for c in (7, 36, 125, 343, 499):
        for (m, n) in ((1, 1), (2, 5), (4, 6)):
            s = abs(tf.kloosterman_q(m, n, c))
            dc = sum(1 for d in range(1, c + 1) if c % d == 0)
            bound = dc * math.sqrt(math.gcd(m, math.gcd(n, c))) * math.sqrt(c)
            assert s <= bound + 1e-8


def test_kloosterman_row_matches_pointwise():
    row = tf.kloosterman_row(3, 35)
    for r in (0, 1, 8, 34):
        assert abs(row[r] - tf.kloosterman_q(r, 3, 35)) < 1e-10


# -- number field -------------------------------------------------------------

def nf_oracle(field, alpha, beta, c):
    """Brute-force: rectangle residues, pairwise-product inverse search."""
    nc = abs(int(norm(c)))
    box = tf._residue_box(c)
    residues = {}
    for a in range(2 * nc):
        for b in range(2 * nc):
            x = tf._reduce_mod(field.element(a, b), box)
            residues[(x.a, x.b)] = x
    delta = field.different_gen
    tot = 0.0 + 0.0j
    for x in residues.values():
        inv = None
        for y in residues.values():
            r = tf._reduce_mod(x * y - field.one, box)
            if r.a == 0 and r.b == 0:
                inv = y
                break
        if inv is None:
            continue
        ph = (trace(alpha * x / (delta * c)) + trace(beta * delta * inv / c)) % 1
        tot += cmath.exp(2j * math.pi * float(ph))
    return tot


def test_kl_nf_unit_modulus():
    q = tf.KloostermanQuery(alpha=Q_SQRT5.one, beta=Q_SQRT5.one,
                            c=Q_SQRT5.eps0 * Q_SQRT5.eps0)
    assert tf.kloosterman_nf(q) == 1.0


def test_kl_nf_inert_two_sqrt5():
    c2 = Q_SQRT5.element(2)
    x1, x2, b1, b2 = tf._residue_data("Q_sqrt5", 2, 0)
    assert len(x1) == 3  # (O/2)^x has 3 units: 2 is inert, N(c) = 4
    v = tf.kloosterman_nf(tf.KloostermanQuery(alpha=Q_SQRT5.one, beta=Q_SQRT5.one, c=c2))
    o = nf_oracle(Q_SQRT5, Q_SQRT5.one, Q_SQRT5.one, c2)
    assert abs(v - o.real) < 1e-9 and abs(o.imag) < 1e-9


@pytest.mark.parametrize("field", [Q_SQRT5, Q_SQRT2])
def test_kl_nf_against_bruteforce_sample(field):
    gens = tf._ideal_generators_canonical(field, 60)
    alpha = field.element(1, 1) if is_totally_positive(field.element(1, 1)) \
        else field.element(3, 1)
    for c, nc in gens[:18]:
        q = tf.KloostermanQuery(alpha=alpha, beta=field.one, c=c)
        v = tf.kloosterman_nf(q)
        o = nf_oracle(field, alpha, field.one, c)
        assert abs(v - o.real) < 1e-8, (c, v, o)
        assert abs(o.imag) < 1e-8


def test_kl_nf_exact_phase_agreement():
    for c, nc in tf._ideal_generators_canonical(Q_SQRT5, 40):
        fast = tf.kl_nf_raw(Q_SQRT5, Q_SQRT5.one, Q_SQRT5.one, c)
        slow = tf.kl_nf_exact_phase(Q_SQRT5, Q_SQRT5.one, Q_SQRT5.one, c)
        assert abs(fast - slow) < 1e-9


def test_kl_nf_crt_factorization():
    field = Q_SQRT5
    # c1 = (2) inert (norm 4), c2 = (2 + omega) of norm 5: coprime
    c1 = field.element(2)
    c2 = field.element(2, 1)
    assert is_totally_positive(c2) and int(norm(c2)) == 5
    c = c1 * c2
    alpha = field.element(1, 1)
    beta = field.one
    direct = tf.kl_nf_raw(field, alpha, beta, c)
    g, _, _ = tf.nf_xgcd(c2, c1)
    assert abs(int(norm(g))) == 1
    # CRT: x = x1 c2 c2* + x2 c1 c1*; the factor sums are the same
    # Kloosterman sums with both slots twisted by the complementary inverse
    inv_c2_mod_c1 = tf._nf_inverse(c2, c1)
    inv_c1_mod_c2 = tf._nf_inverse(c1, c2)
    kl1 = tf.kl_nf_raw(field, alpha * inv_c2_mod_c1, beta * inv_c2_mod_c1, c1)
    kl2 = tf.kl_nf_raw(field, alpha * inv_c1_mod_c2, beta * inv_c1_mod_c2, c2)
    assert abs(direct - kl1 * kl2) < 1e-8


def test_residue_enumeration_cap():
    big = Q_SQRT5.element(200, 0)
    with pytest.raises(ValueError, match="overflow"):
        tf.kl_nf_raw(Q_SQRT5, Q_SQRT5.one, Q_SQRT5.one, big, cap=100)


# -- trace formula RHS, degree 1 -------------------------------------------------

def test_rhs_q_computed_anchor_values():
    # J_11(4 pi) = 0.291338... is not small: the diagonal at k = 12 is ~2.84
    got = tf.petersson_rhs_q(1, 1, 12)
    assert abs(got.value - 2.84028738) < 1e-6
    assert got.certificate < 1e-10


def test_rhs_q_diagonal_monotone_to_one():
    vals = [abs(tf.petersson_rhs_q(1, 1, k).value - 1.0) for k in (12, 16, 20, 24)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-3


def test_rhs_q_offdiagonal_suppressed_at_high_weight():
    got = tf.petersson_rhs_q(1, 2, 30)
    assert abs(got.value) < 0.05


def test_rhs_q_tail_certificate_honored_under_doubling():
    a = tf.petersson_rhs_q(2, 3, 16, c_max=40, tol=1.0)
    b = tf.petersson_rhs_q(2, 3, 16, c_max=80, tol=1.0)
    assert abs(a.value - b.value) <= a.certificate


def test_rhs_q_paper_literal_fold():
    for (m, n, k) in ((2, 3, 16), (1, 1, 12), (4, 9, 20)):
        lit = tf.petersson_rhs_q_paper_literal(m, n, k, 60)
        fold = tf.petersson_rhs_q(m, n, k, c_max=60, tol=1.0)
        assert abs(lit - fold.value) < 1e-12


def test_rhs_q_uncertified_error():
    with pytest.raises(tf.UncertifiedError):
        tf.petersson_rhs_q(1, 1, 12, c_max=2, tol=1e-12)


# -- trace formula RHS, degree 2 --------------------------------------------------

def test_rhs_nf_diagonal_detection():
    one = Q_SQRT5.one
    eps2 = Q_SQRT5.eps0 ** 2
    p = tf.TraceRHSParams(weight_vec=(20, 20), c_norm_bound=60,
                          unit_height_bound=30.0, tol=1e-4)
    v_diag = tf.petersson_rhs_nf(one, one, p)
    v_unit = tf.petersson_rhs_nf(eps2, one, p)  # nu = unit * xi: still diagonal
    assert abs(v_diag.value - v_unit.value) < 2e-5


def test_rhs_nf_value_and_stability_sqrt5():
    one = Q_SQRT5.one
    p1 = tf.TraceRHSParams(weight_vec=(20, 20), c_norm_bound=150,
                           unit_height_bound=50.0, tol=1e-6)
    a = tf.petersson_rhs_nf(one, one, p1)
    assert 0.5 < a.value < 1.5
    p2 = tf.TraceRHSParams(weight_vec=(20, 20), c_norm_bound=300,
                           unit_height_bound=2500.0, tol=1e-6)
    b = tf.petersson_rhs_nf(one, one, p2)
    assert abs(a.value - b.value) < 1e-6


def test_rhs_nf_swap_symmetry():
    nu = Q_SQRT5.element(1, 1)
    xi = Q_SQRT5.element(2, 1)  # totally positive, norm 5
    p = tf.TraceRHSParams(weight_vec=(22, 22), c_norm_bound=120,
                          unit_height_bound=50.0, tol=1e-5)
    a = tf.petersson_rhs_nf(nu, xi, p)
    b = tf.petersson_rhs_nf(xi, nu, p)
    assert abs(a.value - b.value) < 1e-10


def test_rhs_nf_unit_translates_crushed_at_high_weight():
    one = Q_SQRT5.one
    base = tf.TraceRHSParams(weight_vec=(30, 30), c_norm_bound=100,
                             unit_height_bound=1.0, tol=1e-6)
    wide = tf.TraceRHSParams(weight_vec=(30, 30), c_norm_bound=100,
                             unit_height_bound=float(embed_float(Q_SQRT5.eps0)[0]) ** 4,
                             tol=1e-6)
    a = tf.petersson_rhs_nf(one, one, base)
    b = tf.petersson_rhs_nf(one, one, wide)
    assert abs(a.value - b.value) < 1e-8


# -- unit sums -------------------------------------------------------------------

def test_unit_sum_examples():
    eps1 = float(embed_float(Q_SQRT5.eps0)[0])
    out = tf.unit_sum_tail(Q_SQRT5, 1.0, eps1 ** 32)
    assert out.certificate < 1e-6
    assert out.value > 1.0
    assert tf.unit_sum_tail(Q_SQRT5, 1.0, 1.0).value == 1.0
    assert math.isinf(tf.unit_sum_tail(Q_SQRT5, 0.0, 10.0).certificate)


def test_unit_sum_cauchy():
    eps1 = float(embed_float(Q_SQRT2.eps0)[0])
    prev = None
    for t in (4, 8, 16, 32):
        out = tf.unit_sum_tail(Q_SQRT2, 1.0, eps1 ** t)
        if prev is not None:
            assert abs(out.value - prev.value) <= prev.certificate + 1e-15
        prev = out
