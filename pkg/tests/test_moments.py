import math

import numpy as np
import pytest

from rsmoment import modforms as mf
from rsmoment import moments as mo
from rsmoment.specialfn import EULER_GAMMA, digamma
from rsmoment.tracefmla import petersson_rhs_q


@pytest.fixture(scope="module")
def delta_record():
    return mf.newform_from_eigenform(mf.eigenforms(12, 60000)[0])


def test_omega_dim_one_equals_diagonal_rhs():
    ow = mo.omega_weights(12)
    rhs = petersson_rhs_q(1, 1, 12)
    assert len(ow.omega) == 1
    assert abs(ow.omega[0] - rhs.value) < 1e-12
    assert ow.omega[0] > 0


def test_omega_k24_held_out_validation():
    ow = mo.omega_weights(24)
    forms = mf.eigenforms(24, 64)
    for (m, n) in ((2, 3), (3, 5), (4, 9), (2, 8)):
        lhs = sum(w * f.c(m) * f.c(n) for w, f in zip(ow.omega, forms))
        rhs = petersson_rhs_q(m, n, 24)
        assert abs(lhs - rhs.value) <= 1e-8 * max(1.0, abs(rhs.value))
    assert np.all(ow.omega > 0)


def test_omega_sum_is_diagonal():
    for k in (16, 24, 36):
        ow = mo.omega_weights(k)
        assert abs(float(np.sum(ow.omega)) - ow.rhs_diag) < 1e-10


def test_omega_empty_space():
    with pytest.raises(ValueError, match="empty space"):
        mo.omega_weights(14)


def test_weight_constraint_errors(delta_record):
    with pytest.raises(ValueError, match="weight constraint k_j > l_j violated"):
        mo.e_term(delta_record, 1, 12)
    with pytest.raises(ValueError, match="weight constraint"):
        mo.m_term_direct(delta_record, 1, 12)


def test_m_residue_closed_form_matches_laurent_data(delta_record):
    # p = 1, level 1, l = 12: residue = 2[gamma + (psi((k-11)/2)+psi((k+11)/2)
    #                                   - log 4pi^2)/2]
    for k in (16, 20, 40):
        expect = 2.0 * (EULER_GAMMA + 0.5 * (digamma((k - 11) / 2.0)
                                             + digamma((k + 11) / 2.0)
                                             - math.log(4 * math.pi ** 2)))
        assert abs(mo.m_term_residue(delta_record, 1, k) - expect) < 1e-12


def test_m_direct_vs_residue_rate(delta_record):
    for k in (16, 24, 40, 60):
        md = mo.m_term_direct(delta_record, 1, k)
        mr = mo.m_term_residue(delta_record, 1, k)
        assert k * abs(md.value - mr) <= 50.0


def test_m_direct_sign_tracks_cg(delta_record):
    for p in (2, 3, 5):
        for k in (20, 30):
            md = mo.m_term_direct(delta_record, p, k)
            assert math.copysign(1.0, md.value) == math.copysign(1.0, delta_record.c(p))


def test_m_direct_tolerance_stability(delta_record):
    a = mo.m_term_direct(delta_record, 2, 16, tol=1e-8)
    b = mo.m_term_direct(delta_record, 2, 16, tol=1e-12)
    assert abs(a.value - b.value) <= a.certificate + b.certificate


def test_e_term_stability_under_doubled_truncations(delta_record):
    base = mo.e_term(delta_record, 1, 20)
    vp_cut = mo.effective_cutoff(mo.VParams((20,), (12,)), mo.ETruncation().tol / 16.0)
    doubled = mo.e_term(delta_record, 1, 20,
                        trunc=mo.ETruncation(nu_cutoff=2 * vp_cut))
    assert abs(base.value - doubled.value) <= 1e-6


def test_flagship_identity_small_grid(delta_record):
    for (k, p) in ((14, 1), (16, 2), (18, 1), (20, 5)):
        rep = mo.moment_report(delta_record, p, k)
        assert abs(rep.identity_residual) <= rep.cert_total, (k, p)
        assert rep.cert_total < 1e-5


def test_empty_space_moment_is_pure_cancellation(delta_record):
    # dim S_14 = 0: the eigenform side is an empty sum, so E = -M exactly
    rep = mo.moment_report(delta_record, 1, 14)
    assert rep.lhs == 0.0
    assert abs(rep.m_direct + rep.e_value) <= rep.cert_total


def test_recover_coefficient_examples(delta_record):
    rec = mo.recover_coefficient(delta_record, 2, 20)
    assert abs(rec - (-24 / 2 ** 5.5)) < 1e-6
    rec1 = mo.recover_coefficient(delta_record, 1, 18)
    assert abs(rec1 - 1.0) < 1e-8


def test_recovery_determines_form(delta_record):
    # the determination experiment: recovered C at p=2 separates Delta from
    # the weight-16 eigenform
    g16 = mf.newform_from_eigenform(mf.eigenforms(16, 50000)[0])
    r_delta = mo.recover_coefficient(delta_record, 2, 22)
    r_16 = mo.recover_coefficient(g16, 2, 22)
    assert abs(r_delta - r_16) > 0.1


def test_recovery_k_independence(delta_record):
    vals = [mo.recover_coefficient(delta_record, 3, k) for k in (18, 24, 30)]
    assert max(vals) - min(vals) < 1e-6


def test_scan_csv_schema(delta_record):
    res = mo.asymptotic_scan(delta_record, 2, [16, 18, 20])
    csv = mo.scan_to_csv(res)
    lines = csv.strip().split("\n")
    assert lines[0] == mo.CSV_HEADER
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[0] == "16" and first[1] == "2"
    assert len(first) == 9
    # slope of the p=2 scan carries the sign of C_Delta(2) < 0
    assert res.slope_theoretical < 0


def test_moment_report_finite_guard():
    with pytest.raises(ValueError):
        mo.MomentReport(weight=16, p=1, m_direct=float("nan"), m_residue=0.0,
                        e_value=0.0, lhs=0.0, identity_residual=0.0,
                        recovered_c=0.0, cert_total=0.0)
