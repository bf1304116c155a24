"""The twisted first moment and its diagonal/off-diagonal decomposition.

The eigenform side sum_f L(f x g, 1/2) C_f(p) omega_f equals, by the
approximate functional equation plus the Petersson formula, a diagonal term

    M = 2 C_g(p)/sqrt(N(p)) * sum_d a_d/d V(4 pi^2 N(p) d^2 / Q)

and an off-diagonal term E built from Kloosterman sums against J-Bessel
factors.  M also has a closed residue form via the Laurent data of
zeta(2u+1) and digamma values; the difference is the shifted-contour
remainder, of size O(1/k).  Everything here carries propagated truncation
certificates, and the identity residual |LHS - M - E| is checked against
the combined certificate on every report.

The harmonic weights omega_f are not computed from Petersson norms: they
are solved from the trace formula itself on probe pairs and cross-validated
on held-out pairs, which keeps the check honest (an inconsistent solve
cannot reproduce held-out trace data).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import series as _series
from .modforms import Eigenform, NewformRecord, cusp_space, dim_cusp, eigenforms
from .rankin import (DEFAULT_CONTOUR, DEFAULT_G_SCALE, UncertifiedError, VParams,
                     _vq, afe_tail_bound, central_value, effective_cutoff)
from .specialfn import (bessel_j_array, bessel_j_series_bound, digamma,
                        zeta_laurent_at_center)
from .tracefmla import CertValue, kloosterman_row, petersson_rhs_q
from .numfield import Q as FIELD_Q

__all__ = [
    "OmegaWeights",
    "MomentReport",
    "ScanResult",
    "omega_weights",
    "m_term_direct",
    "m_term_residue",
    "e_term",
    "lhs_moment",
    "moment_report",
    "recover_coefficient",
    "asymptotic_scan",
    "scan_to_csv",
    "CSV_HEADER",
]

_HELD_OUT_PAIRS = ((2, 3), (3, 5), (4, 9), (2, 8))
_PROBES = (1, 2, 3, 5, 7)


@dataclass
class OmegaWeights:
    """Harmonic weights solved from the trace formula on probe indices."""

    weight: int
    omega: np.ndarray
    probe_set: tuple[int, ...]
    condition_estimate: float
    certificate: float
    rhs_diag: float  # petersson_rhs_q(1,1,k), equals sum omega_f


@dataclass
class MomentReport:
    weight: int
    p: int
    m_direct: float
    m_residue: float
    e_value: float
    lhs: float
    identity_residual: float
    recovered_c: float
    cert_total: float

    def __post_init__(self):
        for v in (self.m_direct, self.m_residue, self.e_value, self.lhs,
                  self.identity_residual, self.cert_total):
            if not math.isfinite(v):
                raise ValueError("non-finite entry in moment report")


_OMEGA_CACHE: dict[tuple, OmegaWeights] = {}


def omega_weights(k: int, tol: float = 1e-8, rhs_tol: float = 1e-11) -> OmegaWeights:
    """Solve sum_f omega_f C_f(m_i) = rhs(m_i, 1) and cross-validate held-out pairs."""
    key = (k, tol)
    if key in _OMEGA_CACHE:
        return _OMEGA_CACHE[key]
    d = dim_cusp(k)
    if d == 0:
        raise ValueError("empty space")
    forms = eigenforms(k, max(72, 2 * d + 8))
    probes = _PROBES[:d]
    A = np.array([[f.c(m) for f in forms] for m in probes])
    rhs = [petersson_rhs_q(m, 1, k, tol=rhs_tol) for m in probes]
    bvec = np.array([r.value for r in rhs])
    cond = float(np.linalg.cond(A))
    if cond > 1e8:
        raise ValueError(f"omega solve ill-conditioned (cond {cond:.2e})")
    omega = np.linalg.solve(A, bvec)
    cert = cond * max(r.certificate for r in rhs) * math.sqrt(d)
    if np.any(omega <= 0):
        raise ValueError("trace formula inconsistency: nonpositive harmonic weight")
    for (m, n) in _HELD_OUT_PAIRS:
        lhs_val = float(sum(w * f.c(m) * f.c(n) for w, f in zip(omega, forms)))
        rv = petersson_rhs_q(m, n, k, tol=rhs_tol)
        if abs(lhs_val - rv.value) > tol * max(1.0, abs(rv.value)) + cert + rv.certificate:
            raise ValueError(
                f"trace formula inconsistency at held-out pair {(m, n)}: "
                f"|{lhs_val:.12g} - {rv.value:.12g}|")
    for w, f in zip(omega, forms):
        f.omega = float(w)
    out = OmegaWeights(weight=k, omega=omega, probe_set=tuple(probes),
                       condition_estimate=cond, certificate=cert,
                       rhs_diag=rhs[0].value)
    _OMEGA_CACHE[key] = out
    return out


def _validate_pair(g: NewformRecord, p: int, k: int):
    if k <= g.weight:
        raise ValueError("weight constraint k_j > l_j violated")
    if p != 1:
        if any(p % q == 0 for q in range(2, p) if q * q <= p):
            raise ValueError("p must be 1 or prime")
        if g.level % p == 0:
            raise ValueError("p must not divide the level of g")


def _d_sum(p_arith: VParams, level: int, np_: int, tol: float):
    """sum_{gcd(d,level)=1} (1/d) V(4 pi^2 N(p) d^2 / Q) with certificate."""
    vq = _vq(p_arith)
    total, d, cert = 0.0, 0, 0.0
    while True:
        d += 1
        if math.gcd(d, level) != 1:
            continue
        y = p_arith.afe_argument(np_ * d * d)
        env = float(vq.envelope(y)[0])
        if env / d < tol / 16 and d >= 4:
            # geometric-ish remainder: envelope slope >= 1 in d beyond here
            cert = 4.0 * env / d
            break
        total += vq.value(y) / d
        if d > 10 ** 6:
            raise UncertifiedError("d-sum failed to certify")
    return total, cert + vq.quad_tail * (1.0 + math.log(d))


def m_term_direct(g: NewformRecord, p: int, k: int,
                  g_scale: float = DEFAULT_G_SCALE, tol: float = 1e-9) -> CertValue:
    """M = 2 C_g(p)/sqrt(p) * sum_d a_d/d V(...), truncated by V-decay."""
    _validate_pair(g, p, k)
    vp = VParams((k,), (g.weight,), conductor=float(g.level), g_scale=g_scale)
    dsum, cert = _d_sum(vp, g.level, p, tol)
    pref = 2.0 * g.c(p) / math.sqrt(p)
    return CertValue(value=pref * dsum, certificate=abs(pref) * cert)


def m_term_residue(g: NewformRecord, p: int, k: int) -> float:
    """The contour-shift residue form of M (the O(1/k) remainder not added)."""
    _validate_pair(g, p, k)
    removed = tuple(sorted({q for q in range(2, g.level + 1)
                            if g.level % q == 0 and all(q % r for r in range(2, q))}))
    gm1, g0 = zeta_laurent_at_center(FIELD_Q, removed)
    l = g.weight
    arg = 4.0 * math.pi ** 2 * p / g.level
    res = g0 + 0.5 * gm1 * (digamma((k - l + 1) / 2.0) + digamma((k + l - 1) / 2.0)
                            - math.log(arg))
    return 2.0 * g.c(p) / math.sqrt(p) * res


@dataclass(frozen=True)
class ETruncation:
    """Truncation policy of the off-diagonal sum; None fields auto-size."""

    nu_cutoff: int | None = None
    c_cutoff: int | None = None
    tol: float = 1e-6


def e_term(g: NewformRecord, p: int, k: int, trunc: ETruncation = ETruncation(),
           g_scale: float = DEFAULT_G_SCALE) -> CertValue:
    """Off-diagonal term: 4 pi (-1)^{k/2} sum_nu sum_c S(nu,p;c)/c J_{k-1} * weights."""
    _validate_pair(g, p, k)
    tol = trunc.tol
    vp = VParams((k,), (g.weight,), conductor=float(g.level), g_scale=g_scale)
    vq = _vq(vp)
    M = trunc.nu_cutoff or effective_cutoff(vp, tol / 16.0)
    if g.length < M:
        raise ValueError(f"need C_g up to {M}")
    # W(nu) = sum_d a_d/d V(4 pi^2 nu d^2 / Q)
    nus = np.arange(1, M + 1, dtype=float)
    W = np.zeros(M)
    d = 0
    w_cert = 0.0
    while True:
        d += 1
        if math.gcd(d, g.level) != 1:
            continue
        ys = vp.afe_argument(nus * d * d)
        env1 = float(vq.envelope(ys[:1])[0])
        if env1 / d < tol * 1e-4 and d >= 4:
            w_cert = 4.0 * env1 / d
            break
        W += vq.values(ys) / d
    cg = np.asarray(g.cn[: M + 1])
    wt = cg[1:] * W / np.sqrt(nus)
    x_all = 4.0 * math.pi * np.sqrt(nus * p)
    x_max = float(x_all[-1])
    # c-range: certified by the J-series bound with |S(nu,p;c)| <= c
    cmax = trunc.c_cutoff or _e_cmax(k, x_max, np.abs(wt), tol / 4.0)
    c_tail = _e_c_tail(k, x_all, np.abs(wt), cmax)
    sign = -1.0 if (k // 2) % 2 else 1.0
    acc = 0.0
    for c in range(1, cmax + 1):
        row = kloosterman_row(p, c)
        jv = bessel_j_array(k - 1, x_all / c)
        s_of_nu = row[np.arange(1, M + 1) % c]
        acc += float(np.dot(wt * s_of_nu, jv)) / c
    value = 4.0 * math.pi * sign * acc
    # nu-tail: |C_g| <= d(nu); c-sum bounded by counting oscillatory c's
    nu_tail = _e_nu_tail(vp, vq, g, p, k, M)
    dsum_mass = float(np.sum(np.abs(cg[1:]) / np.sqrt(nus)))
    cert = 4.0 * math.pi * (c_tail + nu_tail
                            + dsum_mass * (w_cert + vq.quad_tail + vq.interp_err))
    if cert > 50 * tol:
        raise UncertifiedError(f"e_term certificate {cert:.2e} far above tol", cert)
    return CertValue(value=value, certificate=cert)


def _e_cmax(k: int, x_max: float, wt_abs: np.ndarray, tol: float) -> int:
    c = max(8, int(x_max / (k - 1)) + 1)
    total_wt = float(np.sum(wt_abs)) + 1e-300
    while True:
        # sum_{c > C} (x/2c)^{k-1}/(k-1)! <= (x/2C)^{k-1}/((k-1)! (k-2)) * C
        lg = (k - 1) * math.log(x_max / (2 * c)) - math.lgamma(k) + math.log(c / (k - 2))
        if lg < math.log(tol / total_wt) or lg < -700:
            return c
        c *= 2
        if c > 10 ** 7:
            raise UncertifiedError("e_term: c-range not certifiable")


def _e_c_tail(k: int, x_all: np.ndarray, wt_abs: np.ndarray, cmax: int) -> float:
    lg = (k - 1) * np.log(x_all / (2 * cmax)) - math.lgamma(k) + math.log(cmax / (k - 2))
    return float(np.sum(wt_abs * np.exp(np.minimum(lg, 700.0))))


def _e_nu_tail(vp: VParams, vq, g: NewformRecord, p: int, k: int, M: int) -> float:
    """sum_{nu > M} d(nu) W_env(nu)/sqrt(nu) * bound(sum_c |S|/c J(4 pi sqrt(nu p)/c))."""
    far = 8 * M
    nus = np.arange(M + 1, far + 1, dtype=float)
    env = vq.envelope(vp.afe_argument(nus)) * 2.0  # d-sum mass <= 2 * leading term
    dcnt = _series.divisor_count_sieve(far + 1)[M + 1:]
    x = 4.0 * math.pi * np.sqrt(nus * p)
    # c with x/c >= (k-1)/2 contribute at most 0.7 each; the rest are series-bounded
    c_split = np.maximum(1.0, 2.0 * x / (k - 1))
    csum_bound = 0.7 * (np.log(c_split) + 1.0) + 1.0 / (k - 2)
    terms = dcnt * env / np.sqrt(nus) * csum_bound
    slope = vq.envelope_slope(vp.afe_argument(float(far)))
    if slope < 3.0:
        return math.inf
    remainder = float(terms[-1]) * far / (slope - 2.0)
    return float(np.sum(terms)) + remainder


def lhs_moment(g: NewformRecord, p: int, k: int, g_scale: float = DEFAULT_G_SCALE,
               afe_tol: float = 1e-8) -> CertValue:
    """sum over eigenforms of L(f x g, 1/2) C_f(p) omega_f, with certificate."""
    _validate_pair(g, p, k)
    if dim_cusp(k) == 0:
        return CertValue(value=0.0, certificate=0.0)
    ow = omega_weights(k)
    vp = VParams((k,), (g.weight,), conductor=float(g.level), g_scale=g_scale)
    cutoff = effective_cutoff(vp, afe_tol / 2.0)
    forms = eigenforms(k, cutoff)
    if g.length < cutoff:
        raise ValueError(f"need C_g up to {cutoff}")
    total, cert = 0.0, 0.0
    lsum = 0.0
    for w, f in zip(ow.omega, forms):
        cv = central_value(f, g, g_scale=g_scale, tol=afe_tol, cutoff=cutoff)
        if cv.value < -1e-6:
            import warnings
            warnings.warn(f"negative central value L = {cv.value:.3e} at k={k} "
                          f"(index {f.index}); expected nonnegative for self-dual pairs")
        total += w * f.c(p) * cv.value
        cert += abs(w * f.c(p)) * cv.certificate
        lsum += abs(cv.value * f.c(p))
    cert += ow.certificate * lsum / max(ow.rhs_diag, 1e-9)
    cert += cusp_space(k).float_rel * 4.0 * sum(abs(w) for w in ow.omega)
    return CertValue(value=total, certificate=cert)


def recover_coefficient(g: NewformRecord, p: int, k: int,
                        g_scale: float = DEFAULT_G_SCALE,
                        lhs: CertValue | None = None,
                        e_val: CertValue | None = None) -> float:
    """C_g(p) back out of the moment identity: sqrt(p)(LHS - E)/(2 sum_d a_d/d V)."""
    _validate_pair(g, p, k)
    vp = VParams((k,), (g.weight,), conductor=float(g.level), g_scale=g_scale)
    dsum, _ = _d_sum(vp, g.level, p, 1e-10)
    denom = 2.0 * dsum / math.sqrt(p)
    if abs(denom) < 1e-8:
        raise ValueError("degenerate recovery")
    if lhs is None:
        lhs = lhs_moment(g, p, k, g_scale=g_scale)
    if e_val is None:
        e_val = e_term(g, p, k, g_scale=g_scale)
    return (lhs.value - e_val.value) / denom


def moment_report(g: NewformRecord, p: int, k: int,
                  g_scale: float = DEFAULT_G_SCALE,
                  afe_tol: float = 1e-8,
                  e_trunc: ETruncation = ETruncation()) -> MomentReport:
    md = m_term_direct(g, p, k, g_scale=g_scale)
    mr = m_term_residue(g, p, k)
    ev = e_term(g, p, k, trunc=e_trunc, g_scale=g_scale)
    lh = lhs_moment(g, p, k, g_scale=g_scale, afe_tol=afe_tol)
    resid = lh.value - md.value - ev.value
    cert = lh.certificate + md.certificate + ev.certificate
    rec = recover_coefficient(g, p, k, g_scale=g_scale, lhs=lh, e_val=ev)
    return MomentReport(weight=k, p=p, m_direct=md.value, m_residue=mr,
                        e_value=ev.value, lhs=lh.value,
                        identity_residual=resid, recovered_c=rec,
                        cert_total=cert)


@dataclass
class ScanResult:
    reports: list[MomentReport]
    slope: float
    intercept: float
    slope_theoretical: float
    max_abs_residual_from_fit: float

    def fitted(self, k: float) -> float:
        return self.slope * math.log(k) + self.intercept


def asymptotic_scan(g: NewformRecord, p: int, k_list,
                    g_scale: float = DEFAULT_G_SCALE,
                    afe_tol: float = 1e-7,
                    e_tol: float = 1e-5) -> ScanResult:
    """Per-weight MomentReports plus the least-squares log-slope of the LHS."""
    reports = []
    for k in k_list:
        reports.append(moment_report(g, p, k, g_scale=g_scale, afe_tol=afe_tol,
                                     e_trunc=ETruncation(tol=e_tol)))
    lk = np.array([math.log(r.weight) for r in reports])
    lhs = np.array([r.lhs for r in reports])
    A = np.vstack([lk, np.ones_like(lk)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, lhs, rcond=None)
    removed = tuple(sorted({q for q in range(2, g.level + 1)
                            if g.level % q == 0 and all(q % r for r in range(2, q))}))
    gm1, _ = zeta_laurent_at_center(FIELD_Q, removed)
    a_theory = 2.0 * g.c(p) / math.sqrt(p) * gm1
    resid = float(np.max(np.abs(lhs - (slope * lk + intercept))))
    return ScanResult(reports=reports, slope=float(slope), intercept=float(intercept),
                      slope_theoretical=a_theory, max_abs_residual_from_fit=resid)


CSV_HEADER = "k,p,M_direct,M_residue,E,LHS,residual,recovered_C,cert_total"


def report_csv_row(r: MomentReport) -> str:
    vals = (r.m_direct, r.m_residue, r.e_value, r.lhs,
            r.identity_residual, r.recovered_c, r.cert_total)
    return f"{r.weight},{r.p}," + ",".join(f"{v:.15g}" for v in vals)


def scan_to_csv(result: ScanResult) -> str:
    lines = [CSV_HEADER]
    lines += [report_csv_row(r) for r in result.reports]
    return "\n".join(lines) + "\n"
