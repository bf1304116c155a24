"""Level-1 elliptic modular forms: q-expansions, Hecke eigenforms, evaluation.

The degree-1 specialization of the Hilbert machinery: cusp forms for
SL_2(Z), built from Delta, E4, E6.  Exact big-integer arithmetic is used for
every structural step (echelon basis, Hecke matrices, characteristic
polynomials) and for a configurable prefix of each q-expansion; beyond the
prefix, normalized coefficients C_f(n) = a_f(n) / n^{(k-1)/2} are extended
in float64 by convolving the most-cuspidal monomial Delta^d E4^a E6^b of the
space and spanning the rest with its T_2 Hecke orbit.  That construction
keeps the float convolutions away from the Eisenstein-versus-cusp
cancellation that floats cannot survive; the overlap with the exact prefix
is verified on every build.

Also hosts the plain-text newform coefficient file format used to feed the
fixed form g.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp
import numpy as np

from . import series

__all__ = [
    "QExpansion",
    "Eigenform",
    "NewformRecord",
    "dim_cusp",
    "miller_basis",
    "hecke_apply",
    "eigenforms",
    "cusp_space",
    "evaluate",
    "load_newform",
    "write_newform",
    "newform_from_eigenform",
    "delta_qexp",
    "eisenstein_qexp",
]


def dim_cusp(k: int) -> int:
    """dim S_k(SL_2(Z)) for even k >= 4."""
    if k % 2 or k < 4:
        return 0
    dim_m = k // 12 + (0 if k % 12 == 2 else 1)
    return dim_m - 1


@dataclass
class QExpansion:
    """Exact integer q-expansion a(0..M) of a weight-k form (a(0)=0 if cuspidal)."""

    weight: int
    an: list[int]

    def __post_init__(self):
        if self.weight % 2:
            raise ValueError("odd weight")

    @property
    def length(self) -> int:
        return len(self.an) - 1

    def a(self, n: int) -> int:
        return self.an[n]

    def is_cusp(self) -> bool:
        return self.an[0] == 0


@dataclass
class Eigenform:
    """Normalized Hecke eigenform of level 1.

    ``cn`` holds C_f(n) = a_f(n)/n^{(k-1)/2} as float64, index-aligned with
    cn[0] = 0.  ``an_exact`` is the high-precision prefix (mpmath values).
    ``omega`` is the harmonic weight, filled by the moment solver.
    """

    weight: int
    index: int
    cn: np.ndarray
    an_exact: list
    lam2: float
    omega: float | None = None

    @property
    def length(self) -> int:
        return len(self.cn) - 1

    def c(self, n: int) -> float:
        return float(self.cn[n])

    def a(self, n: int):
        if n < len(self.an_exact):
            return self.an_exact[n]
        return self.cn[n] * n ** ((self.weight - 1) / 2.0)


@dataclass
class NewformRecord:
    """The fixed form g: weight, level, and already-normalized C_g(m)."""

    weight: int
    level: int
    cn: np.ndarray

    def __post_init__(self):
        if self.weight % 2:
            raise ValueError("odd weight")
        if abs(self.cn[1] - 1.0) > 1e-12:
            raise ValueError("not normalized")

    @property
    def length(self) -> int:
        return len(self.cn) - 1

    def c(self, n: int) -> float:
        return float(self.cn[n])


# -- generators ----------------------------------------------------------------

def delta_qexp(length: int) -> QExpansion:
    return QExpansion(12, series.delta_exact(length + 1))


def eisenstein_qexp(weight: int, length: int) -> QExpansion:
    return QExpansion(weight, series.eisenstein_exact(weight, length + 1))


_EXACT_POW_CACHE: dict[tuple, list[int]] = {}


def _delta_power_exact(i: int, n_out: int) -> list[int]:
    key = ("delta", i, n_out)
    if key not in _EXACT_POW_CACHE:
        if i == 1:
            _EXACT_POW_CACHE[key] = series.delta_exact(n_out)
        else:
            _EXACT_POW_CACHE[key] = series.mul_exact(
                _delta_power_exact(i - 1, n_out), series.delta_exact(n_out), n_out)
    return _EXACT_POW_CACHE[key]


def _monomial_exact(i: int, alpha: int, beta: int, length: int) -> list[int]:
    """Delta^i * E4^alpha * E6^beta, exact, with n_out = length+1 coefficients."""
    n_out = length + 1
    cur = _delta_power_exact(i, n_out)
    for _ in range(alpha):
        cur = series.mul_exact(cur, series.eisenstein_exact(4, n_out), n_out)
    for _ in range(beta):
        cur = series.mul_exact(cur, series.eisenstein_exact(6, n_out), n_out)
    return cur


def _monomial_exponents(k: int, i: int) -> tuple[int, int]:
    w = k - 12 * i
    beta = 1 if w % 4 else 0
    alpha = (w - 6 * beta) // 4
    if alpha < 0 or 4 * alpha + 6 * beta != w:
        raise ValueError(f"no E4^a E6^b of weight {w}")
    return alpha, beta


def miller_basis(k: int, length: int) -> list[QExpansion]:
    """Echelonized cusp basis: a(f_i, j) = delta_ij for i, j <= dim S_k.  Exact."""
    d = dim_cusp(k)
    if k % 2 or d < 1:
        raise ValueError("empty space")
    length = max(length, d)
    gs = []
    for i in range(1, d + 1):
        alpha, beta = _monomial_exponents(k, i)
        gs.append(_monomial_exact(i, alpha, beta, length))
    # gs[i-1] = q^i + O(q^{i+1}); reduce upwards
    fs = [None] * d
    for i in range(d, 0, -1):
        cur = list(gs[i - 1])
        for j in range(i + 1, d + 1):
            coeff = cur[j]
            if coeff:
                fj = fs[j - 1]
                cur = [c - coeff * x for c, x in zip(cur, fj)]
        fs[i - 1] = cur
    return [QExpansion(k, f) for f in fs]


def hecke_apply(m: int, f: QExpansion, out_len: int | None = None) -> QExpansion:
    """T_m f with a(T_m f)(n) = sum_{e | gcd(m,n)} e^{k-1} a(mn/e^2).  Exact."""
    if m < 1:
        raise ValueError("m must be positive")
    if out_len is None:
        out_len = f.length // m
    if f.length < m * out_len:
        raise ValueError("length underflow")
    k = f.weight
    out = [0] * (out_len + 1)
    for n in range(1, out_len + 1):
        acc = 0
        g = math.gcd(m, n)
        for e in range(1, g + 1):
            if g % e == 0:
                acc += e ** (k - 1) * f.an[m * n // (e * e)]
        out[n] = acc
    return QExpansion(k, out)


# -- eigenform machinery --------------------------------------------------------

def _char_poly_exact(A: list[list[int]]) -> list[Fraction]:
    """Characteristic polynomial det(xI - A) by Faddeev-LeVerrier (exact)."""
    d = len(A)
    coeffs = [Fraction(1)]
    M = [[Fraction(0)] * d for _ in range(d)]
    I = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    for m in range(1, d + 1):
        # M_m = A*M_{m-1} + c_{m-1} I
        AM = [[sum(Fraction(A[i][l]) * M[l][j] for l in range(d)) + coeffs[-1] * I[i][j]
               for j in range(d)] for i in range(d)]
        tr = sum(Fraction(A[i][l]) * AM[l][i] for i in range(d) for l in range(d))
        coeffs.append(-tr / m)
        M = AM
    return coeffs  # x^d + c1 x^{d-1} + ... + cd


def _poly_eval(coeffs, x):
    out = coeffs[0]
    for c in coeffs[1:]:
        out = out * x + c
    return out


def _sturm_chain(coeffs: list[Fraction]):
    p0 = coeffs
    p1 = [c * (len(coeffs) - 1 - i) for i, c in enumerate(coeffs[:-1])]
    chain = [p0, p1]
    while len(chain[-1]) > 1:
        _, rem = _poly_divmod(chain[-2], chain[-1])
        if all(c == 0 for c in rem):
            break
        chain.append([-c for c in rem])
    return chain


def _poly_divmod(num, den):
    num = list(num)
    out = []
    dlen = len(den)
    while len(num) >= dlen:
        q = num[0] / den[0]
        out.append(q)
        num = [a - q * b for a, b in zip(num[1:], den[1:])] + num[dlen:]
    while num and num[0] == 0:
        num.pop(0)
    return out, num if num else [Fraction(0)]


def _sign_changes(chain, x: Fraction) -> int:
    signs = []
    for p in chain:
        v = _poly_eval(p, x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _real_roots_exact(coeffs: list[Fraction], prec_dps: int = 60) -> list[mp.mpf]:
    """All real roots of a squarefree integer-coefficient polynomial, refined in mpmath."""
    d = len(coeffs) - 1
    bound = Fraction(1) + max(abs(c) for c in coeffs[1:]) / abs(coeffs[0])
    chain = _sturm_chain(coeffs)

    def count(a, b):
        return _sign_changes(chain, a) - _sign_changes(chain, b)

    intervals = [(-bound, bound)]
    isolated = []
    while intervals:
        a, b = intervals.pop()
        n = count(a, b)
        if n == 0:
            continue
        if n == 1:
            isolated.append((a, b))
            continue
        mid = (a + b) / 2
        if _poly_eval(coeffs, mid) == 0:
            isolated.append((mid, mid))
            mid_eps = (b - a) / (4 * (d + 1))
            intervals.append((a, mid - mid_eps))
            intervals.append((mid + mid_eps, b))
        else:
            intervals.append((a, mid))
            intervals.append((mid, b))
    roots = []
    with mp.workdps(prec_dps + 20):
        fc = [mp.mpf(c.numerator) / c.denominator for c in coeffs]
        for a, b in sorted(isolated):
            if a == b:
                roots.append(mp.mpf(a.numerator) / a.denominator)
                continue
            lo, hi = a, b
            for _ in range(80):  # exact bisection to shrink safely
                mid = (lo + hi) / 2
                v = _poly_eval(coeffs, mid)
                if v == 0:
                    lo = hi = mid
                    break
                if (_poly_eval(coeffs, lo) > 0) == (v > 0):
                    lo = mid
                else:
                    hi = mid
            x = mp.mpf(lo.numerator) / lo.denominator if lo == hi else \
                (mp.mpf(lo.numerator) / lo.denominator + mp.mpf(hi.numerator) / hi.denominator) / 2
            for _ in range(8):  # Newton polish
                pv = _poly_eval(fc, x)
                dv = _poly_eval([c * (d - i) for i, c in enumerate(fc[:-1])], x)
                x = x - pv / dv
            roots.append(x)
    return roots


def _null_vector(A: list[list[int]], lam: mp.mpf, dps: int) -> list[mp.mpf]:
    """Nullspace vector of (A - lam I), via elimination with full pivoting."""
    d = len(A)
    with mp.workdps(dps):
        M = [[mp.mpf(A[i][j]) - (lam if i == j else 0) for j in range(d)] for i in range(d)]
        col_order = list(range(d))
        for r in range(d - 1):
            piv_r, piv_c, best = r, r, mp.mpf(-1)
            for i in range(r, d):
                for j in range(r, d):
                    if abs(M[i][j]) > best:
                        best, piv_r, piv_c = abs(M[i][j]), i, j
            M[r], M[piv_r] = M[piv_r], M[r]
            if piv_c != r:
                for row in M:
                    row[r], row[piv_c] = row[piv_c], row[r]
                col_order[r], col_order[piv_c] = col_order[piv_c], col_order[r]
            for i in range(r + 1, d):
                fac = M[i][r] / M[r][r]
                for j in range(r, d):
                    M[i][j] -= fac * M[r][j]
        x = [mp.mpf(0)] * d
        x[d - 1] = mp.mpf(1)
        for r in range(d - 2, -1, -1):
            s = sum(M[r][j] * x[j] for j in range(r + 1, d))
            x[r] = -s / M[r][r]
        out = [mp.mpf(0)] * d
        for pos, orig in enumerate(col_order):
            out[orig] = x[pos]
        return out


class CuspSpace:
    """All derived data for S_k: exact basis prefix, eigen data, float extensions."""

    def __init__(self, k: int):
        if k % 2:
            raise ValueError("empty space")
        self.k = k
        self.dim = dim_cusp(k)
        if self.dim < 1:
            raise ValueError("empty space")
        self._basis: list[QExpansion] | None = None
        self._eigen: list[Eigenform] | None = None
        self._hecke_used: int | None = None
        self.float_rel: float = 0.0  # achieved float-vs-exact overlap accuracy

    # -- exact layer --
    def basis(self, length: int) -> list[QExpansion]:
        if self._basis is None or self._basis[0].length < length:
            self._basis = miller_basis(self.k, max(length, 2 * self.dim + 8))
        return self._basis

    def hecke_matrix(self, m: int) -> list[list[int]]:
        d = self.dim
        basis = self.basis(m * d + 1)
        return [[hecke_apply(m, basis[i], d).an[j + 1] for i in range(d)]
                for j in range(d)]

    def _eigen_data(self):
        """Eigenvalues/vectors of the first separating Hecke operator."""
        d = self.dim
        for m in (2, 3, 5):
            A = self.hecke_matrix(m)
            coeffs = _char_poly_exact(A)
            roots = _real_roots_exact(coeffs)
            scale = max(abs(r) for r in roots) + 1
            if len(roots) == d and all(
                abs(roots[i] - roots[j]) > 1e-6 * scale
                for i in range(d) for j in range(i + 1, d)
            ):
                self._hecke_used = m
                return A, roots
        raise ValueError("cannot separate eigenforms")

    def eigenforms(self, length: int) -> list[Eigenform]:
        if self._eigen is None:
            self._build_eigen()
        if self._eigen[0].length < length:
            self._extend_floats(length)
        return self._eigen

    def _build_eigen(self):
        d = self.dim
        k = self.k
        exact_len = max(_EXACT_PREFIX, 2 * d + 8)
        basis = self.basis(exact_len)
        A, roots = self._eigen_data()
        bits = max(x.bit_length() for f in basis for x in map(abs, f.an[: exact_len + 1])) + 1
        dps = max(60, int(bits * 0.302) + 40)
        forms = []
        with mp.workdps(dps):
            for idx, lam in enumerate(sorted(roots, reverse=True)):
                v = _null_vector(A, lam, dps)
                v = [vi / v[0] for vi in v]  # echelon => a(1) = v[0]
                an = [mp.mpf(0)] * (exact_len + 1)
                for n in range(1, exact_len + 1):
                    an[n] = sum(v[i] * basis[i].an[n] for i in range(d))
                cn = np.zeros(exact_len + 1)
                for n in range(1, exact_len + 1):
                    cn[n] = float(an[n] / mp.mpf(n) ** (mp.mpf(k - 1) / 2))
                forms.append(Eigenform(weight=k, index=idx, cn=cn,
                                       an_exact=an, lam2=float(an[2])))
        self._eigen = forms

    # -- float layer --
    def _extend_floats(self, length: int):
        d, k = self.dim, self.k
        _assert_span_rank(k, d)
        orbit = _hecke_orbit_normalized(k, d, length)
        # Coordinates in the orbit span, least-squares over a probe window
        # where every orbit vector has O(1)-scaled normalized coefficients.
        # (Small indices are useless: the most-cuspidal monomial vanishes to
        # order d, so its normalized values there are astronomically tiny.)
        pref = len(self._eigen[0].an_exact) - 1
        probe = list(range(max(8 * d, pref // 4), pref // 2 + 1))
        with mp.workdps(90):
            orbit_exact = _hecke_orbit_exact_prefix(k, d, probe[-1] + 1)
            scale = [max(abs(orbit_exact[j][n]) for n in probe) for j in range(d)]
            A = [[orbit_exact[j][n] / scale[j] for j in range(d)] for n in probe]
            ata = mp.matrix(d, d)
            for i in range(d):
                for j in range(d):
                    ata[i, j] = sum(A[r][i] * A[r][j] for r in range(len(probe)))
            for f in self._eigen:
                half = mp.mpf(k - 1) / 2
                target = [f.an_exact[n] / mp.mpf(n) ** half for n in probe]
                atb = mp.matrix([sum(A[r][i] * target[r] for r in range(len(probe)))
                                 for i in range(d)])
                gam = mp.lu_solve(ata, atb)
                cn = np.zeros(length + 1)
                for j in range(d):
                    cn += float(gam[j] / scale[j]) * orbit[j][: length + 1]
                # splice the exact prefix and validate the overlap
                ov = slice(max(2, pref // 2), pref + 1)
                denom = np.abs(f.cn[ov]) + 1e-6
                rel = np.max(np.abs(cn[ov] - f.cn[ov]) / denom)
                if rel > 5e-6:
                    raise ArithmeticError(
                        f"float extension disagrees with exact prefix (rel {rel:.2e})")
                self.float_rel = max(self.float_rel, rel)
                cn[: pref + 1] = f.cn[: pref + 1]
                f.cn = cn


def _tp_raw_exact(arr: list[int], weight: int, p: int, out_len: int) -> list[int]:
    """Raw T_p image of an exact expansion: a(pn) + p^{w-1} a(n/p)."""
    out = [0] * (out_len + 1)
    pk = p ** (weight - 1)
    for n in range(1, out_len + 1):
        v = arr[p * n]
        if n % p == 0:
            v += pk * arr[n // p]
        out[n] = v
    return out


# Hecke words whose translates of the most-cuspidal monomial span S_k; the
# exact independence of each set is asserted at space construction.  Words
# multiply the needed base length by prod(word), so this caps the length
# overhead at 6x even for dim 5 (the plain T_2 orbit would need 16x).
_SPAN_WORDS = {
    1: [()],
    2: [(), (2,)],
    3: [(), (2,), (3,)],
    4: [(), (2,), (3,), (2, 2)],
    5: [(), (2,), (3,), (2, 2), (2, 3)],
}


def _span_length_factor(d: int) -> int:
    return max(math.prod(w) if w else 1 for w in _SPAN_WORDS[d])


_SPAN_RANK_OK: set = set()


def _assert_span_rank(k: int, d: int):
    """Exact (Fraction) full-rank check of the Hecke-word span, once per space."""
    if k in _SPAN_RANK_OK:
        return
    L = 3 * d + 8
    vecs = _span_raw_exact(k, d, L)
    rows = [[Fraction(v[n]) for v in vecs] for n in range(1, L + 1)]
    rank, r = 0, 0
    for c in range(d):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(r + 1, len(rows)):
            f = rows[i][c] / rows[r][c]
            rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
        rank += 1
    if rank != d:
        raise ArithmeticError(f"Hecke-word span of S_{k} is rank-deficient ({rank} < {d})")
    _SPAN_RANK_OK.add(k)


def _span_raw_exact(k: int, d: int, length: int) -> list[list[int]]:
    alpha, beta = _monomial_exponents(k, d)
    out = []
    for word in _SPAN_WORDS[d]:
        need = length * (math.prod(word) if word else 1)
        cur = _monomial_exact(d, alpha, beta, need)
        run = need
        for p in reversed(word):
            run //= p
            cur = _tp_raw_exact(cur, k, p, run)
        out.append(list(cur[: length + 1]))
    return out


def _hecke_orbit_exact_prefix(k: int, d: int, length: int) -> list[list]:
    """Normalized exact prefixes of the spanning set, for the coordinate solve."""
    raws = _span_raw_exact(k, d, length)
    vecs = []
    with mp.workdps(80):
        half = mp.mpf(k - 1) / 2
        for raw in raws:
            vecs.append([mp.mpf(0)] + [mp.mpf(raw[n]) / mp.mpf(n) ** half
                                       for n in range(1, length + 1)])
    return vecs


def _tp_raw_float(arr: np.ndarray, weight: int, p: int, out_len: int) -> np.ndarray:
    out = np.zeros(out_len + 1)
    out[1:] = arr[p: p * out_len + 1: p]
    out[p:: p] += float(p) ** (weight - 1) * arr[1: out_len // p + 1]
    return out


def _normalize_raw(raw: np.ndarray, k: int, exact_head: list[int]) -> np.ndarray:
    """raw a(n) -> C(n) = a(n) n^{-(k-1)/2}, exact head spliced in."""
    n = np.arange(len(raw), dtype=float)
    n[0] = 1.0
    out = raw * np.exp(-0.5 * (k - 1) * np.log(n))
    out[0] = 0.0
    head = min(len(exact_head) - 1, len(raw) - 1)
    with mp.workdps(60):
        half = mp.mpf(k - 1) / 2
        for m in range(1, head + 1):
            out[m] = float(mp.mpf(exact_head[m]) / mp.mpf(m) ** half)
    return out


def _hecke_orbit_normalized(k: int, d: int, length: int) -> list[np.ndarray]:
    """Normalized float arrays of the Hecke-translate spanning set of S_k.

    Every vector is a T-word applied to the most-cuspidal monomial, read off
    the monomial's float expansion by index gathers, so the only convolution
    work is the monomial itself.  Exact heads are spliced in throughout: the
    float convolution noise is absolute, so the structurally tiny early
    coefficients would otherwise be noise and every downstream read (the
    T-words read indices p*n) would amplify it.
    """
    alpha, beta = _monomial_exponents(k, d)
    head = _EXACT_PREFIX * 2
    heads = _span_raw_exact(k, d, min(head, length))
    need = (length + 1) * _span_length_factor(d)
    base = _cuspidal_monomial_float(k, d, alpha, beta, need)
    out = []
    for word, hd in zip(_SPAN_WORDS[d], heads):
        cur = base
        run = (len(base) - 1)
        for p in reversed(word):
            run //= p
            cur = _tp_raw_float(cur, k, p, run)
        out.append(_normalize_raw(np.array(cur[: length + 1]), k, hd))
    return out


_FLOAT_CACHE: dict[str, tuple[int, np.ndarray]] = {}


def clear_float_cache(keep_tau: bool = True):
    """Drop the long float series (the acceptance driver calls this between pairs)."""
    for key in list(_FLOAT_CACHE):
        if keep_tau and key == "tau":
            continue
        del _FLOAT_CACHE[key]
    series.sigma_sieve.cache_clear()


def _float_cached(name: str, length: int, builder) -> np.ndarray:
    hit = _FLOAT_CACHE.get(name)
    if hit is not None and hit[0] >= length:
        return hit[1][:length]
    arr = builder(length)
    _FLOAT_CACHE[name] = (length, arr)
    return arr


_HEAD = 1024  # exact-head length spliced into every float series stage


def _splice_head(arr: np.ndarray, exact: list[int]):
    h = min(len(exact), len(arr))
    arr[:h] = [float(x) for x in exact[:h]]
    return arr


def _tau_float(length: int) -> np.ndarray:
    def build(n):
        e3 = np.zeros(n)
        j = 0
        while j * (j + 1) // 2 < n:
            e3[j * (j + 1) // 2] = (-1) ** j * (2 * j + 1)
            j += 1
        e6 = series.mul_float(e3, e3, n)
        e12 = series.mul_float(e6, e6, n)
        e24 = series.mul_float(e12, e12, n)
        tau = np.zeros(n)
        tau[1:] = e24[: n - 1]
        return _splice_head(tau, series.delta_exact(min(_HEAD, n)))
    return _float_cached("tau", length, build)


_EXACT_FULL_CUTOFF = 60000


def _cuspidal_monomial_float(k: int, i: int, alpha: int, beta: int, length: int) -> np.ndarray:
    """Delta^i E4^alpha E6^beta as raw float coefficients.

    Pure Delta powers are float-safe at any length (cusp-by-cusp products
    have no Eisenstein-versus-cusp cancellation); the exact head spliced
    into every stage keeps the structurally tiny early coefficients clean.
    A product with an Eisenstein factor cancels ~n * (weight-dependent
    scale-ratio) digits, which float64 cannot survive at depth, so those
    monomials are built exactly (affordable at the lengths where they are
    ever requested) and converted.
    """
    if (alpha or beta) and length > _EXACT_FULL_CUTOFF:
        raise ArithmeticError(
            "Eisenstein-bearing monomial requested beyond the exact-arithmetic cutoff")

    def build(n):
        if alpha or beta:
            return np.array([float(x) for x in _monomial_exact(i, alpha, beta, n - 1)])
        h = min(_HEAD, n)
        tau = _tau_float(n)
        cur = tau.copy()
        for j in range(2, i + 1):
            cur = series.mul_float(cur, tau, n)
            _splice_head(cur, _delta_power_exact(j, h))
        return cur
    return _float_cached(f"mono:{i},{alpha},{beta}", length, build)


_EXACT_PREFIX = 512
_SPACES: dict[int, CuspSpace] = {}


def cusp_space(k: int) -> CuspSpace:
    if k not in _SPACES:
        _SPACES[k] = CuspSpace(k)
    return _SPACES[k]


def eigenforms(k: int, length: int) -> list[Eigenform]:
    """The normalized Hecke eigenforms of S_k with coefficients to ``length``."""
    return cusp_space(k).eigenforms(length)


# -- evaluation ------------------------------------------------------------------

def evaluate(f, z: complex, tol: float = 1e-10):
    """(value, certified truncation bound) of f at z in the upper half-plane.

    The tail bound uses |a(n)| <= C0 * n^{(k+1)/2}, which is Deligne's bound
    (with d(n) <= n) for normalized eigenforms and for Delta; for other
    integer expansions C0 is calibrated on the computed coefficients and the
    bound is heuristic to that extent.
    """
    y = z.imag
    if y <= 0:
        raise ValueError("need Im z > 0")
    k = f.weight
    alpha = (k + 1) / 2.0
    if isinstance(f, Eigenform):
        M = f.length
        coeff = lambda n: f.cn[n] * n ** ((k - 1) / 2.0)
        c0 = 1.0
    elif isinstance(f, QExpansion):
        M = f.length
        coeff = lambda n: float(f.an[n])
        c0 = max(1.0, max(abs(float(f.an[n])) / n ** alpha for n in range(1, M + 1)))
    else:
        raise TypeError("evaluate expects QExpansion or Eigenform")
    q = np.exp(2j * math.pi * z)
    r = abs(q)
    ratio = r * (1.0 + 1.0 / M) ** alpha
    if ratio >= 1.0:
        raise ValueError("truncation not certified")
    tail = c0 * (M + 1) ** alpha * r ** (M + 1) / (1.0 - ratio)
    if tail > tol:
        raise ValueError(f"truncation not certified (bound {tail:.3e} > tol {tol:.1e})")
    val = 0.0 + 0.0j
    qn = q
    for n in range(1, M + 1):
        val += coeff(n) * qn
        qn *= q
    return val, tail


# -- newform records ---------------------------------------------------------------

def load_newform(path) -> NewformRecord:
    """Parse the plain-text coefficient file (weight/level/count header, then m C(m))."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    try:
        weight = int(lines[0].split()[1])
        level = int(lines[1].split()[1])
        count = int(lines[2].split()[1])
    except (IndexError, ValueError) as exc:
        raise ValueError(f"newform parse failure: {exc}") from exc
    cn = np.zeros(count + 1)
    for ln in lines[3: 3 + count]:
        parts = ln.split()
        m = int(parts[0])
        cn[m] = float(parts[1])
    if abs(cn[1] - 1.0) > 1e-12:
        raise ValueError("not normalized")
    rec = NewformRecord(weight=weight, level=level, cn=cn)
    _ramanujan_check(rec)
    return rec


def _ramanujan_check(rec: NewformRecord):
    limit = min(rec.length, 2000)
    for p in _primes_below(limit + 1):
        if rec.level % p == 0:
            continue
        if abs(rec.cn[p]) > 2.0 + 1e-9:
            warnings.warn(f"Ramanujan violation at p={p}: |C({p})| = {abs(rec.cn[p]):.6f}")
            break


def _primes_below(n: int) -> list[int]:
    sieve = bytearray([1]) * n
    out = []
    for p in range(2, n):
        if sieve[p]:
            out.append(p)
            sieve[p * p:: p] = bytearray(len(sieve[p * p:: p]))
    return out


def write_newform(rec: NewformRecord, path):
    with open(path, "w") as fh:
        fh.write(f"weight {rec.weight}\n")
        fh.write(f"level {rec.level}\n")
        fh.write(f"count {rec.length}\n")
        for m in range(1, rec.length + 1):
            fh.write(f"{m} {rec.cn[m]:.17g}\n")


def newform_from_eigenform(f: Eigenform, level: int = 1) -> NewformRecord:
    return NewformRecord(weight=f.weight, level=level, cn=f.cn.copy())
