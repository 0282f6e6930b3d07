"""Special functions: log-gamma helpers, Pochhammer symbols, terminating 2F1
and the two Meijer G-functions needed for products of Wishart matrices.

The Meijer G-functions are evaluated by integrating their Mellin-Barnes
representation along the vertical line ``Re(s) = -1/2``::

    G(x) = 1/(2 pi) * integral over t of  Phi(-1/2 + i t) * x**(-1/2 + i t)

with ``Phi`` a ratio of gamma functions, assembled from complex log-gamma so
that nothing overflows.  With integer parameters the residue series has
coinciding poles (logarithmic case); the contour integral does not care.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import special

from .errors import ConvergenceError, DomainError

CONTOUR_REAL_PART = -0.5

# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15), non-negative half.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK15_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK15_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss-7 weights laid out on the 15 Kronrod nodes (zero on Kronrod-only nodes).
G7_WEIGHTS = np.zeros(15)
G7_WEIGHTS[[1, 3, 5]] = _WG[:3]
G7_WEIGHTS[7] = _WG[3]
G7_WEIGHTS[[13, 11, 9]] = _WG[:3]


# ---------------------------------------------------------------------------
# gamma-function helpers


def log_gamma(x):
    """Natural log of the gamma function for positive real ``x``.

    Accepts scalars or arrays; raises :class:`DomainError` for ``x <= 0``.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"log_gamma needs x > 0, got {x!r}")
    out = special.gammaln(arr)
    return float(out) if out.ndim == 0 else out


def signed_log_gamma(x: float) -> tuple[float, float]:
    """Return ``(sign, log|Gamma(x)|)`` for any real non-pole ``x``.

    Negative arguments go through the reflection formula
    ``Gamma(x) = pi / (sin(pi x) Gamma(1 - x))`` with the sign fixed by the
    parity of ``ceil(-x)``, so half-integers such as ``-3/2`` are exact in sign.
    """
    x = float(x)
    if x > 0:
        return 1.0, float(special.gammaln(x))
    if x == math.floor(x):
        raise DomainError(f"gamma has a pole at {x}")
    sign = -1.0 if math.ceil(-x) % 2 else 1.0
    log_abs = math.log(math.pi) - math.log(abs(math.sin(math.pi * x))) - float(special.gammaln(1.0 - x))
    return sign, log_abs


def gamma_ratio(numer: Sequence[float], denom: Sequence[float]) -> float:
    """Product of ``Gamma(numer_i)`` over product of ``Gamma(denom_i)``, signed, via logs."""
    sign, log_val = 1.0, 0.0
    for x in numer:
        s, l = signed_log_gamma(x)
        sign *= s
        log_val += l
    for x in denom:
        s, l = signed_log_gamma(x)
        sign *= s
        log_val -= l
    return sign * math.exp(log_val)


def pochhammer(alpha: float, beta: float) -> float:
    """Pochhammer symbol ``(alpha)_beta = Gamma(alpha + beta) / Gamma(alpha)``.

    Computed as ``exp(lgamma(alpha + beta) - lgamma(alpha))``; both gamma
    arguments must be positive.
    """
    if not (alpha > 0 and alpha + beta > 0):
        raise DomainError(f"pochhammer needs alpha > 0 and alpha + beta > 0, got ({alpha}, {beta})")
    if beta == 0:
        return 1.0
    return math.exp(special.gammaln(alpha + beta) - special.gammaln(alpha))


def log_pochhammer(alpha: float, beta: float) -> float:
    if not (alpha > 0 and alpha + beta > 0):
        raise DomainError(f"log_pochhammer needs alpha > 0 and alpha + beta > 0, got ({alpha}, {beta})")
    return float(special.gammaln(alpha + beta) - special.gammaln(alpha))


def binom_half(i: int) -> float:
    """Generalized binomial coefficient C(1/2, i).

    Built by the recurrence C(1/2, i) = C(1/2, i-1) * (3/2 - i) / i, which
    steps around the poles of Gamma(3/2 - i).
    """
    if i < 0 or int(i) != i:
        raise DomainError(f"binom_half needs a non-negative integer, got {i!r}")
    value = 1.0
    for r in range(1, int(i) + 1):
        value *= (1.5 - r) / r
    return value


def binom_half_exact(i: int) -> Fraction:
    value = Fraction(1)
    for r in range(1, i + 1):
        value *= (Fraction(3, 2) - r) / r
    return value


# ---------------------------------------------------------------------------
# terminating Gauss hypergeometric function


def _check_terminating(a) -> int:
    if a > 0 or int(a) != a:
        raise DomainError(f"terminating 2F1 needs a non-positive integer first parameter, got {a!r}")
    return -int(a)


def terminating_2f1_coefficients(a: int, b: float, c: float) -> np.ndarray:
    """Coefficients ``(a)_k (b)_k / (Gamma(c + k) k!)`` for k = 0..|a|.

    These are the power-series coefficients of the regularized function
    ``2F1(a, b; c; z) / Gamma(c)``; ``1/Gamma(c + k)`` vanishes at poles, so
    non-positive integer ``c`` is handled without special cases.
    """
    degree = _check_terminating(a)
    coeffs = np.empty(degree + 1)
    rising = 1.0  # (a)_k (b)_k / k!
    for k in range(degree + 1):
        coeffs[k] = rising * special.rgamma(c + k)
        rising *= (a + k) * (b + k) / (k + 1)
    return coeffs


def gauss_2f1_terminating(a: int, b: float, c: float, z: float) -> float:
    """Regularized terminating hypergeometric ``2F1(a, b; c; z) / Gamma(c)``.

    ``a`` must be a non-positive integer; the series is then a polynomial of
    degree ``|a|`` in ``z``.
    """
    coeffs = terminating_2f1_coefficients(a, b, c)
    return float(np.polynomial.polynomial.polyval(z, coeffs))


# ---------------------------------------------------------------------------
# Mellin-Barnes contour integration


@dataclass(frozen=True)
class MellinTerm:
    """One summand ``sign * exp(log_scale) * x**shift * Phi(s) * x**s`` of a
    Mellin-Barnes integrand, with ``Phi`` a gamma ratio.

    ``numer`` and ``denom`` hold pairs ``(a, b)`` standing for ``Gamma(a + b s)``.
    """

    numer: tuple[tuple[float, float], ...]
    denom: tuple[tuple[float, float], ...] = ()
    log_scale: float = 0.0
    sign: float = 1.0
    shift: float = 0.0

    def log_phi(self, s: np.ndarray) -> np.ndarray:
        out = np.full(s.shape, self.log_scale, dtype=complex)
        for a, b in self.numer:
            out += special.loggamma(a + b * s)
        for a, b in self.denom:
            out -= special.loggamma(a + b * s)
        return out

    def dlog_phi(self, s: np.ndarray) -> np.ndarray:
        out = np.zeros(s.shape, dtype=complex)
        for a, b in self.numer:
            out += b * special.psi(a + b * s)
        for a, b in self.denom:
            out -= b * special.psi(a + b * s)
        return out


@dataclass(frozen=True)
class ContourResult:
    value: float
    imag: float
    error: float
    t_max: float
    panels: int


class _Integrand:
    def __init__(self, terms: Sequence[MellinTerm], x: float, c: float):
        self.terms = tuple(terms)
        self.log_x = math.log(x)
        self.c = c

    def __call__(self, t: np.ndarray) -> np.ndarray:
        s = self.c + 1j * t
        total = np.zeros(t.shape, dtype=complex)
        for term in self.terms:
            total += term.sign * np.exp(term.log_phi(s) + (s + term.shift) * self.log_x)
        return total

    def tail(self, t: float) -> float:
        """Rough bound on |integral from t to +-infinity|, from the local
        decay/oscillation rate ``|d log f / dt|`` at the truncation point."""
        s = np.array([self.c + 1j * t])
        bound = 0.0
        for term in self.terms:
            logf = term.log_phi(s) + (s + term.shift) * self.log_x
            rate = abs(complex((term.dlog_phi(s) + self.log_x)[0]))
            bound += 2.0 * math.exp(float(logf.real[0])) / max(rate, 1e-300)
        return bound


def _panel_edges(start: float, stop: float, osc_width: float) -> np.ndarray:
    # panels widen geometrically away from the origin but never exceed
    # half an oscillation period of x**(i t)
    edges = [start]
    t = start
    while t < stop:
        w = min(osc_width, max(1.0, t / 4.0))
        t = min(stop, t + w)
        edges.append(t)
    return np.array(edges)


def _gk15(f, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    t = mid[:, None] + half[:, None] * GK15_NODES[None, :]
    vals = f(t.ravel()).reshape(t.shape)
    kron = (vals * GK15_WEIGHTS).sum(axis=1) * half
    gauss = (vals * G7_WEIGHTS).sum(axis=1) * half
    return kron, np.abs(kron - gauss)


def mellin_barnes(
    terms: Sequence[MellinTerm],
    x: float,
    *,
    atol: float,
    t_cap: float = 1e6,
    c: float = CONTOUR_REAL_PART,
    max_panels: int = 400_000,
) -> ContourResult:
    """Integrate ``sum(terms)`` along ``Re(s) = c`` and divide by ``2 pi i``.

    The line is truncated at ``|Im s| <= T``; ``T`` doubles until the tail
    estimate drops below a quarter of ``atol``, and panels whose Kronrod-Gauss
    difference exceeds their share of the budget are bisected.  Both halves of
    the line are integrated independently so the imaginary part of the result
    is a genuine check on the conjugate symmetry of the integrand.
    """
    if not x > 0:
        raise DomainError(f"Mellin-Barnes evaluation needs x > 0, got {x}")
    f = _Integrand(terms, x, c)
    scale = 1.0 / (2.0 * math.pi)
    omega = abs(f.log_x)
    osc_width = math.pi / omega if omega > 0 else math.inf

    T = 8.0
    pos = _panel_edges(0.0, T, osc_width)
    a = np.concatenate([-pos[:0:-1], pos[:-1]])
    b = np.concatenate([-pos[-2::-1], pos[1:]])
    vals, errs = _gk15(f, a, b)

    while True:
        tail = scale * (f.tail(T) + f.tail(-T))
        if tail > 0.25 * atol and T < t_cap:
            new_T = min(2.0 * T, t_cap)
            ext = _panel_edges(T, new_T, osc_width)
            na = np.concatenate([ext[:-1], -ext[1:]])
            nb = np.concatenate([ext[1:], -ext[:-1]])
            nv, ne = _gk15(f, na, nb)
            a, b = np.concatenate([a, na]), np.concatenate([b, nb])
            vals, errs = np.concatenate([vals, nv]), np.concatenate([errs, ne])
            T = new_T
            continue

        total_err = scale * errs.sum()
        if total_err <= 0.5 * atol or a.size > max_panels:
            break
        width = b - a
        share = 0.5 * atol * width / width.sum()
        bad = scale * errs > share
        if not bad.any():
            bad = errs >= np.quantile(errs, 0.9)
        mid = 0.5 * (a[bad] + b[bad])
        na = np.concatenate([a[bad], mid])
        nb = np.concatenate([mid, b[bad]])
        nv, ne = _gk15(f, na, nb)
        keep = ~bad
        a, b = np.concatenate([a[keep], na]), np.concatenate([b[keep], nb])
        vals, errs = np.concatenate([vals[keep], nv]), np.concatenate([errs[keep], ne])

    total = scale * vals.sum()
    error = scale * errs.sum() + tail
    if error > atol:
        raise ConvergenceError(
            f"Mellin-Barnes integral did not reach atol={atol:g} (estimate {error:.3g}, T={T:g})",
            estimate=error,
            value=float(total.real),
        )
    return ContourResult(float(total.real), float(total.imag), float(error), T, int(a.size))


@dataclass(frozen=True)
class BatchContourResult:
    values: np.ndarray
    errors: np.ndarray
    t_max: float
    step: float


def _grouped_phi(terms: Sequence[MellinTerm], shifts: list[float], s: np.ndarray) -> np.ndarray:
    out = np.zeros((len(shifts), s.size), dtype=complex)
    for term in terms:
        out[shifts.index(term.shift)] += term.sign * np.exp(term.log_phi(s))
    return out


def _tail_bounds(terms: Sequence[MellinTerm], c: float, levels: np.ndarray, log_x: np.ndarray) -> np.ndarray:
    """Bound on ``|integral over |t| > T|`` for every truncation level and x.

    The amplitude ``|Phi|`` decreases monotonically and the phase of ``Phi``
    is asymptotically stationary, so the oscillation ``x^(i t)`` alone sets
    the Dirichlet bound ``2|f(T)| / |ln x|``; the plain decay bound
    ``|f(T)| / rate`` is used when it is smaller.
    """
    s = c + 1j * levels
    out = np.zeros((levels.size, log_x.size))
    omega = np.abs(log_x)[None, :]
    for term in terms:
        mag = np.exp(term.log_phi(s).real)[:, None] * np.exp((c + term.shift) * log_x)[None, :]
        rate = np.abs((1j * term.dlog_phi(s)).real)[:, None]
        out += 4.0 * mag / np.maximum(np.maximum(omega, rate), 1e-300)
    return out / (2.0 * math.pi)


def mellin_barnes_batch(
    terms: Sequence[MellinTerm],
    xs,
    *,
    atol: float,
    c: float = CONTOUR_REAL_PART,
    t_cap: float = 16384.0,
    step: float = 0.25,
    min_step: float = 1e-3,
    block: int = 256,
) -> BatchContourResult:
    """Evaluate one Mellin-Barnes integral at many arguments at once.

    ``Phi`` does not depend on ``x``, so it is tabulated once on the
    equispaced nodes ``t_k = k h`` and every ``x`` costs one complex
    exponential per node.  For real parameters ``Phi(conj s) = conj Phi(s)``
    and only ``t >= 0`` is needed.  Each ``x`` gets its own truncation point
    from :func:`_tail_bounds`.  The trapezoid rule on a line converges
    geometrically for integrands analytic in a strip (here the strip reaches
    the nearest pole, a distance 1/2 from the contour), so ``h`` is halved
    until two successive sums agree to ``atol / 2``; that difference plus the
    truncation bound is reported as the error.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(xs <= 0):
        raise DomainError("Mellin-Barnes evaluation needs x > 0")
    log_x = np.log(xs)
    shifts = sorted({term.shift for term in terms})

    levels = 8.0 * 2.0 ** np.arange(int(math.log2(t_cap / 8.0)) + 1)
    bounds = _tail_bounds(terms, c, levels, log_x)
    ok = bounds <= 0.25 * atol
    pick = np.where(ok.any(axis=0), ok.argmax(axis=0), levels.size - 1)
    t_x = levels[pick]
    tail = bounds[pick, np.arange(xs.size)]
    groups = [(T, np.flatnonzero(t_x == T)) for T in np.unique(t_x)]

    def partial_sums(t: np.ndarray, first: bool) -> np.ndarray:
        # sum over nodes of w_k Phi(c + i t_k) x^(c + i t_k), per x
        g = _grouped_phi(terms, shifts, c + 1j * t)
        w = np.full(t.size, 2.0)
        if first:
            w[0] = 1.0
        g = g * w
        out = np.zeros(xs.size)
        for T, idx in groups:
            use = t <= T
            tt, gg = t[use], g[:, use]
            for start in range(0, idx.size, block):
                sel = idx[start:start + block]
                lx = log_x[sel]
                phase = np.exp(1j * np.outer(lx, tt))
                for row, sh in zip(gg, shifts):
                    out[sel] += np.exp((c + sh) * lx) * np.real(phase @ row)
        return out

    T_max = float(t_x.max())
    h = step
    total = partial_sums(np.arange(0.0, T_max + 0.5 * h, h), True)
    estimate = h / (2.0 * math.pi) * total
    while True:
        total = total + partial_sums(np.arange(0.5 * h, T_max, h), False)
        h *= 0.5
        refined = h / (2.0 * math.pi) * total
        err = np.abs(refined - estimate)
        estimate = refined
        if err.max() <= 0.5 * atol or h < min_step:
            break
    errors = err + tail
    if errors.max() > atol:
        raise ConvergenceError(
            f"batched Mellin-Barnes integral did not reach atol={atol:g} (worst {errors.max():.3g})",
            estimate=float(errors.max()),
        )
    return BatchContourResult(estimate, errors, T_max, h)


# ---------------------------------------------------------------------------
# the two Meijer G-functions


def _check_nonneg_int(name: str, value) -> int:
    if int(value) != value or value < 0:
        raise DomainError(f"{name} must be a non-negative integer, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class MeijerGSpec213:
    """Parameters of ``G^{2,1}_{1,3}(-j; v1, v2; 0 | argument)``."""

    j: int
    v1: int
    v2: int
    argument: float

    def __post_init__(self):
        for name in ("j", "v1", "v2"):
            _check_nonneg_int(name, getattr(self, name))
        if not self.argument > 0:
            raise DomainError(f"argument must be positive, got {self.argument}")

    def term(self, log_scale: float = 0.0, sign: float = 1.0, shift: float = 0.0) -> MellinTerm:
        return MellinTerm(
            numer=((self.v1, -1.0), (self.v2, -1.0), (1.0 + self.j, 1.0)),
            denom=((1.0, 1.0),),
            log_scale=log_scale,
            sign=sign,
            shift=shift,
        )


@dataclass(frozen=True)
class MeijerGSpec321:
    """Parameters of ``G^{2,1}_{3,3}(-j; p1, p2; v1, v2; 0 | argument)``.

    In the density of the symmetrized product of two random states,
    ``p_i = n m_i - k - 1`` and ``v_i = m_i - n``; see :meth:`from_dimensions`.
    """

    j: int
    k: int
    v1: int
    v2: int
    p1: int
    p2: int
    argument: float

    def __post_init__(self):
        for name in ("j", "k", "v1", "v2", "p1", "p2"):
            _check_nonneg_int(name, getattr(self, name))
        if self.k > self.j:
            raise DomainError(f"need k <= j, got k={self.k}, j={self.j}")
        if not (self.p1 > self.v1 and self.p2 > self.v2):
            raise DomainError("need p1 > v1 and p2 > v2")
        if not 0 < self.argument < 1:
            raise DomainError(f"argument must lie in (0, 1), got {self.argument}")

    @classmethod
    def from_dimensions(cls, n: int, m1: int, m2: int, j: int, k: int, mu: float) -> "MeijerGSpec321":
        return cls(j, k, m1 - n, m2 - n, n * m1 - k - 1, n * m2 - k - 1, mu)

    @property
    def decay_power(self) -> int:
        """Algebraic decay exponent of the integrand along the contour."""
        return self.p1 + self.p2 - self.v1 - self.v2 - self.j

    def term(self, log_scale: float = 0.0, sign: float = 1.0, shift: float = 0.0) -> MellinTerm:
        return MellinTerm(
            numer=((self.v1, -1.0), (self.v2, -1.0), (1.0 + self.j, 1.0)),
            denom=((1.0, 1.0), (self.p1, -1.0), (self.p2, -1.0)),
            log_scale=log_scale,
            sign=sign,
            shift=shift,
        )


def meijer_g_213(spec: MeijerGSpec213, *, atol: float = 1e-9, full_output: bool = False):
    """Evaluate ``G^{2,1}_{1,3}(-j; v1, v2; 0 | y)`` by contour integration.

    The integrand decays like ``exp(-pi |t|)`` so the truncation stays short.
    Returns a float, or a :class:`ContourResult` when ``full_output`` is set.
    """
    res = mellin_barnes([spec.term()], spec.argument, atol=atol, t_cap=400.0)
    return res if full_output else res.value


def meijer_g_321(spec: MeijerGSpec321, *, atol: float = 1e-7, full_output: bool = False):
    """Evaluate ``G^{2,1}_{3,3}(-j; p1, p2; v1, v2; 0 | mu)`` for ``0 < mu < 1``.

    With as many gamma factors upstairs as downstairs the integrand only decays
    algebraically, like ``|t|**-(p1 + p2 - v1 - v2 - j)``, and oscillates as
    ``mu**(i t)``; panel widths are capped at half an oscillation period.
    """
    res = mellin_barnes([spec.term()], spec.argument, atol=atol, t_cap=1e6)
    return res if full_output else res.value
