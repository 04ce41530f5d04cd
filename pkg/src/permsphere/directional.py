"""von Mises-Fisher densities on the unit sphere S^{m-1} in R^m.

The concentration machinery rests on the mean resultant length

    A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa),

evaluated with a modified Lentz continued fraction.  Absolute Bessel values
are only needed for normalizers; ratios and differences never touch them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-10
INPUT_UNIT_TOL = 1e-8

# below this (or below nu) log I_nu uses the power series
SERIES_LIMIT = 60.0

LENTZ_TINY = 1e-300
LENTZ_EPS = 1e-15
LENTZ_MAX_ITER = 10_000
# beyond this the continued fraction is slow (~sqrt(kappa) terms); use the
# uniform asymptotic form of the ratio instead
RATIO_ASYMPTOTIC = 1e5


class ConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class VonMisesFisher:
    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.ndim != 1 or mu.size < 1:
            raise ValueError("mu must be a non-empty vector")
        if abs(np.linalg.norm(mu) - 1.0) > UNIT_TOL:
            raise ValueError(f"mu must have unit norm, got {np.linalg.norm(mu)!r}")
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be finite and >= 0, got {self.kappa!r}")
        mu = mu.copy()
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def m(self) -> int:
        return self.mu.size


def log_sphere_area(m: int) -> float:
    """log of the surface measure of S^{m-1} (2 * pi^{m/2} / Gamma(m/2))."""
    return math.log(2.0) + 0.5 * m * math.log(math.pi) - math.lgamma(0.5 * m)


# ---------------------------------------------------------------------------
# log I_nu


def _log_series_sum(nu: float, x: float) -> float:
    """log of sum_k (x^2/4)^k Gamma(nu+1) / (k! Gamma(k+nu+1)).

    All terms are positive; the running sum is rescaled to stay in range.
    """
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    log_scale = 0.0
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + nu))
        total += term
        if term < total * 1e-17 and k > q / (nu + 1.0):
            break
        if total > 1e250:
            total *= 1e-250
            term *= 1e-250
            log_scale += 250.0 * math.log(10.0)
    return math.log(total) + log_scale


def _log_bessel_series(nu: float, x: float) -> float:
    if x == 0.0:
        return 0.0 if nu == 0 else -math.inf
    return nu * math.log(0.5 * x) - math.lgamma(nu + 1.0) + _log_series_sum(nu, x)


_DEBYE = (
    (1.0,),
    (0.0, 3.0, 0.0, -5.0),
    (0.0, 0.0, 81.0, 0.0, -462.0, 0.0, 385.0),
    (0.0, 0.0, 0.0, 30375.0, 0.0, -369603.0, 0.0, 765765.0, 0.0, -425425.0),
    (0.0, 0.0, 0.0, 0.0, 4465125.0, 0.0, -94121676.0, 0.0, 349922430.0, 0.0,
     -446185740.0, 0.0, 185910725.0),
    (0.0, 0.0, 0.0, 0.0, 0.0, 1519035525.0, 0.0, -49286948607.0, 0.0,
     284499769554.0, 0.0, -614135872350.0, 0.0, 566098157625.0, 0.0,
     -188699385875.0),
)
_DEBYE_DEN = (1.0, 24.0, 1152.0, 414720.0, 39813120.0, 6688604160.0)


def _log_bessel_debye(nu: float, x: float) -> float:
    # uniform asymptotic expansion in large nu
    z = x / nu
    s = math.sqrt(1.0 + z * z)
    t = 1.0 / s
    eta = s + math.log(z / (1.0 + s))
    acc = 0.0
    for k, (coef, den) in enumerate(zip(_DEBYE, _DEBYE_DEN)):
        acc += np.polynomial.polynomial.polyval(t, coef) / den / nu**k
    return -0.5 * math.log(2.0 * math.pi * nu) + nu * eta - 0.5 * math.log(s) + math.log(acc)


def _log_bessel_hankel(nu: float, x: float) -> float:
    # large-argument expansion, used when nu^2 is small relative to x
    mu4 = 4.0 * nu * nu
    term = 1.0
    acc = 1.0
    for k in range(1, 200):
        nxt = -term * (mu4 - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(nxt) >= abs(term):
            break
        term = nxt
        acc += term
        if abs(term) < 1e-17 * abs(acc):
            break
    return x - 0.5 * math.log(2.0 * math.pi * x) + math.log(acc)


def _debye_sum(nu: float, s: float) -> float:
    # sum_k u_k(nu/s) / nu^k, written as powers of 1/s so nu may be 0
    t = nu / s
    acc = 0.0
    for k, (coef, den) in enumerate(zip(_DEBYE, _DEBYE_DEN)):
        acc += np.polynomial.polynomial.polyval(t, coef[k:]) / den / s**k
    return acc


def _log_ratio_debye(nu: float, x: float) -> float:
    """log(I_{nu+1}(x) / I_nu(x)) from the uniform expansion.

    The exponents of the two expansions are differenced analytically, so
    nothing of size x is ever subtracted.
    """
    s0 = math.hypot(nu, x)
    s1 = math.hypot(nu + 1.0, x)
    ds = (2.0 * nu + 1.0) / (s0 + s1)
    log_lead = math.log1p((nu + 1.0 + (nu + 1.0) ** 2 / (s1 + x)) / x)
    out = ds - log_lead - nu * math.log1p((1.0 + ds) / (nu + s0)) - 0.5 * math.log1p(ds / s0)
    return out + math.log(_debye_sum(nu + 1.0, s1) / _debye_sum(nu, s0))


def log_bessel_i(nu: float, x: float) -> float:
    """log I_nu(x) for nu > -1, x >= 0."""
    if x < 0:
        raise ValueError("x must be >= 0")
    if x <= max(SERIES_LIMIT, nu):
        return _log_bessel_series(nu, x)
    if nu * nu < x:
        return _log_bessel_hankel(nu, x)
    return _log_bessel_debye(nu, x)


# ---------------------------------------------------------------------------
# normalizer and density


def log_normalizer(m: int, kappa: float) -> float:
    """log Z_m(kappa) with Z_m = kappa^{m/2-1} / ((2 pi)^{m/2} I_{m/2-1}(kappa))."""
    if m < 1:
        raise ValueError(f"dimension must be >= 1, got {m}")
    if kappa < 0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    nu = 0.5 * m - 1.0
    base = -0.5 * m * math.log(2.0 * math.pi)
    if kappa <= max(SERIES_LIMIT, nu):
        # kappa^nu / I_nu(kappa) = 2^nu Gamma(nu+1) / S(kappa), finite at 0
        return base + nu * math.log(2.0) + math.lgamma(nu + 1.0) - _log_series_sum(nu, kappa)
    return base + nu * math.log(kappa) - log_bessel_i(nu, kappa)


def log_density(vmf: VonMisesFisher, x) -> np.ndarray | float:
    """log f(x | mu, kappa) for one unit vector or a stack of them."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != vmf.m:
        raise ValueError(f"expected vectors of length {vmf.m}, got shape {x.shape}")
    norms = np.linalg.norm(x, axis=-1)
    if np.any(np.abs(norms - 1.0) > INPUT_UNIT_TOL):
        raise ValueError("density arguments must be unit vectors")
    out = log_normalizer(vmf.m, vmf.kappa) + vmf.kappa * (x @ vmf.mu)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Bessel ratio


def bessel_ratio(d: float, kappa: float) -> float:
    """A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa).

    Gauss continued fraction for I_{nu+1}/I_nu with nu = d/2 - 1,

        x / (2(nu+1) + x^2 / (2(nu+2) + x^2 / (2(nu+3) + ...))),

    evaluated by the modified Lentz algorithm.  Very large kappa switches to
    the uniform asymptotic expansion.
    """
    if d < 1:
        raise ValueError(f"order parameter must be >= 1, got {d}")
    if kappa < 0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    if kappa == 0:
        return 0.0
    nu = 0.5 * d - 1.0
    x = float(kappa)
    if d == 1:
        return math.tanh(x)
    if x > RATIO_ASYMPTOTIC:
        return math.exp(_log_ratio_debye(nu, x))
    xx = x * x
    f = LENTZ_TINY
    C = f
    D = 0.0
    for j in range(1, LENTZ_MAX_ITER + 1):
        a = x if j == 1 else xx
        b = 2.0 * (nu + j)
        D = b + a * D
        if D == 0.0:
            D = LENTZ_TINY
        C = b + a / C
        if C == 0.0:
            C = LENTZ_TINY
        D = 1.0 / D
        delta = C * D
        f *= delta
        if abs(delta - 1.0) < LENTZ_EPS:
            return f
    raise ConvergenceError(
        f"Bessel ratio continued fraction did not converge (d={d}, kappa={kappa})"
    )


def _ratio_slope(d: float, kappa: float, a: float) -> float:
    # A'(k) = 1 - A^2 - (d - 1) A / k
    return 1.0 - a * a - (d - 1.0) * a / kappa


def inv_bessel_ratio(d: float, r: float, tol: float = 1e-14) -> float:
    """kappa >= 0 with A_d(kappa) = r, for 0 <= r < 1."""
    if not (0.0 <= r < 1.0):
        raise ValueError(f"mean resultant length must lie in [0, 1), got {r!r}")
    if r == 0.0:
        return 0.0
    lo, hi = 0.0, None
    kappa = r * (d - r * r) / (1.0 - r * r)
    if kappa <= 0 or not math.isfinite(kappa):
        kappa = 1.0
    for _ in range(200):
        a = bessel_ratio(d, kappa)
        err = a - r
        if abs(err) <= tol * max(r, 1e-300) or abs(err) < 1e-16:
            return kappa
        if err < 0:
            lo = kappa
        else:
            hi = kappa
        slope = _ratio_slope(d, kappa, a)
        step = kappa - err / slope if slope > 0 else math.nan
        if hi is None:
            if not (step > lo and math.isfinite(step)):
                step = 2.0 * kappa
        elif not (lo < step < hi):
            step = 0.5 * (lo + hi)
        if hi is not None and (hi - lo) <= 4e-16 * hi:
            return 0.5 * (lo + hi)
        kappa = step
    return kappa


def convolve_predict(kappa_a: float, kappa_b: float, d: float) -> float:
    """Concentration of the vMF approximating the convolution of two vMFs."""
    if kappa_a < 0 or kappa_b < 0:
        raise ValueError("concentrations must be >= 0")
    r = bessel_ratio(d, kappa_a) * bessel_ratio(d, kappa_b)
    return inv_bessel_ratio(d, r)


# ---------------------------------------------------------------------------
# sampling


def _sample_cosines(m: int, kappa: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw w = mu^T x by rejection from a beta-derived envelope."""
    if kappa == 0.0:
        z = rng.beta(0.5 * (m - 1), 0.5 * (m - 1), size=size)
        return 1.0 - 2.0 * z
    dm = m - 1.0
    b = dm / (math.sqrt(4.0 * kappa * kappa + dm * dm) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + dm * math.log1p(-x0 * x0)
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        batch = max(need + 8, int(need * 1.3))
        z = rng.beta(0.5 * dm, 0.5 * dm, size=batch)
        u = rng.random(batch)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        ok = kappa * w + dm * np.log1p(-x0 * w) - c >= np.log(u)
        got = w[ok][:need]
        out[filled:filled + got.size] = got
        filled += got.size
    return out


def sample(vmf: VonMisesFisher, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw unit vectors from ``vmf``; shape (m,) or (size, m)."""
    m = vmf.m
    count = 1 if size is None else int(size)
    mu = vmf.mu
    if m == 1:
        p_plus = 0.5 * (1.0 + math.tanh(vmf.kappa))
        signs = np.where(rng.random(count) < p_plus, 1.0, -1.0)
        out = signs[:, None] * mu[None, :]
        return out[0] if size is None else out
    w = _sample_cosines(m, vmf.kappa, count, rng)
    g = rng.standard_normal((count, m))
    g -= np.outer(g @ mu, mu)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    out = w[:, None] * mu[None, :] + np.sqrt(np.clip(1.0 - w * w, 0.0, None))[:, None] * g
    out /= np.linalg.norm(out, axis=1, keepdims=True)
    return out[0] if size is None else out


def sample_many(mus, kappa: float, rng: np.random.Generator) -> np.ndarray:
    """One draw from vMF(mus[i], kappa) for every row of ``mus`` (shared kappa)."""
    mus = np.asarray(mus, dtype=float)
    count, m = mus.shape
    if m < 2:
        return np.vstack([sample(VonMisesFisher(mu, kappa), rng) for mu in mus])
    w = _sample_cosines(m, float(kappa), count, rng)
    g = rng.standard_normal((count, m))
    g -= np.einsum("ij,ij->i", g, mus)[:, None] * mus
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    out = w[:, None] * mus + np.sqrt(np.clip(1.0 - w * w, 0.0, None))[:, None] * g
    out /= np.linalg.norm(out, axis=1, keepdims=True)
    return out
