"""Reference self-energies built from bath correlation functions.

Three constructions that an architectural self-energy can be compared to:

* an exponential (HEOM-style) decomposition of the correlation function,
  whose Laplace transform is a sum of simple poles;
* a tridiagonal chain mapping, giving a continued fraction;
* energy participation ratios, giving a purely real static shift.

Thermal correlation functions and a trapezoidal Laplace transform tie the
first two back to a spectral density.  Quadratures are composite trapezoids
on caller-supplied grids so results are reproducible to the bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import QuadratureError, SingularityError

__all__ = [
    "HeomModes",
    "TnChain",
    "EprModel",
    "DiscreteModes",
    "TabulatedDensity",
    "QuadResult",
    "heom_sigma",
    "heom_correlation",
    "tn_sigma_cf",
    "tn_tridiagonal",
    "tn_kernel",
    "epr_delta_omega",
    "epr_sigma",
    "epr_green",
    "bose_occupation",
    "kms_weights",
    "bath_correlation_thermal",
    "correlation_to_sigma",
]


@dataclass(frozen=True)
class HeomModes:
    """Exponential modes ``(c_j, gamma_j)`` of ``C(t) = sum c_j exp(-gamma_j t)``."""

    amplitudes: tuple
    rates: tuple

    def __post_init__(self):
        amps = tuple(complex(c) for c in self.amplitudes)
        rates = tuple(float(g) for g in self.rates)
        if len(amps) != len(rates):
            raise ValueError("amplitudes and rates differ in length")
        for g in rates:
            if not g > 0:
                raise ValueError(f"decay rates must be > 0, got {g}")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "rates", rates)

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        return cls(tuple(c for c, _ in pairs), tuple(g for _, g in pairs))


@dataclass(frozen=True)
class TnChain:
    """Semi-infinite chain truncated to ``depth`` sites.

    ``lam`` couples the system to site 0, ``eps`` are on-site energies and
    ``hop`` the nearest-neighbour hoppings (``depth - 1`` of them).
    """

    lam: float
    eps: tuple
    hop: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        object.__setattr__(self, "hop", tuple(float(t) for t in self.hop))
        if len(self.eps) < 1:
            raise ValueError("chain depth must be >= 1")
        if len(self.hop) != len(self.eps) - 1:
            raise ValueError(f"need {len(self.eps) - 1} hoppings for depth {len(self.eps)}, got {len(self.hop)}")

    @property
    def depth(self) -> int:
        return len(self.eps)


@dataclass(frozen=True)
class EprModel:
    """Elements ``(E_i, p_im)`` participating in one mode ``m``."""

    energies: tuple
    participations: tuple

    def __post_init__(self):
        e = tuple(float(x) for x in self.energies)
        p = tuple(float(x) for x in self.participations)
        if len(e) != len(p):
            raise ValueError("energies and participations differ in length")
        for x in p:
            if not 0.0 <= x <= 1.0:
                raise ValueError(f"participation must lie in [0, 1], got {x}")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "participations", p)

    def __add__(self, other: "EprModel") -> "EprModel":
        return EprModel(self.energies + other.energies,
                        self.participations + other.participations)


@dataclass(frozen=True)
class DiscreteModes:
    """Spectral density as a finite set of modes ``sum_k g_k^2 delta(w - w_k)``."""

    couplings: tuple
    frequencies: tuple

    def __post_init__(self):
        object.__setattr__(self, "couplings", tuple(float(g) for g in self.couplings))
        object.__setattr__(self, "frequencies", tuple(float(w) for w in self.frequencies))
        if len(self.couplings) != len(self.frequencies):
            raise ValueError("couplings and frequencies differ in length")
        if any(w <= 0 for w in self.frequencies):
            raise ValueError("mode frequencies must be > 0")


@dataclass(frozen=True)
class TabulatedDensity:
    """Nonnegative spectral density sampled on an increasing positive grid."""

    omega: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if w.ndim != 1 or w.shape != v.shape or w.size < 2:
            raise ValueError("omega and values must be matching 1-D arrays with >= 2 points")
        if np.any(np.diff(w) <= 0):
            raise ValueError("omega grid must be strictly increasing")
        if w[0] <= 0:
            raise ValueError("spectral density support must lie at omega > 0")
        if np.any(v < 0):
            raise ValueError("spectral density must be nonnegative")
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, func, omega):
        omega = np.asarray(omega, dtype=float)
        return cls(omega, np.asarray(func(omega), dtype=float))


class QuadResult(NamedTuple):
    value: complex
    error: float


# -- HEOM ---------------------------------------------------------------------

def heom_sigma(modes: HeomModes, omega):
    """Pole sum ``sum_j c_j / (gamma_j - i*omega)``; vectorised over ``omega``."""
    w = np.asarray(omega, dtype=float)
    out = np.zeros(w.shape, dtype=complex)
    for c, g in zip(modes.amplitudes, modes.rates):
        out += c / (g - 1j * w)
    return out[()] if out.ndim == 0 else out


def heom_correlation(modes: HeomModes, t):
    """``C(t) = sum_j c_j exp(-gamma_j t)`` for ``t >= 0``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("exponential decomposition is defined for t >= 0 only")
    out = np.zeros(t.shape, dtype=complex)
    for c, g in zip(modes.amplitudes, modes.rates):
        out += c * np.exp(-g * t)
    return out[()] if out.ndim == 0 else out


# -- chain mapping ------------------------------------------------------------

def tn_sigma_cf(chain: TnChain, omega, eta: float = 0.0):
    """Continued-fraction self-energy of a truncated chain.

    ``lam**2 / (z - eps_0 - t_0**2 / (z - eps_1 - ...))`` with ``z = omega + i*eta``,
    evaluated from the deepest level upward.

    Raises
    ------
    SingularityError
        When a level's denominator is exactly zero (only possible for
        ``eta == 0``); ``where`` names the level.
    """
    if eta < 0:
        raise ValueError("eta must be >= 0")
    w = np.asarray(omega, dtype=float)
    z = w + 1j * eta
    eps, hop = chain.eps, chain.hop
    d = z - eps[-1]
    for level in range(chain.depth - 2, -1, -1):
        if hop[level] == 0.0:
            # deeper levels are disconnected
            d = z - eps[level]
            continue
        _check_level(d, level + 1, w)
        d = z - eps[level] - hop[level] ** 2 / d
    _check_level(d, 0, w)
    out = chain.lam ** 2 / d
    return complex(out) if np.ndim(out) == 0 else out


def _check_level(d, level, w):
    zero = np.asarray(d) == 0
    if np.any(zero):
        at = np.asarray(w)[zero] if np.ndim(w) else w
        raise SingularityError(f"continued fraction denominator vanishes at level {level}",
                               float(np.ravel(at)[0]), f"level {level}")


def tn_tridiagonal(chain: TnChain) -> np.ndarray:
    """Real symmetric tridiagonal chain Hamiltonian (without the system)."""
    t = np.diag(np.asarray(chain.eps))
    for k, h in enumerate(chain.hop):
        t[k, k + 1] = t[k + 1, k] = h
    return t


def tn_kernel(chain: TnChain, t: float, window: Sequence[float], points: int,
              eta: float) -> complex:
    """Memory kernel ``(1/2pi) * int Sigma_TN(omega) exp(-i omega t) d omega``.

    Composite trapezoid over ``window = (lo, hi)`` with ``points`` nodes.  The
    window should enclose the chain spectrum; ``eta > 0`` keeps the poles off
    the real axis.
    """
    lo, hi = float(window[0]), float(window[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo or points < 2:
        raise ValueError(f"degenerate window ({lo}, {hi}) with {points} points")
    if not eta > 0:
        raise ValueError("tn_kernel needs eta > 0")
    w = np.linspace(lo, hi, int(points))
    f = tn_sigma_cf(chain, w, eta) * np.exp(-1j * w * t)
    return complex(np.trapezoid(f, w) / (2 * np.pi))


# -- energy participation -----------------------------------------------------

def epr_delta_omega(model: EprModel) -> float:
    """Static frequency shift ``sum_i E_i p_im**2``."""
    return math.fsum(e * p * p for e, p in zip(model.energies, model.participations))


def epr_sigma(model: EprModel) -> complex:
    """Purely real self-energy ``Delta omega_m + 0i``."""
    return complex(epr_delta_omega(model), 0.0)


def epr_green(model: EprModel, omega, omega_m: float):
    """Mode Green's function ``1 / (omega - omega_m - Sigma_EPR)``."""
    return 1.0 / (np.asarray(omega, dtype=float) - omega_m - epr_sigma(model))


# -- thermal correlations -----------------------------------------------------

def bose_occupation(omega, T: float):
    """Bose-Einstein occupation ``1 / (exp(omega/T) - 1)``; zero at ``T == 0``."""
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("Bose occupation needs omega > 0")
    if T < 0:
        raise ValueError("temperature must be >= 0")
    if T == 0:
        n = np.zeros_like(w)
    else:
        with np.errstate(over="ignore"):
            n = 1.0 / np.expm1(w / T)
    return float(n) if n.ndim == 0 else n


def kms_weights(omega, T: float):
    """Absorption and emission weights ``(n, n + 1)``."""
    n = bose_occupation(omega, T)
    return n, n + 1.0


def bath_correlation_thermal(density, T: float, t, tol: float | None = None) -> QuadResult:
    """Thermal correlation ``int J(w) [(n+1) e^{-iwt} + n e^{iwt}] dw``.

    Discrete modes are summed exactly (``error == 0``).  Tabulated densities
    use the trapezoid rule with a Richardson self-check against the rule on
    every other node; ``error`` is that estimate.  With ``tol`` set, an
    estimate above it raises :class:`QuadratureError`.
    """
    t = float(t)
    if isinstance(density, DiscreteModes):
        w = np.asarray(density.frequencies)
        weight = np.asarray(density.couplings) ** 2
        if w.size == 0:
            return QuadResult(0j, 0.0)
        n, n1 = kms_weights(w, T)
        val = np.sum(weight * (n1 * np.exp(-1j * w * t) + n * np.exp(1j * w * t)))
        return QuadResult(complex(val), 0.0)
    if not isinstance(density, TabulatedDensity):
        raise TypeError("density must be DiscreteModes or TabulatedDensity")
    w, j = density.omega, density.values
    n, n1 = kms_weights(w, T)
    f = j * (n1 * np.exp(-1j * w * t) + n * np.exp(1j * w * t))
    fine = np.trapezoid(f, w)
    if w.size >= 5 and w.size % 2 == 1:
        coarse = np.trapezoid(f[::2], w[::2])
        err = float(abs(fine - coarse) / 3.0)
    else:
        err = float("inf")
    if tol is not None and not err <= tol:
        raise QuadratureError(f"trapezoid error estimate {err:.3g} exceeds tolerance {tol:.3g}", err)
    return QuadResult(complex(fine), err)


def correlation_to_sigma(samples, t, omega, decay_tol: float = 1e-8):
    """Truncated Laplace transform ``int_0^T C(t) exp(i omega t) dt``.

    Parameters
    ----------
    samples : array_like
        ``C`` on the uniform grid ``t`` starting at 0.
    omega : float or array_like
    decay_tol : float
        ``|C(T)|`` must not exceed ``decay_tol * max|C|``; otherwise the
        truncation is reported as a :class:`QuadratureError`.
    """
    c = np.asarray(samples, dtype=complex).ravel()
    w = np.asarray(omega, dtype=float)
    if c.size == 0:
        return np.zeros(w.shape, dtype=complex)[()] if w.ndim else 0j
    t = np.asarray(t, dtype=float).ravel()
    if t.shape != c.shape or t.size < 2:
        raise ValueError("samples and time grid must match with >= 2 points")
    dt = np.diff(t)
    if t[0] != 0.0 or np.any(dt <= 0) or np.ptp(dt) > 1e-6 * dt[0]:
        raise ValueError("time grid must be uniform and start at t = 0")
    peak = np.max(np.abs(c))
    if abs(c[-1]) > decay_tol * peak:
        raise QuadratureError(
            f"correlation has not decayed at t={t[-1]:g}: |C|/max = {abs(c[-1]) / peak:.3g}",
            float(abs(c[-1]) / peak))
    if w.ndim == 0:
        return complex(np.trapezoid(c * np.exp(1j * float(w) * t), t))
    out = np.empty(w.shape, dtype=complex)
    for k, wk in np.ndenumerate(w):
        out[k] = np.trapezoid(c * np.exp(1j * wk * t), t)
    return out
