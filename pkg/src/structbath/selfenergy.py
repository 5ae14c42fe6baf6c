"""System self-energy, Green's functions and transfer gain.

Eliminating the bath nodes of a :class:`~structbath.network.NetworkSpec`
leaves the system with the self-energy

    Sigma_S(omega) = J_SB^T M(omega)^-1 J_SB,

with ``M`` the bath resolvent.  ``Sigma_S`` is evaluated by solving
``M x = J_SB``; only :func:`full_resolvent_oracle` ever forms an inverse, and
it exists to check everything else.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .errors import SingularityError
from .network import NetworkSpec, build_full_matrix, ensure_valid

__all__ = [
    "ChainParams",
    "SelfEnergySample",
    "SpectrumTrace",
    "sigma_chain",
    "chain_network",
    "sigma_network",
    "green_system",
    "green_transfer",
    "gain",
    "evaluate",
    "spectrum",
    "full_resolvent_oracle",
    "oracle_sigma",
]

DEFAULT_OUTPUT = "B3"


@dataclass(frozen=True)
class ChainParams:
    """Two-layer chain ``S - L1 - L2`` with Markovian losses on both layers."""

    j_sl1: float
    j_l12: float
    omega_l1: float
    omega_l2: float
    gamma1: float
    gamma2: float

    def __post_init__(self):
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ValueError("chain losses must be >= 0")


@dataclass(frozen=True)
class SelfEnergySample:
    omega: float
    sigma: complex
    g_ss: complex
    g_transfer: complex
    gain: float


@dataclass(frozen=True)
class SpectrumTrace:
    """Self-energy, Green's functions and gain on a frequency grid.

    Cells the kernel flagged as singular hold NaN; ``status`` keeps the flag.
    """

    omega: np.ndarray
    sigma: np.ndarray
    g_ss: np.ndarray
    g_transfer: np.ndarray
    gain: np.ndarray
    status: np.ndarray = field(default=None, repr=False)
    output_node: str = DEFAULT_OUTPUT

    def __len__(self):
        return len(self.omega)

    def sample(self, k: int) -> SelfEnergySample:
        return SelfEnergySample(float(self.omega[k]), complex(self.sigma[k]),
                                complex(self.g_ss[k]), complex(self.g_transfer[k]),
                                float(self.gain[k]))


def sigma_chain(p: ChainParams, omega: float) -> complex:
    """Closed-form self-energy of the two-layer chain.

    Returns ``J_SL1**2 / (omega - omega_L1 + i*gamma1 - J_L12**2 / (omega - omega_L2 + i*gamma2))``.

    Raises
    ------
    SingularityError
        If the L2 (inner) or L1 (outer) denominator vanishes exactly.
    """
    if p.j_sl1 == 0.0:
        return 0j
    inner = complex(omega - p.omega_l2, p.gamma2)
    if p.j_l12 == 0.0:
        feedback = 0.0
    else:
        if inner == 0:
            raise SingularityError("chain denominator vanishes at layer L2", omega, "L2")
        feedback = p.j_l12 ** 2 / inner
    outer = complex(omega - p.omega_l1, p.gamma1) - feedback
    if outer == 0:
        raise SingularityError("chain denominator vanishes at layer L1", omega, "L1")
    return p.j_sl1 ** 2 / outer


def chain_network(p: ChainParams, omega_s: float = 6.0) -> NetworkSpec:
    """The three-node network ``S, L1, L2`` equivalent to ``p``."""
    return NetworkSpec(
        labels=("S", "L1", "L2"),
        omega=(omega_s, p.omega_l1, p.omega_l2),
        gamma=(0.0, p.gamma1, p.gamma2),
        couplings=(("S", "L1", p.j_sl1), ("L1", "L2", p.j_l12)),
        system="S",
    )


def _output_index(spec: NetworkSpec, output_node) -> int:
    if output_node is None:
        return -1
    try:
        return spec.bath_index(output_node)
    except KeyError:
        raise KeyError(f"output node {output_node!r} is not a bath node of the network") from None


def _resolve(spec: NetworkSpec, omegas, output_node, rcond_min):
    ensure_valid(spec)
    w_s, w_b, g_b, j_b, j_sb = spec.bath_arrays()
    out = _output_index(spec, output_node)
    return kernel.resolve_grid(w_s, w_b, g_b, j_b, j_sb, out,
                               np.atleast_1d(np.asarray(omegas, dtype=float)),
                               rcond_min=rcond_min)


def _raise_for(status, rcond, omega):
    if status == kernel.SINGULAR_BATH:
        raise SingularityError(
            f"bath resolvent singular at omega={omega!r} (rcond estimate {rcond:.3g})",
            omega, "M")
    if status == kernel.SYSTEM_POLE:
        raise SingularityError(f"system Green's function pole hit at omega={omega!r}", omega, "G_SS")


def evaluate(spec: NetworkSpec, omega: float, output_node=DEFAULT_OUTPUT,
             rcond_min=kernel.RCOND_MIN) -> SelfEnergySample:
    """All single-frequency quantities from one factorisation of ``M``."""
    sigma, gss, gtr, status, rcond = _resolve(spec, [omega], output_node, rcond_min)
    _raise_for(status[0], rcond[0], float(omega))
    return SelfEnergySample(float(omega), complex(sigma[0]), complex(gss[0]),
                            complex(gtr[0]), float(np.abs(gtr[0]) ** 2))


def sigma_network(spec: NetworkSpec, omega: float, rcond_min=kernel.RCOND_MIN) -> complex:
    """Schur-complement self-energy ``J_SB^T M^-1 J_SB`` at one frequency.

    Raises
    ------
    SingularityError
        If ``M`` is singular or its reciprocal condition estimate is below
        ``rcond_min``.  A pole of ``G_SS`` does not affect ``Sigma``.
    """
    sigma, _, _, status, rcond = _resolve(spec, [omega], None, rcond_min)
    if status[0] == kernel.SINGULAR_BATH:
        _raise_for(status[0], rcond[0], float(omega))
    return complex(sigma[0])


def green_system(spec: NetworkSpec, omega: float) -> complex:
    """``G_SS = 1 / (omega - omega_S - Sigma_S(omega))``."""
    sigma, gss, _, status, rcond = _resolve(spec, [omega], None, kernel.RCOND_MIN)
    _raise_for(status[0], rcond[0], float(omega))
    return complex(gss[0])


def green_transfer(spec: NetworkSpec, omega: float, output_node=DEFAULT_OUTPUT) -> complex:
    """Transfer Green's function ``G_{out<-S} = (M^-1 J_SB)[out] * G_SS``."""
    return evaluate(spec, omega, output_node).g_transfer


def gain(spec: NetworkSpec, omega: float, output_node=DEFAULT_OUTPUT) -> float:
    """Power transferred from the system to ``output_node``: ``|G_{out<-S}|**2``."""
    return evaluate(spec, omega, output_node).gain


def spectrum(spec: NetworkSpec, omegas, output_node=DEFAULT_OUTPUT,
             strict=True, rcond_min=kernel.RCOND_MIN) -> SpectrumTrace:
    """Evaluate the spectrum on a grid.

    With ``strict`` a flagged cell raises :class:`SingularityError`; otherwise
    the cell is left as NaN and reported through ``status``.
    """
    omegas = np.array(omegas, dtype=float).ravel()
    sigma, gss, gtr, status, rcond = _resolve(spec, omegas, output_node, rcond_min)
    if strict:
        bad = np.flatnonzero(status != kernel.OK)
        if bad.size:
            k = bad[0]
            _raise_for(status[k], rcond[k], float(omegas[k]))
    gain_ = np.abs(gtr) ** 2
    return SpectrumTrace(omegas, sigma, gss, gtr, gain_, status,
                         output_node if output_node is not None else "")


def full_resolvent_oracle(spec: NetworkSpec, omega: float) -> np.ndarray:
    """Dense inverse ``(omega*I - H)^-1``, system first.  Validation only."""
    a = build_full_matrix(spec, omega)
    try:
        return np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise SingularityError(f"omega*I - H is singular at omega={omega!r}", omega, "H") from exc


def oracle_sigma(spec: NetworkSpec, omega: float) -> complex:
    """``omega - omega_S - 1/G_SS`` read off the full inverse."""
    g = full_resolvent_oracle(spec, omega)
    return complex(omega - spec.omega_system - 1.0 / g[0, 0])
