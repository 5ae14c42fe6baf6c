"""Network data model and resolvent assembly.

A network is a set of labelled resonators in the single-excitation sector.
One node is the *system* ``S``; every other node is a bath node carrying an
on-site frequency and a Markovian loss half-width.  Undirected real couplings
connect pairs of nodes.  From this the module assembles the complex matrices

* ``omega*I - H`` over all nodes, system first, and
* the bath resolvent ``M(omega) = omega*I - H_B + i*Gamma`` over bath nodes,

from which every self-energy in the package is derived.  All frequencies,
couplings and losses are plain floats in GHz.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "NetworkSpec",
    "PumpSpec",
    "BathResolvent",
    "Violation",
    "validate",
    "ensure_valid",
    "build_bath_resolvent",
    "build_full_matrix",
]


@dataclass(frozen=True)
class Violation:
    """One broken invariant, with the offending node or edge."""

    where: str
    message: str

    def __str__(self):
        return f"{self.where}: {self.message}"


@dataclass(frozen=True)
class NetworkSpec:
    """Immutable description of a structured-bath network.

    Parameters
    ----------
    labels : tuple of str
        Node identifiers in declaration order.
    omega : tuple of float
        On-site frequency of every node, GHz.
    gamma : tuple of float
        Loss half-width (HWHM) of every node, GHz.  The system entry must be 0.
    couplings : tuple of (str, str, float)
        Undirected edges ``(a, b, J)``.  Absent edges are exact zeros.
    system : str
        Label of the system node.  Defaults to the first label.
    """

    labels: tuple
    omega: tuple
    gamma: tuple
    couplings: tuple = ()
    system: str = ""

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        object.__setattr__(self, "omega", tuple(float(x) for x in self.omega))
        object.__setattr__(self, "gamma", tuple(float(x) for x in self.gamma))
        object.__setattr__(
            self,
            "couplings",
            tuple((str(a), str(b), float(j)) for a, b, j in self.couplings),
        )
        if not self.system and self.labels:
            object.__setattr__(self, "system", self.labels[0])

    @property
    def n_nodes(self) -> int:
        return len(self.labels)

    @property
    def system_index(self) -> int:
        return self.labels.index(self.system)

    @property
    def bath_labels(self) -> tuple:
        return tuple(lab for lab in self.labels if lab != self.system)

    @property
    def omega_system(self) -> float:
        return self.omega[self.system_index]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown node {label!r}") from None

    def bath_index(self, label: str) -> int:
        """Position of a bath node inside the bath resolvent."""
        try:
            return self.bath_labels.index(label)
        except ValueError:
            raise KeyError(f"{label!r} is not a bath node") from None

    def find_edge(self, a: str, b: str):
        """Index of the edge joining ``a`` and ``b`` (either orientation), or None."""
        for k, (x, y, _) in enumerate(self.couplings):
            if {x, y} == {a, b} and (x != y or a == b):
                return k
        return None

    def coupling(self, a: str, b: str) -> float:
        k = self.find_edge(a, b)
        return 0.0 if k is None else self.couplings[k][2]

    def with_coupling(self, a: str, b: str, value: float) -> "NetworkSpec":
        """Copy with edge ``a``-``b`` set to ``value`` (added if absent)."""
        edges = list(self.couplings)
        k = self.find_edge(a, b)
        if k is None:
            edges.append((a, b, value))
        else:
            x, y, _ = edges[k]
            edges[k] = (x, y, value)
        return replace(self, couplings=tuple(edges))

    def with_omega(self, label: str, value: float) -> "NetworkSpec":
        omega = list(self.omega)
        omega[self.index(label)] = value
        return replace(self, omega=tuple(omega))

    def with_gamma(self, label: str, value: float) -> "NetworkSpec":
        gamma = list(self.gamma)
        gamma[self.index(label)] = value
        return replace(self, gamma=tuple(gamma))

    def scale_couplings(self, edges: Iterable[int], factor: float) -> "NetworkSpec":
        """Copy with the listed edge indices multiplied by ``factor``."""
        chosen = set(edges)
        new = tuple(
            (a, b, j * factor) if k in chosen else (a, b, j)
            for k, (a, b, j) in enumerate(self.couplings)
        )
        return replace(self, couplings=new)

    def coupling_matrix(self) -> np.ndarray:
        """Dense real symmetric coupling matrix in declaration order."""
        n = self.n_nodes
        out = np.zeros((n, n))
        for a, b, j in self.couplings:
            i, k = self.index(a), self.index(b)
            out[i, k] = j
            out[k, i] = j
        return out

    def bath_arrays(self):
        """Arrays consumed by the resolvent kernels.

        Returns
        -------
        omega_s : float
        omega_b, gamma_b : (n,) float arrays over bath nodes
        j_bath : (n, n) float array, zero diagonal
        j_sb : (n,) float array of system-bath couplings
        """
        order = [self.index(lab) for lab in self.bath_labels]
        full = self.coupling_matrix()
        s = self.system_index
        omega = np.asarray(self.omega)
        gamma = np.asarray(self.gamma)
        j_bath = np.ascontiguousarray(full[np.ix_(order, order)])
        j_sb = np.ascontiguousarray(full[s, order])
        return (
            float(omega[s]),
            np.ascontiguousarray(omega[order]),
            np.ascontiguousarray(gamma[order]),
            j_bath,
            j_sb,
        )


@dataclass(frozen=True)
class PumpSpec:
    """Parametric pump acting as a linear dressing of one coupling.

    The dressed coupling is ``J + g*P``.  ``delta_omega3`` shifts the on-site
    frequency of the driven node, which is the first endpoint of ``edge``.
    """

    edge: tuple = ("B3", "B4")
    g: float = 0.0
    p: float = 0.0
    delta_omega3: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "edge", tuple(str(x) for x in self.edge))
        object.__setattr__(self, "g", float(self.g))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "delta_omega3", float(self.delta_omega3))

    @property
    def driven_node(self) -> str:
        return self.edge[0]

    def at(self, p: float) -> "PumpSpec":
        return replace(self, p=float(p))

    def problems(self, spec: NetworkSpec | None = None) -> list:
        out = []
        if len(self.edge) != 2:
            out.append(Violation("pump.edge", "must name exactly two nodes"))
        if not math.isfinite(self.p) or self.p < 0:
            out.append(Violation("pump.p", f"amplitude must be finite and >= 0, got {self.p}"))
        if not math.isfinite(self.g):
            out.append(Violation("pump.g", "must be finite"))
        if not math.isfinite(self.delta_omega3):
            out.append(Violation("pump.delta_omega3", "must be finite"))
        if spec is not None and len(self.edge) == 2:
            if spec.find_edge(*self.edge) is None:
                a, b = self.edge
                out.append(Violation(f"pump.edge {a}-{b}", "edge does not exist in the network"))
        return out


@dataclass(frozen=True)
class BathResolvent:
    """Complex symmetric bath resolvent ``M(omega)`` over bath nodes."""

    matrix: np.ndarray = field(repr=False)
    omega: float
    labels: tuple = ()


def validate(spec: NetworkSpec) -> list:
    """Return every invariant violation of ``spec``; empty means valid."""
    out = []
    n = len(spec.labels)
    if n == 0:
        return [Violation("nodes", "network has no nodes")]
    seen = set()
    for lab in spec.labels:
        if lab in seen:
            out.append(Violation(f"node {lab}", "duplicate label"))
        seen.add(lab)
    if spec.system not in seen:
        out.append(Violation("system", f"system node {spec.system!r} is not declared"))
    if len(spec.omega) != n:
        out.append(Violation("omega", f"length {len(spec.omega)} != node count {n}"))
    if len(spec.gamma) != n:
        out.append(Violation("gamma", f"length {len(spec.gamma)} != node count {n}"))
    for lab, w in zip(spec.labels, spec.omega):
        if not math.isfinite(w):
            out.append(Violation(f"omega[{lab}]", f"frequency must be finite, got {w}"))
    for lab, g in zip(spec.labels, spec.gamma):
        if not math.isfinite(g):
            out.append(Violation(f"gamma[{lab}]", f"loss must be finite, got {g}"))
        elif lab == spec.system:
            if g != 0.0:
                out.append(Violation(f"gamma[{lab}]", "system node carries no intrinsic loss"))
        elif g < 0:
            out.append(Violation(f"gamma[{lab}]", f"loss must be >= 0, got {g}"))
    pairs = {}
    for a, b, j in spec.couplings:
        tag = f"edge {a}-{b}"
        for end in (a, b):
            if end not in seen:
                out.append(Violation(tag, f"endpoint {end!r} is not a declared label"))
        if a == b:
            out.append(Violation(tag, "self-edge (coupling matrix must have zero diagonal)"))
        key = frozenset((a, b))
        if key in pairs:
            out.append(Violation(tag, f"duplicate of edge {pairs[key]}"))
        else:
            pairs[key] = f"{a}-{b}"
        if not math.isfinite(j):
            out.append(Violation(tag, f"coupling must be finite, got {j}"))
    return out


def ensure_valid(spec: NetworkSpec) -> NetworkSpec:
    from .errors import ValidationError

    problems = validate(spec)
    if problems:
        raise ValidationError(problems)
    return spec


def _diag_entry(omega: float, w: float, g: float) -> complex:
    # Shared by both assemblies so the bath block is bit-identical.
    return complex(omega - w, g)


def build_bath_resolvent(spec: NetworkSpec, omega: float) -> BathResolvent:
    """Assemble ``M(omega) = omega*I - H_B + i*Gamma`` over the bath nodes.

    Diagonal entries are ``omega - omega_i + i*gamma_i`` and off-diagonal
    entries ``-J_ij``.  The result is complex symmetric, not Hermitian.
    """
    ensure_valid(spec)
    omega = float(omega)
    _, w_b, g_b, j_b, _ = spec.bath_arrays()
    n = len(w_b)
    m = np.empty((n, n), dtype=complex)
    m[...] = -j_b
    for i in range(n):
        m[i, i] = _diag_entry(omega, w_b[i], g_b[i])
    return BathResolvent(matrix=m, omega=omega, labels=spec.bath_labels)


def build_full_matrix(spec: NetworkSpec, omega: float) -> np.ndarray:
    """Assemble ``omega*I - H`` with the system node first, bath nodes after.

    The lower-right block is exactly :func:`build_bath_resolvent`'s matrix;
    the first row and column carry ``-J_SB``.
    """
    ensure_valid(spec)
    omega = float(omega)
    w_s, _, _, _, j_sb = spec.bath_arrays()
    bath = build_bath_resolvent(spec, omega).matrix
    n = bath.shape[0]
    out = np.empty((n + 1, n + 1), dtype=complex)
    out[0, 0] = omega - w_s
    out[0, 1:] = -j_sb
    out[1:, 0] = -j_sb
    out[1:, 1:] = bath
    return out


def network_from_arrays(
    labels: Sequence[str],
    omega: Sequence[float],
    gamma: Sequence[float],
    couplings: Sequence[tuple],
    system: str | None = None,
) -> NetworkSpec:
    """Convenience constructor; ``system`` defaults to the first label."""
    return NetworkSpec(
        labels=tuple(labels),
        omega=tuple(omega),
        gamma=tuple(gamma),
        couplings=tuple(couplings),
        system=system or labels[0],
    )
