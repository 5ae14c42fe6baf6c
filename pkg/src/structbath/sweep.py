"""Preset networks, pump dressing and parameter-by-frequency gain maps.

The six-node layout is one system node ``S``, a first bath layer ``B1, B2``
and a triangular second layer ``B3, B4, B5``.  A sweep varies one parameter
over a list of values and, for each value, evaluates the transfer gain
``|G_{B3<-S}(omega)|**2`` on a frequency grid.  The ridge of each row is the
grid frequency of maximum gain.
"""
from __future__ import annotations

import datetime as _dt
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__, kernel
from .errors import ValidationError
from .network import NetworkSpec, PumpSpec, ensure_valid

__all__ = [
    "PRESET_NAMES",
    "AXIS_KINDS",
    "DEFAULT_OMEGA_MIN",
    "DEFAULT_OMEGA_MAX",
    "DEFAULT_OMEGA_POINTS",
    "DEFAULT_AXIS_POINTS",
    "Preset",
    "SweepAxis",
    "SweepResult",
    "default_omega_grid",
    "preset",
    "apply_pump",
    "spec_at",
    "run_sweep",
    "extract_ridge",
    "passivity_violations",
]

DEFAULT_OMEGA_MIN = 5.8
DEFAULT_OMEGA_MAX = 7.6
DEFAULT_OMEGA_POINTS = 601
DEFAULT_AXIS_POINTS = 121
PUMP_RANGE = (0.0, 6.0)

BASELINE_OMEGA = (6.0, 6.5, 6.7, 7.0, 7.2, 7.4)
LABELS = ("S", "B1", "B2", "B3", "B4", "B5")
LAYER1 = ("B1", "B2")
LAYER2 = ("B3", "B4", "B5")
GAMMA_LOW = 1e-3
GAMMA_HIGH = 2e-2

# column orders of the parameter table
SB_EDGES = (("S", "B1"), ("S", "B2"))
L1_EDGE = ("B1", "B2")
L1L2_EDGES = (("B1", "B3"), ("B1", "B4"), ("B2", "B4"), ("B2", "B5"))
L2_EDGES = (("B3", "B4"), ("B4", "B5"), ("B3", "B5"))

AXIS_KINDS = ("J_L1L2-scale", "J_L2-scale", "J_SB-scale", "gamma1", "gamma2", "pump-P")


@dataclass(frozen=True)
class SweepAxis:
    """One swept parameter and its ordered values.

    ``parameter`` is one of :data:`AXIS_KINDS` or ``"edge:<a>-<b>"``.  Scale
    parameters multiply a whole coupling group; ``edge`` sets one coupling.
    """

    parameter: str
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValueError("sweep axis needs at least one value")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("sweep axis values must be finite")
        if self.parameter not in AXIS_KINDS:
            if not self.parameter.startswith("edge:") or len(self.edge) != 2:
                raise ValueError(f"unknown sweep parameter {self.parameter!r}")
        if self.parameter == "pump-P" and min(self.values) < 0:
            raise ValueError("pump amplitude must be >= 0")

    @property
    def edge(self) -> tuple:
        return tuple(self.parameter[len("edge:"):].split("-"))

    @classmethod
    def linspace(cls, parameter, start, stop, steps=DEFAULT_AXIS_POINTS):
        return cls(parameter, tuple(np.linspace(start, stop, int(steps))))


@dataclass(frozen=True)
class Preset:
    name: str
    spec: NetworkSpec
    pump: PumpSpec
    output_node: str = "B3"
    description: str = ""
    layer1: tuple = LAYER1
    layer2: tuple = LAYER2
    default_axis: SweepAxis | None = None


@dataclass(frozen=True)
class SweepResult:
    """Gain map over (axis value, frequency) with its ridge line.

    Missing cells (numerically singular) are NaN in ``grid``.
    """

    axis: SweepAxis
    omega_grid: np.ndarray
    grid: np.ndarray
    ridge: np.ndarray
    meta: dict = field(default_factory=dict)
    sigma: np.ndarray | None = field(default=None, repr=False, compare=False)
    g_transfer: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def shape(self):
        return self.grid.shape

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.grid)


def default_omega_grid(omega_min=DEFAULT_OMEGA_MIN, omega_max=DEFAULT_OMEGA_MAX,
                       points=DEFAULT_OMEGA_POINTS) -> np.ndarray:
    return np.linspace(float(omega_min), float(omega_max), int(points))


def _six_node(omega, j_sb, j12, j_l1l2, j_l2, gamma_l1=GAMMA_LOW, gamma_l2=GAMMA_LOW):
    edges = [(a, b, j) for (a, b), j in zip(SB_EDGES, j_sb)]
    edges.append((*L1_EDGE, j12))
    edges += [(a, b, j) for (a, b), j in zip(L1L2_EDGES, j_l1l2)]
    edges += [(a, b, j) for (a, b), j in zip(L2_EDGES, j_l2)]
    gamma = (0.0, gamma_l1, gamma_l1, gamma_l2, gamma_l2, gamma_l2)
    return NetworkSpec(LABELS, tuple(omega), gamma, tuple(edges), "S")


# name: (description, omega, J_SB, J_B1B2, J_L1L2, J_L2, pump g)
_TABLE = {
    "C1": ("Transparent baseline", BASELINE_OMEGA, (0.05, 0.05), 0.03,
           (0.03, 0.03, 0.03, 0.03), (0.03, 0.03, 0.03), 0.00),
    "C2": ("Weak structure (L1 only)", BASELINE_OMEGA, (0.10, 0.10), 0.20,
           (0.10, 0.08, 0.00, 0.00), (0.03, 0.03, 0.03), 0.00),
    "C3": ("Structured passive (L1->L2)", BASELINE_OMEGA, (0.16, 0.16), 0.30,
           (0.35, 0.30, 0.20, 0.20), (0.08, 0.06, 0.05), 0.00),
    "C4": ("Pump onset (+15 MHz B3)", (6.0, 6.5, 6.7, 7.015, 7.2, 7.4), (0.26, 0.24), 0.40,
           (0.45, 0.40, 0.35, 0.35), (0.10, 0.08, 0.07), 0.20),
    "C5": ("Pump (coupling modulation)", BASELINE_OMEGA, (0.26, 0.26), 0.45,
           (0.50, 0.45, 0.40, 0.40), (0.12, 0.10, 0.08), 0.20),
    "C6": ("Asymmetric SB + mixed detune", (6.0, 6.49, 6.71, 7.015, 7.20, 7.40), (0.32, 0.16), 0.50,
           (0.50, 0.42, 0.36, 0.36), (0.12, 0.09, 0.08), 0.30),
    "C7": ("Triangle imbalance", (6.0, 6.5, 6.7, 7.010, 7.200, 6.990), (0.22, 0.22), 0.40,
           (0.42, 0.38, 0.28, 0.28), (0.14, 0.02, 0.10), 0.00),
    "C8": ("Phase-matched (+20 MHz S,B1,B2,B3)", (6.020, 6.520, 6.720, 7.020, 7.200, 7.400),
           (0.24, 0.24), 0.45, (0.48, 0.44, 0.34, 0.34), (0.10, 0.08, 0.06), 0.00),
    "C9": ("Max gain and saturation", (6.0, 6.505, 6.705, 7.035, 7.230, 7.410), (0.32, 0.32), 0.55,
           (0.60, 0.55, 0.50, 0.50), (0.16, 0.14, 0.12), 0.55),
}

PRESET_NAMES = tuple(_TABLE) + ("FIG1", "FIG2", "FIG3")


def preset(name: str) -> Preset:
    """Return the named parameterisation (``C1`` ... ``C9``, ``FIG1`` ... ``FIG3``).

    All bath losses are ``1e-3`` GHz except ``FIG3``, whose second layer uses
    ``2e-2``.  ``FIG2`` is ``C3`` with a default interlayer-coupling sweep.
    """
    key = str(name).upper()
    if key in _TABLE:
        desc, omega, j_sb, j12, j_l1l2, j_l2, g = _TABLE[key]
        spec = _six_node(omega, j_sb, j12, j_l1l2, j_l2)
        return Preset(key, spec, PumpSpec(("B3", "B4"), g=g), description=desc)
    if key == "FIG1":
        spec = _six_node(BASELINE_OMEGA, (0.005, 0.01), 0.05,
                         (0.055, 0.055, 0.055, 0.055), (0.01, 0.01, 0.01))
        return Preset(key, spec, PumpSpec(("B3", "B4"), g=0.0),
                      description="Isolated-system transparent baseline")
    if key == "FIG2":
        base = preset("C3")
        top = max(abs(j) for a, b, j in base.spec.couplings
                  if (a, b) in L1L2_EDGES)
        axis = SweepAxis.linspace("J_L1L2-scale", 0.05 / top, 0.30 / top)
        return replace(base, name=key, default_axis=axis,
                       description="Structured regime and coherent breathing (C3 geometry)")
    if key == "FIG3":
        spec = _six_node(BASELINE_OMEGA, (0.30, 0.26), 0.4, (0.45,) * 4, (0.15,) * 3,
                         gamma_l1=GAMMA_LOW, gamma_l2=GAMMA_HIGH)
        axis = SweepAxis.linspace("pump-P", *PUMP_RANGE)
        return Preset(key, spec, PumpSpec(("B3", "B4"), g=0.2),
                      description="Pump-driven amplification and gain tongue",
                      default_axis=axis)
    raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")


def apply_pump(spec: NetworkSpec, pump: PumpSpec) -> NetworkSpec:
    """Dress the pumped coupling ``J -> J + g*P`` and shift the driven node.

    Returns a new spec; ``spec`` is untouched.

    Raises
    ------
    ValidationError
        If ``P < 0`` or the pumped edge is absent.
    """
    problems = pump.problems(spec)
    if problems:
        raise ValidationError(problems)
    a, b = pump.edge
    out = spec
    if pump.p != 0.0:
        out = out.with_coupling(a, b, spec.coupling(a, b) + pump.g * pump.p)
    if pump.delta_omega3 != 0.0:
        node = pump.driven_node
        out = out.with_omega(node, spec.omega[spec.index(node)] + pump.delta_omega3)
    return out


def _group(p: Preset, kind: str) -> list:
    s = p.spec.system
    l1, l2 = set(p.layer1), set(p.layer2)
    out = []
    for k, (a, b, _) in enumerate(p.spec.couplings):
        ends = {a, b}
        if kind == "J_SB-scale" and s in ends:
            out.append(k)
        elif kind == "J_L1L2-scale" and len(ends & l1) == 1 and len(ends & l2) == 1:
            out.append(k)
        elif kind == "J_L2-scale" and ends <= l2 and a != b:
            out.append(k)
    return out


def spec_at(p: Preset, axis: SweepAxis, value: float) -> NetworkSpec:
    """Network evaluated at one axis value.

    Outside a pump scan the pump is not applied at all (``P = 0``).
    """
    kind = axis.parameter
    spec = p.spec
    if kind == "pump-P":
        return apply_pump(spec, p.pump.at(value))
    if kind in ("J_SB-scale", "J_L1L2-scale", "J_L2-scale"):
        return spec.scale_couplings(_group(p, kind), value)
    if kind in ("gamma1", "gamma2"):
        for lab in (p.layer1 if kind == "gamma1" else p.layer2):
            spec = spec.with_gamma(lab, value)
        return spec
    a, b = axis.edge
    return spec.with_coupling(a, b, value)


def extract_ridge(row, omega_grid) -> float:
    """Grid frequency of maximum gain; NaN cells are ignored.

    Ties go to the lowest frequency.

    Raises
    ------
    ValueError
        If the row is empty or every cell is missing.
    """
    row = np.asarray(row, dtype=float)
    omega_grid = np.asarray(omega_grid, dtype=float)
    if row.size == 0 or row.shape != omega_grid.shape:
        raise ValueError("row must be nonempty and match the frequency grid")
    ok = ~np.isnan(row)
    if not ok.any():
        raise ValueError("every cell of the row is missing")
    top = row[ok].max()
    return float(omega_grid[ok & (row == top)].min())


def _row(p: Preset, axis: SweepAxis, omega_grid: np.ndarray, value: float):
    spec = ensure_valid(spec_at(p, axis, value))
    w_s, w_b, g_b, j_b, j_sb = spec.bath_arrays()
    sigma, _, gtr, status, _ = kernel.resolve_grid(
        w_s, w_b, g_b, j_b, j_sb, spec.bath_index(p.output_node), omega_grid)
    gains = np.abs(gtr) ** 2
    gains[status != kernel.OK] = np.nan
    return gains, sigma, gtr


def _pump_state(p: Preset, axis: SweepAxis) -> dict:
    state = asdict(p.pump)
    state["edge"] = list(state["edge"])
    if axis.parameter == "pump-P":
        state["p"] = "swept"
        state["applied"] = True
    else:
        state["p"] = 0.0
        state["applied"] = False
    return state


def run_sweep(p: Preset, axis: SweepAxis, omega_grid=None, workers: int = 1) -> SweepResult:
    """Evaluate the gain map of ``p`` over ``axis`` x ``omega_grid``.

    Rows are independent and may run on ``workers`` threads; the result does
    not depend on the schedule.  Singular cells are recorded as NaN and never
    abort the sweep.
    """
    omega_grid = default_omega_grid() if omega_grid is None else np.array(omega_grid, dtype=float)
    if omega_grid.ndim != 1 or omega_grid.size == 0 or np.any(np.diff(omega_grid) <= 0):
        raise ValueError("frequency grid must be nonempty and strictly increasing")
    ensure_valid(p.spec)
    p.spec.bath_index(p.output_node)

    def job(v):
        return _row(p, axis, omega_grid, v)

    if workers > 1 and len(axis.values) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(job, axis.values))
    else:
        rows = [job(v) for v in axis.values]
    grid = np.vstack([r[0] for r in rows])
    sigma = np.vstack([r[1] for r in rows])
    gtr = np.vstack([r[2] for r in rows])
    ridge = np.array([
        extract_ridge(r, omega_grid) if not np.isnan(r).all() else np.nan for r in grid
    ])
    meta = {
        "preset": p.name,
        "output_node": p.output_node,
        "pump": _pump_state(p, axis),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "version": __version__,
        "backend": kernel.get_backend(),
    }
    return SweepResult(axis, omega_grid, grid, ridge, meta, sigma, gtr)


def passivity_violations(result: SweepResult, fraction: float = 0.01, seed: int = 0,
                         tol: float = 1e-14) -> list:
    """Spot-check ``Im Sigma <= tol`` on a random ``fraction`` of cells.

    Returns the ``(row, column)`` indices that fail.
    """
    if result.sigma is None:
        raise ValueError("result carries no self-energy samples")
    rng = np.random.default_rng(seed)
    total = result.sigma.size
    count = max(1, int(round(fraction * total)))
    cells = rng.choice(total, size=min(count, total), replace=False)
    flat = result.sigma.ravel()
    bad = [int(c) for c in cells if np.isfinite(flat[c]) and flat[c].imag > tol]
    return [divmod(c, result.sigma.shape[1]) for c in sorted(bad)]
