"""Room temperature scheduling with on/off coolers.

Room ``i`` has temperatures ``T_i(0..H)`` (continuous, kept in a deadband)
and switches ``u_i(0..H-1)`` (binary). Every step, a room moves toward the
average of itself, its neighbours and the ambient temperature, and drops by
``-b_i`` when its cooler is on. The cost is the energy price times the
switches plus an optional comfort penalty ``gamma (T - T_ref)**p``.

The dynamics couple rooms through both temperatures and switches, so each
switch gets a continuous copy that carries the coupling, tied to the switch
by an absolute-value penalty.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .model import DEFAULT_PENALTY, Affine, BlockSpec, CouplingConstraint, Power, StructuredMicp, reformulate_integer_coupling

log = logging.getLogger(__name__)

HIGH_PRICE, LOW_PRICE, MEDIUM_PRICE = 25.67, 2.46, 4.62
HIGH_WINDOWS = ((6, 12), (29, 35))
COPY_TOL = 1e-6


def price_profile(H: int) -> np.ndarray:
    """High price on steps 6-12 and 29-35; elsewhere low and medium alternate every 6 steps."""
    c = np.where((np.arange(H) // 6) % 2 == 0, LOW_PRICE, MEDIUM_PRICE).astype(float)
    for lo, hi in HIGH_WINDOWS:
        c[lo : min(hi, H - 1) + 1] = HIGH_PRICE
    return c


def topology(name: str, rooms: int) -> np.ndarray:
    """Adjacency matrix for ``three-room`` (triangle), ``four-room`` (4-cycle) or ``linear-n`` (path)."""
    adj = np.zeros((rooms, rooms), dtype=int)
    if name == "three-room":
        if rooms != 3:
            raise ValueError("three-room topology needs 3 rooms")
        adj[:] = 1 - np.eye(3, dtype=int)
    elif name == "four-room":
        if rooms != 4:
            raise ValueError("four-room topology needs 4 rooms")
        for i in range(4):
            adj[i, (i + 1) % 4] = adj[(i + 1) % 4, i] = 1
    elif name.startswith("linear"):
        for i in range(rooms - 1):
            adj[i, i + 1] = adj[i + 1, i] = 1
    elif name == "isolated":
        pass
    else:
        raise ValueError(f"unknown topology {name!r}")
    return adj


def default_topology(rooms: int) -> str:
    return {3: "three-room", 4: "four-room"}.get(rooms, f"linear-{rooms}")


def synth_ambient(H: int, mean: float = 22.0, amplitude: float = 6.0, phase: float = -6.0) -> np.ndarray:
    if not all(math.isfinite(v) for v in (mean, amplitude, phase)):
        raise ValueError("ambient parameters must be finite")
    t = np.arange(H + 1)
    return mean + amplitude * np.sin(2 * np.pi * (t + phase) / 24)


def load_ambient(path, H: int | None = None) -> np.ndarray:
    """Read one temperature per row; a non-numeric first row is taken as a header."""
    values = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not row[0].strip():
                continue
            try:
                values.append(float(row[0]))
            except ValueError:
                if lineno == 1 and not values:
                    continue
                raise ValueError(f"{path}:{lineno}: cannot parse {row[0]!r} as a temperature") from None
    arr = np.array(values)
    if H is not None:
        if arr.size < H + 1:
            raise ValueError(f"{path}: {arr.size} values, horizon {H} needs {H + 1}")
        arr = arr[: H + 1]
    return arr


def default_ambient(H: int) -> np.ndarray:
    """The bundled synthetic ambient profile (two days, hourly)."""
    ref = resources.files("padoa") / "data" / "ambient_synthetic.csv"
    with resources.as_file(ref) as path:
        return load_ambient(Path(path), H)


def _per_room(v, R: int, name: str) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(v, dtype=float), (R,)).copy()
    if arr.shape != (R,):
        raise ValueError(f"{name} needs one value or {R}")
    return arr


@dataclass
class TclConfig:
    rooms: int = 3
    horizon: int = 8
    topology: str | np.ndarray | None = None
    gamma: float = 0.0
    order: int = 2
    prices: np.ndarray | None = None
    t_min: float | np.ndarray = 18.0
    t_max: float | np.ndarray = 24.0
    a: float | np.ndarray = 0.2
    b: float | np.ndarray = -2.0
    t0: float | np.ndarray = 20.0
    t_ref: float | np.ndarray = 21.0
    ambient: np.ndarray | None = None
    penalty: float = DEFAULT_PENALTY
    adjacency: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        R, H = int(self.rooms), int(self.horizon)
        if R < 1 or H < 1:
            raise ValueError("need at least one room and one step")
        if self.order not in (2, 4):
            raise ValueError("comfort order must be 2 or 4")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        topo = default_topology(R) if self.topology is None else self.topology
        adj = topology(topo, R) if isinstance(topo, str) else np.asarray(topo, dtype=int)
        if adj.shape != (R, R) or np.any(adj != adj.T) or np.any(np.diag(adj)):
            raise ValueError("adjacency must be symmetric with zero diagonal")
        self.adjacency = adj
        self.prices = price_profile(H) if self.prices is None else np.asarray(self.prices, dtype=float)
        if self.prices.size < H:
            raise ValueError(f"need {H} prices")
        self.ambient = default_ambient(H) if self.ambient is None else np.asarray(self.ambient, dtype=float)
        if self.ambient.size < H + 1:
            raise ValueError(f"ambient profile has {self.ambient.size} values, horizon {H} needs {H + 1}")
        for name in ("t_min", "t_max", "a", "b", "t0"):
            setattr(self, name, _per_room(getattr(self, name), R, name))
        self.t_ref = np.broadcast_to(np.asarray(self.t_ref, dtype=float), (H,)).copy()
        if np.any(self.t_min >= self.t0) or np.any(self.t0 >= self.t_max):
            raise ValueError("initial temperature must lie strictly inside the deadband")


def generate(config: TclConfig) -> StructuredMicp:
    """Build the scheduling problem with switch copies already in place."""
    cfg = config
    R, H = cfg.rooms, cfg.horizon
    nT = H + 1
    blocks = []
    for i in range(R):
        lb = np.full(nT, cfg.t_min[i])
        ub = np.full(nT, cfg.t_max[i])
        lb[0] = ub[0] = cfg.t0[i]
        terms = [Affine(np.concatenate([np.zeros(nT), cfg.prices[:H]]))]
        if cfg.gamma > 0:
            for t in range(H):
                q = np.zeros(nT + H)
                q[t] = 1.0
                terms.append(Power(q, cfg.t_ref[t], cfg.order, cfg.gamma))
        blocks.append(BlockSpec(nT, H, lb, ub, np.zeros(H), np.ones(H), terms=tuple(terms)))
    trip, int_trip, rhs = [], [], []
    row = 0
    for i in range(R):
        nbrs = np.flatnonzero(cfg.adjacency[i])
        w = cfg.a[i] / (len(nbrs) + 2)
        for t in range(H):
            trip.append((row, i * nT + t + 1, 1.0))
            trip.append((row, i * nT + t, -1.0 - w + cfg.a[i]))
            for j in nbrs:
                trip.append((row, int(j) * nT + t, -w))
            int_trip.append((row, i * H + t, -cfg.b[i]))
            rhs.append(w * cfg.ambient[t])
            row += 1
    base = StructuredMicp(tuple(blocks), CouplingConstraint.from_triplets(trip, rhs))
    return reformulate_integer_coupling(base, int_trip, cfg.penalty)


def simulate(config: TclConfig, u: np.ndarray) -> np.ndarray:
    """Temperatures ``T[i, 0..H]`` produced by switch schedule ``u[i, 0..H-1]``."""
    cfg = config
    R, H = cfg.rooms, cfg.horizon
    T = np.zeros((R, H + 1))
    T[:, 0] = cfg.t0
    deg = cfg.adjacency.sum(axis=1)
    for t in range(H):
        avg = (T[:, t] + cfg.ambient[t] + cfg.adjacency @ T[:, t]) / (deg + 2)
        T[:, t + 1] = T[:, t] + cfg.b * u[:, t] + cfg.a * (avg - T[:, t])
    return T


@dataclass
class TclSolution:
    temperatures: np.ndarray
    switches: np.ndarray
    copies: np.ndarray
    energy_cost: float
    comfort_cost: float
    simulation_error: float
    copy_error: float

    @property
    def total_cost(self) -> float:
        return self.energy_cost + self.comfort_cost

    def deadband_violation(self, config: TclConfig) -> float:
        lo = self.temperatures - config.t_min[:, None]
        hi = config.t_max[:, None] - self.temperatures
        return float(max(0.0, -lo.min(), -hi.min()))


def decode_solution(config: TclConfig, x, z) -> TclSolution:
    cfg = config
    R, H = cfg.rooms, cfg.horizon
    width = 2 * H + 1
    x = np.asarray(x, dtype=float).reshape(R, width)
    u = np.round(np.asarray(z, dtype=float).reshape(R, H))
    T = x[:, : H + 1]
    y = x[:, H + 1 :]
    copy_err = float(np.max(np.abs(y - u))) if u.size else 0.0
    if copy_err > COPY_TOL:
        log.warning("switch copies differ from switches by %.3g; increase the penalty", copy_err)
    T_sim = simulate(cfg, u)
    energy = float(np.sum(u @ cfg.prices[:H]))
    comfort = float(cfg.gamma * np.sum((T[:, :H] - cfg.t_ref[None, :]) ** cfg.order))
    return TclSolution(T.copy(), u, y.copy(), energy, comfort, float(np.max(np.abs(T_sim - T))), copy_err)


FIXTURE_PARAMS = {"mean": 28.0, "amplitude": 6.0, "phase": 0.0}


def write_ambient_fixture(path, H: int = 48) -> None:
    """Write the bundled hot-day profile (hourly, ``H + 1`` values)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("ambient_c\n")
        for v in synth_ambient(H, **FIXTURE_PARAMS):
            fh.write(f"{v:.6f}\n")
