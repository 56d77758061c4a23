"""Discrete-time simulation of a throttler network.

Each server carries a limit ``x_i(k)`` and updates it from neighbor
differences of a nodal measure ``p``:

    x(k+1) = x(k) + gamma * L * p(k)

with ``p`` chosen per scenario case:

    I    throttled amount            p = r - x
    II   throttled ratio             p = (r - x) / r
    III  log request/limit ratio     p = log(r / x)
    IV   the limit itself            p = x  (anti-diffusive; boundary
         freezing keeps states in [0, r], see kernels.run_case4)

Because every update is ``gamma * L * (something)`` (case IV uses a
masked Laplacian with zero row sums), the total limit is conserved to
roundoff in all cases.

Randomness is generated exclusively from the scenario seed through a
Philox (4x64 counter-based) bit generator, in a fixed draw order (demand
first, then client shares), so a scenario replays bit-identically on any
platform under the same kernel backend.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .allocation import ClientDemands, proportional_split, waterfill_split
from .errors import (
    CaseDomainViolationError,
    NumericalBlowupError,
    ScenarioError,
    ZeroIdealError,
)
from .graph import WeightedGraph, build_graph, laplacian, read_graph

CASES = ("I", "II", "III", "IV")
MAX_HORIZON = 10_000_000
NODE_ALGORITHMS = ("proportional", "waterfill")


def make_rng(seed: int) -> np.random.Generator:
    """Project RNG: Philox 4x64 counter-based generator, SeedSequence-keyed."""
    return np.random.Generator(np.random.Philox(int(seed)))


# ---------------------------------------------------------------------------
# demand models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LoadModel:
    """Per-node demand over time: constant, reflected Gaussian walk, or a
    piecewise-linear usage curve sampled at integer steps."""

    kind: str
    r: np.ndarray | None = None
    r0: np.ndarray | None = None
    sigma: np.ndarray | None = None
    clamp_min: float = 0.0
    profiles: tuple[tuple[tuple[float, float], ...], ...] | None = None

    @classmethod
    def steady(cls, r) -> "LoadModel":
        r = np.asarray(r, dtype=np.float64)
        if np.any(r < 0):
            raise ScenarioError("steady demand must be >= 0")
        return cls(kind="steady", r=r)

    @classmethod
    def random_walk(cls, r0, sigma, clamp_min: float = 0.0) -> "LoadModel":
        r0 = np.asarray(r0, dtype=np.float64)
        sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), r0.shape).copy()
        if clamp_min < 0:
            raise ScenarioError(f"clamp_min must be >= 0, got {clamp_min}")
        if np.any(sigma < 0):
            raise ScenarioError("walk sigmas must be >= 0")
        if np.any(r0 < clamp_min):
            raise ScenarioError("initial demand must be >= clamp_min")
        return cls(kind="random_walk", r0=r0, sigma=sigma, clamp_min=float(clamp_min))

    @classmethod
    def usage_curve(cls, profiles) -> "LoadModel":
        norm = []
        for prof in profiles:
            pts = tuple((float(t), float(v)) for t, v in prof)
            if len(pts) < 1:
                raise ScenarioError("usage profile needs at least one breakpoint")
            times = [t for t, _ in pts]
            if sorted(times) != times:
                raise ScenarioError("usage profile breakpoints must be time-sorted")
            if any(v < 0 for _, v in pts):
                raise ScenarioError("usage profile values must be >= 0")
            norm.append(pts)
        return cls(kind="usage_curve", profiles=tuple(norm))

    @property
    def n_nodes(self) -> int:
        if self.kind == "steady":
            return self.r.size
        if self.kind == "random_walk":
            return self.r0.size
        return len(self.profiles)

    def initial_demand(self) -> np.ndarray:
        if self.kind == "steady":
            return self.r.copy()
        if self.kind == "random_walk":
            return self.r0.copy()
        return np.array([_interp_profile(p, 0.0) for p in self.profiles])

    def min_possible(self) -> float:
        """Lower bound on any generated demand value (domain checks)."""
        if self.kind == "steady":
            return float(np.min(self.r))
        if self.kind == "random_walk":
            return float(self.clamp_min) if np.any(self.sigma > 0) else float(np.min(self.r0))
        return min(min(v for _, v in prof) for prof in self.profiles)


def _interp_profile(profile, t: float) -> float:
    ts = np.array([p[0] for p in profile])
    vs = np.array([p[1] for p in profile])
    return float(np.interp(t, ts, vs))


def generate_load(model: LoadModel, n: int, horizon: int, seed: int) -> np.ndarray:
    """Demand matrix of shape (horizon+1, n), deterministic in the seed."""
    return _generate_load(model, n, horizon, make_rng(seed))


def _generate_load(model: LoadModel, n: int, horizon: int, rng) -> np.ndarray:
    if model.n_nodes != n:
        raise ScenarioError(f"load model covers {model.n_nodes} nodes, graph has {n}")
    N = int(horizon)
    if model.kind == "steady":
        return np.tile(model.r, (N + 1, 1))
    if model.kind == "random_walk":
        R = np.empty((N + 1, n))
        R[0] = model.r0
        incr = model.sigma * rng.standard_normal((N, n))
        kernels.reflected_walk(R, incr, model.clamp_min)
        return R
    ks = np.arange(N + 1, dtype=np.float64)
    R = np.empty((N + 1, n))
    for i, prof in enumerate(model.profiles):
        ts = np.array([p[0] for p in prof])
        vs = np.array([p[1] for p in prof])
        R[:, i] = np.interp(ks, ts, vs)
    return R


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DstScenario:
    """Full simulation configuration; validated eagerly."""

    graph: WeightedGraph
    gamma: float
    case: str
    initial_limits: np.ndarray
    load: LoadModel
    horizon: int
    seed: int
    clients_per_node: np.ndarray | None = None
    node_algorithm: str = "proportional"

    def __post_init__(self):
        x0 = np.asarray(self.initial_limits, dtype=np.float64)
        object.__setattr__(self, "initial_limits", x0)
        x0.setflags(write=False)
        n = self.graph.n
        if self.case not in CASES:
            raise ScenarioError(f"case must be one of {CASES}, got {self.case!r}")
        if not (self.gamma > 0):
            raise ScenarioError(f"gamma must be > 0, got {self.gamma}")
        if not (1 <= int(self.horizon) <= MAX_HORIZON):
            raise ScenarioError(f"horizon must be in [1, {MAX_HORIZON}]")
        if x0.shape != (n,):
            raise ScenarioError(f"initial limits shape {x0.shape} != ({n},)")
        if np.any(x0 < 0):
            raise ScenarioError("initial limits must be >= 0")
        if not np.sum(x0) > 0:
            raise ScenarioError("total initial limit must be positive")
        if self.load.n_nodes != n:
            raise ScenarioError("load model node count does not match the graph")
        if self.node_algorithm not in NODE_ALGORITHMS:
            raise ScenarioError(f"node_algorithm must be one of {NODE_ALGORITHMS}")
        if self.case in ("II", "III"):
            # eager checks where the whole horizon is knowable (constant
            # demand, walk floor); curves are checked mid-run step by step
            if self.load.kind == "random_walk" and not self.load.clamp_min > 0:
                raise ScenarioError(
                    f"case {self.case} needs strictly positive demand; set clamp_min > 0"
                )
            if self.load.kind == "steady" and self.load.min_possible() <= 0:
                raise ScenarioError(f"case {self.case} needs strictly positive demand")
            if np.any(self.load.initial_demand() <= 0):
                raise ScenarioError(f"case {self.case} needs strictly positive demand")
        if self.case == "III" and np.any(x0 <= 0):
            raise ScenarioError("case III needs strictly positive initial limits")
        if self.case == "IV" and np.any(x0 > self.load.initial_demand()):
            raise ScenarioError("case IV needs initial limits within [0, r(0)]")
        if self.clients_per_node is not None:
            counts = np.asarray(self.clients_per_node, dtype=np.int64)
            if counts.shape != (n,) or np.any(counts < 1):
                raise ScenarioError("clients_per_node must give a count >= 1 per node")
            object.__setattr__(self, "clients_per_node", counts)
            counts.setflags(write=False)

    @property
    def l_total(self) -> float:
        return float(np.sum(self.initial_limits))


# ---------------------------------------------------------------------------
# trajectory
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    """Per-step record of limits, demand, nodal measures, and acceptance."""

    x: np.ndarray
    r: np.ndarray
    p: np.ndarray
    a: np.ndarray
    r_total: np.ndarray
    a_total: np.ndarray
    a_ideal: np.ndarray
    l_total: float
    over_throttling_pct: float | None

    def __post_init__(self):
        for arr in (self.x, self.r, self.p, self.a, self.r_total, self.a_total, self.a_ideal):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def steps(self) -> int:
        return self.x.shape[0] - 1

    def conservation_residual(self) -> float:
        return float(np.max(np.abs(self.x.sum(axis=1) - self.l_total)))

    def final_spread(self) -> float:
        return float(self.p[-1].max() - self.p[-1].min())

    def mean_dispersion(self, tail_fraction: float = 0.5) -> float:
        """Time average of the squared spread of p over the trailing window."""
        start = int(round(self.p.shape[0] * (1.0 - tail_fraction)))
        tail = self.p[start:]
        centered = tail - tail.mean(axis=1, keepdims=True)
        return float(np.mean(np.sum(centered**2, axis=1)))

    def to_csv(self, path) -> None:
        """Tabular trajectory: k, x_*, r_*, a_*, r_total, a_total, a_ideal."""
        n = self.n
        cols = (
            ["k"]
            + [f"x_{i}" for i in range(n)]
            + [f"r_{i}" for i in range(n)]
            + [f"a_{i}" for i in range(n)]
            + ["r_total", "a_total", "a_ideal"]
        )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(cols) + "\n")
            for k in range(self.x.shape[0]):
                vals = [str(k)]
                vals += [repr(float(v)) for v in self.x[k]]
                vals += [repr(float(v)) for v in self.r[k]]
                vals += [repr(float(v)) for v in self.a[k]]
                vals += [
                    repr(float(self.r_total[k])),
                    repr(float(self.a_total[k])),
                    repr(float(self.a_ideal[k])),
                ]
                fh.write(",".join(vals) + "\n")

    def write_plot_data(self, path) -> None:
        """Tidy long-format CSV of the aggregate curves for external plotting."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("k,series,value\n")
            for k in range(self.x.shape[0]):
                fh.write(f"{k},r_total,{float(self.r_total[k])!r}\n")
                fh.write(f"{k},l_total,{float(self.l_total)!r}\n")
                fh.write(f"{k},a_total,{float(self.a_total[k])!r}\n")
                fh.write(f"{k},a_ideal,{float(self.a_ideal[k])!r}\n")

    def summary(self) -> dict:
        return {
            "l_total": self.l_total,
            "over_throttling_pct": self.over_throttling_pct,
            "final_spread": self.final_spread(),
            "conservation_residual": self.conservation_residual(),
            "mean_dispersion": self.mean_dispersion(),
        }


def over_throttling_pct(traj: Trajectory) -> float:
    """Cumulative shortfall of accepted traffic versus the ideal curve, in %."""
    ideal_sum = float(np.sum(traj.a_ideal))
    if ideal_sum <= 0:
        raise ZeroIdealError("ideal accepted total is zero over the horizon")
    shortfall = traj.a_ideal - traj.a_total
    assert np.min(shortfall) >= -1e-9 * max(1.0, float(np.max(traj.a_ideal)))
    return float(np.sum(shortfall) / ideal_sum * 100.0)


# ---------------------------------------------------------------------------
# single-step reference updates (plain numpy; the simulate loop runs the
# kernels module instead)
# ---------------------------------------------------------------------------


def step_case1(x, r, g: WeightedGraph, gamma: float) -> np.ndarray:
    """Throttled-amount measure: x + gamma * L (r - x)."""
    return np.asarray(x) + gamma * (laplacian(g) @ (np.asarray(r) - np.asarray(x)))


def step_case2(x, r, g: WeightedGraph, gamma: float) -> np.ndarray:
    """Throttled-ratio measure: x + gamma * L ((r - x) / r); needs r > 0."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(r <= 0):
        raise CaseDomainViolationError("case II needs strictly positive demand", 0)
    x = np.asarray(x, dtype=np.float64)
    return x + gamma * (laplacian(g) @ ((r - x) / r))


def step_case3(pbar, g: WeightedGraph, gamma: float, r_const: float) -> np.ndarray:
    """Reduced log-ratio map under uniform demand: pbar - (gamma/r) L ln(pbar).

    ``pbar = exp(-p) = x / r``; the step is rejected when any component
    would leave the positive domain.
    """
    pbar = np.asarray(pbar, dtype=np.float64)
    if np.any(pbar <= 0):
        raise CaseDomainViolationError("case III state must be strictly positive", 0)
    out = pbar - (gamma / r_const) * (laplacian(g) @ np.log(pbar))
    if np.any(out <= 0):
        raise CaseDomainViolationError("case III step left the positive domain", 1)
    return out


def step_case4(x, r, g: WeightedGraph, gamma: float) -> np.ndarray:
    """Saturating limit measure: one masked anti-diffusion step."""
    x = np.asarray(x, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    X = np.empty((2, g.n))
    X[0] = x
    R = np.vstack([r, r])
    ptr, nbr, wts = g.csr_adjacency()
    status, step = kernels.run_case4(X, R, ptr, nbr, wts, gamma)
    if status == kernels.STATUS_BLOWUP:
        raise NumericalBlowupError(step)
    return X[1]


def case4_freeze_plan(x, r, g: WeightedGraph, gamma: float):
    """Frozen-node mask and per-edge mask for one saturating step.

    A node freezes when it sits exactly on a boundary and the unconstrained
    update would push it out; an edge is masked iff either endpoint froze.
    """
    x = np.asarray(x, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    u = gamma * (laplacian(g) @ x)
    frozen = ((x == r) & (u > 0)) | ((x == 0) & (u < 0))
    edge_active = np.array([not (frozen[i] or frozen[j]) for i, j, _ in g.edges])
    return frozen, edge_active


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


def simulate(scenario: DstScenario) -> Trajectory:
    """Run the scenario for its full horizon and record everything.

    Raises CaseDomainViolationError / NumericalBlowupError with the index
    of the first invalid step.
    """
    g = scenario.graph
    n = g.n
    N = int(scenario.horizon)
    rng = make_rng(scenario.seed)
    R = _generate_load(scenario.load, n, N, rng)

    case_num = CASES.index(scenario.case) + 1
    if case_num in (2, 3):
        bad = np.argwhere(R <= 0)
        if bad.size:
            raise CaseDomainViolationError(
                f"case {scenario.case} needs positive demand", int(bad[0][0])
            )

    X = np.empty((N + 1, n))
    X[0] = scenario.initial_limits
    if case_num == 4:
        ptr, nbr, wts = g.csr_adjacency()
        status, step = kernels.run_case4(X, R, ptr, nbr, wts, scenario.gamma)
    else:
        ei, ej, ew = g.edge_arrays()
        status, step = kernels.run_linear_case(X, R, ei, ej, ew, n, scenario.gamma, case_num)
    if status == kernels.STATUS_DOMAIN:
        raise CaseDomainViolationError(
            f"case {scenario.case} state left its domain", int(step)
        )
    if status == kernels.STATUS_BLOWUP:
        raise NumericalBlowupError(int(step))

    if case_num == 1:
        P = R - X
    elif case_num == 2:
        P = (R - X) / R
    elif case_num == 3:
        P = np.log(R / X)
    else:
        P = X.copy()
    A = np.minimum(X, R)
    r_total = R.sum(axis=1)
    a_total = A.sum(axis=1)
    l_total = scenario.l_total
    a_ideal = np.minimum(l_total, r_total)

    if scenario.clients_per_node is not None:
        _run_client_allocations(scenario, rng, X, R)

    ideal_sum = float(np.sum(a_ideal))
    pct = float(np.sum(a_ideal - a_total) / ideal_sum * 100.0) if ideal_sum > 0 else None
    return Trajectory(
        x=X,
        r=R,
        p=P,
        a=A,
        r_total=r_total,
        a_total=a_total,
        a_ideal=a_ideal,
        l_total=l_total,
        over_throttling_pct=pct,
    )


def _run_client_allocations(scenario: DstScenario, rng, X, R) -> None:
    """Drive the per-node splitter each step and check it fills the limit.

    Client demand shares are drawn once (after the demand stream) and held
    fixed; per-client demand is share * node demand.  Negative transient
    limits are clamped to zero caps.
    """
    splitter = proportional_split if scenario.node_algorithm == "proportional" else waterfill_split
    shares = []
    for count in scenario.clients_per_node:
        raw = 0.5 + rng.random(int(count))
        shares.append(raw / raw.sum())
    for k in range(X.shape[0]):
        for i, share in enumerate(shares):
            demands = ClientDemands(requests=share * R[k, i], server_limit=max(X[k, i], 0.0))
            alloc = splitter(demands)
            got = float(np.sum(alloc.accepted(demands.requests)))
            want = min(demands.server_limit, demands.total)
            assert abs(got - want) <= 1e-9 * max(1.0, abs(want))


# ---------------------------------------------------------------------------
# scenario files (JSON)
# ---------------------------------------------------------------------------


def scenario_from_dict(data: dict, base_dir=None) -> DstScenario:
    try:
        gspec = data["graph"]
        if "path" in gspec:
            gpath = Path(gspec["path"])
            if base_dir is not None and not gpath.is_absolute():
                gpath = Path(base_dir) / gpath
            graph = read_graph(gpath)
        else:
            graph = build_graph(gspec["n"], [tuple(e) for e in gspec["edges"]])
        lspec = data["load"]
        kind = lspec["kind"]
        if kind == "steady":
            load = LoadModel.steady(lspec["r"])
        elif kind == "random_walk":
            load = LoadModel.random_walk(
                lspec["r0"], lspec["sigma"], lspec.get("clamp_min", 0.0)
            )
        elif kind == "usage_curve":
            load = LoadModel.usage_curve(lspec["profiles"])
        else:
            raise ScenarioError(f"unknown load kind {kind!r}")
        return DstScenario(
            graph=graph,
            gamma=float(data["gamma"]),
            case=str(data["case"]),
            initial_limits=np.asarray(data["initial_limits"], dtype=np.float64),
            load=load,
            horizon=int(data["horizon"]),
            seed=int(data["seed"]),
            clients_per_node=data.get("clients_per_node"),
            node_algorithm=data.get("node_algorithm", "proportional"),
        )
    except KeyError as exc:
        raise ScenarioError(f"scenario missing field {exc}") from exc


def load_scenario(path) -> DstScenario:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return scenario_from_dict(data, base_dir=path.parent)
