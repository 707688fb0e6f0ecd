"""Random-walk simulation, the reflection-style coupling, and the
oscillation-failure experiment on the lamplighter graph.

Heavy Monte Carlo runs go through the `_kernels` module in fixed-size trial
blocks.  Each block owns a generator seeded by (root seed, stream tag, block
index), and block results land in preallocated slices, so estimates are
bit-identical for any worker count and for both kernel backends.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve
from scipy.stats import norm

from . import _kernels
from .errors import CapExceededError, ClippedDomainError, PreconditionError
from .generators import LampState, lamp_distance, lamp_neighbors
from .graph import WeightedGraph

TRIAL_BLOCK = 512
DEFAULT_STEP_CAP = 10_000_000
_Z95 = float(norm.ppf(0.975))


@dataclass(frozen=True)
class WalkPath:
    """A sampled trajectory: strictly increasing times and adjacent states."""

    times: np.ndarray
    states: tuple

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise PreconditionError("times and states must align")
        if len(self.times) > 1 and not (np.diff(self.times) > 0).all():
            raise PreconditionError("times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class CouplingOutcome:
    """One coupled-pair trial: coupling time, exit time, and which came first."""

    tau_c: float  # inf when the pair exited uncoupled
    tau_e: float  # inf only when a step cap interrupted the post-coupling walk
    coupled_first: bool
    stayed_in_window: bool = True
    max_distance_before_coupling: int = 0
    capped: bool = False
    events: int = 0

    def __post_init__(self):
        if not self.capped and self.coupled_first != (self.tau_c < self.tau_e):
            raise PreconditionError("coupled_first must match tau_c < tau_e")


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson 95% score interval for a binomial proportion."""
    if trials <= 0:
        raise PreconditionError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return center - half, center + half


# -- generic chains -----------------------------------------------------------

def simulate_ctsrw(g: WeightedGraph, start: int, stop_predicate: Callable[[int], bool],
                   rng: np.random.Generator, time_cap: float = 1e6) -> WalkPath:
    """Continuous-time walk: rate-1 exponential holding, jumps nu_xy / mu(x).

    The predicate is evaluated on every visited vertex including the start;
    exceeding ``time_cap`` raises :class:`CapExceededError`.
    """
    v = g.check_vertex(start)
    times = [0.0]
    states = [v]
    t = 0.0
    while not stop_predicate(v):
        t += rng.exponential(1.0)
        if t > time_cap:
            raise CapExceededError(f"continuous-time walk exceeded time cap {time_cap}")
        lo, hi = g.indptr[v], g.indptr[v + 1]
        cum = np.cumsum(g.weights[lo:hi])
        k = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        v = int(g.indices[lo + min(k, hi - lo - 1)])
        times.append(t)
        states.append(v)
    return WalkPath(np.array(times), tuple(states))


def simulate_lamplighter_discrete(bound_radius: int, start: LampState,
                                  stop_predicate: Callable[[LampState], bool],
                                  rng: np.random.Generator,
                                  step_cap: int = 1_000_000) -> WalkPath:
    """Discrete switch-then-walk chain, simulated symbolically.

    Every step sets the lamp at the current site to a fair coin and moves one
    step left or right with equal probability (the four neighbors, each 1/4).
    States straying beyond ``bound_radius`` from the base state breach the
    margin and raise :class:`ClippedDomainError`.
    """
    s = start
    states = [s]
    for n in range(step_cap):
        if lamp_distance(s) > bound_radius:
            raise ClippedDomainError(
                f"walk reached distance {lamp_distance(s)} > margin {bound_radius}")
        if stop_predicate(s):
            break
        lit = rng.random() < 0.5
        lamps = s.lamps | {s.position} if lit else s.lamps - {s.position}
        step = 1 if rng.random() < 0.5 else -1
        s = LampState(s.position + step, frozenset(lamps))
        states.append(s)
    else:
        raise CapExceededError(f"discrete walk exceeded step cap {step_cap}")
    return WalkPath(np.arange(len(states), dtype=float), tuple(states))


# -- block scheduling ---------------------------------------------------------

def _run_blocks(total: int, workers: int, seed: int, stream: int,
                body: Callable[[np.random.Generator, int, int], None]) -> None:
    """Run ``body(rng, lo, hi)`` over fixed trial blocks, optionally threaded.

    The block partition is independent of the worker count and each block owns
    its own generator, so results do not depend on scheduling.
    """
    blocks = [(b, lo, min(lo + TRIAL_BLOCK, total))
              for b, lo in enumerate(range(0, total, TRIAL_BLOCK))]

    def run(block):
        b, lo, hi = block
        rng = np.random.default_rng(np.random.SeedSequence((seed, stream, b)))
        body(rng, lo, hi)

    if workers <= 1:
        for block in blocks:
            run(block)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, blocks))


# -- reflection coupling ------------------------------------------------------

def _check_pair_in_scope(y: LampState, radius: int) -> None:
    if abs(y.position) > radius or any(abs(i) > radius for i in y.lamps):
        raise PreconditionError(
            "start state must have |position| <= R and lamps inside [-R, R]")


def _lamp_template(y: LampState, off: int, size: int) -> np.ndarray:
    arr = np.zeros(size, dtype=np.uint8)
    for i in y.lamps:
        arr[off + i] = 1
    return arr


def _couple_arrays(n: int):
    return (np.zeros(n, np.uint8), np.zeros(n), np.zeros(n), np.zeros(n, np.uint8),
            np.zeros(n, np.int64), np.zeros(n, np.uint8), np.zeros(n, np.int64),
            np.zeros(n), np.zeros(n, np.int64))


def _couple_params(y1: LampState, y2: LampState, radius: int, k: float, eps: float):
    if k <= 4:
        raise PreconditionError("uniform coupling needs K > 4")
    if not (0.0 < eps < (k - 4) / 8):
        raise PreconditionError("eps must satisfy 0 < eps < (K - 4) / 8")
    _check_pair_in_scope(y1, radius)
    _check_pair_in_scope(y2, radius)
    exit_radius = k * radius
    off = int(math.ceil(exit_radius)) + 3
    size = 2 * off + 1
    win = radius * (1.0 + 2.0 * eps)
    return (y1.position, y2.position, _lamp_template(y1, off, size),
            _lamp_template(y2, off, size), off, float(exit_radius), -win, win)


def reflection_couple(y1: LampState, y2: LampState, radius: int, k: float, eps: float,
                      rng: np.random.Generator,
                      step_cap: int = DEFAULT_STEP_CAP) -> CouplingOutcome:
    """One coupled trial from (y1, y2); see `_kernels.couple_block` for the law.

    Requires K > 4 and 0 < eps < (K-4)/8.  Start states must have
    |position| <= R and lamps inside [-R, R] (the hypotheses the coupling
    argument actually uses; the canonical hard pair lies at distance R+2 from
    the base point, just outside B(x0, R)).
    """
    p1, p2, l1, l2, off, exit_radius, wlo, whi = _couple_params(y1, y2, radius, k, eps)
    outs = _couple_arrays(1)
    _kernels.couple_block(rng, 1, p1, p2, l1, l2, off, exit_radius, wlo, whi,
                          step_cap, *outs)
    success, tau_c, tau_e, stayed, maxd, capped, _, _, events = (a[0] for a in outs)
    return CouplingOutcome(
        tau_c=float(tau_c) if tau_c >= 0 else math.inf,
        tau_e=float(tau_e) if tau_e >= 0 else math.inf,
        coupled_first=bool(success),
        stayed_in_window=bool(stayed),
        max_distance_before_coupling=int(maxd),
        capped=bool(capped),
        events=int(events))


def hard_pair(radius: int) -> tuple[LampState, LampState]:
    """The antisymmetric pair: lamps lit on [-R,0] at -R, and on [0,R] at R."""
    y1 = LampState(-radius, frozenset(range(-radius, 1)))
    y2 = LampState(radius, frozenset(range(0, radius + 1)))
    return y1, y2


def random_pair_in_ball(radius: int, rng: np.random.Generator) -> LampState:
    """A state at distance <= R from the base, sampled by a short random walk."""
    s = LampState(0)
    length = int(rng.integers(0, radius + 1))
    for _ in range(length):
        lit = rng.random() < 0.5
        lamps = s.lamps | {s.position} if lit else s.lamps - {s.position}
        step = 1 if rng.random() < 0.5 else -1
        s = LampState(s.position + step, frozenset(lamps))
    return s


def uc_estimate(radius: int, k: float, trials: int, seed: int, eps: float = 0.1,
                workers: int = 1, n_random_pairs: int = 10,
                step_cap: int = DEFAULT_STEP_CAP) -> dict:
    """Estimate the uniform-coupling success probability with Wilson intervals.

    The primary estimate runs ``trials`` coupled trials from the hard
    antisymmetric pair; ``n_random_pairs`` random pairs inside the radius-R
    ball are each estimated with trials/10 runs and reported alongside.
    """
    if trials < 100:
        raise PreconditionError("need at least 100 trials")
    y1, y2 = hard_pair(radius)

    def run_pair(a: LampState, b: LampState, n: int, stream: int):
        outs = _couple_arrays(n)
        p1, p2, l1, l2, off, exit_radius, wlo, whi = _couple_params(a, b, radius, k, eps)

        def body(rng, lo, hi):
            _kernels.couple_block(rng, hi - lo, p1, p2, l1, l2, off,
                                  exit_radius, wlo, whi, step_cap,
                                  *(o[lo:hi] for o in outs))

        _run_blocks(n, workers, seed, stream, body)
        return outs

    outs = run_pair(y1, y2, trials, stream=0)
    success, tau_c, tau_e, stayed, maxd, capped = outs[:6]
    wins = int(success.sum())
    lo, hi = wilson_interval(wins, trials)
    report = {
        "R": radius, "K": k, "eps": eps, "trials": trials, "seed": seed,
        "pair": "hard", "p1_hat": wins / trials,
        "wilson95": [lo, hi],
        "cap_hits": int(capped.sum()),
        "mean_tau_c_given_success": float(tau_c[success == 1].mean()) if wins else None,
        "contained_successes": int(((success == 1) & (stayed == 1)).sum()),
        "max_distance_contained": int(maxd[(success == 1) & (stayed == 1)].max())
        if ((success == 1) & (stayed == 1)).any() else None,
        "random_pairs": [],
    }
    pair_rng = np.random.default_rng(np.random.SeedSequence((seed, 10_000)))
    n_small = max(100, trials // 10)
    for j in range(n_random_pairs):
        a = random_pair_in_ball(radius, pair_rng)
        b = random_pair_in_ball(radius, pair_rng)
        outs_j = run_pair(a, b, n_small, stream=1 + j)
        w = int(outs_j[0].sum())
        lo_j, hi_j = wilson_interval(w, n_small)
        report["random_pairs"].append({
            "y1": str(a), "y2": str(b), "trials": n_small,
            "p1_hat": w / n_small, "wilson95": [lo_j, hi_j],
        })
    return report


# -- oscillation failure (discrete walk) --------------------------------------

def _osc_parameters(radius: int, k: float) -> tuple[int, int, int]:
    if not k < 3:
        raise PreconditionError("oscillation-failure experiment needs K < 3")
    delta = (3.0 - k) / 3.0
    lam = 1.0 - delta
    if abs(delta * radius - round(delta * radius)) > 1e-9 or \
       abs(lam * radius - round(lam * radius)) > 1e-9:
        raise PreconditionError(
            "R must make (3-K)/3 * R and (1 - (3-K)/3) * R integers (R multiple of 3 for K=2)")
    kr = k * radius
    if abs(kr - round(kr)) > 1e-9:
        raise PreconditionError("K * R must be an integer")
    return int(round(kr)), int(round(lam * radius)), int(round(delta * radius))


def osc_failure_experiment(radius: int, k: float, trials: int, seed: int,
                           workers: int = 1, step_cap: int = DEFAULT_STEP_CAP) -> dict:
    """Estimate the exit-event probabilities separating the antisymmetric pair.

    Runs the discrete walk from y1 = (-R, lamps [-R,0]) and y2 = (R, lamps
    [0,R]) until the distance from the base state exceeds K*R, and counts the
    event "some lamp in [(1-(3-K)/3) R, R] is lit at exit".  Reports both
    estimates with standard errors and Wilson intervals, the implied
    oscillation lower bound, and the theoretical ceiling 2^(-(3-K)R/3) for y1.
    Capped trials count as no-event and are reported.
    """
    if trials < 100:
        raise PreconditionError("need at least 100 trials")
    kr, lam_r, delta_r = _osc_parameters(radius, k)
    estimates = {}
    for tag, sign, stream in (("y1", -1, 0), ("y2", +1, 1)):
        out_g = np.zeros(trials, np.uint8)
        out_steps = np.zeros(trials, np.int64)
        out_capped = np.zeros(trials, np.uint8)

        def body(rng, lo, hi):
            _kernels.osc_block(rng, hi - lo, sign, radius, kr, lam_r, radius,
                               step_cap, out_g[lo:hi], out_steps[lo:hi],
                               out_capped[lo:hi])

        _run_blocks(trials, workers, seed, stream, body)
        hits = int(out_g.sum())
        p = hits / trials
        se = math.sqrt(p * (1 - p) / trials)
        lo_w, hi_w = wilson_interval(hits, trials)
        estimates[tag] = {
            "h_hat": p, "se": se, "wilson95": [lo_w, hi_w],
            "cap_hits": int(out_capped.sum()),
            "mean_exit_steps": float(out_steps.mean()),
        }
    h1, h2 = estimates["y1"]["h_hat"], estimates["y2"]["h_hat"]
    return {
        "R": radius, "K": k, "trials": trials, "seed": seed,
        "delta": (3.0 - k) / 3.0, "lambda_R": lam_r, "delta_R": delta_r,
        "exit_radius": kr,
        "y1": estimates["y1"], "y2": estimates["y2"],
        "bound_2_pow_minus_delta_R": 2.0 ** (-delta_r),
        "osc_lower_bound": h2 - h1,
        "pair_distance": radius + 2,
    }


# -- exact oracle (dense chain enumeration) -----------------------------------

def exact_osc_probability(radius: int, k: float) -> dict:
    """Exact event probabilities by enumerating the chain within distance K*R+1.

    Only feasible for small radii (guarded at R <= 4): the state space grows
    exponentially.  Used as an oracle for the Monte Carlo path.
    """
    if radius > 4:
        raise PreconditionError("exact mode is limited to R <= 4")
    kr, lam_r, _ = _osc_parameters(radius, k)
    base = LampState(0)
    dist = {base: 0}
    order = [base]
    q = deque([base])
    while q:
        s = q.popleft()
        if lamp_distance(s) > kr:
            continue
        for t_ in lamp_neighbors(s):
            if t_ not in dist:
                dist[t_] = dist[s] + 1
                order.append(t_)
                q.append(t_)
    index = {s: i for i, s in enumerate(order)}
    interior = [s for s in order if lamp_distance(s) <= kr]
    int_pos = {s: i for i, s in enumerate(interior)}

    def event(s: LampState) -> bool:
        return any(lam_r <= i <= radius for i in s.lamps)

    rows, cols, vals = [], [], []
    b = np.zeros(len(interior))
    for s in interior:
        i = int_pos[s]
        for t_ in lamp_neighbors(s):
            if lamp_distance(t_) <= kr:
                rows.append(i)
                cols.append(int_pos[t_])
                vals.append(0.25)
            elif event(t_):
                b[i] += 0.25
    P = sp.csr_matrix((vals, (rows, cols)), shape=(len(interior),) * 2)
    h = spsolve(sp.eye(len(interior), format="csr") - P, b)

    def h_of(s: LampState) -> float:
        if lamp_distance(s) <= kr:
            return float(h[int_pos[s]])
        return 1.0 if event(s) else 0.0

    y1, y2 = hard_pair(radius)
    return {"R": radius, "K": k, "states": len(interior),
            "h_y1": h_of(y1), "h_y2": h_of(y2)}
