"""Reconstruction of the continuous piecewise solution from the discrete skeleton.

On each unit interval [n, n+1) the solution is

    z(t) = E(t) * ( z_n + z_dev * G(t) ),
    E(t) = exp( I(n, t) ),   G(t) = int_n^t exp( -I(n, s) ) b(s) ds,

where z_dev is the solution value at the deviated node n -+ k and I is the
running integral of the coefficient a.  This is the interval solution
formula with the exponential weight factored out so E and G can be built
incrementally across the interval's sample points.

Sample rows store the right-continuous value at node times; the left limit
at each node lives in the node table, together with the jump factor that
relates the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .diffeq import DiscreteSolution, TooShort, Verdict, default_window
from .exprlang import compile_expr, _safe_exp
from .quad import integrate
from .reduction import Direction, DiscreteSystem, ProblemSpec

__all__ = [
    "NodeRecord",
    "Trajectory",
    "reconstruct",
    "continuous_oscillation_check",
    "max_node_discontinuity",
]


@dataclass(frozen=True)
class NodeRecord:
    n: int
    z_left: float
    z_right: float
    jump_factor: float


@dataclass
class Trajectory:
    spec: ProblemSpec
    samples: List[Tuple[float, float]]       # strictly increasing in t
    nodes: List[NodeRecord]
    interval_start: int
    intervals: List[List[float]] = field(default_factory=list)
    # intervals[i] holds the interval's sample values plus its left end limit,
    # so window checks can include the limit without re-deriving it

    @property
    def k(self) -> int:
        return self.spec.k


def reconstruct(spec: ProblemSpec, ds: DiscreteSystem, sol: DiscreteSolution,
                samples_per_interval: int = 32, tol: float = 1e-10) -> Trajectory:
    """Sample the continuous solution on every interval the skeleton covers."""
    if samples_per_interval < 1:
        raise ValueError("samples_per_interval must be >= 1")
    fa = compile_expr(spec.a)
    fb = compile_expr(spec.b)
    inner_tol = tol / 10.0

    if spec.direction is Direction.DELAYED:
        first = ds.n0
        last = min(ds.horizon - 1, sol.n_hi - 1)
        dev_of = lambda n: n - spec.k
    else:
        # for k >= 2 the initial window is free on the first interval (the
        # rearranged sweep only enforces the recursion from n0+1 on), so no
        # consistent reconstruction exists there
        first = ds.n0 if spec.k == 1 else ds.n0 + 1
        last = min(ds.horizon - 1, sol.n_hi - spec.k)
        dev_of = lambda n: n + spec.k

    samples: List[Tuple[float, float]] = []
    nodes: List[NodeRecord] = []
    intervals: List[List[float]] = []
    m = samples_per_interval
    for n in range(first, last + 1):
        z_n = sol.value(n)
        z_dev = sol.value(dev_of(n))
        interval_values: List[float] = []
        expo = 0.0   # I(n, t_i), accumulated
        g = 0.0      # G(t_i), accumulated
        t_prev = float(n)
        for i in range(m + 1):
            t = n + i / m if i < m else float(n + 1)
            if i > 0:
                expo += integrate(fa, t_prev, t, inner_tol).value
                g += integrate(
                    lambda s: _safe_exp(-integrate(fa, n, s, inner_tol).value) * fb(s),
                    t_prev, t, tol,
                ).value
            t_prev = t
            z = _safe_exp(expo) * (z_n + z_dev * g)
            if i < m:
                samples.append((t, z))
                interval_values.append(z)
            else:
                z_left = z
        interval_values.append(z_left)
        intervals.append(interval_values)
        try:
            z_right = sol.value(n + 1)
        except IndexError:
            z_right = math.nan
        nodes.append(NodeRecord(n + 1, z_left, z_right, spec.impulse.factor(n + 1)))
    return Trajectory(spec, samples, nodes, first, intervals)


def max_node_discontinuity(traj: Trajectory) -> float:
    """Largest relative gap between left limit and node value (continuity audit)."""
    worst = 0.0
    for rec in traj.nodes:
        if not math.isfinite(rec.z_right):
            continue
        gap = abs(rec.z_left - rec.z_right) / max(1.0, abs(rec.z_left))
        worst = max(worst, gap)
    return worst


@dataclass
class OscillationVerdictContinuous:
    verdict: Verdict
    tail_window: Tuple[int, int]  # interval index range examined


def continuous_oscillation_check(traj: Trajectory, tail_fraction: float = 0.5,
                                 window_intervals: Optional[int] = None
                                 ) -> OscillationVerdictContinuous:
    """Blockwise check on the sampled trajectory, left limits included.

    Oscillatory when every complete block of window_intervals intervals in
    the tail contains both a sample <= 0 and a sample >= 0.
    """
    if window_intervals is None:
        window_intervals = default_window(traj.k)
    blocks = traj.intervals
    m = len(blocks)
    tail_len = max(1, int(round(m * tail_fraction)))
    if tail_len < 2 * window_intervals:
        raise TooShort(
            f"trajectory tail spans {tail_len} intervals; need {2 * window_intervals}"
        )
    i0 = m - tail_len
    tail_vals = [v for block in blocks[i0:] for v in block]
    tail_window = (traj.interval_start + i0, traj.interval_start + m - 1)

    if all(v > 0.0 for v in tail_vals):
        return OscillationVerdictContinuous(Verdict.EVENTUALLY_POSITIVE, tail_window)
    if all(v < 0.0 for v in tail_vals):
        return OscillationVerdictContinuous(Verdict.EVENTUALLY_NEGATIVE, tail_window)

    start = i0
    while start + window_intervals <= m:
        vals = [v for block in blocks[start:start + window_intervals] for v in block]
        if not (min(vals) <= 0.0 <= max(vals)):
            return OscillationVerdictContinuous(Verdict.INCONCLUSIVE, tail_window)
        start += window_intervals
    return OscillationVerdictContinuous(Verdict.OSCILLATORY, tail_window)
