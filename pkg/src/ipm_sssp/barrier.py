"""High-power barrier, potential function, and induced weights/gradients.

The barrier on a source-to-vertex distance edge is ``x**(-p) / p`` below 1,
spliced C^1-continuously onto ``1/p - log x`` above 1. Original edges carry a
plain log barrier ``-log(f_e + slack_e)``. The potential combines a cost-gap
log term with the per-edge barriers:

    Phi(f) = 10 m log(cost(f) - F*) - sum_E log(f_e + slack_e) + sum_Ehat V(f_e)

and the induced min-ratio cycle data is

    w_e = 1 / (f_e + slack_e)            on original edges
    w_e = -V'(f_e)                       on augmented edges
    g_e = (10 m / r) * length_e - w_e    with r tracking cost(f) - F*.

All functions here are pure; the detector owns the mutable flow state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# exp() overflows doubles just above 709; weights past this are clamped there
_LOG_OVERFLOW = 700.0


def barrier_value(x: float, p: int) -> float:
    """V(x): ``x**(-p)/p`` for x <= 1, ``1/p - log x`` for x >= 1."""
    if x <= 0:
        raise ValueError(f"barrier argument must be positive, got {x}")
    if x <= 1.0:
        ex = -p * math.log(x)
        if ex > _LOG_OVERFLOW:
            raise OverflowError(f"barrier_value overflow at x={x}, p={p}")
        return math.exp(ex) / p
    return 1.0 / p - math.log(x)


def barrier_weight(x: float, p: int) -> float:
    """-V'(x): ``x**-(p+1)`` for x <= 1, ``1/x`` for x >= 1. Always > 0."""
    if x <= 0:
        raise ValueError(f"barrier argument must be positive, got {x}")
    if x <= 1.0:
        ex = -(p + 1) * math.log(x)
        # keep weights finite; anything this large already dominates every ratio
        return math.exp(min(ex, _LOG_OVERFLOW))
    return 1.0 / x


def barrier_curvature(x: float, p: int) -> float:
    """V''(x), used only by numerical checks in the test suite."""
    if x <= 0:
        raise ValueError(f"barrier argument must be positive, got {x}")
    if x <= 1.0:
        return (p + 1) * x ** (-(p + 2))
    return 1.0 / (x * x)


def edge_weight(is_augmented: bool, f_e: float, slack_e: float, p: int) -> float:
    """Weight of one edge at flow ``f_e`` (slack ignored on augmented edges)."""
    if is_augmented:
        return barrier_weight(f_e, p)
    x = f_e + slack_e
    if x <= 0:
        raise ValueError(f"flow plus slack must be positive, got {x}")
    return 1.0 / x


def gradient(lengths, weights, r: float, m: int) -> np.ndarray:
    """Componentwise ``(10 m / r) * length - weight``."""
    if r <= 0:
        raise ValueError(
            f"cost gap estimate r={r} must be positive; the detector should have terminated"
        )
    return (10.0 * m / r) * np.asarray(lengths, dtype=float) - np.asarray(weights, dtype=float)


def potential_value(lengths, f, slack, aug_mask, F_star: float, p: int, m: int | None = None) -> float:
    """Exact potential at flow ``f``; uses the true cost, never the tracked r."""
    lengths = np.asarray(lengths, dtype=float)
    f = np.asarray(f, dtype=float)
    slack = np.asarray(slack, dtype=float)
    aug_mask = np.asarray(aug_mask, dtype=bool)
    if m is None:
        m = len(lengths)
    gap = float(lengths @ f) - F_star
    if gap <= 0:
        raise ValueError(f"cost gap {gap} not positive")
    x_orig = f[~aug_mask] + slack[~aug_mask]
    if np.any(x_orig <= 0):
        raise ValueError("original-edge flow plus slack not positive")
    phi = 10.0 * m * math.log(gap) - float(np.sum(np.log(x_orig)))
    for fe in f[aug_mask]:
        phi += barrier_value(float(fe), p)
    return phi


@dataclass(frozen=True)
class IpmParams:
    """Knobs of one detector instance.

    gamma plays the role of the solver quality the analysis budgets for
    (the exact solver gives quality 1; gamma=1/2 keeps slack in every
    lemma hypothesis). q, Gamma, stale_tol and r_drift all derive from it.
    """

    p: int
    alpha: float
    epsilon: float
    q: float
    Gamma: float
    stale_tol: float
    r_drift: float
    delta: float
    iteration_budget: int

    def __post_init__(self):
        if not (0 < self.alpha <= self.epsilon < 1):
            raise ValueError(f"need 0 < alpha <= epsilon < 1, got alpha={self.alpha} epsilon={self.epsilon}")
        if self.p < 2:
            raise ValueError(f"need p >= 2, got {self.p}")
        if not (0 < self.q < 1):
            raise ValueError(f"need 0 < q < 1, got {self.q}")
        if self.Gamma <= 0 or self.stale_tol <= 0 or self.r_drift <= 0:
            raise ValueError("Gamma, stale_tol, r_drift must be positive")
        if self.delta <= 0:
            raise ValueError(f"need delta > 0, got {self.delta}")
        if self.iteration_budget < 1:
            raise ValueError("iteration budget must be >= 1")

    @property
    def gamma(self) -> float:
        return 10.0 * self.q

    @property
    def danger_threshold(self) -> float:
        """Weight above which an augmented edge's head is dangerous."""
        return self.epsilon / (10.0 * self.alpha)

    @staticmethod
    def default_p(alpha: float) -> int:
        return min(32, max(4, math.ceil(math.log2(1.0 / alpha))))

    @classmethod
    def make(
        cls,
        alpha: float,
        epsilon: float,
        m_hint: int,
        p: int | None = None,
        gamma: float = 0.5,
        delta: float | None = None,
        iteration_budget: int | None = None,
    ) -> "IpmParams":
        """Defaults from the detection script: q = gamma/10, Gamma = gamma/(100 p),
        stale_tol = gamma/(1000 p), r_drift = gamma/1000.

        The slack default is min(m**-4, alpha/(100 m)). The second term keeps
        the fresh-edge barrier weight 1/delta above the largest cost-gradient
        pull 10m/r * sum of cycle lengths (at most ~80 m / (alpha F) once the
        band clamps lengths to 2): otherwise descent drives flow backward
        through the slack, bump after bump, and the cost gap collapses.
        """
        if p is None:
            p = cls.default_p(alpha)
        m_hint = max(m_hint, 2)
        q = gamma / 10.0
        if delta is None:
            delta = min(float(m_hint) ** -4, alpha / (100.0 * m_hint))
        if iteration_budget is None:
            iteration_budget = math.ceil(100.0 * m_hint * p * math.log(m_hint + 2) / q**2)
        return cls(
            p=p,
            alpha=alpha,
            epsilon=epsilon,
            q=q,
            Gamma=gamma / (100.0 * p),
            stale_tol=gamma / (1000.0 * p),
            r_drift=gamma / 1000.0,
            delta=delta,
            iteration_budget=iteration_budget,
        )


@dataclass
class PotentialContext:
    """Phase-level scalars: initial total distance F, target F*, tracked gap r."""

    F: float
    F_star: float
    r: float
