"""Renyi differential privacy accounting for the decoding mechanism.

Each protected step with noise scale sigma and sensitivity Delta contributes
RDP cost alpha * Delta^2 / (2 sigma^2) at order alpha (Gaussian mechanism);
unprotected (screened) steps contribute nothing. Costs compose additively
over a generation. Conversion to (eps, delta)-DP:

    eps(alpha) = RDP_total(alpha) + ln(1/delta) / (alpha - 1)

and the reported epsilon optimizes alpha over a fixed grid, ties broken
toward the smaller alpha. Accounting restarts per generation: one generation
owns one ledger and one noise source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "DEFAULT_ALPHA_GRID",
    "StepRecord",
    "PrivacyReport",
    "AccountantLedger",
]

DEFAULT_ALPHA_GRID = (1.25, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 16.0, 20.0, 32.0, 64.0)


@dataclass(frozen=True)
class StepRecord:
    """One recorded step: noise scale, sensitivity, protection flag."""

    sigma: float
    delta_t: float
    protected: bool


@dataclass(frozen=True)
class PrivacyReport:
    """Summary of a ledger: grid-optimized epsilon plus step statistics.

    gamma is the protected fraction protected_steps / total_steps (0 for an
    empty ledger). When the ledger was created with a config, the report also
    carries the epsilon evaluated at that config's fixed alpha.
    """

    epsilon: float
    delta: float
    alpha_star: float
    gamma: float
    protected_steps: int
    total_steps: int
    alpha_config: float | None = None
    epsilon_at_config_alpha: float | None = None

    def to_dict(self) -> dict:
        d = {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "alpha_star": self.alpha_star,
            "gamma": self.gamma,
            "protected_steps": self.protected_steps,
            "total_steps": self.total_steps,
        }
        if self.alpha_config is not None:
            d["alpha_config"] = self.alpha_config
            d["epsilon_at_config_alpha"] = self.epsilon_at_config_alpha
        return d


@dataclass
class AccountantLedger:
    """Append-only per-step privacy ledger.

    `config` is an optional PadConfig snapshot; when present, report() adds
    the fixed-alpha epsilon at config.alpha and defaults delta to
    config.delta.
    """

    config: object | None = None
    steps: list[StepRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def total_steps(self) -> int:
        return len(self.steps)

    @property
    def protected_steps(self) -> int:
        return sum(1 for r in self.steps if r.protected)

    def record_step(self, sigma: float, delta_t: float, protected: bool) -> StepRecord:
        """Append one step. Protected steps need sigma > 0 (finite cost) and delta_t > 0."""
        if not math.isfinite(sigma) or sigma < 0.0:
            raise ValueError(f"sigma must be finite and >= 0, got {sigma!r}")
        if not math.isfinite(delta_t) or delta_t < 0.0:
            raise ValueError(f"delta_t must be finite and >= 0, got {delta_t!r}")
        if protected:
            if sigma <= 0.0:
                raise ValueError("protected step with sigma = 0 has infinite privacy cost")
            if delta_t <= 0.0:
                raise ValueError("protected step needs delta_t > 0")
        record = StepRecord(sigma=sigma, delta_t=delta_t, protected=protected)
        self.steps.append(record)
        return record

    def extend(self, other: "AccountantLedger") -> None:
        """Append every step of another ledger (composition across generations)."""
        self.steps.extend(other.steps)

    def rdp_total(self, alpha: float) -> float:
        """Total RDP cost at order alpha: sum over protected steps of alpha*Delta^2/(2 sigma^2)."""
        if not (alpha > 1.0):
            raise ValueError("alpha must be > 1")
        return math.fsum(
            alpha * r.delta_t * r.delta_t / (2.0 * r.sigma * r.sigma)
            for r in self.steps
            if r.protected
        )

    def to_eps_delta(self, alpha: float, delta: float) -> float:
        """(eps, delta) conversion at a single order: RDP(alpha) + ln(1/delta)/(alpha-1)."""
        if not (0.0 < delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        return self.rdp_total(alpha) + math.log(1.0 / delta) / (alpha - 1.0)

    def optimal_epsilon(self, delta: float, alpha_grid=DEFAULT_ALPHA_GRID) -> tuple[float, float]:
        """Smallest epsilon over the grid. Returns (epsilon, alpha_star); ties pick the smaller alpha."""
        grid = tuple(alpha_grid)
        if not grid:
            raise ValueError("alpha grid must be non-empty")
        if any(a <= 1.0 for a in grid):
            raise ValueError("every alpha in the grid must be > 1")
        best_eps = math.inf
        best_alpha = math.inf
        for a in sorted(grid):
            eps = self.to_eps_delta(a, delta)
            if eps < best_eps:
                best_eps = eps
                best_alpha = a
        return best_eps, best_alpha

    def report(self, delta: float | None = None, alpha_grid=DEFAULT_ALPHA_GRID) -> PrivacyReport:
        """Build a PrivacyReport; delta defaults to the config snapshot's delta."""
        if delta is None:
            if self.config is None:
                raise ValueError("delta is required when the ledger has no config snapshot")
            delta = self.config.delta
        epsilon, alpha_star = self.optimal_epsilon(delta, alpha_grid)
        total = self.total_steps
        protected = self.protected_steps
        gamma = protected / total if total > 0 else 0.0
        alpha_config = None
        eps_config = None
        if self.config is not None:
            alpha_config = self.config.alpha
            eps_config = self.to_eps_delta(alpha_config, delta)
        return PrivacyReport(
            epsilon=epsilon,
            delta=delta,
            alpha_star=alpha_star,
            gamma=gamma,
            protected_steps=protected,
            total_steps=total,
            alpha_config=alpha_config,
            epsilon_at_config_alpha=eps_config,
        )
