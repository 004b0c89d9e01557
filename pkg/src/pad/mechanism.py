"""Privacy-aware decoding step: screened, scaled, calibrated Gaussian noise.

Per decoding step t with logit vector s_t and p_t = softmax(s_t):

* Screening. The step is confident iff max(p_t) > tau_conf AND
  margin(s_t) > tau_margin. Confident steps get N(0, sigma_min^2 I) only and
  are recorded as unprotected with zero sensitivity.
* Sensitivity. Delta_t = clamp(1 / (1 + ln(1 + margin)), delta_min, 1).
  High-margin (stable) steps tolerate proportionally less perturbation before
  the argmax flips, so they need less noise to hide a marginal record.
* Calibration. calibrate(p_t, t) =
      (1 - w_entropy) + w_entropy * H(p_t) + w_pos * f_pos(t) + w_conf * f_conf(p_t)
  with H the normalized entropy, f_pos(t) = 1/(1 + 0.1 t) and
  f_conf(p) = 1 - max(p). Uncertain, early, low-confidence steps carry more
  residual context signal and receive more noise.
* Composition. sigma_t = base_sigma * calibrate * (Delta_t / eps_base)
  * lambda_amp, floored at sigma_min, where base_sigma =
  eps_min / max(eps_base, eps_min). The noisy logits are
  s_t + sigma_t * z, z ~ N(0, I), and the step is recorded as protected.

mode=static bypasses all three stages: every step is protected with
Delta_t = 1 and sigma_t = base_sigma * lambda_amp. The no_screening,
no_calibration and no_sensitivity modes disable one stage each.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .logits import check_logits, margin as logit_margin, normalized_entropy, softmax

__all__ = [
    "MODES",
    "PadConfig",
    "StepDecision",
    "screen",
    "sensitivity",
    "calibrate",
    "base_sigma",
    "pad_step",
]

MODES = ("full", "static", "no_calibration", "no_sensitivity", "no_screening")


@dataclass(frozen=True)
class PadConfig:
    """Mechanism parameters. Frozen; sweeps use dataclasses.replace."""

    eps_base: float = 0.2      # per-step privacy budget scale
    eps_min: float = 0.01      # floor budget; sets base_sigma = eps_min / max(eps_base, eps_min)
    alpha: float = 10.0        # Renyi order used for the fixed-alpha report
    delta: float = 1e-5        # target delta for (eps, delta) conversion
    lambda_amp: float = 3.0    # noise amplification factor
    delta_min: float = 0.4     # sensitivity clamp floor
    sigma_min: float = 0.01    # noise floor (confident steps; protected floor)
    tau_conf: float = 0.9      # screening: max-probability threshold
    tau_margin: float = 3.0    # screening: logit-margin threshold
    w_entropy: float = 0.3     # calibration: entropy weight
    w_pos: float = 0.2         # calibration: position weight
    w_conf: float = 0.2        # calibration: confidence weight
    mode: str = "full"

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (self.eps_base > 0.0):
            raise ValueError("eps_base must be > 0")
        if not (self.eps_min > 0.0):
            raise ValueError("eps_min must be > 0")
        if not (self.alpha > 1.0):
            raise ValueError("alpha must be > 1")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if not (self.lambda_amp > 0.0):
            raise ValueError("lambda_amp must be > 0")
        if not (0.0 < self.delta_min <= 1.0):
            raise ValueError("delta_min must lie in (0, 1]")
        if self.sigma_min < 0.0:
            raise ValueError("sigma_min must be >= 0")
        if not (0.0 < self.tau_conf < 1.0):
            raise ValueError("tau_conf must lie in (0, 1)")
        if self.tau_margin < 0.0:
            raise ValueError("tau_margin must be >= 0")
        for name in ("w_entropy", "w_pos", "w_conf"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")

    def replace(self, **changes) -> "PadConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class StepDecision:
    """Per-step trace record: what the mechanism saw and did.

    protected=False implies sigma_t == sigma_min and delta_t == 0;
    protected=True implies delta_t in [delta_min, 1] and sigma_t > 0.
    """

    protected: bool
    margin: float
    max_prob: float
    entropy: float
    delta_t: float
    sigma_t: float


def screen(logits, cfg: PadConfig) -> tuple[bool, float, float]:
    """Confidence screen. Returns (confident, margin, max_prob).

    Confident requires both max_prob > tau_conf and margin > tau_margin.
    Under mode=no_screening or mode=static every step reads as not confident.
    """
    s = check_logits(logits, min_size=2)
    p = softmax(s)
    m = logit_margin(s)
    max_prob = float(p.max())
    if cfg.mode in ("no_screening", "static"):
        return False, m, max_prob
    confident = max_prob > cfg.tau_conf and m > cfg.tau_margin
    return confident, m, max_prob


def sensitivity(margin: float, cfg: PadConfig) -> float:
    """Margin-scaled sensitivity Delta_t = clamp(1/(1+ln(1+m)), delta_min, 1)."""
    if margin < 0.0:
        raise ValueError("margin must be >= 0")
    if cfg.mode == "no_sensitivity":
        return 1.0
    raw = 1.0 / (1.0 + math.log1p(margin))
    return min(1.0, max(cfg.delta_min, raw))


def calibrate(probs, t: int, cfg: PadConfig) -> float:
    """Context calibration factor in [1 - w_entropy, 1 + w_pos + w_conf]."""
    if t < 0:
        raise ValueError("step index must be >= 0")
    if cfg.mode in ("no_calibration", "static"):
        return 1.0
    p = np.asarray(probs, dtype=np.float64)
    h = normalized_entropy(p)
    f_pos = 1.0 / (1.0 + 0.1 * t)
    f_conf = 1.0 - float(p.max())
    return (1.0 - cfg.w_entropy) + cfg.w_entropy * h + cfg.w_pos * f_pos + cfg.w_conf * f_conf


def base_sigma(cfg: PadConfig) -> float:
    """Base noise scale eps_min / max(eps_base, eps_min)."""
    return cfg.eps_min / max(cfg.eps_base, cfg.eps_min)


def pad_step(logits, t: int, cfg: PadConfig, rng: np.random.Generator, ledger) -> tuple[np.ndarray, StepDecision]:
    """Run one decoding step of the mechanism.

    Returns (noisy_logits, decision) and appends one record to `ledger`
    (an accounting.AccountantLedger). Confident steps record
    (sigma_min, 0, unprotected); all others record (sigma_t, Delta_t,
    protected) with sigma_t = base_sigma * calibrate * (Delta_t / eps_base)
    * lambda_amp, floored at sigma_min. A non-positive composed sigma_t on a
    protected step means the config has degenerate weights and raises
    RuntimeError.
    """
    if t < 0:
        raise ValueError("step index must be >= 0")
    s = check_logits(logits, min_size=2)
    p = softmax(s)
    m = logit_margin(s)
    max_prob = float(p.max())
    h = normalized_entropy(p)

    if cfg.mode == "static":
        sigma = max(base_sigma(cfg) * cfg.lambda_amp, cfg.sigma_min)
        delta_t = 1.0
        protected = True
    else:
        confident, m, max_prob = screen(s, cfg)
        if confident:
            sigma = cfg.sigma_min
            delta_t = 0.0
            protected = False
        else:
            delta_t = sensitivity(m, cfg)
            cal = calibrate(p, t, cfg)
            sigma = base_sigma(cfg) * cal * (delta_t / cfg.eps_base) * cfg.lambda_amp
            sigma = max(sigma, cfg.sigma_min)
            protected = True

    if protected and sigma <= 0.0:
        raise RuntimeError(f"composed sigma_t = {sigma!r} <= 0 on a protected step; config is degenerate")

    noisy = s + sigma * rng.standard_normal(s.size)
    ledger.record_step(sigma, delta_t, protected)
    decision = StepDecision(
        protected=protected,
        margin=m,
        max_prob=max_prob,
        entropy=h,
        delta_t=delta_t,
        sigma_t=sigma,
    )
    return noisy, decision
