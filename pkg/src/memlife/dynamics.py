"""Closed-form confidence/strength update rules and salience initialization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from .core import Stage, clip01


class ParameterError(ValueError):
    pass


STRENGTH_GAIN = 0.35
CONF_WEIGHT = 0.60
SHOCK_WEIGHT = 0.20


@dataclass(frozen=True)
class DynamicsParams:
    alpha: float = 2.0
    beta: float = 3.0
    lambda_transient: float = 0.9
    lambda_working: float = 0.5
    lambda_durable: float = 0.2
    sigma: float = 1.0
    p_min: float = 0.01
    strength_gain: float = STRENGTH_GAIN
    conf_weight: float = CONF_WEIGHT
    shock_weight: float = SHOCK_WEIGHT
    m_min: float = 0.02
    m_max: float = 0.30
    # sensitivity hook: every admission starts at this strength
    fixed_init_strength: float | None = None

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ParameterError("alpha must be > 0")
        if self.beta < 0 or self.sigma < 0:
            raise ParameterError("beta and sigma must be >= 0")
        lams = (self.lambda_transient, self.lambda_working, self.lambda_durable)
        if not all(0 < lam <= 1 for lam in lams):
            raise ParameterError("lambda values must lie in (0, 1]")
        if not lams[0] >= lams[1] >= lams[2]:
            raise ParameterError("lambda must shrink in deeper stages")
        if not 0 <= self.p_min < 1:
            raise ParameterError("p_min must lie in [0, 1)")
        if not 0 <= self.m_min < self.m_max <= 1:
            raise ParameterError("need 0 <= m_min < m_max <= 1")

    def stage_lambda(self, stage: Stage) -> float:
        if stage == Stage.DURABLE:
            return self.lambda_durable
        if stage == Stage.WORKING:
            return self.lambda_working
        return self.lambda_transient

    def with_overrides(self, **kw) -> "DynamicsParams":
        return replace(self, **kw)


def evidence_input_factor(c_hat: float, alpha: float) -> float:
    if alpha <= 0:
        raise ParameterError("alpha must be > 0")
    return math.expm1(alpha * c_hat) / math.expm1(alpha)


def confidence_retention_factor(sigma: float, sign: int) -> float:
    """Conflict attenuation: 1 for supportive evidence, exp(-2*sigma) otherwise."""
    if sigma < 0:
        raise ParameterError("sigma must be >= 0")
    if sign not in (1, -1):
        raise ParameterError("sign must be +1 or -1")
    return math.exp(sigma * (sign - 1))


def strength_resistance(m: float, beta: float) -> float:
    if not 0.0 <= m <= 1.0:
        raise ParameterError("strength must lie in [0, 1]")
    if beta < 0:
        raise ParameterError("beta must be >= 0")
    return math.exp(-beta * m)


def plasticity(lam: float, e_in: float, r_conf: float, r_str: float, p_min: float) -> float:
    return min(1.0, max(p_min, lam * e_in * r_conf * r_str))


def update_confidence(c: float, p: float, sign: int) -> float:
    if sign > 0:
        return clip01(c + p * (1.0 - c))
    return clip01(c * (1.0 - p))


def strength_base(c_hat: float, shock: float,
                  conf_weight: float = CONF_WEIGHT, shock_weight: float = SHOCK_WEIGHT) -> float:
    return clip01(conf_weight * c_hat + shock_weight * shock)


def update_strength(m: float, p: float, b: float, gain: float = STRENGTH_GAIN) -> float:
    return clip01(m + p * gain * b * (1.0 - m))


def salience_to_strength(s_sal: float, m_min: float, m_max: float) -> float:
    if not m_min < m_max:
        raise ParameterError("m_min must be below m_max")
    return m_min + (m_max - m_min) * s_sal


def sigmoid(h: float) -> float:
    if h >= 0:
        return 1.0 / (1.0 + math.exp(-h))
    z = math.exp(h)
    return z / (1.0 + z)


@dataclass(frozen=True)
class SalienceFeatures:
    x: tuple[float, ...]
    u: float
    c_hat: float
    z: float

    def vector(self) -> tuple[float, ...]:
        return (*self.x, self.u, self.c_hat, self.z)

    @classmethod
    def from_cues(cls, cues, c_hat: float | None = None, z: float | None = None) -> "SalienceFeatures":
        return cls(
            x=(cues.importance_cue, float(cues.constraint_language_cue)),
            u=cues.strength_signal,
            c_hat=cues.evidence_confidence if c_hat is None else c_hat,
            z=cues.shock if z is None else z,
        )


# weight order: importance_cue, constraint_language_cue, u, c_hat, z
DEFAULT_SALIENCE_WEIGHTS = (1.5, 1.0, 3.0, 0.5, 1.5)
DEFAULT_SALIENCE_BIAS = -3.0


@dataclass(frozen=True)
class LogisticScorer:
    """Hand-set logistic salience scorer; swap in learned weights if available."""

    weights: tuple[float, ...] = DEFAULT_SALIENCE_WEIGHTS
    bias: float = DEFAULT_SALIENCE_BIAS

    def __call__(self, vec: Sequence[float]) -> float:
        if len(vec) != len(self.weights):
            raise ValueError(
                f"feature dimension mismatch: got {len(vec)}, scorer expects {len(self.weights)}")
        return self.bias + sum(w * v for w, v in zip(self.weights, vec))


SalienceScorer = Callable[[Sequence[float]], float]


def salience_score(features: SalienceFeatures, scorer: SalienceScorer | None = None) -> float:
    scorer = scorer or LogisticScorer()
    vec = features.vector()
    if not all(0.0 <= v <= 1.0 for v in vec):
        raise ValueError("salience features must lie in [0, 1]")
    s = sigmoid(scorer(vec))
    # keep the open interval even when the pre-activation saturates a double
    return min(max(s, 1e-12), 1.0 - 1e-12)


@dataclass
class UpdateRule:
    """Applies one evidence event to an item's (c, m) pair.

    ``use_strength_resistance=False`` gives the collapsed single-state update.
    """

    params: DynamicsParams = field(default_factory=DynamicsParams)
    use_strength_resistance: bool = True

    def plasticity_for(self, c_hat: float, sign: int, m: float, stage: Stage) -> float:
        prm = self.params
        e_in = evidence_input_factor(c_hat, prm.alpha)
        r_conf = confidence_retention_factor(prm.sigma, sign)
        r_str = strength_resistance(m, prm.beta) if self.use_strength_resistance else 1.0
        return plasticity(prm.stage_lambda(stage), e_in, r_conf, r_str, prm.p_min)

    def apply(self, c: float, m: float, c_hat: float, sign: int, shock: float,
              stage: Stage) -> tuple[float, float, float]:
        """Return (c', m', p)."""
        prm = self.params
        p = self.plasticity_for(c_hat, sign, m, stage)
        c_new = update_confidence(c, p, sign)
        m_new = m
        if sign > 0:
            b = strength_base(c_hat, clip01(shock), prm.conf_weight, prm.shock_weight)
            m_new = update_strength(m, p, b, prm.strength_gain)
        return c_new, m_new, p
