"""Closed-form expected statistics for every source configuration.

Pure functions mapping source parameters to the quantities the
estimators measure: bias, lag-1 autocorrelation, mutual information
between adjacent bits, conditional entropy of the next bit given the
previous one, per-bit randomness deviation, its sampling uncertainty,
and the usable-length bound implied by a given deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from randev.sources import (
    DEADTIME_MODES,
    ParameterError,
    SourceConfig,
    markov_transition_matrix,
)

__all__ = [
    "ModelPrediction",
    "binary_entropy",
    "deadtime_a1",
    "mi_exact_unbiased",
    "mi_parabolic",
    "markov_prediction",
    "predict_source",
    "deviation_sigma",
    "n_max",
]

_LN2 = math.log(2.0)


def binary_entropy(q: float) -> float:
    """Entropy in bits of a binary variable taking one value with probability q.

    Uses the convention 0 * log2(0) = 0, so the deterministic limits
    q = 0 and q = 1 return exactly 0.0.
    """
    if not 0.0 <= q <= 1.0:
        raise ParameterError(f"probability q={q} outside [0, 1]")
    if q == 0.0 or q == 1.0:
        return 0.0
    return -(q * math.log2(q) + (1.0 - q) * math.log2(1.0 - q))


def deadtime_a1(tau: float, tau_d: float, deadtime_mode: str = "reroute") -> float:
    """Lag-1 autocorrelation of the dead-time detector pair.

    ``tau`` is the mean photon spacing and ``tau_d`` the per-detector
    dead time.  In the default rerouting model a photon aimed at a dead
    detector fires the other one, forcing alternation:
    a1 = exp(-tau_d/tau) - 1.  In the loss model the rerouted photon is
    discarded, which erases half of the forced alternations:
    a1 = exp(-tau_d/(2*tau)) - 1.  Both are exact only for
    tau_d << tau; the simulator is the reference beyond that regime.
    """
    if tau <= 0.0:
        raise ParameterError(f"tau={tau} must be positive")
    if tau_d < 0.0:
        raise ParameterError(f"tau_d={tau_d} must be non-negative")
    if deadtime_mode not in DEADTIME_MODES:
        raise ParameterError(
            f"deadtime_mode={deadtime_mode!r} not in {DEADTIME_MODES}"
        )
    if deadtime_mode == "loss":
        return math.expm1(-0.5 * tau_d / tau)
    return math.expm1(-tau_d / tau)


def mi_exact_unbiased(a1: float) -> float:
    """Mutual information in bits between adjacent bits of a balanced source.

    Direct evaluation of
    (1/2)(1+a1)*log2(1+a1) + (1/2)(1-a1)*log2(1-a1),
    with the zero-log convention; equals 1 - binary_entropy((1+a1)/2)
    but is computed independently of that route.
    """
    if not -1.0 <= a1 <= 1.0:
        raise ParameterError(f"a1={a1} outside [-1, 1]")
    total = 0.0
    for w in (1.0 + a1, 1.0 - a1):
        if w > 0.0:
            total += 0.5 * w * math.log2(w)
    return total


def mi_parabolic(a1: float) -> float:
    """Small-correlation approximation a1**2 / (2 ln 2) of mi_exact_unbiased.

    Accepts the closed interval [-1, 1]; the quality of the
    approximation degrades as |a1| grows (see mi_exact_unbiased).
    """
    if not -1.0 <= a1 <= 1.0:
        raise ParameterError(f"a1={a1} outside [-1, 1]")
    return a1 * a1 / (2.0 * _LN2)


@dataclass(frozen=True)
class ModelPrediction:
    """Expected values of every measured quantity for one source setup.

    ``deviation_exact`` is 1 - cond_entropy; ``deviation_approx`` is the
    quadratic shortcut (a1**2 + bias**2) / (2 ln 2).
    """

    bias: float
    a1: float
    mutual_info: float
    cond_entropy: float
    deviation_exact: float
    deviation_approx: float


def markov_prediction(b: float, a1: float) -> ModelPrediction:
    """Exact statistics of the stationary two-state Markov source (b, a1).

    cond_entropy is the stationary mixture of the two rows' transition
    entropies; mutual_info follows from the chain rule against the
    marginal entropy.
    """
    m = markov_transition_matrix(b, a1)
    h0 = binary_entropy(m.p1_given_0)
    h1 = binary_entropy(m.p1_given_1)
    # offset form keeps the a1 = 0 case exact: h0 == h1 gives ce == h1
    ce = h1 + m.pi0 * (h0 - h1)
    if ce > 1.0:
        ce = 1.0
    mi = binary_entropy(m.pi1) - ce
    if mi < 0.0:
        mi = 0.0
    return ModelPrediction(
        bias=b,
        a1=a1,
        mutual_info=mi,
        cond_entropy=ce,
        deviation_exact=1.0 - ce,
        deviation_approx=(a1 * a1 + b * b) / (2.0 * _LN2),
    )


def _marginal_only_prediction(b: float) -> ModelPrediction:
    """Prediction for a memoryless source of bias b, including |b| = 1."""
    if abs(b) == 1.0:
        # constant output: next bit fully determined, zero entropy
        return ModelPrediction(
            bias=b,
            a1=0.0,
            mutual_info=0.0,
            cond_entropy=0.0,
            deviation_exact=1.0,
            deviation_approx=b * b / (2.0 * _LN2),
        )
    return markov_prediction(b, 0.0)


def predict_source(config: SourceConfig) -> ModelPrediction:
    """Closed-form expected statistics for any source configuration.

    The xorshift64 generator is statistically indistinguishable from
    the ideal source at the pair level, so its prediction is all-zero
    deviations; its true information content is bounded by the seed
    size, which per-bit statistics cannot see.
    """
    config.validate()
    kind = config.kind
    if kind in ("ideal", "xorshift64"):
        return markov_prediction(0.0, 0.0)
    if kind == "bernoulli":
        return _marginal_only_prediction(2.0 * config.p - 1.0)
    if kind == "splitter":
        return _marginal_only_prediction(config.b)
    if kind == "markov":
        return markov_prediction(config.b, config.a1)
    if kind == "deadtime":
        a1 = deadtime_a1(config.tau, config.tau_d, config.deadtime_mode)
        return markov_prediction(0.0, a1)
    raise ParameterError(f"unknown source kind {kind!r}")


def deviation_sigma(deviation: float, n_bits: float) -> float:
    """Statistical uncertainty of a deviation measured on n_bits bits.

    sqrt(2 * deviation / (n_bits * ln 2)); equals the error propagated
    from the 1/sqrt(N) uncertainties of the bias and autocorrelation
    estimates through the quadratic deviation formula.
    """
    if deviation < 0.0:
        raise ParameterError(f"deviation={deviation} must be non-negative")
    if n_bits < 1:
        raise ParameterError(f"n_bits={n_bits} must be at least 1")
    return math.sqrt(2.0 * deviation / (n_bits * _LN2))


def n_max(deviation: float) -> float:
    """Longest usable sequence for a source with the given deviation.

    2 / (ln 2 * deviation); returns math.inf when the deviation is
    exactly zero (no detectable imperfection at any length).
    """
    if deviation < 0.0:
        raise ParameterError(f"deviation={deviation} must be non-negative")
    if deviation == 0.0:
        return math.inf
    return 2.0 / (_LN2 * deviation)
