"""Domain types and closed-form rate arithmetic for a secure rate-splitting downlink.

A base station with ``n_antennas`` transmit antennas serves ``n_users``
single-antenna users.  Under 1-layer rate splitting every user decodes a
shared common stream, then its own private stream, and may afterwards try to
decode the private streams of the other users (internal eavesdropping).  This
module holds the immutable value objects (channels, CSIT error model,
precoder solutions) and the SINR / rate / secrecy-rate arithmetic shared by
the optimizers, the oracles and the experiment harness.

Conventions: rates are in bits per channel use (log base 2), the noise
variance defaults to 1 so transmit SNR equals the power budget, and complex
Gaussian entries are drawn with i.i.d. N(0, 1/2) real and imaginary parts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChannelSet",
    "CsitModel",
    "RateBreakdown",
    "SecrecySpec",
    "PrecoderSolution",
    "specific_channels",
    "random_channels",
    "sample_csit",
    "stack_channels",
    "compute_sinrs",
    "wsr",
    "precoder_power",
    "derive_trial_seed",
]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ChannelSet:
    """Channel vectors of all users; row ``k`` is user-k's length-``n_antennas`` channel."""

    gains: np.ndarray

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=complex)
        if gains.ndim != 2 or gains.shape[0] < 1 or gains.shape[1] < 1:
            raise ValueError(f"channel matrix must be (K, N_t) with K, N_t >= 1, got {gains.shape}")
        if not np.all(np.isfinite(gains)):
            raise ValueError("channel entries must be finite")
        object.__setattr__(self, "gains", _freeze(gains))

    @property
    def n_users(self) -> int:
        return self.gains.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.gains.shape[1]

    def user(self, k: int) -> np.ndarray:
        return self.gains[k]

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.gains.imag), initial=0.0) <= tol)


def specific_channels(gain: float, angle: float, n_antennas: int = 2) -> ChannelSet:
    """Two-user deterministic channel: h1 all-ones, h2 a scaled phase ramp.

    ``gain`` is the relative strength of user 2 and ``angle`` the phase
    difference between the users.  For ``n_antennas = 2`` this is
    h1 = [1, 1], h2 = gain * [1, e^{j*angle}]; larger arrays extend the ramp
    as gain * [1, e^{j*angle}, e^{j*2*angle}, ...], preserving the
    single-parameter angle interpretation.
    """
    if gain <= 0:
        raise ValueError(f"relative channel gain must be positive, got {gain}")
    if n_antennas < 2:
        raise ValueError("specific channels need at least 2 antennas")
    h1 = np.ones(n_antennas, dtype=complex)
    ramp = np.exp(1j * angle * np.arange(n_antennas))
    return ChannelSet(np.vstack([h1, gain * ramp]))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) entries: real and imaginary parts i.i.d. N(0, 1/2)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_channels(n_users: int, n_antennas: int, seed) -> ChannelSet:
    """I.i.d. circularly-symmetric complex Gaussian channels with unit entry variance."""
    if n_users < 1 or n_antennas < 1:
        raise ValueError("n_users and n_antennas must be >= 1")
    return ChannelSet(_complex_normal(_rng(seed), (n_users, n_antennas)))


@dataclass(frozen=True)
class CsitModel:
    """Imperfect transmitter-side channel knowledge.

    ``estimate`` is the available channel estimate; ``error_var`` the per-user
    variance of the estimation error.  ``quality``/``exponent``/``power``
    record the scaling law error_var = quality * power**(-exponent) when the
    model was built that way (kept for reporting).
    """

    estimate: ChannelSet
    error_var: np.ndarray
    quality: float = float("nan")
    exponent: float = float("nan")
    power: float = float("nan")

    def __post_init__(self):
        ev = np.broadcast_to(np.asarray(self.error_var, dtype=float), (self.estimate.n_users,)).copy()
        if np.any(ev < 0) or not np.all(np.isfinite(ev)):
            raise ValueError("error variances must be finite and nonnegative")
        object.__setattr__(self, "error_var", _freeze(ev))

    @classmethod
    def from_quality(cls, estimate: ChannelSet, quality: float, exponent: float, power: float) -> "CsitModel":
        """Build with the power-scaling law error_var = quality * power**(-exponent)."""
        if quality < 0 or exponent < 0 or power <= 0:
            raise ValueError("quality and exponent must be nonnegative, power positive")
        ev = quality * power ** (-exponent)
        return cls(estimate=estimate, error_var=np.full(estimate.n_users, ev),
                   quality=quality, exponent=exponent, power=power)


def sample_csit(model: CsitModel, count: int, seed) -> list[ChannelSet]:
    """Conditional channel realizations around the estimate.

    Realization m is sqrt(1 - error_var) * estimate + sqrt(error_var) * G_m
    per user, with G_m i.i.d. CN(0, 1); the construction keeps unit entry
    variance when the estimate itself has entry variance 1 - error_var.
    Deterministic for a fixed seed.
    """
    if count < 1:
        raise ValueError("need at least one sample")
    if np.any(model.error_var > 1.0):
        raise ValueError("error variance must lie in [0, 1] for the scaled sample construction")
    rng = _rng(seed)
    hhat = model.estimate.gains
    keep = np.sqrt(1.0 - model.error_var)[:, None]
    spread = np.sqrt(model.error_var)[:, None]
    draws = _complex_normal(rng, (count,) + hhat.shape)
    return [ChannelSet(keep * hhat + spread * draws[m]) for m in range(count)]


def stack_channels(channels: list[ChannelSet]) -> np.ndarray:
    """Stack a sample list into an (M, K, N_t) array."""
    return np.stack([c.gains for c in channels])


@dataclass(frozen=True)
class RateBreakdown:
    """SINRs, rates and secrecy rates for one channel/precoder pair.

    ``*_wiretap[k, j]`` refers to user-k's private stream as decoded by
    user j (the eavesdropper); diagonal entries are unused and set to 0.
    ``secrecy[k]`` is max(0, rate_private[k] - max_j rate_wiretap[k, j]).
    """

    sinr_common: np.ndarray
    sinr_private: np.ndarray
    sinr_wiretap: np.ndarray
    rate_common: np.ndarray
    rate_private: np.ndarray
    rate_wiretap: np.ndarray
    secrecy: np.ndarray
    noise_var: float

    @property
    def n_users(self) -> int:
        return self.sinr_common.shape[0]

    def max_wiretap(self) -> np.ndarray:
        """Strongest eavesdropper rate against each user's private stream."""
        return _max_offdiag_rows(self.rate_wiretap)


def _max_offdiag_rows(mat: np.ndarray) -> np.ndarray:
    k = mat.shape[0]
    if k == 1:
        return np.zeros(1)
    masked = np.where(np.eye(k, dtype=bool), -np.inf, mat)
    return np.maximum(masked.max(axis=1), 0.0)


def compute_sinrs(channels: ChannelSet, common: np.ndarray, private: np.ndarray,
                  noise_var: float = 1.0) -> RateBreakdown:
    """Per-stream SINRs, rates and secrecy rates.

    ``common`` is the common-stream precoder (length N_t), ``private`` the
    (N_t, K) matrix whose column k precodes user-k's private stream.  The
    common stream sees every private stream as interference; each private
    stream sees all other private streams; eavesdropper j decoding stream k
    has removed the common stream and its own private stream.
    """
    if noise_var <= 0:
        raise ValueError(f"noise variance must be positive, got {noise_var}")
    h = channels.gains
    k_users, n_t = h.shape
    common = np.asarray(common, dtype=complex).reshape(-1)
    private = np.asarray(private, dtype=complex)
    if private.ndim != 2 or private.shape != (n_t, k_users):
        raise ValueError(f"private precoders must be ({n_t}, {k_users}), got {private.shape}")
    if common.shape[0] != n_t:
        raise ValueError(f"common precoder must have length {n_t}, got {common.shape[0]}")

    # pow_c[k] = |h_k^H p_c|^2 ; pow_p[k, j] = |h_k^H p_j|^2
    pow_c = np.abs(h.conj() @ common) ** 2
    pow_p = np.abs(h.conj() @ private) ** 2

    total_private = pow_p.sum(axis=1)
    sinr_common = pow_c / (total_private + noise_var)
    own = np.diag(pow_p)
    sinr_private = own / (total_private - own + noise_var)

    # eavesdropper j decoding stream k: interference from privates except j's own and stream k
    sinr_wiretap = np.zeros((k_users, k_users))
    for k in range(k_users):
        for j in range(k_users):
            if j == k:
                continue
            interference = total_private[j] - pow_p[j, j] - pow_p[j, k]
            sinr_wiretap[k, j] = pow_p[j, k] / (interference + noise_var)

    rate_common = np.log2(1.0 + sinr_common)
    rate_private = np.log2(1.0 + sinr_private)
    rate_wiretap = np.log2(1.0 + sinr_wiretap)
    secrecy = np.maximum(rate_private - _max_offdiag_rows(rate_wiretap), 0.0)

    return RateBreakdown(
        sinr_common=_freeze(sinr_common), sinr_private=_freeze(sinr_private),
        sinr_wiretap=_freeze(sinr_wiretap), rate_common=_freeze(rate_common),
        rate_private=_freeze(rate_private), rate_wiretap=_freeze(rate_wiretap),
        secrecy=_freeze(secrecy), noise_var=float(noise_var))


def wsr(breakdown: RateBreakdown, common_rate: np.ndarray, weights: np.ndarray) -> float:
    """Weighted sum rate sum_k u_k * (C_k + R_private_k)."""
    c = np.asarray(common_rate, dtype=float)
    u = np.asarray(weights, dtype=float)
    if c.shape != (breakdown.n_users,) or u.shape != (breakdown.n_users,):
        raise ValueError("common-rate vector and weights must have one entry per user")
    if np.any(c < 0):
        raise ValueError("common-rate allocations must be nonnegative")
    return float(u @ (c + breakdown.rate_private))


@dataclass(frozen=True)
class SecrecySpec:
    """Per-user secrecy-rate thresholds (bits/channel use) and rate weights."""

    thresholds: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.thresholds, dtype=float)
        u = np.asarray(self.weights, dtype=float)
        if th.ndim != 1 or u.shape != th.shape:
            raise ValueError("thresholds and weights must be 1-D and the same length")
        if np.any(th < 0):
            raise ValueError("secrecy thresholds must be nonnegative")
        if np.any(u < 0) or not np.any(u > 0):
            raise ValueError("weights must be nonnegative with at least one positive entry")
        object.__setattr__(self, "thresholds", _freeze(th))
        object.__setattr__(self, "weights", _freeze(u))

    @classmethod
    def uniform(cls, threshold: float, weights) -> "SecrecySpec":
        u = np.asarray(weights, dtype=float)
        return cls(np.full(u.shape, float(threshold)), u)

    @property
    def n_users(self) -> int:
        return self.thresholds.shape[0]


def precoder_power(common: np.ndarray, private: np.ndarray) -> float:
    """Total transmit power of a precoder set, tr(P P^H)."""
    return float(np.sum(np.abs(common) ** 2) + np.sum(np.abs(private) ** 2))


@dataclass(frozen=True)
class PrecoderSolution:
    """Optimized precoders with the rate breakdown recomputed from closed forms.

    ``scheme`` is "rs" or "mulp" (the latter has a zero common precoder and a
    zero common-rate vector).  For imperfect-CSIT solves the breakdown holds
    sample-average rates over the optimizer's channel samples and ``wsr`` is
    the weighted average sum rate.
    """

    scheme: str
    common: np.ndarray
    private: np.ndarray
    common_rate: np.ndarray
    wsr: float
    breakdown: RateBreakdown
    iterations: int
    converged: bool
    feasible: bool
    objective_trace: tuple = ()
    notes: tuple = ()
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "common", _freeze(np.asarray(self.common, dtype=complex)))
        object.__setattr__(self, "private", _freeze(np.asarray(self.private, dtype=complex)))
        cr = np.asarray(self.common_rate, dtype=float)
        object.__setattr__(self, "common_rate", _freeze(cr))

    def power(self) -> float:
        return precoder_power(self.common, self.private)

    @property
    def n_users(self) -> int:
        return self.private.shape[1]


def derive_trial_seed(master_seed: int, trial_index: int) -> np.random.SeedSequence:
    """Deterministic per-trial seed: mixes (master_seed, trial_index) into one stream.

    Parallel trials each construct their own generator from this, so results
    are identical regardless of worker count or execution order.
    """
    return np.random.SeedSequence(entropy=(int(master_seed), int(trial_index)))
