"""Link-level model: CQI table, finite-blocklength spectral efficiency, power slopes.

All functions are pure and operate on plain floats so the per-slot solver
stays cheap; nothing here keeps state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

# 3GPP TS 38.214 Table 5.2.2.1-2 (4-bit CQI, up to 64QAM), bit/s/Hz.
NR_CQI_EFFICIENCY = (
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770,
    1.1758, 1.4766, 1.9141, 2.4063, 2.7305,
    3.3223, 3.9023, 4.5234, 5.1152, 5.5547,
)

_SQRT2 = math.sqrt(2.0)
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class CqiEntry:
    index: int
    se_shannon: float
    sinr_threshold: float

    def __post_init__(self):
        if not 1 <= self.index <= 15:
            raise ValueError(f"CQI index must be in 1..15, got {self.index}")
        if self.se_shannon <= 0 or self.sinr_threshold <= 0:
            raise ValueError(f"CQI {self.index}: efficiency and threshold must be positive")


@dataclass(frozen=True)
class LinkBudget:
    """Link-budget constants shared by every slice.

    ``n0_per_prb`` is thermal noise power integrated over one PRB (W);
    ``psd_min`` is the power floor per allocated PRB (W/PRB).
    """

    n0_per_prb: float
    noise_figure_db: float = 9.0
    interference_margin_db: float = 6.0
    misreport_inflation: float = 1.12
    psd_min: float = 1e-4
    prb_width_hz: float = 180e3

    def __post_init__(self):
        if self.n0_per_prb <= 0:
            raise ValueError("n0_per_prb must be positive")
        if self.misreport_inflation < 1:
            raise ValueError("misreport_inflation must be >= 1")
        if self.psd_min < 0:
            raise ValueError("psd_min must be non-negative")
        if self.prb_width_hz <= 0:
            raise ValueError("prb_width_hz must be positive")

    @classmethod
    def from_noise_density(cls, dbm_per_hz: float = -174.0, prb_width_hz: float = 180e3, **kwargs) -> "LinkBudget":
        n0 = 10.0 ** ((dbm_per_hz - 30.0) / 10.0) * prb_width_hz
        return cls(n0_per_prb=n0, prb_width_hz=prb_width_hz, **kwargs)

    @property
    def margin_factor(self) -> float:
        """Linear NF x IM x misreport inflation."""
        return (10.0 ** (self.noise_figure_db / 10.0)
                * 10.0 ** (self.interference_margin_db / 10.0)
                * self.misreport_inflation)


@dataclass(frozen=True)
class FblParams:
    blocklength: int = 168
    target_pep: float = 1e-5
    enabled: bool = False

    def __post_init__(self):
        if self.blocklength < 1:
            raise ValueError("blocklength must be >= 1")
        if not 0 < self.target_pep < 0.5:
            raise ValueError("target_pep must be in (0, 0.5)")


def default_cqi_table(efficiencies: Sequence[float] = NR_CQI_EFFICIENCY,
                      thresholds: Sequence[float] | None = None) -> tuple[CqiEntry, ...]:
    """Build the CQI table; thresholds default to 2**SE - 1 (inverted Shannon)."""
    if thresholds is None:
        thresholds = [2.0 ** se - 1.0 for se in efficiencies]
    if len(thresholds) != len(efficiencies):
        raise ValueError("efficiency and threshold columns differ in length")
    table = tuple(CqiEntry(i + 1, float(se), float(g))
                  for i, (se, g) in enumerate(zip(efficiencies, thresholds)))
    validate_cqi_table(table)
    return table


def validate_cqi_table(table: Sequence[CqiEntry]) -> None:
    if not table:
        raise ValueError("CQI table is empty")
    for i, entry in enumerate(table):
        if entry.index != i + 1:
            raise ValueError(f"CQI table row {i} has index {entry.index}, expected {i + 1}")
    for prev, cur in zip(table, table[1:]):
        if cur.se_shannon <= prev.se_shannon:
            raise ValueError(f"efficiency not strictly increasing at CQI {cur.index}")
        if cur.sinr_threshold <= prev.sinr_threshold:
            raise ValueError(f"SINR threshold not strictly increasing at CQI {cur.index}")


def q_function(x: float) -> float:
    """Upper-tail standard normal probability."""
    return 0.5 * math.erfc(x / _SQRT2)


# Acklam's rational approximation for the normal quantile.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _norm_ppf_acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log1p(-p))
        return -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                 / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def inverse_q(p: float) -> float:
    """Return x with Q(x) = p, where Q is the upper-tail normal probability.

    Rational initial guess followed by one Halley step on the lower-tail CDF,
    which brings the error to float precision over (0, 1).
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"inverse_q requires 0 < p < 1, got {p!r}")
    if p > 0.5:
        # 1 - p is exact here, and the refinement below loses digits near p = 1
        return -inverse_q(1.0 - p)
    # Q(x) = p  <=>  Phi(-x) = p; refining z = Phi^{-1}(p) keeps small p well conditioned.
    z = _norm_ppf_acklam(p)
    err = 0.5 * math.erfc(-z / _SQRT2) - p
    u = err * math.sqrt(2.0 * math.pi) * math.exp(0.5 * z * z)
    z = z - u / (1.0 + 0.5 * z * u)
    return 0.0 - z


def shannon_se(gamma: float) -> float:
    return math.log2(1.0 + gamma)


def fbl_spectral_efficiency(gamma: float, fbl: FblParams) -> float:
    """Normal-approximation achievable rate in bit/s/Hz, clamped at zero."""
    if gamma <= 0:
        raise ValueError(f"SNR must be positive, got {gamma!r}")
    capacity = math.log2(1.0 + gamma)
    if not fbl.enabled:
        return capacity
    dispersion = (gamma / (1.0 + gamma)) ** 2
    penalty = math.sqrt(dispersion / fbl.blocklength) / _LN2 * inverse_q(fbl.target_pep)
    return max(0.0, capacity - penalty)


def effective_se_table(h: float, cqi_table: Sequence[CqiEntry], link: LinkBudget,
                       fbl: FblParams) -> list[float]:
    """Per-CQI effective spectral efficiency (bit/s/Hz).

    The FBL penalty is evaluated at each CQI's decoding threshold, so the
    result does not depend on ``h``; the argument is kept for a uniform call
    signature with :func:`power_slope`.
    """
    if h <= 0:
        raise ValueError(f"channel gain must be positive, got {h!r}")
    if not fbl.enabled:
        return [c.se_shannon for c in cqi_table]
    return [fbl_spectral_efficiency(c.sinr_threshold, fbl) for c in cqi_table]


def power_slope(h: float, entry: CqiEntry, link: LinkBudget) -> float:
    """Transmit power per PRB (W) needed to reach ``entry``'s SINR threshold."""
    if h <= 0:
        raise ValueError(f"channel gain must be positive, got {h!r}")
    return entry.sinr_threshold * link.margin_factor * link.n0_per_prb / h


def power_slopes(h: float, cqi_table: Sequence[CqiEntry], link: LinkBudget) -> list[float]:
    if h <= 0:
        raise ValueError(f"channel gain must be positive, got {h!r}")
    k = link.margin_factor * link.n0_per_prb / h
    return [c.sinr_threshold * k for c in cqi_table]


def feasibility_mask(h: float, cqi_table: Sequence[CqiEntry], link: LinkBudget,
                     b_cap: float, p_cap: float) -> list[bool]:
    """True where a CQI may be used: its effective PSD must not exceed P_cap/B_cap."""
    if b_cap <= 0 or p_cap <= 0:
        raise ValueError("caps must be positive")
    ceiling = p_cap / b_cap
    return [max(a, link.psd_min) <= ceiling for a in power_slopes(h, cqi_table, link)]
