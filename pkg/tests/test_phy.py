import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from slicesim.phy import (NR_CQI_EFFICIENCY, CqiEntry, FblParams, LinkBudget, default_cqi_table,
                          effective_se_table, fbl_spectral_efficiency, feasibility_mask,
                          inverse_q, power_slope, power_slopes, q_function, shannon_se,
                          validate_cqi_table)

mpmath.mp.dps = 50


def ref_inverse_q(p):
    return float(mpmath.sqrt(2) * mpmath.erfinv(1 - 2 * mpmath.mpf(p)))


def ref_fbl(gamma, n, eps):
    g = mpmath.mpf(gamma)
    v = (g / (1 + g)) ** 2
    z = mpmath.sqrt(2) * mpmath.erfinv(1 - 2 * mpmath.mpf(eps))
    r = mpmath.log(1 + g, 2) - mpmath.sqrt(v / n) / mpmath.log(2) * z
    return float(max(r, 0))


@pytest.mark.parametrize("p", [1e-12, 1e-9, 1e-5, 1e-3, 0.01, 0.02425, 0.1, 0.3, 0.5, 0.7,
                               0.97575, 0.99, 1 - 1e-7])
def test_inverse_q_matches_high_precision(p):
    assert inverse_q(p) == pytest.approx(ref_inverse_q(p), rel=1e-12, abs=1e-14)


def test_inverse_q_known_value():
    assert inverse_q(1e-5) == pytest.approx(4.264890793922825, rel=1e-13)
    assert inverse_q(0.5) == 0.0
    assert math.copysign(1.0, inverse_q(0.5)) == 1.0


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_inverse_q_domain(p):
    with pytest.raises(ValueError):
        inverse_q(p)


@given(st.floats(min_value=1e-300, max_value=1 - 1e-12))
def test_q_inverse_roundtrip(p):
    z = inverse_q(p)
    assert q_function(z) == pytest.approx(p, rel=1e-9)


def test_fbl_known_value():
    assert fbl_spectral_efficiency(10.0, FblParams(168, 1e-5, True)) == pytest.approx(
        3.027877636779731, rel=1e-12)


def test_fbl_disabled_is_shannon():
    assert fbl_spectral_efficiency(7.0, FblParams(168, 1e-5, False)) == 3.0


def test_fbl_clamps_at_zero():
    assert fbl_spectral_efficiency(0.01, FblParams(20, 1e-9, True)) == 0.0


def test_fbl_rejects_nonpositive_snr():
    with pytest.raises(ValueError):
        fbl_spectral_efficiency(0.0, FblParams(enabled=True))


@given(st.floats(min_value=1e-3, max_value=1e4), st.integers(min_value=1, max_value=10**7),
       st.floats(min_value=1e-9, max_value=0.4))
def test_fbl_below_shannon(gamma, n, eps):
    assert fbl_spectral_efficiency(gamma, FblParams(n, eps, True)) <= shannon_se(gamma)


def test_fbl_decreases_with_stricter_error_target():
    g = 20.0
    rates = [fbl_spectral_efficiency(g, FblParams(168, e, True)) for e in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert all(a > b for a, b in zip(rates, rates[1:]))


def test_default_cqi_table():
    table = default_cqi_table()
    assert len(table) == 15
    assert [c.index for c in table] == list(range(1, 16))
    assert table[0].se_shannon == NR_CQI_EFFICIENCY[0]
    for c in table:
        assert c.sinr_threshold == pytest.approx(2 ** c.se_shannon - 1)


def test_validate_cqi_table_rejects_unsorted():
    t = list(default_cqi_table())
    t[3], t[4] = t[4], t[3]
    with pytest.raises(ValueError):
        validate_cqi_table(t)


def test_link_budget_from_noise_density():
    link = LinkBudget.from_noise_density(-174.0, prb_width_hz=180e3)
    assert link.n0_per_prb == pytest.approx(10 ** (-20.4) * 180e3, rel=1e-12)
    assert link.margin_factor == pytest.approx(10 ** 0.9 * 10 ** 0.6 * 1.12, rel=1e-12)


def test_power_slope_formula():
    link = LinkBudget(n0_per_prb=1e-15, noise_figure_db=3.0, interference_margin_db=0.0,
                      misreport_inflation=1.0)
    entry = CqiEntry(1, 1.0, 1.0)
    assert power_slope(1e-10, entry, link) == pytest.approx(10 ** 0.3 * 1e-15 / 1e-10, rel=1e-12)
    slopes = power_slopes(1e-10, default_cqi_table(), link)
    assert slopes == pytest.approx([power_slope(1e-10, c, link) for c in default_cqi_table()])


def test_feasibility_mask_threshold():
    link = LinkBudget(n0_per_prb=1e-15, psd_min=0.0)
    table = default_cqi_table()
    h = 1e-11
    alpha = np.array(power_slopes(h, table, link))
    mask = feasibility_mask(h, table, link, b_cap=10.0, p_cap=10.0 * alpha[6])
    assert mask == [bool(a <= alpha[6]) for a in alpha]
    # a PSD floor above the ceiling masks everything
    floored = LinkBudget(n0_per_prb=1e-15, psd_min=1.0)
    assert not any(feasibility_mask(h, table, floored, b_cap=10.0, p_cap=5.0))


def test_effective_se_table_switches_on_fbl():
    link = LinkBudget(n0_per_prb=1e-15)
    table = default_cqi_table()
    plain = effective_se_table(1e-10, table, link, FblParams(enabled=False))
    fbl = effective_se_table(1e-10, table, link, FblParams(168, 1e-5, enabled=True))
    assert plain == [c.se_shannon for c in table]
    assert all(f < p for f, p in zip(fbl, plain))
