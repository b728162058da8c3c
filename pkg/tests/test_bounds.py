import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import mp_oracle
from grantfree.bounds import (BoundInputs, omc_pof_bound, omc_pof_bound_large_m, otd_pof_bound,
                              otd_pof_bound_large_m, solve_measurement_inequality, subexp_params)
from grantfree.errors import CapExceeded, ConfigError, LogLogDomainError, PowerControlRequired

L0, M0, N0, K0 = 49510, 50000, 400000, 40
S2 = 1 / L0

# 50-digit oracle values, frozen when the oracle was written
GOLDEN_PARAMS = {
    "t": 0.99997980206018986, "t_f": 2.9999798020601899,
    "b_nb": 0.0076928786955911324, "b_fb": 0.0076928786955911324,
    "b_ng": 0.0075005567282013541, "b_fg": 0.0075005567282013541,
    "nu2_nb": 7.0031089324713848e-8, "nu2_ng": 6.0974839511510357e-5,
    "nu2_fb": 7.3637857349663786e-8, "nu2_fg": 0.0021136415858866065,
}
# |Lambda| -> natural-log bound for omc, otd, omc-large-m, otd-large-m
GOLDEN_LOGS = {
    120000: (-51.065123373477278, -51.065123373477278, -51.065023368476944, -51.065023368476944),
    220001: (-51.306280884395362, -51.506961681882919, -51.306180879849618, -51.506861676326971),
    300000: (-50.996130501990326, -52.094742790658436, -50.996030496989993, -52.094642785658103),
    348000: (-50.847711071642339, -52.748665411533998, -50.84761049187172, -52.748569253064767),
    399600: (-50.709449029982245, -57.616103703520349, -50.709348924871796, -57.616103703520349),
    399800: (-50.708948604610244, -58.309250884080294, -50.708848549579894, -58.309250884080294),
    399950: (-50.70857344985451, -59.695545245200185, -50.708473432351363, -59.695545245200185),
    400000: (-50.708448429538545, -180.69879919031555, -50.708348424538212, -180.69869918531522),
}
KINDS = (omc_pof_bound, otd_pof_bound, omc_pof_bound_large_m, otd_pof_bound_large_m)


def large_system(lam=0, **kw):
    base = dict(code_len=L0, n_antennas=M0, noise_var=S2)
    base.update(kw)
    return BoundInputs(N0, K0, lam, **base)


def test_params_golden():
    p = subexp_params(large_system())
    for name, want in GOLDEN_PARAMS.items():
        assert getattr(p, name) == pytest.approx(want, rel=1e-12), name
        assert math.isfinite(want) and want > 0


def test_params_match_oracle_off_grid():
    args = dict(L=200, M=64, K=7, p_min=0.5, p_max=2.0, s2=0.3)
    want = mp_oracle.params(**args)
    got = subexp_params(BoundInputs(1000, 7, 0, code_len=200, n_antennas=64, p_min=0.5,
                                    p_max=2.0, noise_var=0.3))
    for name, value in want.items():
        assert getattr(got, name) == pytest.approx(float(value), rel=1e-12), name


@pytest.mark.parametrize("lam", sorted(GOLDEN_LOGS))
def test_large_system_golden_logs(lam):
    for fn, want in zip(KINDS, GOLDEN_LOGS[lam]):
        rep = fn(large_system(lam))
        assert rep.log_value == pytest.approx(want, rel=1e-12, abs=1e-12), fn.__name__
        assert 0 <= rep.value <= 1


def test_scales_simple():
    p = subexp_params(BoundInputs(10, 2, code_len=100))
    assert p.t == pytest.approx(0.99) and p.t_f == pytest.approx(2.99)


def test_infinite_antennas_limit():
    inp = BoundInputs(100, 5, code_len=64, n_antennas=math.inf, noise_var=0.2, p_max=1.5, p_min=1.5)
    p = subexp_params(inp)
    assert p.nu2_nb == pytest.approx(4 * 63 * 5 * 1.5**2 / 64**3, rel=1e-15)


def test_domain_guard():
    with pytest.raises(LogLogDomainError):
        BoundInputs(10, 2, code_len=15)
    with pytest.raises(ConfigError):
        BoundInputs(10, 2, 3, k1=4)
    with pytest.raises(ConfigError):
        BoundInputs(10, 2, 11)


def test_term_skipping_matches_sentinel_evaluation():
    for lam, k1 in [(0, 0), (300, 0), (300, 3), (1000, 5)]:
        inp = BoundInputs(1000, 5, lam, k1=k1, code_len=5000, n_antennas=1e4, noise_var=0.01)
        p = subexp_params(inp)
        pops = [1000 - lam - (5 - k1), 5 - k1, lam - k1, k1]
        scales = [p.t, p.t, p.t, p.t_f]
        bs = [p.b_nb, p.b_ng, p.b_fb, p.b_fg]
        terms = [-s / (2 * b) + (math.log(n) if n > 0 else -math.inf)
                 for s, b, n in zip(scales, bs, pops)]
        assert omc_pof_bound(inp).log_value == pytest.approx(math.log(4) + max(terms), rel=1e-14)
        assert set(omc_pof_bound(inp).validity) == {t for t, n in zip(("nb", "ng", "fb", "fg"), pops) if n}


def test_empty_knowledge_reduces_to_no_csi_terms():
    inp = large_system(0)
    omc, otd = omc_pof_bound(inp), otd_pof_bound(inp)
    assert set(omc.validity) == {"nb", "ng"}
    assert omc.log_value == otd.log_value and omc.value == otd.value


def test_invalid_region_clamps_to_one():
    rep = omc_pof_bound(BoundInputs(200, 20, 50, code_len=35, n_antennas=8, noise_var=1 / 35))
    assert rep.value == 1.0 and rep.branch == "clamped-trivial" and not rep.valid
    assert not all(rep.validity.values())


def test_otd_below_omc_with_full_knowledge():
    inp = BoundInputs(2000, 10, 2000, code_len=20000, n_antennas=5e4, noise_var=1e-4)
    assert otd_pof_bound(inp).log_value < omc_pof_bound(inp).log_value


def test_otd_needs_equal_power():
    inp = BoundInputs(100, 5, code_len=64, p_min=1, p_max=2)
    with pytest.raises(PowerControlRequired):
        otd_pof_bound(inp)
    with pytest.raises(PowerControlRequired):
        otd_pof_bound_large_m(inp)


def test_large_m_closed_forms():
    N, K, L = 1000, 8, 400
    ll = math.log(math.log(L))
    rep = omc_pof_bound_large_m(BoundInputs(N, K, 0, code_len=L))
    assert rep.log_value == pytest.approx(math.log(4 * N) - (L - 1) / (8 * K * ll), rel=1e-14)
    half = omc_pof_bound_large_m(BoundInputs(N, K, N // 2, code_len=L))
    assert half.log_value == pytest.approx(math.log(4 * N / 2) - (L - 1) / (8 * K * ll), rel=1e-14)
    zero = otd_pof_bound_large_m(BoundInputs(N, K, 0, code_len=L))
    full = otd_pof_bound_large_m(BoundInputs(N, K, N, code_len=L))
    assert zero.log_value == pytest.approx(math.log(4 * N) - (L - 1) / (8 * K * ll), rel=1e-14)
    assert full.log_value == pytest.approx(math.log(4 * N) - (3 * L - 1) / (8 * K * ll), rel=1e-14)
    assert full.log_value < zero.log_value


def test_large_system_value_small():
    rep = omc_pof_bound_large_m(large_system())
    assert rep.value < 1e-3
    rate = (L0 - 1) / (8 * K0 * math.log(math.log(L0)))
    assert rate == pytest.approx(65.0, abs=0.5)


def test_reduction_chain_exponent():
    # empty knowledge, M -> inf: the inactive-user exponent equals the large-M rate
    for L in (16, 100, 5000):
        inp = BoundInputs(500, 6, 0, code_len=L)
        p = subexp_params(inp)
        rate = (L - 1) / (8 * 6 * math.log(math.log(L)))
        assert p.t / (2 * p.b_nb) == pytest.approx(rate, rel=1e-14)


@given(L=st.integers(16, 10**6), N=st.integers(2, 10**6), frac=st.floats(0, 1),
       K=st.integers(2, 100), ratio=st.floats(1, 10))
@settings(max_examples=200, deadline=None)
def test_bounds_clamped_and_monotone(L, N, frac, K, ratio):
    K = min(K, N)
    lam = int(frac * N)
    inp = BoundInputs(N, K, lam, code_len=L, n_antennas=1e4, p_max=ratio, noise_var=0.1)
    eq = BoundInputs(N, K, lam, code_len=L, n_antennas=1e4, noise_var=0.1)
    for rep in (omc_pof_bound(inp), omc_pof_bound_large_m(inp), otd_pof_bound(eq),
                otd_pof_bound_large_m(eq)):
        assert 0.0 <= rep.value <= 1.0
    longer = BoundInputs(N, K, lam, code_len=L + 1 + L // 3, p_max=ratio)
    shorter = BoundInputs(N, K, lam, code_len=L, p_max=ratio)
    assert omc_pof_bound_large_m(longer).value <= omc_pof_bound_large_m(shorter).value
    eq_long = BoundInputs(N, K, lam, code_len=L + 1 + L // 3)
    eq_short = BoundInputs(N, K, lam, code_len=L)
    assert otd_pof_bound_large_m(eq_long).value <= otd_pof_bound_large_m(eq_short).value


@given(L=st.integers(16, 10**6), N=st.integers(2, 10**6), K=st.integers(1, 100))
@settings(max_examples=200, deadline=None)
def test_otd_not_above_omc_at_full_knowledge(L, N, K):
    inp = BoundInputs(N, min(K, N), N, code_len=L)
    assert otd_pof_bound_large_m(inp).log_value <= omc_pof_bound_large_m(inp).log_value


# -- measurement inequalities -------------------------------------------------

def predicate(kind, L, N, K, lam, delta):
    ll = math.log(math.log(L))
    if kind == "plain":
        return (L - 1) / ll >= 8 * K * math.log(2 * (N - K) / delta)
    if kind == "full_csi":
        return (3 * L - 1) / ll >= 8 * K * math.log(2 * (N - K) / delta)
    if kind == "omc":
        return (L - 1) / ll >= 8 * K * math.log(4 * max(lam, N - lam) / delta)
    raise AssertionError(kind)


def bisect_min(kind, N, K, lam, delta):
    lo, hi = 16, 1 << 40
    if predicate(kind, lo, N, K, lam, delta):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        lo, hi = (lo, mid) if predicate(kind, mid, N, K, lam, delta) else (mid, hi)
    return hi


def test_solver_plain_example():
    res = solve_measurement_inequality("plain", BoundInputs(400000, 40, delta=0.01))
    assert res.code_len == bisect_min("plain", 400000, 40, 0, 0.01)
    assert res.holds and res.holds_below is False


@pytest.mark.parametrize("kind", ["omc", "plain", "full_csi"])
def test_solver_boundary_pair(kind):
    res = solve_measurement_inequality(kind, BoundInputs(5000, 12, 1000, delta=1e-3))
    assert res.holds and predicate(kind, res.code_len, 5000, 12, 1000, 1e-3)
    assert res.code_len == 16 or not predicate(kind, res.code_len - 1, 5000, 12, 1000, 1e-3)


def test_solver_floor_and_cap():
    res = solve_measurement_inequality("plain", BoundInputs(3, 1, delta=0.9))
    assert res.code_len == 16 and res.holds_below is None
    with pytest.raises(CapExceeded, match="cap-exceeded"):
        solve_measurement_inequality("plain", BoundInputs(400000, 40, delta=0.01), cap=1000)


def test_solver_otd_branches():
    small = solve_measurement_inequality("otd-small-lambda", BoundInputs(10000, 10, 100, delta=0.01))
    large = solve_measurement_inequality("otd-large-lambda", BoundInputs(10000, 10, 9900, delta=0.01))
    assert large.code_len < small.code_len
    with pytest.raises(PowerControlRequired):
        solve_measurement_inequality("otd_small_lambda", BoundInputs(100, 2, p_max=2.0, delta=0.1))
    with pytest.raises(ConfigError):
        solve_measurement_inequality("plain", BoundInputs(100, 2))
    with pytest.raises(ConfigError):
        solve_measurement_inequality("bogus", BoundInputs(100, 2, delta=0.1))


def test_golden_params_against_live_oracle():
    live = mp_oracle.params(L0, M0, K0, 1, 1, S2)
    for name, want in GOLDEN_PARAMS.items():
        assert float(live[name]) == pytest.approx(want, rel=1e-15)
    for lam, logs in GOLDEN_LOGS.items():
        k1 = large_system(lam).k1
        assert float(mp_oracle.log_bound("omc", L0, M0, N0, K0, lam, k1, 1, 1, S2)) == pytest.approx(logs[0], rel=1e-15)
        assert float(mp_oracle.log_large_m("otd", L0, N0, K0, lam)) == pytest.approx(logs[3], rel=1e-15)
    assert np.isfinite(list(GOLDEN_PARAMS.values())).all()
