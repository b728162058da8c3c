"""Arbitrary-precision re-evaluation of the PoF bound closed forms.

Kept independent of the package so frozen golden values in the bound tests
come from a second transcription evaluated at 50 digits.
"""
import mpmath as mp

mp.mp.dps = 50


def params(L, M, K, p_min, p_max, s2):
    L, M, K = mp.mpf(L), mp.mpf(M), mp.mpf(K)
    p_min, P, s2 = mp.mpf(p_min), mp.mpf(p_max), mp.mpf(s2)
    ll = mp.log(mp.log(L))
    out = {}
    out["t"] = p_min * (1 - 1 / L)
    out["t_f"] = p_min * (3 - 1 / L)
    out["b_nb"] = max(4 * ll * K * P / L, 16 * ll / M * K * P / L, 4 * s2 / M)
    out["b_ng"] = max(4 * ll * (K - 1) * P / L, 16 * ll / M * (K - 1) * P / L, 4 * s2 / M)
    out["b_fb"] = max(4 * ll, 16 * ll / M) * K * P / L
    out["b_fg"] = max(4 * ll, 16 * ll / M) * (K - 1) * P / L
    out["nu2_nb"] = (4 * (L - 1) * K * P**2 / L**3
                     + 64 * K**2 * P**2 * ll**2 / (M * L**2)
                     + (4 * L * s2**2 + 32 * s2 * K * P * ll) / (M * L))
    out["nu2_ng"] = (4 * (L - 1) * (K - 1) * P**2 / L**3
                     + 64 * (K - 1)**2 * P**2 * ll**2 / (M * L**2)
                     + (4 * L * s2**2 + 8 * L * s2 * P + 32 * s2 * K * P * ll) / (M * L)
                     + (3 * P**2 + 48 * (K - 1)**2 * P**2 * ll**2 / L**2
                        + 24 * (K - 1) * P**2 * ll / L) / M)
    out["nu2_fb"] = (4 * (L - 1) * K * P**2 / L**3
                     + 64 * K**2 * P**2 * ll**2 / (M * L**2)
                     + (4 * L * s2**2 + 96 * s2 * K * P * ll) / (M * L)
                     + (s2**2 + 48 * K**2 * P**2 * ll**2 / L**2 + 8 * s2 * K * P * ll / L) / M)
    out["nu2_fg"] = (4 * (L - 1) * K * P**2 / L**3
                     + 64 * (K - 1)**2 * P**2 * ll**2 / (M * L**2)
                     + (12 * s2**2 + 8 * s2 * (15 * P + 12 * (K - 1) * P * ll / L)) / M
                     + (105 * P**2 + 144 * (K - 1)**2 * P**2 * ll**2 / L**2
                        + (360 * P + 24 * s2) * (K - 1) * P * ll / L
                        + 3 * s2**2 + 30 * P * s2) / M)
    return out


def log_bound(kind, L, M, N, K, lam, k1, p_min, p_max, s2):
    """Natural log of the (unclamped) exponential-tail bound."""
    p = params(L, M, K, p_min, p_max, s2)
    k2 = K - k1
    tf_fb = p["t_f"] if kind == "otd" else p["t"]
    terms = [(-p["t"] / (2 * p["b_nb"]), N - lam - k2),
             (-p["t"] / (2 * p["b_ng"]), K - k1),
             (-tf_fb / (2 * p["b_fb"]), lam - k1),
             (-p["t_f"] / (2 * p["b_fg"]), k1)]
    return mp.log(4) + max(e + mp.log(n) for e, n in terms if n > 0)


def log_large_m(kind, L, N, K, lam, p_min=1, p_max=1):
    L = mp.mpf(L)
    ll = mp.log(mp.log(L))
    if kind == "omc":
        return mp.log(4 * max(N - lam, lam)) - mp.mpf(p_min) * (L - 1) / (8 * K * mp.mpf(p_max) * ll)
    cands = []
    if N - lam > 0:
        cands.append(mp.log(N - lam) - (L - 1) / (8 * K * ll))
    if lam > 0:
        cands.append(mp.log(lam) - (3 * L - 1) / (8 * K * ll))
    return mp.log(4) + max(cands)
