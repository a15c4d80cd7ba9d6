"""Independent evaluation of the fan + straight-fin heatsink correlation chain.

Usage: python3 heatsink_oracle.py L_s w_s h_f t_f n_f max_flow_m3_min max_dp_pa
Prints volume flow [m^3/s] and sink-to-ambient thermal resistance [K/W].
"""
import math
import sys

RHO, MU, K_AIR, CP, PR = 1.127, 1.912e-5, 0.0271, 1007.0, 0.7
K_AL = 200.0
D_S = 0.003


def f_re_fd(aspect):
    e = min(aspect, 1.0 / aspect)
    return 24.0 * (1 - 1.3553 * e + 1.9467 * e**2 - 1.7012 * e**3 + 0.9564 * e**4 - 0.2537 * e**5)


def channel(L, w, h, t, n):
    s = (w - n * t) / (n - 1)
    dh = 2 * s * h / (s + h)
    return s, dh


def pressure_drop(q, L, w, h, t, n):
    s, dh = channel(L, w, h, t, n)
    area = (n - 1) * s * h
    v = q / area
    re = RHO * v * dh / MU
    lstar = L / (dh * re)
    fre = math.sqrt((3.44 / math.sqrt(lstar)) ** 2 + f_re_fd(s / h) ** 2)
    f_app = fre / re
    sigma = (n - 1) * s / w
    kc = 0.42 * (1 - sigma**2)
    ke = (1 - sigma) ** 2
    return (4 * f_app * L / dh + kc + ke) * 0.5 * RHO * v * v


def operating_flow(L, w, h, t, n, qmax, pmax):
    lo, hi = 0.0, qmax
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fan = pmax * (1 - mid / qmax)
        if pressure_drop(mid, L, w, h, t, n) < fan:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def rth(L, w, h, t, n, q):
    s, dh = channel(L, w, h, t, n)
    v = q / ((n - 1) * s * h)
    re = RHO * v * dh / MU
    gz = dh / L * re * PR
    nu = 7.54 + 0.03 * gz / (1 + 0.016 * gz ** (2.0 / 3.0))
    hc = nu * K_AIR / dh
    m = math.sqrt(2 * hc / (K_AL * t))
    eta = math.tanh(m * h) / (m * h)
    area = n * (2 * h * L) * eta + (n - 1) * s * L
    r_base = D_S / (K_AL * L * w)
    r_conv = 1 / (hc * area)
    r_air = 1 / (2 * RHO * q * CP)
    return r_base + r_conv + r_air


if __name__ == "__main__":
    L, w, h, t, n, qmax_min, pmax = map(float, sys.argv[1:8])
    qmax = qmax_min / 60.0
    q = operating_flow(L, w, h, t, n, qmax, pmax)
    print(f"{q:.9e} {rth(L, w, h, t, n, q):.9e}")
