"""Regenerates transition_reference.csv.

Weak l1 phase transition for real signed sparse vectors under Gaussian
measurements, from the statistical dimension of the l1 descent cone:

    psi(eps) = min_t  eps (1 + t^2) + (1 - eps) 2 [(1 + t^2) Q(t) - t phi(t)]

The transition at undersampling delta is rho = eps / delta with
psi(eps) = delta.
"""

import mpmath as mp

mp.mp.dps = 30


def psi(eps):
    def f(t):
        return eps * (1 + t * t) + (1 - eps) * 2 * ((1 + t * t) * mp.ncdf(-t) - t * mp.npdf(t))

    t = mp.findroot(lambda t: mp.diff(f, t), 1.0)
    return f(t)


def rho(delta):
    lo, hi = mp.mpf("1e-12"), mp.mpf(delta)
    for _ in range(200):
        mid = (lo + hi) / 2
        if psi(mid) < delta:
            lo = mid
        else:
            hi = mid
    return lo / delta


if __name__ == "__main__":
    print("# Reference 0.5-success contour for the phase-transition overlay.")
    print("# Stand-in for the tuned two-stage thresholding curve: weak l1 transition")
    print("# for real signed coefficients, computed by transition_reference.py.")
    print("delta,rho")
    for k in range(1, 50):
        d = mp.mpf(k) / 50
        print(f"{float(d):.2f},{float(rho(d)):.6f}")
