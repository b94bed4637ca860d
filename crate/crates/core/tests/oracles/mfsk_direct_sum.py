"""Arbitrary-precision direct evaluation of the non-coherent MFSK bit error
probability, used to freeze reference values for the Rust quadrature.

    Pb = N / (2 (N - 1)) * (1 / N) * sum_{k=2}^{N} (-1)^k C(N, k) exp(g (1/k - 1))

with g = N * snr (snr axis) or g = 2 * ebn0 (Eb/N0 axis).
"""
import mpmath as mp

mp.mp.dps = 700


def pb(n, g):
    n = int(n)
    g = mp.mpf(g)
    acc = mp.mpf(0)
    for k in range(2, n + 1):
        acc += (-1) ** k * mp.binomial(n, k) * mp.exp(g * (mp.mpf(1) / k - 1))
    return mp.mpf(n) / (2 * (n - 1)) * acc / n


def snr_db_for(n, target):
    f = lambda d: mp.log(pb(n, n * mp.power(10, d / 10))) - mp.log(target)
    return mp.findroot(f, -15)


if __name__ == "__main__":
    cases = [
        ("snr", 1023, -20.0),
        ("snr", 1023, -18.0),
        ("snr", 1023, -16.0),
        ("snr", 1023, -14.5),
        ("snr", 31, -3.0),
        ("snr", 31, 0.0),
        ("ebn0", 4, 6.0),
        ("ebn0", 4, 10.0),
        ("ebn0", 128, 8.0),
    ]
    for axis, n, db in cases:
        lin = mp.power(10, mp.mpf(db) / 10)
        g = n * lin if axis == "snr" else 2 * lin
        print(axis, n, db, mp.nstr(pb(n, g), 12))
    print("snr_db at Pb=1e-3, N=1023:", mp.nstr(snr_db_for(1023, mp.mpf("1e-3")), 12))
