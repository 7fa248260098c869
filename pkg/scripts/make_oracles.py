"""Regenerate the arbitrary-precision golden files under tests/data.

Run from the repository root:  python scripts/make_oracles.py
"""

import json
import pathlib

import mpmath as mp
import numpy as np

mp.mp.dps = 50
OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"


def log_i(nu, x):
    return float(mp.log(mp.besseli(mp.mpf(nu), mp.mpf(x))))


def bessel_grid(n=500, seed=20240607):
    rng = np.random.default_rng(seed)
    # mix of integer, half-integer and generic orders; log-uniform arguments
    nus = np.concatenate([
        [0.0, 0.5, 1.0, 6849.0, 6849.0, 7000.0, 37.5, 62.5],
        np.round(rng.uniform(0, 7000, 120)) / 2.0,
        np.expm1(rng.uniform(0, np.log(7001), n - 128)),
    ])
    xs = np.concatenate([
        [1e-6, 1e4, 1.0, 300.0, 75.0, 1e4, 40.0, 9000.0],
        10.0 ** rng.uniform(-6, 4, n - 8),
    ])
    return nus[:n], xs[:n]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    nus, xs = bessel_grid()
    rows = [[float(nu), float(x), log_i(nu, x)] for nu, x in zip(nus, xs)]
    gam = [[float(x), float(mp.loggamma(mp.mpf(float(x))))]
           for x in np.concatenate([10.0 ** np.linspace(-6, 6, 60), [0.5, 1, 2, 6851, 3425.5]])]
    vmf = {}
    # VMF RDP curve at p=13700, kappa=75 and capacity at kappa in {75, 500}
    p, nu = 13700, mp.mpf(13700) / 2 - 1
    curve = []
    for a in [1.5, 2.0, 4.0, 16.0, 100.0]:
        s = 2 * mp.mpf(a) - 1
        k = mp.mpf(75)
        tau = (nu * mp.log(1 / s) + mp.log(mp.besseli(nu, s * k) / mp.besseli(nu, k))) / (mp.mpf(a) - 1)
        curve.append([a, float(tau)])
    vmf["rdp_p13700_k75"] = curve
    for k in (75, 500):
        k = mp.mpf(k)
        logc = (mp.log(2) - mp.loggamma(mp.mpf(p) / 2) + nu * mp.log(k) + k
                - mp.mpf(p) / 2 * mp.log(2) - mp.log(mp.besseli(nu, k)))
        vmf[f"log_capacity_p13700_k{int(k)}"] = float(logc)
    (OUT / "oracles.json").write_text(json.dumps(
        {"log_bessel_i": rows, "log_gamma": gam, "vmf": vmf}, indent=1))
    print(f"wrote {len(rows)} Bessel and {len(gam)} gamma values to {OUT / 'oracles.json'}")


if __name__ == "__main__":
    main()
