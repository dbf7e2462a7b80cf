"""Regenerates drop_probability.csv with 50-digit arithmetic.

    python3 gen_drop_probability.py > drop_probability.csv
"""
import random

import mpmath

mpmath.mp.dps = 50
rng = random.Random(20240601)
print("w,rate,noise_power,p_drop")
for _ in range(1000):
    w = 10 ** rng.uniform(-14, -2)
    rate = rng.uniform(0.0, 8.0)
    noise = 10 ** rng.uniform(-14, -6)
    x = (mpmath.power(2, mpmath.mpf(rate)) - 1) * mpmath.mpf(noise) / mpmath.mpf(w)
    p = -mpmath.expm1(-x)
    print(f"{w!r},{rate!r},{noise!r},{mpmath.nstr(p, 30, min_fixed=1, max_fixed=0)}")
