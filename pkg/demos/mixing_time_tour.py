"""
Mixing time three ways on a short path
======================================

For systems small enough to enumerate, the worst-start mixing time of the
single-site dynamics is computable exactly by powering the kernel.  Two
other routes bracket it: the spectral gap gives upper and lower bounds,
and simulating the monotone coupling from the two extreme starts gives a
high-confidence statistical upper estimate.  This script sweeps the field
on a 6-vertex path and prints all three.
"""

import math

from ferrospin import (
    UpdateSchedule,
    coupling_mixing_estimate,
    exact_mixing_time,
    gibbs_distribution,
    glauber_matrix,
    instance_family,
    spectral_report,
)

EPS = 1.0 / (4.0 * math.e)  # the customary reference level

print("field   exact t_mix   gap lower   gap upper   coupling estimate")
for lam in (0.3, 0.6, 1.0, 1.5, 2.5):
    system = instance_family("path", 6, 1.0, 2.0, lam)
    mu = gibbs_distribution(system)
    P = glauber_matrix(system)

    t_exact = exact_mixing_time(P, mu, EPS)

    spec = spectral_report(P, mu, "glauber")
    gap = spec.gap
    mu_min = float(mu.probs.min())
    upper = math.log(1.0 / (EPS ** 2 * mu_min)) / gap
    lower = (1.0 / gap - 1.0) * math.log(1.0 / (2.0 * EPS))

    sched = UpdateSchedule(kind="single-site-glauber")
    row, estimate = coupling_mixing_estimate(system, sched, EPS,
                                             trials=120, seed=7)
    est = f"{estimate}" if estimate is not None else "censored"
    print(f"{lam:4.1f}    {t_exact:7d}      {lower:7.1f}     {upper:7.1f}"
          f"     {est:>9s}")

print("\nThe exact value always sits between the spectral bounds, and the")
print("coupling estimate (a Wilson-certified quantile of the merge time)")
print("upper-bounds it with 99% confidence per instance.")
