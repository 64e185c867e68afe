"""Transitionless driving: fidelity of exact CD versus plain interpolation.

Uses h2:2.5 restricted to lambda in [0.05, 1] so the spectrum stays
non-degenerate, a linear schedule, and a range of protocol durations T.
With the exact gauge term the final state is the FCI ground state for every
T; without it the fidelity only approaches 1 as the sweep slows down.
"""
import numpy as np

from cdpinn.oracle import evolve_fidelity, exact_protocol
from cdpinn.problem import builtin_h2, shifted

p = shifted(builtin_h2(2.5), 0.05)

print(f"{'T':>6} {'F(CD)':>14} {'F(adiabatic)':>14}")
for duration in (0.5, 1.0, 2.0, 5.0, 10.0):
    # lambda(t) = t / T on [0, T]; dlambda/dt = 1 / T
    def schedule(t, T=duration):
        return t / T, np.full_like(t, 1.0 / T)

    grid = np.array([0.0, duration])
    dt = 1e-3 * duration
    cd = evolve_fidelity(p, exact_protocol(p, schedule), grid, dt).fidelity[-1]
    ad = evolve_fidelity(p, exact_protocol(p, schedule, counterdiabatic=False), grid, dt).fidelity[-1]
    print(f"{duration:6.1f} {cd:14.10f} {ad:14.10f}")
