"""Flowing the normalized field x' = -x/|x| to the origin.

Every orbit moves at unit speed along a ray, so a state at distance d
arrives at the origin at exactly t = d. The exact semiflow and the adaptive
integrator should tell the same story.
"""
import numpy as np

from semiconj import IntegratorConfig, flow, make_builtin, trajectory

sys = make_builtin("normalized", 2)
numeric = IntegratorConfig(use_closed_form=False)
x0 = np.array([3.0, 4.0])

print("t      exact state            numeric state")
for t, exact in trajectory(sys, x0, np.linspace(0.0, 6.0, 7)):
    approx = flow(sys, x0, t, numeric).state
    print(f"{t:4.1f}   {np.array2string(exact, precision=6):22s} {np.array2string(approx, precision=6)}")

# the integrator cannot land exactly on the origin; it snaps once inside a tiny ball
res = flow(sys, x0, 10.0, numeric)
print(f"\nnumeric arrival time {res.event_time:.8f} (exact: {np.linalg.norm(x0)})")

# backward in time the orbit simply retraces the ray outward
print("one unit backward:", flow(sys, x0, -1.0).state)
