"""A discontinuous field whose arrival time jumps but whose level crossings do not.

x' = (-x1, -x2 / (|x2| + x1^2)) is discontinuous at the origin. On the
x2-axis states fall in at unit speed; a small x1 component makes the
approach exponential instead, so the time to get very close to the origin
blows up. The time to cross a fixed Lyapunov level stays continuous, which
is all the linearizing map needs.
"""
import numpy as np

from semiconj import IntegratorConfig, build_map, flow, h_inverse, h_map, make_builtin
from semiconj.levelset import crossing_time_forward, time_to_ball

sys = make_builtin("x0-plane", 2)
m = build_map(sys, epsilon=0.25, r=1.0)

print("start        crossing V=1/4   ball 1e-3   arrival (snap 1e-6)")
for x1 in (0.0, 1e-3, 1e-2, 5e-2, 1e-1):
    x = np.array([x1, 1.0])
    cross = crossing_time_forward(m.frame, x).time
    ball = time_to_ball(sys, x, 1e-3)
    arrival = flow(sys, x, 50.0).event_time
    print(f"({x1:<5g}, 1)   {cross:10.6f}     {ball:9.4f}   {arrival:9.4f}")

# the map still round-trips on this system, with all orbits integrated numerically
for x in ([1.0, 1.0], [0.05, -1.2], [-0.3, 0.1]):
    back = h_inverse(m, h_map(m, x))
    print(f"round trip {x}: error {np.linalg.norm(back - np.asarray(x)):.2e}")

# the stiff layer near x2 = 0 is handed to an implicit solver automatically
res = flow(sys, [1.0, 1.0], 10.0, IntegratorConfig())
print(f"\nflow of (1, 1) for t = 10: {res.state} (x1 should be exp(-10) = {np.exp(-10):.6e})")
