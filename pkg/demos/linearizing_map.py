"""A global change of coordinates that turns the finite-time flow into y' = -y.

Outside the image ball of radius r, h sends orbits of x' = -x/|x| onto
orbits of the linear flow, for as long as gamma_r allows. Inside the ball
the conjugated dynamics keep their finite-time character.
"""
import math

import numpy as np

from semiconj import (
    build_map, flow, gamma_r, h_inverse, h_map, make_builtin, outer_radius_R,
)
from semiconj.conjugacy import example_A_h

sys = make_builtin("normalized", 2)
m = build_map(sys, epsilon=0.5, r=1.0)

x = np.array([2.0, 0.0])
print("h(2, 0)          =", h_map(m, x), " explicit formula:", example_A_h(1.0, x))
print("h^-1(h(2, 0))    =", h_inverse(m, h_map(m, x)))

# pick an image point, pull it back, flow, push forward, compare with exp(-t) y
y = np.array([1.5, 2.0])
window = gamma_r(m, np.linalg.norm(y) - m.radius)
print(f"\n|y| = {np.linalg.norm(y)}, linear behaviour guaranteed for t <= {window:.6f}"
      f" (log formula: {math.log(np.linalg.norm(y)):.6f})")
for t in np.linspace(0.0, window, 5):
    image = h_map(m, flow(sys, h_inverse(m, y), t).state)
    print(f"  t = {t:.3f}   |h(phi_t(x)) - exp(-t) y| = {np.linalg.norm(image - math.exp(-t) * y):.2e}")

# past the window the orbit enters the inner ball and reaches 0 in finite time
for t in (1.5, 2.0, 2.61):
    image = h_map(m, flow(sys, h_inverse(m, y), t).state)
    print(f"  t = {t:.2f}   |image| = {np.linalg.norm(image):.6f}   exp(-t)|y| = {math.exp(-t) * 2.5:.6f}")

# on a bounded domain the time coordinate is stretched beyond an outer level C
bounded = make_builtin("normalized-bounded", 2, {"rho_dom": 2.0})
mb = build_map(bounded, 0.5, 1.0, C=1.0)
print(f"\nbounded domain: outer image radius R = {outer_radius_R(mb, 1.0):.6f}"
      f" (exp(sqrt(2) - 1) = {math.exp(math.sqrt(2) - 1):.6f})")
for radius in (1.5, 1.9, 1.99):
    print(f"  |x| = {radius}: |h(x)| = {np.linalg.norm(h_map(mb, [radius, 0.0])):.6f}")
