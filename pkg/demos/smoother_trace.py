"""
Effective degrees of freedom of a kernel smoother
=================================================

For a local-constant smoother the trace of the smoother matrix behaves like
``K(0) / h``, so ``h * trace`` should settle near ``K(0)`` once ``n h`` is
large.  On a bounded design the edges matter: near 0 and 1 only half the
kernel window holds data, the diagonal weights double there, and at a fixed
``h`` the limit sits above ``K(0)`` by an amount proportional to ``h``.
"""

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr

from fbis import Kernel
from fbis.kernels import scaled_trace

k0 = Kernel.GAUSSIAN.k0
rng = np.random.default_rng(0)


def edge_limit(h):
    mass = lambda x: ndtr((1 - x) / h) - ndtr(-x / h)
    return k0 * quad(lambda x: 1 / mass(x), 0, 1, limit=200)[0]


print(f"K(0) = {k0:.6f}")
for h in (0.05, 0.02, 0.01):
    x = rng.uniform(size=10_000)
    print(f"h = {h:<5} h*trace = {scaled_trace(x, h):.5f}   fixed-h limit = {edge_limit(h):.5f}")

###############################################################################
# Shrinking h with n removes the edge effect

for n in (1000, 4000, 16_000):
    h = 0.5 * n ** -0.2
    print(f"n = {n:>6}, h = {h:.3f}: gap to K(0) = {abs(scaled_trace(rng.uniform(size=n), h) - k0):.5f}")
