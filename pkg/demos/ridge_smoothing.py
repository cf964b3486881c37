"""Smoothing the ridge max(x1, -x1) with the regularized maximum.

Prints the gap u~ - max along a line crossing the switching locus and the
second differences there, next to those of the raw max.
"""

import numpy as np

from levimax import ExpressionField, smooth_max

eps = 0.1
u1, u2 = ExpressionField("x1", 1), ExpressionField("-x1", 1)
u = smooth_max([u1, u2], (eps, eps))

x = np.linspace(-0.2, 0.2, 17)
line = np.stack([x, np.zeros_like(x)], axis=-1)
smooth = u(line)
raw = np.abs(x)

print(f"{'x1':>7} {'max':>8} {'u~':>10} {'gap':>8}")
for xi, m, v in zip(x, raw, smooth):
    print(f"{xi:7.3f} {m:8.4f} {v:10.6f} {v - m:8.5f}")

# the kink shows up as one isolated second difference
d2_raw = raw[2:] - 2 * raw[1:-1] + raw[:-2]
d2_smooth = smooth[2:] - 2 * smooth[1:-1] + smooth[:-2]
print("\nsecond differences, raw max:", np.round(d2_raw, 4))
print("second differences, u~     :", np.round(d2_smooth, 4))
print(f"\nmax gap {np.max(smooth - raw):.5f} <= eps = {eps}")
