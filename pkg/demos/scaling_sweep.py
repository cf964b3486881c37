"""Dilating a structure towards J_st keeps |z|^2 strictly psh.

A(z) = 0.9 z^2 has a large C^1 norm on the grid; under z = lambda w the
pulled-back structure flattens and the minimum Levi eigenvalue of |w|^2
returns to 1.
"""

import numpy as np

from levimax import AlmostComplexStructure, ExpressionField, ExpressionMatrixField, is_strictly_psh, scale_structure
from levimax.coords import box_grid

A = AlmostComplexStructure.from_a(ExpressionMatrixField([[("0.9*(x1^2 - x2^2)", "1.8*x1*x2")]], 1, True))
u = ExpressionField("x1^2 + x2^2", 1)
grid = box_grid(1, 9, -0.6, 0.6)

print(f"{'lambda':>8} {'min eigen':>10}  psh at margin 0.5")
for lam in (1.0, 0.5, 0.2, 0.1, 0.05, 0.01):
    rep = is_strictly_psh(scale_structure(A, lam), u, grid, margin=0.5)
    print(f"{lam:8.2f} {rep.min_eigen:10.4f}  {'yes' if rep.passed else 'no'}")
