"""J(0) = J_st does not make the Levi form the standard complex Hessian.

For A(z) = z / (1 + conj z) the function u = Re z + |z|^2 has vanishing Levi
form, while 4 d^2u/dz dzbar = 4.  The adapted chart (A(0) = 0 and dA/dz(0) = 0)
restores the identity, and a J-holomorphic disc sees the same zero.
"""

import numpy as np

from levimax import (
    AlmostComplexStructure,
    ExpressionField,
    LEVI_FACTOR,
    adapted_chart,
    hermitian_hessian_jst,
    hessian_via_disc,
    levi_value,
    linear_normalize,
    load_scenario,
    quadratic_normalize,
    verify_adapted,
)

sc = load_scenario("builtin:remark1-counterexample")
S, u = sc.structure, sc.fields[0]
origin = np.zeros(2)

print("A(0)                  :", S.A(origin)[0, 0])
print("Levi form at 0        :", float(levi_value(S, u, origin, [1.0, 0.0])))
print("4 x complex Hessian   :", LEVI_FACTOR * hermitian_hessian_jst(u, origin)[0, 0].real)

lin = verify_adapted(S, linear_normalize(S, origin), u)
chart, _ = adapted_chart(S, origin)
full = verify_adapted(S, chart, u)
print("\nafter the linear step only: identity residual", f"{lin.levi_identity_residual:.3g}")
print("after the quadratic step  : identity residual", f"{full.levi_identity_residual:.3g}")
print("quadratic coefficient c   :", np.round(quadratic_normalize(S).coefficients.ravel(), 9))

print("\nLaplacian of u along the disc through 0:", f"{hessian_via_disc(S, u, origin, 1.0):.2e}")
std = AlmostComplexStructure.standard(1)
print("same with J_st (expect 4)            :", f"{hessian_via_disc(std, u, origin, 1.0):.6f}")
