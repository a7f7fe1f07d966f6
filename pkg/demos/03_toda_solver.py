# coding: utf-8

# # Solving the Toda-type equation on a grid
#
# e^{2f} (f_11 + f_22) + f_33 + f_44 = 0 is the scalar-flat Einstein-Weyl
# condition for the 2+2 product ansatz.  We solve its Dirichlet problem with
# Newton-Krylov and look at the convergence.

# %%

import numpy as np

from weylkit.toda import GridSpec, TodaProblem, consistency_order, harmonic_extension, toda_solve

spec = GridSpec.uniform(9)

# x1 x3 solves the continuous and the discrete equation exactly, so Newton
# recovers it to roundoff.

# %%

res = toda_solve(TodaProblem.from_exprs(spec, "x1*x3"))
print(res.status, "after", res.iterations, "iterations, residuals", ["%.1e" % r for r in res.history])
print("max error:", res.field.max_abs_diff(spec.sample("x1*x3")))

# Starting from the harmonic extension of the boundary data saves work.

# %%

b = spec.sample("x1*x3")
warm = toda_solve(TodaProblem(b, initial=harmonic_extension(b)))
print("warm start:", warm.iterations, "iterations")

# A manufactured solution: pick f*, define its source, solve, compare.
# The residual ratios r_{k+1} / r_k^2 stay bounded, i.e. quadratic convergence.

# %%

man = toda_solve(TodaProblem.from_exprs(spec, "x1^2*x3", manufactured=True))
h = man.history
print("ratios:", ["%.3g" % (h[k + 1] / h[k] ** 2) for k in range(len(h) - 1)])
print("max error:", man.field.max_abs_diff(spec.sample("x1^2*x3")))

# The stencil is second order: halving h divides the truncation error by 4.

# %%

e1, e2, order = consistency_order("sin(x1)*x3 + x2^2*cos(x4)", GridSpec.uniform(9, -0.5, 0.5))
print(f"errors {e1:.3e} -> {e2:.3e}, observed order {order:.3f}")
