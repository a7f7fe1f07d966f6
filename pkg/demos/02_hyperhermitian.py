# coding: utf-8

# # A hyper-Hermitian product from a holomorphic function
#
# With f = x1 x3 - x2 x4 = Re(z w) the product [g1 + e^{2f} g2] of two flat
# planes carries three integrable complex structures.  Its holonomy is small:
# the curvature operator has rank 2.

# %%

import numpy as np

from weylkit import ComplexPoly2, toda_product
from weylkit.einstein_weyl import einstein_weyl_defect, weyl_scalar_curvature
from weylkit.hermitian import (bivector_from_form, curvature_operator, factor_complex_structures,
                               holonomy_image_rank, hyperhermitian_j_from_H, nijenhuis_norm,
                               normalized_orientation)
from weylkit.tensor_core import KFormValue, MetricValue, sd_asd_split

P = toda_product("x1*x3 - x2*x4")
W = P.weyl
p = np.array([0.4, -0.3, 0.7, 0.2])

# The ansatz is Einstein-Weyl and scalar-flat because f is harmonic in each pair.

# %%

print("EW defect:", einstein_weyl_defect(W, p), " scalar curvature:", weyl_scalar_curvature(W, p))

# The factor complex structure I and the structure J built from H = exp(-zw)
# are both integrable.  Swapping the roles of the two factors breaks this.

# %%

signs = (1, -1)
I1, I2, I = factor_complex_structures(P, signs)
H = ComplexPoly2.from_dict({(1, 1): -1.0}, exponential=True)
J = hyperhermitian_j_from_H(P, H, signs)
print("|N_I| =", nijenhuis_norm(I, p), " |N_J| =", nijenhuis_norm(J, p), " |N_IJ| =", nijenhuis_norm(I.compose(J), p))
print("swapped |N| =", nijenhuis_norm(hyperhermitian_j_from_H(P, H, signs, swap_ab=True), p))

# Holonomy: rank 2, F is anti-self-dual in the normalized orientation.

# %%

jet = W.jet(p)
print("holonomy image rank:", holonomy_image_rank(W, p))
sd, asd = sd_asd_split(MetricValue(jet.g), normalized_orientation(signs), KFormValue(jet.faraday, 2, 4))
print("|F+| =", np.abs(sd.entries).max(), " |F-| =", np.abs(asd.entries).max())
print("R(F) =\n", curvature_operator(W, p, bivector_from_form(jet.g, jet.faraday)).entries.round(12))
