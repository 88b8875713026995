"""Difference operators, the null-space basis F and the normalised Gramian."""

import numpy as np

from shapespline import ActiveSet, KnotSequence, build_F, gramian, property_h_sequence, weighted_difference

knots = KnotSequence.uniform(5)
m = 2
D = weighted_difference(m, knots).final
print("weighted second difference, uniform K=5")
print(D)

# constraints 1 and 3 are slack; the rest hold with equality
alpha = ActiveSet.from_complement(5, m, (1, 3))
F = build_F(alpha, m, knots).F
print("\nF for slack set", alpha.complement)
print(np.round(F, 4))
print("max |D[alpha] F'|:", np.abs(D[np.array(alpha.alpha) - 1] @ F.T).max())

rep = gramian(alpha, m, knots)
print("||G^-1||_inf on the subsampled knots:", rep.inv_inf_norm)
print("fine grid (L, M, J) for m=2, K=5, J=1:", property_h_sequence(2, 1.0, 5, 1))
