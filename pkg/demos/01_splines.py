"""Evaluate a clamped B-spline basis and the weighted Gram matrix of a design."""

import numpy as np

from shapespline import DesignPoints, KnotSequence, basis_matrix, build_design_system

knots = KnotSequence([0.0, 0.18, 0.41, 0.6, 0.79, 1.0])
x = np.linspace(0.0, 1.0, 7)
B = basis_matrix(3, knots, x)
print("basis values, order 3, one row per point")
print(np.array2string(B, precision=4, suppress_small=True))
print("row sums (partition of unity):", B.sum(axis=1))

design = DesignPoints.uniform(8)
system = build_design_system(2, KnotSequence.uniform(3), design, design.points**2)
print("\nLambda * 512 for n=8, K=3, m=2")
print(np.round(system.Lambda * 512, 10))
