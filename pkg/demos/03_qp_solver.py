"""Active-set QP against brute-force enumeration, and face-wise Lipschitz constants."""

import numpy as np

from shapespline import DesignPoints, KnotSequence, brute_force_qp, build_design_system, lipschitz_constant, solve_qp

y = np.array([0.5, 0.6, 0.7, 0.8, 0.2, 0.2, 0.2, 0.2, 0.9, 1.0, 1.0, 1.0, 1.0])
system = build_design_system(1, KnotSequence.uniform(3), DesignPoints.uniform(12), y)
fast, slow = solve_qp(system), brute_force_qp(system)
print("active set:", fast.b_hat, "iterations", fast.iterations)
print("enumeration:", slow.b_hat)
print("multipliers:", fast.chi, "binding", fast.active.alpha)

x = np.linspace(0, 1, 129)
system = build_design_system(2, KnotSequence.uniform(6), DesignPoints(x), np.cos(3 * x))
print("\nLipschitz constant, every face:", lipschitz_constant(system, mode="exact"))
print("Lipschitz constant, 2000 probes:", lipschitz_constant(system, mode="probe", seed=1, pairs=2000))
