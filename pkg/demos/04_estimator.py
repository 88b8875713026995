"""Fit monotone, convex and 3-convex splines to noisy data."""

import numpy as np

from shapespline import fit, is_shape_feasible, sup_error
from shapespline.experiments import get_truth, simulate_model
from shapespline.splines import DesignPoints

design = DesignPoints.uniform(1024)
for m, name in [(1, "linear"), (2, "quadratic"), (3, "cubic")]:
    truth = get_truth(name)
    y = simulate_model(truth, design, 0.2, 5, 0)
    res = fit(m, 8, design, y)
    print(f"m={m} {name:9s} feasible={is_shape_feasible(m, res.knots, res.coefficients)} "
          f"binding={len(res.active.alpha)} sup error={sup_error(res, truth):.4f}")
