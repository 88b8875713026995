"""Small versions of the verification suites and a bias-rate run."""

from shapespline.experiments import ExperimentConfig, null_space_suite, qp_oracle_suite, rate_experiment, summarize

for name, recs in [("qp-oracle", qp_oracle_suite(40, seed=1)), ("null-space", null_space_suite(10, seed=1))]:
    s = summarize(name, recs, {"seed": 1})
    print(f"{name}: {s['passed']}/{s['checks']} checks passed")

cfg = ExperimentConfig(kind="bias-rate", m=1, grids=((256, 4), (512, 8), (1024, 16), (2048, 32)))
for r in rate_experiment("bias", cfg):
    if r.statement in ("bias-error", "slope-vs-K"):
        print(f"{r.statement:11s} {r.instance:24s} {r.measured:.5g}")
