"""threeFamily scenario: FamGLM RMSE and MAE as the sample-size ratio rho grows.

    python3 scripts/run_family_trend.py --replicates 20 --seed 2024
"""
import argparse
import warnings

from famglm.simulate import ScenarioConfig, run_experiment

RHOS = (0.5, 1.0, 1.5, 2.0)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicates", type=int, default=20)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--families", default="gaussian,poisson")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)
    warnings.simplefilter("ignore", RuntimeWarning)
    print(f"{'family':>9} {'rho':>4} {'rmse':>12} {'mae':>12} {'nmse':>10}")
    for family in args.families.split(","):
        for rho in RHOS:
            cfg = ScenarioConfig.defaults("threeFamily", family=family, rho=rho, replicates=args.replicates,
                                          seed=args.seed)
            res = run_experiment(cfg, jobs=args.jobs)
            print(f"{family:>9} {rho:4.1f} {res.mean('famglm', 'rmse'):12.5g} {res.mean('famglm', 'mae'):12.5g} "
                  f"{res.mean('famglm', 'nmse'):10.4g}", flush=True)


if __name__ == "__main__":
    main()
