"""goodnessOfFit grid: FamGLM vs the vectorised logistic baseline.

Prints mean classification accuracy for both methods and FamGLM's winning
percentage for every (p1, p2) and n, plus the selected ranks.

    python3 scripts/run_goodness_of_fit.py --replicates 100 --seed 2024
"""
import argparse
import collections
import time
import warnings

from famglm.simulate import ScenarioConfig, run_experiment

SHAPES = ((12, 10), (20, 15), (20, 30))
SIZES = (150, 300)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicates", type=int, default=100)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)
    warnings.simplefilter("ignore", RuntimeWarning)
    start = time.perf_counter()
    print(f"{'(p1,p2)':>9} {'n':>4} {'logistic':>9} {'FamGLM':>8} {'WP':>5}  ranks")
    for n in SIZES:
        for p1, p2 in SHAPES:
            cfg = ScenarioConfig.defaults("goodnessOfFit", p1=p1, p2=p2, n=n, replicates=args.replicates,
                                          seed=args.seed)
            res = run_experiment(cfg, jobs=args.jobs)
            ranks = collections.Counter((k1, k2) for r in res.replicates for _, _, k1, k2 in r.ranks)
            print(f"{f'({p1},{p2})':>9} {n:>4} {res.mean('vecglm', 'ca'):9.4f} {res.mean('famglm', 'ca'):8.4f} "
                  f"{res.mean('famglm', 'wp'):5.2f}  {dict(ranks)}", flush=True)
    print(f"total {time.perf_counter() - start:.0f} s")


if __name__ == "__main__":
    main()
