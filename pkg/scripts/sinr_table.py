"""Monte-Carlo reflectogram SINR per scheme and modem on the reference scenario.

Usage: python3 scripts/sinr_table.py [--trials 500] [--seed 20240601] [--workers 1]
"""

import argparse

from ocdm_tdr.baselines import Scheme
from ocdm_tdr.chanmodel import NoiseModel, reference_scenario
from ocdm_tdr.experiments import compare_sinr
from ocdm_tdr.tdr import SystemParams


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=500)
    parser.add_argument("--seed", type=int, default=20240601)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    params = SystemParams(n_plm=4)
    reports = compare_sinr(
        params, reference_scenario(4), NoiseModel(), list(Scheme), args.trials, args.seed, workers=args.workers
    )
    print(f"SINR (dB) of the reflectograms, {args.trials} trials, 95% CI in brackets")
    print("scheme  " + "".join(f"{'modem ' + str(u):>22}" for u in range(4)))
    for scheme, rep in reports.items():
        cells = [f"{rep.sinr_db[u]:6.2f} [{rep.ci_low_db[u]:5.2f},{rep.ci_high_db[u]:6.2f}]" for u in range(4)]
        print(f"{scheme.value:<8}" + "".join(f"{c:>22}" for c in cells))


if __name__ == "__main__":
    main()
