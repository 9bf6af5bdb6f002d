"""Print the closed-form tables: range resolution, maximum range and rates.

Usage: python3 scripts/formula_tables.py
"""

from ocdm_tdr.baselines import Scheme
from ocdm_tdr.chanmodel import V_P_LV, V_P_MV
from ocdm_tdr.metrics import max_unambiguous_range, measurement_rates, range_resolution
from ocdm_tdr.tdr import SystemParams

CABLES = {"LV": V_P_LV, "MV": V_P_MV}


def main():
    print("range resolution (m)")
    print("  B (kHz)    " + "  ".join(f"{name:>8}" for name in CABLES))
    for b_khz in (10, 50, 100, 200, 300, 400, 500):
        print(f"  {b_khz:>7}    " + "  ".join(f"{range_resolution(v, b_khz * 1e3):8.1f}" for v in CABLES.values()))

    print("\nmaximum unambiguous range, reflectogram / transferogram (m), 2N = 256, Fs = 1 MHz")
    for name, v_p in CABLES.items():
        for cp in (30, 52):
            cells = []
            for n in (1, 2, 4, 8, 9, 16):
                rho = max_unambiguous_range(v_p, 1e6, 256 / n, cp, "reflectogram")
                cells.append(f"n={n}: {rho:.0f}/{2 * rho:.0f}")
            print(f"  {name} L_cp={cp}: " + ", ".join(cells))

    print("\nreflectograms per modem per second (L_cp = 30)")
    params = SystemParams()
    print("  n_plm " + "".join(f"{s.value:>10}" for s in Scheme))
    for n in (1, 2, 4, 8, 16):
        print(f"  {n:>5} " + "".join(f"{measurement_rates(s, params, n_plm=n).n_rho:10.1f}" for s in Scheme))


if __name__ == "__main__":
    main()
