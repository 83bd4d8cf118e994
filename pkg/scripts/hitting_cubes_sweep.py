"""Worst observed hitting-cube counts against the closed-form bound, per (d, degree, k)."""
import argparse
import json

from realram.lab import hitting_bound, hitting_cubes_experiment, recursion_bound


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--degrees", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--polys", type=int, default=20)
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--out")
    args = ap.parse_args()
    rows = []
    for d in args.dims:
        for delta in args.degrees:
            k = 2 * delta + 2
            rep = hitting_cubes_experiment(d, delta, k, args.polys, args.seed, timing=False)
            rows.append({
                "d": d, "degree": delta, "k": k, "worst": rep.estimate,
                "recursion": recursion_bound(d, delta, k), "bound": hitting_bound(d, delta, k),
            })
            print(f"d={d} degree={delta} k={k:2}  worst={rep.estimate:5}  recursion={rows[-1]['recursion']:7}  bound={rows[-1]['bound']}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(json.dumps({"seed": args.seed, "rows": rows}, indent=2) + "\n")


if __name__ == "__main__":
    main()
