#!/usr/bin/env python3
"""Write a synthetic multi-behavior interaction log in the CLI's CSV input format."""

import argparse

from popsi.synth import SynthConfig, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("output", help="path of the CSV file to write")
    ap.add_argument("--users", type=int, default=300)
    ap.add_argument("--items", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    tensor = generate(SynthConfig(m1=args.users, m2=args.items, seed=args.seed))
    labels = ["purchase", "click", "collect"][: tensor.n]
    with open(args.output, "w") as f:
        for k, s in enumerate(tensor.slices):
            coo = s.tocoo()
            for u, v in zip(coo.row, coo.col):
                f.write(f"u{u},i{v},{labels[k]},{1000 + int(u)}\n")
    print(f"wrote {tensor.nnz()} interactions ({tensor.m1} users, {tensor.m2} items) "
          f"to {args.output}")
    print(f"behaviors: {','.join(labels)} (target first)")


if __name__ == "__main__":
    main()
