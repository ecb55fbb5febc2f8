"""Write the synthetic stand-in table as a CSV in the published layout.

Usage: python scripts/make_surrogate.py out.csv [--rows 10000] [--seed 0]

The rows are NOT real websites; they only let the pipeline run end to end
when the published dataset is not on disk.
"""
import argparse

from phishbench.dataset import synthesize_table, write_csv


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out")
    p.add_argument("--rows", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    table = synthesize_table(args.rows, args.seed)
    write_csv(table, args.out)
    print(f"wrote {len(table)} rows to {args.out} (sha256 {table.content_hash()[:16]})")


if __name__ == "__main__":
    main()
