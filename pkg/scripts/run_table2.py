"""Run the nine-model comparison twice and check the two runs agree byte for byte.

Usage: python scripts/run_table2.py [--data PATH|synthetic] [--out runs/table2] [--seed 0]

Writes the reports of the first run under ``<out>/run1`` and the second under
``<out>/run2``, then prints wall-clock time per run, the accuracy table and
whether comparison.csv and every model file are identical.
"""
import argparse
import hashlib
import os
import time
from pathlib import Path

from phishbench.cli import DATA_ENV, DEFAULT_DATA, main as cli_main


def digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--data", default=os.environ.get(DATA_ENV, DEFAULT_DATA))
    p.add_argument("--out", default=os.path.join("runs", "table2"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()

    runs = []
    for name in ("run1", "run2"):
        out = Path(args.out) / name
        start = time.perf_counter()
        code = cli_main(["compare", "--data", args.data, "--seed", str(args.seed),
                         "--workers", str(args.workers), "--out", str(out)])
        if code:
            raise SystemExit(code)
        print(f"{name}: {time.perf_counter() - start:.0f}s")
        runs.append(out)

    a, b = runs
    same_csv = digest(a / "comparison.csv") == digest(b / "comparison.csv")
    models = sorted(f.name for f in (a / "models").iterdir())
    same_models = all(digest(a / "models" / m) == digest(b / "models" / m) for m in models)
    print(f"comparison.csv identical: {same_csv}")
    print(f"{len(models)} model files identical: {same_models}")
    raise SystemExit(0 if same_csv and same_models else 1)


if __name__ == "__main__":
    main()
