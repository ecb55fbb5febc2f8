"""Time one fit of each classifier and a gradient-check sweep.

Usage: python scripts/bench_runtime.py [--data PATH|synthetic[:N]] [--epochs N]

The deep models are timed with ``--epochs`` epochs (default 2) and the time is
also extrapolated to the default 50 epochs, which is how the compare budget
was sized.
"""
import argparse
import time

from phishbench import neural
from phishbench.cli import RunConfig, load_table
from phishbench.dataset import split
from phishbench.models import DEFAULT_SCALING, default_spec, fit, comparison_specs
from phishbench.numerics import SeededRng

DEEP = ("ann", "lstm", "bilstm", "ann_lstm")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--data", default="synthetic")
    p.add_argument("--epochs", type=int, default=2)
    args = p.parse_args()

    table = load_table(RunConfig(data=args.data))
    ds = split(table, 0.7, seed=0)
    total = 0.0
    for spec in comparison_specs():
        hp = {"epochs": args.epochs} if spec.kind in DEEP else {}
        fit(default_spec(spec.kind, 0, DEFAULT_SCALING[spec.kind], **hp), ds)   # warm the kernels
        start = time.perf_counter()
        fit(default_spec(spec.kind, 0, DEFAULT_SCALING[spec.kind], **hp), ds)
        secs = time.perf_counter() - start
        full = secs * 50 / args.epochs if spec.kind in DEEP else secs
        total += full
        print(f"{spec.kind:20s} {secs:8.2f}s   projected full fit {full:8.1f}s")
    print(f"projected nine-model compare: {total / 60:.1f} min")

    start = time.perf_counter()
    worst = max(neural.grad_check(*neural.probe_network(kind, SeededRng(s)))
                for kind in neural.PROBE_KINDS for s in range(20))
    print(f"gradient check, 60 networks: worst {worst:.2e} in {time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()
