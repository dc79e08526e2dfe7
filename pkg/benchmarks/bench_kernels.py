"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel and backend with the best time per call.
"""

import argparse
import timeit

import numpy as np

from cloudeff.dataset import synthesize
from cloudeff.forest import ForestConfig, fit_forest
from cloudeff.kernels import available_backends
from cloudeff.neural import NetSpec, param_count


def cases():
    rng = np.random.default_rng(0)
    spec = NetSpec()
    params = rng.normal(size=param_count(spec))
    X_net = rng.random((240, 5))
    y_net = rng.random(240)
    dims = (spec.p, spec.filters, spec.kernel, spec.hidden, True)

    X_split = rng.random((400, 5))
    y_split = rng.random(400)
    features = np.arange(5, dtype=np.intp)

    tree = fit_forest(synthesize(500, 0), ForestConfig(n_trees=1, max_depth=None, min_samples_leaf=1)).trees[0]
    X_tree = rng.uniform(0, 500, size=(5000, 5))
    arrays = (tree.feature, tree.threshold, tree.left, tree.right, tree.value)

    return {
        "net_mse (240 rows)": lambda k: k.net_mse(params, X_net, y_net, *dims),
        "best_split (400 x 5)": lambda k: k.best_split(X_split, y_split, features, 2),
        f"tree_apply ({tree.n_nodes} nodes, 5000 rows)": lambda k: k.tree_apply(*arrays, X_tree),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the fallback is timed")
    for name, fn in cases().items():
        times = {}
        for label, module in backends.items():
            timer = timeit.Timer(lambda: fn(module))
            number, _ = timer.autorange()
            times[label] = min(timer.repeat(args.repeat, number)) / number
            print(f"{name:42s} {label:9s} {times[label] * 1e3:9.3f} ms")
        if len(times) == 2:
            print(f"{'':42s} speedup   {times['python'] / times['compiled']:9.2f}x")


if __name__ == "__main__":
    main()
