"""Rebuild the packaged parameter tables.

    python3 scripts/build_tables.py [--out DIR] [--seed S] [--only tree,sk,mis]

The SK table is built first because the large-degree tree row is derived
from it. Expect tens of minutes on one core.
"""

from __future__ import annotations

import argparse
import logging
import time
from pathlib import Path

from qeopt import params

log = logging.getLogger("build_tables")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(params.__file__).with_name("data"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", default="sk,tree,mis")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    only = set(args.only.split(","))
    args.out.mkdir(parents=True, exist_ok=True)

    if "sk" in only:
        t = time.time()
        sk = params.build_sk_table(seed=args.seed)
        params.save_table(sk, args.out, "sk")
        log.info("sk table done in %.0fs", time.time() - t)
    else:
        sk = params.SkParamTable.from_json((args.out / "sk_table.json").read_text())

    if "tree" in only:
        t = time.time()
        tree = params.build_tree_table(seed=args.seed, sk=sk)
        params.save_table(tree, args.out, "tree")
        log.info("tree table done in %.0fs", time.time() - t)

    if "mis" in only:
        t = time.time()
        graphs = params.mis_training_graphs(seed=args.seed)
        samples = params.optimize_mis_angles(graphs, seed=args.seed)
        meta = {
            "seed": args.seed,
            "training": f"{len(graphs)} Erdos-Renyi graphs, n in [10, 20], edge probability in [0.2, 0.7], penalty 1",
        }
        mis = params.fit_mis_tables(samples, meta=meta)
        params.save_table(mis, args.out, "mis")
        log.info("mis table done in %.0fs", time.time() - t)


if __name__ == "__main__":
    main()
