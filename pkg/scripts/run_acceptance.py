"""Run the acceptance battery and write its metrics as JSON."""
import argparse
import json

from sectorial.acceptance import run_all


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--filter", action="append", default=[])
    ap.add_argument("--json", help="write per-criterion metrics here")
    args = ap.parse_args()
    results = run_all(args.filter, args.seed)
    for r in results:
        print(r.line())
    if args.json:
        data = {r.cid: {"passed": r.passed, "detail": r.detail, "seconds": r.seconds,
                        "metrics": {k: v for k, v in r.metrics.items() if k != "traceback"}} for r in results}
        with open(args.json, "w") as fh:
            json.dump(data, fh, indent=1, sort_keys=True, default=str)


if __name__ == "__main__":
    main()
