"""Table-driven judge process for hermetic client tests.

Speaks the judge line protocol: one JSON request in, one JSON verdict out.
``--malformed-once`` emits prose for the first request only, exercising the
client's retry path; ``--always-malformed`` never recovers.
"""

from __future__ import annotations

import argparse
import json
import sys


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--table", default=None)
    parser.add_argument("--malformed-once", action="store_true")
    parser.add_argument("--always-malformed", action="store_true")
    args = parser.parse_args()

    table = {}
    if args.table:
        with open(args.table, "r", encoding="utf-8") as fh:
            for entry in json.load(fh):
                table[(entry["pred"], entry["gold"])] = {
                    "pred": entry["pred_verdict"],
                    "score": entry["score"],
                }

    served = 0
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        served += 1
        if args.always_malformed or (args.malformed_once and served == 1):
            sys.stdout.write("I think the answer is probably fine.\n")
            sys.stdout.flush()
            continue
        verdict = table.get((request.get("pred"), request.get("gold")), {"pred": "no", "score": 0})
        out = {"id": request.get("id"), "pred": verdict["pred"], "score": verdict["score"]}
        sys.stdout.write(json.dumps(out) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
