"""Bundled adapter process: speaks the wire protocol on stdio, driven by a
script file (defaults to the echo script).

Usage: python3 -m spot_eval.adapter_stub [--script rules.json]
"""

from __future__ import annotations

import argparse
import json
import sys

from .replay import Script, ScriptedAdapter, echo_script


def serve(adapter: ScriptedAdapter, stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        record = json.loads(line)
        if record.get("type") == "eos":
            adapter.drain(record)
            stdout.write(json.dumps({"type": "bye"}) + "\n")
            stdout.flush()
            return
        for response in adapter.exchange(record):
            stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
        stdout.write(json.dumps({"type": "ack"}) + "\n")
        stdout.flush()


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--script", default=None, help="script rules json")
    args = parser.parse_args()
    if args.script:
        with open(args.script, "r", encoding="utf-8") as fh:
            script = Script.from_obj(json.load(fh))
    else:
        script = echo_script()
    serve(ScriptedAdapter(script))
    return 0


if __name__ == "__main__":
    sys.exit(main())
