"""Running a shipped scenario from Python instead of the command line.

Equivalent to ``bregcyclic run --config proximity --out <dir>``.
"""
import json
import sys
import tempfile

from bregcyclic.scenario import load_config, run, shipped_scenarios

print("shipped:", ", ".join(shipped_scenarios()))
name = sys.argv[1] if len(sys.argv) > 1 else "proximity"
with tempfile.TemporaryDirectory() as out:
    rep = run(load_config(name), out)
    for entry in rep.runs:
        print(f"{entry['status']:7s} {entry['name']:28s} {entry['outcome']}")
    doc = json.load(open(f"{out}/report.json"))
    print("report keys:", sorted(doc))
