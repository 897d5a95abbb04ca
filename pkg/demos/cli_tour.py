"""
Driving everything from config files
====================================

The same runs through the command-line entry point.  Reports land in
demo_out/ as <command>_report.json, <command>_summary.csv and a
<command>_meta.json sidecar holding the timestamp, so reports from seeded
reruns are byte-identical.
"""

import json
import os
import tempfile

from cavityqis.cli import main

here = os.path.dirname(os.path.abspath(__file__))
out = os.path.join(here, "demo_out")


def cfg(name):
    return os.path.join(here, "configs", name)


for command, name in [("run", "ghz_run.cfg"), ("run", "w_run.cfg"), ("sweep", "sweep.cfg"),
                      ("scenario", "no_cooperation.cfg"), ("validate", "validate_quick.cfg")]:
    code = main([command, "--config", cfg(name), "--out", os.path.join(out, name[:-4])])
    print(name, "-> exit", code)

with open(os.path.join(out, "w_run", "run_report.json")) as fh:
    print("W success probability:", json.load(fh)["success_probability"])

# a sampled run without a seed is refused (exit 1)
with tempfile.NamedTemporaryFile("w", suffix=".cfg", delete=False) as fh:
    fh.write("protocol = ghz\nmode = sampled\n")
print("no seed ->", main(["run", "--config", fh.name, "--out", out]))
os.unlink(fh.name)
