"""
Command-line runs
=================

Drives ``fracpearson run`` from Python and replays the manifest it writes.
"""

import json
import tempfile
from pathlib import Path

import yaml

from fracpearson import cli

config = {
    "task": "compare",
    "model": {"class": "hermite", "a0": 0, "a1": -1, "d0": 1},
    "mixture": {"orders": [0.3, 0.8], "weights": [0.5, 0.5]},
    "grid": {"points": [[1, 0.5], [2, 1], [5, 1]]},
    "simulation": {"n_paths": 2000},
    "seed": 11,
}

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    (tmp / "cfg.yaml").write_text(yaml.safe_dump(config))
    cli.main(["run", str(tmp / "cfg.yaml"), "-o", str(tmp / "a")])
    print((tmp / "a" / "compare.csv").read_text())
    manifest = json.loads((tmp / "a" / "compare_manifest.json").read_text())
    print("resolved dtau:", manifest["config"]["simulation"]["dtau"])
    cli.main(["run", str(tmp / "a" / "compare_manifest.json"), "-o", str(tmp / "b")])
    same = (tmp / "a" / "compare.csv").read_bytes() == (tmp / "b" / "compare.csv").read_bytes()
    print("replay identical:", same)
