#!/usr/bin/env python3
#
# Copyright 2026 The FairAudit Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#
"""Runs the CLI on a small config and validates every emitted report."""

import json
import shutil
import subprocess
import sys
from pathlib import Path

import jsonschema


def run(cmd):
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        sys.exit(f"{' '.join(cmd)} exited {proc.returncode}:\n{proc.stderr}")


def check(validator, path):
    errors = sorted(validator.iter_errors(json.loads(path.read_text())), key=str)
    for e in errors:
        print(f"{path}: {'/'.join(map(str, e.absolute_path))}: {e.message}")
    return not errors


def main():
    cli, schema_path, config, work = sys.argv[1:5]
    work = Path(work)
    shutil.rmtree(work, ignore_errors=True)
    schema = json.loads(Path(schema_path).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    plain, quick, dp, reemit = (work / d for d in ("plain", "quick", "dp", "reemit"))
    run([cli, "experiment", "--config", config, "--out", str(plain)])
    run([cli, "experiment", "--config", config, "--quick", "--out", str(quick)])
    dp_config = work / "dp.cfg"
    doc = json.loads(
        "\n".join(l for l in Path(config).read_text().splitlines() if not l.lstrip().startswith("//")))
    doc.setdefault("defense", {}).setdefault("dp", {})["enabled"] = True
    doc["defense"]["restriction"] = "fair_isolation"
    dp_config.write_text(json.dumps(doc))
    run([cli, "experiment", "--config", str(dp_config), "--out", str(dp)])
    run([cli, "report", "--in", str(plain), "--out", str(reemit), "--format", "json"])

    ok = all(check(validator, d / "report.json") for d in (plain, quick, dp, reemit))
    if json.loads((plain / "report.json").read_text()) != json.loads((reemit / "report.json").read_text()):
        print("re-emitted report differs from the original")
        ok = False
    print("schema check", "passed" if ok else "FAILED")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
