"""Runs every subcommand of the tool and validates its JSON against schemas/."""
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema
from referencing import Registry, Resource

tool, schema_dir = sys.argv[1], pathlib.Path(sys.argv[2])

resources = []
for path in schema_dir.glob("*.schema.json"):
    doc = json.loads(path.read_text())
    jsonschema.Draft7Validator.check_schema(doc)
    resources.append((doc["$id"], Resource.from_contents(doc)))
registry = Registry().with_resources(resources)


def check(schema_name, text, what):
    schema = json.loads((schema_dir / schema_name).read_text())
    validator = jsonschema.Draft7Validator(schema, registry=registry)
    errors = sorted(validator.iter_errors(json.loads(text)), key=lambda e: list(e.path))
    for e in errors:
        print(f"{what}: {'/'.join(map(str, e.path))}: {e.message}")
    print(f"{what}: {'ok' if not errors else 'INVALID'}")
    return not errors


def run(args, expect=0):
    p = subprocess.run([tool, *args], capture_output=True, text=True)
    if p.returncode != expect:
        sys.exit(f"{args}: exit {p.returncode}, expected {expect}\n{p.stderr}")
    return p


ok = True
with tempfile.TemporaryDirectory() as tmp:
    data = str(pathlib.Path(tmp) / "d.csv")
    run(["simulate", "--n", "4", "--t", "150", "--seed", "3", "--output", data])
    shifted = str(pathlib.Path(tmp) / "zero.csv")
    pathlib.Path(shifted).write_text("a,b\n" + "0,0\n" * 40)

    ok &= check("test.schema.json", run(["test", "--input", data, "--b-reps", "99", "--alpha", "0.05,0.1"]).stdout, "test")
    ok &= check("test.schema.json", run(["test", "--input", shifted, "--lags", "1", "--b-reps", "49"]).stdout, "test/zero")
    ok &= check("test.schema.json",
                run(["test", "--input", data, "--lags", "2", "--mode", "min", "--selector", "tscv", "--b-reps", "49"]).stdout,
                "test/min")
    ok &= check("fit.schema.json", run(["fit", "--input", data, "--lags", "2"]).stdout, "fit")
    for exp in ["size", "ks", "cov"]:
        args = ["mc", "--experiment", exp, "--grid", "3x60,3x90", "--mc-reps", "4", "--b-reps", "19", "--oracle-draws", "200"]
        if exp == "size":
            args += ["--shift-series", "1", "--alpha", "0.05,0.1"]
        ok &= check("mc.schema.json", run(args).stdout, f"mc/{exp}")
    ok &= check("error.schema.json", run(["test", "--input", str(pathlib.Path(tmp) / "missing.csv")], expect=2).stderr, "error/input")
    ok &= check("error.schema.json", run(["test", "--bogus"], expect=2).stderr, "error/usage")

sys.exit(0 if ok else 1)
