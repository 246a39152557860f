"""Validates the model corpus and every CLI report kind against the JSON schemas."""

import json
import pathlib
import subprocess
import sys

import jsonschema


def main() -> int:
    exe, models, docs = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
    model_schema = json.loads((docs / "model.schema.json").read_text())
    report_schema = json.loads((docs / "report.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(model_schema)
    jsonschema.Draft202012Validator.check_schema(report_schema)

    failures = 0
    for path in sorted(models.glob("*.json")):
        try:
            jsonschema.validate(json.loads(path.read_text()), model_schema)
        except jsonschema.ValidationError as e:
            print(f"model {path.name}: {e.message}")
            failures += 1

    runs = [
        ["validate", "--model", "two_class.json", "--echo"],
        ["validate", "--model", "finite.json"],
        ["stability", "--model", "mx_logheavy15.json"],
        ["stability", "--model", "zeta25.json"],
        ["drift", "--model", "geometric.json", "--range", "40"],
        ["solve", "--model", "two_class.json", "--queue", "q2", "--cap", "60"],
        ["simulate", "--model", "finite.json", "--horizon", "200", "--replications", "2"],
        ["couple", "--model", "two_class.json", "--horizon", "200", "--replications", "2"],
        ["report", "--model", "poisson2.json", "--cap", "80", "--horizon", "500"],
        ["report", "--model", "logheavy15.json", "--horizon", "100"],
    ]
    for args in runs:
        args = [a if not a.endswith(".json") else str(models / a) for a in args]
        proc = subprocess.run([exe, *args], capture_output=True, text=True, check=False)
        name = " ".join(args[:1] + [pathlib.Path(args[2]).name])
        if proc.returncode != 0:
            print(f"{name}: exit {proc.returncode}: {proc.stderr.strip()}")
            failures += 1
            continue
        doc = json.loads(proc.stdout)
        # --echo prints a model, not a report.
        schema = model_schema if "--echo" in args else report_schema
        try:
            jsonschema.validate(doc, schema)
        except jsonschema.ValidationError as e:
            print(f"{name}: {e.message} at {list(e.absolute_path)}")
            failures += 1

    print(f"{failures} schema failures")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
