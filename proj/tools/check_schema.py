#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Validates definition documents against docs/definition.schema.json."""
import json
import sys

import jsonschema
import yaml


def main(schema_path, *docs):
    with open(schema_path) as f:
        schema = json.load(f)
    validator = jsonschema.Draft202012Validator(schema)
    bad = 0
    for path in docs:
        with open(path) as f:
            errors = list(validator.iter_errors(yaml.safe_load(f)))
        for e in errors:
            print(f"{path}: {'/'.join(map(str, e.path))}: {e.message}")
        bad += bool(errors)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:]))
