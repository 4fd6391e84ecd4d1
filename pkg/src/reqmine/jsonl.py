"""Schema-versioned JSON-lines files used for every intermediate artifact.

The first line of each file is a header ``{"schema": name, "version": n}``;
readers refuse files whose header does not match what they expect.
"""

import json
import os

from .errors import MissingInputError, SchemaError

SCHEMA_VERSION = 1


def dumps(obj):
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def ensure_parent(path):
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_records(path, schema, records):
    ensure_parent(path)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps({"schema": schema, "version": SCHEMA_VERSION}) + "\n")
        for rec in records:
            fh.write(dumps(rec) + "\n")
    os.replace(tmp, path)


def read_records(path, schema):
    if not os.path.exists(path):
        raise MissingInputError(f"input file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        try:
            header = json.loads(first)
        except json.JSONDecodeError:
            header = None
        if not isinstance(header, dict) or "schema" not in header:
            raise SchemaError(f"{path}: missing schema header (expected '{schema}')")
        if header["schema"] != schema or header.get("version") != SCHEMA_VERSION:
            raise SchemaError(
                f"{path}: schema {header.get('schema')!r} v{header.get('version')} "
                f"does not match expected {schema!r} v{SCHEMA_VERSION}"
            )
        return [json.loads(line) for line in fh if line.strip()]


def write_json(path, obj):
    ensure_parent(path)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n")
    os.replace(tmp, path)


def read_json(path, schema=None):
    if not os.path.exists(path):
        raise MissingInputError(f"input file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if schema is not None:
        if obj.get("schema") != schema or obj.get("version") != SCHEMA_VERSION:
            raise SchemaError(
                f"{path}: schema {obj.get('schema')!r} v{obj.get('version')} "
                f"does not match expected {schema!r} v{SCHEMA_VERSION}"
            )
    return obj
