"""Published JSON schemas for the CLI's report files."""

import json
from importlib import resources

SCHEMAS = ("coreset", "model", "bench_report", "guarantee_report", "lowerbound_report")


def load_schema(name: str) -> dict:
    if name not in SCHEMAS:
        raise KeyError(f"unknown schema {name!r}")
    text = resources.files("ndcoreset").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)
