import json
import os
import pathlib

import jsonschema
import pytest

import memejudge

ROOT = pathlib.Path(__file__).resolve().parents[2]


@pytest.fixture(scope="session")
def schema():
    return json.loads((ROOT / "schema" / "modserve.schema.json").read_text())


@pytest.fixture(scope="session")
def validate(schema):
    def check(instance, name):
        wrapper = {"$defs": schema["$defs"], "$ref": f"#/$defs/{name}"}
        jsonschema.Draft202012Validator(wrapper).validate(instance)
        return instance

    return check


@pytest.fixture(scope="session")
def demo_run(tmp_path_factory):
    memejudge.set_log_level("warn")
    run_dir = tmp_path_factory.mktemp("demo")
    results = memejudge.run_demo(run_dir, seed=13)
    return run_dir, results


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("MEMEJUDGE_CLI")
    if not path or not pathlib.Path(path).exists():
        pytest.skip("MEMEJUDGE_CLI not set")
    return path
