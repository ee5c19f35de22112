"""Explainable harmful-meme detection: debate, judge, fusion classifier and review service."""

import contextlib
import json
import os

from . import _core
from ._core import ConfigError, Error, IngestError, NotFoundError, ValidationError, set_log_level

__version__ = _core.__version__

STAGES = ("ingest", "debate", "judge", "train", "predict", "eval", "ablate", "score-explanations")


def _dump(config):
    return json.dumps(config if config is not None else {})


def merge_labels(raw):
    return _core.merge_labels(raw)


def compute_metrics(golds, preds):
    return json.loads(_core.compute_metrics(list(golds), list(preds)))


def parse_preference(raw):
    return json.loads(_core.parse_preference(raw))


def debater_prompt(text, stance):
    return _core.debater_prompt(text, stance)


def judge_prompt(text, harmless, harmful):
    return _core.judge_prompt(text, harmless, harmful)


def normalize_config(config, base_dir=""):
    """Validated config with every default filled in. Raises ConfigError listing all problems."""
    return json.loads(_core.normalize_config(_dump(config), os.fspath(base_dir)))


def demo_config(seed=13):
    return json.loads(_core.demo_config(seed))


def run_stage(config, run_dir, stage, variant=None):
    return json.loads(_core.run_stage(_dump(config), os.fspath(run_dir), stage, variant))


def run_all(config, run_dir):
    return json.loads(_core.run_all(_dump(config), os.fspath(run_dir)))


def run_demo(run_dir, seed=13):
    return run_all(demo_config(seed), run_dir)


def manifest(config, run_dir):
    return json.loads(_core.manifest(_dump(config), os.fspath(run_dir)))


class Server:
    """Review service over a finished run directory, served from a background thread."""

    def __init__(self, run_dir, host="127.0.0.1", port=0, static_dir=None):
        self._impl = _core.Server(os.fspath(run_dir), host, port,
                                  None if static_dir is None else os.fspath(static_dir))

    def start(self):
        return self._impl.start()

    def stop(self):
        self._impl.stop()

    @property
    def port(self):
        return self._impl.port

    @property
    def url(self):
        return f"http://{self._impl.host}:{self._impl.port}"

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()


@contextlib.contextmanager
def serving(run_dir, **kwargs):
    server = Server(run_dir, **kwargs)
    with server:
        yield server.url


__all__ = [
    "ConfigError", "Error", "IngestError", "NotFoundError", "ValidationError", "STAGES", "Server",
    "compute_metrics", "debater_prompt", "demo_config", "judge_prompt", "manifest", "merge_labels",
    "normalize_config", "parse_preference", "run_all", "run_demo", "run_stage", "serving", "set_log_level",
]
