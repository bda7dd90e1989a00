"""Robust semifactual ("even if") explanations for tabular classifiers."""

import json

from . import _evenif
from ._evenif import (
    EmptyActionSpace,
    Error,
    NoEffectiveSemifactual,
    NotFound,
    NotPositiveOutcome,
    TimeoutError,
    ValidationError,
)

__all__ = [
    "EmptyActionSpace",
    "Error",
    "NoEffectiveSemifactual",
    "NotFound",
    "NotPositiveOutcome",
    "Service",
    "TimeoutError",
    "ValidationError",
    "default_config",
    "generate",
    "method_names",
    "run_benchmark",
]


def method_names():
    return list(_evenif.method_names())


def default_config():
    return json.loads(_evenif.default_config())


def generate(domain, rows=1000, seed=0, out_dir="."):
    _evenif.generate(domain, rows, seed, str(out_dir))


def run_benchmark(plan, base_dir=".", out_dir=None):
    """Runs a benchmark plan (dict) and returns its summary."""
    return json.loads(_evenif.run_benchmark(json.dumps(plan), str(base_dir), str(out_dir or "")))


class Service:
    """Datasets and models loaded from a registry file."""

    def __init__(self, registry, benchmark_dir=".", timeout_ms=30000):
        self._impl = _evenif.Service.from_registry(str(registry), str(benchmark_dir), timeout_ms)
        self._http = None

    def datasets(self):
        return json.loads(self._impl.list_datasets())["datasets"]

    def schema(self, dataset):
        return json.loads(self._impl.schema(dataset))

    def individuals(self, dataset, label="", limit=1000):
        return json.loads(self._impl.individuals(dataset, label, limit))["individuals"]

    def predict(self, dataset, record):
        return json.loads(self._impl.predict(json.dumps({"dataset": dataset, "record": record})))

    def explain(self, dataset, individual, **options):
        req = {"dataset": dataset, "individual": individual, **options}
        return json.loads(self._impl.explain(json.dumps(req)))

    def request(self, method, path, body=None, query=None):
        """Routes one HTTP-style request; returns (status, body)."""
        payload = "" if body is None else body if isinstance(body, str) else json.dumps(body)
        status, out = self._impl.handle(method, path, payload, dict(query or {}))
        return status, json.loads(out)

    def serve(self, host="127.0.0.1", port=0):
        """Starts the HTTP API on a background thread; returns the port."""
        if self._http is not None:
            raise RuntimeError("already serving")
        self._http = _evenif.HttpServer(self._impl)
        bound = self._http.bind(host, port)
        self._http.start()
        return bound

    def stop(self):
        if self._http is not None:
            self._http.stop()
            self._http = None
