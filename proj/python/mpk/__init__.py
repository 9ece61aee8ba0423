"""Python bindings for the mpk message-passing kit."""

import json as _json

from ._core import (
    Error,
    amdahl_bound,
    classify,
    efficiency,
    gustafson_bound,
    load_curve,
    naive_is_prime,
    normalized_slope,
    parallel_time,
    primes_parallel,
    primes_serial,
    speedup,
    wave_parallel,
    wave_serial,
    workload_names,
)
from . import _core

__all__ = [
    "Error",
    "amdahl_bound",
    "classify",
    "efficiency",
    "gustafson_bound",
    "load_curve",
    "naive_is_prime",
    "normalized_slope",
    "parallel_time",
    "predict",
    "primes_parallel",
    "primes_serial",
    "report",
    "speedup",
    "wave_parallel",
    "wave_serial",
    "workload_names",
]


def report(procs, seconds, serial_seconds=None, label="curve"):
    """Speedup/efficiency report for a recorded curve, as a dict."""
    return _json.loads(_core.report_json(list(procs), list(seconds), serial_seconds, label))


def predict(workload, max_procs=10, reps=3, eager_threshold=None, **params):
    """Record a time curve on one CPU and classify it. Returns the report dict."""
    text = {k: str(v) for k, v in params.items()}
    return _json.loads(_core.predict_json(workload, text, max_procs, reps, eager_threshold))
