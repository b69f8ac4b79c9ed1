"""Byrd-box tracing for a small logic language, with foldl-style monitors."""

from .collect import (
    CollectResult, CollectSession, Monitor, MonitorError, collect_checkpointed,
    foldl_oracle, merge, run_collect,
)
from .engine import EngineError, EngineOptions, RunOutcome, solve
from .lang import parse_program, parse_query, render_term
from .monitors import (
    cfg_chrono_monitor, cfg_monitor, count_call_monitor, dcg_monitor,
    depth_histogram_monitor, get_monitor, port_histogram_monitor, proof_tree_monitor,
)
from .trace_model import Event, Port, StopFlag, check_trace

__version__ = "0.1.0"

__all__ = [
    "CollectResult", "CollectSession", "EngineError", "EngineOptions", "Event",
    "Monitor", "MonitorError", "Port", "RunOutcome", "StopFlag", "cfg_chrono_monitor",
    "cfg_monitor", "check_trace", "collect_checkpointed", "count_call_monitor",
    "dcg_monitor", "depth_histogram_monitor", "foldl_oracle", "get_monitor", "merge",
    "parse_program", "parse_query", "port_histogram_monitor", "proof_tree_monitor",
    "render_term", "run_collect", "solve",
]
