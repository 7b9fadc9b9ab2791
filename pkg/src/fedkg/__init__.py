"""Federated knowledge-graph query engine.

Plans multi-hop graph queries against a registry of semantically annotated
web APIs, executes the sub-queries with bounded concurrency, and assembles
the returned records into scored result sub-graphs.
"""

from __future__ import annotations

__version__ = "0.1.0"
