"""silt: streaming-engine latency toolkit.

Measures per-tuple refresh latency of an in-memory incremental query
engine under configurable OS isolation scenarios and competing tenant
load, quantifies the observed noise, and renders latency time-series
reports.
"""

__version__ = "0.1.0"
