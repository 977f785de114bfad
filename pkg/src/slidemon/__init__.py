"""Communication-efficient continuous monitoring of distributed data
streams over a time-based sliding window."""

from .coordinator import FrequentResult, RootState
from .generators import GeneratorSpec, StreamEvents, generate_stream, read_trace, write_trace
from .oracle import StreamOracle, oracle_query
from .protocol import (
    AcSite,
    BcSite,
    FrequentSite,
    Message,
    ProtocolParams,
    QuantileSite,
    SimpleSite,
    make_site,
)
from .reports import AuditRecord, RunReport
from .simulator import RunConfig, TardinessError, run_simulation
from .window import ExpHistogram, TimedItem, WindowConfig, WindowEstimator

__all__ = [
    "AcSite",
    "AuditRecord",
    "BcSite",
    "ExpHistogram",
    "FrequentResult",
    "FrequentSite",
    "GeneratorSpec",
    "Message",
    "ProtocolParams",
    "QuantileSite",
    "RootState",
    "RunConfig",
    "RunReport",
    "SimpleSite",
    "StreamEvents",
    "StreamOracle",
    "TardinessError",
    "TimedItem",
    "WindowConfig",
    "WindowEstimator",
    "generate_stream",
    "make_site",
    "oracle_query",
    "read_trace",
    "run_simulation",
    "write_trace",
]

__version__ = "0.1.0"
