"""Service & resource broker: intent-driven SLA negotiation and slice enforcement."""

__version__ = "0.1.0"
