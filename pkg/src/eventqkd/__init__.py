"""Event-by-event simulation of BB84 and Ekert quantum key distribution."""
from __future__ import annotations

__version__ = "0.1.0"
