"""Static deadlock detection for an actor language with futures and cogs."""
from __future__ import annotations

__version__ = "0.1.0"
