"""Co-citation kinetics: pair generation at scale, yearly co-citation
series, and delayed-recognition detection."""

__version__ = "0.1.0"
