"""Vehicle classification from RSSI shadowing fingerprints on a 3x3 roadside link array."""

__version__ = "0.1.0"
