"""Version information."""

VERSION = "0.3.0"
