"""Effect of temporal resolution on wind-speed distributions and wind-power estimates."""

__version__ = "0.1.0"
