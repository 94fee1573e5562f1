"""daqwear: a virtual wearable sensor recorder and its host tooling.

The device side simulates multi-rate sensor streams, labels every record
against a configured privacy circle, and persists per-frequency CSV files
under a restart/clean control service. The host side talks to the device
over a loopback bridge to push configuration, pull files, scrub private
rows, and check recording quality.
"""

__version__ = "0.1.0"

from .config import Config, CorrectionReport, parse_config, sensor_groups, serialize_metafile
from .geofence import GpsFix, PrivacyCircle, label
from .sensorsim import Sample, Scenario

__all__ = [
    "__version__",
    "Config",
    "CorrectionReport",
    "GpsFix",
    "PrivacyCircle",
    "Sample",
    "Scenario",
    "label",
    "parse_config",
    "sensor_groups",
    "serialize_metafile",
]
