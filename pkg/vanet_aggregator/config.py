#!/usr/bin/env python3
"""
Configuration and constants for the VANET aggregation toolkit.
"""

from pathlib import Path

# Geometry constants
LANE_WIDTH_M = 4.0

# Packet constants
MESSAGE_BYTES = 100
PACKET_SIZES = (256, 512, 1024, 1500)
SIGNER_ID_BYTES = 8
SIGNER_POSITION_BYTES = 12
SIGNER_RECORD_BYTES = SIGNER_ID_BYTES + SIGNER_POSITION_BYTES

# Verification constants
DEFAULT_K = 10
DEFAULT_MIN_SIGNATURES = 3
MIN_CHECKED_SIGNATURES = 2

# Group formation constants
GROUP_WINDOW_MS = 2000
MAX_GROUP_WINDOW_MS = 120_000  # end-to-end A generation observed in the field
AGREEMENT_WINDOW_MS = 60_000

# Storage policy: basic time per event type (seconds) and road factors
BASIC_TIME_JAM_S = 300
BASIC_TIME_PARKING_S = 90
ROAD_FACTOR_CONVENTIONAL = 2
ROAD_FACTOR_HIGHWAY = 1

# Zone radii (meters)
DANGER_RADIUS_M = 100
UNCERTAINTY_RADIUS_M = 500
SECURITY_RADIUS_M = 2000

# Simulation defaults
NODE_COUNT = 20
STRIP_LENGTH_M = 1000.0
LANES_PER_DIRECTION = 3
SPEED_LIMIT_KMH = 120
SIM_DURATION_S = 1000
RETRANSMISSION_START_S = 40
RETRANSMISSION_PERIOD_S = 10
TX_RANGE_M = 100.0
MAX_TX_RANGE_M = 300.0
EVENT_DISTANCE_M = 800.0
LATENCY_MS = 100
ENCOUNTER_PERIOD_MS = 1000
MIN_SPEED_FRACTION = 0.5
MAX_SPEED_FRACTION = 1.0

# Sweep defaults
SWEEP_NODES = (10, 40)
SWEEP_STEP = 10
SWEEP_RUNS = 100

# CSV schema version emitted as the first column of every CSV
CSV_SCHEMA_VERSION = 1

# Database constants
HOME_DIR = Path.home()
DEFAULT_DATABASE_PATH = HOME_DIR / "vanet_aggregator.db"

# Preset configs shipped with the package
PRESETS_DIR = Path(__file__).parent / "presets"

# Adversaries act once the network has settled
ADVERSARY_START_MS = 5000
