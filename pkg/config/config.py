"""
Configuration file for the RCP two-delay toolkit
All paths, numerical tolerances and simulation defaults are configured here
"""
import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Base directory
BASE_DIR = Path(__file__).parent.parent

# Data directories
DATA_DIR = BASE_DIR / "data"
REFERENCE_DIR = DATA_DIR / "reference"
REFERENCE_SETS_FILE = REFERENCE_DIR / "parameter_sets.json"
OUTPUT_DIR = Path(os.getenv("RCP_OUTPUT_DIR", str(BASE_DIR / "outputs")))

# Model defaults (rates in packets/ms, delays in ms)
DEFAULT_CAPACITY = float(os.getenv("RCP_CAPACITY", "100"))
DEFAULT_SIGMA_SQ = float(os.getenv("RCP_SIGMA_SQ", "1.0"))
DEFAULT_GAMMA = float(os.getenv("RCP_GAMMA", "0.95"))
DEFAULT_SEED = int(os.getenv("RCP_SEED", "0"))

# Normal-form tolerances
DEGENERATE_TOL = float(os.getenv("RCP_DEGENERATE_TOL", "1e-12"))
RESONANCE_TOL = float(os.getenv("RCP_RESONANCE_TOL", "1e-14"))
KAPPA_MATCH_RTOL = 1e-10

# Fluid simulation
HISTORY_EPSILON = float(os.getenv("RCP_HISTORY_EPSILON", "0.01"))
TRANSIENT_FRACTION = float(os.getenv("RCP_TRANSIENT_FRACTION", "0.8"))
ESCAPE_UPPER = float(os.getenv("RCP_ESCAPE_UPPER", "10"))
ESCAPE_LOWER = float(os.getenv("RCP_ESCAPE_LOWER", "1e-9"))
SATURATION_MARGIN = 1e-9
STEPS_PER_MIN_DELAY = int(os.getenv("RCP_STEPS_PER_MIN_DELAY", "50"))
MIN_DELAY_SUMS = float(os.getenv("RCP_MIN_DELAY_SUMS", "40"))
DEFAULT_DELAY_SUMS = float(os.getenv("RCP_DEFAULT_DELAY_SUMS", "60"))
MAX_DELAY_SUMS = float(os.getenv("RCP_MAX_DELAY_SUMS", "2000"))
SETTLING_TIMES = float(os.getenv("RCP_SETTLING_TIMES", "12"))
EQUILIBRIUM_VARIATION = 1e-4
MIN_PEAKS = 5
ENVELOPE_DECAY = float(os.getenv("RCP_ENVELOPE_DECAY", "0.02"))

# Packet simulation
RATE_FLOOR_FRACTION = float(os.getenv("RCP_RATE_FLOOR_FRACTION", "1e-6"))
QUEUE_OVERFLOW = int(float(os.getenv("RCP_QUEUE_OVERFLOW", "1e6")))
PACKET_BYTES = int(os.getenv("RCP_PACKET_BYTES", "1000"))
EXPONENTIAL_BATCH = 4096

# Root scan oracle
ROOT_DEDUP_TOL = 1e-8
NEWTON_MAX_ITER = int(os.getenv("RCP_NEWTON_MAX_ITER", "60"))

# Console progress bars
SHOW_PROGRESS = os.getenv("RCP_SHOW_PROGRESS", "1") not in ("0", "false", "False")

# Create directories if they don't exist
OUTPUT_DIR.mkdir(parents=True, exist_ok=True)
