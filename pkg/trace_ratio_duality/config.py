import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Base paths
BASE_DIR = Path(__file__).parent.parent
OUTPUT_DIR = Path(os.getenv("OUTPUT_DIR", "output"))
TEMPLATES_DIR = Path(__file__).parent / "templates"
INPUT_DIR = BASE_DIR / "input"

# Logging Configuration (error, info or debug)
LOG_LEVEL = os.getenv("TRP_LOG", "info")

# Linear algebra tolerances
SPD_TOL = float(os.getenv("TRP_SPD_TOL", "1e-10"))
MULT_TOL = float(os.getenv("TRP_MULT_TOL", "1e-7"))
RECON_TOL = float(os.getenv("TRP_RECON_TOL", "1e-10"))
ORTHO_TOL = float(os.getenv("TRP_ORTHO_TOL", "1e-10"))
JACOBI_TOL = float(os.getenv("TRP_JACOBI_TOL", "1e-13"))  # relative off-diagonal norm
MAX_SWEEPS = int(os.getenv("TRP_MAX_SWEEPS", "64"))

# Feasibility and combinatorics
FEAS_TOL = float(os.getenv("TRP_FEAS_TOL", "1e-8"))
DS_TOL = float(os.getenv("TRP_DS_TOL", "1e-9"))
STRIP_TOL = float(os.getenv("TRP_STRIP_TOL", "1e-12"))
ENUM_MAX_N = int(os.getenv("TRP_ENUM_MAX_N", "8"))

# Linear programming
LP_TOL = float(os.getenv("TRP_LP_TOL", "1e-9"))
LP_MAX_ITER = int(os.getenv("TRP_LP_MAX_ITER", "5000"))

# S-lemma
DECIDE_TOL = float(os.getenv("TRP_DECIDE_TOL", "1e-9"))
WIT_MARGIN = float(os.getenv("TRP_WIT_MARGIN", "1e-12"))
CERT_TOL = 1e-8

# Primal solver
DINK_TOL = float(os.getenv("TRP_DINK_TOL", "1e-10"))
DINK_MAX_ITER = int(os.getenv("TRP_DINK_MAX_ITER", "200"))
DEFAULT_SEED = int(os.getenv("TRP_SEED", "0"))
DEFAULT_SAMPLES = int(os.getenv("TRP_SAMPLES", "2000"))
GRID_STEP_DIVISOR = 2000  # angle grid step is pi / GRID_STEP_DIVISOR

# Duality
BIS_TOL = float(os.getenv("TRP_BIS_TOL", "1e-8"))
DYKSTRA_MAX_ITER = int(os.getenv("TRP_DYKSTRA_MAX_ITER", "5000"))
DYKSTRA_TOL = float(os.getenv("TRP_DYKSTRA_TOL", "1e-7"))
GAP_TOL = 1e-6

# Input/Output Configuration
INPUT_ENCODING = "utf-8"
OUTPUT_ENCODING = "utf-8"
SCHEMA_VERSION = "1"
FLOAT_DIGITS = 17


def tolerances() -> dict[str, float]:
    """Tolerances recorded in report metadata."""
    return {
        "spd_tol": SPD_TOL,
        "mult_tol": MULT_TOL,
        "feas_tol": FEAS_TOL,
        "lp_tol": LP_TOL,
        "decide_tol": DECIDE_TOL,
        "dink_tol": DINK_TOL,
        "bis_tol": BIS_TOL,
        "dykstra_tol": DYKSTRA_TOL,
    }
