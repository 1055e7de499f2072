"""
Runtime configuration utility.
"""
import logging
from os import environ, path

from dotenv import load_dotenv

load_dotenv(path.dirname(path.realpath(__file__)) + "/../.env")

TESTING = environ.get("TESTING")

LOG_LEVEL = environ.get("LOG_LEVEL", "INFO")

# Dimension caps
STATE_SPACE_CAP = int(environ.get("STATE_SPACE_CAP", 2**20))
REGIME_CAP = int(environ.get("REGIME_CAP", 128))
VERTEX_DIM_CAP = int(environ.get("VERTEX_DIM_CAP", 8))
EXACT_CERTIFY_CAP = int(environ.get("EXACT_CERTIFY_CAP", 4096))
SORT_CAP = int(environ.get("SORT_CAP", 1000))

# Numerical tolerances
EPS_FEAS = float(environ.get("EPS_FEAS", 1e-8))
EPS_DUAL = float(environ.get("EPS_DUAL", 1e-6))
EPS_SIGN = float(environ.get("EPS_SIGN", 1e-7))
EPS_TIE = float(environ.get("EPS_TIE", 1e-9))
FEASIBILITY_TOL = float(environ.get("FEASIBILITY_TOL", 1e-6))

# LP backend
LP_SOLVER = environ.get("LP_SOLVER", "simplex")
LP_WORKERS = int(environ.get("LP_WORKERS", 4))
LP_MAX_ITERATIONS = int(environ.get("LP_MAX_ITERATIONS", 50_000))

# Data and simulation
N_MIN = int(environ.get("N_MIN", 30))
DEFAULT_SEED = int(environ.get("DEFAULT_SEED", 20221001))
BOOTSTRAP_REPS = int(environ.get("BOOTSTRAP_REPS", 499))

if TESTING:
    # Keep Monte Carlo fixtures light under pytest
    MC_DRAWS = int(environ.get("MC_DRAWS", 200_000))
else:
    MC_DRAWS = int(environ.get("MC_DRAWS", 1_000_000))


def configure_logging(level: str = None):
    """configure_logging
    Install the package log handler. Called by entry points only.

    Args:
        level (str, optional): Log level name. Defaults to LOG_LEVEL.
    """
    logging.basicConfig(
        level=(level or LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
