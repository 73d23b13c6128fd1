import os
import sys

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Partition and covering defaults
XI = float(os.getenv("REGULARITY_XI") or 0.1)
COVER_C = float(os.getenv("REGULARITY_COVER_C") or 0.25)
COVER_CHAT = float(os.getenv("REGULARITY_COVER_CHAT") or 0.5)
COVER_DEPTH = int(os.getenv("REGULARITY_COVER_DEPTH") or 4)

# Height of the extension cylinder; every cylinder result holds for any positive height
CYLINDER_HEIGHT = float(os.getenv("REGULARITY_Y") or 1.0)

# All randomness flows from this seed
ROOT_SEED = int(os.getenv("REGULARITY_SEED") or 0)
MC_BUDGET = int(os.getenv("REGULARITY_BUDGET") or 100000)

# Shell quadrature
SHELL_TAIL_TOL = float(os.getenv("REGULARITY_SHELL_TAIL_TOL") or 1e-3)
MAX_SHELLS = int(os.getenv("REGULARITY_MAX_SHELLS") or 200)
SHELL_ORDER = int(os.getenv("REGULARITY_SHELL_ORDER") or 8)

# Galerkin assembly: Gauss points per direction for separated / touching / identical panels
GAUSS_SEPARATED = int(os.getenv("REGULARITY_GAUSS_SEPARATED") or 4)
GAUSS_TOUCHING = int(os.getenv("REGULARITY_GAUSS_TOUCHING") or 6)
GAUSS_IDENTICAL = int(os.getenv("REGULARITY_GAUSS_IDENTICAL") or 8)


# Finite differences: step h = FD_EPS^(1/(|β|+2))·scale, Richardson on two levels
FD_EPS = float(os.getenv("REGULARITY_FD_EPS") or sys.float_info.epsilon)
P_MAX = int(os.getenv("REGULARITY_PMAX") or 4)

# Output
OUTPUT_DIR = os.getenv("REGULARITY_OUTPUT_DIR") or "runs"
LOG_LEVEL = os.getenv("REGULARITY_LOG_LEVEL") or "INFO"
