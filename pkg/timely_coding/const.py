"""Constants for the timely_coding package."""

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        """Backport of enum.StrEnum: members are strs and str() is the value."""

        __str__ = str.__str__
        __format__ = str.__format__

        @staticmethod
        def _generate_next_value_(name, start, count, last_values):
            return name.lower()

DOMAIN = "timely_coding"


class Policy(StrEnum):
    """Selective encoding policies."""

    HIGHEST_K = "highest-k"
    RANDOMIZED = "randomized"
    EMPTY_NORESET = "empty-noreset"
    EMPTY_RESET = "empty-reset"


EMPTY_SYMBOL_POLICIES = frozenset({Policy.EMPTY_NORESET, Policy.EMPTY_RESET})

# Pmf validation
PMF_SUM_TOLERANCE = 1e-12
MIN_ENCODED_PROBABILITY = 1e-12

# Lambert W
LAMBERT_W_MAX_ITERATIONS = 50
LAMBERT_W_RESIDUAL_TOLERANCE = 1e-12
# Above this exponent W(e^s) is solved in log space
LAMBERT_W_LOG_SWITCH = 700.0

# Solver defaults
DEFAULT_THETA_TOLERANCE = 1e-9
DEFAULT_KRAFT_TOLERANCE = 1e-10
DEFAULT_MAX_OUTER_ITERATIONS = 200
DEFAULT_MAX_INNER_ITERATIONS = 200
BETA_LOWER_BOUND = 1e-12
BETA_INITIAL_UPPER = 1.0
BETA_GROWTH = 4.0

# Search defaults
TIE_TOLERANCE = 1e-9
MAX_ENUMERATED_SUBSETS = 10**6
DEFAULT_RANKED_ROWS = 10
DEFAULT_ALPHA_STEP = 0.05
DEFAULT_EMPTY_LENGTH_STEP = 0.1
DEFAULT_EMPTY_LENGTH_MIN = 0.5
DEFAULT_EMPTY_LENGTH_MAX = 15.0

# Simulation defaults
DEFAULT_CYCLES = 10**6
DEFAULT_SEED = 0
DEFAULT_BLOCK_SIZE = 1 << 16
DEFAULT_HORIZON = 1e5
DEFAULT_TRAJECTORY_BATCHES = 20
CONFIDENCE_LEVEL = 0.95

# Configuration keys
CONF_SOURCE = "source"
CONF_FAMILY = "family"
CONF_FILE = "file"
CONF_N = "n"
CONF_S = "s"
CONF_SORT = "sort"
CONF_POLICY = "policy"
CONF_NAME = "name"
CONF_K = "k"
CONF_ALPHA = "alpha"
CONF_EMPTY_LENGTH = "empty_length"
CONF_SELECTION = "selection"
CONF_LENGTHS = "lengths"
CONF_LAMBDA = "lambda"
CONF_GRIDS = "grids"
CONF_K_RANGE = "k_range"
CONF_SOLVER = "solver"
CONF_THETA_TOLERANCE = "theta_tolerance"
CONF_KRAFT_TOLERANCE = "kraft_tolerance"
CONF_MAX_OUTER_ITERATIONS = "max_outer_iterations"
CONF_MAX_INNER_ITERATIONS = "max_inner_iterations"
CONF_SIMULATION = "simulation"
CONF_CYCLES = "cycles"
CONF_SEED = "seed"
CONF_BLOCK_SIZE = "block_size"
CONF_HORIZON = "horizon"
CONF_TRAJECTORY = "trajectory"
CONF_JOBS = "jobs"
CONF_OUT = "out"
CONF_EMIT_PLOT_DATA = "emit_plot_data"
CONF_TOP = "top"

FAMILY_ZIPF = "zipf"
FAMILY_DYADIC = "dyadic"
FAMILY_UNIFORM = "uniform"
FAMILIES = (FAMILY_ZIPF, FAMILY_DYADIC, FAMILY_UNIFORM)

DEFAULT_OUT = "."
DEFAULT_JOBS = 1

# Output
FLOAT_SIGNIFICANT_DIGITS = 12
CODEBOOK_FILENAME = "codebook.json"
SELECTION_FILENAME = "selection.csv"
SIMULATION_FILENAME = "simulation.json"
EVENTS_FILENAME = "events.csv"

# Exit status
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARTIAL = 3
