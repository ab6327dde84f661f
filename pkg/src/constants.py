"""
Module to keep all the constants commonly used by other modules:
numeric defaults, size limits, dataset vocabularies and tuning grids.

Can be imported from anywhere.
"""

VERSION = "1.0.0"
MODEL_FORMAT_TAG = "TGP1"

# Process exit codes
EXIT_SUCCESS = 0
EXIT_NUMERICAL_FAILURE = 1
EXIT_INPUT_ERROR = 2

# Size limits
RECONSTRUCT_ENTRY_LIMIT = 10**7
ADDITIVE_COMPONENT_LIMIT = 10**6
CHOLESKY_MAX_POINTS = 8000
FULL_RANK_ORACLE_LIMIT = 4096

# Grid lookups accept points this close to an axis point, relative to the axis extent
GRID_MATCH_TOLERANCE = 1e-9

# Cholesky jitter is relative to the mean of the gram diagonal
JITTER_RELATIVE = 1e-9
JITTER_DOUBLINGS = 6

# Model defaults
DEFAULT_PRIOR_W_VAR = 1.0
DEFAULT_NOISE_VAR = 1.0

# Training guards and defaults
DIVERGENCE_FACTOR = 10.0
NON_FINITE_ABORT_FRACTION = 0.5
NON_FINITE_MIN_ITERATIONS = 10
DUAL_AVERAGING_TARGET = 0.65
DUAL_AVERAGING_GAMMA = 0.05
DUAL_AVERAGING_T0 = 10.0
DUAL_AVERAGING_KAPPA = 0.75

# Posterior predictive bands
LOWER_PERCENTILE = 2.5
UPPER_PERCENTILE = 97.5

# Diagnostics
MIN_DRAWS_PER_CHAIN = 10

# Benchmarks
BENCH_MIN_REPEATS = 20

# Collaborative filtering
RATING_MIN = 1.0
RATING_MAX = 5.0
VALIDATION_FRACTION = 0.1
MOVIELENS_SPLITS = ("u1", "u2", "u3", "u4", "u5")
MOVIELENS_USERS = 943
MOVIELENS_ITEMS = 1682
CF_DEFAULT_RANK = 15
CF_DEFAULT_MINIBATCH = 100

# Upper edges of the first four age bins, the fifth bin is [50, inf)
AGE_BIN_EDGES = (18, 25, 35, 50)
GENDERS = ("M", "F")
OCCUPATIONS = (
    "administrator",
    "artist",
    "doctor",
    "educator",
    "engineer",
    "entertainment",
    "executive",
    "healthcare",
    "homemaker",
    "lawyer",
    "librarian",
    "marketing",
    "other",
    "programmer",
    "retired",
    "salesman",
    "scientist",
    "student",
    "technician",
    "writer",
)
# MovieLens ships a "none" occupation on top of the twenty above
OCCUPATION_ALIASES = {"none": "other"}
GENRES = (
    "Action",
    "Adventure",
    "Animation",
    "Children's",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Fantasy",
    "Film-Noir",
    "Horror",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "War",
    "Western",
)
USER_SIDE_LENGTH = len(AGE_BIN_EDGES) + 1 + len(GENDERS) + len(OCCUPATIONS)
ITEM_SIDE_LENGTH = len(GENRES)

# Hyperparameter grids for collaborative filtering
FIXED_W_GRID = {
    "prior_u_std": (0.3, 0.1, 0.03),
    "noise_var": (1.0, 0.1, 0.01, 0.001),
    "step_u": (1e-5, 1e-6, 1e-7),
}
LEARNED_W_GRID = {
    "prior_u_std": (0.3, 0.1),
    "noise_var": (1.0, 0.75),
    "step_u": (1e-5, 1e-6),
    "step_w": (1e-5, 1e-6),
}
SIDE_INFO_GRID = {
    "a": (0.25, 0.5, 0.75),
    "b": (0.15, 0.3, 0.45),
    "c": (0.15, 0.3, 0.45),
}

# CSV dialect
CSV_LINE_TERMINATOR = "\n"
FLOAT_FORMAT = ".17g"

# Heatmaps
PGM_MAXVAL = 255
HEATMAP_CELL_PIXELS = 4
