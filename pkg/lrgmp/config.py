# lrgmp - Global configuration and constants
# AGPL-3.0-or-later

# --- Equivalence oracle ---
# GDP side vs GDP-translated-to-GMP side, max |difference| over compared entries
EQUIV_TOL          = 1e-9
EQUIV_TRIALS       = 200
EQUIV_SIZE_RANGE   = (2, 30)     # inclusive node-count range for random graphs
EQUIV_DV_RANGE     = (1, 6)
EQUIV_DE_RANGE     = (0, 4)

# --- Finite-difference gradient check ---
GRADCHECK_STEP      = 1e-5       # central difference step h
GRADCHECK_TOL       = 1e-4       # max relative error
GRADCHECK_DENOM_MIN = 1e-8       # |a - n| / max(|a|, |n|, 1e-8)
GRADCHECK_ABS_FLOOR = 1e-6       # below this, central differences cannot resolve the entry
GRADCHECK_CONFIGS   = 24         # 3 layer kinds x 4 placements x 2 low-rank kinds

# --- Linear algebra ---
RANK_REL_TOL = 1e-8

# --- Prompt defaults ---
DEFAULT_TAU      = 1.0
DEFAULT_RANK     = 2
DEFAULT_K        = 3             # basis vectors / prompt nodes for GDP baselines
PROMPT_INIT_STD  = 0.01          # V, W, Z, F, head weights
RANK_SWEEP       = (2, 5, 10)

# --- Optimization ---
DEFAULT_LR       = 1e-3
DEFAULT_EPOCHS   = 300
ADAM_BETA1       = 0.9
ADAM_BETA2       = 0.999
ADAM_EPS         = 1e-8
SGD_MOMENTUM     = 0.9

# --- Backbone ---
LAYER_KINDS     = ("gcn", "gin", "mpnn")
PLACEMENTS      = ("first", "middle", "last", "all")
GIN_EPS         = 0.0

# --- Attention messages ---
ATTENTION_SLOPE = 0.2

# --- Synthetic datasets ---
SBM_DV          = 4
SBM_SHIFT       = 1.0
SBM_NOISE       = 1.0

# --- Separable fixture ---
FIXTURE_BLOCKS  = (20, 20)
FIXTURE_P_IN    = 0.3
FIXTURE_P_OUT   = 0.02
FIXTURE_SHIFT   = 5.0
FIXTURE_NOISE   = 0.1
CERTIFY_SCALES  = (0.1, 0.3, 1.0, 3.0)
CERTIFY_MIN_ACC = 0.95

# --- Output formats ---
SCHEMA_VERSION  = 1
CSV_HEADER_TAG  = "# lrgmp-results v1"
RESULT_COLUMNS  = (
    "method", "dataset", "seed", "r", "placement", "shots", "noise",
    "val_acc", "test_acc", "epochs_to_best", "wall_time_ms",
)
SWEEP_GROUP_COLUMNS = ("method", "dataset", "r", "placement", "shots", "noise")

# --- Exit codes ---
EXIT_OK    = 0
EXIT_FAIL  = 1    # verification failure
EXIT_USAGE = 2    # usage / configuration error

# --- Compute resource limits ---
RAM_MAX_FRACTION  = 0.40    # max 40% of system RAM
CPU_RESERVE_CORES = 1       # always leave 1 core free

# --- Logging ---
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
