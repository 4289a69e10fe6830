"""Project constants."""

DEFAULT_OUTPUT_DIR = "results"
DEFAULT_JOBS = 1

# Protocol defaults (initial labeled set, per-iteration budget)
DEFAULT_INITIAL_LABELED = 40
DEFAULT_PER_ITERATION_BUDGET = 20
DEFAULT_M_FACTOR = 10

# Fine-tuning defaults
DEFAULT_HIDDEN_SIZES = (32,)
DEFAULT_EPOCHS = 100
DEFAULT_BATCH_SIZE = 10
DEFAULT_LEARNING_RATE = 0.025
DEFAULT_LR_DECAY_FACTOR = 0.1
DEFAULT_LR_DECAY_EPOCH = 80
AUTO_AUGMENT_NOISE_RATIO = 0.05

# Numerical guards
LOG_CLAMP_EPS = 1e-12
NORM_EPS = 1e-12

PSEUDO_LABEL_THRESHOLD = 0.5

# Clustering defaults
DEFAULT_CLUSTER_MAX_ITER = 100
DEFAULT_CLUSTER_TOL = 1e-6
DEFAULT_CLUSTER_N_INIT = 10

# BYOL defaults
DEFAULT_TAU = 0.99

CSV_FLOAT_FORMAT = ".9g"
CHECKPOINT_FORMAT_VERSION = 1
ROLE_CLASSIFIER = "classifier"
ROLE_PRETRAINED_ENCODER = "pretrained-encoder"
