"""
config.py: central configuration for the point-cloud side-tuning project.
All paths, reference model sizes, and experiment defaults live here.
"""

from pathlib import Path

# ---------------------------------------------------------------------------
# Directory layout
# ---------------------------------------------------------------------------

# Project root (same directory as this file)
BASE_DIR = Path(__file__).resolve().parent

# Default root for experiment outputs (metrics, cost reports, parameter files)
OUTPUT_DIR = BASE_DIR / "runs"

# Default root for generated synthetic datasets
DATA_DIR = BASE_DIR / "data"

# ---------------------------------------------------------------------------
# Reference model sizes
# ---------------------------------------------------------------------------

# Typical pretrained point-cloud Transformer (token width, depth, tokens, classes)
REFERENCE_SCALE = {
    "d": 384,
    "L": 12,
    "n": 64,
    "heads": 6,
    "mlp_ratio": 4,
    "group_size": 32,
    "k": 8,
    "num_classes": 15,
    "batch_size": 32,
}

# Small enough to train on one CPU in minutes
DESK_SCALE = {
    "d": 32,
    "L": 4,
    "n": 16,
    "heads": 4,
    "mlp_ratio": 4,
    "group_size": 16,
    "k": 8,
    "num_classes": 4,
    "batch_size": 16,
}

HEAD_HIDDEN = 256          # width of both hidden layers of the prediction head
LEAKY_SLOPE = 0.2          # leaky rectifier slope wherever a nonlinearity is needed
LAYER_NORM_EPS = 1e-5

# ---------------------------------------------------------------------------
# Fine-tuning schedule
# ---------------------------------------------------------------------------

REFERENCE_EPOCHS = 300
LR_MAX = 5e-4
LR_MIN = 1e-6
WEIGHT_DECAY = 0.05
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8
HEAD_DROPOUT = 0.5

# Augmentation support (anisotropic scale, per-axis translation)
AUG_SCALE_RANGE = (0.67, 1.5)
AUG_SHIFT_RANGE = (-0.2, 0.2)

# ---------------------------------------------------------------------------
# Choices
# ---------------------------------------------------------------------------

STRATEGIES = ["full", "head_only", "stag_std", "stag_sl", "stag_custom"]
VARIANTS = ["std", "sl", "unshared", "custom"]
REFINE_FNS = ["efficient_edgeconv", "original_edgeconv", "simple_graph_conv", "max_pool"]
SYNTHETIC_CLASSES = ["sphere", "cube", "cylinder", "torus"]
SWEEP_AXES = ["A", "k", "refine_fn", "variant", "batch_size"]

# Strategy → STAG variant it implies
STRATEGY_VARIANT = {
    "stag_std":    "std",
    "stag_sl":     "sl",
    "stag_custom": "custom",
}

# ---------------------------------------------------------------------------
# Flat experiment configuration (every accepted key and its default)
# ---------------------------------------------------------------------------

EXPERIMENT_DEFAULTS: dict = {
    # backbone
    "d":               DESK_SCALE["d"],
    "L":               DESK_SCALE["L"],
    "n":               DESK_SCALE["n"],
    "heads":           DESK_SCALE["heads"],
    "mlp_ratio":       DESK_SCALE["mlp_ratio"],
    "group_size":      DESK_SCALE["group_size"],
    "num_points":      None,          # resample every cloud to this count; None keeps files as-is
    "backbone_weights": None,         # optional STAGW1 file with frozen backbone weights
    "backbone_seed":   0,             # seed of the random frozen backbone when no weights file is given
    # side network
    "d_prime":         None,          # None → d // 2
    "A":               None,          # None → variant default
    "k":               DESK_SCALE["k"],
    "variant":         None,          # None → implied by strategy
    "refine_fn":       "efficient_edgeconv",
    "sharing":         None,          # only for variant=custom: {"D": [[1, 2]], "G": [[3]], "U": [[3]]}
    # training
    "strategy":        "stag_std",
    "epochs":          100,
    "batch_size":      DESK_SCALE["batch_size"],
    "lr_max":          LR_MAX,
    "lr_min":          LR_MIN,
    "weight_decay":    WEIGHT_DECAY,
    "dropout":         HEAD_DROPOUT,
    "seeds":           [1, 2, 3],
    # data
    "train_manifest":  None,          # None → synthetic data generated under out_dir/data
    "test_manifest":   None,
    "synthetic_classes": list(SYNTHETIC_CLASSES),
    "per_class":       100,
    "test_per_class":  25,
    "points":          256,
    "noise_sigma":     0.01,
    "data_seed":       0,
    # run
    "out_dir":         str(OUTPUT_DIR),
    "deterministic":   True,
    "precision":       "single",
}
