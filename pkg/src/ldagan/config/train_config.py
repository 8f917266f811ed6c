from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List

from ldagan.config.cfg_item import (
    Config,
    ConfigHolder,
    choice_validator,
    validate_int,
    validate_non_neg_float,
    validate_non_neg_int,
    validate_pos_float,
    validate_pos_int,
    validate_pos_int_list,
    validate_unit_float
)
from ldagan.config.cfg_manager import ConfigManager
from ldagan.errors import LdaganException, ResultCode

# Fake batch sampling modes for the discriminator step
FAKE_SAMPLING_MODES = ["ancestral", "stratified"]

# Parameters initialization schemes
INIT_SCHEMES = ["xavier", "gaussian", "zero"]


# Training configuration schema: one item per TrainConfig field
class TrainConfigItems(ConfigHolder):
    K = Config(name="K", description="Number of generators (modes)", validator=validate_pos_int, required=True)
    NOISE_DIM = Config(name="noise_dim", description="Noise dimension (input layer units)", default_value=256, validator=validate_pos_int)
    HEAD_WIDTH = Config(name="head_width", description="Output width of the untied first generator layer", default_value=128, validator=validate_pos_int)
    TRUNK_HIDDEN = Config(
        name="trunk_hidden", description="Widths of extra shared ReLU layers after the untied layer", default_value=[], validator=validate_pos_int_list
    )
    DISC_HIDDEN = Config(name="disc_hidden", description="Discriminator hidden ReLU layer widths", default_value=[128, 128], validator=validate_pos_int_list)
    INIT_SCHEME = Config(name="init_scheme", description="Weights initialization scheme (discriminator, generators trunk)", default_value="xavier", validator=choice_validator(INIT_SCHEMES))
    INIT_SIGMA = Config(name="init_sigma", description="Standard deviation for gaussian initialization", default_value=0.02, validator=validate_pos_float)
    HEAD_INIT_STD = Config(
        name="head_init_std", description="Standard deviation of the untied layer pre-activations at init, on uniform noise", default_value=0.25, validator=validate_pos_float
    )
    HEAD_BIAS_SIGMA = Config(
        name="head_bias_sigma", description="Standard deviation of the untied layer biases at init", default_value=0.5, validator=validate_non_neg_float
    )
    LR_D = Config(name="lr_d", description="Discriminator learning rate", default_value=1e-4, validator=validate_pos_float)
    LR_G = Config(name="lr_g", description="Generators learning rate", default_value=1e-4, validator=validate_pos_float)
    LR_ALPHA = Config(name="lr_alpha", description="Dirichlet parameters learning rate", default_value=1e-3, validator=validate_pos_float)
    ADAM_BETA1 = Config(name="adam_beta1", description="Adam first moment decay", default_value=0.5, validator=validate_unit_float)
    ADAM_BETA2 = Config(name="adam_beta2", description="Adam second moment decay", default_value=0.999, validator=validate_unit_float)
    ADAM_EPS = Config(name="adam_eps", description="Adam denominator offset", default_value=1e-8, validator=validate_pos_float)
    REAL_BATCH = Config(name="real_batch", description="Real samples per discriminator step", default_value=64, validator=validate_pos_int)
    PER_GEN = Config(name="per_gen", description="Fake samples per generator (stratified sampling)", default_value=12, validator=validate_pos_int)
    NOISE_BATCH = Config(name="noise_batch", description="Noise rows per generator step", default_value=64, validator=validate_pos_int)
    FAKE_SAMPLING = Config(
        name="fake_sampling",
        description="Fake batch sampling for the discriminator step",
        default_value="stratified",
        validator=choice_validator(FAKE_SAMPLING_MODES),
    )
    ESTEP_TOL = Config(name="estep_tol", description="E-step convergence tolerance (max omega change)", default_value=1e-10, validator=validate_pos_float)
    ESTEP_MAX_ITER = Config(name="estep_max_iter", description="E-step maximum sweeps", default_value=1000, validator=validate_pos_int)
    WARMUP_ITERATIONS = Config(
        name="warmup_iterations", description="Iterations with frozen uniform variational parameters", default_value=0, validator=validate_non_neg_int
    )
    ALPHA_INIT = Config(name="alpha_init", description="Initial value of all Dirichlet parameters", default_value=2.0, validator=validate_pos_float)
    ALPHA_MIN = Config(name="alpha_min", description="Floor for Dirichlet parameters", default_value=1e-3, validator=validate_pos_float)
    TOTAL_ITERATIONS = Config(name="total_iterations", description="Training iterations", default_value=10000, validator=validate_non_neg_int)
    EVAL_INTERVAL = Config(name="eval_interval", description="Iterations between two metrics records", default_value=500, validator=validate_pos_int)
    EVAL_SAMPLES = Config(name="eval_samples", description="Fake samples drawn for each metrics record", default_value=512, validator=validate_pos_int)
    CAPTURE_RADIUS_SIGMAS = Config(
        name="capture_radius_sigmas", description="Mode capture radius, in standard deviations", default_value=3.0, validator=validate_pos_float
    )
    SEED = Config(name="seed", description="Random seed", default_value=0, validator=validate_int)


@dataclass(frozen=True)
class TrainConfig:
    """
    Full hyperparameters record for the training loop (see TrainConfigItems for fields documentation)
    """

    K: int  # NOQA: N815
    noise_dim: int = 256
    head_width: int = 128
    trunk_hidden: List[int] = field(default_factory=list)
    disc_hidden: List[int] = field(default_factory=lambda: [128, 128])
    init_scheme: str = "xavier"
    init_sigma: float = 0.02
    head_init_std: float = 0.25
    head_bias_sigma: float = 0.5
    lr_d: float = 1e-4
    lr_g: float = 1e-4
    lr_alpha: float = 1e-3
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    real_batch: int = 64
    per_gen: int = 12
    noise_batch: int = 64
    fake_sampling: str = "stratified"
    estep_tol: float = 1e-10
    estep_max_iter: int = 1000
    warmup_iterations: int = 0
    alpha_init: float = 2.0
    alpha_min: float = 1e-3
    total_iterations: int = 10000
    eval_interval: int = 500
    eval_samples: int = 512
    capture_radius_sigmas: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.alpha_init < self.alpha_min:
            raise LdaganException(f"Config item alpha_init ({self.alpha_init}) must be >= alpha_min ({self.alpha_min})", ResultCode.ERROR_PARAM_INVALID)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_holder(cls) -> "TrainConfig":
        # Build from currently loaded items values
        return cls(**{f.name: getattr(TrainConfigItems, f.name.upper()).value for f in fields(cls)})


def load_train_config(config_file: Path = None, overrides: Dict[str, Any] = None) -> TrainConfig:
    """
    Resolves the training configuration from environment, config document and overrides, and validates it
    """
    ConfigManager([TrainConfigItems], config_file=config_file, cli_config=overrides)
    return TrainConfig.from_holder()
