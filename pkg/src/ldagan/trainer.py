"""
Minibatch training loop: discriminator ascent, per-noise E-steps, weighted generators ascent, Dirichlet parameters ascent.
"""

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from ldagan.config.train_config import TrainConfig
from ldagan.data import Dataset2D, GaussianMixtureSpec, estimate_spec
from ldagan.errors import LdaganException, ResultCode
from ldagan.folders import RunFolders
from ldagan.gan import (
    DiscriminatorNet,
    GeneratorBank,
    GeneratorsPass,
    ancestral_sample_fakes,
    discriminator_loss_and_grads,
    generator_loss_and_grads,
    generators_forward,
    head_init_scheme,
    init_bank,
    init_discriminator,
    marginal_fake_probability,
    sample_noise,
    stratified_sample_fakes
)
from ldagan.inference import DirichletParams, alpha_gradient, alpha_step, e_step_batch, update_gamma
from ldagan.metrics import coverage_report
from ldagan.neural import AdamState, InitScheme, adam_update
from ldagan.persist import append_json_line, load_json_document, save_json_document
from ldagan.special_math import RngStream

# Checkpoint document identification
CHECKPOINT_FORMAT = "ldagan-checkpoint"
CHECKPOINT_VERSION = 1

# Training sub-steps names (for diagnostics)
STEP_DISCRIMINATOR = "discriminator step"
STEP_ESTEP = "E-step"
STEP_GENERATORS = "generators step"
STEP_ALPHA = "alpha step"


# Persisted model keys
class CheckpointModel:
    FORMAT = "format"
    VERSION = "version"
    CONFIG = "config"
    ITERATION = "iteration"
    ALPHA = "alpha"
    BANK = "bank"
    DISC = "disc"
    ADAM = "adam"
    ADAM_DISC = "disc"
    ADAM_HEADS = "heads"
    ADAM_TRUNK = "trunk"
    RNG = "rng"


@dataclass
class TrainState:
    """
    Everything needed to resume training: parameters, optimizers moments, iteration counter and random stream
    """

    config: TrainConfig
    bank: GeneratorBank
    disc: DiscriminatorNet
    alpha: DirichletParams
    adam_disc: AdamState
    adam_heads: List[AdamState]
    adam_trunk: AdamState
    rng: RngStream
    iteration: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            CheckpointModel.FORMAT: CHECKPOINT_FORMAT,
            CheckpointModel.VERSION: CHECKPOINT_VERSION,
            CheckpointModel.CONFIG: self.config.to_dict(),
            CheckpointModel.ITERATION: self.iteration,
            CheckpointModel.ALPHA: self.alpha.to_list(),
            CheckpointModel.BANK: self.bank.to_dict(),
            CheckpointModel.DISC: self.disc.to_dict(),
            CheckpointModel.ADAM: {
                CheckpointModel.ADAM_DISC: self.adam_disc.to_dict(),
                CheckpointModel.ADAM_HEADS: [a.to_dict() for a in self.adam_heads],
                CheckpointModel.ADAM_TRUNK: self.adam_trunk.to_dict(),
            },
            CheckpointModel.RNG: self.rng.state,
        }


@dataclass
class MetricsRecord:
    """
    Training diagnostics for one iteration; coverage fields are only set on evaluation iterations
    """

    iteration: int
    d_loss: float
    g_losses: List[float]
    alpha: List[float]
    estep_sweeps_max: int
    estep_converged: float
    modes_covered: Optional[int] = None
    hq_ratio: Optional[float] = None
    usage_entropy: Optional[float] = None
    marginal_d_fake: Optional[float] = None
    omega: np.ndarray = field(default=None, repr=False, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "iteration": self.iteration,
            "d_loss": self.d_loss,
            "g_losses": self.g_losses,
            "alpha": self.alpha,
            "modes_covered": self.modes_covered,
            "hq_ratio": self.hq_ratio,
            "usage_entropy": self.usage_entropy,
            "estep_sweeps_max": self.estep_sweeps_max,
            "estep_converged": self.estep_converged,
            "marginal_d_fake": self.marginal_d_fake,
        }


def init_state(cfg: TrainConfig) -> TrainState:
    """
    Fresh training state: bank then discriminator are initialized from the seeded training stream
    """
    rng = RngStream(cfg.seed)
    scheme = InitScheme(cfg.init_scheme, cfg.init_sigma)
    head_scheme = head_init_scheme(cfg.noise_dim, cfg.head_init_std, cfg.head_bias_sigma)
    bank = init_bank(cfg.K, cfg.noise_dim, cfg.head_width, cfg.trunk_hidden, scheme, rng, head_scheme)
    disc = init_discriminator(cfg.disc_hidden, scheme, rng)

    def adam(params: Any, lr: float) -> AdamState:
        return AdamState.for_params(params, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)

    return TrainState(
        config=cfg,
        bank=bank,
        disc=disc,
        alpha=DirichletParams(np.full(cfg.K, cfg.alpha_init), cfg.alpha_min),
        adam_disc=adam(disc, cfg.lr_d),
        adam_heads=[adam(h, cfg.lr_g) for h in bank.heads],
        adam_trunk=adam(bank.trunk, cfg.lr_g),
        rng=rng,
    )


def _check_finite(sub_step: str, *objects: Any):
    for o in objects:
        arrays = o.arrays() if hasattr(o, "arrays") else [np.asarray(o)]
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise LdaganException(f"Non-finite value after {sub_step}", ResultCode.ERROR_DIVERGENCE)


class Trainer:
    """
    Training loop driver

    Constructor arguments:
        cfg:
            training configuration
        dataset:
            real samples
        spec:
            mixture used for coverage evaluations (default: estimated from dataset labels, if any)
        folders:
            output folders; when provided, metrics records are appended to the metrics JSONL file, and the checkpoint is saved after training
    """

    def __init__(self, cfg: TrainConfig, dataset: Dataset2D, spec: GaussianMixtureSpec = None, folders: RunFolders = None):
        self.logger = logging.getLogger(type(self).__name__)
        self.cfg = cfg
        self.dataset = dataset
        self.folders = folders
        if dataset.N < 1:
            raise LdaganException("Can't train on an empty dataset", ResultCode.ERROR_PARAM_INVALID)
        self._spec = spec
        self._spec_resolved = spec is not None

    @property
    def spec(self) -> Optional[GaussianMixtureSpec]:
        # Estimated from labels on first evaluation only
        if not self._spec_resolved:
            self._spec_resolved = True
            if self.dataset.labels is not None:
                self._spec = estimate_spec(self.dataset)
            else:
                self.logger.warning("Unlabeled dataset: coverage metrics won't be evaluated")
        return self._spec

    @contextmanager
    def _sub_step(self, name: str, state: TrainState):
        # Any numeric failure inside a sub-step aborts training, with the sub-step name
        try:
            yield
        except LdaganException as e:
            if e.rc not in (ResultCode.ERROR_DIVERGENCE, ResultCode.ERROR_DOMAIN):
                raise
            self.logger.error(f"Divergence at iteration {state.iteration + 1}, {name}: {e}")
            raise LdaganException(f"Training diverged at iteration {state.iteration + 1} ({name}): {e}", ResultCode.ERROR_DIVERGENCE)

    def discriminator_step(self, state: TrainState) -> float:
        """
        Ascends log D(x) + log(1 - D(x')) on one batch of reals and one batch of fakes
        """
        cfg = self.cfg
        with self._sub_step(STEP_DISCRIMINATOR, state):
            if cfg.fake_sampling == "ancestral":
                fakes = ancestral_sample_fakes(state.bank, state.alpha, cfg.K * cfg.per_gen, state.rng)
            else:
                fakes = stratified_sample_fakes(state.bank, cfg.per_gen, state.rng)
            reals = self.dataset.samples[state.rng.integers(self.dataset.N, cfg.real_batch)]
            d_loss, d_grads = discriminator_loss_and_grads(state.disc, reals, fakes)
            _check_finite(STEP_DISCRIMINATOR, d_loss)
            adam_update(state.adam_disc, state.disc, d_grads, ascend=True)
            _check_finite(STEP_DISCRIMINATOR, state.disc)
        return d_loss

    def variational_weights(self, state: TrainState, noise: Any, fwd: GeneratorsPass = None) -> (np.ndarray, np.ndarray, int, float):
        """
        Per-noise E-step (or frozen uniform weights while warming up): returns omega, gamma, max sweeps and converged fraction.
        Likelihoods are read from fwd if provided (must be the pass of the current bank on noise).
        """
        cfg = self.cfg
        with self._sub_step(STEP_ESTEP, state):
            if state.iteration < cfg.warmup_iterations:
                omega = np.full((noise.M, cfg.K), 1.0 / cfg.K)
                return omega, update_gamma(state.alpha, omega), 0, 1.0

            fwd = generators_forward(state.bank, state.disc, noise) if fwd is None else fwd
            res = e_step_batch(fwd.likelihood, state.alpha, cfg.estep_tol, cfg.estep_max_iter)
            not_converged = int(np.sum(~res.converged))
            if not_converged:
                self.logger.warning(f"Iteration {state.iteration + 1}: E-step didn't converge for {not_converged}/{noise.M} noise samples")
            _check_finite(STEP_ESTEP, res.omega, res.gamma)
            return res.omega, res.gamma, int(np.max(res.iterations)), float(np.mean(res.converged))

    def generators_step(self, state: TrainState, noise: Any, omega: np.ndarray, fwd: GeneratorsPass = None) -> np.ndarray:
        """
        Ascends each head, and the shared trunk, on the omega-weighted non-saturating objective
        """
        with self._sub_step(STEP_GENERATORS, state):
            g_losses, g_grads = generator_loss_and_grads(state.bank, state.disc, noise, omega, fwd)
            _check_finite(STEP_GENERATORS, g_losses)
            for head, adam, grads in zip(state.bank.heads, state.adam_heads, g_grads.heads):
                adam_update(adam, head, grads, ascend=True)
            adam_update(state.adam_trunk, state.bank.trunk, g_grads.trunk, ascend=True)
            _check_finite(STEP_GENERATORS, state.bank)
        return g_losses

    def alpha_step(self, state: TrainState, gamma: np.ndarray):
        """
        Gradient ascent on alpha (floor clamped), from the minibatch gamma values
        """
        with self._sub_step(STEP_ALPHA, state):
            state.alpha = alpha_step(state.alpha, alpha_gradient(gamma, state.alpha), self.cfg.lr_alpha)

    def step(self, state: TrainState) -> (TrainState, MetricsRecord):
        """
        One training iteration, in order: discriminator, noise draw, E-step, generators, alpha.
        The record is labeled with the completed iterations count (i.e. the state iteration after the step).
        """
        d_loss = self.discriminator_step(state)
        noise = sample_noise(self.cfg.noise_batch, self.cfg.noise_dim, state.rng)
        # Same generators and discriminator for E-step and generators step
        fwd = generators_forward(state.bank, state.disc, noise)
        omega, gamma, sweeps, converged = self.variational_weights(state, noise, fwd)
        g_losses = self.generators_step(state, noise, omega, fwd)
        self.alpha_step(state, gamma)
        state.iteration += 1

        record = MetricsRecord(
            iteration=state.iteration,
            d_loss=d_loss,
            g_losses=[float(v) for v in g_losses],
            alpha=state.alpha.to_list(),
            estep_sweeps_max=sweeps,
            estep_converged=converged,
            omega=omega,
        )
        self.logger.debug(f"Iteration {record.iteration}: d_loss={d_loss:.6f} g_losses={record.g_losses} sweeps={sweeps} alpha={record.alpha}")
        return state, record

    def evaluate(self, state: TrainState, record: MetricsRecord) -> MetricsRecord:
        """
        Fills coverage fields of the record, from ancestral fakes drawn on a stream derived from (seed, iteration)
        """
        rng = RngStream(self.cfg.seed, state.iteration)
        fakes = ancestral_sample_fakes(state.bank, state.alpha, self.cfg.eval_samples, rng)
        record.marginal_d_fake = float(np.mean(marginal_fake_probability(state.bank, state.disc, state.alpha, fakes.noise)))
        if self.spec is not None:
            report = coverage_report(fakes, self.spec, self.cfg.K, self.cfg.capture_radius_sigmas)
            record.modes_covered = report.modes_covered
            record.hq_ratio = report.hq_ratio
            record.usage_entropy = report.usage_entropy
        self.logger.info(
            f"Iteration {state.iteration}: modes covered={record.modes_covered} hq ratio={record.hq_ratio} "
            + f"usage entropy={record.usage_entropy} d_loss={record.d_loss:.6f} alpha={record.alpha}"
        )
        return record

    def train(self, state: TrainState = None, on_record: Callable[[MetricsRecord], None] = None) -> (TrainState, List[MetricsRecord]):
        """
        Runs iterations until total_iterations is reached; evaluates every eval_interval iterations, and after the last one
        """
        state = init_state(self.cfg) if state is None else state
        if state.iteration > self.cfg.total_iterations:
            raise LdaganException(f"State iteration ({state.iteration}) is beyond total iterations ({self.cfg.total_iterations})", ResultCode.ERROR_PARAM_INVALID)
        self.logger.info(f"Training from iteration {state.iteration} to {self.cfg.total_iterations} (K={self.cfg.K}, seed={self.cfg.seed})")

        records = []
        while state.iteration < self.cfg.total_iterations:
            state, record = self.step(state)
            if state.iteration % self.cfg.eval_interval == 0 or state.iteration == self.cfg.total_iterations:
                records.append(self._publish(self.evaluate(state, record), on_record))

        if self.folders is not None:
            save_checkpoint(state, self.folders.checkpoint)
        self.logger.info(f"Training done at iteration {state.iteration}")
        return state, records

    def _publish(self, record: MetricsRecord, on_record: Callable[[MetricsRecord], None]) -> MetricsRecord:
        if self.folders is not None:
            append_json_line(self.folders.metrics, record.to_dict())
        if on_record is not None:
            on_record(record)
        return record


def train_step(state: TrainState, dataset: Dataset2D, cfg: TrainConfig) -> (TrainState, MetricsRecord):
    """
    One training iteration; coverage mixture isn't estimated since nothing is evaluated
    """
    return Trainer(cfg, dataset).step(state)


def train(cfg: TrainConfig, dataset: Dataset2D, folders: RunFolders = None) -> (TrainState, List[MetricsRecord]):
    return Trainer(cfg, dataset, folders=folders).train()


def save_checkpoint(state: TrainState, path: Path):
    """
    Saves the training state as a canonical JSON document
    """
    save_json_document(path, state.to_dict())


def _validate_checkpoint(path: Path, model: Any):
    if not isinstance(model, dict) or model.get(CheckpointModel.FORMAT) != CHECKPOINT_FORMAT:
        raise LdaganException(f"Not a checkpoint document: {path}", ResultCode.ERROR_MODEL_INVALID)
    version = model.get(CheckpointModel.VERSION)
    if version != CHECKPOINT_VERSION:
        raise LdaganException(f"Unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION}): {path}", ResultCode.ERROR_VERSION)


@contextmanager
def _field(path: Path, name: str):
    # Parsing errors are reported with the faulty field path
    try:
        yield
    except (KeyError, IndexError, TypeError, ValueError, AttributeError, LdaganException) as e:
        raise LdaganException(f"Invalid checkpoint field '{name}' in {path}: {e!r}", ResultCode.ERROR_MODEL_INVALID)


def load_checkpoint(path: Path) -> TrainState:
    """
    Loads a training state saved by save_checkpoint; nothing is returned unless the whole document is valid
    """
    model = load_json_document(path, _validate_checkpoint)
    m = CheckpointModel
    with _field(path, m.CONFIG):
        cfg = TrainConfig(**model[m.CONFIG])
    with _field(path, m.ITERATION):
        iteration = model[m.ITERATION]
        if not isinstance(iteration, int) or iteration < 0:
            raise ValueError(f"invalid iteration: {iteration}")
    with _field(path, m.ALPHA):
        alpha = DirichletParams(np.array(model[m.ALPHA], dtype=np.float64), cfg.alpha_min)
        if alpha.K != cfg.K:
            raise ValueError(f"expecting {cfg.K} values, got {alpha.K}")
    with _field(path, m.BANK):
        bank = GeneratorBank.from_dict(model[m.BANK])
        if bank.K != cfg.K:
            raise ValueError(f"generators count doesn't match config K={cfg.K}")
    with _field(path, m.DISC):
        disc = DiscriminatorNet.from_dict(model[m.DISC])
    with _field(path, f"{m.ADAM}.{m.ADAM_DISC}"):
        adam_disc = AdamState.from_dict(model[m.ADAM][m.ADAM_DISC], disc)
    with _field(path, f"{m.ADAM}.{m.ADAM_HEADS}"):
        heads = model[m.ADAM][m.ADAM_HEADS]
        if len(heads) != bank.K:
            raise ValueError(f"expecting {bank.K} head optimizers, got {len(heads)}")
        adam_heads = [AdamState.from_dict(a, h) for a, h in zip(heads, bank.heads)]
    with _field(path, f"{m.ADAM}.{m.ADAM_TRUNK}"):
        adam_trunk = AdamState.from_dict(model[m.ADAM][m.ADAM_TRUNK], bank.trunk)
    with _field(path, m.RNG):
        rng = RngStream.from_state(model[m.RNG])
    return TrainState(cfg, bank, disc, alpha, adam_disc, adam_heads, adam_trunk, rng, iteration)
