"""Alternating least-squares GAN training with scheduled adversarial weight.

Each step first updates the discriminator on real frames and detached
generator output, then updates the generator on reconstruction plus the
epoch-weighted adversarial term.  Two Adam optimizers are used: one for the
generator and one covering both discriminator towers.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import torch

from .checkpoint import read_container, write_container
from .config import TrainConfig
from .data import DatasetManifest, build_band_mask, iterate_batches
from .discriminator import Discriminator, init_discriminator
from .errors import ConfigError, NumericError
from .generator import Generator, init_generator
from .losses import adv_loss_gen, disc_loss, gen_total, lambda_adv, rec_loss

log = logging.getLogger(__name__)

HISTORY_FIELDS = ("epoch", "step", "loss_g", "loss_d", "loss_rec", "loss_adv", "lambda_adv")


@dataclass(frozen=True)
class StepLosses:
    loss_g: float
    loss_d: float
    loss_rec: float
    loss_adv: float


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss_g: float
    loss_d: float
    loss_rec: float
    loss_adv: float
    lambda_adv: float
    steps: int


@dataclass
class TrainState:
    config: TrainConfig
    generator: Generator
    discriminator: Discriminator
    g_opt: torch.optim.Adam
    d_opt: torch.optim.Adam
    epoch: int = 1  # epoch currently being trained, 1-based
    step: int = 0
    history: list[EpochRecord] = field(default_factory=list)

    @property
    def mask(self) -> torch.Tensor:
        return build_band_mask(192, self.config.inner_size)

    @property
    def local_mask(self) -> torch.Tensor:
        return build_band_mask(192, self.config.inner_size - 2 * self.config.local_margin)


def model_seeds(seed: int) -> tuple[int, int]:
    return 2 * seed, 2 * seed + 1


def init_state(config: TrainConfig, generator: Generator | None = None,
               discriminator: Discriminator | None = None) -> TrainState:
    """Fresh state at epoch 1.  Pass modules to override the variant's wiring."""
    g_seed, d_seed = model_seeds(config.seed)
    if generator is None:
        generator = init_generator(g_seed, residual=config.residual)
    if discriminator is None:
        discriminator = init_discriminator(d_seed, dual=config.dual)
    betas = (config.beta1, config.beta2)
    g_opt = torch.optim.Adam(generator.parameters(), lr=config.learning_rate, betas=betas)
    d_opt = torch.optim.Adam(discriminator.parameters(), lr=config.learning_rate, betas=betas)
    return TrainState(config, generator, discriminator, g_opt, d_opt)


def _finite(value: torch.Tensor, name: str, step: int) -> float:
    v = float(value.detach())
    if not math.isfinite(v):
        raise NumericError(f"non-finite {name} ({v}) at step {step}")
    return v


def discriminator_step(state: TrainState, target: torch.Tensor, fake: torch.Tensor) -> torch.Tensor:
    D = state.discriminator
    state.d_opt.zero_grad(set_to_none=True)
    loss_d = disc_loss(D(target, state.local_mask), D(fake.detach(), state.local_mask))
    _finite(loss_d, "loss_d", state.step)
    loss_d.backward()
    state.d_opt.step()
    return loss_d


def generator_step(state: TrainState, target: torch.Tensor, fake: torch.Tensor):
    D = state.discriminator
    weights = state.config.loss_weights
    state.g_opt.zero_grad(set_to_none=True)
    D.requires_grad_(False)
    try:
        loss_rec = rec_loss(target, fake)
        loss_adv = adv_loss_gen(D(fake, state.local_mask))
        loss_g = gen_total(loss_rec, loss_adv, state.epoch, weights)
        for name, value in (("loss_rec", loss_rec), ("loss_adv", loss_adv), ("loss_g", loss_g)):
            _finite(value, name, state.step)
        loss_g.backward()
    finally:
        D.requires_grad_(True)
    state.g_opt.step()
    return loss_g, loss_rec, loss_adv


def train_step(batch, state: TrainState) -> StepLosses:
    """One discriminator update, then one generator update.  Mutates ``state``."""
    masked, target, _ = batch
    state.generator.train()
    fake = state.generator(masked)
    loss_d = discriminator_step(state, target, fake)
    loss_g, loss_rec, loss_adv = generator_step(state, target, fake)
    state.step += 1
    return StepLosses(loss_g.item(), loss_d.item(), loss_rec.item(), loss_adv.item())


def save_checkpoint(state: TrainState, path) -> None:
    payload = {
        "config": state.config.to_dict(),
        "epoch": state.epoch,
        "step": state.step,
        "generator": state.generator.state_dict(),
        "discriminator": state.discriminator.state_dict(),
        "g_opt": state.g_opt.state_dict(),
        "d_opt": state.d_opt.state_dict(),
        "torch_rng": torch.get_rng_state(),
        "history": [asdict(r) for r in state.history],
    }
    write_container(payload, path)


def load_checkpoint(path, restore_rng: bool = True) -> TrainState:
    payload = read_container(path)
    config = TrainConfig.from_dict(payload["config"])
    state = init_state(config)
    state.generator.load_state_dict(payload["generator"])
    state.discriminator.load_state_dict(payload["discriminator"])
    state.g_opt.load_state_dict(payload["g_opt"])
    state.d_opt.load_state_dict(payload["d_opt"])
    state.epoch = int(payload["epoch"])
    state.step = int(payload["step"])
    state.history = [EpochRecord(**r) for r in payload["history"]]
    if restore_rng:
        torch.set_rng_state(payload["torch_rng"])
    return state


class HistoryWriter:
    """Append-only per-step CSV log."""

    def __init__(self, path, append: bool):
        self.path = Path(path)
        fresh = not append or not self.path.exists()
        self._fh = self.path.open("w" if fresh else "a", newline="")
        self._writer = csv.writer(self._fh)
        if fresh:
            self._writer.writerow(HISTORY_FIELDS)

    def write(self, epoch: int, step: int, losses: StepLosses, lam: float) -> None:
        self._writer.writerow([epoch, step, repr(losses.loss_g), repr(losses.loss_d),
                               repr(losses.loss_rec), repr(losses.loss_adv), repr(lam)])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def checkpoint_path(directory, epoch: int) -> Path:
    return Path(directory) / f"epoch_{epoch:04d}.ckpt"


def run_epoch(state: TrainState, batches: Iterable, on_step: Callable | None = None) -> EpochRecord:
    lam = lambda_adv(state.epoch, state.config.loss_weights)
    sums = [0.0, 0.0, 0.0, 0.0]
    count = 0
    for batch in batches:
        losses = train_step(batch, state)
        sums = [a + b for a, b in zip(sums, (losses.loss_g, losses.loss_d,
                                              losses.loss_rec, losses.loss_adv))]
        count += 1
        if on_step is not None:
            on_step(state, losses, lam)
    record = EpochRecord(state.epoch, *(s / count for s in sums), lam, count)
    state.history.append(record)
    state.epoch += 1
    return record


def fit(config: TrainConfig, resume=None, manifest: DatasetManifest | None = None
        ) -> tuple[TrainState, list[EpochRecord]]:
    """Train until ``config.epochs`` epochs have completed.

    Checkpoints go to ``config.checkpoint_dir`` every ``checkpoint_every``
    epochs and after the last one; the per-step CSV log is
    ``history.csv`` in the same directory.  With ``resume`` the state is
    restored from that checkpoint and training continues where it stopped.
    """
    if manifest is None:
        if config.data_dir is None:
            raise ConfigError("data_dir: no training data directory given")
        manifest = DatasetManifest.scan(config.data_dir, "train")
    if len(manifest) == 0:
        raise ConfigError(f"data_dir: no images found under {manifest.root}")

    if resume is not None:
        state = load_checkpoint(resume)
        # the run length and output location may change across a resume
        state.config.epochs = config.epochs
        state.config.checkpoint_dir = config.checkpoint_dir
        state.config.checkpoint_every = config.checkpoint_every
        config = state.config
    else:
        state = init_state(config)

    out_dir = Path(config.checkpoint_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    writer = HistoryWriter(out_dir / "history.csv", append=resume is not None)
    mask = state.mask

    def on_step(st, losses, lam):
        writer.write(st.epoch, st.step, losses, lam)

    try:
        while state.epoch <= config.epochs:
            batches = iterate_batches(manifest, config.batch_size, config.seed, state.epoch,
                                      mask=mask, workers=config.workers)
            record = run_epoch(state, batches, on_step)
            log.info("epoch %d: L_G=%.4f L_D=%.4f L_rec=%.4f L_adv=%.4f lambda_adv=%g",
                     record.epoch, record.loss_g, record.loss_d, record.loss_rec,
                     record.loss_adv, record.lambda_adv)
            if record.epoch % config.checkpoint_every == 0 or record.epoch == config.epochs:
                save_checkpoint(state, checkpoint_path(out_dir, record.epoch))
                save_checkpoint(state, out_dir / "last.ckpt")
    finally:
        writer.close()
    return state, state.history
