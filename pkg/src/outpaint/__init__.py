"""Context-based image outpainting with a residual encoder and dual discriminators."""

from .config import TrainConfig, parse_config
from .data import (DatasetManifest, build_band_mask, composite_paste, iterate_batches, load_image,
                   local_crop, make_masked_input)
from .discriminator import Discriminator, combined_score, discriminator_forward, init_discriminator
from .generator import Generator, ResidualBlock, generator_forward, init_generator
from .losses import LossWeights, adv_loss_gen, disc_loss, gen_total, lambda_adv, rec_loss
from .training import fit, load_checkpoint, save_checkpoint, train_step

__version__ = "0.1.0"
