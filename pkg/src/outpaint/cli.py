"""Command-line entry point: ``outpaint {train,eval,outpaint,synth}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import torch

from .config import VARIANTS, parse_config
from .data import DatasetManifest, build_band_mask, composite_paste, load_image, make_masked_input, save_image
from .errors import ConfigError, OutpaintError
from .evaluation import evaluate_model, render_report, write_report
from .synthetic import write_synthetic_dataset
from .training import fit, load_checkpoint


@torch.no_grad()
def outpaint_command(image_path, checkpoint, paste: bool, output_path) -> Path:
    image_path, checkpoint, output_path = Path(image_path), Path(checkpoint), Path(output_path)
    if not checkpoint.is_file():
        raise FileNotFoundError(f"checkpoint not found: {checkpoint}")
    if not image_path.is_file():
        raise FileNotFoundError(f"image not found: {image_path}")
    state = load_checkpoint(checkpoint, restore_rng=False)
    gt = load_image(image_path)
    mask = build_band_mask(192, state.config.inner_size)
    state.generator.eval()
    generated = state.generator(make_masked_input(gt, mask))
    save_image(composite_paste(generated, gt, mask, paste), output_path)
    return output_path


def _add_shared(p: argparse.ArgumentParser, checkpoint: bool = True) -> None:
    p.add_argument("--config", type=Path, help="TOML config file")
    p.add_argument("--seed", type=int)
    if checkpoint:
        p.add_argument("--checkpoint", type=Path)
    p.add_argument("--data-dir", type=Path)
    p.add_argument("--variant", choices=list(VARIANTS))
    p.add_argument("--out", type=Path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="outpaint", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train a model; --checkpoint names the output directory")
    _add_shared(train)
    train.add_argument("--epochs", type=int)
    train.add_argument("--batch-size", type=int)
    train.add_argument("--learning-rate", type=float)
    train.add_argument("--checkpoint-every", type=int)
    train.add_argument("--resume", type=Path, help="checkpoint file to continue from")

    ev = sub.add_parser("eval", help="report L1 / MSE / adversarial loss on a validation set")
    _add_shared(ev, checkpoint=False)
    ev.add_argument("--checkpoint", dest="checkpoints", type=Path, action="append", required=True,
                    help="checkpoint file; repeat to compare several models")
    ev.add_argument("--label", action="append", help="row label per checkpoint")
    ev.add_argument("--batch-size", type=int, default=8)

    op = sub.add_parser("outpaint", help="extend the border band of one image")
    _add_shared(op)
    op.add_argument("image", type=Path)
    op.add_argument("--paste", action="store_true", help="keep the input's centre pixels")

    syn = sub.add_parser("synth", help="write a synthetic image set for smoke runs")
    syn.add_argument("directory", type=Path)
    syn.add_argument("--count", type=int, default=32)
    syn.add_argument("--seed", type=int, default=0)
    return parser


def _train(args) -> None:
    overrides = {
        "seed": args.seed,
        "variant": args.variant,
        "data_dir": args.data_dir,
        "checkpoint_dir": args.checkpoint or args.out,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "learning_rate": args.learning_rate,
        "checkpoint_every": args.checkpoint_every,
    }
    config = parse_config(args.config, overrides)
    state, history = fit(config, resume=args.resume)
    last = history[-1]
    print(f"trained {last.epoch} epochs ({state.step} steps); "
          f"final L_rec={last.loss_rec:.4f}; checkpoints in {config.checkpoint_dir}")


def _eval(args) -> None:
    data_dir = args.data_dir
    if data_dir is None and args.config is not None:
        config = parse_config(args.config)
        data_dir = config.val_dir or config.data_dir
    if data_dir is None:
        raise ConfigError("data-dir: no validation directory given")
    manifest = DatasetManifest.scan(data_dir, "val")
    labels = args.label or []
    if labels and len(labels) != len(args.checkpoints):
        raise ConfigError("label: give one --label per --checkpoint")
    reports = []
    for i, ckpt in enumerate(args.checkpoints):
        if not ckpt.is_file():
            raise FileNotFoundError(f"checkpoint not found: {ckpt}")
        reports.append(evaluate_model(ckpt, manifest, labels[i] if labels else None,
                                      batch_size=args.batch_size))
    text = render_report(reports)
    sys.stdout.write(text)
    if args.out is not None:
        write_report(text, args.out)


def _outpaint(args) -> None:
    if args.checkpoint is None:
        raise ConfigError("checkpoint: required for outpaint")
    out = args.out or args.image.with_name(args.image.stem + "_outpainted.png")
    outpaint_command(args.image, args.checkpoint, args.paste, out)
    print(out)


def _synth(args) -> None:
    paths = write_synthetic_dataset(args.directory, args.count, args.seed)
    print(f"wrote {len(paths)} images to {args.directory}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"train": _train, "eval": _eval, "outpaint": _outpaint, "synth": _synth}
    try:
        handlers[args.command](args)
    except (OutpaintError, OSError) as exc:
        print(f"outpaint {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
