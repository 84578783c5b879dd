"""Command-line entry points: ``scmax`` runs a clustering, ``scmax-blobs``
writes a synthetic dataset."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io
from .kernel import ConfigurationError, SgdConfig, TrainingDivergedError
from .pipeline import RunConfig, run
from .representation import EncoderConfig, PerturbationConfig

logger = logging.getLogger("scmax")

_PERTURBATIONS = {
    "contrastive": "contrastive_full",
    "positive-only": "positive_only",
    "negative-only": "negative_only",
    "random-noise": "random_noise",
}
_SELECT = {"g": "original", "gprime": "perturbed"}


def _widths(text: str) -> tuple[int, ...]:
    if text.strip() in ("", "none"):
        return ()
    try:
        widths = tuple(int(w) for w in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if any(w < 1 for w in widths):
        raise argparse.ArgumentTypeError("widths must be positive")
    return widths


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="scmax",
        description="Parameter-free hierarchical clustering by nearest-neighbor consensus.",
    )
    p.add_argument("--input", required=True, type=Path, help="dataset file")
    p.add_argument("--format", choices=("csv", "binary"), default="csv")
    p.add_argument("--label-column", type=int, default=None,
                   help="column holding ground-truth labels (evaluation only)")
    p.add_argument("--header", choices=("auto", "yes", "no"), default="auto",
                   help="whether the CSV has a header row")
    p.add_argument("--latent-dim", type=int, default=256)
    p.add_argument("--hidden", type=_widths, default=(500, 500, 2000),
                   help="encoder hidden widths, comma-separated (default 500,500,2000)")
    p.add_argument("--ae-epochs", type=int, default=200)
    p.add_argument("--cl-epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--cl-lr", type=float, default=None,
                   help="perturbation learning rate (defaults to --lr)")
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--absolute-step", action="store_true",
                   help="do not scale the perturbation learning rate by std(Z)")
    p.add_argument("--perturb-target", choices=("embedding", "encoder"), default="embedding")
    p.add_argument("--seed", type=int, default=3407)
    p.add_argument("--perturbation", choices=tuple(_PERTURBATIONS), default="contrastive")
    p.add_argument("--select", choices=tuple(_SELECT), default="g")
    p.add_argument("--out-dir", type=Path, default=Path("scmax_out"))
    p.add_argument("--emit-plot", action="store_true", help="also write SVG charts")
    p.add_argument("--passthrough-encoder", action="store_true",
                   help="skip the autoencoder and cluster the raw features")
    p.add_argument("--no-timing", action="store_true",
                   help="leave wall-clock columns empty so outputs are byte-reproducible")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def config_from_args(args) -> RunConfig:
    if args.passthrough_encoder and args.perturb_target == "encoder":
        raise ConfigurationError("--perturb-target encoder needs a trained encoder, "
                                 "not --passthrough-encoder")
    enc = EncoderConfig(
        hidden=args.hidden,
        latent_dim=args.latent_dim,
        epochs=args.ae_epochs,
        sgd=SgdConfig(args.lr, args.batch_size, 1, args.seed, args.optimizer),
        passthrough=args.passthrough_encoder,
    )
    cl_lr = args.lr if args.cl_lr is None else args.cl_lr
    pert = PerturbationConfig(
        mode=_PERTURBATIONS[args.perturbation],
        sgd=SgdConfig(cl_lr, args.batch_size, args.cl_epochs, args.seed, args.optimizer),
        relative_step=not args.absolute_step,
        target=args.perturb_target,
    )
    return RunConfig(enc, pert, _SELECT[args.select], args.seed)


def _settings(args) -> dict:
    return {
        "input": str(args.input),
        "format": args.format,
        "latent_dim": args.latent_dim,
        "hidden": ",".join(map(str, args.hidden)) or "none",
        "ae_epochs": args.ae_epochs,
        "cl_epochs": args.cl_epochs,
        "batch_size": args.batch_size,
        "lr": args.lr,
        "cl_lr": args.lr if args.cl_lr is None else args.cl_lr,
        "optimizer": args.optimizer,
        "relative_step": not args.absolute_step,
        "perturb_target": args.perturb_target,
        "perturbation": args.perturbation,
        "select": args.select,
        "passthrough_encoder": args.passthrough_encoder,
        "seed": args.seed,
    }


def write_outputs(out_dir: Path, result, truth, settings: dict, emit_plot: bool,
                  timing: bool = True) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    io.write_labels(out_dir / "labels.csv", result.labels)
    io.write_nnc_curve(out_dir / "nnc_curve.csv", result.records, timing)
    io.write_ae_loss(out_dir / "ae_loss.csv", result.ae_loss)
    io.write_cl_loss(out_dir / "cl_loss.csv", result.records, result.cl_loss)
    report = io.build_report(result, truth, settings, timing)
    io.write_report(out_dir, report)
    if emit_plot:
        ks = [r.k for r in result.records]
        (out_dir / "nnc_curve.svg").write_text(io.line_chart_svg(
            ks, [r.nnc for r in result.records], "NNC score per hierarchy level",
            "number of clusters K", "NNC", x_tick_labels=[str(k) for k in ks]))
        if result.ae_loss:
            (out_dir / "ae_loss.svg").write_text(io.line_chart_svg(
                range(1, len(result.ae_loss) + 1), result.ae_loss,
                "Autoencoder reconstruction loss", "epoch", "loss"))
        cl = [v for trace in result.cl_loss for v in trace]
        if cl:
            (out_dir / "cl_loss.svg").write_text(io.line_chart_svg(
                range(1, len(cl) + 1), cl, "Contrastive perturbation loss",
                "iteration (epochs, concatenated over levels)", "loss"))
    return report


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        x, truth = io.load_dataset(io.DatasetFile(
            args.input, args.format,
            {"auto": None, "yes": True, "no": False}[args.header],
            args.label_column))
        result = run(x, cfg)
        report = write_outputs(args.out_dir, result, truth, _settings(args),
                               args.emit_plot, timing=not args.no_timing)
    except (ConfigurationError, io.DatasetError, TrainingDivergedError, OSError) as exc:
        print(f"scmax: error: {exc}", file=sys.stderr)
        return 1
    print(f"K*={report['k_star']} (level {report['chosen_level']}, NNC {report['chosen_nnc']})")
    if "metrics" in report:
        print(" ".join(f"{k.upper()}={v:.4f}" for k, v in report["metrics"].items()))
    return 0


def blobs_main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="scmax-blobs",
                                description="Write a labelled Gaussian-blob CSV dataset.")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--separation", type=float, default=8.0)
    p.add_argument("--seed", type=int, default=3407)
    p.add_argument("--format", choices=("csv", "binary"), default="csv")
    args = p.parse_args(argv)
    try:
        x, truth, _ = io.generate_blobs(args.n, args.k, args.dim, args.separation, args.seed)
        if args.format == "csv":
            io.write_csv_dataset(args.out, x, truth)
        else:
            io.write_binary(args.out, x)
    except (ConfigurationError, OSError) as exc:
        print(f"scmax-blobs: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
