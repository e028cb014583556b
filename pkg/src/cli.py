"""
Command-line interface of the sparse coding toolkit.

Subcommands:
- synth      Write a synthetic chart corpus (PNGs plus manifest)
- train-sc   Learn a convolutional sparse coding dictionary with LCA
- train-ae   Train the denoising convolutional autoencoder baseline
- encode     Encode one image with a trained model
- analyze    Interpretability metrics of a model over a corpus
- render     Figures: montage, overlay, coeffs, hist, heatmap

Hyperparameters can also come from a ``key = value`` file given with
``--config``. An explicit flag wins over the file, which wins over the
built-in default. Every flag is validated before any computation starts.

Example:
    $ sparse-interp synth --out corpus --count 200
    $ sparse-interp train-sc --manifest corpus/manifest.txt --out runs/sc.lcad
    $ sparse-interp analyze --ckpt runs/sc.lcad --manifest corpus/manifest.txt \\
          --report runs/sc_report.csv
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .analysis import MetricsError, build_report, percent_active  # noqa: E402
from .autoencoder import (  # noqa: E402
    AeInstabilityError,
    AutoencoderModel,
    ae_forward,
    train_autoencoder,
)
from .config import (  # noqa: E402
    DEFAULT_AE_EPOCHS,
    DEFAULT_AE_LEARNING_RATE,
    DEFAULT_BATCH_SIZE,
    DEFAULT_CELL_SIZE,
    DEFAULT_CHANNELS,
    DEFAULT_CORPUS_COUNT,
    DEFAULT_DICT_LEARNING_RATE,
    DEFAULT_EPOCHS,
    DEFAULT_HIST_BINS,
    DEFAULT_IMAGE_SIZE,
    DEFAULT_LAMBDA,
    DEFAULT_MAX_STEPS,
    DEFAULT_NOISE_SIGMA,
    DEFAULT_NUM_ELEMENTS,
    DEFAULT_OVERLAY_ALPHA,
    DEFAULT_PATCH,
    DEFAULT_SEED,
    DEFAULT_STEP_SIZE,
    DEFAULT_STRIDE,
    DEFAULT_TOLERANCE,
    UNIT_NORM_TOLERANCE,
    AeTrainConfig,
    Colormap,
    Geometry,
    LcaConfig,
    ModelKind,
    RenderConfig,
    ThresholdMode,
    TrainConfig,
    coerce_value,
    load_config_overlay,
)
from .core import DimensionMismatchError, Dictionary  # noqa: E402
from .corpus import (  # noqa: E402
    CorpusManifest,
    ManifestEntry,
    build_corpus,
    load_image,
    load_manifest,
    preprocess,
    random_spec,
    synth_graphic,
    write_manifest,
)
from .io import (  # noqa: E402
    DataLoadError,
    export_energy_trace,
    export_metrics_report,
    export_train_stats,
    load_activations,
    load_checkpoint,
    load_report_blocks,
    save_activations,
    save_checkpoint,
    validate_geometry,
    validate_kind,
    validate_manifest,
    validate_unit_norm,
    write_png,
)
from .sparse_coding import (  # noqa: E402
    LcaDivergenceError,
    TrainingDivergenceError,
    encode,
    encode_batch,
    train_dictionary,
)
from .visualization import (  # noqa: E402
    activation_map,
    coeff_chart,
    histogram,
    montage,
    overlay,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")
MANIFEST_NAME = "manifest.txt"

# Errors reported as "error: <message>" with exit code 1
HANDLED_ERRORS = (
    DataLoadError,
    LcaDivergenceError,
    TrainingDivergenceError,
    AeInstabilityError,
    MetricsError,
    DimensionMismatchError,
    ValueError,
    IndexError,
    OSError,
)


class UsageError(ValueError):
    """Invalid combination of flags, detected before any computation."""


def parse_size(text: str) -> Tuple[int, int]:
    """Parse ``HxW`` (e.g. ``64x64``)."""
    parts = str(text).strip().lower().split("x")
    try:
        height, width = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got '{text}'")
    if height <= 0 or width <= 0:
        raise argparse.ArgumentTypeError(f"size must be positive, got '{text}'")
    return height, width


def parse_site(text: str) -> Tuple[int, int]:
    """Parse a map site ``ROW,COL``."""
    try:
        row, col = (int(p) for p in str(text).split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROW,COL, got '{text}'")
    return row, col


def _format_default(value: Any) -> str:
    if isinstance(value, tuple) and len(value) == 2:
        return f"{value[0]}x{value[1]}"
    return str(value)


class _Options:
    """
    Flags of one subcommand that may also be set in the config overlay.

    Every such flag is registered with an argparse default of None, so the
    resolution step can tell an explicit flag from an omitted one.
    """

    def __init__(self, parser: argparse.ArgumentParser):
        self.parser = parser
        self.entries: Dict[str, Tuple[str, Any, Callable[[str], Any]]] = {}

    def add(
        self,
        flag: str,
        default: Any,
        help: str,
        convert: Optional[Callable[[str], Any]] = None,
        dest: Optional[str] = None,
        choices: Optional[Sequence[str]] = None,
        switch: bool = False,
    ) -> None:
        key = flag.lstrip("-").replace("-", "_")
        dest = dest or key
        text = f"{help} (default: {_format_default(default)})"
        if switch:
            self.parser.add_argument(flag, dest=dest, action="store_true", default=None, help=text)
            convert = lambda raw: coerce_value(raw, True)  # noqa: E731
        else:
            convert = convert or type(default)
            self.parser.add_argument(
                flag, dest=dest, type=convert, choices=choices, default=None, help=text
            )
        self.entries[key] = (dest, default, convert)

    def resolve(self, args: argparse.Namespace, overlay: Dict[str, str]) -> None:
        """Fill every omitted flag from the overlay, then from the default."""
        for key, (dest, default, convert) in self.entries.items():
            if getattr(args, dest) is not None:
                continue
            if key in overlay:
                try:
                    value = convert(overlay[key])
                except (ValueError, argparse.ArgumentTypeError) as e:
                    raise UsageError(f"config key '{key}': {e}")
            else:
                value = default
            setattr(args, dest, value)


def _add_lca_options(opts: _Options) -> None:
    opts.add("--lambda", DEFAULT_LAMBDA, "Sparsity threshold lambda", dest="lam", convert=float)
    opts.add("--step-size", DEFAULT_STEP_SIZE, "LCA Euler step eta")
    opts.add("--max-steps", DEFAULT_MAX_STEPS, "LCA step budget per image")
    opts.add("--tolerance", DEFAULT_TOLERANCE, "Stop once mean |du| falls below this")
    opts.add("--nonneg", False, "Nonnegative soft threshold", switch=True)


def _add_geometry_options(opts: _Options) -> None:
    opts.add("--k", DEFAULT_NUM_ELEMENTS, "Number of elements K")
    opts.add("--patch", DEFAULT_PATCH, "Element side in pixels")
    opts.add("--stride", DEFAULT_STRIDE, "Placement stride in pixels")


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with every subcommand."""
    parser = argparse.ArgumentParser(
        prog="sparse-interp",
        description="Convolutional sparse coding vs. a denoising autoencoder baseline",
    )
    parser.add_argument("--config", type=Path, help="key = value file of flag defaults")
    parser.add_argument(
        "--threads", type=int, default=None, help="Worker threads (default: all cores)"
    )
    parser.add_argument(
        "--log-level",
        choices=LOG_LEVELS,
        default="WARNING",
        help="Logging level (default: WARNING)",
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    all_options: List[_Options] = []

    def command(sub, name: str, handler: Callable, help: str) -> Tuple[Any, _Options]:
        p = sub.add_parser(name, help=help, description=help)
        opts = _Options(p)
        p.set_defaults(handler=handler, options=opts)
        all_options.append(opts)
        return p, opts

    p, opts = command(commands, "synth", cmd_synth, "Write a synthetic chart corpus")
    p.add_argument("--out", type=Path, required=True, help="Output directory")
    opts.add("--count", DEFAULT_CORPUS_COUNT, "Number of graphics")
    opts.add("--seed", DEFAULT_SEED, "Corpus seed")
    opts.add("--size", (DEFAULT_IMAGE_SIZE, DEFAULT_IMAGE_SIZE), "Image size HxW", parse_size)

    p, opts = command(commands, "train-sc", cmd_train_sc, "Learn a sparse coding dictionary")
    p.add_argument("--manifest", type=Path, required=True, help="Corpus manifest")
    p.add_argument("--out", type=Path, required=True, help="Checkpoint to write")
    p.add_argument("--stats", type=Path, help="Stats CSV (default: <out>_stats.csv)")
    opts.add("--epochs", DEFAULT_EPOCHS, "Training epochs")
    _add_geometry_options(opts)
    opts.add("--lr", DEFAULT_DICT_LEARNING_RATE, "Dictionary learning rate (0 = frozen)")
    opts.add("--batch-size", DEFAULT_BATCH_SIZE, "Images per dictionary update")
    opts.add("--seed", DEFAULT_SEED, "Seed of initialization and epoch order")
    _add_lca_options(opts)

    p, opts = command(commands, "train-ae", cmd_train_ae, "Train the denoising autoencoder")
    p.add_argument("--manifest", type=Path, required=True, help="Corpus manifest")
    p.add_argument("--out", type=Path, required=True, help="Checkpoint to write")
    p.add_argument("--stats", type=Path, help="Stats CSV (default: <out>_stats.csv)")
    opts.add("--epochs", DEFAULT_AE_EPOCHS, "Training epochs")
    opts.add("--sigma", DEFAULT_NOISE_SIGMA, "Std of the additive Gaussian input noise")
    _add_geometry_options(opts)
    opts.add("--lr", DEFAULT_AE_LEARNING_RATE, "SGD learning rate")
    opts.add("--batch-size", DEFAULT_BATCH_SIZE, "Images per SGD step")
    opts.add("--seed", DEFAULT_SEED, "Seed of initialization, noise and epoch order")
    opts.add("--fixed-noise", False, "Draw each image's noise once for all epochs", switch=True)

    p, opts = command(commands, "encode", cmd_encode, "Encode one image with a trained model")
    p.add_argument("--ckpt", type=Path, required=True, help="Model checkpoint")
    p.add_argument("--image", type=Path, required=True, help="PNG image")
    p.add_argument("--out-acts", type=Path, required=True, help="Activation file to write")
    p.add_argument("--trace", type=Path, help="Energy trace CSV (sparse coding only)")
    p.add_argument(
        "--solver",
        choices=("lca", "forward"),
        help="Expected solver; must match the checkpoint (default: from the checkpoint)",
    )
    opts.add("--size", (DEFAULT_IMAGE_SIZE, DEFAULT_IMAGE_SIZE), "Resize to HxW", parse_size)
    opts.add("--raw", False, "Skip mean subtraction of the image", switch=True)
    opts.add("--seed", DEFAULT_SEED, "Seed of the initial potential jitter")
    _add_lca_options(opts)

    p, opts = command(commands, "analyze", cmd_analyze, "Interpretability metrics of a model")
    p.add_argument("--ckpt", type=Path, required=True, help="Model checkpoint")
    p.add_argument("--manifest", type=Path, required=True, help="Corpus manifest")
    p.add_argument("--report", type=Path, required=True, help="Report CSV to write")
    opts.add("--pooled", False, "Inter-image std over pooled pair values", switch=True)
    opts.add("--seed", DEFAULT_SEED, "Seed of the initial potential jitter")
    _add_lca_options(opts)

    render = commands.add_parser("render", help="Render figures", description="Render figures")
    kinds = render.add_subparsers(dest="figure", metavar="FIGURE", required=True)

    p, opts = command(kinds, "montage", cmd_render_montage, "Grid of dictionary elements")
    p.add_argument("--ckpt", type=Path, required=True, help="Model checkpoint")
    p.add_argument("--out", type=Path, required=True, help="PNG to write")
    opts.add("--cell-size", DEFAULT_CELL_SIZE, "Pixels per element side")
    opts.add("--decoder", False, "Show the autoencoder decoder bank", switch=True)

    p, opts = command(kinds, "overlay", cmd_render_overlay, "Element responses over an image")
    p.add_argument("--image", type=Path, required=True, help="PNG image")
    p.add_argument("--acts", type=Path, required=True, help="Activation file of that image")
    p.add_argument("--element", type=int, required=True, help="Element index k")
    p.add_argument("--out", type=Path, required=True, help="PNG to write")
    opts.add("--size", (DEFAULT_IMAGE_SIZE, DEFAULT_IMAGE_SIZE), "Resize to HxW", parse_size)
    opts.add("--alpha", DEFAULT_OVERLAY_ALPHA, "Heat opacity in [0, 1]")

    p, opts = command(kinds, "coeffs", cmd_render_coeffs, "Coefficients at one site")
    p.add_argument("--acts", type=Path, required=True, help="Activation file")
    p.add_argument("--site", type=parse_site, required=True, help="Map site ROW,COL")
    p.add_argument("--out", type=Path, required=True, help="PNG to write")
    opts.add("--show-zeros", False, "Draw zero coefficients too", switch=True)

    p, opts = command(kinds, "hist", cmd_render_hist, "Histogram of a report column")
    p.add_argument("--report", type=Path, required=True, help="Metrics report CSV")
    p.add_argument("--out", type=Path, required=True, help="PNG to write")
    p.add_argument("--csv", type=Path, help="Bin CSV to write")
    opts.add(
        "--field",
        "percent_active",
        "Report column",
        choices=("percent_active", "usage_frequency", "intra_mean"),
    )
    opts.add("--bins", DEFAULT_HIST_BINS, "Number of bins")

    p, opts = command(kinds, "heatmap", cmd_render_heatmap, "Heatmap of one activation map")
    p.add_argument("--acts", type=Path, required=True, help="Activation file")
    p.add_argument("--element", type=int, required=True, help="Element index k")
    p.add_argument("--out", type=Path, required=True, help="PNG to write")
    opts.add(
        "--colormap",
        Colormap.GRAYSCALE.value,
        "Display mapping",
        choices=[c.value for c in Colormap],
    )
    opts.add("--scale", DEFAULT_CELL_SIZE, "Pixels per site side")

    overlay_keys = sorted({key for opts in all_options for key in opts.entries})
    parser.set_defaults(overlay_keys=overlay_keys)
    return parser


def _lca_config(args: argparse.Namespace) -> LcaConfig:
    return LcaConfig(
        lam=args.lam,
        step_size=args.step_size,
        max_steps=args.max_steps,
        tolerance=args.tolerance,
        threshold_mode=ThresholdMode.NONNEG_SOFT if args.nonneg else ThresholdMode.SIGNED_SOFT,
        seed=args.seed,
    )


def _require_valid(results: Sequence[Tuple[bool, List[str]]]) -> None:
    errors = [err for _, errs in results for err in errs]
    if errors:
        raise UsageError("; ".join(errors))


def _stats_path(args: argparse.Namespace) -> Path:
    return args.stats or args.out.with_name(f"{args.out.stem}_stats.csv")


def _load_training_corpus(args: argparse.Namespace) -> Tuple[Geometry, list]:
    manifest = load_manifest(args.manifest)
    _require_valid([validate_manifest(manifest, args.patch, args.stride)])
    geometry = Geometry(
        image_height=manifest.target_height,
        image_width=manifest.target_width,
        channels=DEFAULT_CHANNELS,
        patch=args.patch,
        stride=args.stride,
        num_elements=args.k,
    )
    return geometry, build_corpus(manifest, threads=args.threads)


def _print_epoch(row) -> None:
    print(row.format_line(), flush=True)


def cmd_synth(args: argparse.Namespace) -> None:
    """Write ``count`` synthetic PNGs and a manifest that references them."""
    if args.count <= 0:
        raise UsageError(f"--count must be positive, got {args.count}")
    height, width = args.size
    args.out.mkdir(parents=True, exist_ok=True)
    entries = []
    for index in range(args.count):
        path = args.out / f"synth_{index:04d}.png"
        write_png(synth_graphic(random_spec(args.seed, index), height, width).data, path)
        entries.append(ManifestEntry(path=path))
    manifest = CorpusManifest(
        entries=tuple(entries),
        target_height=height,
        target_width=width,
        seed=args.seed,
        base_dir=args.out,
    )
    write_manifest(manifest, args.out / MANIFEST_NAME)
    print(f"wrote {args.count} images and {args.out / MANIFEST_NAME}")


def cmd_train_sc(args: argparse.Namespace) -> None:
    """Train a dictionary and write the checkpoint and the stats CSV."""
    cfg = TrainConfig(
        lca=_lca_config(args),
        dict_learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        threads=args.threads,
    )
    geometry, corpus = _load_training_corpus(args)
    dictionary, stats = train_dictionary(corpus, cfg, on_epoch=_print_epoch, geometry=geometry)
    save_checkpoint(dictionary, args.out)
    export_train_stats(stats, _stats_path(args))


def cmd_train_ae(args: argparse.Namespace) -> None:
    """Train the autoencoder and write the checkpoint and the stats CSV."""
    cfg = AeTrainConfig(
        noise_sigma=args.sigma,
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        resample_noise=not args.fixed_noise,
    )
    geometry, corpus = _load_training_corpus(args)
    model, stats = train_autoencoder(corpus, cfg, on_epoch=_print_epoch, geometry=geometry)
    save_checkpoint(model, args.out)
    export_train_stats(stats, _stats_path(args))


def _model_kind(model) -> ModelKind:
    if isinstance(model, AutoencoderModel):
        return ModelKind.AUTOENCODER
    return ModelKind.SPARSE_CODING


def _model_bank(model) -> Dictionary:
    return model.encoder if isinstance(model, AutoencoderModel) else model


def cmd_encode(args: argparse.Namespace) -> None:
    """Encode one image; LCA for dictionaries, the forward pass for autoencoders."""
    cfg = _lca_config(args)
    model = load_checkpoint(args.ckpt)
    kind = _model_kind(model)
    if args.solver is not None:
        expected = ModelKind.SPARSE_CODING if args.solver == "lca" else ModelKind.AUTOENCODER
        _require_valid([validate_kind(kind, [expected])])
    if kind is ModelKind.AUTOENCODER and args.trace is not None:
        raise UsageError("--trace needs a sparse coding checkpoint; the autoencoder has no energy")
    bank = _model_bank(model)
    height, width = args.size
    _require_valid([validate_geometry(height, width, bank.patch, bank.stride)])

    image = preprocess(load_image(args.image, height, width), mean_subtract=not args.raw)
    if kind is ModelKind.SPARSE_CODING:
        state = encode(image, model, cfg)
        acts = state.a
        if args.trace is not None:
            export_energy_trace(state.energy_trace, args.trace)
        print(
            f"steps={state.steps_taken}, converged={state.converged}, "
            f"energy={state.final_energy:.6f}, active={percent_active(acts):.6f}"
        )
    else:
        acts, _ = ae_forward(image, model)
        print(f"active={percent_active(acts):.6f}")
    save_activations(acts, bank.stride, args.out_acts)


def cmd_analyze(args: argparse.Namespace) -> None:
    """Normalize the model weights, encode the corpus and write the metrics report."""
    cfg = _lca_config(args)
    model = load_checkpoint(args.ckpt).normalized()
    kind = _model_kind(model)
    bank = _model_bank(model)
    manifest = load_manifest(args.manifest)
    _require_valid([validate_manifest(manifest, bank.patch, bank.stride)])

    # Zero filters keep norm 0 after normalization; the report needs unit norms
    is_unit, norm_errors = validate_unit_norm(bank.norms(), UNIT_NORM_TOLERANCE)
    if not is_unit:
        logger.warning("Weights not unit norm after normalization: %s", "; ".join(norm_errors))

    corpus = build_corpus(manifest, threads=args.threads)
    if kind is ModelKind.SPARSE_CODING:
        codes = [state.a for state in encode_batch(corpus, model, cfg, threads=args.threads)]
    else:
        codes = [ae_forward(image, model)[0] for image in corpus]

    report = build_report(codes, kind, weights_normalized=is_unit, pooled=args.pooled)
    export_metrics_report(report, args.report)
    for name, value in report.summary():
        print(f"{name}={value:.6g}")


def cmd_render_montage(args: argparse.Namespace) -> None:
    model = load_checkpoint(args.ckpt)
    if isinstance(model, AutoencoderModel):
        bank = model.decoder if args.decoder else model.encoder
    else:
        if args.decoder:
            raise UsageError("--decoder needs an autoencoder checkpoint")
        bank = model
    montage(bank, RenderConfig(cell_size=args.cell_size, output_path=args.out))


def cmd_render_overlay(args: argparse.Namespace) -> None:
    acts, stride = load_activations(args.acts)
    height, width = args.size
    patch = height - (acts.map_height - 1) * stride
    if patch <= 0 or width - (acts.map_width - 1) * stride != patch:
        raise UsageError(
            f"a {acts.map_height}x{acts.map_width} code with stride {stride} "
            f"does not tile a {height}x{width} image"
        )
    image = load_image(args.image, height, width)
    cfg = RenderConfig(overlay_alpha=args.alpha, output_path=args.out)
    overlay(image, acts, args.element, patch, stride, cfg)


def cmd_render_coeffs(args: argparse.Namespace) -> None:
    acts, _ = load_activations(args.acts)
    row, col = args.site
    if not (0 <= row < acts.map_height and 0 <= col < acts.map_width):
        raise IndexError(f"site {row},{col} outside the {acts.map_height}x{acts.map_width} map")
    ax = coeff_chart(
        acts.data[row, col],
        RenderConfig(output_path=args.out),
        omit_zeros=not args.show_zeros,
        title=f"Coefficients at site ({row}, {col})",
    )
    plt.close(ax.figure)


def cmd_render_hist(args: argparse.Namespace) -> None:
    blocks = load_report_blocks(args.report)
    block = "per_element" if args.field == "usage_frequency" else "per_image"
    values = [float(row[args.field]) for row in blocks.get(block, [])]
    result = histogram(
        values,
        bins=args.bins,
        cfg=RenderConfig(output_path=args.out),
        csv_path=args.csv,
        xlabel=args.field.replace("_", " "),
    )
    plt.close(result.ax.figure)


def cmd_render_heatmap(args: argparse.Namespace) -> None:
    acts, _ = load_activations(args.acts)
    cfg = RenderConfig(colormap=args.colormap, output_path=args.out)
    activation_map(acts, args.element, cfg, scale=args.scale)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line; returns the process exit code.

    0 when every requested artifact was written, 1 on a reported error, 2 on a
    usage error from argparse.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)

    try:
        if args.threads is not None and args.threads <= 0:
            raise UsageError(f"--threads must be positive, got {args.threads}")
        overlay_values = {}
        if args.config is not None:
            overlay_values = load_config_overlay(args.config, args.overlay_keys)
        args.options.resolve(args, overlay_values)
        args.handler(args)
    except HANDLED_ERRORS as e:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
