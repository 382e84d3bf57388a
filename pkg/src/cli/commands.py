import argparse
import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.config.config_file import (
    CONFIG_KEYS,
    build_sensor_config,
    build_train_config,
    format_train_config,
    read_config_file,
)
from src.config.settings import (
    COO_BITS_PER_EVENT,
    DATA_DIR,
    FORMAT_VERSION,
    MAGIC_EVENT_IMAGE,
    MAGIC_EVENT_STREAM,
    MAGIC_LIGHTFIELD,
    MAGIC_NETWORK,
    MAGIC_PATTERNS,
    SYNTH_MAX_DISPARITY,
    VIEW_GRID,
)
from src.models.events import EventImage
from src.models.lightfield import AperturePattern, LightField
from src.models.schemas import SensorConfig, TrainConfig
from src.services import storage_service as storage
from src.services.algebra_service import recover_intensities
from src.services.event_service import coded_sequence, expand_to_stream, log_intensity, simulate_sequence
from src.services.lightfield_service import (
    disparity_histogram,
    epipolar_slice,
    extract_patches,
    synth_lightfield,
)
from src.services.metrics_service import (
    data_rate,
    event_stats,
    intensity_data_rate,
    measurement_time,
    psnr_per_view,
)
from src.services.training_service import binarize_patterns, evaluate, patterns_from_logits, train
from src.utils.validators import FormatError, UsageError

logger = logging.getLogger(__name__)

RULE = "=" * 70
NETWORK_FILE = "recnet.nn1"
PATTERNS_FILE = "patterns.ap1"
BINARY_PATTERNS_FILE = "patterns_binary.ap1"
CONFIG_FILE = "config.txt"
HISTORY_FILE = "history.csv"


def _banner(title: str) -> None:
    print("\n" + RULE)
    print(title)
    print(RULE)


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {key: getattr(args, key, None) for key in CONFIG_KEYS}


def _file_values(args: argparse.Namespace) -> Dict[str, str]:
    path = getattr(args, "config", None)
    return read_config_file(path) if path else {}


def _sensor_from_args(args: argparse.Namespace, base: Optional[Dict[str, str]] = None) -> SensorConfig:
    values = dict(base or {})
    values.update(_file_values(args))
    try:
        return build_sensor_config(values, _overrides(args))
    except ValueError as e:
        raise UsageError(f"invalid sensor configuration: {e}") from e


def _train_config_from_args(args: argparse.Namespace, base: Optional[Dict[str, str]] = None) -> TrainConfig:
    values = dict(base or {})
    values.update(_file_values(args))
    try:
        return build_train_config(values, _overrides(args))
    except ValueError as e:
        raise UsageError(f"invalid training configuration: {e}") from e


def _event_filename(transition: int) -> str:
    return f"events_{transition:02d}.ei1"


def _print_event_stats(images: Sequence[EventImage], n_patterns: int) -> None:
    stats = event_stats(images)
    for img, mean in zip(images, stats.per_transition):
        print(f"  transition {img.transition[0]}->{img.transition[1]}: {mean:.4f} events/pixel")
    print(f"  total: {stats.total:.4f} events/pixel over {stats.pixels} pixels")
    if stats.total > 0:
        rate = data_rate(stats.total)
        print(f"  data rate: {rate.bits_per_sensor_pixel:.2f} bits/pixel "
              f"({rate.bits_per_lightfield_pixel:.3f} per light-field pixel), "
              f"intensity capture would need {intensity_data_rate(n_patterns):.0f}")
        print(f"  readout lower bound: {measurement_time(stats.total) * 1e3:.2f} ms")


def cmd_simulate(args: argparse.Namespace) -> int:
    lf = storage.load_lightfield(args.lightfield)
    patterns = storage.read_patterns(args.patterns)
    if len(patterns) < 2:
        raise UsageError(f"{args.patterns} holds {len(patterns)} pattern(s), at least 2 are required")
    if len(patterns) - 1 > storage.MAX_U8:
        raise UsageError(f"{len(patterns)} patterns give {len(patterns) - 1} transitions; "
                         f"event image files index at most {storage.MAX_U8}")
    if max(lf.width, lf.height) > storage.MAX_U16:
        raise UsageError(f"light field {lf.width}x{lf.height} exceeds the {storage.MAX_U16}-pixel event file limit")
    sensor = _sensor_from_args(args)

    images = simulate_sequence(lf, patterns, sensor, mode=args.event_model, ref_init=args.ref_init)
    out = Path(args.out)
    # encode everything before the first write
    blobs = [(out / _event_filename(img.transition[0]), storage.encode_event_image(img)) for img in images]
    stream = None
    if args.stream:
        stream = expand_to_stream(images, [args.window] * len(images))
        blobs.append((out / "events.ev1", storage.encode_stream(stream)))
    for path, blob in blobs:
        storage.atomic_write(path, blob)
    if stream is not None:
        logger.info("wrote %d stream records", len(stream))

    _banner(f"SIMULATED {len(images)} EVENT IMAGES ({args.event_model}, ref={args.ref_init})")
    _print_event_stats(images, len(patterns))
    print(f"  output: {out}")
    return 0


def _read_event_dir(directory: Path) -> List[EventImage]:
    files = sorted(directory.glob("events_*.ei1"))
    if not files:
        raise FileNotFoundError(f"no event images in {directory}")
    images = [storage.read_event_image(f) for f in files]
    for k, img in enumerate(images, start=1):
        if img.transition[0] != k:
            raise FormatError(f"expected transition {k} in {files[k - 1].name}, found {img.transition[0]}")
    return images


def cmd_recover(args: argparse.Namespace) -> int:
    if args.black_index is None:
        raise UsageError("missing black index (--black-index)")
    if args.truth and not args.patterns:
        raise UsageError("--truth needs --patterns to form the reference coded images")
    sensor = _sensor_from_args(args)
    images = _read_event_dir(Path(args.events))

    result = recover_intensities(images, args.black_index, sensor)
    out = Path(args.out)
    for n, img in enumerate(result.images, start=1):
        storage.write_png(out / f"recovered_{n:02d}.png", img.values, bit_depth=16)
        storage.write_raw_float(out / f"recovered_{n:02d}.f32", img.values)

    _banner(f"RECOVERED {len(result.images)} CODED IMAGES (black pattern {result.black_index})")
    print(f"  clamped pixels: {result.clamped_pixels} {result.clamped_per_image}")
    print(f"  saturated pixels: {result.saturated_pixels}")

    if args.truth:
        lf = storage.load_lightfield(args.truth)
        truth = coded_sequence(lf, storage.read_patterns(args.patterns))
        if len(truth) != len(result.images):
            raise UsageError(f"{len(truth)} patterns but {len(result.images)} recovered images")
        print("  log-domain residual |ln(I+eps) - ln(I_true+eps)|:")
        for n, (rec, ref) in enumerate(zip(result.images, truth), start=1):
            residual = np.abs(log_intensity(rec.values, sensor.epsilon) - log_intensity(ref.values, sensor.epsilon))
            print(f"    image {n}: max {residual.max():.4f}, mean {residual.mean():.4f} (tau {sensor.tau})")
    print(f"  output: {out}")
    return 0


def _synthetic_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _parse_disparities(text: Optional[str]) -> Optional[List[int]]:
    if not text:
        return None
    try:
        return [int(d) for d in text.split(",")]
    except ValueError as e:
        raise UsageError(f"disparities must be comma-separated integers, got {text!r}") from e


def _training_samples(args: argparse.Namespace, seed: int) -> List[LightField]:
    if args.synthetic:
        samples = [
            synth_lightfield(_synthetic_seed(seed, i), args.size, args.size, args.layers)
            for i in range(args.synthetic)
        ]
    else:
        samples = storage.load_dataset(args.data or DATA_DIR)
    if args.patch_size:
        stride = args.stride or args.patch_size
        samples = [p for lf in samples for p in extract_patches(lf, args.patch_size, stride)]
    return samples


def _history_csv(history) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epoch", "loss", "val_loss", "s", "events_per_pixel", "min_transmittance", "darkest_pattern"])
    for r in history.records:
        writer.writerow([
            r.epoch, repr(r.loss), "" if r.val_loss is None else repr(r.val_loss), repr(r.s),
            repr(r.events_per_pixel), repr(r.min_transmittance), r.darkest_pattern,
        ])
    return buf.getvalue()


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _train_config_from_args(args)
    dataset = _training_samples(args, cfg.seed)
    logits, net, history = train(dataset, cfg, verbose=not args.quiet)

    s_final = history.records[-1].s if len(history) else cfg.s_init
    patterns = patterns_from_logits(logits, s_final)
    out = Path(args.out)
    storage.write_network(out / NETWORK_FILE, net)
    storage.write_patterns(out / PATTERNS_FILE, patterns)
    storage.write_patterns(out / BINARY_PATTERNS_FILE, binarize_patterns(patterns))
    storage.atomic_write(out / CONFIG_FILE, format_train_config(cfg).encode())
    storage.atomic_write(out / HISTORY_FILE, _history_csv(history).encode())

    _banner(f"TRAINED mode={cfg.mode} N={cfg.n_patterns} on {len(dataset)} samples")
    if len(history):
        last = history.records[-1]
        print(f"  epochs: {len(history)}, final loss {last.loss:.6f}, s {last.s:.4g}")
        print(f"  events/pixel: {last.events_per_pixel:.4f}, darkest pattern {last.darkest_pattern} "
              f"(mean transmittance {last.min_transmittance:.4f})")
    print(f"  checkpoint: {out}")
    return 0


def _format_pattern(pattern: AperturePattern) -> str:
    return "\n".join("    " + " ".join(f"{v:.2f}" for v in row) for row in pattern.values)


def _report_text(report, per_view: np.ndarray) -> str:
    lines = [
        f"samples: {report.samples}",
        f"event model: {report.event_model}",
        f"mse: {report.mse:.6g}",
        f"psnr: {report.psnr:.3f} dB",
        f"ssim: {report.ssim:.4f}",
        f"events/pixel: {report.events.total:.4f}",
    ]
    if report.constant_mse is not None:
        lines.append(f"constant predictor mse: {report.constant_mse:.6g}")
    lines.append("per-view psnr of sample 0 [v, u]:")
    lines += ["  " + " ".join(f"{p:6.2f}" for p in row) for row in per_view]
    return "\n".join(lines) + "\n"


def cmd_eval(args: argparse.Namespace) -> int:
    ckpt = Path(args.checkpoint)
    net = storage.read_network(ckpt / NETWORK_FILE)
    patterns = storage.read_patterns(ckpt / (BINARY_PATTERNS_FILE if args.binary else PATTERNS_FILE))
    if net.in_channels != len(patterns) - 1:
        raise ValueError(
            f"incompatible checkpoint: network expects N={net.in_channels + 1}, pattern file has N={len(patterns)}"
        )
    stored = read_config_file(ckpt / CONFIG_FILE) if (ckpt / CONFIG_FILE).is_file() else {}
    cfg = _train_config_from_args(args, stored)
    if cfg.n_patterns != len(patterns):
        raise ValueError(f"incompatible checkpoint: config says N={cfg.n_patterns}, pattern file has {len(patterns)}")

    event_model = args.event_model or ("ra" if cfg.reference_aware else "baseline")
    ref_init = "first" if event_model == "ra" and not cfg.black_first else "black"
    dataset = storage.load_dataset(args.data or DATA_DIR)
    baseline = storage.load_dataset(args.train_data) if args.train_data else None
    report, outputs = evaluate(dataset, patterns, net, cfg.sensor, event_model, ref_init, baseline)

    _banner(f"EVALUATED {report.samples} SAMPLES ({event_model}, trained as {cfg.mode})")
    for n, pattern in enumerate(patterns, start=1):
        print(f"  pattern {n}{' (black)' if pattern.is_black else ''}:")
        print(_format_pattern(pattern))
    per_view = psnr_per_view(dataset[0], outputs[0])
    text = _report_text(report, per_view)
    print("  " + text.replace("\n", "\n  ").rstrip())

    out = Path(args.out)
    storage.atomic_write(out / "report.txt", text.encode())
    storage.atomic_write(out / "report.json", (report.model_dump_json(indent=2) + "\n").encode())
    storage.write_lightfield_dir(out / "views", outputs[0])
    for name, lf in (("", outputs[0]), ("_truth", dataset[0])):
        storage.write_png(out / f"epi_horizontal{name}.png", epipolar_slice(lf, "horizontal", lf.height // 2))
        storage.write_png(out / f"epi_vertical{name}.png", epipolar_slice(lf, "vertical", lf.width // 2))
    print(f"  output: {out}")
    return 0


def cmd_make_synthetic(args: argparse.Namespace) -> int:
    if args.count < 1:
        raise UsageError("count must be >= 1")
    disparities = _parse_disparities(args.disparities)
    out = Path(args.out)

    totals: Dict[int, int] = {}
    for i in range(args.count):
        seed = _synthetic_seed(args.seed, i)
        try:
            lf = synth_lightfield(seed, args.width, args.height, args.layers, disparities)
        except ValueError as e:
            raise UsageError(str(e)) from e
        sample = out / storage.sample_dirname(i)
        storage.write_lightfield(sample / "lightfield.lf4", lf)
        if not args.no_png:
            storage.write_lightfield_dir(sample, lf)
        scene = {"seed": seed, "layers": args.layers, "disparities": disparities}
        storage.atomic_write(sample / "scene.json", (json.dumps(scene, sort_keys=True) + "\n").encode())
        if args.width > 2 * SYNTH_MAX_DISPARITY:
            for shift, count in disparity_histogram(lf).items():
                totals[shift] = totals.get(shift, 0) + count

    _banner(f"WROTE {args.count} SYNTHETIC LIGHT FIELDS ({args.width}x{args.height}, {args.layers} layers)")
    if totals:
        print("  scanline disparity histogram:")
        for shift, count in sorted(totals.items()):
            print(f"    {shift:+d}: {count}")
    print(f"  output: {out}")
    return 0


MAGICS = {
    MAGIC_LIGHTFIELD: "light field (CELF-LF4)",
    MAGIC_EVENT_STREAM: "event stream (CELF-EV1)",
    MAGIC_EVENT_IMAGE: "event image (CELF-EI1)",
    MAGIC_NETWORK: "reconstruction network (CELF-NN1)",
    MAGIC_PATTERNS: "aperture patterns (CELF-AP1)",
}


def _describe_file(path: Path) -> List[str]:
    head = path.read_bytes()[:8] if path.is_file() else b""
    if head == MAGIC_LIGHTFIELD:
        lf = storage.read_lightfield(path)
        return [f"light field {lf.width}x{lf.height}, {VIEW_GRID}x{VIEW_GRID} views"]
    if head == MAGIC_EVENT_STREAM:
        stream = storage.read_stream(path)
        return [f"event stream {stream.width}x{stream.height}, {len(stream)} records"]
    if head == MAGIC_EVENT_IMAGE:
        img = storage.read_event_image(path)
        return [f"event image {img.width}x{img.height}, transition {img.transition}, "
                f"{int(np.abs(img.values).sum())} events"]
    if head == MAGIC_NETWORK:
        net = storage.read_network(path)
        return [f"network with widths {net.widths}"]
    if head == MAGIC_PATTERNS:
        patterns = storage.read_patterns(path)
        return [f"{len(patterns)} patterns, binary={all(p.binary for p in patterns)}, "
                f"black={[n for n, p in enumerate(patterns, start=1) if p.is_black]}"]
    if not path.exists():
        raise FileNotFoundError(f"{path} not found")
    raise FormatError(f"{path} has no known magic")


def cmd_info(args: argparse.Namespace) -> int:
    _banner(f"CELF TOOLKIT, FORMAT VERSION {FORMAT_VERSION}")
    for magic, name in MAGICS.items():
        print(f"  {magic.decode():<10} {name}")
    print(f"  events are stored with {COO_BITS_PER_EVENT} bits each in the COO data-rate estimate")
    print(f"  data directory: {DATA_DIR}")
    print("  default configuration:")
    for line in format_train_config(TrainConfig()).splitlines():
        print(f"    {line}")
    for name in args.files:
        for line in _describe_file(Path(name)):
            print(f"  {name}: {line}")
    return 0
