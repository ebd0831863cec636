"""Command-line front end.

Settings are resolved in order: bundled defaults, then ``--config`` file,
then command-line flags. Exit codes: 0 success, 2 usage or configuration
error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from . import bsm, channels, game, kernels, predict, tomography
from .errors import InsufficientData, InvalidArgument, InvalidChi, ParseError, UndefinedSNR

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3

U64_MAX = (1 << 64) - 1


class UsageError(Exception):
    pass


@dataclass
class Config:
    memory_params: predict.MemoryParams
    lambda_override: float | None = None
    include_bsm_noise: bool = False
    mode_strategy: str = "mean"
    times: list = field(default_factory=list)
    rounds: int = 100000
    shots: int = 100000
    seed: int = 0
    workers: int = 1
    leak: str = "after"
    detection_efficiency: float | None = None
    output_path: str | None = None
    metadata: dict = field(default_factory=dict)

    def bsm_lambda(self) -> float:
        if self.lambda_override is not None:
            return self.lambda_override
        if self.include_bsm_noise:
            return bsm.lambda_from_visibility(self.memory_params.V)
        return 0.0


_KEYS = {f.name for f in fields(Config)}


def _merge(base: dict, overlay: dict, where: str) -> dict:
    unknown = set(overlay) - _KEYS
    if unknown:
        raise UsageError(f"{where}: unknown config key(s): {', '.join(sorted(unknown))}")
    out = dict(base)
    for k, v in overlay.items():
        if k == "memory_params" and isinstance(v, dict):
            out[k] = {**base.get(k, {}), **v}
        else:
            out[k] = v
    return out


def _check_int(name, v, lo, hi=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise UsageError(f"{name}: expected an integer, got {v!r}")
    if v < lo or (hi is not None and v > hi):
        raise UsageError(f"{name}: {v} out of range")
    return v


def build_config(raw: dict) -> Config:
    try:
        params = predict.MemoryParams.from_dict(dict(raw["memory_params"]))
    except (InvalidArgument, TypeError, ValueError) as exc:
        raise UsageError(f"memory_params: {exc}") from None
    cfg = Config(memory_params=params)
    lam = raw.get("lambda_override")
    if lam is not None:
        if not isinstance(lam, (int, float)) or not 0 <= lam <= 0.5:
            raise UsageError(f"lambda_override: must lie in [0, 0.5], got {lam!r}")
        cfg.lambda_override = float(lam)
    cfg.include_bsm_noise = bool(raw.get("include_bsm_noise", False))
    cfg.mode_strategy = raw.get("mode_strategy", "mean")
    if cfg.mode_strategy not in ("mean", "min"):
        raise UsageError(f"mode_strategy: expected 'mean' or 'min', got {cfg.mode_strategy!r}")
    times = raw.get("times", [])
    if not isinstance(times, list) or not all(isinstance(t, (int, float)) and not isinstance(t, bool)
                                              for t in times):
        raise UsageError("times: expected a list of numbers (microseconds)")
    if any(t < 0 for t in times) or any(b < a for a, b in zip(times, times[1:])):
        raise UsageError("times: must be nonnegative and ascending")
    cfg.times = [float(t) for t in times]
    cfg.rounds = _check_int("rounds", raw.get("rounds", cfg.rounds), 1)
    cfg.shots = _check_int("shots", raw.get("shots", cfg.shots), 1)
    cfg.seed = _check_int("seed", raw.get("seed", cfg.seed), 0, U64_MAX)
    cfg.workers = _check_int("workers", raw.get("workers", cfg.workers), 1)
    cfg.leak = raw.get("leak", "after")
    if cfg.leak not in tomography.LEAK_MODES:
        raise UsageError(f"leak: expected one of {tomography.LEAK_MODES}, got {cfg.leak!r}")
    de = raw.get("detection_efficiency")
    if de is not None:
        if not isinstance(de, (int, float)) or not 0 < de <= 1:
            raise UsageError(f"detection_efficiency: must lie in (0, 1], got {de!r}")
        cfg.detection_efficiency = float(de)
    cfg.output_path = raw.get("output_path")
    cfg.metadata = raw.get("metadata") or {}
    return cfg


def load_config(path=None, overrides: dict | None = None) -> Config:
    raw = predict.default_config()
    if path is not None:
        try:
            doc = yaml.safe_load(Path(path).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
        except yaml.YAMLError as exc:
            raise UsageError(f"config {path} is not valid YAML/JSON: {exc}") from None
        if doc is None:
            doc = {}
        if not isinstance(doc, dict):
            raise UsageError(f"config {path} must be a mapping")
        raw = _merge(raw, doc, str(path))
    raw = _merge(raw, {k: v for k, v in (overrides or {}).items() if v is not None}, "command line")
    return build_config(raw)


def parse_times(text: str) -> list[float]:
    """``"0,10,20"`` or ``"start:stop:step"`` (stop inclusive)."""
    text = text.strip()
    if not text:
        return []
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(round((stop - start) / step))
            return [start + i * step for i in range(n + 1) if start + i * step <= stop + 1e-9]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--times: cannot parse {text!r}") from None


def parse_channel(spec: str) -> channels.Channel:
    kind, _, arg = spec.partition(":")
    if kind == "depolarizing":
        try:
            p = float(arg)
        except ValueError:
            raise UsageError(f"channel spec {spec!r}: p must be a number") from None
        try:
            return channels.depolarizing(p)
        except InvalidArgument as exc:
            raise UsageError(f"channel spec {spec!r}: {exc}") from None
    if kind == "intercept":
        bases = arg.split("+") if arg else []
        if not bases or any(b not in channels.PAULI_BASES for b in bases):
            raise UsageError(f"channel spec {spec!r}: bases must be X, Y or Z joined by '+'")
        return channels.intercept_resend(bases)
    if kind == "chi":
        if not arg:
            raise UsageError(f"channel spec {spec!r}: missing file")
        try:
            chi, _ = channels.read_chi(arg)
        except OSError as exc:
            raise UsageError(f"cannot read chi file {arg}: {exc.strerror}") from None
        return channels.from_chi(chi, name=f"chi:{Path(arg).name}")
    raise UsageError(f"channel spec {spec!r}: expected depolarizing:<p>, chi:<file> "
                     f"or intercept:<basis>[+<basis>...]")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# -- commands ----------------------------------------------------------------

def cmd_predict(args, cfg: Config) -> int:
    times = parse_times(args.times) if args.times is not None else cfg.times
    if not times:
        raise UsageError("predict: the time list is empty")
    if any(t < 0 for t in times) or any(b < a for a, b in zip(times, times[1:])):
        raise UsageError("predict: times must be nonnegative and ascending")
    curve = predict.theory_curve(cfg.memory_params, times, include_bsm_noise=cfg.include_bsm_noise,
                                 lambda_override=cfg.lambda_override, strategy=cfg.mode_strategy)
    _emit(predict.curve_to_csv(curve), args.out or cfg.output_path)
    if args.chi:
        sim = predict.simulated_curve_from_files(args.chi, bsm.bsm_povm(cfg.bsm_lambda()))
        _emit(predict.curve_to_csv(sim), args.simulated_out)
    return EXIT_OK


def cmd_simulate(args, cfg: Config) -> int:
    out = args.out or cfg.output_path
    if out is None:
        raise UsageError("simulate: --out is required (tally file path)")
    channel = parse_channel(args.channel)
    povm = bsm.bsm_povm(cfg.bsm_lambda())
    tally = game.simulate_rounds(channel, povm, cfg.rounds, cfg.seed,
                                 detection_efficiency=cfg.detection_efficiency, workers=cfg.workers)
    tally.metadata["channel_spec"] = args.channel
    result = game.witness_estimate(tally, method=args.error_method)
    game.write_tally(out, tally, result)
    sys.stdout.write(result.to_json())
    return EXIT_OK


def cmd_witness(args, cfg: Config) -> int:
    try:
        tally = game.read_tally(args.tally)
    except OSError as exc:
        raise UsageError(f"cannot read tally {args.tally}: {exc.strerror}") from None
    result = game.witness_estimate(tally, method=args.error_method)
    _emit(result.to_json(), args.out)
    return EXIT_OK


def cmd_tomography(args, cfg: Config) -> int:
    if args.adversary:
        rec = tomography.run_tomography_against(
            tomography.FakedStateAdversary(cfg.leak, cfg.seed), cfg.shots)
    else:
        rec = tomography.run_tomography(parse_channel(args.channel), cfg.shots, cfg.seed)
    chi = tomography.reconstruct_chi(rec)
    chi_psd = channels.project_psd(chi)
    if args.chi_out:
        # clipping alone breaks trace preservation; write the nearest CPTP matrix
        channels.write_chi(args.chi_out, channels.project_cptp(chi), args.storage_time,
                           source=rec.source, projected="cptp")
    doc = {
        "record": rec.to_document(),
        "reported_fidelity": tomography.process_fidelity(chi),
        "reported_fidelity_psd": tomography.process_fidelity(chi_psd),
        "apparent_efficiency": rec.recorded / (12 * rec.shots),
        "chi": channels.chi_to_document(chi)["chi"],
        "chi_psd": channels.chi_to_document(chi_psd)["chi"],
    }
    _emit(_dumps(doc), args.out or cfg.output_path)
    return EXIT_OK


def cmd_attack(args, cfg: Config) -> int:
    report = tomography.run_attack_comparison(cfg.shots, cfg.rounds, cfg.seed, leak=cfg.leak,
                                              lam=cfg.bsm_lambda(), workers=cfg.workers)
    _emit(report.to_json(), args.out or cfg.output_path)
    return EXIT_OK


def _int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    return v


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON config document")
    common.add_argument("--seed", type=_seed, help="64-bit seed")
    common.add_argument("--out", help="output file (default: stdout where applicable)")
    common.add_argument("--workers", type=_int, help="worker threads for sampling")
    common.add_argument("--lambda", dest="lambda_override", type=float,
                        help="BSM misidentification probability (overrides visibility)")
    common.add_argument("--bsm-noise", dest="include_bsm_noise", action="store_true", default=None,
                        help="derive lambda from the configured visibility")

    ap = argparse.ArgumentParser(prog="mdimem", description="MDI verification of quantum memories")
    ap.add_argument("--version", action="version", version=f"%(prog)s 0.1.0 ({kernels.BACKEND} kernels)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", parents=[common], help="theory curve of the witness vs storage time")
    p.add_argument("--times", help="'0,10,20' or 'start:stop:step' in microseconds")
    p.add_argument("--chi", action="append", help="chi file(s) for the simulated curve")
    p.add_argument("--simulated-out", help="output for the simulated curve (default: stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", parents=[common], help="play seeded game rounds")
    p.add_argument("--channel", default="depolarizing:0",
                   help="depolarizing:<p> | chi:<file> | intercept:<basis>[+<basis>...]")
    p.add_argument("--rounds", type=_int)
    p.add_argument("--detection-efficiency", type=float)
    p.add_argument("--error-method", choices=("delta", "bootstrap"), default="delta")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("witness", parents=[common], help="estimate the witness from a tally file")
    p.add_argument("tally", help="tally CSV (x,y,b,count)")
    p.add_argument("--error-method", choices=("delta", "bootstrap"), default="delta")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("tomography", parents=[common], help="simulated process tomography")
    p.add_argument("--channel", default="depolarizing:0")
    p.add_argument("--adversary", action="store_true", help="test the faked-state adversary instead")
    p.add_argument("--leak", choices=tomography.LEAK_MODES)
    p.add_argument("--shots", type=_int)
    p.add_argument("--chi-out", help="write the reconstructed chi file here")
    p.add_argument("--storage-time", type=float, help="storage time recorded in the chi file (us)")
    p.set_defaults(func=cmd_tomography)

    p = sub.add_parser("attack", parents=[common], help="faked-state attack: tomography vs MDI")
    p.add_argument("--leak", choices=tomography.LEAK_MODES)
    p.add_argument("--shots", type=_int)
    p.add_argument("--rounds", type=_int)
    p.set_defaults(func=cmd_attack)
    return ap


_OVERRIDES = ("seed", "workers", "lambda_override", "include_bsm_noise", "rounds", "shots",
              "leak", "detection_efficiency")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        overrides = {k: getattr(args, k, None) for k in _OVERRIDES}
        cfg = load_config(args.config, overrides)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"mdimem {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InsufficientData, ParseError, InvalidChi, UndefinedSNR) as exc:
        print(f"mdimem {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvalidArgument as exc:
        print(f"mdimem {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
