"""Command-line interface.

Subcommands: ber (one scenario), sweep (preset or config list), bound
(analytical ABEP), codebook (dump the signal set), presets (list).
Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

import numpy as np

from .analysis import union_bound_reduced
from .channel import snr_to_sigma2
from .harness import (ConfigError, ScenarioConfig, emit, run_ber, run_sweep)
from .modulation import build_codebook, parse_alphabet
from .presets import PRESETS, get_preset


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse usage errors are config errors
        raise ConfigError(message)


_SCENARIO_FLAGS = {
    "k_users": int, "n_rx": int, "n_t": int, "n_rf": int, "alphabet": str,
    "detector": str, "csi": str, "channel": str, "n_taps": int, "xi_db": float,
    "q_vectors": int, "data_blocks": int, "pilot_power": float,
    "min_errors": int, "max_bits": int, "stop_below_ber": float,
    "damping": float, "max_iters": int, "epsilon": float, "name": str,
}


def _add_scenario_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="TOML scenario file")
    p.add_argument("--snr", help="comma-separated SNR grid in dB")
    for key, typ in _SCENARIO_FLAGS.items():
        p.add_argument("--" + key.replace("_", "-"), type=typ, default=None)


def _add_io_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="out")
    p.add_argument("--format", default="both", choices=("csv", "json", "both"))
    p.add_argument("--workers", type=int, default=None)


def _load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc


def _scenario_from_args(args) -> ScenarioConfig:
    data: dict = {}
    if args.config:
        raw = _load_config(args.config)
        data.update(raw.get("scenario", raw))
    for key in _SCENARIO_FLAGS:
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    if args.snr:
        data["snr_grid_db"] = tuple(float(s) for s in args.snr.split(","))
    if args.seed is not None:
        data["seed"] = args.seed
    if "snr_grid_db" not in data:
        raise ConfigError("an SNR grid is required (--snr or config snr_grid_db)")
    for req in ("k_users", "n_rx", "n_t", "n_rf", "alphabet"):
        if req not in data:
            raise ConfigError(f"missing required scenario key {req!r}")
    return ScenarioConfig.from_dict(data)


def _cmd_ber(args) -> int:
    sc = _scenario_from_args(args)
    res = run_ber(sc, workers=args.workers)
    paths = emit([res], args.format, args.out, stem=sc.name)
    for p in res.points:
        print(f"{sc.name} snr={p.snr_db:6.2f} dB  ber={p.ber:.3e} "
              f"(+-{p.ci_half:.1e})  bits={p.bits}  errors={p.errors}")
    for path in paths:
        print("wrote", path)
    return 0


def _cmd_sweep(args) -> int:
    if args.preset:
        preset = get_preset(args.preset)
        scenarios = list(preset.scenarios)
        if args.seed is not None:
            scenarios = [ScenarioConfig.from_dict({**s.to_dict(), "seed": args.seed})
                         for s in scenarios]
        bound_names = set(preset.with_bound)
        stem = preset.name
    else:
        if not args.config:
            raise ConfigError("sweep needs a preset name or --config")
        raw = _load_config(args.config)
        entries = raw.get("scenario", raw.get("scenarios"))
        if isinstance(entries, dict):
            entries = [entries]
        if not entries:
            raise ConfigError("config defines no scenarios")
        scenarios = [ScenarioConfig.from_dict(e) for e in entries]
        bound_names = set()
        stem = "sweep"
    results = run_sweep(scenarios, workers=args.workers)
    bounds = []
    for sc in scenarios:
        if sc.name in bound_names:
            cb = sc.codebook()
            sigmas = [snr_to_sigma2(s, sc.k_users, sc.n_rf, cb.alphabet.avg_energy)
                      for s in sc.snr_grid_db]
            br = union_bound_reduced(cb, sc.k_users, sigmas, sc.n_rx,
                                     snr_db=sc.snr_grid_db)
            bounds.append((sc.name, br))
    paths = emit(results, args.format, args.out, bounds=bounds, stem=stem)
    for res in results:
        snr_1e3 = res.snr_at(1e-3)
        tag = "censored" if snr_1e3 is None else f"{snr_1e3:.2f} dB"
        print(f"{res.scenario.name}: snr@1e-3 = {tag}  ({len(res.points)} points, "
              f"{res.wall_time_s:.1f} s)")
    for path in paths:
        print("wrote", path)
    return 0


def _cmd_bound(args) -> int:
    sc = _scenario_from_args(args)
    cb = sc.codebook()
    sigmas = np.array([snr_to_sigma2(s, sc.k_users, sc.n_rf, cb.alphabet.avg_energy)
                       for s in sc.snr_grid_db])
    br = union_bound_reduced(cb, sc.k_users, sigmas, sc.n_rx, snr_db=sc.snr_grid_db)
    import pathlib

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{sc.name}_bound.csv"
    lines = ["snr_db,bound,eta"]
    for snr, val in zip(sc.snr_grid_db, br.bound):
        lines.append(f"{snr},{val!r},{br.eta}")
        print(f"snr={snr:6.2f} dB  bound={val:.6e}")
    csv_path.write_text("\n".join(lines) + "\n")
    phi = br.diagnostics["phi"]
    sidecar = {
        "eta": br.eta,
        "n_classes": br.diagnostics["n_classes"],
        "n_pattern_pairs": br.diagnostics["n_pattern_pairs"],
        "n_distinct_alphas": br.diagnostics["n_distinct_alphas"],
        "phi": {int(q): int(c) for q, c in zip(phi.q_values, phi.phi)},
        "phi_index_distance": {int(q): int(c) for q, c in zip(phi.q_values, phi.idx_dist)},
    }
    side_path = out / f"{sc.name}_bound_diagnostics.json"
    side_path.write_text(json.dumps(sidecar, indent=2))
    print("wrote", csv_path)
    print("wrote", side_path)
    return 0


def _cmd_codebook(args) -> int:
    if not (args.n_t and args.n_rf and args.alphabet):
        raise ConfigError("codebook needs --n-t, --n-rf and --alphabet")
    cb = build_codebook(args.n_t, args.n_rf, parse_alphabet(args.alphabet))
    lines = []
    for i in range(cb.size):
        lines.append(json.dumps({
            "bits": "".join(str(b) for b in cb.bit_labels[i]),
            "pattern": "".join(str(b) for b in cb.pattern_set.patterns[cb.pattern_idx[i]]),
            "entries": [[float(v.real), float(v.imag)] for v in cb.vectors[i]],
        }))
    text = "\n".join(lines) + "\n"
    if args.out_file:
        import pathlib

        pathlib.Path(args.out_file).write_text(text)
        print("wrote", args.out_file)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_presets(_args) -> int:
    for name in sorted(PRESETS):
        p = PRESETS[name]
        print(f"{name}: {p.description} [{len(p.scenarios)} scenarios]")
        if p.note:
            print(f"    note: {p.note}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gsmlink", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ber", help="simulate one scenario")
    _add_scenario_flags(p)
    _add_io_flags(p)
    p.set_defaults(func=_cmd_ber)

    p = sub.add_parser("sweep", help="run a preset or a config of scenarios")
    p.add_argument("preset", nargs="?", help="preset name (see `gsmlink presets`)")
    p.add_argument("--config", help="TOML file with [[scenario]] tables")
    _add_io_flags(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bound", help="analytical ABEP upper bound")
    _add_scenario_flags(p)
    _add_io_flags(p)
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("codebook", help="dump the GSM signal set as JSON lines")
    p.add_argument("--n-t", type=int, dest="n_t")
    p.add_argument("--n-rf", type=int, dest="n_rf")
    p.add_argument("--alphabet")
    p.add_argument("--out", dest="out_file", default=None)
    p.set_defaults(func=_cmd_codebook)

    p = sub.add_parser("presets", help="list available presets")
    p.set_defaults(func=_cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except KeyError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
