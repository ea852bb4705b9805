"""Command-line front end: ``python3 -m flmult <command> [--config FILE] [--preset NAME]``.

Commands print JSON or CSV on stdout (never both). Exit codes: 0 success or
admissible, 1 inadmissible or verification failure, 2 usage/parse error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .admissibility import THEOREMS, Setup, WeightTriple
from .bilinear import (
    EnsembleConfig,
    KernelParams,
    OmegaParams,
    envelope_study,
    estimate_ratio_sup,
)
from .exponents import ExponentTriple, parse_rational, reciprocal_lattice
from .grid import load
from .microlocal import InadmissibleError, cone_mesh, inclusion_check, wavefront_presets

SCHEMA_VERSION = "1"


class ConfigError(ValueError):
    pass


# --- config parsing --------------------------------------------------------------


def _reject_unknown(block: dict, allowed: set[str], where: str):
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be a JSON object")
    extra = sorted(set(block) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _triple_q(values) -> ExponentTriple:
    if not isinstance(values, list) or len(values) != 3:
        raise ConfigError("exponents must be a list of three entries")
    return ExponentTriple.of(*(str(v) for v in values))


def _triple_s(values) -> tuple[Fraction, Fraction, Fraction]:
    if not isinstance(values, list) or len(values) != 3:
        raise ConfigError("weights must be a list of three entries")
    a, b, c = (parse_rational(str(v)) for v in values)
    return a, b, c


def _omega(block: Optional[dict]) -> OmegaParams:
    block = block or {}
    _reject_unknown(block, {"delta", "r_rad", "modified_omega2"}, "omega")
    return OmegaParams(
        delta=float(parse_rational(str(block.get("delta", "1/2")))),
        r_rad=float(parse_rational(str(block.get("r_rad", 8)))),
        modified_omega2=bool(block.get("modified_omega2", False)),
    )


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(payload: dict) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- check -----------------------------------------------------------------------

CHECK_PRESETS = {
    "hormander": {"theorem": "fl_product", "q": ["2", "2", "2"], "s": ["0", "1/2", "1/2"], "d": 1},
    "young": {"theorem": "convolution", "q": ["2", "1", "2"], "s": ["0", "0", "0"], "d": 1},
    "too-large": {"theorem": "fl_product", "q": ["4", "4", "4"], "s": ["0", "0", "0"], "d": 1},
}


def _setup_from(cfg: dict) -> Setup:
    q = _triple_q(cfg["q"])
    s = WeightTriple(*_triple_s(cfg["s"]), d=int(cfg.get("d", 1)))
    t = _triple_s(cfg["t"]) if "t" in cfg else None
    p = _triple_q(cfg["p"]) if "p" in cfg else None
    return Setup(q, s, t, p)


def cmd_check(cfg: dict, args) -> int:
    _reject_unknown(cfg, {"theorem", "q", "s", "d", "t", "p"}, "check config")
    theorem = cfg.get("theorem", "fl_product")
    if theorem not in THEOREMS:
        raise ConfigError(f"unknown theorem {theorem!r}; expected one of {sorted(THEOREMS)}")
    verdict = THEOREMS[theorem](_setup_from(cfg))
    _emit(_json_text({"theorem": theorem, "verdict": verdict.to_dict()}), args.out)
    return 0 if verdict.admissible else 1


# --- sweep -----------------------------------------------------------------------

SWEEP_PRESETS = {
    "default": {"theorem": "fl_product", "step": "1/4", "s_values": ["-1", "0", "1"], "d": 1},
}


def sweep_rows(theorem: str, step: Fraction, s_values: list[Fraction], d: int):
    check = THEOREMS[theorem]
    recips = reciprocal_lattice(step)
    for x0 in recips:
        for x1 in recips:
            for x2 in recips:
                q = ExponentTriple.from_recips(x0, x1, x2)
                for s0 in s_values:
                    for s1 in s_values:
                        for s2 in s_values:
                            v = check(Setup(q, WeightTriple(s0, s1, s2, d)))
                            yield (*(str(e) for e in q), s0, s1, s2, int(v.admissible), v.clause)


def cmd_sweep(cfg: dict, args) -> int:
    _reject_unknown(cfg, {"theorem", "step", "s_values", "d"}, "sweep config")
    theorem = cfg.get("theorem", "fl_product")
    if theorem not in ("fl_product", "convolution", "microlocal"):
        raise ConfigError(f"sweep supports fl_product, convolution, microlocal; got {theorem!r}")
    step = parse_rational(str(cfg.get("step", "1/4")))
    s_values = [parse_rational(str(v)) for v in cfg.get("s_values", ["-1", "0", "1"])]
    header = ["q0", "q1", "q2", "s0", "s1", "s2", "admissible", "clause"]
    _emit(_csv_text(header, sweep_rows(theorem, step, s_values, int(cfg.get("d", 1)))), args.out)
    return 0


# --- verify ----------------------------------------------------------------------

VERIFY_PRESETS = {
    "young": {
        "mode": "convolution",
        "q": ["2", "1", "2"],
        "s": ["0", "0", "0"],
        "ensemble": {"seed": 7, "family": "bandlimited", "count": 100, "n": 256, "h": 0.125, "dyadic_levels": [0]},
    },
    "refinement": {
        "mode": "fl-product",
        "q": ["2", "2", "2"],
        "s": ["0", "1/2", "1/2"],
        "ensemble": {"seed": 11, "family": "bandlimited", "count": 20, "n": 128, "h": 0.25, "dyadic_levels": [0, 1, 2]},
    },
    "strictness": {
        "mode": "fl-product",
        "q": ["2", "2", "2"],
        "s": ["0", "1/4", "1/4"],
        "ensemble": {
            "seed": 0, "family": "power", "count": 1, "n": 16384, "h": math.pi / 4096,
            "dyadic_levels": [4, 6, 8, 10], "exponent": 0.5,
        },
    },
    "violation": {
        "mode": "fl-product",
        "q": ["2", "2", "2"],
        "s": ["1/2", "0", "0"],
        "ensemble": {
            "seed": 0, "family": "power", "count": 1, "n": 16384, "h": math.pi / 4096,
            "dyadic_levels": [2, 4, 6, 8, 10], "exponent": 0.0,
        },
    },
}

_ENSEMBLE_KEYS = {"seed", "family", "count", "d", "n", "h", "dyadic_levels", "exponent"}


def ensemble_from(cfg: dict, seed: Optional[int]) -> EnsembleConfig:
    ens = dict(cfg.get("ensemble", {}))
    _reject_unknown(ens, _ENSEMBLE_KEYS, "ensemble")
    grid = cfg.get("grid", {})
    _reject_unknown(grid, {"n", "h"}, "grid")
    for key in ("n", "h"):
        ens.setdefault(key, grid.get(key))
    ens.setdefault("d", cfg.get("d", 1))
    if seed is not None:
        ens["seed"] = seed
    missing = [k for k in ("seed", "family", "count", "n", "h", "dyadic_levels") if ens.get(k) is None]
    if missing:
        raise ConfigError(f"ensemble lacks {', '.join(missing)}")
    return EnsembleConfig(
        seed=int(ens["seed"]),
        family=str(ens["family"]),
        count=int(ens["count"]),
        d=int(ens["d"]),
        n=int(ens["n"]),
        h=float(ens["h"]),
        dyadic_levels=tuple(int(k) for k in ens["dyadic_levels"]),
        exponent=float(ens.get("exponent", 0.5)),
    )


def cmd_verify(cfg: dict, args) -> int:
    _reject_unknown(cfg, {"mode", "q", "s", "d", "target", "grid", "ensemble", "bound"}, "verify config")
    q = _triple_q(cfg["q"])
    s = _triple_s(cfg["s"])
    ens = ensemble_from(cfg, args.seed)
    report = estimate_ratio_sup(cfg.get("mode", "convolution"), q, s, ens.d, ens, target=cfg.get("target"))
    if args.out:
        rows = [(res, m, r) for res, m, r in report.rows]
        Path(args.out).write_text(_csv_text(["resolution", "member", "ratio"], rows))
    summary = report.summary()
    bound = cfg.get("bound")
    if bound is not None:
        summary["bound"] = float(bound)
        summary["within_bound"] = summary["overall_max"] <= float(bound)
    summary["q"] = [str(e) for e in q]
    summary["s"] = [str(x) for x in s]
    summary["seed"] = ens.seed
    sys.stdout.write(_json_text(summary))
    return 0 if summary.get("within_bound", True) else 1


# --- envelope --------------------------------------------------------------------

DEFAULT_ENVELOPE_PRESETS = [
    {"j": 1, "s": ["0", "0", "0"], "p": "1"},
    {"j": 1, "s": ["1", "0", "2"], "p": "1"},
    {"j": 1, "s": ["0", "0", "1/4"], "p": "4"},
    {"j": 2, "s": ["1", "2", "0"], "p": "1"},
    {"j": 3, "s": ["0", "1", "-1"], "p": "2"},
    {"j": 3, "s": ["0", "1", "1/2"], "p": "2"},
    {"j": 4, "s": ["1", "1", "1"], "p": "inf"},
    {"j": 5, "s": ["0", "0", "1"], "p": "2"},
    {"j": 4, "s": ["-1", "0", "0"], "p": "inf"},
    {"j": 5, "s": ["-1/4", "0", "0"], "p": "4"},
]

ENVELOPE_HEADER = ["j", "s0", "s1", "s2", "p", "case", "fitted_slope", "predicted_slope", "constant_C", "drift"]


def envelope_rows(presets: list[dict], op: OmegaParams, d: int, levels: list[int]):
    for pre in presets:
        _reject_unknown(pre, {"j", "s", "p"}, "envelope preset")
        kp = KernelParams(*_triple_s(pre["s"]), d=d)
        st = envelope_study(int(pre["j"]), kp, op, str(pre["p"]), fit_levels=levels)
        yield (
            st.j, kp.s0, kp.s1, kp.s2, st.p, st.case,
            round(st.fitted_slope, 10), st.predicted_slope + 0.0, round(st.constant, 10), round(st.constant_drift, 10),
        )


def cmd_envelope(cfg: dict, args) -> int:
    _reject_unknown(cfg, {"presets", "omega", "d", "fit_levels"}, "envelope config")
    presets = cfg.get("presets", DEFAULT_ENVELOPE_PRESETS)
    levels = [int(k) for k in cfg.get("fit_levels", range(4, 11))]
    rows = envelope_rows(presets, _omega(cfg.get("omega")), int(cfg.get("d", 1)), levels)
    _emit(_csv_text(ENVELOPE_HEADER, rows), args.out)
    return 0


# --- wavefront -------------------------------------------------------------------


def cmd_wavefront(cfg: dict, args) -> int:
    _reject_unknown(cfg, {"preset", "d", "q", "s", "f1", "f2", "cones", "kmin", "kmax", "omega"}, "wavefront config")
    d = int(cfg.get("d", 1))
    if "f1" in cfg or "f2" in cfg:
        f1, f2 = load(cfg["f1"]), load(cfg["f2"])
        q = _triple_q(cfg["q"])
        s = WeightTriple(*_triple_s(cfg["s"]), d=f1.grid.d)
        kmax = cfg.get("kmax")
        d = f1.grid.d
        name = "custom"
    else:
        name = cfg.get("preset", "one-singular")
        presets = {p.name: p for p in wavefront_presets(d)}
        if name not in presets:
            raise ConfigError(f"unknown wavefront preset {name!r}; expected one of {sorted(presets)}")
        pre = presets[name]
        f1, f2, q, s, kmax = pre.f1, pre.f2, pre.q, pre.s, cfg.get("kmax", pre.kmax)
        if "q" in cfg:
            q = _triple_q(cfg["q"])
        if "s" in cfg:
            s = WeightTriple(*_triple_s(cfg["s"]), d=d)
    mesh = cone_mesh(d, int(cfg.get("cones", 16)))
    op = _omega(cfg["omega"]) if "omega" in cfg else None
    try:
        report = inclusion_check(f1, f2, q, s, mesh, op, int(cfg.get("kmin", 2)), kmax)
    except InadmissibleError as exc:
        sys.stdout.write(_json_text({"preset": name, "error": str(exc), "verdict": exc.verdict.to_dict()}))
        return 2
    payload = report.to_dict()
    payload["preset"] = name
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0 if report.contained and not report.failures else 1


# --- entry point -----------------------------------------------------------------

COMMANDS = {
    "check": (cmd_check, CHECK_PRESETS),
    "sweep": (cmd_sweep, SWEEP_PRESETS),
    "verify": (cmd_verify, VERIFY_PRESETS),
    "envelope": (cmd_envelope, {"default": {}}),
    "wavefront": (cmd_wavefront, {}),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flmult", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON parameter file")
        p.add_argument("--preset", help="named built-in configuration")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--seed", type=int, help="override the ensemble seed")
    return parser


def load_config(command: str, args) -> dict:
    _, presets = COMMANDS[command]
    cfg: dict = {}
    if args.preset is not None:
        if command == "wavefront":
            cfg["preset"] = args.preset
        elif args.preset in presets:
            cfg.update(presets[args.preset])
        else:
            raise ConfigError(f"unknown preset {args.preset!r}; expected one of {sorted(presets)}")
    if args.config:
        try:
            user = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        cfg.update(user)
    if not cfg and command in ("check", "verify"):
        raise ConfigError(f"{command} needs --config or --preset")
    return cfg


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args)
        handler, _ = COMMANDS[args.command]
        return handler(cfg, args)
    except (ConfigError, ValueError, TypeError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
