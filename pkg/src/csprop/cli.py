"""Command line entry point: ``csprop sweep|roots|traj|compare``.

Exit codes: 0 success, 2 configuration error, 3 solver failure that
prevents the requested output.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

import numpy as np

from .dynamics import flow
from .errors import ConfigError, CSPropError, WindowEmpty
from .solvers import BoundarySpec, MIXED_KINDS, solve_mixed
from .sweep import PRESETS, ScenarioConfig, compare, emit, parse_config_text, read_rows, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

_FIELD_HELP = {
    "model": "kerr or harmonic",
    "t_unit": "abs or tc",
    "methods": "comma list of exact,complex,q1p1,q2p2,q1q2,q1p2,p1q2,p1p2",
    "integrator": "auto, rk4 or exact",
    "q1q2_branches": "'window' or a comma list of loop indices",
}


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", nargs="?", help="key=value scenario file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a figure preset")
    for name in ScenarioConfig.field_names():
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None, metavar="VALUE",
                       help=_FIELD_HELP.get(name))
    p.add_argument("-v", "--verbose", action="store_true")


def _load_config(args) -> ScenarioConfig:
    values = {}
    if args.preset:
        values["preset"] = args.preset
    if args.config:
        try:
            with open(args.config) as fh:
                values.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from exc
        if args.preset:
            values["preset"] = args.preset
    for name in ScenarioConfig.field_names():
        val = getattr(args, name, None)
        if val is not None:
            values[name] = val
    return ScenarioConfig.from_mapping(values)


def _write(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    timings = {}
    rows = run_sweep(cfg, timings)
    for method, seconds in timings.items():
        logging.info("%s: %.3f s", method, seconds)
    _write(emit(rows, cfg.format), cfg.out)
    if all(r.prob is None for r in rows):
        logging.error("no method produced an amplitude")
        return EXIT_SOLVER
    return EXIT_OK


def cmd_roots(args) -> int:
    cfg = _load_config(args)
    if args.kind not in MIXED_KINDS:
        raise ConfigError(f"unknown kind {args.kind!r}")
    H = cfg.hamiltonian()
    z1, z2 = cfg.labels()
    window = cfg.window(args.kind)
    lines = ["T,kind,n_roots,roots"]
    for T in cfg.grid():
        if not T > 0:
            continue
        spec = BoundarySpec.from_labels(args.kind, z1, z2, T, H.scale)
        roots = solve_mixed(H, spec, window, cfg.integrator_options())
        lines.append(f"{T:.17g},{args.kind},{len(roots)},{';'.join(f'{r:.17g}' for r in roots)}")
    _write("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK


def _cjson(x):
    x = complex(x)
    return [x.real, x.imag]


def cmd_traj(args) -> int:
    cfg = _load_config(args)
    H = cfg.hamiltonian()
    q0 = cfg.q1 if args.q0 is None else args.q0
    p0 = cfg.p1 if args.p0 is None else args.p0
    T = args.T * cfg.time_unit()
    if T < 0:
        raise ConfigError("T must be nonnegative")
    rec = flow(H, q0, p0, T, cfg.integrator_options())
    m = rec.tangent
    out = {
        "T": T, "q_start": q0, "p_start": p0,
        "q_end": float(np.real(rec.q_end)), "p_end": float(np.real(rec.p_end)),
        "tangent": [[float(m.m_qq), float(m.m_qp)], [float(m.m_pq), float(m.m_pp)]],
        "s_hamilton": float(np.real(rec.s_hamilton)), "s_complex": _cjson(rec.s_complex),
        "i_correction": float(np.real(rec.i_correction)), "sqrt_mvv": _cjson(rec.sqrt_mvv),
        "energy_drift": float(rec.energy_drift),
    }
    _write(json.dumps(out, indent=1) + "\n", cfg.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    rows = []
    for path in args.files:
        try:
            rows.extend(read_rows(path))
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
    window = (args.tmin, args.tmax) if args.tmin is not None or args.tmax is not None else None
    if window is not None:
        window = (-np.inf if args.tmin is None else args.tmin, np.inf if args.tmax is None else args.tmax)
    report = compare(rows, args.reference, args.target, window, args.prominence)
    _write(emit(report, "json"), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csprop", description="Semiclassical coherent-state propagators")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="evaluate methods on a T grid")
    _add_config_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("roots", help="list real roots of a mixed boundary problem on the T grid")
    _add_config_args(p)
    p.add_argument("--kind", required=True, choices=MIXED_KINDS)
    p.set_defaults(func=cmd_roots)

    p = sub.add_parser("traj", help="integrate one real trajectory")
    _add_config_args(p)
    p.add_argument("--q0", type=float)
    p.add_argument("--p0", type=float)
    p.add_argument("--T", type=float, required=True, help="duration in t_unit")
    p.set_defaults(func=cmd_traj)

    p = sub.add_parser("compare", help="compare two methods stored in emitted files")
    p.add_argument("files", nargs="+")
    p.add_argument("--reference", default="exact")
    p.add_argument("--target", required=True)
    p.add_argument("--tmin", type=float)
    p.add_argument("--tmax", type=float)
    p.add_argument("--prominence", type=float, default=0.25)
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ConfigError, WindowEmpty) as exc:
        print(f"csprop: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CSPropError as exc:
        print(f"csprop: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
