"""Command-line front end.

Subcommands
-----------
run      execute a QSDC, CQD or socialist-millionaire session, emit the transcript JSON
sweep    evaluate the security criterion over a grid, emit CSV
wigner   evaluate a Wigner function on a grid, emit CSV

Every subcommand accepts ``--config FILE``: a flat ``key = value`` text file
whose keys are flag names without the leading dashes. Flags given on the
command line win over the file. Ranges use ``start:stop:step`` and include
``stop`` when it lies on the lattice to within 1e-9.

Exit status: 0 on completion, 2 when a protocol aborts, 1 on bad input.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .channel_attacks import Attack, AttackType, GqcmParams
from .encoding import EncoderConfig
from .gaussian_core import PhaseGrid, SqueezeParam, coherent, squeeze, wigner, write_wigner_csv
from .measurement import VerificationPolicy
from .protocols import (
    CQD_LEGS,
    QSDC_LEGS,
    CqdConfig,
    QsdcConfig,
    run_cqd,
    run_qsdc,
    run_socialist_millionaire,
)
from .security_analysis import sweep, write_sweep_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ABORT = 2
SEED_ENV = "CVQSDC_SEED"
RANGE_TOL = 1e-9
_NEG_VALUE = re.compile(r"^-[\d.]")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; 2 is reserved for aborts here
    def error(self, message):
        raise ConfigError(message)


def parse_range(text: str) -> np.ndarray:
    """``"v"`` or ``"start:stop:step"`` to an array of values."""
    parts = str(text).split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"bad range {text!r}") from exc
    if not all(np.isfinite(nums)):
        raise ConfigError(f"range {text!r} must be finite")
    if len(nums) == 1:
        return np.array(nums)
    if len(nums) != 3:
        raise ConfigError(f"range {text!r} must be 'value' or 'start:stop:step'")
    start, stop, step = nums
    if step <= 0:
        raise ConfigError(f"range step must be positive in {text!r}")
    count = int(np.floor((stop - start) / step + RANGE_TOL)) + 1
    return start + step * np.arange(max(count, 0))


def parse_complex(text: str) -> complex:
    """Accept ``1.2+2.1i``, ``1.2+2.1j`` or a plain real number."""
    cleaned = str(text).strip().replace(" ", "").replace("i", "j")
    try:
        value = complex(cleaned)
    except ValueError as exc:
        raise ConfigError(f"bad complex amplitude {text!r}") from exc
    if not np.isfinite(value):
        raise ConfigError(f"amplitude {text!r} must be finite")
    return value


def parse_seed(value) -> int:
    try:
        seed = int(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seed must be an integer, got {value!r}") from exc
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    return seed


def read_config_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _merge_config(parser, args):
    """Fill flags left unset on the command line from ``--config``."""
    if args.config is None:
        return args
    known = {a.dest: a for a in parser._actions}
    for key, value in read_config_file(args.config).items():
        if key not in known or key in ("help", "config", "command"):
            raise ConfigError(f"unknown config key {key!r}")
        if getattr(args, key) is None:
            action = known[key]
            try:
                setattr(args, key, action.type(value) if action.type else value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {value!r}") from exc
            if action.choices is not None and getattr(args, key) not in action.choices:
                raise ConfigError(f"{key} must be one of {sorted(action.choices)}")
    return args


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return parse_seed(args.seed)
    env = os.environ.get(SEED_ENV)
    return parse_seed(env) if env not in (None, "") else 0


def _default(value, fallback):
    return fallback if value is None else value


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        try:
            fh = Path(path).open("w", newline="")
        except OSError as exc:
            raise ConfigError(f"cannot write {path}: {exc.strerror}") from exc
        with fh:
            yield fh


def _build_attack(args, legs) -> Attack:
    kind = AttackType(_default(args.attack, "none"))
    if kind is AttackType.NONE:
        return Attack()
    leg = args.leg
    if leg is None:
        leg = "bob-alice" if legs == QSDC_LEGS else "alice-bob"
    gqcm = None
    if kind is AttackType.GQCM:
        gqcm = GqcmParams(_default(args.A, 1.0), _default(args.T, 1.0))
    return Attack(kind, leg, gqcm, _default(args.amplitude_scale, 2.0))


def cmd_run(args) -> int:
    seed = _resolve_seed(args)
    protocol = _default(args.protocol, "qsdc")
    policy = VerificationPolicy(
        _default(args.sigma_bound, 4.5), _default(args.aggregate_alpha, 0.01)
    )
    encoder = EncoderConfig(_default(args.interior_margin, 0.1))
    common = dict(
        mode=_default(args.mode, "expectation"),
        policy=policy,
        encoder=encoder,
        seed=seed,
        alpha_scale=_default(args.alpha_scale, 2.0),
        max_squeeze=_default(args.max_squeeze, 1.0),
    )
    if protocol == "qsdc":
        if args.payload_real is not None and args.payload_bits is not None:
            raise ConfigError("give either --payload-bits or --payload-real")
        if args.payload_real is not None:
            cfg = QsdcConfig(n=_default(args.n, 64), payload_kind="real", **common)
            message = args.payload_real
        else:
            cfg = QsdcConfig(n=_default(args.n, 64), **common)
            message = _default(args.payload_bits, "101011")
        transcript = run_qsdc(cfg, message, _build_attack(args, QSDC_LEGS))
    else:
        cfg = CqdConfig(n=_default(args.n, 16), w_policy=_default(args.w_policy, "shared_w"), **common)
        attack = _build_attack(args, CQD_LEGS)
        if protocol == "cqd":
            transcript = run_cqd(cfg, _default(args.m_a, 1.0), _default(args.m_b, 2.0), attack)
        else:
            transcript = run_socialist_millionaire(
                _default(args.assets_a, 5.0), _default(args.assets_b, 3.0), cfg, attack
            )
    with _output(args.out) as fh:
        fh.write(transcript.to_json(indent=2, sort_keys=True))
        fh.write("\n")
    if transcript.aborted:
        print(f"aborted: {transcript.abort['reason']}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def cmd_sweep(args) -> int:
    axes = [parse_range(_default(v, d)) for v, d in
            ((args.A, "1"), (args.T, "0.8"), (args.g, "0"), (args.h, "0"))]
    if any(ax.size == 0 for ax in axes):
        raise ConfigError("sweep grid is empty")
    rows = sweep(*axes)
    with _output(args.out) as fh:
        write_sweep_csv(fh, rows)
    return EXIT_OK


def cmd_wigner(args) -> int:
    alpha = parse_complex(_default(args.alpha, "0"))
    s = SqueezeParam(_default(args.squeeze_r, 0.0), _default(args.squeeze_theta, 0.0))
    state = squeeze(coherent(alpha), s)
    grid_x = parse_range(_default(args.grid, "-4:6:0.05"))
    grid_p = parse_range(args.p_grid) if args.p_grid is not None else grid_x
    if grid_x.size < 2 or grid_p.size < 2:
        raise ConfigError("wigner grid needs at least two points per axis")
    grid = PhaseGrid((grid_x[0], grid_x[-1]), (grid_p[0], grid_p[-1]), grid_x.size, grid_p.size)
    with _output(args.out) as fh:
        write_wigner_csv(fh, grid, wigner(state, grid))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cvqsdc", description="Squeezed-coherent-state QSDC/CQD simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a protocol session")
    run.add_argument("--protocol", choices=["qsdc", "cqd", "smp"])
    run.add_argument("--n", type=int)
    run.add_argument("--mode", choices=["expectation", "sampled"])
    run.add_argument("--payload-bits")
    run.add_argument("--payload-real", type=float)
    run.add_argument("--m-a", type=float)
    run.add_argument("--m-b", type=float)
    run.add_argument("--assets-a", type=float)
    run.add_argument("--assets-b", type=float)
    run.add_argument("--w-policy", choices=["shared_w", "per_slot_w"])
    run.add_argument("--attack", choices=[k.value for k in AttackType])
    run.add_argument("--leg", choices=sorted(set(QSDC_LEGS + CQD_LEGS)))
    run.add_argument("--A", type=float, help="cloner amplifier gain")
    run.add_argument("--T", type=float, help="cloner beamsplitter transmission")
    run.add_argument("--amplitude-scale", type=float, help="DoS resend amplitude spread")
    run.add_argument("--alpha-scale", type=float)
    run.add_argument("--max-squeeze", type=float)
    run.add_argument("--sigma-bound", type=float)
    run.add_argument("--aggregate-alpha", type=float)
    run.add_argument("--interior-margin", type=float)
    run.add_argument("--seed")
    run.add_argument("--out", help="transcript JSON path (default stdout)")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="security-criterion grid sweep")
    for name in ("A", "T", "g", "h"):
        sw.add_argument(f"--{name}", help="value or start:stop:step")
    sw.add_argument("--out", help="CSV path (default stdout)")
    sw.set_defaults(func=cmd_sweep)

    wg = sub.add_parser("wigner", help="Wigner function on a grid")
    wg.add_argument("--alpha", help="complex amplitude, e.g. 1.2+2.1i")
    wg.add_argument("--squeeze-r", type=float)
    wg.add_argument("--squeeze-theta", type=float)
    wg.add_argument("--grid", help="x range start:stop:step (also p unless --p-grid)")
    wg.add_argument("--p-grid")
    wg.add_argument("--out", help="CSV path (default stdout)")
    wg.set_defaults(func=cmd_wigner)

    for p in (run, sw, wg):
        p.add_argument("--config", help="flat key = value file; flags override it")
    return parser


def _attach_negative_values(argv):
    # argparse reads "-4:6:0.05" as an option; glue such values to their flag
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEG_VALUE.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _attach_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        args = _merge_config(subparser, args)
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"cvqsdc: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
