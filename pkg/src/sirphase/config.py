"""Run configuration: defaults < config file < command-line flags.

Config files are flat ``key = value`` lines with dotted section names;
``#`` starts a comment. Every key has exactly one mirroring flag, e.g.
``vaccination.phi`` <-> ``--phi``. :func:`render_config` writes the fully
resolved configuration in the same format, which is what output headers
echo, so a header can be fed back in as a config file.
"""

from __future__ import annotations

import argparse
import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from . import __version__
from .errors import ValidationError
from .integrate import DEFAULT_IC, IntegratorConfig
from .lyapunov import LyapunovConfig
from .model import ForcingParams, ForcingShape, ModelParams, VaccinationParams
from .scan import GridSpec2D, ScanParameter, ScanSpec1D

COMMANDS = ("simulate", "bifurcate", "lyapunov", "sweep", "equilibria", "render")
RENDER_KINDS = ("timeseries", "bifurcation", "lyapunov-curve", "density")


class UsageError(Exception):
    """Malformed command line or config file."""


_ANGLE = re.compile(r"^\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def parse_angle(text: str) -> float:
    """Radians from ``'4.398'``, ``'pi'``, ``'7pi/5'``, ``'7*pi/5'`` or ``'1.5pi'``."""
    m = _ANGLE.match(text.lower())
    if m is None:
        return float(text)
    coef = m.group(1)
    if coef in ("", "+"):
        value = math.pi
    elif coef == "-":
        value = -math.pi
    else:
        value = float(coef) * math.pi
    if m.group(2):
        value /= float(m.group(2))
    return value


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(count: int) -> Callable[[str], tuple]:
    def convert(text: str) -> tuple:
        parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
        if len(parts) != count:
            raise ValueError(f"expected {count} comma-separated numbers, got {text!r}")
        return tuple(parse_angle(p) for p in parts)
    return convert


def _grid(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", text)
    if m is None:
        raise ValueError(f"expected PxA, e.g. 126x46, got {text!r}")
    return int(m.group(1)), int(m.group(2))


def _optional(convert):
    def wrapped(text: str):
        if text.strip().lower() in ("", "auto", "none"):
            return None
        return convert(text)
    return wrapped


@dataclass(frozen=True)
class Key:
    name: str
    flag: str
    convert: Callable[[str], Any]
    default: Any
    help: str = ""

    @property
    def dest(self) -> str:
        return self.name.replace(".", "__")


_m, _f, _v = ModelParams(), ForcingParams(), VaccinationParams()
_i, _l = IntegratorConfig(), LyapunovConfig()

KEYS = [
    Key("run.command", "--command", str, None, "command when not given positionally"),
    Key("model.sigma", "--sigma", float, _m.sigma, "birth rate (1/year)"),
    Key("model.mu", "--mu", float, _m.mu, "death rate (1/year)"),
    Key("model.gamma", "--gamma", float, _m.gamma, "recovery rate (1/year)"),
    Key("forcing.beta0", "--beta0", float, _f.beta0, "mean contact rate (1/year)"),
    Key("forcing.epsilon", "--epsilon", float, _f.epsilon, "degree of seasonality"),
    Key("forcing.shape", "--shape", ForcingShape, _f.shape, "contact-rate shape: kot or cos"),
    Key("vaccination.v0", "--v0", float, _v.v0, "mean vaccination level (1/year)"),
    Key("vaccination.alpha", "--alpha", float, _v.alpha, "perturbation amplitude (1/year)"),
    Key("vaccination.r", "--r", float, _v.r, "frequency ratio"),
    Key("vaccination.phi", "--phi", parse_angle, _v.phi, "phase (rad or e.g. 7pi/5)"),
    Key("integrator.rel_tol", "--rel-tol", float, _i.rel_tol),
    Key("integrator.abs_tol", "--abs-tol", float, _i.abs_tol),
    Key("integrator.max_step", "--max-step", float, _i.max_step, "years"),
    Key("integrator.min_step", "--min-step", float, _i.min_step, "years"),
    Key("integrator.transient", "--transient", float, _i.transient, "years discarded"),
    Key("integrator.window", "--window", float, _i.sample_window, "years of strobe samples"),
    Key("integrator.ic", "--ic", _floats(3), DEFAULT_IC, "initial S,I,R"),
    Key("lyapunov.total_time", "--total-time", _optional(float), None,
        "years of tangent integration (auto: 3000, sweeps 1500)"),
    Key("lyapunov.renorm", "--renorm", float, _l.renorm_interval, "years between renormalizations"),
    Key("lyapunov.transient", "--lyap-transient", float, _l.transient, "years"),
    Key("lyapunov.blocks", "--blocks", int, _l.block_count),
    Key("scan.param", "--param", ScanParameter, ScanParameter.EPSILON, "epsilon or phi"),
    Key("scan.lo", "--lo", _optional(parse_angle), None, "scan start (auto by parameter)"),
    Key("scan.hi", "--hi", _optional(parse_angle), None, "scan end (auto by parameter)"),
    Key("scan.points", "--points", _optional(int), None,
        "scan points (auto: 601; lyapunov: 1 = single point)"),
    Key("scan.continuation", "--continuation", _bool, False, "seed each point from the previous"),
    Key("scan.grid", "--grid", _grid, (126, 46), "sweep resolution PxA"),
    Key("scan.phi_range", "--phi-range", _floats(2), (0.0, 2 * math.pi), "sweep phi lo,hi"),
    Key("scan.alpha_range", "--alpha-range", _floats(2), (0.001, 0.01), "sweep alpha lo,hi"),
    Key("simulate.duration", "--duration", float, 200.0, "years"),
    Key("simulate.dt", "--dt", float, 0.01, "output cadence (years)"),
    Key("simulate.divergence", "--divergence", float, 0.0, "perturbation of S for a second run"),
    Key("render.input", "--csv", _optional(str), None, "CSV to render"),
    Key("render.kind", "--kind", _optional(str), None, "plot kind (auto from columns)"),
    Key("run.seed", "--seed", int, 0, "tangent-vector seed"),
    Key("run.out", "--out", _optional(str), None, "output path (default stdout)"),
    Key("run.svg", "--svg", _bool, False, "also write an SVG next to the output"),
]
KEYS_BY_NAME = {k.name: k for k in KEYS}
INFO_KEYS = ("artifact.version",)
_SCAN_DEFAULTS = {
    ScanParameter.EPSILON: (0.134, 0.14),
    ScanParameter.PHI: (math.pi, 2 * math.pi),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    model: ModelParams
    integ: IntegratorConfig
    lyap: LyapunovConfig
    scan: ScanSpec1D | GridSpec2D | None
    ic: tuple[float, float, float]
    output_path: str | None = None
    svg: bool = False
    seed: int = 0
    values: dict = field(default_factory=dict, repr=False)

    def get(self, name: str):
        return self.values[name]


def read_config_text(text: str, source: str = "<config>") -> dict[str, Any]:
    """Parse ``key = value`` lines; unknown keys raise :class:`UsageError`."""
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        name, _, text_value = line.partition("=")
        name, text_value = name.strip(), text_value.strip()
        if name in INFO_KEYS:
            continue
        key = KEYS_BY_NAME.get(name)
        if key is None:
            raise UsageError(f"{source}:{lineno}: unknown key {name!r}")
        values[name] = _convert(key, text_value, f"{source}:{lineno}: {name}")
    return values


def read_header(text: str) -> dict[str, Any]:
    """Config values echoed in the ``#`` header of an output file."""
    lines = []
    for raw in text.splitlines():
        if not raw.startswith("#"):
            break
        lines.append(raw[1:])
    return read_config_text("\n".join(lines), "<header>")


def _convert(key: Key, text: str, where: str):
    try:
        return key.convert(text)
    except ValueError as exc:
        raise UsageError(f"{where}: {exc}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sirphase",
                     description="Seasonally forced SIR chaos and phase-control laboratory.")
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--workers", type=int, default=None,
                        help="parallel worker processes (does not change results)")
    for key in KEYS:
        if key.name == "run.command":
            continue
        parser.add_argument(key.flag, dest=key.dest, default=None, metavar="VALUE",
                            help=key.help or None)
    return parser


def _collect(argv: Sequence[str]):
    ns = build_parser().parse_args(list(argv))
    file_values: dict[str, Any] = {}
    if ns.config:
        try:
            with open(ns.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        # an output CSV works too: its header echoes the resolved config
        if text.startswith("# artifact.version"):
            file_values = read_header(text)
        else:
            file_values = read_config_text(text, ns.config)
    flag_values = {}
    for key in KEYS:
        raw = getattr(ns, key.dest, None)
        if raw is not None:
            flag_values[key.name] = _convert(key, raw, key.flag)
    if ns.command:
        flag_values["run.command"] = ns.command
    if ns.workers is not None and ns.workers < 1:
        raise UsageError("--workers must be >= 1")
    return file_values, flag_values, ns.workers


def parse_args(argv: Sequence[str]):
    """Return ``(RunConfig, workers)`` from command-line tokens."""
    file_values, flag_values, workers = _collect(argv)
    return resolve({**file_values, **flag_values}), workers


def parse_config(argv: Sequence[str], config_text: str | None = None) -> RunConfig:
    """Resolve a :class:`RunConfig` from tokens and optional config text.

    ``config_text`` plays the role of a config file (flags still win).
    """
    file_values, flag_values, _ = _collect(argv)
    if config_text is not None:
        file_values.update(read_config_text(config_text))
    return resolve({**file_values, **flag_values})


def resolve(values: dict[str, Any]) -> RunConfig:
    """Fill defaults, resolve the automatic keys and validate every record."""
    merged = {k.name: k.default for k in KEYS}
    merged.update(values)
    command = merged["run.command"]
    if command is None:
        raise UsageError("no command given; choose one of " + ", ".join(COMMANDS))
    if command not in COMMANDS:
        raise UsageError(f"unknown command {command!r}")

    param = merged["scan.param"]
    if merged["scan.lo"] is None or merged["scan.hi"] is None:
        lo, hi = _SCAN_DEFAULTS[param]
        merged["scan.lo"] = lo if merged["scan.lo"] is None else merged["scan.lo"]
        merged["scan.hi"] = hi if merged["scan.hi"] is None else merged["scan.hi"]
    if merged["scan.points"] is None:
        merged["scan.points"] = 1 if command == "lyapunov" else 601
    if merged["lyapunov.total_time"] is None:
        merged["lyapunov.total_time"] = 1500.0 if command == "sweep" else 3000.0

    try:
        model = ModelParams(
            sigma=merged["model.sigma"], mu=merged["model.mu"], gamma=merged["model.gamma"],
            forcing=ForcingParams(beta0=merged["forcing.beta0"],
                                  epsilon=merged["forcing.epsilon"],
                                  shape=merged["forcing.shape"]),
            vaccination=VaccinationParams(v0=merged["vaccination.v0"],
                                          alpha=merged["vaccination.alpha"],
                                          r=merged["vaccination.r"],
                                          phi=merged["vaccination.phi"]),
        )
        integ = IntegratorConfig(
            rel_tol=merged["integrator.rel_tol"], abs_tol=merged["integrator.abs_tol"],
            max_step=merged["integrator.max_step"], min_step=merged["integrator.min_step"],
            transient=merged["integrator.transient"],
            sample_window=merged["integrator.window"],
        )
        lyap = LyapunovConfig(
            total_time=merged["lyapunov.total_time"],
            renorm_interval=merged["lyapunov.renorm"],
            transient=merged["lyapunov.transient"],
            block_count=merged["lyapunov.blocks"],
            seed=merged["run.seed"],
        )
        ic = tuple(float(c) for c in merged["integrator.ic"])
        if min(ic) < 0 or abs(sum(ic) - 1.0) > 1e-9:
            raise ValidationError(f"initial condition must be fractions summing to 1: {ic}")
        scan = _scan_spec(command, merged, model, integ, lyap, ic)
        if command == "simulate" and not merged["simulate.duration"] > 0:
            raise ValidationError("duration must be > 0")
        if command == "simulate" and not merged["simulate.dt"] > 0:
            raise ValidationError("dt must be > 0")
        if merged["simulate.divergence"] < 0:
            raise ValidationError("divergence must be >= 0")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(str(exc)) from None
    if command == "render" and merged["render.input"] is None:
        raise UsageError("render needs --csv PATH")
    if merged["render.kind"] is not None and merged["render.kind"] not in RENDER_KINDS:
        raise UsageError(f"--kind must be one of {', '.join(RENDER_KINDS)}")
    if merged["run.svg"] and merged["run.out"] is None and command != "render":
        raise UsageError("--svg needs --out PATH")

    return RunConfig(command=command, model=model, integ=integ, lyap=lyap, scan=scan,
                     ic=ic, output_path=merged["run.out"], svg=merged["run.svg"],
                     seed=merged["run.seed"], values=merged)


def _scan_spec(command, merged, model, integ, lyap, ic):
    if command in ("bifurcate", "lyapunov"):
        points = merged["scan.points"]
        if command == "lyapunov" and points == 1:
            return None
        return ScanSpec1D(parameter=merged["scan.param"], lo=merged["scan.lo"],
                          hi=merged["scan.hi"], points=points, base=model, integ=integ,
                          lyap=lyap, x0=ic, with_lyapunov=command == "lyapunov",
                          continuation=merged["scan.continuation"])
    if command == "sweep":
        (phi_lo, phi_hi), (a_lo, a_hi) = merged["scan.phi_range"], merged["scan.alpha_range"]
        p_pts, a_pts = merged["scan.grid"]
        return GridSpec2D(phi_lo=phi_lo, phi_hi=phi_hi, alpha_lo=a_lo, alpha_hi=a_hi,
                          phi_points=p_pts, alpha_points=a_pts, base=model, integ=integ,
                          lyap=lyap, x0=ic)
    return None


def format_value(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (ForcingShape, ScanParameter)):
        return value.value
    if isinstance(value, tuple):
        if len(value) == 2 and all(isinstance(v, int) for v in value):
            return f"{value[0]}x{value[1]}"
        return ",".join(format_value(float(v)) for v in value)
    return str(value)


def render_config(cfg: RunConfig) -> str:
    """Resolved configuration as ``key = value`` lines (re-parseable)."""
    lines = [f"artifact.version = {__version__}"]
    for key in KEYS:
        lines.append(f"{key.name} = {format_value(cfg.values[key.name])}")
    return "\n".join(lines) + "\n"
