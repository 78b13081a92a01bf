"""Batch command-line front end.

Exit codes: 0 success, 1 usage or validation error, 2 numerical failure,
3 I/O error.
"""

from __future__ import annotations

import io
import logging
import os
import sys
from typing import Sequence

import numpy as np

from .config import RunConfig, UsageError, parse_args, render_config
from .csvio import CsvFormatError, write_csv
from .errors import IntegrationError, ValidationError
from .integrate import divergence_demo, integrate
from .lyapunov import largest_exponent
from .model import basic_reproduction_number, equilibria, jacobian
from .scan import bifurcation_scan, density_grid, lyapunov_scan_1d
from .svg import render_svg

log = logging.getLogger("sirphase")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class PartialFailure(Exception):
    """Some scan points failed; output was still written."""


def cmd_simulate(cfg: RunConfig, workers=None):
    duration, dt = cfg.get("simulate.duration"), cfg.get("simulate.dt")
    delta = cfg.get("simulate.divergence")
    if delta > 0:
        first, second = divergence_demo(cfg.ic, delta, cfg.model, cfg.integ, duration, dt)
        columns = ["t", "S", "I", "R", "S2", "I2", "R2"]
        rows = (np.concatenate(([t], a, b)) for t, a, b in
                zip(first.times, first.states, second.states))
    else:
        traj = integrate(cfg.ic, 0.0, duration, cfg.model, cfg.integ, dt)
        columns = ["t", "S", "I", "R"]
        rows = (np.concatenate(([t], x)) for t, x in zip(traj.times, traj.states))
    return columns, rows, 0


def _scan_value(cfg: RunConfig) -> float:
    name = cfg.get("scan.param").value
    return cfg.model.forcing.epsilon if name == "epsilon" else cfg.model.vaccination.phi


def cmd_bifurcate(cfg: RunConfig, workers=None):
    result = bifurcation_scan(cfg.scan, workers)
    rows, failed = [], 0
    for point in result.points:
        if point.failed:
            failed += 1
            rows.append([point.value, -1, np.nan, np.nan])
            continue
        for k, (s, i, _) in enumerate(point.samples):
            rows.append([point.value, k, s, i])
    return ["param", "sample_index", "S", "I"], rows, failed


def cmd_lyapunov(cfg: RunConfig, workers=None):
    columns = ["param", "lambda1", "std_error"]
    if cfg.scan is None:
        est = largest_exponent(cfg.ic, cfg.model, cfg.lyap, cfg.integ)
        return columns, [[_scan_value(cfg), est.lambda1, est.std_error]], 0
    result = lyapunov_scan_1d(cfg.scan, workers)
    rows = [[pt.value, pt.lambda1, pt.std_error] for pt in result.points]
    return columns, rows, sum(pt.failed for pt in result.points)


def cmd_sweep(cfg: RunConfig, workers=None):
    cells = density_grid(cfg.scan, workers)
    rows = [[c.phi, c.alpha, c.lambda1, c.bin.value if c.bin else "FAILED"] for c in cells]
    return ["phi", "alpha", "lambda1", "bin"], rows, sum(c.error is not None for c in cells)


def cmd_equilibria(cfg: RunConfig, workers=None):
    eq = equilibria(cfg.model)
    r0 = basic_reproduction_number(cfg.model)
    unforced = cfg.model.with_values(epsilon=0.0, v0=0.0, alpha=0.0)
    rows = []
    for name, point, physical in (("DFE", eq.disease_free, True),
                                  ("EE", eq.endemic, eq.endemic_physical)):
        eig = np.linalg.eigvals(jacobian(0.0, point, unforced))
        stable = int(np.all(eig.real < 0))
        rows.append([name, *point, r0, int(physical), stable])
    return ["point", "S", "I", "R", "R0", "physical", "stable"], rows, 0


COMMANDS = {
    "simulate": cmd_simulate,
    "bifurcate": cmd_bifurcate,
    "lyapunov": cmd_lyapunov,
    "sweep": cmd_sweep,
    "equilibria": cmd_equilibria,
}

SVG_KIND = {
    "simulate": "timeseries",
    "bifurcate": "bifurcation",
    "lyapunov": "lyapunov-curve",
    "sweep": "density",
}


def run(cfg: RunConfig, workers: int | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    if cfg.command == "render":
        return _render(cfg, stdout)

    columns, rows, failed = COMMANDS[cfg.command](cfg, workers)
    buffer = io.StringIO()
    write_csv(buffer, render_config(cfg), columns, rows)
    text = buffer.getvalue()
    _emit(cfg.output_path, text, stdout)
    if cfg.svg and cfg.command in SVG_KIND:
        _emit(os.path.splitext(cfg.output_path)[0] + ".svg",
              render_svg(text, SVG_KIND[cfg.command]), stdout)
    if failed:
        raise PartialFailure(f"{failed} scan point(s) failed; see rows marked nan/FAILED")
    return EXIT_OK


def _render(cfg: RunConfig, stdout) -> int:
    with open(cfg.get("render.input"), encoding="utf-8") as fh:
        text = fh.read()
    _emit(cfg.output_path, render_svg(text, cfg.get("render.kind")), stdout)
    return EXIT_OK


def _emit(path, text, stdout):
    if path is None or path == "-":
        stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg, workers = parse_args(argv)
        return run(cfg, workers)
    except UsageError as exc:
        log.error("usage: %s", exc)
        return EXIT_USAGE
    except ValidationError as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_USAGE
    except (CsvFormatError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except IntegrationError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except PartialFailure as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        log.error("i/o error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
