"""Command-line front end: batch data emission as CSV or JSON.

Every output file opens with the fully resolved configuration (``# key =
value`` lines for CSV, a ``header`` object for JSON).  Feeding a file back via
``--config`` reproduces it byte for byte; wall-clock timings therefore go to
stderr only.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from math import gcd

import numpy as np

from . import __version__
from .cocycle import lyapunov_many
from .errors import DomainError, NumericalFailure, RootsFailed
from .hermitian import bands_fixed_theta, bands_union_theta, gap_report, ids_measure, localization_probe
from .nonhermitian import default_kappa_grid, default_theta_grid, hdelta_cloud
from .operator import AmoParams, Perturbation
from .potential import level_curves, potential_field
from .rational import Rational, cf_expand, convergents, preset, PRESETS
from .verify import CLAIMS, check_duality, check_equilibrium, check_localization, check_theorem1, check_thouless

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERIC, EXIT_USAGE = 0, 2, 3, 64

COMMANDS = ("bands", "butterfly", "ids", "lyapunov", "potential-field", "level-curve",
            "hdelta-cloud", "localize", "gaps", "verify")

DEFAULTS = {
    "beta": 1.0, "theta": 0.0, "delta": 1.0, "N": None, "M": None, "grid": None,
    "qmax": 13, "mode": "union", "depth": None, "E": 0.0, "level": None,
    "egrid": None, "ntheta": 64, "nkappa": 64, "samples": 5, "convergents": None,
}

# keys echoed into the header of each command's output, in order
COMMAND_KEYS = {
    "bands": ["alpha", "depth", "qmax", "beta", "theta", "mode"],
    "butterfly": ["beta", "qmax", "mode", "theta"],
    "ids": ["alpha", "depth", "qmax", "beta", "M"],
    "lyapunov": ["alpha", "depth", "qmax", "beta", "theta", "delta", "N", "egrid"],
    "potential-field": ["alpha", "depth", "qmax", "beta", "M", "grid"],
    "level-curve": ["alpha", "depth", "qmax", "beta", "delta", "M", "grid", "level"],
    "hdelta-cloud": ["alpha", "depth", "qmax", "beta", "delta", "ntheta", "nkappa"],
    "localize": ["alpha", "depth", "qmax", "beta", "theta", "E", "N"],
    "gaps": ["alpha", "depth", "qmax", "beta", "theta", "mode"],
    "verify": ["claim", "alpha", "depth", "qmax", "beta", "delta", "N", "M", "grid", "samples", "convergents"],
}

COMMAND_DEFAULTS = {
    "ids": {"M": 512},
    "lyapunov": {"N": 100_000},
    "potential-field": {"M": 2000, "grid": "200:200:-5:5:-3:3"},
    "level-curve": {"M": 2000, "grid": "200:200:-5:5:-3:3"},
    "localize": {"N": 2000},
}

INT_KEYS = {"N", "M", "qmax", "depth", "ntheta", "nkappa", "samples"}
FLOAT_KEYS = {"beta", "theta", "delta", "E", "level"}


# -- configuration ---------------------------------------------------------


def _coerce(key, value):
    if value is None or value == "None":
        return None
    try:
        if key in INT_KEYS:
            return int(value)
        if key in FLOAT_KEYS:
            return float(value)
    except ValueError:
        raise DomainError(f"{key}: cannot parse {value!r}") from None
    return str(value)


def read_config(path: str) -> dict:
    """``key = value`` lines; a leading ``#`` is allowed so output headers re-parse.

    JSON outputs are recognised by their ``header`` object.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DomainError(f"config: cannot read {path!r}: {exc.strerror}") from None
    if text.lstrip().startswith("{"):
        header = json.loads(text).get("header", {})
        return {k: v for k, v in header.items() if k != "version"}
    out = {}
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("#"):
            line = line[1:].strip()
        elif line and "=" not in line:
            break  # data section of a CSV
        if not line or "=" not in line:
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "version":
            continue
        out[key] = value
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("config", "out")}
    cfg.update(flags)
    command = cfg.get("command")
    if command in COMMAND_DEFAULTS:
        for k, v in COMMAND_DEFAULTS[command].items():
            if cfg.get(k) is None:
                cfg[k] = v
    return {k: _coerce(k, v) if k != "command" else v for k, v in cfg.items()}


def resolve_alpha(cfg: dict, rational: bool = True):
    """Rational from ``p/q``; presets and decimals go through their convergents."""
    spec = cfg.get("alpha")
    if spec is None:
        raise DomainError("alpha: missing (use --alpha p/q, a preset name or a decimal)")
    spec = str(spec)
    if "/" in spec:
        return Rational.parse(spec)
    if spec in PRESETS:
        x = preset(spec)
    else:
        try:
            x = float(spec)
        except ValueError:
            raise DomainError(f"alpha: cannot parse {spec!r}") from None
    depth = cfg.get("depth")
    if depth is None:
        if rational:
            raise DomainError("depth: a preset or decimal alpha needs --depth to pick a convergent")
        return x
    if not 0.0 < x < 1.0:
        raise DomainError(f"alpha: decimal value must lie in (0, 1), got {x!r}")
    conv = convergents(cf_expand(x, depth), cfg.get("qmax") or 10**6)
    if not conv:
        raise DomainError("alpha: no convergent within qmax")
    return conv[-1]


def parse_grid(spec: str):
    try:
        nx, ny, xmin, xmax, ymin, ymax = spec.split(":")
        nx, ny = int(nx), int(ny)
        rect = tuple(float(v) for v in (xmin, xmax, ymin, ymax))
    except ValueError:
        raise DomainError(f"grid: expected nx:ny:xmin:xmax:ymin:ymax, got {spec!r}") from None
    if nx < 2 or ny < 2:
        raise DomainError("grid: resolution must be >= 2 on each axis")
    if not (rect[0] < rect[1] and rect[2] < rect[3]):
        raise DomainError("grid: empty rectangle")
    return nx, ny, rect


# -- formatting ------------------------------------------------------------


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def header_items(cfg: dict) -> list[tuple[str, str]]:
    items = [("command", cfg["command"])]
    for key in COMMAND_KEYS[cfg["command"]]:
        v = cfg.get(key)
        if v is None:
            continue
        items.append((key, fmt(v) if isinstance(v, (int, float)) else str(v)))
    items.append(("version", __version__))
    return items


def render_csv(cfg: dict, columns: list[str], rows) -> str:
    buf = io.StringIO(newline="")
    for k, v in header_items(cfg):
        buf.write(f"# {k} = {v}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    return obj


def render_json(cfg: dict, body: dict) -> str:
    doc = {"header": dict(header_items(cfg))}
    doc.update(body)
    return json.dumps(_jsonable(doc), indent=2) + "\n"


def write_atomic(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- commands --------------------------------------------------------------


def _bands(cfg, alpha):
    if cfg["mode"] == "union":
        return bands_union_theta(alpha, cfg["beta"])
    if cfg["mode"] == "fixed":
        return bands_fixed_theta(alpha, cfg["beta"], cfg["theta"])
    raise DomainError(f"mode: expected fixed or union, got {cfg['mode']!r}")


def cmd_bands(cfg):
    bands = _bands(cfg, resolve_alpha(cfg))
    return render_csv(cfg, ["lower", "upper"], bands.intervals)


def cmd_butterfly(cfg):
    qmax = cfg["qmax"]
    if qmax is None or qmax < 1:
        raise DomainError("qmax: must be >= 1")
    rows = []
    for q in range(1, qmax + 1):
        for p in range(0, q + 1):
            if gcd(p, q) != 1:
                continue
            for lo, hi in _bands(cfg, Rational(p, q)).intervals:
                rows.append((p, q, lo, hi))
    return render_csv(cfg, ["p", "q", "lower", "upper"], rows)


def cmd_ids(cfg):
    mu = ids_measure(resolve_alpha(cfg), cfg["beta"], cfg["M"])
    return render_csv(cfg, ["E", "ids"], zip(mu.points, np.cumsum(mu.weights)))


def _egrid(cfg):
    spec = cfg.get("egrid")
    if spec is None:
        r = 2.0 + 2.0 * abs(cfg["beta"])
        spec = f"{-r}:{r}:81"
        cfg["egrid"] = spec
    try:
        lo, hi, n = spec.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    except ValueError:
        raise DomainError(f"egrid: expected emin:emax:n, got {spec!r}") from None


def cmd_lyapunov(cfg):
    alpha = resolve_alpha(cfg, rational=False)
    E = _egrid(cfg)
    params = AmoParams(alpha, cfg["beta"], cfg["theta"])
    gam = lyapunov_many(E, [params] * E.size, Perturbation(cfg["delta"]), cfg["N"])
    return render_csv(cfg, ["E", "lyapunov"], zip(E, gam))


def _field(cfg):
    alpha = resolve_alpha(cfg)
    nx, ny, rect = parse_grid(cfg["grid"])
    return potential_field(ids_measure(alpha, cfg["beta"], cfg["M"]), rect, nx, ny)


def cmd_potential_field(cfg):
    f = _field(cfg)
    X, Y = np.meshgrid(f.x, f.y)
    rows = zip(X.ravel(), Y.ravel(), f.values.ravel(), f.singular.ravel())
    return render_csv(cfg, ["x", "y", "value", "singular_flag"], rows)


def cmd_level_curve(cfg):
    if cfg.get("level") is None:
        cfg["level"] = math.log(abs(cfg["beta"])) + abs(math.log(cfg["delta"]))
    f = _field(cfg)
    rows = []
    for cid, pl in enumerate(level_curves(f, cfg["level"])):
        rows.extend((cid, z.real, z.imag, pl.closed) for z in pl.points)
    return render_csv(cfg, ["curve_id", "x", "y", "closed"], rows)


def cmd_hdelta_cloud(cfg):
    alpha = resolve_alpha(cfg)
    cloud = hdelta_cloud(
        alpha, cfg["beta"], Perturbation(cfg["delta"]),
        default_theta_grid(alpha.q, cfg["ntheta"]), default_kappa_grid(cfg["nkappa"]),
    )
    if cloud.failed:
        raise RootsFailed(f"{cloud.failed} (theta, kappa) fibers failed to converge after the per-row retry")
    rows = zip(cloud.points.real, cloud.points.imag, cloud.theta_index, cloud.kappa_index)
    return render_csv(cfg, ["re", "im", "theta_index", "kappa_index"], rows)


def cmd_localize(cfg):
    alpha = resolve_alpha(cfg, rational=False)
    res = localization_probe(AmoParams(alpha, cfg["beta"], cfg["theta"]), cfg["E"], cfg["N"])
    body = {
        "eigenvalue": res.eigenvalue, "decay_rate": res.decay_rate, "fit_residual": res.fit_residual,
        "iterations": res.iterations, "residual": res.residual, "peak": res.peak,
    }
    return render_json(cfg, body)


def cmd_gaps(cfg):
    rep = gap_report(_bands(cfg, resolve_alpha(cfg)))
    body = {
        "total_measure": rep.total_measure, "band_count": rep.band_count,
        "gaps": [list(g) for g in rep.gaps], "exploratory": True,
    }
    return render_json(cfg, body)


def _theorem1_convergents(cfg):
    spec = cfg.get("convergents")
    if spec:
        return [Rational.parse(s.strip()) for s in str(spec).split(",")]
    if "/" in str(cfg.get("alpha", "")):
        return [resolve_alpha(cfg)]
    depth = cfg.get("depth") or 40
    x = preset(cfg["alpha"]) if cfg["alpha"] in PRESETS else float(cfg["alpha"])
    conv = [c for c in convergents(cf_expand(x, depth), cfg["qmax"]) if c.q >= 2]
    return conv[-3:]


def cmd_verify(cfg):
    claim = cfg.get("claim")
    if claim not in CLAIMS:
        raise DomainError(f"claim: expected one of {', '.join(CLAIMS)}, got {claim!r}")
    beta = cfg["beta"]
    if claim == "duality":
        rep = check_duality(resolve_alpha(cfg), beta)
    elif claim == "thouless":
        cfg["N"] = cfg["N"] or 100_000
        cfg["M"] = cfg["M"] or 4000
        rep = check_thouless(resolve_alpha(cfg), beta, None, cfg["N"], cfg["M"])
    elif claim == "equilibrium":
        cfg["M"] = cfg["M"] or 512
        rep = check_equilibrium(resolve_alpha(cfg), beta, cfg["M"])
    elif claim == "theorem1":
        cfg["M"] = cfg["M"] or 2000
        n = int(cfg["grid"]) if cfg.get("grid") else 400
        cfg["grid"] = str(n)
        conv = _theorem1_convergents(cfg)
        cfg["convergents"] = ",".join(str(c) for c in conv)
        rep = check_theorem1(conv, beta, cfg["delta"], n, cfg["M"])
    else:
        cfg["N"] = cfg["N"] or 2000
        rep = check_localization(resolve_alpha(cfg), beta, cfg["samples"], cfg["N"])
    print(f"verify {claim}: runtime {rep.runtime:.2f} s", file=sys.stderr)
    return render_json(cfg, rep.to_dict())


HANDLERS = {
    "bands": cmd_bands, "butterfly": cmd_butterfly, "ids": cmd_ids, "lyapunov": cmd_lyapunov,
    "potential-field": cmd_potential_field, "level-curve": cmd_level_curve,
    "hdelta-cloud": cmd_hdelta_cloud, "localize": cmd_localize, "gaps": cmd_gaps, "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="amo-toolkit", description="Almost Mathieu operator toolkit: batch CSV/JSON emitter.")
    ap.add_argument("command", nargs="?", help="one of: " + ", ".join(COMMANDS))
    ap.add_argument("claim", nargs="?", help="claim for verify: " + ", ".join(CLAIMS))
    ap.add_argument("--alpha", help="p/q, a preset (golden, liouville4) or a decimal with --depth")
    ap.add_argument("--depth", type=int, help="continued-fraction depth for preset/decimal alpha")
    ap.add_argument("--beta", type=float)
    ap.add_argument("--theta", type=float)
    ap.add_argument("--delta", type=float)
    ap.add_argument("--N", type=int)
    ap.add_argument("--M", type=int)
    ap.add_argument("--grid", help="nx:ny:xmin:xmax:ymin:ymax (verify theorem1: a single size)")
    ap.add_argument("--qmax", type=int)
    ap.add_argument("--mode", choices=("fixed", "union"))
    ap.add_argument("--E", type=float, help="target energy for localize")
    ap.add_argument("--level", type=float, help="level for level-curve (default log beta + |log delta|)")
    ap.add_argument("--egrid", help="emin:emax:n energies for lyapunov (write --egrid=-3:3:61 when emin is negative)")
    ap.add_argument("--ntheta", type=int)
    ap.add_argument("--nkappa", type=int)
    ap.add_argument("--samples", type=int)
    ap.add_argument("--convergents", help="comma-separated p/q list for verify theorem1")
    ap.add_argument("--out", help="output path (default stdout)")
    ap.add_argument("--config", help="key = value file; any output file of this tool also works")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    command = cfg.get("command")
    if command not in HANDLERS:
        parser.print_usage(sys.stderr)
        print(f"error: unknown command {command!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        text = HANDLERS[command](cfg)
        write_atomic(args.out, text)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
