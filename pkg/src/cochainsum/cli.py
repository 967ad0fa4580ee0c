"""Command-line interface.

Every subcommand reads an optional flat ``key = value`` config file
(``--config``); command-line flags override file values and unknown keys are
rejected.  ``--dry-run`` prints the resolved configuration and exits.

Exit codes: 0 success, 1 error, 2 not converged / check failed.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import exprlang, mesh
from .cochain import GroupCochain, PairCochain, alt, box_sampler, pair_cochain_from_expr, point_function_from_expr
from .mesh import SubdivisionScheme, TangentVector
from .moyal import StarParams, loop_action, star_product
from .quadrature import builtin_cochains, one_form_cochain, refine_to_limit, top_form_cochain
from .vanest import jet_residual_slope, ve_common_source, ve_nerve_alternating

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


class ConfigError(ValueError):
    pass


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(exprlang.evaluate(exprlang.parse(part))) for part in str(text).split(",") if part.strip()]


def _ints(text) -> list:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(part) for part in str(text).split(",") if part.strip()]


def _number(text) -> float:
    return float(exprlang.evaluate(exprlang.parse(str(text))))


# key -> (parser, default, help).  Defaults of None mean "unset".
COMMON = {
    "threads": (int, 1, "worker threads for simplex evaluation"),
    "seed": (int, 0, "seed for sample points"),
}

SCHEMAS = {
    "integrate": {
        "mesh": (str, "square(1)", "mesh spec: interval(a,b[,k]), square(k), cube(k), torus(k,P1,P2), icosphere(l), file:PATH"),
        "cochain": (str, None, "built-in cochain name or expression in xK_I"),
        "form": (str, None, "coefficient expression in x, y, z (or x_0, x_1, ...) or a function name such as sin"),
        "rule": (str, "average", "1-form rule: left, right, average"),
        "antisymmetrize": (_bool, False, "apply Alt to the top-form cochain"),
        "scheme": (str, "barycentric", "subdivision scheme: barycentric or edgewise"),
        "tol": (float, 1e-6, "convergence tolerance"),
        "max_levels": (int, 8, "number of subdivision levels"),
        "reference": (str, None, "reference value expression"),
        "full": (_bool, False, "keep refining after convergence"),
        "csv": (str, None, "CSV output path"),
        "report": (str, None, "JSON report output path"),
    },
    "vanest": {
        "cochain": (str, "det", "built-in cochain name or expression in xK_I"),
        "form": (str, None, "top-form coefficient expression (builds f * simplex volume)"),
        "antisymmetrize": (_bool, False, "apply Alt before differentiating"),
        "dim": (int, 2, "chart dimension for 'form'"),
        "axes": (str, None, "comma-separated axes (default 0..n-1)"),
        "samples": (int, 25, "number of sample points"),
        "box": (str, None, "sample box 'lo,hi' (default: the cochain's box)"),
        "h": (float, 1e-3, "finite-difference step"),
        "richardson": (_bool, True, "one Richardson step"),
        "method": (str, "common_source", "common_source, nerve, or both"),
        "target": (str, None, "expected coefficient expression"),
        "tol": (float, 1e-6, "allowed deviation from the target"),
        "csv": (str, None, "CSV output path"),
    },
    "jetcheck": {
        "cochain": (str, None, "built-in cochain name or expression in xK_I"),
        "form": (str, None, "top-form coefficient expression (builds f * simplex volume)"),
        "antisymmetrize": (_bool, False, "apply Alt to the top-form cochain"),
        "dim": (int, 2, "chart dimension for 'form'"),
        "point": (str, None, "base point 'x,y,...' (default: box centre)"),
        "frame": (str, None, "frame vectors 'a,b;c,d' (default: a fixed skewed frame)"),
        "scales": (str, "3:8", "exponent range 'k0:k1' for scales 2^-k0 .. 2^-k1, or explicit list"),
        "threshold": (float, None, "required slope (default n + 0.5)"),
    },
    "star": {
        "f": (str, "exp(-(q^2+p^2)/50)", "left factor, expression in q, p"),
        "g": (str, "exp(-(q^2+p^2)/50)", "right factor, expression in q, p"),
        "q": (float, 0.0, "evaluation point q"),
        "p": (float, 0.0, "evaluation point p"),
        "hbar": (float, 1.0, "Planck constant"),
        "L": (float, 30.0, "grid half-width"),
        "N": (int, 640, "intervals per axis"),
        "eps_ladder": (str, "0.01,0.005,0.0025", "regulator ladder"),
        "convention": (str, "standard", "kernel convention: standard or literal"),
        "output": (str, None, "JSON output path"),
    },
    "loop": {
        "input": (str, None, "CSV file of (q, p) rows"),
        "rule": (str, "average", "left, right, average"),
        "output": (str, None, "JSON output path"),
    },
    "mesh": {
        "mesh": (str, "square(1)", "mesh spec"),
        "subdivide": (int, 0, "subdivision levels to apply"),
        "scheme": (str, "barycentric", "subdivision scheme"),
        "output": (str, None, "mesh file to write"),
    },
}


def read_config(path) -> dict:
    """Read a flat ``key = value`` file (``#`` comments allowed)."""
    text = Path(path).read_text()
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if parser.sections() != ["run"]:
        raise ConfigError(f"config {path} must be flat key = value lines without sections")
    return dict(parser["run"])


def resolve_config(command: str, file_values: dict, flag_values: dict) -> dict:
    schema = {**COMMON, **SCHEMAS[command]}
    unknown = sorted(set(file_values) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config key(s) for '{command}': {', '.join(unknown)}")
    cfg = {}
    for key, (conv, default, _) in schema.items():
        raw = flag_values.get(key)
        if raw is None:
            raw = file_values.get(key)
        if raw is None:
            cfg[key] = default
            continue
        try:
            cfg[key] = conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from exc
    if cfg["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    return cfg


# ------------------------------------------------------------------ builders

_MESH_SPEC = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$")


def build_mesh(spec: str) -> mesh.Triangulation:
    """Build a mesh from ``name(args)`` or ``file:PATH``."""
    if spec.startswith("file:"):
        return mesh.load_mesh(spec[5:])
    m = _MESH_SPEC.match(spec)
    if m is None:
        raise ConfigError(f"bad mesh spec {spec!r}")
    name, args = m.group(1), _floats(m.group(2)) if m.group(2).strip() else []
    if name == "interval":
        if len(args) not in (2, 3):
            raise ConfigError("interval(a, b[, pieces])")
        a, b = args[:2]
        k = int(args[2]) if len(args) == 3 else 1
        return mesh.interval_partition(a, b, np.linspace(a, b, k + 1)[1:-1])
    if name in ("square", "cube") and len(args) == 1:
        return (mesh.unit_square_grid if name == "square" else mesh.unit_cube_grid)(int(args[0]))
    if name == "torus" and len(args) in (1, 3):
        return mesh.flat_torus_grid(int(args[0]), tuple(args[1:]) if len(args) == 3 else (1.0, 1.0))
    if name == "icosphere" and len(args) == 1:
        return mesh.icosphere(int(args[0]))
    raise ConfigError(f"bad mesh spec {spec!r}")


def _form_function(src: str):
    src = src.strip()
    if src in exprlang.FUNCTIONS and exprlang.FUNCTIONS[src][0] == 1:
        src = f"{src}(x)"
    return point_function_from_expr(src)


def build_cochain(cfg: dict, dim: int | None = None, degree: int | None = None):
    """Cochain from ``cochain`` (built-in name or xK_I expression) or ``form``."""
    if cfg.get("form"):
        f = _form_function(cfg["form"])
        if dim is None:
            dim = cfg.get("dim") or 2
        if degree == 1 and dim == 1:
            return one_form_cochain([f], cfg.get("rule", "average"), box=(0.0, 1.0))
        om = top_form_cochain(f, dim)
        return alt(om) if cfg.get("antisymmetrize") else om
    name = cfg.get("cochain")
    if not name:
        raise ConfigError("either 'cochain' or 'form' is required")
    lib = builtin_cochains()
    if name in lib:
        om = lib[name]
    else:
        om = pair_cochain_from_expr(name, degree=degree, dim=dim)
    return alt(om) if cfg.get("antisymmetrize") and isinstance(om, PairCochain) else om


# ------------------------------------------------------------------ commands

def cmd_integrate(cfg: dict, out) -> int:
    T = build_mesh(cfg["mesh"])
    om = build_cochain(cfg, dim=T.ambient_dim, degree=T.dim)
    if isinstance(om, GroupCochain):
        raise ConfigError("integrate needs a pair-groupoid cochain")
    ref = None if cfg["reference"] is None else _number(cfg["reference"])
    rep = refine_to_limit(om, T, SubdivisionScheme(cfg["scheme"]), cfg["tol"], cfg["max_levels"],
                          reference=ref, threads=cfg["threads"], stop_on_convergence=not cfg["full"])
    rep.write(cfg["csv"], cfg["report"])
    if cfg["csv"] is None:
        out.write(rep.to_csv())
    last = rep.levels[-1]
    print(f"levels={len(rep.levels)} sum={last.sum_real!r}{last.sum_imag:+.3e}j "
          f"converged={rep.converged} fitted_order={rep.fitted_order}", file=sys.stderr)
    return EXIT_OK if rep.converged else EXIT_FAIL


def cmd_vanest(cfg: dict, out) -> int:
    om = build_cochain(cfg)
    n, dim = om.degree, om.dim
    axes = tuple(_ints(cfg["axes"])) if cfg["axes"] else tuple(range(n))
    if cfg["samples"] < 1:
        raise ConfigError("empty sample grid: samples must be >= 1")
    if cfg["method"] not in ("common_source", "nerve", "both"):
        raise ConfigError(f"unknown method {cfg['method']!r}")
    if cfg["box"]:
        lo, hi = _floats(cfg["box"])
    elif isinstance(om, PairCochain):
        lo, hi = om.box
    else:
        lo, hi = -1.0, 1.0
    pts = box_sampler(lo, hi, 1, dim, cfg["samples"], cfg["seed"])[:, 0, :]
    target = point_function_from_expr(cfg["target"]) if cfg["target"] else None
    vecs = [np.eye(dim)[a] for a in axes]
    rows, worst = [], 0.0
    for x in pts:
        base = None if isinstance(om, GroupCochain) else x
        row = {"point": ";".join(repr(float(v)) for v in x)}
        vals = []
        if cfg["method"] in ("common_source", "both"):
            r = ve_common_source(om, base, axes, cfg["h"], cfg["richardson"])
            row["common_source"], row["cs_error"] = r.value.real, r.error
            vals.append(r.value)
        if cfg["method"] in ("nerve", "both"):
            r = ve_nerve_alternating(om, base, vecs, cfg["h"], cfg["richardson"])
            row["nerve"], row["nerve_error"] = r.value.real, r.error
            vals.append(r.value)
        if len(vals) == 2:
            worst = max(worst, abs(vals[0] - vals[1]))
        if target is not None:
            t = float(target(x[None])[0])
            row["target"] = t
            worst = max(worst, max(abs(v - t) for v in vals))
        rows.append(row)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    if cfg["csv"]:
        Path(cfg["csv"]).write_text(buf.getvalue())
    else:
        out.write(buf.getvalue())
    compared = target is not None or cfg["method"] == "both"
    print(f"samples={len(rows)} max_deviation={worst!r}", file=sys.stderr)
    return EXIT_FAIL if compared and worst > cfg["tol"] else EXIT_OK


def _scales(text: str) -> np.ndarray:
    if ":" in text:
        k0, k1 = (int(v) for v in text.split(":"))
        return 2.0 ** -np.arange(k0, k1 + 1)
    return np.array(_floats(text))


def cmd_jetcheck(cfg: dict, out) -> int:
    om = build_cochain(cfg)
    if not isinstance(om, PairCochain):
        raise ConfigError("jetcheck needs a pair-groupoid cochain")
    n, dim = om.degree, om.dim
    threshold = n + 0.5 if cfg["threshold"] is None else cfg["threshold"]
    if threshold <= n:
        raise ConfigError(f"threshold {threshold} must exceed the degree {n}")
    lo, hi = om.box
    point = np.array(_floats(cfg["point"])) if cfg["point"] else np.full(dim, 0.5 * (lo + hi)) + 0.1 * np.arange(dim)
    if cfg["frame"]:
        frame = [np.array(_floats(v)) for v in cfg["frame"].split(";")]
    else:
        frame = [np.eye(dim)[k] + 0.25 * np.eye(dim)[(k + 1) % dim] for k in range(n)]
    res = jet_residual_slope(om, point, [TangentVector(point, v) for v in frame], _scales(cfg["scales"]))
    ok = res.passes(threshold)
    report = {
        "degree": n,
        "threshold": threshold,
        "slope": res.slope,
        "exact": res.exact,
        "scales": list(res.scales),
        "residuals": [float(r) for r in res.residuals],
        "status": "exact-to-precision" if res.exact else ("pass" if ok else "fail"),
    }
    out.write(json.dumps(report, indent=2) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


def _phase_function(src: str):
    tree = exprlang.parse(src)
    extra = exprlang.free_variables(tree) - {"q", "p"}
    if extra:
        raise ConfigError(f"phase-space expressions may only use q and p, found {sorted(extra)}")

    def f(q, p):
        return exprlang.evaluate(tree, {"q": q, "p": p})

    return f


def cmd_star(cfg: dict, out) -> int:
    params = StarParams(cfg["hbar"], cfg["L"], cfg["N"], tuple(_floats(cfg["eps_ladder"])), cfg["convention"])
    res = star_product(_phase_function(cfg["f"]), _phase_function(cfg["g"]), (cfg["q"], cfg["p"]), params)
    report = {"f": cfg["f"], "g": cfg["g"], "q": cfg["q"], "p": cfg["p"], "params": params.to_dict(), **res.to_dict()}
    text = json.dumps(report, indent=2) + "\n"
    if cfg["output"]:
        Path(cfg["output"]).write_text(text)
    out.write(text)
    return EXIT_OK


def read_loop(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except (ValueError, IndexError):
                if rows:
                    raise ConfigError(f"bad loop row {rec!r} in {path}")
                # header line
    return np.array(rows).reshape(-1, 2)


def cmd_loop(cfg: dict, out) -> int:
    if not cfg["input"]:
        raise ConfigError("loop needs an input CSV of (q, p) rows")
    value = loop_action(cfg["rule"], read_loop(cfg["input"]))
    text = json.dumps({"rule": cfg["rule"], "value": value}) + "\n"
    if cfg["output"]:
        Path(cfg["output"]).write_text(text)
    out.write(text)
    return EXIT_OK


def cmd_mesh(cfg: dict, out) -> int:
    T = build_mesh(cfg["mesh"])
    for _ in range(cfg["subdivide"]):
        T = mesh.subdivide(T, SubdivisionScheme(cfg["scheme"]))
    audit = mesh.orientation_audit(T)
    if cfg["output"]:
        mesh.save_mesh(T, cfg["output"])
    out.write(json.dumps({
        "name": T.name, "dim": T.dim, "ambient_dim": T.ambient_dim, "vertices": T.n_vertices,
        "simplices": T.n_simplices, "max_diameter": T.max_diameter,
        "boundary_faces": len(audit.boundary_faces), "audit_passed": audit.passed,
    }, indent=2) + "\n")
    return EXIT_OK if audit.passed else EXIT_FAIL


COMMANDS = {
    "integrate": cmd_integrate,
    "vanest": cmd_vanest,
    "jetcheck": cmd_jetcheck,
    "star": cmd_star,
    "loop": cmd_loop,
    "mesh": cmd_mesh,
}

HELP = {
    "integrate": "Riemann sums under refinement, CSV per level",
    "vanest": "van Est coefficients at sample points",
    "jetcheck": "jet residual slope of a cochain",
    "star": "Moyal star product at a phase-space point",
    "loop": "discrete p dq action of a closed polygon",
    "mesh": "build, audit and save a mesh",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cochainsum", description="Coordinate-free Riemann sums, van Est and Moyal tools.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name, help=HELP[name], description=HELP[name])
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--dry-run", action="store_true", help="print the resolved config and exit")
        for key, (_, default, help_text) in {**COMMON, **schema}.items():
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                            help=f"{help_text} (default: {default})")
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "dry_run")}
    try:
        file_values = read_config(args.config) if args.config else {}
        cfg = resolve_config(args.command, file_values, flags)
        if args.dry_run:
            out.write(json.dumps({"command": args.command, **cfg}, indent=2, sort_keys=True) + "\n")
            return EXIT_OK
        return COMMANDS[args.command](cfg, out)
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
