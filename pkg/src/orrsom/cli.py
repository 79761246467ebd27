"""Batch front end: profile -> pencil -> spectrum -> enclosure checks.

Every subcommand writes into ``--out`` and embeds its full configuration in
each file it produces. JSON outputs carry ``"schema": 1``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .eigensolver import (
    DRIFT_TOL,
    RESIDUAL_RTOL,
    Spectrum,
    spectrum_from_json,
    two_grid_spectrum,
)
from .enclosure import (
    SLACK,
    VARIANTS,
    HypothesisError,
    beta_decomposition,
    default_re_cap,
    essential_ray,
    region,
    region_boundary,
    verify_spectrum,
)
from .operator import SCHEMES, TestFunction, build_grid
from .profiles import (
    FlowProfile,
    make_blasius_profile,
    make_constant_profile,
    profile_bounds,
    read_profile_csv,
    write_sidecar,
)

log = logging.getLogger("orrsom")

MIN_NODES = 16


@dataclass(frozen=True)
class RunConfig:
    profile: str = "blasius"
    a: float = 0.179
    R: float = 580.0
    N: int = 128
    scheme: str = "truncated"
    xmax: float = 100.0  # X_max for truncation, L for the algebraic map
    residual_rtol: float = RESIDUAL_RTOL
    drift_tol: float = DRIFT_TOL
    slack: float = SLACK
    variant: str = "thm33"
    out: str = "."
    format: str = "csv"
    jobs: int = 1
    profile_xmax: float = 20.0
    profile_points: int = 401
    spectrum: str | None = None
    a_list: tuple[float, ...] = field(default_factory=tuple)
    R_list: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for name in ("a", "R", "xmax", "residual_rtol", "drift_tol", "slack", "profile_xmax"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.N <= 0 or self.jobs <= 0 or self.profile_points < 2:
            raise ValueError("N, jobs and profile_points must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        for v in self.variants:
            if v not in VARIANTS:
                raise ValueError(f"unknown variant {v!r}")
        if any(not x > 0 for x in (*self.a_list, *self.R_list)):
            raise ValueError("sweep values must be positive")
        parse_profile_spec(self.profile)

    @property
    def variants(self) -> list[str]:
        return [v.strip() for v in self.variant.split(",") if v.strip()]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["a_list"] = list(self.a_list)
        d["R_list"] = list(self.R_list)
        return d


def parse_profile_spec(spec: str) -> tuple[str, str | None]:
    kind, _, arg = spec.partition(":")
    if kind == "blasius" and not arg:
        return kind, None
    if kind == "constant" and arg:
        float(arg)
        return kind, arg
    if kind == "file" and arg:
        return kind, arg
    raise ValueError(f"profile must be blasius, constant:<c> or file:<path>, got {spec!r}")


_BLASIUS_CACHE: dict = {}


def load_profile(spec: str) -> FlowProfile:
    kind, arg = parse_profile_spec(spec)
    if kind == "blasius":
        if "p" not in _BLASIUS_CACHE:
            _BLASIUS_CACHE["p"] = make_blasius_profile()
        return _BLASIUS_CACHE["p"]
    if kind == "constant":
        return make_constant_profile(float(arg))
    try:
        return read_profile_csv(arg)
    except (OSError, ValueError, KeyError) as exc:
        raise SystemExit(f"cannot read profile file {arg}: {exc}") from exc


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------


def _dump(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


def _table(path: Path, cfg: RunConfig, header: list[str], rows) -> Path:
    """Write rows as CSV (config in leading '#' lines) or as JSON columns."""
    rows = [[float(v) for v in r] for r in rows]
    if cfg.format == "json":
        path = path.with_suffix(".json")
        payload = {"schema": 1, "config": cfg.to_dict(),
                   "columns": header, "rows": rows}
        return _dump(path, payload)
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(cfg.to_dict(), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) for v in r])
    path = path.with_suffix(".csv")
    path.write_text(buf.getvalue())
    return path


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_profile(cfg: RunConfig) -> list[Path]:
    p = load_profile(cfg.profile)
    out = _outdir(cfg)
    x = p.nodes if p.nodes is not None and p.kind == "tabulated" else np.linspace(
        0.0, cfg.profile_xmax, cfg.profile_points)
    v, dv, d2v = p.eval(x)
    table = _table(out / "profile", cfg, ["x", "V", "dV", "d2V"], zip(x, v, dv, d2v))
    written = [table]
    if cfg.format == "csv":
        written.append(write_sidecar(table, p.c, config=cfg.to_dict()))
    b = profile_bounds(p)
    bounds = _dump(out / "bounds.json", {"schema": 1, "config": cfg.to_dict(),
                                         "kind": p.kind, "bounds": b.to_dict()})
    return written + [bounds]


def compute_spectrum(cfg: RunConfig, profile: FlowProfile | None = None, a=None, R=None) -> Spectrum:
    profile = profile or load_profile(cfg.profile)
    a = cfg.a if a is None else a
    R = cfg.R if R is None else R
    return two_grid_spectrum(profile, a, R, cfg.N, cfg.scheme, cfg.xmax, cfg.drift_tol,
                             residual_rtol=cfg.residual_rtol)


def _empty_spectrum(cfg: RunConfig, a: float, R: float) -> Spectrum:
    meta = {"a": a, "R": R, "N": cfg.N, "X_max": cfg.xmax, "path": "skipped"}
    e = np.array([], dtype=complex)
    return Spectrum(e, np.array([]), np.array([], dtype=bool), np.array([]), meta,
                    {"drift_tol": cfg.drift_tol, "residual_rtol": cfg.residual_rtol})


def _spectrum_or_empty(cfg: RunConfig, profile=None, a=None, R=None) -> tuple[Spectrum, list[str]]:
    a = cfg.a if a is None else a
    R = cfg.R if R is None else R
    if cfg.N < MIN_NODES:
        msg = f"N={cfg.N} is too coarse (minimum {MIN_NODES}); no eigenvalues computed"
        log.warning(msg)
        return _empty_spectrum(cfg, a, R), [msg]
    return compute_spectrum(cfg, profile, a, R), []


def cmd_spectrum(cfg: RunConfig) -> list[Path]:
    s, warns = _spectrum_or_empty(cfg)
    if len(s) and not s.kept.any():
        log.warning("no eigenvalue survived filtering")
    payload = s.to_dict(config=cfg.to_dict(), warnings=warns)
    return [_dump(_outdir(cfg) / "spectrum.json", payload)]


def cmd_enclosure(cfg: RunConfig) -> list[Path]:
    p = load_profile(cfg.profile)
    b = profile_bounds(p)
    out = _outdir(cfg)
    ray = essential_ray(cfg.a, cfg.R, p.c)
    regs = [region(v, cfg.a, cfg.R, b) for v in cfg.variants]
    re_cap = max(default_re_cap(r) for r in regs)
    files = []
    pts = ray.points(re_cap)
    files.append(_table(out / "ray", cfg, ["re", "im"], zip(pts.real, pts.imag)))
    for reg in regs:
        poly = region_boundary(reg, re_cap)
        files.append(_table(out / f"region_{reg.variant}", cfg, ["re", "im"], zip(poly.real, poly.imag)))
    boxes = {}
    for v in ("cor32-box", "cor32-box-improved"):
        try:
            re_min, im_min, im_max = region(v, cfg.a, cfg.R, b).box()
        except HypothesisError:
            continue
        boxes[v] = {"re_min": re_min, "im_min": im_min, "im_max": im_max}
    payload = {"schema": 1, "config": cfg.to_dict(), "ray": {"base_re": ray.base.real,
               "base_im": ray.base.imag, "c": ray.c}, "re_cap": re_cap,
               "regions": [r.describe() for r in regs], "boxes": boxes}
    files.append(_dump(out / "box.json", payload))
    return files


def _verify(cfg: RunConfig, profile: FlowProfile, a: float, R: float, s: Spectrum):
    b = profile_bounds(profile)
    reg = region(cfg.variants[0], a, R, b)
    return verify_spectrum(s, reg, essential_ray(a, R, profile.c), cfg.slack)


def exit_code(verify_payload: dict) -> int:
    """0 iff every kept eigenvalue was inside the region."""
    return 0 if verify_payload["summary"]["all_inside"] else 1


def cmd_verify(cfg: RunConfig) -> tuple[list[Path], int]:
    p = load_profile(cfg.profile)
    warns: list[str] = []
    if cfg.spectrum:
        s = spectrum_from_json(Path(cfg.spectrum).read_text())
    else:
        s, warns = _spectrum_or_empty(cfg, p)
    report = _verify(cfg, p, cfg.a, cfg.R, s)
    payload = report.to_dict(config=cfg.to_dict(), warnings=warns)
    path = _dump(_outdir(cfg) / "verify.json", payload)
    return [path], exit_code(payload)


def _sweep_point(cfg: RunConfig, p: FlowProfile, a: float, R: float) -> dict:
    rec = {"a": a, "R": R}
    try:
        s, warns = _spectrum_or_empty(cfg, p, a, R)
        report = _verify(cfg, p, a, R, s)
        b = profile_bounds(p)
        g = build_grid(cfg.scheme, max(cfg.N, MIN_NODES), cfg.xmax)
        beta = beta_decomposition(g, p, a, R, TestFunction())
        rec.update({
            "n_eigenvalues": len(s),
            "n_kept": int(s.kept.sum()),
            "kept": [{"re": float(z.real), "im": float(z.imag)} for z in s.kept_eigenvalues],
            "summary": report.summary,
            "beta3_abs": abs(beta.beta3),
            "beta3_bound": b.dv_abs_max / (2.0 * a),
            "warnings": warns,
            "error": None,
        })
    except Exception as exc:  # recorded per point, the sweep goes on
        log.warning("sweep point a=%g R=%g failed: %s", a, R, exc)
        rec["error"] = f"{type(exc).__name__}: {exc}"
    return rec


def cmd_sweep(cfg: RunConfig) -> list[Path]:
    if not cfg.a_list or not cfg.R_list:
        raise ValueError("sweep needs non-empty --a-list and --R-list")
    p = load_profile(cfg.profile)
    points = [(a, R) for a in cfg.a_list for R in cfg.R_list]
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        records = list(pool.map(lambda ar: _sweep_point(cfg, p, *ar), points))
    payload = {"schema": 1, "config": cfg.to_dict(), "points": records}
    return [_dump(_outdir(cfg) / "sweep.json", payload)]


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(s) for s in text.split(",") if s.strip())


def build_parser() -> argparse.ArgumentParser:
    d = RunConfig()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--profile", default=d.profile, help="blasius | constant:<c> | file:<path.csv>")
    common.add_argument("--a", type=float, default=d.a, help="wave number")
    common.add_argument("--R", type=float, default=d.R, help="Reynolds number")
    common.add_argument("--N", type=int, default=d.N, help="collocation nodes (coarse grid)")
    common.add_argument("--xmax", type=float, default=d.xmax,
                        help="X_max (truncated) or L (algebraic map)")
    common.add_argument("--scheme", choices=SCHEMES, default=d.scheme)
    common.add_argument("--variant", default=d.variant,
                        help="comma separated subset of " + ",".join(VARIANTS))
    common.add_argument("--out", default=d.out, help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default=d.format)
    common.add_argument("--jobs", type=int, default=d.jobs)
    common.add_argument("--slack", type=float, default=d.slack)
    common.add_argument("--drift-tol", type=float, default=d.drift_tol)
    common.add_argument("--residual-rtol", type=float, default=d.residual_rtol)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="orrsom", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("profile", parents=[common], help="profile table and bounds")
    sp.add_argument("--profile-xmax", type=float, default=d.profile_xmax)
    sp.add_argument("--profile-points", type=int, default=d.profile_points)
    sub.add_parser("spectrum", parents=[common], help="two-grid filtered spectrum")
    sub.add_parser("enclosure", parents=[common], help="ray and region polylines")
    sv = sub.add_parser("verify", parents=[common], help="check spectrum against a region")
    sv.add_argument("--spectrum", default=None, help="verify this spectrum.json instead of solving")
    sw = sub.add_parser("sweep", parents=[common], help="verify over a grid of (a, R)")
    sw.add_argument("--a-list", type=_floats, required=True)
    sw.add_argument("--R-list", type=_floats, required=True)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    names = {f for f in RunConfig.__dataclass_fields__}
    kw = {k: v for k, v in vars(ns).items() if k in names}
    return RunConfig(**kw)


COMMANDS = {
    "profile": cmd_profile,
    "spectrum": cmd_spectrum,
    "enclosure": cmd_enclosure,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(ns)
    except ValueError as exc:
        print(f"orrsom: {exc}", file=sys.stderr)
        return 2
    try:
        result = COMMANDS[ns.command](cfg)
    except ValueError as exc:  # includes HypothesisError
        print(f"orrsom: {exc}", file=sys.stderr)
        return 2
    code = 0
    if isinstance(result, tuple):
        result, code = result
    for path in result:
        log.info("wrote %s", path)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
