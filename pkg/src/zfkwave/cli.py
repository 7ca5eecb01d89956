"""Command-line front end: ``zfkwave {speed,profile,portrait,series,pde,verify}``.

Every command writes CSV files and a ``manifest.json`` into ``--out``.
Settings come from flags, then a ``--config`` file of ``key = value`` lines
(or a previous manifest), then built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import DEFAULT_ORDER, KAPPA_FACTOR, build_series, cbar_linear, series_terms
from .charts import separatrix_hs, separatrix_hu
from .csvio import write_csv
from .model import Params, PhasePoint, SingularLimitError, normalized_vector_field
from .shooting import (
    ShootConfig,
    ShootingError,
    stable_trajectory,
    unstable_manifold,
    build_profile,
    find_min_speed,
    zfk_rhs,
)

log = logging.getLogger("zfkwave")

EXIT_OK, EXIT_COMPUTE, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "eps": "0.01",
    "c": "cbar",
    "out": "zfk_out",
    "jobs": 1,
    "force": False,
    "tol": 1e-10,
    "K": DEFAULT_ORDER,
    "N": 1000,
    "L": 10.0,
    "T": 4.0,
    "snapshots": 0,
    "theta_match": 12.0,
}
_TYPES = {"jobs": int, "K": int, "N": int, "snapshots": int, "tol": float, "L": float, "T": float,
          "theta_match": float}


class UsageError(Exception):
    pass


def decimal(text: str) -> float:
    """Parse a decimal literal; expressions such as ``1/100`` are rejected."""
    try:
        v = float(text)
    except ValueError:
        raise UsageError(f"not a decimal literal: {text!r}") from None
    if not math.isfinite(v):
        raise UsageError(f"not a finite number: {text!r}")
    return v


def eps_list(text: str) -> list[float]:
    return [decimal(t) for t in text.split(",") if t.strip()]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def load_config(path: str) -> dict:
    """Read ``key = value`` lines (``#`` comments allowed) or a JSON run manifest."""
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    text = p.read_text(encoding="utf-8")
    if p.suffix == ".json":
        data = json.loads(text)
        return {k: v for k, v in data.get("parameters", data).items() if k in DEFAULTS}
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        out[key] = value
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over config over defaults and coerce types."""
    cfg = load_config(args.config) if args.config else {}
    merged = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        merged[key] = flag if flag is not None else cfg.get(key, default)
    for key, kind in _TYPES.items():
        try:
            merged[key] = kind(merged[key])
        except (TypeError, ValueError):
            raise UsageError(f"bad value for {key}: {merged[key]!r}") from None
    merged["force"] = _bool(merged["force"])
    merged["eps"] = str(merged["eps"])
    merged["c"] = str(merged["c"])
    merged["out"] = str(merged["out"])
    if merged["jobs"] < 1:
        raise UsageError("--jobs must be >= 1")
    if not merged["tol"] > 0:
        raise UsageError("--tol must be positive")
    return merged


def write_manifest(out: Path, command: str, params: dict, files: list[Path]) -> Path:
    manifest = {
        "command": command,
        "parameters": params,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "outputs": sorted(p.name for p in files),
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _shoot_config(p: dict) -> ShootConfig:
    return ShootConfig(root_tol=p["tol"], Theta_match=p["theta_match"])


def _single_eps(p: dict) -> float:
    values = eps_list(p["eps"])
    if len(values) != 1:
        raise UsageError("this command takes a single --eps value")
    return values[0]


def _speed_arg(p: dict, eps: float) -> float:
    if p["c"] == "cbar":
        return find_min_speed(eps, _shoot_config(p), refine=False).cbar
    return decimal(p["c"])


# -- commands ------------------------------------------------------------------

def _speed_row(eps: float, tol: float, theta_match: float) -> list:
    try:
        cfg = ShootConfig(root_tol=tol, Theta_match=theta_match)
        r = find_min_speed(eps, cfg, refine=False)
        return [eps, r.cbar, cbar_linear(eps), (r.cbar - 1.0) / eps, r.gap_at_root, r.iterations, ""]
    except Exception as exc:  # recorded per row, the sweep continues
        msg = f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
        return [eps, math.nan, cbar_linear(eps) if eps >= 0 else math.nan, math.nan, math.nan, 0, msg]


def cmd_speed(p: dict, out: Path) -> tuple[list[Path], int]:
    values = eps_list(p["eps"])
    for e in values:
        if not 0 < e <= 0.1:
            raise UsageError(f"eps={e} outside (0, 0.1]")
    if p["jobs"] > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=p["jobs"]) as pool:
            rows = list(pool.map(_speed_row, values, [p["tol"]] * len(values), [p["theta_match"]] * len(values)))
    else:
        rows = [_speed_row(e, p["tol"], p["theta_match"]) for e in values]
    header = ("eps", "cbar", "cbar_linear", "slope", "gap_residual", "iterations", "error")
    path = write_csv(out / "speed.csv", header, rows)
    for r in rows:
        print(f"eps={r[0]}  cbar={r[1]!r}  linear={r[2]!r}" + (f"  error={r[6]}" if r[6] else ""))
    return [path], EXIT_COMPUTE if any(r[6] for r in rows) else EXIT_OK


def cmd_profile(p: dict, out: Path) -> tuple[list[Path], int]:
    eps = _single_eps(p)
    c = _speed_arg(p, eps)
    prof = build_profile(c, eps, _shoot_config(p), force=p["force"])
    path = write_csv(out / "profile.csv", ("z", "theta", "eta", "segment"),
                     zip(prof.z, prof.theta, prof.eta, prof.segments))
    print(f"c={c!r} eps={eps!r} samples={len(prof.z)} segments={sorted(prof.segment_set())}")
    for note in prof.notes:
        print(f"note: {note}")
    return [path], EXIT_OK


def cmd_portrait(p: dict, out: Path) -> tuple[list[Path], int]:
    eps = _single_eps(p)
    c = _speed_arg(p, eps) if eps > 0 else (1.0 if p["c"] == "cbar" else decimal(p["c"]))
    params = Params(c, eps)
    cfg = _shoot_config(p)
    files = []

    th2 = np.linspace(-cfg.Theta_match, 0.0, 1201)
    files.append(write_csv(out / "separatrix.csv", ("theta2", "hs", "hu"),
                           ((t, separatrix_hs(t), separatrix_hu(t)) for t in th2)))
    if eps == 0.0:
        # the inner chart collapses onto theta = 1
        files.append(write_csv(out / "stable_manifold.csv", ("theta", "eta"),
                               ((1.0, separatrix_hs(t)) for t in th2)))
        th = np.linspace(0.0, 1.0, 1001)
        files.append(write_csv(out / "unstable_manifold.csv", ("theta", "eta"), zip(th, c * th)))
    else:
        inner = stable_trajectory(params, cfg)
        th_s = list(1.0 + eps * inner.states[:, 0])
        eta_s = list(inner.states[:, 1])
        from .integrate import Event, integrate

        start = [th_s[-1], eta_s[-1]]
        back = integrate(zfk_rhs(c, eps), start, (0.0, -400.0), replace(cfg.integrator, abs_tol=1e-300),
                         [Event(lambda t, y: y[0] - cfg.delta0, terminal=True),
                          Event(lambda t, y: y[1], terminal=True)])
        th_s += list(back.states[1:, 0])
        eta_s += list(back.states[1:, 1])
        order = np.argsort(th_s)
        files.append(write_csv(out / "stable_manifold.csv", ("theta", "eta"),
                               zip(np.array(th_s)[order], np.array(eta_s)[order])))
        unst = unstable_manifold(params, cfg)
        files.append(write_csv(out / "unstable_manifold.csv", ("theta", "eta"),
                               zip(unst.states[:, 0], unst.states[:, 1])))
        top = 1.0 - KAPPA_FACTOR * eps
        if top > 0:
            series = build_series(c, p["K"])
            th = np.linspace(0.0, top, 801)
            rows = []
            for t in th:
                terms = series_terms(t, eps, series)
                rows.append((t, math.fsum(terms), abs(terms[-1])))
            files.append(write_csv(out / "slow_manifold.csv", ("theta", "eta", "last_term"), rows))

    rows = []
    for t in np.linspace(0.0, 1.5, 31):
        for e in np.linspace(-0.5, 1.5, 21):
            try:
                d = normalized_vector_field(PhasePoint(float(t), float(e)), params)
            except SingularLimitError:
                continue  # the eps = 0 limit is undefined on theta = 1
            rows.append((t, e, d[0], d[1]))
    files.append(write_csv(out / "field.csv", ("theta", "eta", "dtheta", "deta"), rows))
    print(f"portrait for c={c!r} eps={eps!r}: {len(files)} files")
    return files, EXIT_OK


def cmd_series(p: dict, out: Path) -> tuple[list[Path], int]:
    K = p["K"]
    if not 1 <= K <= 8:
        raise UsageError("K must lie in [1, 8]")
    c = 2.0 if p["c"] == "cbar" else decimal(p["c"])
    series = build_series(c, K)
    for k in range(1, K + 1):
        print(f"F{k} = {series.describe(k)}")
    rows = []
    for eps in eps_list(p["eps"]):
        if not eps > 0:
            raise UsageError("series grid needs eps > 0")
        top = 1.0 - KAPPA_FACTOR * eps
        if top <= 0:
            continue
        for t in np.linspace(0.0, top, 201):
            terms = series_terms(float(t), eps, series)
            rows.append((t, eps, math.fsum(terms), abs(terms[-1])))
    return [write_csv(out / "series.csv", ("theta", "eps", "h", "last_term"), rows)], EXIT_OK


def cmd_pde(p: dict, out: Path) -> tuple[list[Path], int]:
    from .pde import PdeConfig, pde_run, write_snapshots, write_track

    eps = _single_eps(p)
    if eps < 0.02 and not p["force"]:
        raise UsageError("pde runs are validated for eps >= 0.02; pass --force to override")
    c = _speed_arg(p, eps)
    prof = build_profile(c, eps, _shoot_config(p), force=p["force"])
    config = PdeConfig(L=p["L"], N=p["N"], T=p["T"])
    track = pde_run(config, eps, prof, snapshot_every=p["snapshots"])
    files = [write_track(track, out / "front.csv")]
    files += write_snapshots(track, out)
    rel = abs(track.speed_fit - c) / c
    print(f"speed_fit={track.speed_fit!r} c={c!r} rel_diff={rel:.3e} fit_residual={track.fit_residual:.3e} "
          f"clips={track.clip_count}" + (" truncated" if track.truncated else ""))
    return files, EXIT_OK


def cmd_verify(p: dict, out: Path) -> tuple[list[Path], int]:
    from .verify import run_all

    results = run_all()
    lines = [r.line() for r in results]
    for line in lines:
        print(line)
    path = out / "verify.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return [path], EXIT_OK if all(r.passed for r in results) else EXIT_COMPUTE


COMMANDS = {
    "speed": (cmd_speed, "minimal wave speed for each eps"),
    "profile": (cmd_profile, "wave profile z, theta, eta, segment"),
    "portrait": (cmd_portrait, "manifolds, separatrix, slow manifold and field grid"),
    "series": (cmd_series, "slow-manifold series coefficients and values"),
    "pde": (cmd_pde, "evolve the PDE from a computed profile and track the front"),
    "verify": (cmd_verify, "run the acceptance checks"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zfkwave", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"zfkwave {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eps", help="eps value, or comma-separated list for speed/series")
    common.add_argument("--c", help="wave speed, or 'cbar' for the computed minimal speed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", help="parallel workers for sweeps")
    common.add_argument("--config", help="key = value file, or a manifest.json to rerun")
    common.add_argument("--force", action="store_const", const=True, default=None,
                        help="skip connection / eps-range checks")
    common.add_argument("--tol", help="root tolerance on the gap")
    common.add_argument("--K", help="series order")
    common.add_argument("--N", help="PDE grid intervals")
    common.add_argument("--L", help="PDE half-domain length")
    common.add_argument("--T", help="PDE final time")
    common.add_argument("--snapshots", help="write a snapshot every n output intervals")
    common.add_argument("--theta-match", dest="theta_match", help="matching section depth Theta")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        params = resolve(args)
        out = Path(params["out"])
        out.mkdir(parents=True, exist_ok=True)
        func = COMMANDS[args.command][0]
        files, code = func(params, out)
    except UsageError as exc:
        print(f"zfkwave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ShootingError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"zfkwave: computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    write_manifest(out, args.command, params, files)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
