"""Command-line front end: ``element-analysis {detect,simulate,synth,spectrum}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cwt import build_grid, transform
from .errors import ConfigurationError, MonteCarloFloorError, NumericalError
from .noise import (NoiseModel, RateTableCache, cache_key, estimate_amplitude, load_tables,
                    save_tables, simulate_maxima, wavelet_spectrum)
from .pipeline import AnalysisConfig, event_regions, run
from .synth import paper_synthetic, red_noise, white_noise

log = logging.getLogger("element_analysis")

EVENTS_SCHEMA = "element-events/1"
CONFIG_SCHEMA = "element-config/1"


class InputError(ValueError):
    """Malformed input file."""


# ------------------------------------------------------------------ input / output


PATH_KEYS = ("input", "out_dir", "output", "length")


def read_config(path: str | None, paths: dict | None = None) -> AnalysisConfig:
    """Load an ``element-config/1`` file.

    The file holds ``AnalysisConfig`` fields plus the optional run keys
    ``input``, ``out_dir``, ``output`` and ``length``, which are copied into
    ``paths`` when given.  Any other key is rejected.
    """
    if path is None:
        return AnalysisConfig()
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: configuration must be a JSON object")
    schema = doc.pop("schema", CONFIG_SCHEMA)
    if schema != CONFIG_SCHEMA:
        raise ConfigurationError(f"{path}: unsupported config schema {schema!r}")
    for k in PATH_KEYS:
        if k in doc:
            v = doc.pop(k)
            if paths is not None:
                paths[k] = v
    return AnalysisConfig.from_dict(doc)


def read_series(path: str) -> dict:
    """Read ``t,value`` or ``segment,t,value`` CSV into per-segment arrays.

    Returns a mapping of segment label to ``(t0, values, missing)``.  Empty
    values and integer times skipped within a segment are marked missing.
    """
    segments: dict[str, list[tuple[int, float | None]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        if header == ["t", "value"]:
            multi = False
        elif header == ["segment", "t", "value"]:
            multi = True
        else:
            raise InputError(f"{path}:1: header must be 't,value' or 'segment,t,value'")
        width = len(header)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise InputError(f"{path}:{line}: expected {width} columns, got {len(row)}")
            seg = row[0].strip() if multi else ""
            t_text, v_text = row[-2].strip(), row[-1].strip()
            try:
                t = int(t_text)
            except ValueError:
                raise InputError(f"{path}:{line}: time {t_text!r} is not an integer") from None
            if v_text == "":
                v = None
            else:
                try:
                    v = float(v_text)
                except ValueError:
                    raise InputError(f"{path}:{line}: value {v_text!r} is not a number") from None
                if not math.isfinite(v):
                    v = None
            rows = segments.setdefault(seg, [])
            if rows and t <= rows[-1][0]:
                raise InputError(f"{path}:{line}: times must increase within a segment")
            rows.append((t, v))
    if not segments:
        raise InputError(f"{path}: no data rows")
    out = {}
    for seg, rows in segments.items():
        t = np.array([r[0] for r in rows])
        t0 = int(t[0])
        n = int(t[-1]) - t0 + 1
        values = np.zeros(n)
        missing = np.ones(n, dtype=bool)
        for ti, v in rows:
            if v is not None:
                values[ti - t0] = v
                missing[ti - t0] = False
        if missing.all():
            raise InputError(f"{path}: segment {seg or '(single)'} has no valid values")
        out[seg] = (t0, values, missing)
    return out


def write_series(path: Path, values, t0: int = 0) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value"])
        for i, v in enumerate(values):
            w.writerow([t0 + i, "" if not np.isfinite(v) else repr(float(v))])


def _dump(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _cache(args) -> RateTableCache | None:
    return RateTableCache(Path(args.cache_dir)) if args.cache_dir else None


def _apply_overrides(cfg: AnalysisConfig, args) -> AnalysisConfig:
    if getattr(args, "seed", None) is not None:
        cfg.seed = int(args.seed)
    if getattr(args, "threads", None) is not None:
        cfg.threads = int(args.threads)
    return cfg


# ------------------------------------------------------------------ commands


def _event_record(e, region, segment):
    p = e.source
    return {
        "segment": segment,
        "t": e.t_hat,
        "omega_rho": e.omega_rho,
        "rho": e.rho_hat,
        "abs_c": e.abs_c,
        "phase": e.phase,
        "omega_s": p.omega_s,
        "norm_magnitude": p.norm_magnitude,
        "flags": {"edge": p.edge, "significant": p.significant, "isolated": p.isolated},
        "region": [[float(a), float(b)] for a, b in region],
    }


def cmd_detect(args) -> int:
    paths: dict = {}
    cfg = _apply_overrides(read_config(args.config, paths), args)
    cfg.keep_plane = bool(args.emit_plane)
    source = args.input or paths.get("input")
    if source is None:
        raise ConfigurationError("no input file given on the command line or in the config")
    series = read_series(source)
    out = Path(args.out_dir or paths.get("out_dir") or ".")
    out.mkdir(parents=True, exist_ok=True)
    cache = _cache(args)
    events, thresholds, segments = [], [], []
    totals = {"maxima": 0, "significant": 0, "isolated": 0}
    residual_rows = []
    for seg, (t0, values, missing) in series.items():
        res = run(values, missing, cfg, cache=cache)
        regions = event_regions(res)
        for e, reg in zip(res.events, regions):
            rec = _event_record(e, reg, seg)
            rec["t"] = e.t_hat + t0
            rec["region"] = [[a + t0, b] for a, b in rec["region"]]
            events.append(rec)
        thresholds.append({"segment": seg, "omega_s": res.grid.omegas.tolist(),
                           "values": res.thresholds.tolist()})
        counts = res.counts
        for k in totals:
            totals[k] += counts[k]
        segments.append({"segment": seg, "t0": t0, "length": int(values.size), "counts": counts,
                         "noise_amplitude": res.noise_model.A,
                         "expected_false_per_scale": res.expected_false.tolist(),
                         "expected_false_total": float(res.expected_false.sum())})
        residual_rows.append((seg, t0, res.residual))
        if args.emit_plane:
            _write_plane(out / (f"plane-{seg}.csv" if seg else "plane.csv"), res.plane, t0)
    doc = {"schema": EVENTS_SCHEMA, "config": cfg.to_dict(), "thresholds": thresholds,
           "events": events, "counts": totals, "segments": segments}
    _dump(out / "events.json", doc)
    with open(out / "residual.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        multi = len(residual_rows) > 1 or residual_rows[0][0] != ""
        w.writerow(["segment", "t", "value"] if multi else ["t", "value"])
        for seg, t0, r in residual_rows:
            for i, v in enumerate(r):
                cell = "" if not np.isfinite(v) else repr(float(v))
                w.writerow([seg, t0 + i, cell] if multi else [t0 + i, cell])
    log.info("%d events from %d segment(s) written to %s", len(events), len(series), out)
    return 0


def _write_plane(path: Path, plane, t0: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "scale_index", "omega_s", "re", "im", "edge"])
        for j, om in enumerate(plane.grid.omegas):
            col = plane.values[:, j]
            for n in range(col.size):
                w.writerow([t0 + n, j, repr(float(om)), repr(float(col[n].real)),
                            repr(float(col[n].imag)), int(plane.edge_mask[n, j])])


def cmd_simulate(args) -> int:
    paths: dict = {}
    cfg = _apply_overrides(read_config(args.config, paths), args)
    wavelet = cfg.wavelet
    length = int(args.length or paths.get("length") or 12000)
    grid = build_grid(wavelet, length, cfg.eta, cfg.D, cfg.p)
    model = NoiseModel(cfg.alpha, 1.0)
    key = cache_key(model, wavelet, grid, cfg.n_realizations, cfg.seed, cfg.method,
                    cfg.n_bins, cfg.w_max)
    out = Path(args.output or paths.get("output") or "ratetable.json")
    if out.exists() and not args.force:
        try:
            load_tables(out, key)
        except ValueError as exc:
            raise ConfigurationError(f"{exc}; pass --force to overwrite") from None
        log.info("cache hit: %s already holds tables for this key", out)
        return 0

    def compute():
        return simulate_maxima(model, wavelet, grid, cfg.n_realizations, cfg.seed,
                               method=cfg.method, n_bins=cfg.n_bins, w_max=cfg.w_max,
                               threads=cfg.threads)

    cache = _cache(args)
    tables = cache.get_or_compute(key, compute) if cache else compute()
    out.parent.mkdir(parents=True, exist_ok=True)
    save_tables(out, key, tables)
    log.info("wrote %d rate tables to %s", len(tables), out)
    return 0


def cmd_synth(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kind = args.kind
    truth: dict = {"kind": kind, "seed": int(args.seed)}
    if kind in ("paper", "paper-clean", "paper+red"):
        clean, train = paper_synthetic()
        truth.update(train.to_dict())
        if kind == "paper":
            x = clean + white_noise(clean.size, 1.0, args.seed)
            truth["noise"] = {"alpha": 0.0, "A": 1.0}
        elif kind == "paper+red":
            n, A = red_noise(clean.size, args.seed, return_amplitude=True)
            x = clean + n
            truth["noise"] = {"alpha": 1.0, "A": A}
        else:
            x = clean
    elif kind == "white":
        x = white_noise(args.length, 1.0, args.seed)
        truth["noise"] = {"alpha": 0.0, "A": 1.0}
    elif kind == "red":
        x, A = red_noise(args.length, args.seed, return_amplitude=True)
        truth["noise"] = {"alpha": 1.0, "A": A}
    else:  # argparse restricts choices; kept for direct callers
        raise ConfigurationError(f"unknown synth kind {kind!r}")
    write_series(out / "data.csv", x)
    _dump(out / "truth.json", truth)
    return 0


def cmd_spectrum(args) -> int:
    paths: dict = {}
    cfg = read_config(args.config, paths)
    source = args.input or paths.get("input")
    if source is None:
        raise ConfigurationError("no input file given on the command line or in the config")
    series = read_series(source)
    rows = []
    for seg, (t0, values, missing) in series.items():
        wavelet = cfg.wavelet
        grid = build_grid(wavelet, values.size, cfg.eta, cfg.D, cfg.p)
        plane = transform(values, missing, wavelet, grid)
        if cfg.noise_mode == "fixed":
            model = NoiseModel(cfg.alpha, cfg.noise_amplitude)
        else:
            model = NoiseModel(cfg.alpha, estimate_amplitude(plane, cfg.alpha))
        scales = plane.scales
        pred = wavelet_spectrum(model, wavelet, scales)
        power = np.abs(plane.values) ** 2
        keep = ~plane.edge_mask
        for j, om in enumerate(grid.omegas):
            mean = float(power[keep[:, j], j].mean()) if keep[:, j].any() else float("nan")
            rows.append([seg, j, om, 2 * math.pi / om, mean, float(pred[j]), mean / float(pred[j])])
    with open(args.output or paths.get("output") or "wavespec.csv", "w", newline="",
              encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["segment", "scale_index", "omega_s", "period", "mean_power", "predicted",
                    "ratio"])
        for r in rows:
            w.writerow([r[0], r[1]] + [repr(float(v)) for v in r[2:]])
    return 0


# ------------------------------------------------------------------ entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="element-analysis",
                                 description="Detect and reconstruct Morse-function events in noisy series.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--seed", type=int, help="simulation seed (overrides the config)")
        p.add_argument("--threads", type=int, help="worker threads, 0 for one per CPU")
        p.add_argument("--cache-dir", help="directory for cached rate tables")

    d = sub.add_parser("detect", help="find significant isolated events")
    d.add_argument("input", nargs="?", help="CSV with columns t,value or segment,t,value")
    d.add_argument("-o", "--out-dir", help="output directory (default: current directory)")
    d.add_argument("--emit-plane", action="store_true", help="also write the transform plane")
    common(d)
    d.set_defaults(func=cmd_detect)

    s = sub.add_parser("simulate", help="simulate noise-maxima rate tables")
    s.add_argument("-o", "--output", help="output file (default: ratetable.json)")
    s.add_argument("--length", type=int, help="series length the grid is built for (default 12000)")
    s.add_argument("--force", action="store_true", help="overwrite a table with another key")
    common(s)
    s.set_defaults(func=cmd_simulate)

    y = sub.add_parser("synth", help="write a synthetic series and its truth table")
    y.add_argument("kind", choices=["paper", "paper-clean", "paper+red", "white", "red"])
    y.add_argument("--seed", type=int, default=0)
    y.add_argument("--length", type=int, default=12000)
    y.add_argument("-o", "--out-dir", default=".")
    y.set_defaults(func=cmd_synth)

    w = sub.add_parser("spectrum", help="time-averaged wavelet power against the noise model")
    w.add_argument("input", nargs="?")
    w.add_argument("--config")
    w.add_argument("-o", "--output", help="output file (default: wavespec.csv)")
    w.set_defaults(func=cmd_spectrum)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return int(args.func(args) or 0)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigurationError, MonteCarloFloorError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
