"""Command-line front end: ``percept <command> --config FILE [--seed N] [--out DIR]``.

Every command reads one JSON config, writes delimited or JSON outputs into
the output directory and renders a figure next to them. Exit codes: 0 ok,
1 usage or config error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import io, plotting
from .baselines import fit_hotelling, hotelling_cusum, mmd_detector, wasserstein_detector
from .datagen import Geometry, Scenario, generate_scenario
from .detect import write_trace_csv
from .embeddings import fit_pca
from .experiments import METHODS, Regime, StudyConfig, arl_edd_curve
from .montecarlo import CalibrationError
from .pipeline import (Calibration, ConfigError, FiltrationConfig, PartitionConfig, WeightsConfig, calibrate,
                       compute_diagrams, detect)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("simulate", "diagrams", "calibrate", "detect", "baseline", "arl-edd")


class Context:
    def __init__(self, config: dict, base: Path, out: Path, seed: int):
        self.config, self.base, self.out, self.seed = config, base, out, seed

    def section(self, name: str, required: bool = True) -> dict:
        if name not in self.config:
            if required:
                raise ConfigError(f"config has no {name!r} section")
            return {}
        sec = self.config[name]
        if not isinstance(sec, dict):
            raise ConfigError(f"{name!r} must be an object")
        return sec

    def path(self, value) -> Path:
        if not isinstance(value, str):
            raise ConfigError(f"expected a file path, got {value!r}")
        p = Path(value)
        return p if p.is_absolute() else self.base / p


def _geometry(spec) -> Geometry:
    try:
        if isinstance(spec, str):
            return Geometry.named(spec)
        return Geometry.named(spec["kind"], spec.get("dim"), spec.get("axes", ()))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad geometry {spec!r}: {exc}") from exc


def _build(cls, section: dict, **fixed):
    """Instantiate a config dataclass, turning bad keys or values into usage errors."""
    try:
        return cls(**{**section, **fixed})
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{cls.__name__}: {exc}") from exc


def _filtration(ctx: Context) -> FiltrationConfig:
    sec = dict(ctx.section("filtration", required=False))
    if sec.get("max_radius") in ("inf", None):
        sec["max_radius"] = math.inf
    return _build(FiltrationConfig, sec)


def _frames(ctx: Context, sec: dict, fc: FiltrationConfig):
    modality = sec.get("modality", "pointcloud")
    if "path" not in sec:
        raise ConfigError("input section needs a 'path'")
    path = ctx.path(sec["path"])
    if modality == "pointcloud":
        if fc.kind != "rips" or fc.window:
            raise ConfigError("point clouds use the rips filtration without a window")
        return io.read_point_stream(path)
    if modality == "image":
        if fc.kind != "lower_star":
            raise ConfigError("images use the lower_star filtration")
        return io.read_image_stack(path)
    if modality == "timeseries":
        if fc.kind != "rips" or fc.window < 1:
            raise ConfigError("time series need the rips filtration and a window >= 1")
        return io.read_timeseries(path)
    raise ConfigError(f"unknown modality {modality!r}")


def _frame_range(diagrams, rng, name):
    if rng is None:
        return diagrams
    try:
        a, b = (int(x) for x in rng)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be [first, last]") from exc
    if not 1 <= a <= b <= len(diagrams):
        raise io.DataError(f"{name} [{a}, {b}] outside the {len(diagrams)} available frames")
    return diagrams[a - 1:b]


# commands ---------------------------------------------------------------------------


def cmd_simulate(ctx: Context) -> dict:
    sec = dict(ctx.section("scenario"))
    for key in ("pre", "post", "geometry"):
        if key in sec:
            sec[key] = _geometry(sec[key])
    if "geometry" in sec:
        g = sec.pop("geometry")
        sec.setdefault("pre", g)
        sec.setdefault("post", g)
    if "sigma" in sec:
        sigma = sec.pop("sigma")
        sec.setdefault("sigma_pre", sigma)
        sec.setdefault("sigma_post", sigma)
    if sec.get("kind") == "shape_change":
        # a shape change keeps the noise level unless told otherwise
        sec.setdefault("sigma_pre", 0.05)
        sec.setdefault("sigma_post", sec["sigma_pre"])
    sec["seed"] = ctx.seed
    sc = _build(Scenario, sec)
    frames = generate_scenario(sc)
    io.write_point_stream(ctx.out / "frames.csv", frames)
    meta = sc.to_dict()
    io.write_json(ctx.out / "scenario.json", meta)
    if frames.shape[2] >= 2:
        plotting.plot_points(ctx.out / "frames.png", np.concatenate([frames[0], frames[-1]]),
                             f"frame 1 and frame {sc.T}")
    return {"frames": sc.T, "points_per_frame": sc.n_points}


def cmd_diagrams(ctx: Context) -> dict:
    fc = _filtration(ctx)
    frames = _frames(ctx, ctx.section("input"), fc)
    if len(frames) == 0:
        raise io.DataError("no frames in input")
    diagrams = compute_diagrams(frames, fc)
    io.write_diagrams(ctx.out / "diagrams.json", diagrams)
    plotting.plot_diagram(ctx.out / "diagrams.png", diagrams[-1], f"frame {len(diagrams)}")
    return {"diagrams": len(diagrams)}


def _weights(ctx: Context) -> WeightsConfig:
    sec = dict(ctx.section("weights", required=False))
    if sec.get("source") == "file":
        data = io.read_json(ctx.path(sec.pop("path", None)))
        sec["values"] = tuple(data["weights"] if isinstance(data, dict) else data)
    sec.pop("path", None)
    if "candidates" in sec:
        sec["candidates"] = tuple(sec["candidates"])
    return _build(WeightsConfig, sec)


def cmd_calibrate(ctx: Context) -> dict:
    sec = ctx.section("calibrate")
    if "pre" not in sec:
        raise ConfigError("calibrate section needs 'pre' diagrams")
    pre = _frame_range(io.read_diagrams(ctx.path(sec["pre"])), sec.get("pre_frames"), "pre_frames")
    post = []
    if "post" in sec:
        post = _frame_range(io.read_diagrams(ctx.path(sec["post"])), sec.get("post_frames"), "post_frames")
    psec = dict(ctx.section("partition", required=False))
    psec.setdefault("seed", ctx.seed)
    part = _build(PartitionConfig, psec)
    det = ctx.section("detector", required=False)
    fc = _filtration(ctx)
    thr = det.get("threshold")
    cal = calibrate(pre, post, part, _weights(ctx), det.get("target_arl", 5000.0), det.get("m0", 20), det.get("m1", 80),
                    det.get("scale", "interval"), fc.essential, det.get("n_sequences", 200), det.get("sequence_length"),
                    None if thr is None else float(thr), ctx.seed)
    cal.save(ctx.out / "calibration.json")
    return {"threshold": cal.detector.threshold, "bins": cal.partition.n_bins}


def cmd_detect(ctx: Context) -> dict:
    sec = ctx.section("detect")
    for key in ("diagrams", "calibration"):
        if key not in sec:
            raise ConfigError(f"detect section needs {key!r}")
    diagrams = io.read_diagrams(ctx.path(sec["diagrams"]))
    cal_path = ctx.path(sec["calibration"])
    if not cal_path.exists():
        raise io.DataError(f"{cal_path} does not exist")
    cal = Calibration.load(cal_path)
    if "threshold" in sec:
        cal.detector = cal.detector.with_threshold(float(sec["threshold"]))
    trace = detect(diagrams, cal)
    trace.to_csv(ctx.out / "trace.csv")
    summary = {"frames": len(diagrams), "threshold": _finite(cal.detector.threshold),
               "stopping_time": trace.stopping_time}
    io.write_json(ctx.out / "summary.json", summary)
    plotting.plot_trace(ctx.out / "trace.png", trace.t, trace.chi_max, cal.detector.threshold,
                        sec.get("change_point"), trace.stopping_time, "chi_max")
    return summary


def _finite(x):
    return x if math.isfinite(x) else "inf"


def cmd_baseline(ctx: Context) -> dict:
    sec = ctx.section("baseline")
    method = sec.get("method")
    if method not in ("hotelling", "mmd", "wasserstein"):
        raise ConfigError(f"baseline method must be hotelling, mmd or wasserstein, got {method!r}")
    if method == "wasserstein":
        if "diagrams" not in sec:
            raise ConfigError("wasserstein baseline needs 'diagrams'")
        diagrams = io.read_diagrams(ctx.path(sec["diagrams"]))
        if len(diagrams) < 2:
            raise io.DataError("wasserstein baseline needs at least two diagrams")
        stat = wasserstein_detector(diagrams)
    else:
        fc = _filtration(ctx)
        frames = _frames(ctx, ctx.section("input"), fc)
        X = np.array([np.asarray(f, float).reshape(-1) for f in frames]) if fc.window == 0 \
            else np.asarray(frames, float)
        if method == "mmd":
            stat = mmd_detector(X, sec.get("window_pre", 40), sec.get("window_post", 40))
        else:
            n_train = int(sec.get("train_frames", 100))
            if not 2 <= n_train <= X.shape[0]:
                raise io.DataError(f"train_frames={n_train} does not fit a stream of {X.shape[0]} frames")
            r = min(int(sec.get("pca_components", 15)), n_train, X.shape[1])
            pca = fit_pca(X[:n_train], r)
            model = fit_hotelling(pca.project(X[:n_train]), int(sec.get("window", 0)), sec.get("drift"),
                                  float(sec.get("drift_quantile", 90.0)))
            stat = hotelling_cusum(pca.project(X), model)
    thr = float(sec.get("threshold", math.inf))
    t = np.arange(1, stat.size + 1)
    alarm = np.where(np.isfinite(stat), stat, -np.inf) >= thr
    write_trace_csv(ctx.out / f"baseline_{method}.csv", t, np.where(np.isnan(stat), -np.inf, stat), alarm)
    first = int(t[alarm][0]) if alarm.any() else None
    plotting.plot_trace(ctx.out / f"baseline_{method}.png", t, stat, thr, sec.get("change_point"), first, method)
    return {"method": method, "frames": int(stat.size), "stopping_time": first}


def _regime(spec, default_label) -> Regime:
    if not isinstance(spec, dict) or "sigma" not in spec:
        raise ConfigError(f"regime needs geometry and sigma, got {spec!r}")
    return Regime(_geometry(spec.get("geometry", "circle")), float(spec["sigma"]), spec.get("label", default_label))


def cmd_arl_edd(ctx: Context) -> dict:
    sec = ctx.section("arl_edd")
    methods = sec.get("method", "percept")
    methods = [methods] if isinstance(methods, str) else list(methods)
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}")
    targets = sec.get("targets", sec.get("thresholds"))
    if not targets:
        raise ConfigError("empty threshold grid: give a nonempty 'targets' list of ARL levels")
    pre = _regime(sec.get("pre", {"geometry": "circle", "sigma": 0.05}), "pre")
    posts = [_regime(p, f"post{i}") for i, p in enumerate(sec.get("posts", []))]
    if not posts:
        raise ConfigError("arl_edd needs at least one post-change regime")
    psec = dict(ctx.section("partition", required=False))
    psec.setdefault("seed", ctx.seed)
    study = _build(StudyConfig, {k: sec[k] for k in ("n_points", "n_train", "n_pool", "n_pair_pool",
                                                     "pca_components", "m0", "m1", "scale") if k in sec},
                   pre=pre, filtration=_filtration(ctx), partition=_build(PartitionConfig, psec), seed=ctx.seed)
    rows = []
    for m in methods:
        for p in arl_edd_curve(m, study, posts, targets, int(sec.get("n_sequences", 200)),
                               int(sec.get("m_post", 500)), seed=ctx.seed):
            rows.append({"method": p.method, "label": p.label, "target_ARL": p.target_arl, "threshold": p.threshold,
                         "ARL": p.arl, "log_ARL": p.log_arl, "EDD": p.edd, "censored": p.censored,
                         "n_sequences": p.n_sequences, "edd_bound": p.bound})
    with open(ctx.out / "curve.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    plotting.plot_curves(ctx.out / "curve.png", rows)
    return {"points": len(rows)}


HANDLERS = {
    "simulate": cmd_simulate,
    "diagrams": cmd_diagrams,
    "calibrate": cmd_calibrate,
    "detect": cmd_detect,
    "baseline": cmd_baseline,
    "arl-edd": cmd_arl_edd,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"percept: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="percept", description="Topological online change-point detection.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    p.add_argument("--out", default=".", help="output directory")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg_path = Path(args.config)
        if not cfg_path.exists():
            raise ConfigError(f"config file {cfg_path} not found")
        config = io.read_json(cfg_path)
        if not isinstance(config, dict):
            raise ConfigError("config must be a JSON object")
        seed = args.seed if args.seed is not None else int(config.get("seed", 0))
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        result = HANDLERS[args.command](Context(config, cfg_path.parent, out, seed))
    except ConfigError as exc:
        print(f"percept: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CalibrationError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"percept: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (io.DataError, OSError, ValueError, KeyError, IndexError) as exc:
        print(f"percept: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(" ".join(f"{k}={v}" for k, v in result.items()))
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
