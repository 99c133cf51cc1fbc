"""Experiment harness: declarative run configs, output files, and manifests.

A config file (JSON) describes exactly one experiment mode:

    evolve     one schedule, full trajectory CSV
    optimize   BFGS maximization of the final fidelity over schedule parameters
    sweep      baseline and optimized fidelity over a list of durations
    landscape  fidelity over a 2-D grid of two schedule parameters
    noise      mean/std of the fidelity under seeded control noise
    two_spin   detach a two-spin block: linear baseline vs pulse control

Every run writes its outputs plus a manifest (config echo, code version,
checksums, seeds) into the output directory; outputs are bit-reproducible
from the manifest.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._version import __version__
from .chain import ChainSpec
from .control import ControlSchedule, NoiseSpec, apply_noise, make_schedule
from .optimize import (
    DEFAULT_GRADIENT_STEP,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
    LandscapeAxis,
    bfgs_maximize,
    multi_start_maximize,
    scan_landscape,
)
from .parallel import map_ordered
from .process import DEFAULT_TIME_STEPS, ObjectiveSpec, build_objective, prepare_process

MODES = ("evolve", "optimize", "sweep", "landscape", "noise", "two_spin")


class ConfigError(ValueError):
    """A run config failed validation; the message names the offending field."""


def _fmt(x: float) -> str:
    return f"{x:.15e}"


# ---------------------------------------------------------------------------
# config model
# ---------------------------------------------------------------------------

@dataclass
class OptimizerOptions:
    grad_step: float = DEFAULT_GRADIENT_STEP
    tolerance: float = DEFAULT_TOLERANCE
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    multi_start: dict | None = None  # {"per_axis": k, "lower": lo, "upper": hi}

    def to_dict(self) -> dict:
        out = {
            "grad_step": self.grad_step,
            "tolerance": self.tolerance,
            "max_iterations": self.max_iterations,
        }
        if self.multi_start:
            out["multi_start"] = dict(self.multi_start)
        return out


@dataclass
class SweepOptions:
    times: tuple[float, ...]
    optimize: bool = True

    def to_dict(self) -> dict:
        return {"times": list(self.times), "optimize": self.optimize}


@dataclass
class NoiseStudyOptions:
    strengths: tuple[float, ...]
    window: float
    realizations: int = 50
    seed: int = 20240901

    def to_dict(self) -> dict:
        return {
            "strengths": list(self.strengths),
            "window": self.window,
            "realizations": self.realizations,
            "seed": self.seed,
        }


@dataclass
class RunConfig:
    mode: str
    chain: ChainSpec
    process: str = "cut"
    schedule: ControlSchedule | None = None
    target: str = "cut"
    n_steps: int = DEFAULT_TIME_STEPS
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)
    sweep: SweepOptions | None = None
    landscape_axes: tuple[LandscapeAxis, LandscapeAxis] | None = None
    noise: NoiseStudyOptions | None = None
    out_dir: Path = Path("runs")
    workers: int = 1

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "chain": {
                "n_spins": self.chain.n_spins,
                "topology": self.chain.topology,
                "exchange": self.chain.exchange,
                "field": self.chain.field,
                "cut_bonds": sorted(list(b) for b in self.chain.cut_bonds),
            },
            "process": self.process,
            "target": self.target,
            "n_steps": self.n_steps,
            "optimizer": self.optimizer.to_dict(),
            "out_dir": str(self.out_dir),
            "workers": self.workers,
        }
        if self.schedule is not None:
            out["schedule"] = self.schedule.to_dict()
        if self.sweep is not None:
            out["sweep"] = self.sweep.to_dict()
        if self.landscape_axes is not None:
            out["landscape"] = {
                "axes": [
                    {
                        "param_index": ax.param_index,
                        "min": ax.lower,
                        "max": ax.upper,
                        "resolution": ax.resolution,
                    }
                    for ax in self.landscape_axes
                ]
            }
        if self.noise is not None:
            out["noise"] = self.noise.to_dict()
        return out


TWO_SPIN_DEFAULTS = {
    "chain": {
        "n_spins": 5,
        "topology": "open",
        "exchange": 1.0,
        "field": 2.1,
        "cut_bonds": [[2, 3]],
    },
    "schedule": {"kind": "pulse", "T": 0.6, "params": [-5.4, 4.1], "direction": "cut"},
}

_ALLOWED_KEYS = {
    "mode", "chain", "process", "schedule", "target", "n_steps",
    "optimizer", "sweep", "landscape", "noise", "out_dir", "workers",
}


def _require(data: dict, key: str, mode: str):
    if key not in data or data[key] is None:
        raise ConfigError(f"{key}: required for mode '{mode}'")
    return data[key]


def _parse_chain(data: dict) -> ChainSpec:
    if not isinstance(data, dict):
        raise ConfigError("chain: expected an object")
    n = data.get("n_spins")
    if not isinstance(n, int) or n < 2:
        raise ConfigError(f"chain.n_spins: must be an integer >= 2, got {n!r}")
    cut = data.get("cut_bonds")
    if cut is not None:
        if not cut:
            raise ConfigError("chain.cut_bonds: must not be empty")
        cut = frozenset(tuple(int(x) for x in bond) for bond in cut)
    try:
        return ChainSpec(
            n_spins=n,
            topology=data.get("topology", "open"),
            exchange=float(data.get("exchange", 1.0)),
            field=float(data.get("field", 0.0)),
            cut_bonds=cut,
            spin_cap=int(data.get("spin_cap", ChainSpec.spin_cap)),
        )
    except ValueError as exc:
        raise ConfigError(f"chain: {exc}") from exc


def _parse_schedule(data: dict, process: str) -> ControlSchedule:
    if not isinstance(data, dict):
        raise ConfigError("schedule: expected an object")
    duration = data.get("T", data.get("duration"))
    if not isinstance(duration, (int, float)) or duration <= 0:
        raise ConfigError(f"schedule.T: must be a positive duration, got {duration!r}")
    try:
        sched = make_schedule(
            data.get("kind", "polynomial_cut"),
            float(duration),
            tuple(data.get("params", ())),
            data.get("direction", process if data.get("kind") == "pulse" else None),
        )
    except ValueError as exc:
        raise ConfigError(f"schedule: {exc}") from exc
    if sched.direction != process:
        raise ConfigError(
            f"schedule.direction: schedule is a {sched.direction!r} drive but the "
            f"process is {process!r}"
        )
    return sched


def parse_config(data: dict, mode: str | None = None) -> RunConfig:
    """Validate a config dict into a RunConfig; every error names its field."""
    if not isinstance(data, dict):
        raise ConfigError("config: expected a JSON object")
    data = dict(data)
    if mode is not None:
        data.setdefault("mode", mode)
    run_mode = data.get("mode")
    if run_mode not in MODES:
        raise ConfigError(f"mode: must be one of {MODES}, got {run_mode!r}")
    unknown = set(data) - _ALLOWED_KEYS
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown config key")
    for section in ("sweep", "landscape", "noise"):
        if section in data and data[section] is not None and run_mode != (
            "noise" if section == "noise" else section
        ):
            raise ConfigError(f"{section}: section not allowed in mode '{run_mode}'")

    if run_mode == "two_spin":
        data.setdefault("chain", TWO_SPIN_DEFAULTS["chain"])
        data.setdefault("schedule", TWO_SPIN_DEFAULTS["schedule"])

    process = data.get("process", "cut")
    if process not in ("cut", "stitch"):
        raise ConfigError(f"process: must be 'cut' or 'stitch', got {process!r}")

    chain = _parse_chain(_require(data, "chain", run_mode))

    schedule = None
    if run_mode in ("evolve", "optimize", "landscape", "noise", "two_spin"):
        schedule = _parse_schedule(_require(data, "schedule", run_mode), process)
    elif data.get("schedule") is not None:
        schedule = _parse_schedule(data["schedule"], process)

    n_steps = data.get("n_steps", DEFAULT_TIME_STEPS)
    if not isinstance(n_steps, int) or n_steps < 1:
        raise ConfigError(f"n_steps: must be an integer >= 1, got {n_steps!r}")

    target = data.get("target")
    if target is None:
        target = "cut" if process == "cut" else "ground"
    if target not in ("cut", "ground"):
        raise ConfigError(f"target: must be 'cut' or 'ground', got {target!r}")

    opt_data = data.get("optimizer", {})
    if not isinstance(opt_data, dict):
        raise ConfigError("optimizer: expected an object")
    optimizer = OptimizerOptions(
        grad_step=float(opt_data.get("grad_step", DEFAULT_GRADIENT_STEP)),
        tolerance=float(opt_data.get("tolerance", DEFAULT_TOLERANCE)),
        max_iterations=int(opt_data.get("max_iterations", DEFAULT_MAX_ITERATIONS)),
        multi_start=opt_data.get("multi_start"),
    )
    if optimizer.grad_step <= 0:
        raise ConfigError(f"optimizer.grad_step: must be positive, got {optimizer.grad_step}")
    if optimizer.max_iterations < 0:
        raise ConfigError("optimizer.max_iterations: must be >= 0")

    sweep = None
    if run_mode == "sweep":
        sdata = _require(data, "sweep", run_mode)
        times = sdata.get("times")
        if not times:
            raise ConfigError("sweep.times: must be a nonempty list of durations")
        for t in times:
            if not isinstance(t, (int, float)) or t <= 0:
                raise ConfigError(f"sweep.times: durations must be positive, got {t!r}")
        if schedule is None:
            raise ConfigError("schedule: required for mode 'sweep' (defines the template)")
        sweep = SweepOptions(times=tuple(float(t) for t in times),
                             optimize=bool(sdata.get("optimize", True)))

    landscape_axes = None
    if run_mode == "landscape":
        ldata = _require(data, "landscape", run_mode)
        axes_data = ldata.get("axes")
        if not axes_data or len(axes_data) != 2:
            raise ConfigError("landscape.axes: exactly two axes are required")
        axes = []
        for k, ax in enumerate(axes_data):
            try:
                axes.append(LandscapeAxis(
                    param_index=int(ax["param_index"]),
                    lower=float(ax["min"]),
                    upper=float(ax["max"]),
                    resolution=int(ax["resolution"]),
                ))
            except (KeyError, ValueError, TypeError) as exc:
                raise ConfigError(f"landscape.axes[{k}]: {exc}") from exc
        n_free = len(schedule.params)
        for k, ax in enumerate(axes):
            if ax.param_index >= n_free:
                raise ConfigError(
                    f"landscape.axes[{k}].param_index: references parameter "
                    f"{ax.param_index} but the schedule has {n_free} free parameters"
                )
        if axes[0].param_index == axes[1].param_index:
            raise ConfigError("landscape.axes: the two axes must vary different parameters")
        landscape_axes = (axes[0], axes[1])

    noise = None
    if run_mode == "noise":
        ndata = _require(data, "noise", run_mode)
        strengths = ndata.get("strengths")
        if not strengths:
            raise ConfigError("noise.strengths: must be a nonempty list")
        window = ndata.get("window")
        if not isinstance(window, (int, float)) or window <= 0:
            raise ConfigError(f"noise.window: must be a positive duration, got {window!r}")
        realizations = int(ndata.get("realizations", 50))
        if realizations < 2:
            raise ConfigError("noise.realizations: must be >= 2")
        noise = NoiseStudyOptions(
            strengths=tuple(float(s) for s in strengths),
            window=float(window),
            realizations=realizations,
            seed=int(ndata.get("seed", NoiseStudyOptions.seed)),
        )

    workers = data.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError(f"workers: must be an integer >= 1, got {workers!r}")

    return RunConfig(
        mode=run_mode,
        chain=chain,
        process=process,
        schedule=schedule,
        target=target,
        n_steps=n_steps,
        optimizer=optimizer,
        sweep=sweep,
        landscape_axes=landscape_axes,
        noise=noise,
        out_dir=Path(data.get("out_dir", "runs")),
        workers=workers,
    )


def load_config(path: str | Path, mode: str | None = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config: file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {path}: {exc}") from exc
    return parse_config(data, mode)


# ---------------------------------------------------------------------------
# outputs and manifests
# ---------------------------------------------------------------------------

def ensure_writable(out_dir: Path) -> None:
    """Fail with an I/O error before any computation if we cannot write outputs."""
    out_dir.mkdir(parents=True, exist_ok=True)
    probe = out_dir / ".write_probe"
    probe.write_bytes(b"")
    probe.unlink()


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out_dir: Path, config, outputs: list[Path],
                   seeds: dict | None, started: float) -> Path:
    manifest = {
        "version": __version__,
        "config": config.to_dict() if hasattr(config, "to_dict") else config,
        "wall_clock_seconds": time.time() - started,
        "outputs": {p.name: _sha256(p) for p in outputs},
        "seeds": seeds or {},
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _optimize_from(config: RunConfig, objective, n_free: int, x0=None):
    """Shared BFGS invocation honouring optimizer options, incl. multi-start."""
    opts = config.optimizer
    kwargs = dict(
        grad_step=opts.grad_step,
        tolerance=opts.tolerance,
        max_iterations=opts.max_iterations,
        workers=config.workers,
    )
    if opts.multi_start:
        ms = opts.multi_start
        per_axis = int(ms.get("per_axis", 3))
        lo, hi = float(ms.get("lower", -1.0)), float(ms.get("upper", 1.0))
        axes = [np.linspace(lo, hi, per_axis)] * n_free
        starts = [np.asarray(p) for p in np.stack(np.meshgrid(*axes), axis=-1).reshape(-1, n_free)]
        best, _ = multi_start_maximize(objective, starts, **kwargs)
        return best
    start = np.zeros(n_free) if x0 is None else np.asarray(x0, dtype=float)
    return bfgs_maximize(objective, start, **kwargs)


# ---------------------------------------------------------------------------
# experiment modes
# ---------------------------------------------------------------------------

def run_evolve(config: RunConfig) -> dict:
    started = time.time()
    out = config.out_dir
    ensure_writable(out)
    process = prepare_process(config.chain, config.process)
    _, record = process.run(config.schedule, config.n_steps)
    traj = out / "trajectory.csv"
    with traj.open("w") as fh:
        record.to_csv(fh)
    write_manifest(out, config, [traj], None, started)
    f_c, f_g = record.final_cut_fidelity(), record.final_ground_fidelity()
    print(f"final f_C = {f_c:.3f}  f_G = {f_g:.3f}")
    return {"f_c": f_c, "f_g": f_g, "files": [traj]}


def run_optimize(config: RunConfig) -> dict:
    started = time.time()
    out = config.out_dir
    ensure_writable(out)
    spec = ObjectiveSpec(
        chain=config.chain,
        kind=config.schedule.kind,
        duration=config.schedule.duration,
        n_free_params=len(config.schedule.params),
        target=config.target,
        n_steps=config.n_steps,
        direction=config.process,
    )
    objective, _ = build_objective(spec)
    report = _optimize_from(config, objective, spec.n_free_params, x0=config.schedule.params)
    path = out / "optimization.json"
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    write_manifest(out, config, [path], None, started)
    print(
        f"optimized fidelity = {report.final_value:.3f} (baseline {report.initial_value:.3f}) "
        f"params = {np.round(report.final_params, 3).tolist()} [{report.status}]"
    )
    return {"report": report, "files": [path]}


def run_sweep(config: RunConfig) -> dict:
    started = time.time()
    out = config.out_dir
    ensure_writable(out)
    template = config.schedule
    n_free = len(template.params)
    process = prepare_process(config.chain, config.process)
    rows = []
    for duration in config.sweep.times:
        baseline = process.baseline_fidelity(duration, config.n_steps, config.target)
        if config.sweep.optimize:
            spec = ObjectiveSpec(
                chain=config.chain, kind=template.kind, duration=duration,
                n_free_params=n_free, target=config.target,
                n_steps=config.n_steps, direction=config.process,
            )
            objective, _ = build_objective(spec, process)
            report = _optimize_from(config, objective, n_free)
            rows.append((duration, baseline, report.final_value, report.final_params, report.status))
        else:
            rows.append((duration, baseline, baseline, (0.0,) * n_free, "baseline"))
    path = out / "sweep.csv"
    with path.open("w") as fh:
        headers = ["T", "f_baseline", "f_opt"] + [f"param_{k + 1}" for k in range(n_free)] + ["status"]
        fh.write(",".join(headers) + "\n")
        for duration, fb, fo, params, status in rows:
            cells = [_fmt(duration), _fmt(fb), _fmt(fo), *(_fmt(p) for p in params), status]
            fh.write(",".join(cells) + "\n")
    write_manifest(out, config, [path], None, started)
    for duration, fb, fo, _, status in rows:
        print(f"T = {duration:g}: baseline {fb:.3f} optimized {fo:.3f} [{status}]")
    return {"rows": rows, "files": [path]}


def run_landscape(config: RunConfig) -> dict:
    started = time.time()
    out = config.out_dir
    ensure_writable(out)
    spec = ObjectiveSpec(
        chain=config.chain,
        kind=config.schedule.kind,
        duration=config.schedule.duration,
        n_free_params=len(config.schedule.params),
        target=config.target,
        n_steps=config.n_steps,
        direction=config.process,
    )
    objective, _ = build_objective(spec)
    grid = scan_landscape(objective, config.landscape_axes,
                          base_params=config.schedule.params, workers=config.workers)
    report = _optimize_from(config, objective, spec.n_free_params, x0=config.schedule.params)
    grid_path = out / "landscape.csv"
    with grid_path.open("w") as fh:
        grid.to_csv(fh)
    marker = {
        "optimum_params": list(report.final_params),
        "optimum_value": report.final_value,
        "status": report.status,
        "grid_max": dict(zip(("p1", "p2", "value"), grid.max_point())),
    }
    marker_path = out / "optimum.json"
    marker_path.write_text(json.dumps(marker, indent=2, sort_keys=True) + "\n")
    write_manifest(out, config, [grid_path, marker_path], None, started)
    print(
        f"landscape max {marker['grid_max']['value']:.3f} at "
        f"({marker['grid_max']['p1']:.3g}, {marker['grid_max']['p2']:.3g}); "
        f"optimizer reached {report.final_value:.3f}"
    )
    return {"grid": grid, "report": report, "files": [grid_path, marker_path]}


def noise_study(process, schedule, strengths, window, realizations, master_seed,
                n_steps=DEFAULT_TIME_STEPS, target="cut", workers=1):
    """Mean/std of the final fidelity per noise strength, under derived seeds.

    Child seeds are drawn once, in a fixed order, from the master seed, so the
    study is reproducible regardless of worker count.  Returns the summary rows
    plus one {seed, dt, dg} record per realization for the run manifest.
    """
    rng = np.random.default_rng(int(master_seed))
    child_seeds = rng.integers(0, 2**63, size=(len(strengths), realizations))
    rows = []
    draws = []
    for i, dg in enumerate(strengths):
        draws.extend(
            {"seed": int(seed), "dt": window, "dg": dg} for seed in child_seeds[i]
        )
        if dg == 0.0:
            val = process.fidelity(schedule, n_steps, target)
            rows.append({"dg": dg, "dt": window, "mean_fc": val, "std_fc": 0.0,
                         "M": realizations})
            continue

        def one(seed, _dg=dg):
            noisy = apply_noise(schedule, NoiseSpec(window=window, strength=_dg, seed=int(seed)))
            return process.fidelity(noisy, n_steps, target)

        vals = np.asarray(map_ordered(one, child_seeds[i], workers), dtype=float)
        rows.append({"dg": dg, "dt": window, "mean_fc": float(vals.mean()),
                     "std_fc": float(vals.std()), "M": realizations})
    return rows, draws


def run_noise(config: RunConfig) -> dict:
    started = time.time()
    out = config.out_dir
    ensure_writable(out)
    process = prepare_process(config.chain, config.process)
    rows, draws = noise_study(
        process, config.schedule,
        config.noise.strengths, config.noise.window, config.noise.realizations,
        config.noise.seed, config.n_steps, config.target, config.workers,
    )
    path = out / "noise.csv"
    with path.open("w") as fh:
        fh.write("dg,dt,mean_fc,std_fc,M\n")
        for row in rows:
            fh.write(
                f"{_fmt(row['dg'])},{_fmt(row['dt'])},{_fmt(row['mean_fc'])},"
                f"{_fmt(row['std_fc'])},{row['M']}\n"
            )
    seeds = {"master": config.noise.seed, "realizations": draws}
    write_manifest(out, config, [path], seeds, started)
    for row in rows:
        print(f"dg = {row['dg']:g}: mean f = {row['mean_fc']:.3f} +- {row['std_fc']:.3f}")
    return {"rows": rows, "files": [path]}


def run_two_spin(config: RunConfig) -> dict:
    """Detach a block from the chain: linear baseline vs the configured pulse."""
    started = time.time()
    out = config.out_dir
    ensure_writable(out)
    process = prepare_process(config.chain, config.process)
    baseline = process.baseline_fidelity(config.schedule.duration, config.n_steps, "cut")
    controlled = process.fidelity(config.schedule, config.n_steps, "cut")
    result = {
        "block_sites": list(process.a_sites),
        "duration": config.schedule.duration,
        "baseline_f_c": baseline,
        "controlled_f_c": controlled,
        "schedule": config.schedule.to_dict(),
    }
    path = out / "two_spin.json"
    path.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    write_manifest(out, config, [path], None, started)
    print(f"block {process.a_sites}: baseline f_C = {baseline:.3f}, controlled f_C = {controlled:.3f}")
    return {"result": result, "files": [path]}


RUNNERS = {
    "evolve": run_evolve,
    "optimize": run_optimize,
    "sweep": run_sweep,
    "landscape": run_landscape,
    "noise": run_noise,
    "two_spin": run_two_spin,
}


def execute(config: RunConfig) -> dict:
    return RUNNERS[config.mode](config)
