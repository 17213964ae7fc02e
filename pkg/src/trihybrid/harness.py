"""Batch experiment driver: Monte-Carlo sweeps, CSV/JSON results, exports.

A run is a pure function of (config, seed): trial seeds derive from the
experiment seed through a seed sequence, every scheme sees the same random
scenarios, and rows are sorted before writing so aggregation order cannot
leak into the output.  Wall-clock timings are intentionally kept out of
``results.csv`` (they are the one non-reproducible quantity) and written to
``timings.csv`` / ``summary.json`` instead.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import asdict, dataclass

import numpy as np

from .channel import generate_scenario
from .config import (
    ConfigError,
    ExperimentConfig,
    ScenarioConfig,
    scenario_with_axis,
)
from .harmonics import SphericalHarmonicBasis
from .mumt import MumtOptions, run_mumt
from .patterns import synth_pattern_library
from .sust import SustOptions, domain_for_model, run_sust

__all__ = [
    "ResultRow",
    "run_experiment",
    "tradeoff_sweep",
    "export_beampattern",
    "load_run_dir",
]

RESULT_FIELDS = (
    "scheme",
    "sweep_axis",
    "sweep_value",
    "trial",
    "trial_seed",
    "objective",
    "objective_fd",
    "sum_rate_bits",
    "scnr_total",
    "scnr_per_target",
    "iterations",
    "fd_hybrid_gap",
    "error",
)


@dataclass
class ResultRow:
    scheme: str
    sweep_axis: str
    sweep_value: float
    trial: int
    trial_seed: int
    objective: float
    objective_fd: float
    sum_rate_bits: float
    scnr_total: float
    scnr_per_target: str  # semicolon-joined per-target values
    iterations: int
    wall_clock_s: float
    fd_hybrid_gap: float
    error: str = ""

    def validate(self) -> None:
        numeric = (
            self.sweep_value,
            self.objective,
            self.objective_fd,
            self.sum_rate_bits,
            self.scnr_total,
            self.wall_clock_s,
            self.fd_hybrid_gap,
        )
        if not self.error and not all(math.isfinite(x) for x in numeric):
            raise ValueError(f"non-finite result row for {self.scheme}")


def _trial_seed(base_seed: int, trial: int) -> int:
    # shared across schemes and sweep values: every cell of one experiment
    # sees the same random scenarios (common random numbers)
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(trial,))
    return int(seq.generate_state(1, dtype=np.uint64)[0] % (2**63))


def _library_for(cfg: ScenarioConfig):
    basis = SphericalHarmonicBasis(cfg.truncation_degree)
    return synth_pattern_library(cfg.library_size, cfg.library_seed, basis)


def _solve(scenario, scheme: str, library):
    if len(scenario.users) == 1 and len(scenario.targets) == 1:
        return run_sust(scenario, scheme, SustOptions(), library=library)
    return run_mumt(scenario, scheme, MumtOptions(), library=library)


def _run_cell(cfg: ScenarioConfig, scheme: str, axis: str, value: float, value_idx: int,
              trial: int, base_seed: int, library) -> tuple[ResultRow, dict, dict | None]:
    seed = _trial_seed(base_seed, trial)
    started = time.perf_counter()
    try:
        scenario = generate_scenario(cfg, seed)
        result = _solve(scenario, scheme, library)
        elapsed = time.perf_counter() - started
        hy = result.hybrid_objectives
        fd = result.fd_objectives
        row = ResultRow(
            scheme=scheme,
            sweep_axis=axis,
            sweep_value=float(value),
            trial=trial,
            trial_seed=seed,
            objective=hy.objective,
            objective_fd=fd.objective,
            sum_rate_bits=hy.sum_rate,
            scnr_total=hy.scnr_total,
            scnr_per_target=";".join(repr(float(x)) for x in hy.scnr),
            iterations=result.iterations,
            wall_clock_s=elapsed,
            fd_hybrid_gap=fd.objective - hy.objective,
        )
        row.validate()
        trace = {
            "objective_trace": [float(x) for x in result.trace],
            "outer_trace": [float(x) for x in result.outer_trace],
        }
        snapshot = None
        if trial == 0 and value_idx == 0:
            bf = result.beamformer
            snapshot = {
                "scheme": scheme,
                "scenario_seed": seed,
                "coeffs": _complex_to_lists(bf.coeffs),
                "f_rf": _complex_to_lists(bf.f_rf),
                "f_bb": _complex_to_lists(bf.f_bb),
                "f_fd": _complex_to_lists(bf.f_fd),
            }
        return row, trace, snapshot
    except Exception as exc:  # failure is recorded in-row, the run continues
        elapsed = time.perf_counter() - started
        row = ResultRow(
            scheme=scheme,
            sweep_axis=axis,
            sweep_value=float(value),
            trial=trial,
            trial_seed=seed,
            objective=0.0,
            objective_fd=0.0,
            sum_rate_bits=0.0,
            scnr_total=0.0,
            scnr_per_target="",
            iterations=0,
            wall_clock_s=elapsed,
            fd_hybrid_gap=0.0,
            error=f"{type(exc).__name__}: {exc}",
        )
        return row, {}, None


def _complex_to_lists(arr: np.ndarray):
    arr = np.asarray(arr)
    return {"re": arr.real.tolist(), "im": arr.imag.tolist()}


def _lists_to_complex(obj) -> np.ndarray:
    return np.asarray(obj["re"]) + 1j * np.asarray(obj["im"])


def _axis_values(config: ExperimentConfig, sweeping: bool):
    if sweeping:
        if config.sweep_axis is None:
            raise ConfigError("sweep requested but the config has no sweep_axis")
        return config.sweep_axis, list(config.sweep_values)
    # single-cell run at the base scenario
    if config.sweep_axis is not None:
        base = getattr(config.scenario, config.sweep_axis)
        return config.sweep_axis, [float(base)]
    return "none", [0.0]


def run_experiment(config: ExperimentConfig, sweeping: bool = False) -> dict:
    """Execute schemes x sweep values x trials and write the result files.

    Returns a small manifest with output paths and the number of failed
    trials.  Output files: ``results.csv`` (deterministic), ``timings.csv``,
    ``trace.json``, ``summary.json``, ``runmeta.json``.
    """
    config.validate()
    axis, values = _axis_values(config, sweeping)
    os.makedirs(config.out_dir, exist_ok=True)

    rows: list[ResultRow] = []
    traces: dict[str, dict] = {}
    snapshots: list[dict] = []
    libraries: dict[int, object] = {}
    for value_idx, value in enumerate(values):
        cfg = config.scenario if axis == "none" else scenario_with_axis(
            config.scenario, axis, value
        )
        key = (cfg.library_size, cfg.library_seed, cfg.truncation_degree)
        if key not in libraries:
            libraries[key] = _library_for(cfg)
        library = libraries[key]
        for scheme in config.schemes:
            for trial in range(config.trials):
                row, trace, snapshot = _run_cell(
                    cfg, scheme, axis, value, value_idx, trial, config.seed, library
                )
                rows.append(row)
                traces[f"{scheme}|{value!r}|{trial}"] = trace
                if snapshot is not None:
                    snapshots.append(snapshot)

    rows.sort(key=lambda r: (r.scheme, r.sweep_value, r.trial))
    _write_results_csv(os.path.join(config.out_dir, "results.csv"), rows)
    _write_timings_csv(os.path.join(config.out_dir, "timings.csv"), rows)
    with open(os.path.join(config.out_dir, "trace.json"), "w", encoding="utf-8") as fh:
        json.dump(traces, fh, indent=1, sort_keys=True)
    _write_summary(os.path.join(config.out_dir, "summary.json"), rows)
    meta = {
        "schemes": list(config.schemes),
        "sweep_axis": axis,
        "sweep_values": [float(v) for v in values],
        "trials": config.trials,
        "seed": config.seed,
        "scenario": asdict(config.scenario),
        "snapshots": snapshots,
    }
    with open(os.path.join(config.out_dir, "runmeta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
    failures = sum(1 for r in rows if r.error)
    return {
        "out_dir": config.out_dir,
        "rows": len(rows),
        "failures": failures,
        "results_csv": os.path.join(config.out_dir, "results.csv"),
    }


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_results_csv(path: str, rows: list[ResultRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(RESULT_FIELDS) + "\n")
        for r in rows:
            record = (
                r.scheme,
                r.sweep_axis,
                r.sweep_value,
                r.trial,
                r.trial_seed,
                r.objective,
                r.objective_fd,
                r.sum_rate_bits,
                r.scnr_total,
                r.scnr_per_target,
                r.iterations,
                r.fd_hybrid_gap,
                r.error,
            )
            fh.write(",".join(_fmt(v) for v in record) + "\n")


def _write_timings_csv(path: str, rows: list[ResultRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("scheme,sweep_value,trial,wall_clock_s\n")
        for r in rows:
            fh.write(f"{r.scheme},{r.sweep_value!r},{r.trial},{r.wall_clock_s!r}\n")


def _write_summary(path: str, rows: list[ResultRow]) -> None:
    cells: dict[str, dict] = {}
    for r in rows:
        if r.error:
            continue
        key = f"{r.scheme}|{r.sweep_value!r}"
        cell = cells.setdefault(
            key,
            {
                "scheme": r.scheme,
                "sweep_value": r.sweep_value,
                "objectives": [],
                "rates": [],
                "scnrs": [],
                "seconds": [],
            },
        )
        cell["objectives"].append(r.objective)
        cell["rates"].append(r.sum_rate_bits)
        cell["scnrs"].append(r.scnr_total)
        cell["seconds"].append(r.wall_clock_s)
    summary = {}
    for key, cell in sorted(cells.items()):
        obj = np.asarray(cell["objectives"])
        summary[key] = {
            "scheme": cell["scheme"],
            "sweep_value": cell["sweep_value"],
            "trials": int(obj.size),
            "objective_mean": float(obj.mean()),
            "objective_best": float(obj.max()),
            "objective_worst": float(obj.min()),
            "sum_rate_mean": float(np.mean(cell["rates"])),
            "scnr_mean": float(np.mean(cell["scnrs"])),
            "wall_clock_mean_s": float(np.mean(cell["seconds"])),
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)


def tradeoff_sweep(config: ExperimentConfig) -> dict:
    """Trade-off curves: sweep the communication weight on a log grid.

    For every scheme and weight the mean communication metric (SNR for the
    single-user setting, sum rate otherwise) and mean total SCNR over the
    trials are recorded, sorted by weight.
    """
    config.validate()
    if config.sweep_axis not in (None, "beta_tilde"):
        raise ConfigError("tradeoff sweeps run over beta_tilde only")
    if config.sweep_values:
        weights = sorted(float(v) for v in config.sweep_values)
    else:
        weights = [float(w) for w in np.logspace(-4, np.log10(0.5), 8)]
    os.makedirs(config.out_dir, exist_ok=True)

    library = _library_for(config.scenario)
    single_user = config.scenario.n_cu == 1 and config.scenario.n_tar == 1
    records = []
    for w_idx, weight in enumerate(weights):
        cfg = scenario_with_axis(config.scenario, "beta_tilde", weight)
        for scheme in config.schemes:
            comm, sens = [], []
            for trial in range(config.trials):
                seed = _trial_seed(config.seed, trial)
                scenario = generate_scenario(cfg, seed)
                result = _solve(scenario, scheme, library)
                hy = result.hybrid_objectives
                comm.append(float(hy.sinr[0]) if single_user else hy.sum_rate)
                sens.append(hy.scnr_total)
            records.append((weight, scheme, float(np.mean(comm)), float(np.mean(sens))))
    records.sort(key=lambda r: (r[0], r[1]))
    path = os.path.join(config.out_dir, "tradeoff.csv")
    comm_name = "snr" if single_user else "sum_rate_bits"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"beta_tilde,scheme,{comm_name},scnr_total\n")
        for weight, scheme, comm_v, sens_v in records:
            fh.write(f"{weight!r},{scheme},{comm_v!r},{sens_v!r}\n")
    return {"tradeoff_csv": path, "points": len(records)}


def export_beampattern(
    coeffs: np.ndarray,
    product: np.ndarray,
    scenario,
    domain,
    out_csv: str,
    markers_csv: str | None = None,
    n_theta: int = 64,
    n_phi: int = 128,
) -> None:
    """Tabulate per-antenna pattern power and the array transmit pattern.

    For each grid direction the per-antenna effective gain is contracted
    with the steering phases and the transmit matrix, giving the radiated
    power toward that direction; entity directions go to a sidecar file.
    """
    thetas = np.linspace(0.0, math.pi, n_theta)
    phis = np.linspace(0.0, 2.0 * math.pi, n_phi, endpoint=False)
    n_t = scenario.n_t
    with open(out_csv, "w", encoding="utf-8", newline="\n") as fh:
        header = ["theta", "phi", "array_power"] + [f"g2_{n + 1}" for n in range(n_t)]
        fh.write(",".join(header) + "\n")
        for theta in thetas:
            for phi in phis:
                v = domain.response(theta, phi)
                a = scenario.tx_steering(theta, phi)
                gains = np.conj(coeffs) @ v  # (N_T,) effective per-antenna gain
                h_dir = gains * a
                power = float(np.sum(np.abs(np.conj(h_dir) @ product) ** 2))
                g2 = np.abs(gains) ** 2
                fh.write(
                    ",".join(
                        [repr(float(theta)), repr(float(phi)), repr(power)]
                        + [repr(float(x)) for x in g2]
                    )
                    + "\n"
                )
    if markers_csv:
        with open(markers_csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("kind,index,theta,phi\n")
            for k, user in enumerate(scenario.users):
                for theta, phi in zip(user.theta, user.phi):
                    fh.write(f"cu,{k},{theta!r},{phi!r}\n")
            for i, t in enumerate(scenario.targets):
                fh.write(f"target,{i},{t.theta!r},{t.phi!r}\n")
            for j, s in enumerate(scenario.scatterers):
                fh.write(f"scatterer,{j},{s.theta!r},{s.phi!r}\n")


def load_run_dir(run_dir: str):
    """Rebuild (scenario, domain, beamformer arrays) per scheme snapshot."""
    with open(os.path.join(run_dir, "runmeta.json"), "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    cfg_dict = dict(meta["scenario"])
    for key in ("cu_range_m", "target_range_m", "scatterer_range_m", "target_rcs_m2", "scatterer_rcs_m2"):
        cfg_dict[key] = tuple(cfg_dict[key])
    cfg = ScenarioConfig(**cfg_dict)
    library = _library_for(cfg)
    out = []
    for snap in meta["snapshots"]:
        scenario = generate_scenario(cfg, snap["scenario_seed"])
        domain = domain_for_model(scenario, snap["scheme"], library)
        out.append(
            {
                "scheme": snap["scheme"],
                "scenario": scenario,
                "domain": domain,
                "coeffs": _lists_to_complex(snap["coeffs"]),
                "f_rf": _lists_to_complex(snap["f_rf"]),
                "f_bb": _lists_to_complex(snap["f_bb"]),
                "f_fd": _lists_to_complex(snap["f_fd"]),
            }
        )
    return out
