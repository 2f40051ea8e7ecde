"""Config-driven experiment runner: validation, execution, persistence.

Configs are plain JSON.  A run produces one CSV per seed plus a summary
JSON (schema_version, config hash, PRNG name, per-seed results, invariant
checks).  Identical configs reproduce byte-identical CSVs.  Random games and
markets described without an explicit seed are regenerated per run seed, so
multi-seed suites sweep instances; with an explicit seed the instance is
fixed and only the sampling varies.

Certified runs are refused when the step size or schedule violates the
conditions that back the convergence guarantees (gradient: eta <= 1/(2(n-1));
bandit: theory schedule and eta <= 1/(6n)).  Set "certified": false to run
anyway; bandit runs then proceed flagged, with a warning.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bandit as bandit_mod
from . import dynamics as dyn
from . import fisher as fisher_mod
from .games import PolymatrixGame, generate_game, load_game

SCHEMA_VERSION = 1
PRNG_NAME = "numpy-PCG64"

log = logging.getLogger("a2l")
log.setLevel(os.environ.get("A2L_LOG_LEVEL", "WARNING").upper())


class ConfigError(ValueError):
    """Invalid experiment config; message enumerates every problem found."""


@dataclass
class ExperimentConfig:
    mode: str = "gradient"
    game: dict | None = None
    market: dict | None = None
    algo: str = "a2l-omwu"
    players: list | None = None
    eta: float | None = None
    weights: str = "uniform"
    T: int = 1000
    epochs: int = 12
    schedule: dict = field(default_factory=lambda: {"mode": "theory"})
    seeds: list = field(default_factory=lambda: [0])
    delta: float = 0.05
    monitor_c: float = 4.0
    certified: bool = True
    out_dir: str = "out"
    workers: int = 1

    def to_dict(self) -> dict:
        return {
            "mode": self.mode, "game": self.game, "market": self.market,
            "algo": self.algo, "players": self.players, "eta": self.eta,
            "weights": self.weights, "T": self.T, "epochs": self.epochs,
            "schedule": self.schedule, "seeds": list(self.seeds),
            "delta": self.delta, "monitor_c": self.monitor_c,
            "certified": self.certified, "out_dir": self.out_dir,
            "workers": self.workers,
        }


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def load_config(source) -> ExperimentConfig:
    """Build and validate a config from a dict or a JSON file path."""
    if isinstance(source, (str, Path)):
        if not Path(source).exists():
            raise ConfigError(f"config file not found: {source}")
        with open(source) as f:
            data = json.load(f)
    else:
        data = dict(source)
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(data) - known
    errors = [f"unknown config field {k!r}" for k in sorted(unknown)]
    cfg = ExperimentConfig(**{k: v for k, v in data.items() if k in known})
    errors += validate_config(cfg)
    if errors:
        raise ConfigError("invalid config:\n  - " + "\n  - ".join(errors))
    return cfg


def validate_config(cfg: ExperimentConfig) -> list:
    """Collect every validation problem; empty list means the config is fine."""
    errors = []
    if cfg.mode not in ("gradient", "bandit", "fisher"):
        errors.append(f"mode must be gradient, bandit or fisher, got {cfg.mode!r}")
    if not cfg.seeds or not all(isinstance(s, int) for s in cfg.seeds):
        errors.append("seeds must be a nonempty list of integers")
    if cfg.mode in ("gradient", "fisher") and cfg.T < 1:
        errors.append("T must be at least 1")
    if cfg.mode == "bandit" and cfg.epochs < 1:
        errors.append("epochs must be at least 1")

    if cfg.mode in ("gradient", "bandit"):
        if cfg.game is None:
            errors.append("game spec is required")
        else:
            if "file" in cfg.game and not Path(cfg.game["file"]).exists():
                errors.append(f"game file not found: {cfg.game['file']}")
            try:
                game = resolve_game(cfg.game, seed=cfg.seeds[0] if cfg.seeds else 0)
            except Exception as exc:  # surfaced as config problem
                errors.append(f"game spec invalid: {exc}")
                game = None
            if game is not None and cfg.certified and cfg.eta is not None:
                if cfg.mode == "gradient":
                    limit = dyn.gradient_step_size(game.n)
                    if cfg.eta > limit + 1e-12:
                        errors.append(
                            f"certified gradient runs need eta <= 1/(2(n-1)) = {limit}; "
                            f"got eta = {cfg.eta}"
                        )
                else:
                    limit = bandit_mod.bandit_step_size(game.n)
                    if cfg.eta > limit + 1e-12:
                        errors.append(
                            f"certified bandit runs need eta <= 1/(6n) = {limit}; "
                            f"got eta = {cfg.eta}"
                        )
    if cfg.mode == "bandit":
        try:
            sched = resolve_schedule(cfg.schedule)
            if cfg.certified and not sched.certified:
                errors.append(
                    "certified bandit runs need a theory schedule "
                    "(B_t >= t^4, eps_t = 1/t); set certified: false to override"
                )
        except Exception as exc:
            errors.append(f"schedule invalid: {exc}")
    if cfg.mode == "fisher":
        if cfg.market is None:
            errors.append("market spec is required")
        elif "file" in cfg.market and not Path(cfg.market["file"]).exists():
            errors.append(f"market file not found: {cfg.market['file']}")
    if cfg.mode == "gradient" and cfg.algo not in dyn.ALGORITHMS:
        errors.append(f"unknown algorithm {cfg.algo!r}")
    return errors


def resolve_game(spec: dict, seed=0) -> PolymatrixGame:
    """Game from {"file": path}, {"inline": dict} or generator kwargs.

    Generator specs without an explicit "seed" use the run seed, so seed
    sweeps range over game instances.
    """
    if "file" in spec:
        return load_game(spec["file"])
    if "inline" in spec:
        return PolymatrixGame.from_dict(spec["inline"])
    kw = dict(spec)
    kind = kw.pop("kind")
    kw.setdefault("seed", seed)
    return generate_game(kind, **kw)


def resolve_market(spec: dict, seed=0) -> fisher_mod.FisherMarket:
    if "file" in spec:
        return fisher_mod.load_market(spec["file"])
    if "budgets" in spec:
        return fisher_mod.FisherMarket.from_dict(spec)
    kw = dict(spec)
    kw.setdefault("seed", seed)
    return fisher_mod.random_linear_market(kw["m"], kw["n"], seed=kw["seed"])


def resolve_schedule(spec: dict) -> bandit_mod.EpochSchedule:
    return bandit_mod.EpochSchedule(**spec)


def _learner_specs(cfg: ExperimentConfig, game: PolymatrixGame):
    if cfg.players is not None:
        if len(cfg.players) != game.n:
            raise ConfigError(f"{len(cfg.players)} player specs for {game.n} players")
        return [dyn.LearnerSpec(**p) for p in cfg.players]
    return [
        dyn.LearnerSpec(algo=cfg.algo, eta=cfg.eta, weights=cfg.weights)
        for _ in range(game.n)
    ]


# -- per-seed cells ----------------------------------------------------------


def _gradient_cell(cfg: ExperimentConfig, seed: int) -> dict:
    game = resolve_game(cfg.game, seed=seed)
    traj = dyn.run_full_feedback(game, _learner_specs(cfg, game), cfg.T, seed=seed)
    eta = cfg.eta if cfg.eta is not None else dyn.gradient_step_size(game.n)
    bound = float(np.log(game.action_counts).sum()) / (eta * cfg.T)
    final_gap = float(traj.tgap_played[-1])
    result = {
        "seed": seed,
        "final_tgap_last": final_gap,
        "final_tgap_avg": float(traj.tgap_inner_avg[-1]),
        "gap_bound": bound,
        "bound_slack": bound - final_gap,
    }
    csv_text = "\n".join(dyn.trajectory_csv_lines(traj)) + "\n"
    passed = (not cfg.certified) or result["bound_slack"] >= -1e-9
    return {"result": result, "csv": csv_text, "passed": passed}


def _bandit_cell(cfg: ExperimentConfig, seed: int) -> dict:
    game = resolve_game(cfg.game, seed=seed)
    sched = resolve_schedule(cfg.schedule)
    with warnings.catch_warnings():
        if not cfg.certified:
            warnings.simplefilter("ignore")
        traj = bandit_mod.run_bandit(
            game, sched, eta=cfg.eta, seed=seed, delta=cfg.delta,
            epochs=cfg.epochs, monitor_c=cfg.monitor_c,
        )
    rec = bandit_mod.recovery_error_audit(traj)
    reg = bandit_mod.regret_error_bound_audit(traj)
    est = bandit_mod.estimation_error_audit(traj)
    result = {
        "seed": seed,
        "final_tgap_mixed": float(traj.tgap_mixed[-1]),
        "recovery_slack_min": float(
            min(rec["slack_first_order"].min(), rec["slack_second_order"].min())
        ),
        "regret_bound_slack_min": float(reg["slack"].min()),
        "estimation_violations": est["violations"],
        "switch_epochs": traj.switch_epoch,
        "certified": traj.meta["certified"],
    }
    passed = result["recovery_slack_min"] >= -1e-6 and result["regret_bound_slack_min"] >= -1e-6
    csv_text = "\n".join(bandit_mod.bandit_csv_lines(traj)) + "\n"
    return {"result": result, "csv": csv_text, "passed": passed}


def _fisher_cell(cfg: ExperimentConfig, seed: int) -> dict:
    market = resolve_market(cfg.market, seed=seed)
    out = fisher_mod.run_a2l_prd(market, cfg.T)
    p = out["played_prices"]
    x = out["played_spends"] / p[:, None, :]
    gaps = np.array([fisher_mod.market_gap(market, p[t], x[t]).max() for t in range(cfg.T)])
    conservation = float(np.abs(p.sum(axis=1) - market.budgets.sum()).max())
    result = {
        "seed": seed,
        "final_prices": p[-1].tolist(),
        "final_gap": float(gaps[-1]),
        "conservation_dev": conservation,
    }
    csv_text = "\n".join(fisher_mod.price_csv_lines(p, gaps)) + "\n"
    return {"result": result, "csv": csv_text, "passed": conservation <= 1e-9}


_CELLS = {"gradient": _gradient_cell, "bandit": _bandit_cell, "fisher": _fisher_cell}


def _run_cell(cfg_dict: dict, seed: int) -> dict:
    cfg = ExperimentConfig(**cfg_dict)
    return _CELLS[cfg.mode](cfg, seed)


def run(cfg: ExperimentConfig) -> dict:
    """Execute all seeds of a validated config and persist the outputs.

    Returns the summary dict (also written to out_dir/summary.json); the
    "passed" field reports whether every per-seed invariant check passed.
    """
    errors = validate_config(cfg)
    if errors:
        raise ConfigError("invalid config:\n  - " + "\n  - ".join(errors))
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    seeds = sorted(cfg.seeds)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            cells = list(pool.map(_run_cell, [cfg.to_dict()] * len(seeds), seeds))
    else:
        cells = [_run_cell(cfg.to_dict(), s) for s in seeds]

    results = []
    for seed, cell in zip(seeds, cells):  # merged in deterministic seed order
        csv_path = out_dir / f"{cfg.mode}_seed{seed}.csv"
        with open(csv_path, "w", newline="\n") as f:
            f.write(cell["csv"])
        results.append(cell["result"])
        log.info("seed %s -> %s", seed, csv_path)

    summary = {
        "schema_version": SCHEMA_VERSION,
        "mode": cfg.mode,
        "config": cfg.to_dict(),
        "config_hash": config_hash(cfg),
        "prng": PRNG_NAME,
        "results": results,
        "passed": all(c["passed"] for c in cells),
    }
    with open(out_dir / "summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
    return summary


# -- rate fitting ------------------------------------------------------------


def fit_rate(ts, values, t_min=None, t_max=None) -> dict:
    """Least-squares slope of log(value) against log(t) inside a window.

    Nonpositive values in the window are excluded and counted.  Requires at
    least 10 usable points.  Returns slope, its standard error, and counts.
    """
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = np.ones(len(ts), dtype=bool)
    if t_min is not None:
        keep &= ts >= t_min
    if t_max is not None:
        keep &= ts <= t_max
    in_window = int(keep.sum())
    keep &= values > 0
    excluded = in_window - int(keep.sum())
    n = int(keep.sum())
    if n < 10:
        raise ValueError(f"need at least 10 positive points in the window, got {n}")
    x = np.log(ts[keep])
    y = np.log(values[keep])
    xc = x - x.mean()
    slope = float((xc @ y) / (xc @ xc))
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    dof = max(n - 2, 1)
    stderr = float(np.sqrt((resid @ resid) / dof / (xc @ xc)))
    return {"slope": slope, "stderr": stderr, "n_used": n, "n_excluded": excluded}
