"""
Experiment runner: TOML configuration, schedules, sweeps and CSV output.
"""

import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from enatp.config import Settings, get_settings
from enatp.entanglement import concurrence
from enatp.errors import (
    BadRangeError,
    ConfigParseError,
    EnatpError,
    InvariantViolationError,
)
from enatp.measurements import (
    Z_AXIS,
    SpecialWeakParams,
    measurement_preset,
    special_params_of_preset,
    special_weak,
)
from enatp.models import ExperimentConfig, ResultRecord
from enatp.sequences import Round, closed_form_concurrence, rounds_for, run_known, run_unknown
from enatp.states import DensityMatrix2Q, seeded_state_preset, state_preset
from enatp.verification import schmidt_aligned

CSV_COLUMNS = [
    "experiment_id",
    "epsilon",
    "rounds",
    "initial_concurrence",
    "final_concurrence",
    "predicted_concurrence",
    "abs_error",
    "separable",
    "min_branch_concurrence",
]
PROBABILITY_TOL = 1e-10


def _key_line(lines: Sequence[str], key: str, start: int = 0, stop: Optional[int] = None) -> Optional[int]:
    pattern = re.compile(rf"^\s*(\[\[?\s*{re.escape(key)}\s*\]\]?|{re.escape(key)}\s*=)")
    for number in range(start, len(lines) if stop is None else stop):
        if pattern.match(lines[number]):
            return number + 1
    return None


def _error_line(text: str, loc: Tuple) -> Optional[int]:
    """Line of the key named by a validation error location; schedule fields are looked up in their own block."""
    if not loc:
        return None
    lines = text.splitlines()
    header = re.compile(r"^\s*\[\[\s*schedule\s*\]\]")
    blocks = [n for n, line in enumerate(lines) if header.match(line)]
    if loc[0] != "schedule" or len(loc) < 2 or not isinstance(loc[1], int) or loc[1] >= len(blocks):
        return _key_line(lines, str(loc[0]))
    start = blocks[loc[1]]
    stop = next((n for n in range(start + 1, len(lines)) if lines[n].lstrip().startswith("[")), len(lines))
    if len(loc) > 2:
        return _key_line(lines, str(loc[2]), start + 1, stop) or start + 1
    return start + 1


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """
    Parse and validate an experiment configuration.

    Raises:
        ConfigParseError: With the offending line number when it can be located.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(f"{source}: {exc}") from exc
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        messages = []
        for error in exc.errors():
            line = _error_line(text, error["loc"])
            where = f"line {line}" if line else "top level"
            path = ".".join(str(part) for part in error["loc"])
            messages.append(f"{source}:{where}: {path}: {error['msg']}")
        raise ConfigParseError("\n".join(messages)) from exc


def load_config(path: Path) -> ExperimentConfig:
    """Read and parse a TOML experiment file."""
    return parse_config(Path(path).read_text(encoding="utf-8"), source=str(path))


def resolve_state(config: ExperimentConfig) -> DensityMatrix2Q:
    """
    Build the input state from a preset name or 16 row-major entries.

    Raises:
        ConfigParseError: If the entries do not form a valid density matrix.
    """
    if isinstance(config.state, str):
        return seeded_state_preset(config.state, config.seed)
    entries = [complex(e[0], e[1]) if isinstance(e, list) else complex(e) for e in config.state]
    try:
        return DensityMatrix2Q(np.array(entries).reshape(4, 4))
    except EnatpError as exc:
        raise ConfigParseError(f"state: {exc}") from exc


def build_schedule(config: ExperimentConfig) -> Tuple[List[Round], List[Optional[float]]]:
    """Expand schedule entries into rounds, with the special weak ε of each round when it has one."""
    rounds: List[Round] = []
    epsilons: List[Optional[float]] = []
    for entry in config.schedule:
        measurement = measurement_preset(entry.measurement)
        params = special_params_of_preset(entry.measurement)
        rounds += rounds_for(measurement, entry.target, entry.rounds)
        epsilons += [None if params is None else params.epsilon] * entry.rounds
    return rounds, epsilons


def _single_params(config: ExperimentConfig, side: str) -> Tuple[Optional[SpecialWeakParams], int, bool]:
    """(common params, round count, uniform) for the rounds touching ``side``."""
    found: List[SpecialWeakParams] = []
    count = 0
    uniform = True
    for entry in config.schedule:
        if entry.rounds == 0 or entry.target not in (side, "both"):
            continue
        params = special_params_of_preset(entry.measurement)
        if params is None:
            uniform = False
            continue
        found.append(params)
        count += entry.rounds
    if found and any(
        p.epsilon != found[0].epsilon or not np.allclose(p.n_hat, found[0].n_hat) for p in found
    ):
        uniform = False
    return (found[0] if found else None), count, uniform


def _leading_vector(rho: DensityMatrix2Q) -> np.ndarray:
    _, vectors = np.linalg.eigh(rho.matrix)
    return vectors[:, -1]


def decay_prediction(
    rho: DensityMatrix2Q,
    sys_params: Optional[SpecialWeakParams],
    n: int,
    env_params: Optional[SpecialWeakParams],
    y: int,
) -> Optional[float]:
    """
    Closed-form unknown-outcome concurrence, or None when it does not apply.

    One-sided decay holds for every pure input. Two-sided decay needs the input's
    Schmidt basis to be the eigenbasis of both measurement axes.
    """
    if not rho.is_pure:
        return None
    c0 = concurrence(rho).value
    if n and y:
        if not schmidt_aligned(_leading_vector(rho), sys_params.n_hat, env_params.n_hat):
            return None
        return closed_form_concurrence(c0, sys_params.epsilon, n, env_params.epsilon, y)
    if n:
        return closed_form_concurrence(c0, sys_params.epsilon, n)
    if y:
        return closed_form_concurrence(c0, env_params.epsilon, y)
    return c0


def _check_record(record: ResultRecord, tol: float) -> None:
    if record.abs_error is not None and record.abs_error > tol:
        raise InvariantViolationError(
            f"{record.experiment_id}: rounds={record.rounds} deviates from the closed form by {record.abs_error:.3e}"
        )


def run_experiment(config: ExperimentConfig, settings: Optional[Settings] = None) -> List[ResultRecord]:
    """
    Execute an experiment; one record for the input and one per applied round.

    Raises:
        InvariantViolationError: If probability conservation, branch positivity or
            the closed-form decay law fails.
    """
    settings = settings or get_settings()
    zero_tol = config.tolerances.get("concurrence_zero", settings.concurrence_zero_tol)
    prune_tol = config.tolerances.get("prune", settings.prune_tol)
    rho = resolve_state(config)
    schedule, epsilons = build_schedule(config)
    sys_params, sys_total, sys_uniform = _single_params(config, "system")
    env_params, env_total, env_uniform = _single_params(config, "environment")
    # Known-mode branch averages follow the closed form only when one side is measured.
    predictable = sys_uniform and env_uniform and (config.mode == "unknown" or not (sys_total and env_total))
    c0 = concurrence(rho).value

    records: List[ResultRecord] = []
    state = rho
    n_sys = n_env = 0
    for k in range(len(schedule) + 1):
        if k:
            system, environment = schedule[k - 1]
            n_sys += system is not None
            n_env += environment is not None
        min_branch = None
        complete = True
        if config.mode == "unknown":
            if k:
                state = run_unknown(state, [schedule[k - 1]])
            final = concurrence(state).value
        else:
            ensemble = run_known(
                rho,
                schedule[:k],
                prune_tol=prune_tol,
                max_branches=settings.max_branches,
                collapse=config.collapse,
                workers=settings.workers,
            )
            if abs(ensemble.total_probability - 1.0) > PROBABILITY_TOL:
                raise InvariantViolationError(
                    f"Branch probabilities sum to {ensemble.total_probability!r} after {k} rounds"
                )
            min_branch = ensemble.min_concurrence
            complete = ensemble.dropped_mass <= PROBABILITY_TOL
            final = ensemble.average_concurrence()
            invertible = all(m.is_invertible for step in schedule[:k] for m in step if m is not None)
            if invertible and c0 > zero_tol and min_branch <= 0.0:
                raise InvariantViolationError(f"A branch lost all entanglement after {k} invertible rounds")

        predicted = None
        if predictable and complete and sys_total + env_total > 0:
            predicted = decay_prediction(rho, sys_params, n_sys, env_params, n_env)
        if not 0.0 <= final <= 1.0:
            raise InvariantViolationError(f"Concurrence {final} outside [0, 1]")
        record = ResultRecord(
            experiment_id=config.experiment_id,
            epsilon=epsilons[k - 1] if k else (epsilons[0] if epsilons else None),
            rounds=k,
            initial_concurrence=c0,
            final_concurrence=final,
            predicted_concurrence=predicted,
            abs_error=None if predicted is None else abs(final - predicted),
            separable=bool(final < zero_tol),
            min_branch_concurrence=min_branch,
        )
        _check_record(record, max(zero_tol, 1e-9))
        records.append(record)
    return records


def run_sweep(
    eps_min: float,
    eps_max: float,
    eps_steps: int,
    rounds_max: int,
    state: str = "bell-phi-plus",
    axis: Sequence[float] = tuple(Z_AXIS),
    target: str = "system",
    workers: int = 1,
    zero_tol: Optional[float] = None,
) -> List[ResultRecord]:
    """
    Unknown-outcome decay grid over ε and the number of rounds.

    Rows are ordered ε-major, then by round count, whatever ``workers`` is.

    Raises:
        BadRangeError: If the ε range or the counts are out of bounds.
    """
    if not 0.0 <= eps_min <= eps_max <= 1.0:
        raise BadRangeError(f"Need 0 <= eps_min <= eps_max <= 1, got [{eps_min}, {eps_max}]")
    if eps_steps < 1 or rounds_max < 0:
        raise BadRangeError("eps_steps must be at least 1 and rounds_max nonnegative")
    if target not in ("system", "environment", "both"):
        raise BadRangeError(f"Unknown target {target!r}")
    zero_tol = get_settings().concurrence_zero_tol if zero_tol is None else zero_tol
    rho = state_preset(state)
    c0 = concurrence(rho).value
    axis_vec = np.asarray(axis, dtype=float)

    def column(eps: float) -> List[ResultRecord]:
        params = SpecialWeakParams(float(eps), axis_vec)
        step = rounds_for(special_weak(params), target, 1)
        n_sys = 1 if target in ("system", "both") else 0
        n_env = 1 if target in ("environment", "both") else 0
        rows = []
        current = rho
        for n in range(rounds_max + 1):
            if n:
                current = run_unknown(current, step)
            final = concurrence(current).value
            predicted = decay_prediction(rho, params, n * n_sys, params, n * n_env)
            rows.append(
                ResultRecord(
                    experiment_id=f"sweep:{state}",
                    epsilon=float(eps),
                    rounds=n,
                    initial_concurrence=c0,
                    final_concurrence=final,
                    predicted_concurrence=predicted,
                    abs_error=None if predicted is None else abs(final - predicted),
                    separable=bool(final < zero_tol),
                )
            )
        return rows

    grid = np.linspace(eps_min, eps_max, eps_steps)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            columns = list(pool.map(column, grid))
    else:
        columns = [column(eps) for eps in grid]
    return [row for rows in columns for row in rows]


def records_frame(records: Sequence[ResultRecord]) -> pd.DataFrame:
    """Records as a DataFrame with the fixed CSV column order."""
    frame = pd.DataFrame([r.model_dump() for r in records], columns=CSV_COLUMNS)
    frame["separable"] = frame["separable"].map({True: "true", False: "false"})
    return frame


def write_records(records: Sequence[ResultRecord], path: Path) -> None:
    """Write records as CSV with 17 significant digits."""
    records_frame(records).to_csv(path, index=False, float_format="%.17g", na_rep="")


def summarize(records: Sequence[ResultRecord]) -> Dict[str, float]:
    """Worst-case numbers printed after a run or sweep."""
    errors = [r.abs_error for r in records if r.abs_error is not None]
    return {
        "rows": float(len(records)),
        "max_abs_error": max(errors) if errors else 0.0,
        "min_final_concurrence": min(r.final_concurrence for r in records) if records else 0.0,
    }
