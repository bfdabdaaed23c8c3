"""
Pydantic models for reports, configuration and result records.
"""

from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator


class ConcurrenceResult(BaseModel):
    """
    Wootters concurrence with the quantities it was built from.

    Attributes:
        value: Concurrence in [0, 1].
        sqrt_eigs: Square roots of the eigenvalues of ρρ̃, descending.
    """

    value: float = Field(ge=0.0, le=1.0)
    sqrt_eigs: List[float] = Field(min_length=4, max_length=4)


class SeparabilityVerdict(BaseModel):
    """
    Peres–Horodecki verdict alongside the concurrence test.

    Attributes:
        concurrence_zero: Concurrence below the zero tolerance.
        ppt: Smallest partial-transpose eigenvalue at or above ``-tol``.
        min_pt_eigenvalue: Smallest eigenvalue of the partial transpose.
        pt_determinant: Determinant of the partial transpose.
        product_gap: ‖T − a bᵀ‖ in the Frobenius norm.
    """

    concurrence_zero: bool
    ppt: bool
    min_pt_eigenvalue: float
    pt_determinant: float
    product_gap: float = Field(ge=0.0)


class WeaknessReport(BaseModel):
    """
    Per-outcome decomposition q(I + ε̂) of a measurement.

    Attributes:
        label: Measurement label.
        q_values: Scale q of each outcome.
        strengths: Spectral norm of ε̂ for each outcome.
        threshold: Weakness threshold used.
        is_weak: True when every strength is below the threshold.
    """

    label: str
    q_values: List[float]
    strengths: List[float]
    threshold: float
    is_weak: bool


class CnatpReport(BaseModel):
    """
    Correlation gaps of both special weak outcomes.

    Attributes:
        epsilon: Measurement strength.
        initial_gap: Product gap of the input state.
        gap_plus: Product gap after the "+" outcome, from the Bloch update.
        gap_minus: Product gap after the "−" outcome, from the Bloch update.
        gap_plus_direct: Same as ``gap_plus`` from full matrix conjugation.
        gap_minus_direct: Same as ``gap_minus`` from full matrix conjugation.
        probability_plus: Probability of the "+" outcome.
        probability_minus: Probability of the "−" outcome.
    """

    epsilon: float
    initial_gap: float
    gap_plus: float
    gap_minus: float
    gap_plus_direct: float
    gap_minus_direct: float
    probability_plus: float
    probability_minus: float

    @computed_field
    @property
    def margin(self) -> float:
        """Smaller of the two outcome gaps."""
        return min(self.gap_plus, self.gap_minus)


class Theorem1Report(BaseModel):
    """
    Result of the randomized invertible-schedule check.

    Attributes:
        trials: Number of random (state, schedule) pairs.
        rounds: Rounds per side in each schedule.
        branches_checked: Total number of branches inspected.
        min_branch_concurrence: Smallest branch concurrence seen.
        max_ratio_error: Largest |C − predicted| over all branches.
        singular_detected: Injected singular outcome predicted and produced zero concurrence.
        passed: Every check held.
    """

    trials: int
    rounds: int
    branches_checked: int
    min_branch_concurrence: float
    max_ratio_error: float
    singular_detected: bool
    passed: bool


class CheckResult(BaseModel):
    """
    One named invariant check.

    Attributes:
        name: Invariant name.
        passed: Outcome.
        margin: Worst-case value of the checked quantity.
        detail: Free-form context.
    """

    name: str
    passed: bool
    margin: float
    detail: str = ""


class SuiteReport(BaseModel):
    """
    Collection of checks produced by one verification suite.
    """

    suite: str
    seed: int
    trials: int
    checks: List[CheckResult] = Field(default_factory=list)

    @computed_field
    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


class InterpretationOutcome(BaseModel):
    """
    Final state of one reading of where a measurement acts.

    Attributes:
        target: ``system``, ``environment`` or ``both``.
        final_concurrence: Concurrence of the outcome-summed state.
        min_pt_eigenvalue: Smallest partial-transpose eigenvalue of that state.
        ppt: PPT verdict.
        separable: Concurrence is zero within tolerance.
        min_branch_concurrence: Smallest concurrence over the known-outcome branches.
    """

    target: Literal["system", "environment", "both"]
    final_concurrence: float
    min_pt_eigenvalue: float
    ppt: bool
    separable: bool
    min_branch_concurrence: float


class ExampleReport(BaseModel):
    """
    Reproduction of one worked example.

    Attributes:
        which: Example identifier.
        parameters: Parameters used.
        initial_concurrence: Concurrence before measurement.
        recorded_target: Interpretation the headline fields refer to.
        final_concurrence: Concurrence of the outcome-summed state.
        separable: Final state has zero concurrence.
        ppt: Final state has a positive partial transpose.
        pt_determinant: Determinant of the final partial transpose.
        min_branch_concurrence: Smallest concurrence over the known-outcome branches.
        all_branches_entangled: Every individual branch keeps positive concurrence.
        interpretations: The other readings evaluated for comparison.
        final_matrix_real: Real part of the final state.
        expected_matrix_error: Max deviation from the closed-form final matrix, when one exists.
        weakness: Weakness classification of the measurement.
    """

    which: str
    parameters: Dict[str, float] = Field(default_factory=dict)
    initial_concurrence: float
    recorded_target: Literal["system", "environment", "both"]
    final_concurrence: float
    separable: bool
    ppt: bool
    pt_determinant: float
    min_branch_concurrence: float
    all_branches_entangled: bool
    interpretations: List[InterpretationOutcome] = Field(default_factory=list)
    final_matrix_real: List[List[float]] = Field(default_factory=list)
    expected_matrix_error: Optional[float] = None
    weakness: Optional[WeaknessReport] = None


class ScheduleEntry(BaseModel):
    """
    One block of identical rounds.

    Attributes:
        measurement: Measurement preset string.
        target: Which qubit(s) the measurement acts on.
        rounds: Number of repetitions.
    """

    model_config = ConfigDict(extra="forbid")

    measurement: str
    target: Literal["system", "environment", "both"] = "system"
    rounds: int = Field(default=1, ge=0)

    @field_validator("measurement")
    @classmethod
    def _check_measurement(cls, value: str) -> str:
        # measurements imports this module.
        # pylint: disable=import-outside-toplevel
        from enatp.measurements import measurement_preset

        measurement_preset(value)
        return value


class ExperimentConfig(BaseModel):
    """
    Experiment description read from a TOML file.

    Attributes:
        experiment_id: Identifier copied to every result row.
        state: Preset name, or 16 entries of ρ in row-major order, each a real number or [re, im].
        schedule: Measurement blocks applied in order.
        mode: ``unknown`` mixes outcomes, ``known`` tracks branches.
        collapse: Merge identical commuting branches with binomial multiplicities.
        tolerances: Overrides of named tolerances (``concurrence_zero``, ``prune``).
        seed: Seed for the ``random-pure`` and ``random-mixed`` state presets.
    """

    model_config = ConfigDict(extra="forbid")

    experiment_id: str = "experiment"
    state: Union[str, List[Union[float, List[float]]]]
    schedule: List[ScheduleEntry] = Field(min_length=1)
    mode: Literal["known", "unknown"] = "unknown"
    collapse: bool = False
    tolerances: Dict[str, float] = Field(default_factory=dict)
    seed: int = 0

    @field_validator("state")
    @classmethod
    def _check_state(cls, value):
        if isinstance(value, str):
            # pylint: disable=import-outside-toplevel
            from enatp.states import seeded_state_preset

            seeded_state_preset(value, 0)
            return value
        if isinstance(value, list):
            if len(value) != 16:
                raise ValueError(f"state needs 16 entries, got {len(value)}")
            for entry in value:
                if isinstance(entry, list) and len(entry) != 2:
                    raise ValueError("complex state entries must be [re, im]")
        return value

    @field_validator("tolerances")
    @classmethod
    def _check_tolerances(cls, value: Dict[str, float]) -> Dict[str, float]:
        known = {"concurrence_zero", "prune"}
        for name, tol in value.items():
            if name not in known:
                raise ValueError(f"unknown tolerance {name!r}, expected one of {sorted(known)}")
            if tol <= 0:
                raise ValueError(f"tolerance {name!r} must be positive")
        return value


class ResultRecord(BaseModel):
    """
    One CSV row.

    Attributes:
        experiment_id: Experiment identifier.
        epsilon: Special weak strength, when the measurement has one.
        rounds: Cumulative rounds applied.
        initial_concurrence: Concurrence of the input.
        final_concurrence: Concurrence after the rounds (probability-weighted over branches in known mode).
        predicted_concurrence: Closed-form prediction, when one applies.
        abs_error: |final − predicted|, when a prediction exists.
        separable: Final state has zero concurrence.
        min_branch_concurrence: Smallest branch concurrence (known mode only).
    """

    experiment_id: str
    epsilon: Optional[float] = None
    rounds: int = Field(ge=0)
    initial_concurrence: float = Field(ge=0.0, le=1.0)
    final_concurrence: float = Field(ge=0.0, le=1.0)
    predicted_concurrence: Optional[float] = None
    abs_error: Optional[float] = None
    separable: bool
    min_branch_concurrence: Optional[float] = None
