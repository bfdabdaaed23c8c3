"""
Unit tests for Pydantic models.
"""

import pytest
from pydantic import ValidationError

from enatp.models import (
    CheckResult,
    CnatpReport,
    ConcurrenceResult,
    ExperimentConfig,
    ResultRecord,
    ScheduleEntry,
    SuiteReport,
)


def test_concurrence_result_bounds():
    """Test that concurrence values outside [0, 1] are rejected."""
    ok = ConcurrenceResult(value=0.5, sqrt_eigs=[0.7, 0.2, 0.0, 0.0])
    assert ok.value == 0.5
    with pytest.raises(ValidationError):
        ConcurrenceResult(value=1.5, sqrt_eigs=[1, 0, 0, 0])
    with pytest.raises(ValidationError):
        ConcurrenceResult(value=0.5, sqrt_eigs=[1, 0, 0])


def test_schedule_entry_defaults():
    """Test ScheduleEntry with only the measurement."""
    entry = ScheduleEntry(measurement="brun(0.3)")
    assert entry.target == "system"
    assert entry.rounds == 1


def test_schedule_entry_invalid():
    """Test ScheduleEntry validation."""
    with pytest.raises(ValidationError):
        ScheduleEntry(measurement="brun(0.3)", target="bath")
    with pytest.raises(ValidationError):
        ScheduleEntry(measurement="brun(0.3)", rounds=-1)
    with pytest.raises(ValidationError):
        ScheduleEntry(measurement="brun(0.3)", extra=1)
    with pytest.raises(ValidationError, match="speshul"):
        ScheduleEntry(measurement="speshul(0.6,0,0,1)")
    with pytest.raises(ValidationError):
        ScheduleEntry(measurement="brun(2)")


def test_experiment_config_minimal():
    """Test ExperimentConfig with a preset state."""
    config = ExperimentConfig(state="bell-phi-plus", schedule=[{"measurement": "brun(0.6)", "rounds": 2}])
    assert config.mode == "unknown"
    assert config.experiment_id == "experiment"
    assert config.schedule[0].rounds == 2
    assert config.tolerances == {}


def test_experiment_config_matrix_state():
    """Test ExperimentConfig with explicit entries, real or [re, im]."""
    entries = [0.25 if i % 5 == 0 else 0.0 for i in range(16)]
    entries[1] = [0.0, 0.0]
    config = ExperimentConfig(state=entries, schedule=[{"measurement": "example2"}])
    assert len(config.state) == 16


def test_experiment_config_rejects_bad_input():
    """Test ExperimentConfig validation failures."""
    with pytest.raises(ValidationError):
        ExperimentConfig(state=[0.25] * 15, schedule=[{"measurement": "example2"}])
    with pytest.raises(ValidationError):
        ExperimentConfig(state="bell-phi-plus", schedule=[])
    with pytest.raises(ValidationError):
        ExperimentConfig(state="bell-phi-plus", schedule=[{"measurement": "example2"}], mode="fast")
    with pytest.raises(ValidationError):
        ExperimentConfig(
            state="bell-phi-plus", schedule=[{"measurement": "example2"}], tolerances={"prune": -1.0}
        )
    with pytest.raises(ValidationError):
        ExperimentConfig(
            state="bell-phi-plus", schedule=[{"measurement": "example2"}], tolerances={"speed": 1.0}
        )
    with pytest.raises(ValidationError, match="Werner weight"):
        ExperimentConfig(state="werner(1.5)", schedule=[{"measurement": "example2"}])


def test_result_record_optional_fields():
    """Test ResultRecord with absent prediction."""
    record = ResultRecord(
        experiment_id="x", rounds=0, initial_concurrence=1.0, final_concurrence=1.0, separable=False
    )
    assert record.epsilon is None
    assert record.predicted_concurrence is None
    assert record.abs_error is None
    assert record.min_branch_concurrence is None


def test_suite_report_passed():
    """Test that a suite passes only when all checks pass."""
    report = SuiteReport(suite="s", seed=1, trials=1, checks=[CheckResult(name="a", passed=True, margin=0.0)])
    assert report.passed
    report.checks.append(CheckResult(name="b", passed=False, margin=1.0))
    assert not report.passed


def test_cnatp_report_margin():
    """Test the margin of a correlation certificate."""
    report = CnatpReport(
        epsilon=0.5,
        initial_gap=1.0,
        gap_plus=0.3,
        gap_minus=0.2,
        gap_plus_direct=0.3,
        gap_minus_direct=0.2,
        probability_plus=0.5,
        probability_minus=0.5,
    )
    assert report.margin == 0.2
    assert report.model_dump()["margin"] == 0.2
