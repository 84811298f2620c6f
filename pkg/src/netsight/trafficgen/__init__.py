"""Synthetic scenario generator producing captures with exact label sidecars."""

from .builders import (
    behavior_scenario,
    dependency_scenario,
    iot_scenario,
    occupancy_scenario,
    office_small,
    policy_scenario,
    random_scenario,
    reassignment_scenario,
    throughput_scenario,
)
from .generate import GeneratedCapture, generate, registry_rows
from .scenario import (
    Block,
    DeviceSpec,
    InvalidScenario,
    Scenario,
    bundled_scenario,
    load_scenario,
    parse_scenario,
    validate,
)
from .verify import SelfCheckFailure, SelfCheckReport, verify_sidecar
from .world import write_knowledge

__all__ = [name for name in dir() if not name.startswith("_")]
