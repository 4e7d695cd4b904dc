"""Desk-scale simulator and experiment harness for a single-actuator,
two-rigid-body bipedal walker with spherical rolling feet."""

__version__ = "0.1.0"

from .gait import GaitCommand, ServoParams, commanded_angle, commanded_velocity, \
    servo_torque
from .model import BodyMassProperties, ContactMaterial, DesignRuleReport, FootSphere, \
    Primitive, WalkerParams, check_design_rules, compose_body, load_params, \
    mass_properties_oracle, mirror_params, save_params, stock_params, stock_params_path
from .dynamics import SimulationDiverged, Telemetry, WalkerState, contact_wrench, \
    detect_fall, foot_lowest_point, forward_dynamics, initial_state, integrate_step, \
    simulate
from .analysis import AnalysisWindow, GaitMetrics, PowerModel, analyze, \
    classify_stability, cost_of_transport, find_window, forward_speed, \
    roll_amplitude, segment_steps, yaw_midline
from .harness import ExperimentConfig, SearchResult, SweepResult, gait_search, \
    run_speed_sweep, run_trial, run_turn_sweep

__all__ = [name for name in dir() if not name.startswith("_")]
