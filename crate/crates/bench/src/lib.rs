//! Shared fixtures for the pipeline benchmarks.

use glv_surgery::{IntegratorConfig, State, SystemParams};

pub fn stable_params() -> SystemParams {
    SystemParams::new(3.0, 3.0, 3.0).expect("valid parameters")
}

pub fn toroidal_params() -> SystemParams {
    SystemParams::new(2.9851, 3.0, 3.0).expect("valid parameters")
}

pub fn shell_ic() -> State {
    State::at_origin_time(1.0, 1.59, 0.81)
}

pub fn torus_ic() -> State {
    State::at_origin_time(1.0, 1.0, 0.9)
}

pub fn config(t_end: f64) -> IntegratorConfig {
    IntegratorConfig {
        t_end,
        ..Default::default()
    }
}
