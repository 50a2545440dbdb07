//! Randomized invalid configurations must be rejected during resolution,
//! before any computation starts.

use glv_surgery_cli::config::{
    resolve_simulate, DynamicsArgs, FileConfig, SimulateArgs,
};
use proptest::prelude::*;

#[allow(clippy::too_many_arguments)]
fn args(
    a: f64,
    b: f64,
    c: f64,
    ic: [f64; 3],
    t_end: f64,
    sample_dt: f64,
    rtol: f64,
    atol: f64,
) -> SimulateArgs {
    SimulateArgs {
        dynamics: DynamicsArgs {
            a: Some(a),
            b: Some(b),
            c: Some(c),
            ic: Some(ic),
            t_end: Some(t_end),
            sample_dt: Some(sample_dt),
            rtol: Some(rtol),
            atol: Some(atol),
            h_init: None,
            h_max: None,
        },
        out: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Break exactly one invariant at random; resolution must fail.
    #[test]
    fn invalid_configs_rejected(
        which in 0usize..7,
        good_a in 0.5f64..5.0,
        good_b in 0.5f64..5.0,
        good_c in 0.5f64..5.0,
        bad_mag in 0.0f64..10.0,
        ic0 in 0.1f64..2.0,
    ) {
        let mut a = good_a;
        let mut b = good_b;
        let mut c = good_c;
        let mut ic = [ic0, 1.0, 1.0];
        let mut t_end = 100.0;
        let mut sample_dt = 0.05;
        let mut rtol = 1e-9;
        let mut atol = 1e-12;
        match which {
            0 => a = -bad_mag,                  // nonpositive parameter
            1 => b = 0.0,
            2 => c = f64::NAN,
            3 => ic = [-0.5, 1.0, 1.0],         // negative initial condition
            4 => t_end = -1.0,
            5 => sample_dt = 0.0,
            6 => { rtol = 1e-12; atol = 1e-9; } // atol > rtol
            _ => unreachable!(),
        }
        let result = resolve_simulate(
            &args(a, b, c, ic, t_end, sample_dt, rtol, atol),
            &FileConfig::default(),
        );
        prop_assert!(result.is_err(), "violation {which} was accepted");
    }

    /// Valid configurations in the usual ranges must resolve.
    #[test]
    fn valid_configs_accepted(
        a in 0.5f64..5.0,
        b in 0.5f64..5.0,
        c in 0.5f64..5.0,
        ic0 in 0.0f64..2.0,
        ic1 in 0.0f64..2.0,
        ic2 in 0.0f64..2.0,
        t_end in 1.0f64..500.0,
    ) {
        let result = resolve_simulate(
            &args(a, b, c, [ic0, ic1, ic2], t_end, 0.05, 1e-9, 1e-12),
            &FileConfig::default(),
        );
        prop_assert!(result.is_ok());
    }
}
