use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphere_control::analysis::{check_convergence, lyapunov_value};
use sphere_control::controller::{control_torque, d_psi, error_function, velocity_error};
use sphere_control::model::kinetic_energy;
use sphere_control::sim::{simulate_open_loop, step_with, ConstantTorque};
use sphere_control::so3::{e1, e3, exp_so3};
use sphere_control::sweep::{sweep, Grid, Param, RunStatus};
use sphere_control::{simulate, Mode, RobotState, Rotation, Scenario, SimConfig, Vec3};

fn end_state(base: &Scenario, dt: f64) -> RobotState {
    let mut sc = base.clone();
    sc.config.dt = dt;
    sc.config.record_every = usize::MAX;
    simulate(&sc).unwrap().last().unwrap().state
}

fn state_distance(a: &RobotState, b: &RobotState) -> f64 {
    [
        (a.x - b.x).abs(),
        (a.y - b.y).abs(),
        (a.omega - b.omega).amax(),
        (a.attitude.matrix() - b.attitude.matrix()).amax(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

#[test]
fn integrator_is_fourth_order() {
    for preset in ["fig2", "fig3"] {
        let mut sc = Scenario::preset(preset).unwrap();
        sc.config.t_final = 2.0;
        let reference = end_state(&sc, 1e-5);
        let coarse = state_distance(&end_state(&sc, 4e-3), &reference);
        let fine = state_distance(&end_state(&sc, 2e-3), &reference);
        let ratio = coarse / fine;
        assert!((12.0..=20.0).contains(&ratio), "{preset}: ratio {ratio}");
    }
}

#[test]
fn lyapunov_rate_matches_finite_differences_at_integrator_accuracy() {
    // h = dt = 1e-4 keeps the O(h²) truncation of the central difference
    // well below the integrator error.
    let mut sc = Scenario::fig2();
    sc.config = SimConfig {
        dt: 1e-4,
        t_final: 5.0,
        record_every: 1,
        ..SimConfig::default()
    };
    let traj = simulate(&sc).unwrap();
    let s = traj.samples();
    let h = sc.config.dt;
    let worst = (1..s.len() - 1)
        .map(|k| {
            let fd = (s[k + 1].energy.lyapunov - s[k - 1].energy.lyapunov) / (2.0 * h);
            (fd - s[k].energy.lyapunov_rate).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-5, "{worst:e}");
}

#[test]
fn lyapunov_is_nonincreasing_per_step() {
    for preset in ["fig2", "fig3"] {
        let mut sc = Scenario::preset(preset).unwrap();
        sc.config.record_every = 1;
        let traj = simulate(&sc).unwrap();
        let worst = traj
            .samples()
            .windows(2)
            .map(|w| w[1].energy.lyapunov - w[0].energy.lyapunov)
            .fold(f64::MIN, f64::max);
        assert!(worst <= 1e-8, "{preset}: {worst:e}");
        let v0 = lyapunov_value(&sc.initial, &sc.gains, &sc.params);
        assert_eq!(traj.samples()[0].energy.lyapunov, v0);
    }
}

#[test]
fn psi_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut sc = Scenario::fig2();
    sc.initial = RobotState::new(
        rng.random_range(-5.0..5.0),
        rng.random_range(-5.0..5.0),
        exp_so3(&Vec3::from_fn(|_, _| rng.random_range(-3.0..3.0))),
        Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)),
    )
    .unwrap();
    sc.config.t_final = 5.0;
    sc.config.record_every = 50;
    let traj = simulate(&sc).unwrap();
    let h = 1e-6;
    let mut checked = 0;
    for sample in traj.samples() {
        let s = &sample.state;
        let analytic = d_psi(s, &sc.gains, &sc.params).dot(&s.omega);
        if analytic.abs() < 1e-2 {
            continue;
        }
        let ctrl = |_: usize, st: &RobotState| control_torque(st, &sc.gains, &sc.params).torque;
        let fwd = step_with(s, &sc.params, h, ctrl).unwrap();
        let back = step_with(s, &sc.params, -h, ctrl).unwrap();
        let fd = (error_function(fwd.x, fwd.y, &sc.gains) - error_function(back.x, back.y, &sc.gains)) / (2.0 * h);
        let rel = (fd - analytic).abs() / analytic.abs();
        assert!(rel <= 1e-6, "t = {}: rel {rel:e}", sample.t);
        checked += 1;
    }
    assert!(checked > 50, "{checked}");
}

#[test]
fn attitude_stays_on_the_group() {
    for preset in ["fig2", "fig3"] {
        let mut sc = Scenario::preset(preset).unwrap();
        sc.config.record_every = 1;
        let traj = simulate(&sc).unwrap();
        assert!(traj.max_orthogonality_error() <= 1e-9);
        for s in traj.samples() {
            assert!((s.state.attitude.matrix().determinant() - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn presets_reach_the_target_set() {
    let r2 = check_convergence(&simulate(&Scenario::fig2()).unwrap(), 0.05, 0.01).unwrap();
    assert!(r2.converged);
    assert_eq!(r2.spin_sign, 1);
    let r3 = check_convergence(&simulate(&Scenario::fig3()).unwrap(), 0.05, 0.01).unwrap();
    assert!(r3.converged);
    assert_eq!(r3.spin_sign, -1);
    for r in [r2, r3] {
        assert!(r.max_lyapunov_increase <= 1e-8);
        assert!(r.settling_time.unwrap() < 59.0);
    }
}

#[test]
fn constant_run_from_target_set() {
    let mut sc = Scenario::fig2();
    sc.initial = RobotState::new(0.0, 0.0, Rotation::about_z(0.7), e3()).unwrap();
    sc.config.t_final = 5.0;
    let traj = simulate(&sc).unwrap();
    let report = check_convergence(&traj, 0.05, 0.01).unwrap();
    assert!(report.converged);
    assert_eq!(report.settling_time, Some(0.0));
    for s in traj.samples() {
        assert!(s.state.position_norm() <= 1e-9);
        assert!(velocity_error(&s.state).norm() <= 1e-9);
    }
}

#[test]
fn free_spin_about_minor_axis_keeps_energy() {
    let mut sc = Scenario::fig2();
    sc.initial = RobotState::new(0.0, 0.0, Rotation::identity(), e1()).unwrap();
    sc.config = SimConfig {
        t_final: 10.0,
        mode: Mode::OpenLoop,
        ..SimConfig::default()
    };
    let traj = simulate_open_loop(&sc, &ConstantTorque(Vec3::zeros())).unwrap();
    let e0 = kinetic_energy(&sc.initial, &sc.params);
    let drift = traj
        .samples()
        .iter()
        .map(|s| (kinetic_energy(&s.state, &sc.params) - e0).abs())
        .fold(0.0, f64::max);
    assert!(drift <= 1e-10);
}

#[test]
fn tumbling_free_body_keeps_energy_to_integrator_accuracy() {
    let mut sc = Scenario::fig2();
    sc.initial = RobotState::new(0.0, 0.0, Rotation::identity(), Vec3::new(0.3, 1.0, 0.2)).unwrap();
    sc.config = SimConfig {
        t_final: 10.0,
        mode: Mode::OpenLoop,
        ..SimConfig::default()
    };
    let traj = simulate(&sc).unwrap();
    let e0 = kinetic_energy(&sc.initial, &sc.params);
    let drift = traj
        .samples()
        .iter()
        .map(|s| (kinetic_energy(&s.state, &sc.params) - e0).abs())
        .fold(0.0, f64::max);
    assert!(drift <= 1e-10, "{drift:e}");
}

#[test]
fn singleton_sweep_matches_simulate() {
    let base = Scenario::fig2();
    let rows = sweep(&base, &Grid::new().axis(Param::Kv, vec![1.0])).unwrap();
    let report = check_convergence(&simulate(&base).unwrap(), 0.05, 0.01).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].status, RunStatus::Converged);
    assert_eq!(rows[0].settling_time, report.settling_time);
    assert_eq!(rows[0].final_spin, report.final_spin);
}

#[test]
fn damping_sweep() {
    let rows = sweep(&Scenario::fig2(), &Grid::new().axis(Param::Kv, vec![0.0, 0.5, 1.0, 2.0])).unwrap();
    assert_eq!(rows[0].status, RunStatus::NotConverged);
    for r in &rows[1..] {
        assert_eq!(r.status, RunStatus::Converged, "{r:?}");
        assert!(r.settling_time.is_some());
    }
}

#[test]
fn initial_tilt_selects_spin_branch() {
    let grid = Grid::new().axis(Param::Tilt, vec![std::f64::consts::FRAC_PI_4, std::f64::consts::PI]);
    let rows = sweep(&Scenario::fig2(), &grid).unwrap();
    assert_eq!(rows[0].status, RunStatus::Converged);
    assert_eq!(rows[0].spin_sign, 1);
    assert_eq!(rows[1].status, RunStatus::Converged);
    assert_eq!(rows[1].spin_sign, -1);
}
