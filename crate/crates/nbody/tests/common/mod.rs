//! Helpers shared by the integration-test targets: a classical fixed-step
//! Runge-Kutta reference integrator with step-halving refinement, and seeded
//! random model builders.

#![allow(dead_code)]

use nbody::{BodySystem, Field, ForceModel, Softening};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniformly random flat positions inside `[-half_width, half_width]^3N`.
pub fn random_positions(rng: &mut impl Rng, n: usize, half_width: f64) -> Vec<f64> {
    (0..3 * n)
        .map(|_| rng.random_range(-half_width..half_width))
        .collect()
}

/// Softened model with `n` bodies, unit G, masses in `[0.2, 2)`, and a
/// uniform softening length drawn from `eps_choices`.
pub fn random_softened_model(
    rng: &mut impl Rng,
    n: usize,
    eps_choices: &[f64],
) -> ForceModel {
    let masses: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
    let eps = eps_choices[rng.random_range(0..eps_choices.len())];
    let softening = Softening::uniform(n, eps).expect("positive softening");
    let system = BodySystem::new(masses, 1.0, Some(softening)).expect("valid system");
    ForceModel::softened(system).expect("softened system")
}

fn accel(model: &ForceModel, y: &[f64]) -> Vec<f64> {
    model
        .eval(y)
        .expect("reference integrator evaluated the force at a collision")
}

/// Derivative of the flattened first-order state `u = [y, v]`:
/// `u' = [v, f(y)]`.
fn deriv(model: &ForceModel, u: &[f64]) -> Vec<f64> {
    let n = u.len() / 2;
    let (y, v) = u.split_at(n);
    let mut out = v.to_vec();
    out.extend(accel(model, y));
    out
}

fn axpy(u: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    u.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// One classical fourth-order Runge-Kutta step of size `h`.
fn rk4_step(model: &ForceModel, u: &[f64], h: f64) -> Vec<f64> {
    let k1 = deriv(model, u);
    let k2 = deriv(model, &axpy(u, 0.5 * h, &k1));
    let k3 = deriv(model, &axpy(u, 0.5 * h, &k2));
    let k4 = deriv(model, &axpy(u, h, &k3));
    (0..u.len())
        .map(|i| u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Fixed-step RK4 from `(y0, v0)` at t = 0 to `t_end`; returns final
/// positions and velocities.
pub fn rk4_integrate(
    model: &ForceModel,
    y0: &[f64],
    v0: &[f64],
    t_end: f64,
    steps: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = y0.len();
    let mut u: Vec<f64> = y0.iter().chain(v0).copied().collect();
    let h = t_end / steps as f64;
    for _ in 0..steps {
        u = rk4_step(model, &u, h);
    }
    let v = u.split_off(n);
    (u, v)
}

/// Step-halved RK4 reference: doubles the step count until two successive
/// refinements agree to `tol` in the sup norm over positions and velocities,
/// then returns the finer of the two.
pub fn rk4_reference(
    model: &ForceModel,
    y0: &[f64],
    v0: &[f64],
    t_end: f64,
    tol: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut steps = 256usize;
    let mut prev = rk4_integrate(model, y0, v0, t_end, steps);
    loop {
        steps *= 2;
        let next = rk4_integrate(model, y0, v0, t_end, steps);
        let diff = prev
            .0
            .iter()
            .zip(&next.0)
            .chain(prev.1.iter().zip(&next.1))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        if diff <= tol {
            return next;
        }
        assert!(
            steps < (1 << 22),
            "reference integrator failed to converge to {tol:e} (last diff {diff:e})"
        );
        prev = next;
    }
}

/// Sup-norm distance between two coordinate vectors.
pub fn sup_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0_f64, f64::max)
}

/// Minimum pairwise body separation along a trajectory, sampled on a uniform
/// grid of `samples + 1` times from `t_lo` to `t_hi`.
pub fn min_separation_along(
    traj: &nbody::Trajectory,
    t_lo: f64,
    t_hi: f64,
    samples: usize,
) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..=samples {
        let t = t_lo + (t_hi - t_lo) * i as f64 / samples as f64;
        let s = traj.dense_eval(t).expect("inside the span");
        m = m.min(nbody::forces::min_pairwise_distance(&s.positions));
    }
    m
}
