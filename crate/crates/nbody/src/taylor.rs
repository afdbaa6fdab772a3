//! Taylor-coefficient recursion and the series-stepping integrator for
//! `y'' = f(y)`.
//!
//! For each expansion point the position of every coordinate is developed as
//! a truncated power series in time. The recursion is phase-by-phase: once
//! coefficients through degree `m + 1` are known, the degree-`m` coefficient
//! of `f(y(t))` is formed with series arithmetic and fixes the degree
//! `m + 2` position coefficient through `(m+1)(m+2) c_{m+2} = F_m`.
//! Integration chains such expansions, choosing each step from an analytic
//! ball radius and the decay of the trailing coefficients.

use crate::error::{Error, Result};
use crate::forces::{
    self, accel_bound, max_pairwise_distance, min_pairwise_distance, ForceModel, ModelKind, State,
    COLLISION_FLOOR_FACTOR,
};
use crate::series::PowerSeries;

/// Fraction of the analytic ball radius a single step may cover.
pub const STEP_SAFETY: f64 = 0.8;

/// Largest supported truncation order.
pub const MAX_ORDER: usize = 60;

/// Smallest truncation order the step controller accepts.
pub const MIN_STEP_ORDER: usize = 8;

/// Hard cap on steps per integration, to fail loudly instead of looping.
const MAX_STEPS: usize = 5_000_000;

/// Position series for every coordinate around a common expansion time.
#[derive(Debug, Clone)]
pub struct SeriesState {
    t0: f64,
    coords: Vec<PowerSeries>,
}

impl SeriesState {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Shared truncation order of the coordinate series.
    pub fn truncation_order(&self) -> usize {
        self.coords[0].truncation_order()
    }

    /// Number of coordinates.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Per-coordinate position series.
    pub fn coords(&self) -> &[PowerSeries] {
        &self.coords
    }

    /// Positions at offset `dt` from the expansion time.
    pub fn positions_at(&self, dt: f64) -> Vec<f64> {
        self.coords.iter().map(|c| c.eval(dt)).collect()
    }

    /// Velocities at offset `dt` from the expansion time.
    pub fn velocities_at(&self, dt: f64) -> Vec<f64> {
        self.coords.iter().map(|c| c.derivative().eval(dt)).collect()
    }

    /// Largest coefficient magnitude across all coordinates.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coords
            .iter()
            .flat_map(|c| c.coeffs())
            .fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    fn parity_defect(&self, keep_odd: bool) -> f64 {
        let scale = 1.0 + self.max_abs_coeff();
        let mut worst = 0.0_f64;
        for c in &self.coords {
            for (m, v) in c.coeffs().iter().enumerate() {
                if (m % 2 == 1) == keep_odd {
                    worst = worst.max(v.abs() / scale);
                }
            }
        }
        worst
    }

    /// Largest normalized magnitude over the odd-degree coefficients.
    pub fn odd_coeff_defect(&self) -> f64 {
        self.parity_defect(true)
    }

    /// Largest normalized magnitude over the even-degree coefficients.
    pub fn even_coeff_defect(&self) -> f64 {
        self.parity_defect(false)
    }
}

fn validate_order(order: usize, min: usize) -> Result<()> {
    if order < min || order > MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "truncation order {order} outside supported range {min}..={MAX_ORDER}"
        )));
    }
    Ok(())
}

/// Convolution coefficient `sum_{i=0..k} a_i b_{k-i}` of two coefficient
/// slices (zero-padded beyond their length).
fn conv_coeff(a: &[f64], b: &[f64], k: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..=k {
        if i < a.len() && k - i < b.len() {
            acc += a[i] * b[k - i];
        }
    }
    acc
}

/// Reciprocal of the cubed pair denominator as a series of order `m`:
/// `1/|d|^3` for the unsoftened kind, `1/(|d| + eps)^3` for the softened one.
///
/// `q` is the squared-distance series `d . d`. A softened pair whose bodies
/// start exactly coincident has `q_0 = 0`, where `sqrt(q)` has no series
/// branch. There the even average of the two branches
/// `(|d| + eps)^-3 -> eps (eps^2 + 3 q) / (eps^2 - q)^3` is used instead: it
/// agrees with the force at the expansion point, depends on `q` alone, and
/// keeps the force series parity-pure so that mirror-symmetric data stays
/// mirror-symmetric to the last bit.
fn inverse_cubed_denominator(q: &PowerSeries, eps: Option<f64>) -> Result<PowerSeries> {
    match eps {
        None => {
            let s = q.sqrt()?;
            s.mul(&s)?.mul(&s)?.recip()
        }
        Some(eps) => {
            if q.coeff(0) == 0.0 {
                let w = q.scale(-1.0).add_constant(eps * eps);
                let den = w.mul(&w)?.mul(&w)?;
                let num = q.scale(3.0 * eps).add_constant(eps * eps * eps);
                num.mul(&den.recip()?)
            } else {
                let w = q.sqrt()?.add_constant(eps);
                w.mul(&w)?.mul(&w)?.recip()
            }
        }
    }
}

/// Degree-`m` coefficient of the gravitational force series, given the
/// position series of every coordinate through degree `m` (slices may be
/// longer; only entries `0..=m` are read).
fn gravity_force_coeff(
    system: &forces::BodySystem,
    softened: bool,
    coords: &[Vec<f64>],
    m: usize,
) -> Result<Vec<f64>> {
    let n = system.body_count();
    let g = system.g();
    let mut force = vec![0.0; 3 * n];
    for a in 0..n {
        for b in (a + 1)..n {
            let d: Vec<PowerSeries> = (0..3)
                .map(|axis| {
                    let pa = &coords[3 * a + axis];
                    let pb = &coords[3 * b + axis];
                    PowerSeries::new((0..=m).map(|k| pb[k] - pa[k]).collect())
                })
                .collect::<Result<_>>()?;
            let mut q = d[0].mul(&d[0])?;
            q = q.add(&d[1].mul(&d[1])?)?;
            q = q.add(&d[2].mul(&d[2])?)?;
            let eps = if softened {
                Some(system.softening().expect("softened system").eps(a, b))
            } else {
                None
            };
            let r = inverse_cubed_denominator(&q, eps)?;
            for axis in 0..3 {
                let num_m = conv_coeff(d[axis].coeffs(), r.coeffs(), m);
                force[3 * a + axis] += g * system.masses()[b] * num_m;
                force[3 * b + axis] -= g * system.masses()[a] * num_m;
            }
        }
    }
    Ok(force)
}

/// Degree-`m` coefficient of `-sin(y(t))` for the scalar pendulum, by the
/// coupled sine/cosine coefficient recurrence.
fn pendulum_force_coeff(coords: &[Vec<f64>], m: usize) -> f64 {
    let y = &coords[0];
    let mut s = vec![0.0; m + 1];
    let mut c = vec![0.0; m + 1];
    s[0] = y[0].sin();
    c[0] = y[0].cos();
    for k in 1..=m {
        let mut ds = 0.0;
        let mut dc = 0.0;
        for i in 1..=k {
            ds += i as f64 * y[i] * c[k - i];
            dc += i as f64 * y[i] * s[k - i];
        }
        s[k] = ds / k as f64;
        c[k] = -dc / k as f64;
    }
    -s[m]
}

/// Develops the solution of `y'' = f(y)` with data `(y0, v0)` as position
/// series of truncation order `order` (which must be in `2..=60`).
///
/// For the unsoftened kind every initial pair distance must clear the
/// collision floor `1e-9 * (largest initial pair distance)`; a pair below it
/// is reported as a near-singular series.
pub fn taylor_coefficients(
    model: &ForceModel,
    y0: &[f64],
    v0: &[f64],
    order: usize,
) -> Result<SeriesState> {
    taylor_coefficients_at(model, 0.0, y0, v0, order)
}

/// As [`taylor_coefficients`], with an explicit expansion time.
pub fn taylor_coefficients_at(
    model: &ForceModel,
    t0: f64,
    y0: &[f64],
    v0: &[f64],
    order: usize,
) -> Result<SeriesState> {
    validate_order(order, 2)?;
    let n = forces::Field::dim(model);
    if y0.len() != n || v0.len() != n {
        return Err(Error::InvalidParameter(format!(
            "expected {n} coordinates, got {} positions and {} velocities",
            y0.len(),
            v0.len()
        )));
    }
    if let ForceModel::Newtonian(system) = model {
        let floor = COLLISION_FLOOR_FACTOR * max_pairwise_distance(y0);
        let nb = system.body_count();
        for a in 0..nb {
            for b in (a + 1)..nb {
                let r = ((y0[3 * b] - y0[3 * a]).powi(2)
                    + (y0[3 * b + 1] - y0[3 * a + 1]).powi(2)
                    + (y0[3 * b + 2] - y0[3 * a + 2]).powi(2))
                .sqrt();
                if r <= floor {
                    return Err(Error::NearSingularSeries {
                        leading: r,
                        floor,
                    });
                }
            }
        }
    }

    let mut coords: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut c = vec![0.0; order + 1];
            c[0] = y0[i];
            if order >= 1 {
                c[1] = v0[i];
            }
            c
        })
        .collect();

    for m in 0..=(order - 2) {
        let force_m = match model {
            ForceModel::Newtonian(system) => gravity_force_coeff(system, false, &coords, m)?,
            ForceModel::Softened(system) => gravity_force_coeff(system, true, &coords, m)?,
            ForceModel::Pendulum => vec![pendulum_force_coeff(&coords, m)],
        };
        let scale = ((m + 1) * (m + 2)) as f64;
        for i in 0..n {
            let c = force_m[i] / scale;
            if !c.is_finite() {
                return Err(Error::Evaluation(format!(
                    "series coefficient of degree {} overflowed",
                    m + 2
                )));
            }
            coords[i][m + 2] = c;
        }
    }

    Ok(SeriesState {
        t0,
        coords: coords
            .into_iter()
            .map(PowerSeries::new)
            .collect::<Result<_>>()?,
    })
}

/// Upper bound `M` for the acceleration norm while the solution stays within
/// `b` of `y0`.
///
/// The softened kind uses its global bound, the pendulum uses 1, and the
/// unsoftened kind uses the pairwise closed form with every initial distance
/// shrunk by `2b` (both bodies may approach by `b`); that form requires
/// `0 < b < (smallest initial pair distance) / 2`.
pub fn force_bound_on_ball(model: &ForceModel, y0: &[f64], b: f64) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidRadiusParameter {
            b,
            reason: "ball radius must be positive and finite".into(),
        });
    }
    match model {
        ForceModel::Softened(_) => accel_bound(model),
        ForceModel::Pendulum => Ok(1.0),
        ForceModel::Newtonian(system) => {
            let n = system.body_count();
            let min_dist = min_pairwise_distance(y0);
            if n > 1 && b >= min_dist / 2.0 {
                return Err(Error::InvalidRadiusParameter {
                    b,
                    reason: format!(
                        "must be below half the smallest pair distance {min_dist:e}"
                    ),
                });
            }
            let mut worst = 0.0_f64;
            for k in 0..n {
                let mut row = 0.0;
                for j in 0..n {
                    if j != k {
                        let d = ((y0[3 * j] - y0[3 * k]).powi(2)
                            + (y0[3 * j + 1] - y0[3 * k + 1]).powi(2)
                            + (y0[3 * j + 2] - y0[3 * k + 2]).powi(2))
                        .sqrt()
                            - 2.0 * b;
                        row += system.g() * system.masses()[j] / (d * d);
                    }
                }
                worst = worst.max(row);
            }
            Ok(worst)
        }
    }
}

/// Guaranteed-convergence radius `sqrt(2 b / M)` for a series expansion at
/// `y0`, with `M` from [`force_bound_on_ball`]. Infinite when the force
/// bound is zero (a single softened body).
pub fn radius_estimate(model: &ForceModel, y0: &[f64], b: f64) -> Result<f64> {
    let m = force_bound_on_ball(model, y0, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((2.0 * b / m).sqrt())
}

/// Default ball radius for [`radius_estimate`]: a quarter of the smallest
/// initial pair distance for the unsoftened kind, the largest initial pair
/// distance (or 1 for a degenerate configuration) for the softened kind,
/// and 1 for the pendulum.
pub fn default_ball_radius(model: &ForceModel, y0: &[f64]) -> f64 {
    match model.kind() {
        ModelKind::Newtonian => {
            let d = min_pairwise_distance(y0);
            if d.is_finite() {
                d / 4.0
            } else {
                1.0
            }
        }
        ModelKind::Softened => {
            let d = max_pairwise_distance(y0);
            if d > 0.0 {
                d
            } else {
                1.0
            }
        }
        ModelKind::Pendulum => 1.0,
    }
}

/// Step length for one series expansion: the smaller of `0.8 * radius_cap`
/// and the tail-controlled length `(tol / A)^(1/K)`, where `A` is the larger
/// magnitude of the two highest-degree coefficients across all coordinates,
/// floored at `1e-300`. When the whole tail vanishes the radius cap alone
/// decides.
pub fn step_size(series: &SeriesState, tol: f64, radius_cap: f64) -> f64 {
    let k = series.truncation_order();
    let mut a = 1e-300_f64;
    for c in series.coords() {
        a = a.max(c.coeff(k).abs()).max(c.coeff(k - 1).abs());
    }
    let h_tail = (tol / a).powf(1.0 / k as f64);
    (STEP_SAFETY * radius_cap).min(h_tail)
}

/// One accepted series step: an expansion valid on the span of length `h`
/// starting at its expansion time and heading in `direction` (+1 or -1).
#[derive(Debug, Clone)]
pub struct TrajectorySegment {
    pub series: SeriesState,
    pub h: f64,
    pub direction: f64,
}

impl TrajectorySegment {
    fn covers(&self, t: f64, slack: f64) -> bool {
        let lo = self.series.t0().min(self.series.t0() + self.direction * self.h);
        let hi = self.series.t0().max(self.series.t0() + self.direction * self.h);
        t >= lo - slack && t <= hi + slack
    }
}

/// A piecewise-series solution over a time span, evaluable anywhere inside.
#[derive(Debug, Clone)]
pub struct Trajectory {
    model: ForceModel,
    segments: Vec<TrajectorySegment>,
    t_start: f64,
    t_end: f64,
}

impl Trajectory {
    pub fn model(&self) -> &ForceModel {
        &self.model
    }

    pub fn segments(&self) -> &[TrajectorySegment] {
        &self.segments
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// State at any time inside the integrated span. At a segment joint the
    /// two neighboring expansions agree to the working tolerance; the earlier
    /// segment is used.
    pub fn dense_eval(&self, t: f64) -> Result<State> {
        let slack = 1e-9 * (1.0 + self.t_start.abs().max(self.t_end.abs()));
        let seg = self
            .segments
            .iter()
            .find(|s| s.covers(t, slack))
            .ok_or(Error::OutOfRange {
                t,
                lo: self.t_start.min(self.t_end),
                hi: self.t_start.max(self.t_end),
            })?;
        let dt = t - seg.series.t0();
        State::new(
            t,
            seg.series.positions_at(dt),
            seg.series.velocities_at(dt),
        )
    }
}

/// Integrates `y'' = f(y)` from `initial` to `t_end` by chained series
/// expansions.
///
/// `tol` controls the trailing-coefficient contribution per step, `order`
/// is the series truncation order (8..=60), and `b` caps the analytic ball
/// radius used for step control (for the unsoftened kind each step uses the
/// smaller of `b` and a quarter of the current smallest pair distance, so a
/// generous `b` is safe).
///
/// For the unsoftened kind, pair distances are screened against the
/// collision floor fixed by the initial configuration at every step midpoint
/// and endpoint; a violation reports the collision with its approximate
/// time. The softened kind and the pendulum never collide.
pub fn integrate(
    model: &ForceModel,
    initial: &State,
    t_end: f64,
    tol: f64,
    order: usize,
    b: f64,
) -> Result<Trajectory> {
    validate_order(order, MIN_STEP_ORDER)?;
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive and finite, got {tol}"
        )));
    }
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidRadiusParameter {
            b,
            reason: "ball radius must be positive and finite".into(),
        });
    }
    let n = forces::Field::dim(model);
    if initial.dim() != n {
        return Err(Error::InvalidParameter(format!(
            "state has {} coordinates but the model needs {n}",
            initial.dim()
        )));
    }

    let newtonian = matches!(model.kind(), ModelKind::Newtonian);
    let floor = if newtonian {
        COLLISION_FLOOR_FACTOR * max_pairwise_distance(&initial.positions)
    } else {
        0.0
    };
    let check_floor = |positions: &[f64], time: f64| -> Result<()> {
        if !newtonian {
            return Ok(());
        }
        let nb = positions.len() / 3;
        for a in 0..nb {
            for bb in (a + 1)..nb {
                let r = ((positions[3 * bb] - positions[3 * a]).powi(2)
                    + (positions[3 * bb + 1] - positions[3 * a + 1]).powi(2)
                    + (positions[3 * bb + 2] - positions[3 * a + 2]).powi(2))
                .sqrt();
                if r <= floor {
                    return Err(Error::Collision {
                        pair: (a, bb),
                        distance: r,
                        floor,
                        time: Some(time),
                    });
                }
            }
        }
        Ok(())
    };

    check_floor(&initial.positions, initial.t)?;

    let direction = if t_end >= initial.t { 1.0 } else { -1.0 };
    let mut t = initial.t;
    let mut y = initial.positions.clone();
    let mut v = initial.velocities.clone();
    let mut segments = Vec::new();

    if t_end == initial.t {
        let series = taylor_coefficients_at(model, t, &y, &v, order)?;
        segments.push(TrajectorySegment {
            series,
            h: 0.0,
            direction,
        });
        return Ok(Trajectory {
            model: model.clone(),
            segments,
            t_start: initial.t,
            t_end,
        });
    }

    loop {
        if segments.len() >= MAX_STEPS {
            return Err(Error::StepLimit {
                steps: segments.len(),
                t,
            });
        }
        let series = taylor_coefficients_at(model, t, &y, &v, order)?;
        let b_step = if newtonian {
            b.min(min_pairwise_distance(&y) / 4.0)
        } else {
            b
        };
        let radius_cap = radius_estimate(model, &y, b_step)?;
        let mut h = step_size(&series, tol, radius_cap);
        let remaining = (t_end - t) * direction;
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if !(h > 0.0) {
            return Err(Error::Evaluation(format!(
                "step size collapsed to {h:e} at t = {t}"
            )));
        }
        check_floor(&series.positions_at(direction * h / 2.0), t + direction * h / 2.0)?;
        let y_next = series.positions_at(direction * h);
        check_floor(&y_next, t + direction * h)?;
        let v_next = series.velocities_at(direction * h);
        segments.push(TrajectorySegment {
            series,
            h,
            direction,
        });
        y = y_next;
        v = v_next;
        t = if last { t_end } else { t + direction * h };
        if last {
            break;
        }
    }

    Ok(Trajectory {
        model: model.clone(),
        segments,
        t_start: initial.t,
        t_end,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forces::{BodySystem, ForceModel, Softening};
    use approx::assert_relative_eq;

    fn two_body_newtonian() -> ForceModel {
        ForceModel::newtonian(BodySystem::new(vec![1.0, 1.0], 1.0, None).unwrap()).unwrap()
    }

    fn two_body_softened(eps: f64) -> ForceModel {
        ForceModel::softened(
            BodySystem::new(vec![1.0, 1.0], 1.0, Some(Softening::uniform(2, eps).unwrap()))
                .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn two_body_from_rest_series() {
        // Unit masses at (-1,0,0), (1,0,0), zero velocity: the x series of
        // body 1 starts [-1, 0, 1/8, 0, ...] and every odd coefficient is
        // exactly zero.
        let model = two_body_newtonian();
        let s = taylor_coefficients(
            &model,
            &[-1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            &[0.0; 6],
            20,
        )
        .unwrap();
        let x1 = s.coords()[0].coeffs();
        assert_eq!(x1[0], -1.0);
        assert_eq!(x1[2], 0.125);
        for m in (1..=19).step_by(2) {
            for c in s.coords() {
                assert_eq!(c.coeff(m), 0.0, "odd coefficient {m} must vanish");
            }
        }
        assert_eq!(s.odd_coeff_defect(), 0.0);
    }

    #[test]
    fn coincident_softened_start_is_parity_pure() {
        // Both bodies at the origin with distinct velocities: even
        // coefficients vanish exactly, and the cubic term matches the hand
        // value c3 = G m (v_b - v_a) / (6 eps^3) for each body.
        let eps = 0.5;
        let model = two_body_softened(eps);
        let v = [0.3, -0.1, 0.2, -0.4, 0.25, 0.0];
        let s = taylor_coefficients(&model, &[0.0; 6], &v, 20).unwrap();
        assert_eq!(s.even_coeff_defect(), 0.0);
        for axis in 0..3 {
            let u = v[3 + axis] - v[axis];
            let expect = u / (6.0 * eps * eps * eps);
            assert_relative_eq!(s.coords()[axis].coeff(3), expect, max_relative = 1e-15);
            assert_relative_eq!(s.coords()[3 + axis].coeff(3), -expect, max_relative = 1e-15);
        }
    }

    #[test]
    fn free_body_series_is_linear() {
        let model = ForceModel::softened(
            BodySystem::new(vec![2.0], 1.0, Some(Softening::uniform(1, 1.0).unwrap())).unwrap(),
        )
        .unwrap();
        let s = taylor_coefficients(&model, &[1.0, 2.0, 3.0], &[0.5, 0.0, -0.5], 10).unwrap();
        for c in s.coords() {
            for m in 2..=10 {
                assert_eq!(c.coeff(m), 0.0);
            }
        }
    }

    #[test]
    fn pendulum_series_matches_hand_recurrence() {
        let model = ForceModel::pendulum();
        let theta = 0.7_f64;
        let s = taylor_coefficients(&model, &[theta], &[0.0], 12).unwrap();
        let c = &s.coords()[0];
        assert_eq!(c.coeff(1), 0.0);
        assert_relative_eq!(c.coeff(2), -theta.sin() / 2.0, max_relative = 1e-15);
        assert_eq!(c.coeff(3), 0.0);
        assert_relative_eq!(
            c.coeff(4),
            theta.sin() * theta.cos() / 24.0,
            max_relative = 1e-14
        );
        assert_eq!(s.odd_coeff_defect(), 0.0);
    }

    #[test]
    fn near_collision_start_is_near_singular() {
        let model = ForceModel::newtonian(
            BodySystem::new(vec![1.0, 1.0, 1.0], 1.0, None).unwrap(),
        )
        .unwrap();
        // Bodies 0 and 1 separated by 1e-12 of the configuration scale.
        let y = [0.0, 0.0, 0.0, 1e-12, 0.0, 0.0, 1.0, 0.0, 0.0];
        let err = taylor_coefficients(&model, &y, &[0.0; 9], 10).unwrap_err();
        assert!(matches!(err, Error::NearSingularSeries { .. }));
    }

    #[test]
    fn radius_worked_examples() {
        // Softened: b = 1, bound M = 8 -> radius 0.5.
        let soft = ForceModel::softened(
            BodySystem::new(vec![1.0, 1.0], 1.0, Some(Softening::uniform(2, 0.5).unwrap()))
                .unwrap(),
        )
        .unwrap();
        let y = [-1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        assert_eq!(force_bound_on_ball(&soft, &y, 1.0).unwrap(), 8.0);
        assert_eq!(radius_estimate(&soft, &y, 1.0).unwrap(), 0.5);

        // Unsoftened two-body at distance 2 with b = 1/2: each row sums to
        // G m / (2 - 1)^2 = 1, so the radius is sqrt(2 * 0.5 / 1) = 1.
        let plain = two_body_newtonian();
        assert_eq!(force_bound_on_ball(&plain, &y, 0.5).unwrap(), 1.0);
        assert_eq!(radius_estimate(&plain, &y, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn radius_rejects_bad_ball() {
        let plain = two_body_newtonian();
        let y = [-1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        assert!(matches!(
            radius_estimate(&plain, &y, 0.0),
            Err(Error::InvalidRadiusParameter { .. })
        ));
        assert!(matches!(
            radius_estimate(&plain, &y, 1.0),
            Err(Error::InvalidRadiusParameter { .. })
        ));
    }

    #[test]
    fn radius_grows_when_masses_shrink() {
        let y = [-1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let make = |m: f64| {
            ForceModel::softened(
                BodySystem::new(vec![m, m], 1.0, Some(Softening::uniform(2, 0.5).unwrap()))
                    .unwrap(),
            )
            .unwrap()
        };
        let r1 = radius_estimate(&make(1.0), &y, 1.0).unwrap();
        let r2 = radius_estimate(&make(0.1), &y, 1.0).unwrap();
        assert!(r2 > r1);
    }

    #[test]
    fn step_size_falls_back_to_radius_cap() {
        let model = ForceModel::softened(
            BodySystem::new(vec![1.0], 1.0, Some(Softening::uniform(1, 1.0).unwrap())).unwrap(),
        )
        .unwrap();
        // Single body: tail coefficients all vanish.
        let s = taylor_coefficients(&model, &[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], 20).unwrap();
        let h = step_size(&s, 1e-10, 1.0);
        assert_eq!(h, STEP_SAFETY);
    }

    #[test]
    fn steps_respect_the_radius_cap() {
        let model = two_body_newtonian();
        let initial = State::new(0.0, vec![-1.0, 0.0, 0.0, 1.0, 0.0, 0.0], vec![0.0; 6]).unwrap();
        let traj = integrate(&model, &initial, 1.5, 1e-10, 20, 0.25).unwrap();
        assert!(traj.segments().len() > 1);
        for seg in traj.segments() {
            let y = seg.series.positions_at(0.0);
            let b_step = 0.25_f64.min(min_pairwise_distance(&y) / 4.0);
            let cap = radius_estimate(&model, &y, b_step).unwrap();
            assert!(
                seg.h <= STEP_SAFETY * cap + 1e-15,
                "step {} exceeds 0.8 * radius {}",
                seg.h,
                cap
            );
        }
    }

    #[test]
    fn free_body_trajectory_is_exact() {
        let model = ForceModel::softened(
            BodySystem::new(vec![1.0], 1.0, Some(Softening::uniform(1, 1.0).unwrap())).unwrap(),
        )
        .unwrap();
        let initial = State::new(0.0, vec![0.0; 3], vec![1.0, 0.0, 0.0]).unwrap();
        let traj = integrate(&model, &initial, 2.0, 1e-10, 20, 1.0).unwrap();
        let s = traj.dense_eval(2.0).unwrap();
        assert_eq!(s.positions[0], 2.0);
        assert_eq!(s.velocities[0], 1.0);
        let mid = traj.dense_eval(0.7).unwrap();
        assert_relative_eq!(mid.positions[0], 0.7, epsilon = 1e-15);
    }

    #[test]
    fn round_trip_returns_to_start() {
        let model = two_body_softened(0.5);
        let y0 = vec![-1.0, 0.2, 0.0, 1.0, -0.2, 0.1];
        let v0 = vec![0.1, 0.3, 0.0, -0.1, -0.3, 0.05];
        let tol = 1e-10;
        let initial = State::new(0.0, y0.clone(), v0.clone()).unwrap();
        let fwd = integrate(&model, &initial, 1.0, tol, 20, 1.0).unwrap();
        let turn = fwd.dense_eval(1.0).unwrap();
        let back = integrate(&model, &turn, 0.0, tol, 20, 1.0).unwrap();
        let home = back.dense_eval(0.0).unwrap();
        for (a, b) in home.positions.iter().zip(&y0) {
            assert!((a - b).abs() <= 10.0 * tol, "position drift {}", (a - b).abs());
        }
        for (a, b) in home.velocities.iter().zip(&v0) {
            assert!((a - b).abs() <= 10.0 * tol, "velocity drift {}", (a - b).abs());
        }
    }

    #[test]
    fn energy_is_conserved_on_a_short_softened_run() {
        let model = two_body_softened(0.5);
        let initial = State::new(
            0.0,
            vec![-1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.4, 0.0, 0.0, -0.4, 0.0],
        )
        .unwrap();
        let e0 = forces::total_energy(&model, &initial.positions, &initial.velocities).unwrap();
        let traj = integrate(&model, &initial, 2.0, 1e-10, 20, 1.0).unwrap();
        for i in 0..=40 {
            let s = traj.dense_eval(2.0 * i as f64 / 40.0).unwrap();
            let e = forces::total_energy(&model, &s.positions, &s.velocities).unwrap();
            assert!(((e - e0) / e0).abs() <= 1e-8, "energy drift at t = {}", s.t);
        }
    }

    #[test]
    fn head_on_fall_ends_in_a_collision_error() {
        let model = two_body_newtonian();
        let initial = State::new(0.0, vec![-1.0, 0.0, 0.0, 1.0, 0.0, 0.0], vec![0.0; 6]).unwrap();
        // The free-fall time for this configuration is about 2.22; asking
        // for t = 3 must fail with a collision whose time is close to that.
        match integrate(&model, &initial, 3.0, 1e-10, 20, 0.25).unwrap_err() {
            Error::Collision { pair, time, .. } => {
                assert_eq!(pair, (0, 1));
                let t = time.expect("collision time");
                assert!(t > 2.0 && t < 2.4, "collision time {t}");
            }
            other => panic!("expected collision, got {other:?}"),
        }
    }

    #[test]
    fn dense_eval_rejects_out_of_span() {
        let model = two_body_softened(1.0);
        let initial = State::new(0.0, vec![-1.0, 0.0, 0.0, 1.0, 0.0, 0.0], vec![0.0; 6]).unwrap();
        let traj = integrate(&model, &initial, 1.0, 1e-10, 20, 1.0).unwrap();
        assert!(matches!(
            traj.dense_eval(1.5),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            traj.dense_eval(-0.1),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn segment_joints_agree() {
        let model = two_body_softened(0.5);
        let initial = State::new(
            0.0,
            vec![-1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.3, 0.0, 0.0, -0.3, 0.0],
        )
        .unwrap();
        let traj = integrate(&model, &initial, 2.0, 1e-12, 20, 1.0).unwrap();
        assert!(traj.segments().len() >= 2);
        for w in traj.segments().windows(2) {
            let joint = w[1].series.t0();
            let from_left = w[0].series.positions_at(joint - w[0].series.t0());
            let from_right = w[1].series.positions_at(0.0);
            for (a, b) in from_left.iter().zip(&from_right) {
                assert!((a - b).abs() <= 1e-11, "joint mismatch {}", (a - b).abs());
            }
        }
    }

    #[test]
    fn backward_integration_works() {
        let model = two_body_softened(0.5);
        let initial = State::new(
            0.0,
            vec![-1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.4, 0.0, 0.0, -0.4, 0.0],
        )
        .unwrap();
        let traj = integrate(&model, &initial, -1.5, 1e-10, 20, 1.0).unwrap();
        let s = traj.dense_eval(-1.5).unwrap();
        assert_eq!(s.t, -1.5);
        assert!(traj.dense_eval(-0.7).is_ok());
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let model = two_body_softened(0.5);
        let initial = State::new(0.0, vec![-1.0, 0.0, 0.0, 1.0, 0.0, 0.0], vec![0.0; 6]).unwrap();
        assert!(integrate(&model, &initial, 1.0, 0.0, 20, 1.0).is_err());
        assert!(integrate(&model, &initial, 1.0, 1e-10, 4, 1.0).is_err());
        assert!(integrate(&model, &initial, 1.0, 1e-10, 61, 1.0).is_err());
        assert!(integrate(&model, &initial, 1.0, 1e-10, 20, -1.0).is_err());
        assert!(taylor_coefficients(&model, &[0.0; 6], &[0.0; 5], 10).is_err());
        assert!(taylor_coefficients(&model, &[0.0; 6], &[0.0; 6], 1).is_err());
    }
}
