//! Machine checks of time-reflection symmetries and function parity.
//!
//! Two trajectory symmetries are verified against integrated solutions of
//! `y'' = f(y)`: solutions launched from rest are even in time (mirror
//! trajectories coincide), and solutions of the softened system launched
//! from total coincidence at the origin are odd in time (mirror trajectories
//! are negatives of each other). Both checks combine a Taylor-coefficient
//! parity defect at the launch point with a sampled mirror residual along
//! the integrated span. A sampling-based parity probe classifies scalar
//! functions as even or odd in the whole-vector and per-coordinate senses,
//! and a Jacobian parity check confirms that the partials of an odd force
//! field are even functions.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forces::{self, Field, ForceModel, ModelKind, State};
use crate::taylor::{default_ball_radius, integrate, taylor_coefficients};

/// Number of mirror offsets sampled per symmetry verification.
pub const MIRROR_SAMPLES: usize = 32;

/// Which trajectory symmetry a report checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryKind {
    /// `y(tau) = y(-tau)`: launched from rest.
    Even,
    /// `y(tau) = -y(-tau)`: softened system launched from the origin.
    Odd,
}

impl std::fmt::Display for SymmetryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SymmetryKind::Even => write!(f, "even"),
            SymmetryKind::Odd => write!(f, "odd"),
        }
    }
}

/// Outcome of a trajectory symmetry check.
#[derive(Debug, Clone)]
pub struct SymmetryReport {
    pub kind: SymmetryKind,
    /// Largest normalized magnitude among the Taylor coefficients that the
    /// symmetry says must vanish (odd degrees for even solutions and vice
    /// versa).
    pub coeff_defect: f64,
    /// Largest normalized mirror residual over the sampled offsets:
    /// `|y(tau) - y(-tau)|` for the even kind, `|y(tau) + y(-tau)|` for the
    /// odd kind.
    pub mirror_defect: f64,
    /// Number of sampled mirror offsets.
    pub samples: usize,
    /// Threshold both defects are compared against.
    pub tolerance: f64,
    pub passed: bool,
}

/// Integration tolerance used inside symmetry checks: well below the
/// reporting tolerance, clamped to a sane floating-point range.
fn internal_tolerance(tol: f64) -> f64 {
    (tol * 1e-2).clamp(1e-14, 1e-10)
}

/// Raw symmetry check of the solution through `(y0, v0)` against the given
/// kind, without forcing any initial data to zero. [`verify_even`] and
/// [`verify_odd`] wrap this with the constructions the two symmetries
/// require; calling it directly measures how badly unconstrained data
/// breaks the symmetry.
pub fn symmetry_report(
    model: &ForceModel,
    y0: &[f64],
    v0: &[f64],
    kind: SymmetryKind,
    span: f64,
    tol: f64,
    order: usize,
) -> Result<SymmetryReport> {
    if !(span > 0.0) || !span.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "symmetry span must be positive and finite, got {span}"
        )));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive and finite, got {tol}"
        )));
    }
    let series = taylor_coefficients(model, y0, v0, order)?;
    let coeff_defect = match kind {
        SymmetryKind::Even => series.odd_coeff_defect(),
        SymmetryKind::Odd => series.even_coeff_defect(),
    };

    let itol = internal_tolerance(tol);
    let b = default_ball_radius(model, y0);
    let initial = State::new(0.0, y0.to_vec(), v0.to_vec())?;
    let forward = integrate(model, &initial, span, itol, order, b)?;
    let backward = integrate(model, &initial, -span, itol, order, b)?;

    let mut raw = 0.0_f64;
    let mut norm = 0.0_f64;
    for i in 1..=MIRROR_SAMPLES {
        let tau = span * i as f64 / MIRROR_SAMPLES as f64;
        let plus = forward.dense_eval(tau)?;
        let minus = backward.dense_eval(-tau)?;
        for (a, b) in plus.positions.iter().zip(&minus.positions) {
            let residual = match kind {
                SymmetryKind::Even => a - b,
                SymmetryKind::Odd => a + b,
            };
            raw = raw.max(residual.abs());
            norm = norm.max(a.abs()).max(b.abs());
        }
    }
    let mirror_defect = raw / (1.0 + norm);
    Ok(SymmetryReport {
        kind,
        coeff_defect,
        mirror_defect,
        samples: MIRROR_SAMPLES,
        tolerance: tol,
        passed: coeff_defect <= tol && mirror_defect <= tol,
    })
}

/// Checks that the solution launched from `y0` **at rest** is even in time:
/// odd Taylor coefficients vanish and the trajectory equals its own time
/// reflection. The initial velocity is zero by construction.
pub fn verify_even(
    model: &ForceModel,
    y0: &[f64],
    span: f64,
    tol: f64,
    order: usize,
) -> Result<SymmetryReport> {
    symmetry_report(
        model,
        y0,
        &vec![0.0; y0.len()],
        SymmetryKind::Even,
        span,
        tol,
        order,
    )
}

/// Checks that the softened-system solution launched **from the origin**
/// with velocities `eta` is odd in time: even Taylor coefficients vanish
/// and the trajectory is the negative of its time reflection. The initial
/// positions are zero by construction; the unsoftened kind is rejected
/// because total coincidence is a collision there.
pub fn verify_odd(
    model: &ForceModel,
    eta: &[f64],
    span: f64,
    tol: f64,
    order: usize,
) -> Result<SymmetryReport> {
    if model.kind() != ModelKind::Softened {
        return Err(Error::InvalidModel(format!(
            "odd-symmetry verification requires the softened kind, got {}",
            model.kind()
        )));
    }
    symmetry_report(
        model,
        &vec![0.0; eta.len()],
        eta,
        SymmetryKind::Odd,
        span,
        tol,
        order,
    )
}

/// Parity classification of a sampled scalar function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Neither,
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Parity::Even => write!(f, "even"),
            Parity::Odd => write!(f, "odd"),
            Parity::Neither => write!(f, "neither"),
        }
    }
}

/// Verdict of [`parity_probe`]: parity under negating the whole vector, and
/// parity under negating one coordinate at a time (which must hold for
/// every coordinate). Each defect is the sampled residual of the assigned
/// parity, or the smaller of the two residuals for `Neither`.
#[derive(Debug, Clone)]
pub struct ParityVerdict {
    pub vector_sense: Parity,
    pub strict_sense: Parity,
    pub vector_defect: f64,
    pub strict_defect: f64,
}

fn classify(even_defect: f64, odd_defect: f64, threshold: f64) -> (Parity, f64) {
    // A function that passes both tests (identically zero on the samples)
    // counts as even.
    if even_defect <= threshold {
        (Parity::Even, even_defect)
    } else if odd_defect <= threshold {
        (Parity::Odd, odd_defect)
    } else {
        (Parity::Neither, even_defect.min(odd_defect))
    }
}

/// Samples a scalar function on a centered box and classifies its parity in
/// the vector sense (`H(-y)` vs `H(y)`) and the strict sense (negating one
/// coordinate at a time). `half_width` is the half-width of the sampling
/// box; draws are reproducible from `seed`. Non-finite function values are
/// reported as evaluation errors.
pub fn parity_probe<H: Fn(&[f64]) -> f64>(
    h: H,
    dim: usize,
    samples: usize,
    half_width: f64,
    seed: u64,
) -> Result<ParityVerdict> {
    if dim == 0 || samples == 0 {
        return Err(Error::InvalidParameter(
            "parity probe needs at least one dimension and one sample".into(),
        ));
    }
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sampling half-width must be positive and finite, got {half_width}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eval = |y: &[f64]| -> Result<f64> {
        let v = h(y);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!(
                "non-finite function value {v} at a probe point"
            )));
        }
        Ok(v)
    };

    let mut max_h = 0.0_f64;
    let mut vec_even = 0.0_f64;
    let mut vec_odd = 0.0_f64;
    let mut strict_even = 0.0_f64;
    let mut strict_odd = 0.0_f64;
    for _ in 0..samples {
        let y: Vec<f64> = (0..dim)
            .map(|_| rng.random_range(-half_width..=half_width))
            .collect();
        let base = eval(&y)?;
        max_h = max_h.max(base.abs());
        let neg: Vec<f64> = y.iter().map(|x| -x).collect();
        let mirrored = eval(&neg)?;
        max_h = max_h.max(mirrored.abs());
        vec_even = vec_even.max((mirrored - base).abs());
        vec_odd = vec_odd.max((mirrored + base).abs());
        let mut flipped = y.clone();
        for j in 0..dim {
            flipped[j] = -y[j];
            let v = eval(&flipped)?;
            flipped[j] = y[j];
            max_h = max_h.max(v.abs());
            strict_even = strict_even.max((v - base).abs());
            strict_odd = strict_odd.max((v + base).abs());
        }
    }
    let threshold = 1e-10 * (1.0 + max_h);
    let (vector_sense, vector_defect) = classify(vec_even, vec_odd, threshold);
    let (strict_sense, strict_defect) = classify(strict_even, strict_odd, threshold);
    Ok(ParityVerdict {
        vector_sense,
        strict_sense,
        vector_defect,
        strict_defect,
    })
}

/// Samples the field's Jacobian parity defect,
/// `max |J(y) - J(-y)| / (1 + |J(y)|_inf)` entrywise over `samples` draws
/// from a centered box: for an odd field the partials are even functions
/// and the defect is finite-difference noise. Draws whose Jacobian hits a
/// collision (the unsoftened kind near coincidence) are redrawn without
/// reducing the sample count.
pub fn lemma5_check<F: Field + ?Sized>(
    field: &F,
    samples: usize,
    half_width: f64,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "jacobian parity check needs at least one sample".into(),
        ));
    }
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sampling half-width must be positive and finite, got {half_width}"
        )));
    }
    let n = field.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = 0;
    let mut attempts = 0;
    let max_attempts = samples.saturating_mul(100);
    let mut worst = 0.0_f64;
    while accepted < samples {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Evaluation(format!(
                "could not draw {samples} collision-free samples in {max_attempts} attempts"
            )));
        }
        let y: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-half_width..=half_width))
            .collect();
        let neg: Vec<f64> = y.iter().map(|x| -x).collect();
        let h = forces::default_fd_step(&y);
        let j_pos = match forces::jacobian_fd(field, &y, h) {
            Ok(j) => j,
            Err(Error::Collision { .. }) => continue,
            Err(e) => return Err(e),
        };
        let j_neg = match forces::jacobian_fd(field, &neg, h) {
            Ok(j) => j,
            Err(Error::Collision { .. }) => continue,
            Err(e) => return Err(e),
        };
        let scale = 1.0 + j_pos.amax();
        worst = worst.max((&j_pos - &j_neg).amax() / scale);
        accepted += 1;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forces::{BodySystem, Softening};
    use crate::taylor::radius_estimate;

    fn two_body_newtonian() -> ForceModel {
        ForceModel::newtonian(BodySystem::new(vec![1.0, 1.0], 1.0, None).unwrap()).unwrap()
    }

    fn softened(n: usize, eps: f64) -> ForceModel {
        ForceModel::softened(
            BodySystem::new(vec![1.0; n], 1.0, Some(Softening::uniform(n, eps).unwrap())).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn even_verification_passes_from_rest() {
        let model = two_body_newtonian();
        let y0 = [-1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let b = default_ball_radius(&model, &y0);
        let span = 0.5 * radius_estimate(&model, &y0, b).unwrap();
        let report = verify_even(&model, &y0, span, 1e-9, 20).unwrap();
        assert!(report.passed, "defects {report:?}");
        assert!(report.coeff_defect <= 1e-13);
        assert_eq!(report.kind, SymmetryKind::Even);
        assert_eq!(report.samples, MIRROR_SAMPLES);
    }

    #[test]
    fn single_stationary_body_is_trivially_even() {
        let model = ForceModel::newtonian(BodySystem::new(vec![2.0], 1.0, None).unwrap()).unwrap();
        let report = verify_even(&model, &[0.3, -0.1, 0.7], 1.0, 1e-9, 20).unwrap();
        assert_eq!(report.coeff_defect, 0.0);
        assert_eq!(report.mirror_defect, 0.0);
        assert!(report.passed);
    }

    #[test]
    fn nonzero_velocity_breaks_even_symmetry() {
        // Negative control through the raw interface: inject a generic
        // velocity instead of forcing rest.
        let model = two_body_newtonian();
        let report = symmetry_report(
            &model,
            &[-1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            &[0.1, 0.0, 0.0, 0.0, 0.0, 0.0],
            SymmetryKind::Even,
            0.5,
            1e-9,
            20,
        )
        .unwrap();
        assert!(!report.passed);
        assert!(report.mirror_defect > 1e-3, "defect {}", report.mirror_defect);
    }

    #[test]
    fn odd_verification_passes_from_the_origin() {
        let model = softened(3, 0.5);
        let eta = [0.3, -0.2, 0.4, -0.1, 0.25, 0.0, 0.15, -0.35, 0.2];
        let report = verify_odd(&model, &eta, 1.0, 1e-9, 20).unwrap();
        assert!(report.passed, "defects {report:?}");
        assert!(report.coeff_defect <= 1e-13);
        assert_eq!(report.kind, SymmetryKind::Odd);
    }

    #[test]
    fn zero_eta_gives_the_constant_zero_solution() {
        let model = softened(2, 1.0);
        let report = verify_odd(&model, &[0.0; 6], 1.0, 1e-9, 20).unwrap();
        assert_eq!(report.coeff_defect, 0.0);
        assert_eq!(report.mirror_defect, 0.0);
        assert!(report.passed);
    }

    #[test]
    fn odd_verification_rejects_the_unsoftened_kind() {
        let model = two_body_newtonian();
        assert!(matches!(
            verify_odd(&model, &[0.1; 6], 1.0, 1e-9, 20),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn nonzero_position_breaks_odd_symmetry() {
        let model = softened(2, 0.5);
        let report = symmetry_report(
            &model,
            &[0.2, 0.0, 0.0, -0.1, 0.0, 0.0],
            &[0.3, -0.1, 0.0, -0.3, 0.1, 0.0],
            SymmetryKind::Odd,
            1.0,
            1e-9,
            20,
        )
        .unwrap();
        assert!(!report.passed);
        assert!(report.mirror_defect > 1e-3, "defect {}", report.mirror_defect);
    }

    #[test]
    fn mirror_velocities_and_forces_under_even_symmetry() {
        // From rest the velocity is odd and the force even in time.
        let model = two_body_newtonian();
        let y0 = vec![-1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let initial = State::new(0.0, y0.clone(), vec![0.0; 6]).unwrap();
        let fwd = integrate(&model, &initial, 0.5, 1e-12, 20, 0.25).unwrap();
        let bwd = integrate(&model, &initial, -0.5, 1e-12, 20, 0.25).unwrap();
        let mut v_defect = 0.0_f64;
        let mut f_defect = 0.0_f64;
        let mut v_norm = 0.0_f64;
        let mut f_norm = 0.0_f64;
        for i in 1..=MIRROR_SAMPLES {
            let tau = 0.5 * i as f64 / MIRROR_SAMPLES as f64;
            let plus = fwd.dense_eval(tau).unwrap();
            let minus = bwd.dense_eval(-tau).unwrap();
            let f_plus = Field::eval(&model, &plus.positions).unwrap();
            let f_minus = Field::eval(&model, &minus.positions).unwrap();
            for k in 0..6 {
                v_defect = v_defect.max((plus.velocities[k] + minus.velocities[k]).abs());
                v_norm = v_norm.max(plus.velocities[k].abs());
                f_defect = f_defect.max((f_plus[k] - f_minus[k]).abs());
                f_norm = f_norm.max(f_plus[k].abs());
            }
        }
        assert!(v_defect / (1.0 + v_norm) <= 1e-9, "velocity defect {v_defect}");
        assert!(f_defect / (1.0 + f_norm) <= 1e-9, "force defect {f_defect}");
    }

    #[test]
    fn probe_classifies_the_reference_examples() {
        // y1^5 y2^3: even as a function of the whole vector, odd under each
        // single-coordinate flip.
        let h = |y: &[f64]| y[0].powi(5) * y[1].powi(3);
        let v = parity_probe(h, 2, 64, 1.0, 7).unwrap();
        assert_eq!(v.vector_sense, Parity::Even);
        assert_eq!(v.strict_sense, Parity::Odd);

        // y1^10 y2^6: even in both senses.
        let l = |y: &[f64]| y[0].powi(10) * y[1].powi(6);
        let v = parity_probe(l, 2, 64, 1.0, 7).unwrap();
        assert_eq!(v.vector_sense, Parity::Even);
        assert_eq!(v.strict_sense, Parity::Even);

        // y1 + y2^2: neither in both senses.
        let m = |y: &[f64]| y[0] + y[1] * y[1];
        let v = parity_probe(m, 2, 64, 1.0, 7).unwrap();
        assert_eq!(v.vector_sense, Parity::Neither);
        assert_eq!(v.strict_sense, Parity::Neither);
    }

    #[test]
    fn probe_matches_the_exponent_parity_oracle() {
        // Ten monomials c * prod y_i^{e_i} with seeded exponents; the oracle
        // is the exponent parity rule: vector sense from the total degree,
        // strict sense from the per-coordinate exponents.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for case in 0..10 {
            let dim = rng.random_range(1..=4usize);
            let exps: Vec<u32> = (0..dim).map(|_| rng.random_range(0..=5u32)).collect();
            let coeff: f64 = rng.random_range(0.5..2.0);
            let h = {
                let exps = exps.clone();
                move |y: &[f64]| {
                    coeff
                        * y.iter()
                            .zip(&exps)
                            .map(|(x, e)| x.powi(*e as i32))
                            .product::<f64>()
                }
            };
            let total: u32 = exps.iter().sum();
            let want_vector = if total.is_multiple_of(2) { Parity::Even } else { Parity::Odd };
            let want_strict = if exps.iter().all(|e| e % 2 == 0) {
                Parity::Even
            } else if exps.iter().all(|e| e % 2 == 1) {
                Parity::Odd
            } else {
                Parity::Neither
            };
            let v = parity_probe(h, dim, 64, 1.0, 1000 + case).unwrap();
            assert_eq!(v.vector_sense, want_vector, "exponents {exps:?}");
            assert_eq!(v.strict_sense, want_strict, "exponents {exps:?}");
        }
    }

    #[test]
    fn probe_rejects_non_finite_values() {
        let h = |_: &[f64]| f64::NAN;
        assert!(matches!(
            parity_probe(h, 1, 4, 1.0, 0),
            Err(Error::Evaluation(_))
        ));
    }

    #[test]
    fn jacobian_parity_holds_for_the_shipped_models() {
        let defect = lemma5_check(&ForceModel::pendulum(), 100, 1.0, 11).unwrap();
        assert!(defect <= 1e-9, "pendulum defect {defect}");
        let defect = lemma5_check(&softened(3, 0.5), 100, 1.0, 12).unwrap();
        assert!(defect <= 1e-5, "softened defect {defect}");
    }

    /// A deliberately non-odd field: f(y) = y^2 + y componentwise.
    struct NotOdd;

    impl Field for NotOdd {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, y: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![y[0] * y[0] + y[0]])
        }
    }

    #[test]
    fn jacobian_parity_flags_a_non_odd_field() {
        // J(y) = 2y + 1 is not even: defect max |4y| / (1 + |2y+1|).
        let defect = lemma5_check(&NotOdd, 100, 1.0, 13).unwrap();
        assert!(defect > 0.1, "defect {defect}");
    }

    /// A field that reports a collision on half its domain, to exercise the
    /// redraw path.
    struct HalfCollides;

    impl Field for HalfCollides {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, y: &[f64]) -> Result<Vec<f64>> {
            if y[0] > 0.0 {
                return Err(Error::Collision {
                    pair: (0, 0),
                    distance: 0.0,
                    floor: 0.0,
                    time: None,
                });
            }
            Ok(vec![-y[0]])
        }
    }

    #[test]
    fn collision_samples_are_redrawn() {
        // Every accepted sample needs both y and -y collision-free, which
        // never happens here: the check must give up with a clear error.
        assert!(matches!(
            lemma5_check(&HalfCollides, 5, 1.0, 3),
            Err(Error::Evaluation(_))
        ));

        // A field with a small excluded region: redraws preserve the count.
        struct SmallHole;
        impl Field for SmallHole {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, y: &[f64]) -> Result<Vec<f64>> {
                if y[0].abs() < 0.05 {
                    return Err(Error::Collision {
                        pair: (0, 0),
                        distance: y[0].abs(),
                        floor: 0.05,
                        time: None,
                    });
                }
                Ok(vec![-y[0]])
            }
        }
        let defect = lemma5_check(&SmallHole, 50, 1.0, 3).unwrap();
        assert!(defect <= 1e-9, "linear odd field, defect {defect}");
    }

    #[test]
    fn invalid_probe_parameters_are_rejected() {
        let h = |y: &[f64]| y[0];
        assert!(parity_probe(h, 0, 4, 1.0, 0).is_err());
        assert!(parity_probe(h, 1, 0, 1.0, 0).is_err());
        assert!(parity_probe(h, 1, 4, 0.0, 0).is_err());
        assert!(lemma5_check(&ForceModel::pendulum(), 0, 1.0, 0).is_err());
        assert!(lemma5_check(&ForceModel::pendulum(), 4, -1.0, 0).is_err());
    }
}
