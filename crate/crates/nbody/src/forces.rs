//! Right-hand sides for the second-order systems we integrate: Newtonian
//! gravity, its softened variant, and a scalar pendulum used as a smoke
//! model. Positions and accelerations travel as flat `f64` slices of length
//! `dim()` (three entries per body for the gravitational kinds).

use nalgebra::{DMatrix, Vector3};

use crate::error::{Error, Result};

/// Relative collision floor: two bodies closer than this fraction of the
/// configuration's largest pairwise distance count as collided for the
/// unsoftened model.
pub const COLLISION_FLOOR_FACTOR: f64 = 1e-9;

/// Symmetric pairwise softening lengths for the softened model. The diagonal
/// is unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Softening {
    n: usize,
    eps: Vec<f64>,
}

impl Softening {
    /// One shared softening length for every pair.
    pub fn uniform(n: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidModel(format!(
                "softening length must be positive and finite, got {eps}"
            )));
        }
        Ok(Self {
            n,
            eps: vec![eps; n * n],
        })
    }

    /// Full symmetric matrix of pairwise softening lengths; `rows` must be
    /// square, symmetric, and positive off the diagonal.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel(
                "softening matrix must be square".into(),
            ));
        }
        let mut eps = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    if rows[j][k] != rows[k][j] {
                        return Err(Error::InvalidModel(format!(
                            "softening matrix must be symmetric: ({j},{k}) = {} but ({k},{j}) = {}",
                            rows[j][k], rows[k][j]
                        )));
                    }
                    if !(rows[j][k] > 0.0) || !rows[j][k].is_finite() {
                        return Err(Error::InvalidModel(format!(
                            "softening ({j},{k}) must be positive and finite, got {}",
                            rows[j][k]
                        )));
                    }
                }
                eps[j * n + k] = rows[j][k];
            }
        }
        Ok(Self { n, eps })
    }

    /// Softening length for the pair `(j, k)`, `j != k`.
    pub fn eps(&self, j: usize, k: usize) -> f64 {
        self.eps[j * self.n + k]
    }

    /// Smallest off-diagonal softening length.
    pub fn min_eps(&self) -> f64 {
        let mut m = f64::INFINITY;
        for j in 0..self.n {
            for k in 0..self.n {
                if j != k {
                    m = m.min(self.eps(j, k));
                }
            }
        }
        m
    }

    pub fn body_count(&self) -> usize {
        self.n
    }
}

/// Masses, gravitational constant, and optional softening for a gravitating
/// system of `N` point bodies.
#[derive(Debug, Clone, PartialEq)]
pub struct BodySystem {
    masses: Vec<f64>,
    g: f64,
    softening: Option<Softening>,
}

impl BodySystem {
    pub fn new(masses: Vec<f64>, g: f64, softening: Option<Softening>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidModel("at least one body is required".into()));
        }
        if let Some(bad) = masses.iter().find(|m| !(**m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "masses must be positive and finite, got {bad}"
            )));
        }
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::InvalidModel(format!(
                "gravitational constant must be positive and finite, got {g}"
            )));
        }
        if let Some(s) = &softening {
            if s.body_count() != masses.len() {
                return Err(Error::InvalidModel(format!(
                    "softening matrix is {}x{} but there are {} bodies",
                    s.body_count(),
                    s.body_count(),
                    masses.len()
                )));
            }
        }
        Ok(Self {
            masses,
            g,
            softening,
        })
    }

    pub fn body_count(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn softening(&self) -> Option<&Softening> {
        self.softening.as_ref()
    }
}

/// Which right-hand side a [`ForceModel`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Newtonian,
    Softened,
    Pendulum,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Newtonian => write!(f, "newtonian"),
            ModelKind::Softened => write!(f, "softened"),
            ModelKind::Pendulum => write!(f, "pendulum"),
        }
    }
}

/// A concrete autonomous second-order system `y'' = f(y)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ForceModel {
    Newtonian(BodySystem),
    Softened(BodySystem),
    Pendulum,
}

impl ForceModel {
    /// Unsoftened gravity. The system must not carry a softening matrix.
    pub fn newtonian(system: BodySystem) -> Result<Self> {
        if system.softening().is_some() {
            return Err(Error::InvalidModel(
                "newtonian model does not take a softening matrix".into(),
            ));
        }
        Ok(ForceModel::Newtonian(system))
    }

    /// Softened gravity. The system must carry a softening matrix.
    pub fn softened(system: BodySystem) -> Result<Self> {
        if system.softening().is_none() {
            return Err(Error::InvalidModel(
                "softened model requires a softening matrix".into(),
            ));
        }
        Ok(ForceModel::Softened(system))
    }

    pub fn pendulum() -> Self {
        ForceModel::Pendulum
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ForceModel::Newtonian(_) => ModelKind::Newtonian,
            ForceModel::Softened(_) => ModelKind::Softened,
            ForceModel::Pendulum => ModelKind::Pendulum,
        }
    }

    pub fn system(&self) -> Option<&BodySystem> {
        match self {
            ForceModel::Newtonian(s) | ForceModel::Softened(s) => Some(s),
            ForceModel::Pendulum => None,
        }
    }

    pub fn body_count(&self) -> Option<usize> {
        self.system().map(BodySystem::body_count)
    }
}

/// Anything that can serve as the right-hand side of `y'' = f(y)` on a flat
/// coordinate vector. Implemented by [`ForceModel`] and by test doubles.
pub trait Field {
    /// Length of the coordinate vector.
    fn dim(&self) -> usize;
    /// Acceleration at `y`; `y.len()` must equal `dim()`.
    fn eval(&self, y: &[f64]) -> Result<Vec<f64>>;
}

impl Field for ForceModel {
    fn dim(&self) -> usize {
        match self {
            ForceModel::Newtonian(s) | ForceModel::Softened(s) => 3 * s.body_count(),
            ForceModel::Pendulum => 1,
        }
    }

    fn eval(&self, y: &[f64]) -> Result<Vec<f64>> {
        match self {
            ForceModel::Newtonian(s) => newtonian_accel(s, y),
            ForceModel::Softened(s) => softened_accel(s, y),
            ForceModel::Pendulum => Ok(vec![pendulum_accel(y[0])]),
        }
    }
}

fn check_positions(system: &BodySystem, positions: &[f64]) -> Result<()> {
    if positions.len() != 3 * system.body_count() {
        return Err(Error::InvalidParameter(format!(
            "expected {} coordinates for {} bodies, got {}",
            3 * system.body_count(),
            system.body_count(),
            positions.len()
        )));
    }
    Ok(())
}

fn body(positions: &[f64], k: usize) -> Vector3<f64> {
    Vector3::new(positions[3 * k], positions[3 * k + 1], positions[3 * k + 2])
}

/// Largest pairwise distance in a flat position vector.
pub fn max_pairwise_distance(positions: &[f64]) -> f64 {
    let n = positions.len() / 3;
    let mut m = 0.0_f64;
    for a in 0..n {
        for b in (a + 1)..n {
            m = m.max((body(positions, b) - body(positions, a)).norm());
        }
    }
    m
}

/// Smallest pairwise distance in a flat position vector (infinite for a
/// single body).
pub fn min_pairwise_distance(positions: &[f64]) -> f64 {
    let n = positions.len() / 3;
    let mut m = f64::INFINITY;
    for a in 0..n {
        for b in (a + 1)..n {
            m = m.min((body(positions, b) - body(positions, a)).norm());
        }
    }
    m
}

/// Accelerations under unsoftened Newtonian gravity,
/// `f_k = sum_{j != k} G m_j (y_j - y_k) / |y_j - y_k|^3`.
///
/// Fails with a collision error when any pair sits at or below the collision
/// floor, measured relative to the largest pairwise distance of the supplied
/// configuration.
pub fn newtonian_accel(system: &BodySystem, positions: &[f64]) -> Result<Vec<f64>> {
    check_positions(system, positions)?;
    let n = system.body_count();
    let floor = COLLISION_FLOOR_FACTOR * max_pairwise_distance(positions);
    let g = system.g();
    let mut acc = vec![0.0; 3 * n];
    for a in 0..n {
        for b in (a + 1)..n {
            let d = body(positions, b) - body(positions, a);
            let r = d.norm();
            if r <= floor {
                return Err(Error::Collision {
                    pair: (a, b),
                    distance: r,
                    floor,
                    time: None,
                });
            }
            let common = d * (g / (r * r * r));
            for axis in 0..3 {
                acc[3 * a + axis] += system.masses()[b] * common[axis];
                acc[3 * b + axis] -= system.masses()[a] * common[axis];
            }
        }
    }
    Ok(acc)
}

/// Accelerations under softened gravity,
/// `f_k = sum_{j != k} G m_j (y_j - y_k) / (|y_j - y_k| + eps(j,k))^3`.
///
/// Defined for every configuration, including coincident bodies.
pub fn softened_accel(system: &BodySystem, positions: &[f64]) -> Result<Vec<f64>> {
    check_positions(system, positions)?;
    let soft = system
        .softening()
        .ok_or_else(|| Error::InvalidModel("softened model requires a softening matrix".into()))?;
    let n = system.body_count();
    let g = system.g();
    let mut acc = vec![0.0; 3 * n];
    for a in 0..n {
        for b in (a + 1)..n {
            let d = body(positions, b) - body(positions, a);
            let r = d.norm();
            let den = r + soft.eps(a, b);
            let common = d * (g / (den * den * den));
            for axis in 0..3 {
                acc[3 * a + axis] += system.masses()[b] * common[axis];
                acc[3 * b + axis] -= system.masses()[a] * common[axis];
            }
        }
    }
    Ok(acc)
}

/// Pendulum right-hand side, `theta'' = -sin(theta)`.
pub fn pendulum_accel(theta: f64) -> f64 {
    -theta.sin()
}

/// Global acceleration bound for the softened model:
/// `N * G * max_j m_j * max_{j != k} 1 / eps(j,k)^2`.
///
/// The maximum over an empty pair set (a single body) is zero, matching the
/// identically zero force.
pub fn accel_bound(model: &ForceModel) -> Result<f64> {
    let ForceModel::Softened(system) = model else {
        return Err(Error::InvalidModel(
            "acceleration bound is defined for the softened model".into(),
        ));
    };
    let soft = system.softening().expect("softened model has softening");
    let n = system.body_count();
    if n == 1 {
        return Ok(0.0);
    }
    let max_mass = system.masses().iter().fold(0.0_f64, |m, x| m.max(*x));
    let min_eps = soft.min_eps();
    Ok(n as f64 * system.g() * max_mass / (min_eps * min_eps))
}

/// Total mechanical energy (kinetic plus pairwise potential) of a state.
///
/// The softened pair potential is
/// `-G m_j m_k [1/(r + eps) - eps / (2 (r + eps)^2)]`, whose radial
/// derivative reproduces the softened force magnitude `G m_j m_k r/(r+eps)^3`.
/// The pendulum uses `v^2/2 + (1 - cos theta)`.
pub fn total_energy(model: &ForceModel, positions: &[f64], velocities: &[f64]) -> Result<f64> {
    if velocities.len() != positions.len() {
        return Err(Error::InvalidParameter(format!(
            "positions have {} coordinates but velocities have {}",
            positions.len(),
            velocities.len()
        )));
    }
    match model {
        ForceModel::Pendulum => {
            Ok(0.5 * velocities[0] * velocities[0] + (1.0 - positions[0].cos()))
        }
        ForceModel::Newtonian(system) | ForceModel::Softened(system) => {
            check_positions(system, positions)?;
            let n = system.body_count();
            let g = system.g();
            let mut e = 0.0;
            for k in 0..n {
                let v = body(velocities, k);
                e += 0.5 * system.masses()[k] * v.norm_squared();
            }
            let floor = COLLISION_FLOOR_FACTOR * max_pairwise_distance(positions);
            for a in 0..n {
                for b in (a + 1)..n {
                    let r = (body(positions, b) - body(positions, a)).norm();
                    let mm = g * system.masses()[a] * system.masses()[b];
                    match model.kind() {
                        ModelKind::Newtonian => {
                            if r <= floor {
                                return Err(Error::Collision {
                                    pair: (a, b),
                                    distance: r,
                                    floor,
                                    time: None,
                                });
                            }
                            e -= mm / r;
                        }
                        _ => {
                            let eps = system
                                .softening()
                                .expect("softened model has softening")
                                .eps(a, b);
                            let den = r + eps;
                            e -= mm * (1.0 / den - eps / (2.0 * den * den));
                        }
                    }
                }
            }
            Ok(e)
        }
    }
}

/// Default central-difference step for [`jacobian_fd`]:
/// `1e-5 * (1 + |y|_inf)`.
pub fn default_fd_step(y: &[f64]) -> f64 {
    1e-5 * (1.0 + y.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
}

/// Jacobian of the field by central finite differences with step `h`;
/// entry `(j, k)` approximates the partial of component `j` with respect to
/// coordinate `k`. Probe points must satisfy the field's preconditions.
pub fn jacobian_fd<F: Field + ?Sized>(field: &F, y: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let n = field.dim();
    if y.len() != n {
        return Err(Error::InvalidParameter(format!(
            "expected {} coordinates, got {}",
            n,
            y.len()
        )));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let mut jac = DMatrix::zeros(n, n);
    let mut probe = y.to_vec();
    for k in 0..n {
        probe[k] = y[k] + h;
        let plus = field.eval(&probe)?;
        probe[k] = y[k] - h;
        let minus = field.eval(&probe)?;
        probe[k] = y[k];
        for j in 0..n {
            jac[(j, k)] = (plus[j] - minus[j]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Kinematic state of a system: time plus flat position and velocity vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
}

impl State {
    pub fn new(t: f64, positions: Vec<f64>, velocities: Vec<f64>) -> Result<Self> {
        if positions.len() != velocities.len() {
            return Err(Error::InvalidParameter(format!(
                "positions have {} coordinates but velocities have {}",
                positions.len(),
                velocities.len()
            )));
        }
        Ok(Self {
            t,
            positions,
            velocities,
        })
    }

    /// Number of coordinates.
    pub fn dim(&self) -> usize {
        self.positions.len()
    }
}
