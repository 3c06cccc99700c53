//! Closed-form fixed points of the reduced model and their stability.
//!
//! There are three candidate equilibria on the simplex:
//!
//! * unstable dominance `(0, 0, 1)`, which always exists;
//! * mutator coexistence `(0, x1*, x2*)`, undefined when `f1 = f2`;
//! * full coexistence `(x0*, x1*, x2*)`, where the mean fitness equals `f0 Q`.
//!
//! Analytic eigenvalues are available for the first two; the third uses the
//! numeric eigensolver on the Jacobian.

use num_complex::Complex64;
use thiserror::Error;

use crate::eigensolver::{eigen3, EigenMethod};
use crate::model::{jacobian, ModelParams, SimplexState, SIMPLEX_TOL};

/// Threshold on `|f1 - f2|` below which the mutator-coexistence point is
/// undefined.
pub const DEGENERATE_FITNESS_TOL: f64 = 1e-12;
/// Threshold on the full-coexistence denominator.
pub const SINGULAR_DENOMINATOR_TOL: f64 = 1e-14;
/// Half-width of the band around bifurcation surfaces where the analytic
/// classification refuses to decide.
pub const DEGENERACY_WIDTH: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("f1 and f2 are equal (|f1 - f2| = {0:e}); the mutator-coexistence point does not exist")]
    DegenerateFitness(f64),
    #[error("full-coexistence denominator vanishes (phi = {0:e})")]
    SingularDenominator(f64),
    #[error("parameters lie on the bifurcation surface {0}")]
    Degenerate(Surface),
    #[error("expected exactly one attracting fixed point, found {0}")]
    NoUniqueAttractor(usize),
}

/// Surfaces in parameter space where the stability picture changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    /// `f1 = f2`
    EqualFitness,
    /// `f0 Q = f1 Qp`
    StableVsMutator,
    /// `f0 Q = f2`
    StableVsUnstable,
    /// `f1 Qp = f2`
    MutatorVsUnstable,
}

impl std::fmt::Display for Surface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Surface::EqualFitness => "f1 = f2",
            Surface::StableVsMutator => "f0*Q = f1*Qp",
            Surface::StableVsUnstable => "f0*Q = f2",
            Surface::MutatorVsUnstable => "f1*Qp = f2",
        };
        f.write_str(s)
    }
}

impl Surface {
    pub const ALL: [Surface; 4] =
        [Surface::EqualFitness, Surface::StableVsMutator, Surface::StableVsUnstable, Surface::MutatorVsUnstable];

    /// Signed distance-like gap; zero on the surface.
    pub fn gap(&self, p: &ModelParams) -> f64 {
        match self {
            Surface::EqualFitness => p.f1() - p.f2(),
            Surface::StableVsMutator => p.f0q() - p.f1qp(),
            Surface::StableVsUnstable => p.f0q() - p.f2(),
            Surface::MutatorVsUnstable => p.f1qp() - p.f2(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EquilibriumKind {
    /// `(0, 0, 1)`
    UnstableDominance,
    /// `(0, x1*, x2*)`
    MutatorCoexistence,
    /// `(x0*, x1*, x2*)`
    FullCoexistence,
}

impl EquilibriumKind {
    pub const ALL: [EquilibriumKind; 3] =
        [EquilibriumKind::UnstableDominance, EquilibriumKind::MutatorCoexistence, EquilibriumKind::FullCoexistence];

    pub fn name(&self) -> &'static str {
        match self {
            EquilibriumKind::UnstableDominance => "UnstableDominance",
            EquilibriumKind::MutatorCoexistence => "MutatorCoexistence",
            EquilibriumKind::FullCoexistence => "FullCoexistence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Attractor,
    /// Hyperbolic with `k` unstable directions.
    Saddle(usize),
    /// Some eigenvalue has (numerically) zero real part.
    Unresolved,
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stability::Attractor => f.write_str("Attractor"),
            Stability::Saddle(k) => write!(f, "Saddle({k})"),
            Stability::Unresolved => f.write_str("Unresolved"),
        }
    }
}

/// Classifies from eigenvalues; real parts within `zero_tol` of zero make
/// the point non-hyperbolic.
pub fn stability_from_eigenvalues(values: &[Complex64], zero_tol: f64) -> Stability {
    if values.iter().any(|v| v.re.abs() <= zero_tol) {
        return Stability::Unresolved;
    }
    match values.iter().filter(|v| v.re > 0.0).count() {
        0 => Stability::Attractor,
        k => Stability::Saddle(k),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    pub coords: SimplexState,
    pub exists: bool,
    /// Human-readable list of violated existence conditions.
    pub violations: Vec<String>,
    pub eigenvalues: [Complex64; 3],
    /// How the eigenvalues were obtained: `None` for closed forms.
    pub eigen_method: Option<EigenMethod>,
    pub stability: Stability,
}

impl Equilibrium {
    fn build(
        p: &ModelParams,
        kind: EquilibriumKind,
        coords: SimplexState,
        violations: Vec<String>,
        analytic: Option<[f64; 3]>,
    ) -> Self {
        let (eigenvalues, eigen_method) = match analytic {
            Some(v) => (v.map(|x| Complex64::new(x, 0.0)), None),
            None => {
                let r = eigen3(&jacobian(p, &coords));
                (r.values, Some(r.method))
            }
        };
        let stability = stability_from_eigenvalues(&eigenvalues, DEGENERACY_WIDTH);
        Self { kind, coords, exists: violations.is_empty(), violations, eigenvalues, eigen_method, stability }
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn unit_interval_violations(names: &[&str], values: &[f64]) -> Vec<String> {
    names
        .iter()
        .zip(values)
        .filter(|(_, &v)| !(-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(&v))
        .map(|(n, v)| format!("{n} = {v} outside [0, 1]"))
        .collect()
}

pub fn fixed_point_unstable_dominance(p: &ModelParams) -> Equilibrium {
    Equilibrium::build(
        p,
        EquilibriumKind::UnstableDominance,
        SimplexState::vertex(2),
        Vec::new(),
        Some(eigen_unstable_dominance(p)),
    )
}

pub fn fixed_point_mutator_coexistence(p: &ModelParams) -> Result<Equilibrium, EquilibriumError> {
    let (f1, f2, qp) = (p.f1(), p.f2(), p.qp());
    let denom = f1 - f2;
    if denom.abs() < DEGENERATE_FITNESS_TOL {
        return Err(EquilibriumError::DegenerateFitness(denom.abs()));
    }
    let x1 = (f1 * qp - f2) / denom;
    let x2 = (f1 - f1 * qp) / denom;
    let coords = SimplexState::from_raw(0.0, x1, x2);
    let violations = unit_interval_violations(&["x1", "x2"], &[x1, x2]);
    Ok(Equilibrium::build(
        p,
        EquilibriumKind::MutatorCoexistence,
        coords,
        violations,
        Some(eigen_mutator_coexistence(p)?),
    ))
}

/// Denominator shared by the full-coexistence coordinates; it is the sum of
/// their three numerators.
pub fn full_coexistence_denominator(p: &ModelParams) -> f64 {
    let (a, b, c) = full_coexistence_numerators(p);
    a + b + c
}

fn full_coexistence_numerators(p: &ModelParams) -> (f64, f64, f64) {
    let f0q = p.f0q();
    let n0 = (f0q - p.f1qp()) * (f0q - p.f2());
    let n1 = p.f0() * p.mu0() * (f0q - p.f2());
    let n2 = p.f1() * p.mu1() * p.f0() * p.mu0();
    (n0, n1, n2)
}

pub fn fixed_point_full_coexistence(p: &ModelParams) -> Result<Equilibrium, EquilibriumError> {
    let (n0, n1, n2) = full_coexistence_numerators(p);
    let phi = n0 + n1 + n2;
    if phi.abs() < SINGULAR_DENOMINATOR_TOL {
        return Err(EquilibriumError::SingularDenominator(phi));
    }
    let (x0, x1, x2) = (n0 / phi, n1 / phi, n2 / phi);
    let violations = unit_interval_violations(&["x0", "x1", "x2"], &[x0, x1, x2]);
    Ok(Equilibrium::build(p, EquilibriumKind::FullCoexistence, SimplexState::from_raw(x0, x1, x2), violations, None))
}

/// Builds one branch by kind.
pub fn fixed_point(p: &ModelParams, kind: EquilibriumKind) -> Result<Equilibrium, EquilibriumError> {
    match kind {
        EquilibriumKind::UnstableDominance => Ok(fixed_point_unstable_dominance(p)),
        EquilibriumKind::MutatorCoexistence => fixed_point_mutator_coexistence(p),
        EquilibriumKind::FullCoexistence => fixed_point_full_coexistence(p),
    }
}

/// All three branches, each either built or with the reason it is undefined.
pub fn all_fixed_points(p: &ModelParams) -> Vec<(EquilibriumKind, Result<Equilibrium, EquilibriumError>)> {
    EquilibriumKind::ALL.iter().map(|&k| (k, fixed_point(p, k))).collect()
}

/// The fixed points that are defined and lie on the simplex.
pub fn existing_fixed_points(p: &ModelParams) -> Vec<Equilibrium> {
    all_fixed_points(p).into_iter().filter_map(|(_, e)| e.ok()).filter(|e| e.exists).collect()
}

/// Eigenvalues at `(0, 0, 1)`: `(f0 Q - f2, f1 Qp - f2, -f2)`.
pub fn eigen_unstable_dominance(p: &ModelParams) -> [f64; 3] {
    [p.f0q() - p.f2(), p.f1qp() - p.f2(), -p.f2()]
}

/// Eigenvalues at the mutator-coexistence point.
///
/// The first belongs to the `x0` direction, the second to the edge
/// `x0 = 0` of the simplex and the third (`-f1*Qp`, the mean fitness there)
/// to the direction leaving the plane `S = 1`.
pub fn eigen_mutator_coexistence(p: &ModelParams) -> Result<[f64; 3], EquilibriumError> {
    let denom = p.f1() - p.f2();
    if denom.abs() < DEGENERATE_FITNESS_TOL {
        return Err(EquilibriumError::DegenerateFitness(denom.abs()));
    }
    Ok([p.f0q() - p.f1qp(), p.f2() - p.f1qp(), -p.f1qp()])
}

/// Critical mutation rates `(mu0_c, mu1_c)`, clamped to `[0, 1]`.
///
/// The unstable-dominance point attracts exactly when `mu0 > mu0_c` and
/// `mu1 > mu1_c`.
pub fn critical_mutation_rates(p: &ModelParams) -> (f64, f64) {
    let mu0c = (1.0 - p.f2() / p.f0()).clamp(0.0, 1.0);
    let mu1c = (1.0 - p.f2() / p.f1()).clamp(0.0, 1.0);
    (mu0c, mu1c)
}

/// The surface within [`DEGENERACY_WIDTH`] of `p`, if any.
pub fn nearest_degenerate_surface(p: &ModelParams) -> Option<Surface> {
    Surface::ALL.into_iter().find(|s| s.gap(p).abs() <= DEGENERACY_WIDTH)
}

/// The unique attracting equilibrium predicted by linear stability.
///
/// Parameters on a surface that does not touch the attractor (for instance
/// `f0 Q = f1 Qp` inside the unstable-dominance region) still classify; a
/// surface is only reported when it leaves no hyperbolic attractor.
pub fn classify_analytic(p: &ModelParams) -> Result<Equilibrium, EquilibriumError> {
    let mut attractors: Vec<Equilibrium> =
        existing_fixed_points(p).into_iter().filter(|e| e.stability == Stability::Attractor).collect();
    match attractors.len() {
        1 => Ok(attractors.remove(0)),
        n => match nearest_degenerate_surface(p) {
            Some(s) => Err(EquilibriumError::Degenerate(s)),
            None => Err(EquilibriumError::NoUniqueAttractor(n)),
        },
    }
}

/// Fixed points an orbit may settle on: the analytic attractor, or on a
/// degenerate surface every existing point without a clearly unstable
/// direction.
pub fn candidate_attractors(p: &ModelParams) -> Vec<Equilibrium> {
    match classify_analytic(p) {
        Ok(e) => vec![e],
        Err(_) => existing_fixed_points(p).into_iter().filter(|e| e.max_real_part() <= 1e-9).collect(),
    }
}
