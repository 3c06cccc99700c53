//! The three-population tumor quasispecies model and its n-subclone
//! generalization.
//!
//! Populations are fractions: `x0` (anomalous growth, genetically stable),
//! `x1` (mutator phenotype) and `x2` (unstable tumor cells, optionally split
//! into `n` subclones). Mutations run one way only, `x0 -> x1 -> x2`, and the
//! mean fitness term keeps the total population on the unit simplex.

use thiserror::Error;

/// Tolerance on `|x0 + x1 + x2 - 1|` and on negative components for states
/// built by construction.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Tolerance used when checking states produced by long integrations.
pub const POST_INTEGRATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("fitness {name} must be positive and finite, got {value}")]
    NonPositiveFitness { name: &'static str, value: f64 },
    #[error("copying fidelity {name} must lie in (0, 1), got {value}")]
    FidelityOutOfRange { name: &'static str, value: f64 },
    #[error("state is not on the simplex: component sum {sum}, min component {min}")]
    OffSimplex { sum: f64, min: f64 },
    #[error("state has non-finite component")]
    NonFinite,
    #[error("branching probabilities sum to {0}, expected 1")]
    BranchingSum(f64),
    #[error("mutation kernel column {column} sums to {sum}, expected 1")]
    ColumnNotStochastic { column: usize, sum: f64 },
    #[error("mutation kernel entry ({row}, {column}) = {value} is outside [0, 1]")]
    KernelEntryOutOfRange { row: usize, column: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("general model needs at least one subclone")]
    NoSubclones,
}

/// Right-hand side of an autonomous ODE on a flat state vector.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], dx: &mut [f64]);
}

/// Replication rates and copying fidelities of the reduced model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    f0: f64,
    f1: f64,
    f2: f64,
    q: f64,
    qp: f64,
}

fn check_fitness(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::NonPositiveFitness { name, value })
    }
}

fn check_fidelity(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(ModelError::FidelityOutOfRange { name, value })
    }
}

impl ModelParams {
    pub fn new(f0: f64, f1: f64, f2: f64, q: f64, qp: f64) -> Result<Self, ModelError> {
        check_fitness("f0", f0)?;
        check_fitness("f1", f1)?;
        check_fitness("f2", f2)?;
        check_fidelity("Q", q)?;
        check_fidelity("Qp", qp)?;
        Ok(Self { f0, f1, f2, q, qp })
    }

    /// Builds parameters from the products `f0*Q` and `f1*Qp`, which are the
    /// coordinates of the parameter plane.
    pub fn from_products(f0q: f64, f1qp: f64, f2: f64, q: f64, qp: f64) -> Result<Self, ModelError> {
        check_fidelity("Q", q)?;
        check_fidelity("Qp", qp)?;
        Self::new(f0q / q, f1qp / qp, f2, q, qp)
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }
    pub fn f1(&self) -> f64 {
        self.f1
    }
    pub fn f2(&self) -> f64 {
        self.f2
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn qp(&self) -> f64 {
        self.qp
    }
    /// Mutation rate of `x0`, `1 - Q`.
    pub fn mu0(&self) -> f64 {
        1.0 - self.q
    }
    /// Mutation rate of `x1`, `1 - Qp`.
    pub fn mu1(&self) -> f64 {
        1.0 - self.qp
    }
    pub fn f0q(&self) -> f64 {
        self.f0 * self.q
    }
    pub fn f1qp(&self) -> f64 {
        self.f1 * self.qp
    }
}

/// Population fractions `(x0, x1, x2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexState {
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
}

impl SimplexState {
    /// Checked constructor using [`SIMPLEX_TOL`].
    pub fn new(x0: f64, x1: f64, x2: f64) -> Result<Self, ModelError> {
        Self::with_tolerance(x0, x1, x2, SIMPLEX_TOL)
    }

    pub fn with_tolerance(x0: f64, x1: f64, x2: f64, tol: f64) -> Result<Self, ModelError> {
        let s = Self { x0, x1, x2 };
        s.check(tol)?;
        Ok(s)
    }

    /// Unchecked constructor, for points that may lie off the simplex (for
    /// example a closed-form equilibrium outside its existence region).
    pub const fn from_raw(x0: f64, x1: f64, x2: f64) -> Self {
        Self { x0, x1, x2 }
    }

    pub fn vertex(i: usize) -> Self {
        let mut a = [0.0; 3];
        a[i] = 1.0;
        Self::from_array(a)
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { x0: a[0], x1: a[1], x2: a[2] }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x0, self.x1, self.x2]
    }

    pub fn sum(&self) -> f64 {
        self.x0 + self.x1 + self.x2
    }

    pub fn check(&self, tol: f64) -> Result<(), ModelError> {
        let a = self.to_array();
        if a.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite);
        }
        let sum = self.sum();
        let min = a.iter().copied().fold(f64::INFINITY, f64::min);
        if (sum - 1.0).abs() > tol || min < -tol {
            return Err(ModelError::OffSimplex { sum, min });
        }
        Ok(())
    }

    /// Projects onto the simplex by clamping negatives and rescaling. Only
    /// ever applied on explicit request.
    pub fn renormalized(&self) -> Self {
        let a = self.to_array().map(|v| v.max(0.0));
        let s: f64 = a.iter().sum();
        Self::from_array(a.map(|v| v / s))
    }

    /// Euclidean distance.
    pub fn distance(&self, other: &SimplexState) -> f64 {
        let d0 = self.x0 - other.x0;
        let d1 = self.x1 - other.x1;
        let d2 = self.x2 - other.x2;
        (d0 * d0 + d1 * d1 + d2 * d2).sqrt()
    }
}

/// Mean fitness `f0 x0 + f1 x1 + f2 x2`.
pub fn mean_fitness(p: &ModelParams, s: &SimplexState) -> f64 {
    p.f0 * s.x0 + p.f1 * s.x1 + p.f2 * s.x2
}

fn reduced_rhs(p: &ModelParams, x: [f64; 3]) -> [f64; 3] {
    let [x0, x1, x2] = x;
    let phi = p.f0 * x0 + p.f1 * x1 + p.f2 * x2;
    [
        p.f0 * p.q * x0 - phi * x0,
        p.f0 * (1.0 - p.q) * x0 + p.f1 * p.qp * x1 - phi * x1,
        p.f1 * (1.0 - p.qp) * x1 + p.f2 * x2 - phi * x2,
    ]
}

/// Time derivative of the reduced system.
pub fn vector_field(p: &ModelParams, s: &SimplexState) -> [f64; 3] {
    reduced_rhs(p, s.to_array())
}

/// Analytic Jacobian of [`vector_field`], row-major.
pub fn jacobian(p: &ModelParams, s: &SimplexState) -> [[f64; 3]; 3] {
    let SimplexState { x0, x1, x2 } = *s;
    let (f0, f1, f2) = (p.f0, p.f1, p.f2);
    let phi = mean_fitness(p, s);
    [
        [f0 * p.q - phi - x0 * f0, -x0 * f1, -x0 * f2],
        [f0 * (1.0 - p.q) - x1 * f0, f1 * p.qp - phi - x1 * f1, -x1 * f2],
        [-x2 * f0, f1 * (1.0 - p.qp) - x2 * f1, f2 - phi - x2 * f2],
    ]
}

impl VectorField for ModelParams {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, x: &[f64], dx: &mut [f64]) {
        dx.copy_from_slice(&reduced_rhs(self, [x[0], x[1], x[2]]));
    }
}

/// Model with `n` subclones of the unstable population.
///
/// The subclone mutation kernel is stored column-major: `kernel[j * n + i]`
/// is the probability that a replication of subclone `j` yields subclone `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralModel {
    f0: f64,
    f1: f64,
    q: f64,
    qp: f64,
    f2: Vec<f64>,
    branching: Vec<f64>,
    kernel: Vec<f64>,
}

impl GeneralModel {
    /// `kernel_rows[i][j]` is the mutation probability from subclone `j` to
    /// subclone `i`.
    pub fn new(
        f0: f64,
        f1: f64,
        q: f64,
        qp: f64,
        f2: Vec<f64>,
        branching: Vec<f64>,
        kernel_rows: &[Vec<f64>],
    ) -> Result<Self, ModelError> {
        let n = f2.len();
        if n == 0 {
            return Err(ModelError::NoSubclones);
        }
        check_fitness("f0", f0)?;
        check_fitness("f1", f1)?;
        check_fidelity("Q", q)?;
        check_fidelity("Qp", qp)?;
        for &v in &f2 {
            check_fitness("f2", v)?;
        }
        if branching.len() != n {
            return Err(ModelError::Dimension { expected: n, got: branching.len() });
        }
        if branching.iter().any(|&b| !(0.0..=1.0).contains(&b)) {
            return Err(ModelError::BranchingSum(branching.iter().sum()));
        }
        let bsum: f64 = branching.iter().sum();
        if (bsum - 1.0).abs() > SIMPLEX_TOL {
            return Err(ModelError::BranchingSum(bsum));
        }
        if kernel_rows.len() != n {
            return Err(ModelError::Dimension { expected: n, got: kernel_rows.len() });
        }
        let mut kernel = vec![0.0; n * n];
        for (i, row) in kernel_rows.iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::Dimension { expected: n, got: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(ModelError::KernelEntryOutOfRange { row: i, column: j, value: v });
                }
                kernel[j * n + i] = v;
            }
        }
        for j in 0..n {
            let sum: f64 = kernel[j * n..(j + 1) * n].iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(ModelError::ColumnNotStochastic { column: j, sum });
            }
        }
        Ok(Self { f0, f1, q, qp, f2, branching, kernel })
    }

    /// Single-subclone model equivalent to the reduced system.
    pub fn from_reduced(p: &ModelParams) -> Self {
        Self {
            f0: p.f0,
            f1: p.f1,
            q: p.q,
            qp: p.qp,
            f2: vec![p.f2],
            branching: vec![1.0],
            kernel: vec![1.0],
        }
    }

    pub fn subclones(&self) -> usize {
        self.f2.len()
    }

    pub fn subclone_fitness(&self) -> &[f64] {
        &self.f2
    }

    pub fn branching(&self) -> &[f64] {
        &self.branching
    }

    /// Kernel entry: mutation from subclone `from` to subclone `to`.
    pub fn kernel(&self, to: usize, from: usize) -> f64 {
        self.kernel[from * self.subclones() + to]
    }

    /// The full `(n+2) x (n+2)` column-stochastic mutation matrix, row-major.
    pub fn markov_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.subclones();
        let mut m = vec![vec![0.0; n + 2]; n + 2];
        m[0][0] = self.q;
        m[1][0] = 1.0 - self.q;
        m[1][1] = self.qp;
        for i in 0..n {
            m[i + 2][1] = (1.0 - self.qp) * self.branching[i];
            for j in 0..n {
                m[i + 2][j + 2] = self.kernel(i, j);
            }
        }
        m
    }

    /// Diagonal of the fitness matrix.
    pub fn fitness_diagonal(&self) -> Vec<f64> {
        let mut d = vec![self.f0, self.f1];
        d.extend_from_slice(&self.f2);
        d
    }

    /// Reduced parameters when all subclones share one fitness.
    pub fn reduced_params(&self) -> Option<ModelParams> {
        let f2 = self.f2[0];
        if self.f2.iter().all(|&v| v == f2) {
            ModelParams::new(self.f0, self.f1, f2, self.q, self.qp).ok()
        } else {
            None
        }
    }

    fn rhs_into(&self, x: &[f64], dx: &mut [f64]) {
        let n = self.subclones();
        let (x0, x1) = (x[0], x[1]);
        let sub = &x[2..];
        let mut phi = self.f0 * x0 + self.f1 * x1;
        let mut tail = 0.0;
        for (f, v) in self.f2.iter().zip(sub) {
            tail += f * v;
        }
        phi += tail;
        dx[0] = self.f0 * self.q * x0 - phi * x0;
        dx[1] = self.f0 * (1.0 - self.q) * x0 + self.f1 * self.qp * x1 - phi * x1;
        let mu1 = self.f1 * (1.0 - self.qp);
        for i in 0..n {
            let mut acc = mu1 * self.branching[i] * x1;
            let mut mix = 0.0;
            for j in 0..n {
                mix += self.f2[j] * self.kernel[j * n + i] * sub[j];
            }
            acc += mix;
            dx[i + 2] = acc - phi * sub[i];
        }
    }
}

impl VectorField for GeneralModel {
    fn dim(&self) -> usize {
        self.subclones() + 2
    }

    fn eval(&self, x: &[f64], dx: &mut [f64]) {
        self.rhs_into(x, dx);
    }
}

/// Mean fitness of the generalized model.
pub fn general_mean_fitness(g: &GeneralModel, x: &[f64]) -> Result<f64, ModelError> {
    check_dim(g, x)?;
    Ok(g.fitness_diagonal().iter().zip(x).map(|(f, v)| f * v).sum())
}

fn check_dim(g: &GeneralModel, x: &[f64]) -> Result<(), ModelError> {
    if x.len() != g.dim() {
        return Err(ModelError::Dimension { expected: g.dim(), got: x.len() });
    }
    Ok(())
}

/// `M D_f x - Phi(x) x` for the generalized model.
pub fn general_vector_field(g: &GeneralModel, x: &[f64]) -> Result<Vec<f64>, ModelError> {
    check_dim(g, x)?;
    let mut dx = vec![0.0; x.len()];
    g.rhs_into(x, &mut dx);
    Ok(dx)
}

/// Collapses the subclones into a single unstable population.
pub fn aggregate(x: &[f64]) -> Result<SimplexState, ModelError> {
    if x.len() < 3 {
        return Err(ModelError::Dimension { expected: 3, got: x.len() });
    }
    Ok(SimplexState::from_raw(x[0], x[1], x[2..].iter().sum()))
}
