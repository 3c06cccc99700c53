//! Eigenvalues of small dense real matrices.
//!
//! The primary route for 3x3 matrices is a power-iteration triple: the
//! dominant eigenvalue by power iteration, the smallest-modulus one by power
//! iteration on the inverse (applied through a Householder QR factorization),
//! and the remaining one from the determinant. When that route cannot
//! converge (modulus ties, complex pairs) [`eigen3`] falls back to solving
//! the characteristic cubic directly.

use num_complex::Complex64;
use thiserror::Error;

pub type Mat3 = [[f64; 3]; 3];

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 100_000;
/// Residual bound, relative to `||A||`, for accepting a computed eigenpair.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("power iteration did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("matrix is singular to working precision")]
    SingularMatrix,
    #[error("eigenvalue estimates are inconsistent with the characteristic polynomial (residual {0:e})")]
    InaccurateInputs(f64),
    #[error("start vector is zero")]
    ZeroStartVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    PowerTriple,
    Fallback,
}

impl EigenMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EigenMethod::PowerTriple => "PowerTriple",
            EigenMethod::Fallback => "Fallback",
        }
    }
}

/// Iteration counts of the power-triple stages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageIterations {
    pub dominant: usize,
    pub smallest: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    /// Sorted by descending real part, then descending imaginary part.
    pub values: [Complex64; 3],
    /// `||(A - lambda I) v|| / ||v||` for the best available eigenvector.
    pub residuals: [f64; 3],
    pub iterations: StageIterations,
    pub method: EigenMethod,
}

impl EigenReport {
    pub fn real_parts(&self) -> [f64; 3] {
        self.values.map(|v| v.re)
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub fn mat_vec(a: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [dot(&a[0], v), dot(&a[1], v), dot(&a[2], v)]
}

/// Frobenius norm.
pub fn frobenius(a: &Mat3) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn trace(a: &Mat3) -> f64 {
    a[0][0] + a[1][1] + a[2][2]
}

/// Sum of the principal 2x2 minors.
pub fn principal_minor_sum(a: &Mat3) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2] - a[0][2] * a[2][0] + a[1][1] * a[2][2]
        - a[1][2] * a[2][1]
}

/// Cofactor expansion; used by tests and by the fallback polynomial.
pub fn det_cofactor(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Householder QR of a square matrix given row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QrDecomposition {
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    /// `det(Q)`, exactly `+1` or `-1`: the product of the reflector signs.
    pub q_sign: f64,
}

impl QrDecomposition {
    pub fn dim(&self) -> usize {
        self.r.len()
    }

    pub fn determinant(&self) -> f64 {
        self.q_sign * (0..self.dim()).map(|i| self.r[i][i]).product::<f64>()
    }

    /// Solves `A x = b` as `R x = Q^T b` by back substitution.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = (0..n).map(|i| (0..n).map(|k| self.q[k][i] * b[k]).sum()).collect();
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.r[i][k] * y[k];
            }
            y[i] = s / self.r[i][i];
        }
        y
    }
}

pub fn qr_decompose(a: &[Vec<f64>]) -> QrDecomposition {
    let n = a.len();
    let mut r: Vec<Vec<f64>> = a.to_vec();
    let mut q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut q_sign = 1.0;
    for k in 0..n.saturating_sub(1) {
        let alpha_norm = (k..n).map(|i| r[i][k] * r[i][k]).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let alpha = if r[k][k] > 0.0 { -alpha_norm } else { alpha_norm };
        let mut v: Vec<f64> = (k..n).map(|i| r[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H = I - 2 v v^T / (v^T v), applied from the left to R and accumulated into Q
        for j in 0..n {
            let s: f64 = (k..n).map(|i| v[i - k] * r[i][j]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..n {
                r[i][j] -= s * v[i - k];
            }
        }
        for row in q.iter_mut() {
            let s: f64 = (k..n).map(|i| row[i] * v[i - k]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..n {
                row[i] -= s * v[i - k];
            }
        }
        q_sign = -q_sign;
        r[k][k] = alpha;
        for row in r.iter_mut().skip(k + 1) {
            row[k] = 0.0;
        }
    }
    QrDecomposition { q, r, q_sign }
}

fn to_rows(a: &Mat3) -> Vec<Vec<f64>> {
    a.iter().map(|r| r.to_vec()).collect()
}

/// Power iteration with a caller-supplied operator. Converges when the
/// Rayleigh quotient changes by at most `tol` (relative) on two successive
/// iterations and the eigenpair residual is below `100 tol |lambda|`.
fn power_iterate<F>(apply: F, v0: &[f64; 3], tol: f64, max_iter: usize) -> Result<(f64, [f64; 3], usize), EigenError>
where
    F: Fn(&[f64; 3]) -> [f64; 3],
{
    let n0 = norm(v0);
    if n0 == 0.0 || !n0.is_finite() {
        return Err(EigenError::ZeroStartVector);
    }
    let mut w = v0.map(|x| x / n0);
    let mut prev = f64::NAN;
    let mut settled = 0;
    for it in 1..=max_iter {
        let v = apply(&w);
        let lambda = dot(&w, &v);
        let nv = norm(&v);
        if nv == 0.0 || !nv.is_finite() {
            return Err(EigenError::NoConvergence(it));
        }
        let residual = norm(&[v[0] - lambda * w[0], v[1] - lambda * w[1], v[2] - lambda * w[2]]);
        w = v.map(|x| x / nv);
        if (lambda - prev).abs() <= tol * lambda.abs().max(f64::MIN_POSITIVE) {
            settled += 1;
            // the quotient can settle long before the vector does
            if settled >= 2 && residual <= 100.0 * tol * lambda.abs() {
                return Ok((lambda, w, it));
            }
        } else {
            settled = 0;
        }
        prev = lambda;
    }
    Err(EigenError::NoConvergence(max_iter))
}

fn residual_real(a: &Mat3, lambda: f64, v: &[f64; 3]) -> f64 {
    let av = mat_vec(a, v);
    let r = [av[0] - lambda * v[0], av[1] - lambda * v[1], av[2] - lambda * v[2]];
    norm(&r) / norm(v)
}

/// Dominant (largest modulus) eigenvalue and its normalized eigenvector.
pub fn power_dominant(a: &Mat3, v0: &[f64; 3], tol: f64, max_iter: usize) -> Result<(f64, [f64; 3]), EigenError> {
    power_dominant_counted(a, v0, tol, max_iter).map(|(l, v, _)| (l, v))
}

fn power_dominant_counted(
    a: &Mat3,
    v0: &[f64; 3],
    tol: f64,
    max_iter: usize,
) -> Result<(f64, [f64; 3], usize), EigenError> {
    let (lambda, w, it) = power_iterate(|v| mat_vec(a, v), v0, tol, max_iter)?;
    if residual_real(a, lambda, &w) > RESIDUAL_TOL * frobenius(a) {
        return Err(EigenError::NoConvergence(it));
    }
    Ok((lambda, w, it))
}

pub const DEFAULT_START: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];

/// Smallest-modulus eigenvalue via power iteration on `A^-1`, applied through
/// the QR factors.
pub fn smallest_by_inverse(a: &Mat3, tol: f64, max_iter: usize) -> Result<f64, EigenError> {
    smallest_by_inverse_counted(a, &qr_decompose(&to_rows(a)), tol, max_iter).map(|(l, _, _)| l)
}

fn smallest_by_inverse_counted(
    a: &Mat3,
    qr: &QrDecomposition,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, [f64; 3], usize), EigenError> {
    let scale = frobenius(a);
    if qr.determinant().abs() <= 1e-14 * scale.powi(3) || scale == 0.0 {
        return Err(EigenError::SingularMatrix);
    }
    let apply = |v: &[f64; 3]| {
        let x = qr.solve(v);
        [x[0], x[1], x[2]]
    };
    let (mu, w, it) = power_iterate(apply, &DEFAULT_START, tol, max_iter)?;
    let lambda = 1.0 / mu;
    if residual_real(a, lambda, &w) > RESIDUAL_TOL * scale {
        return Err(EigenError::NoConvergence(it));
    }
    Ok((lambda, w, it))
}

/// Third eigenvalue from `det(A) = l_max * l_mid * l_min`, with `det(A)`
/// taken from the QR factors.
pub fn third_by_determinant(a: &Mat3, lambda_max: f64, lambda_min: f64) -> Result<f64, EigenError> {
    third_from_qr(a, &qr_decompose(&to_rows(a)), lambda_max, lambda_min)
}

fn third_from_qr(a: &Mat3, qr: &QrDecomposition, lambda_max: f64, lambda_min: f64) -> Result<f64, EigenError> {
    let denom = lambda_max * lambda_min;
    if denom == 0.0 || !denom.is_finite() {
        return Err(EigenError::InaccurateInputs(f64::INFINITY));
    }
    let mid = qr.determinant() / denom;
    let scale = frobenius(a).max(f64::MIN_POSITIVE);
    // the product is exact by construction; check the other two invariants
    let tr_res = (lambda_max + mid + lambda_min - trace(a)).abs() / scale;
    let m2 = lambda_max * mid + lambda_max * lambda_min + mid * lambda_min;
    let m2_res = (m2 - principal_minor_sum(a)).abs() / (scale * scale);
    let res = tr_res.max(m2_res);
    if res > RESIDUAL_TOL {
        return Err(EigenError::InaccurateInputs(res));
    }
    Ok(mid)
}

type C = Complex64;

fn cnorm(v: &[C; 3]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn cross(a: &[C; 3], b: &[C; 3]) -> [C; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Residual `min_v ||(A - lambda I) v|| / ||v||` over a small family of
/// candidate null vectors built from cross products of rows.
pub fn eigen_residual(a: &Mat3, lambda: C) -> f64 {
    let m: [[C; 3]; 3] = std::array::from_fn(|i| {
        std::array::from_fn(|j| C::new(a[i][j], 0.0) - if i == j { lambda } else { C::new(0.0, 0.0) })
    });
    let apply = |v: &[C; 3]| -> [C; 3] {
        std::array::from_fn(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
    };
    let mut candidates: Vec<[C; 3]> = vec![cross(&m[0], &m[1]), cross(&m[0], &m[2]), cross(&m[1], &m[2])];
    for row in &m {
        for k in 0..3 {
            let mut e = [C::new(0.0, 0.0); 3];
            e[k] = C::new(1.0, 0.0);
            candidates.push(cross(row, &e));
        }
    }
    let mut best = f64::INFINITY;
    for v in candidates {
        let nv = cnorm(&v);
        if nv == 0.0 || !nv.is_finite() {
            continue;
        }
        let r = cnorm(&apply(&v)) / nv;
        best = best.min(r);
    }
    if best.is_finite() {
        best
    } else {
        // A - lambda I vanishes identically
        0.0
    }
}

/// Roots of `t^3 + a t^2 + b t + c`.
fn cubic_roots(a: f64, b: f64, c: f64) -> [C; 3] {
    // one real root by closed form on the depressed cubic t = y - a/3
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    let mut r = if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-q / 2.0 + s).cbrt();
        let v = (-q / 2.0 - s).cbrt();
        u + v + shift
    } else if p == 0.0 {
        shift
    } else {
        // three real roots; take the one of largest modulus for stable deflation
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .fold(0.0_f64, |acc, y| if y.abs() > acc.abs() { y } else { acc })
    };
    r = newton_polish(a, b, c, r);
    // deflate: t^3 + a t^2 + b t + c = (t - r)(t^2 + e t + f)
    let e = a + r;
    let f = if r != 0.0 { -c / r } else { b + r * e };
    let (z1, z2) = quadratic_roots(e, f);
    let polish = |z: C| if z.im == 0.0 { C::new(newton_polish(a, b, c, z.re), 0.0) } else { z };
    [C::new(r, 0.0), polish(z1), polish(z2)]
}

fn newton_polish(a: f64, b: f64, c: f64, mut t: f64) -> f64 {
    let p = |t: f64| ((t + a) * t + b) * t + c;
    for _ in 0..8 {
        let f = p(t);
        let df = (3.0 * t + 2.0 * a) * t + b;
        if df == 0.0 || !df.is_finite() {
            break;
        }
        let next = t - f / df;
        if !next.is_finite() || p(next).abs() >= f.abs() {
            break;
        }
        t = next;
    }
    t
}

/// Roots of `t^2 + e t + f`.
fn quadratic_roots(e: f64, f: f64) -> (C, C) {
    let disc = e * e - 4.0 * f;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let q = -0.5 * (e + if e >= 0.0 { s } else { -s });
        if q == 0.0 {
            (C::new(0.0, 0.0), C::new(0.0, 0.0))
        } else {
            (C::new(q, 0.0), C::new(f / q, 0.0))
        }
    } else {
        let im = (-disc).sqrt() / 2.0;
        (C::new(-e / 2.0, im), C::new(-e / 2.0, -im))
    }
}

fn sort_desc(values: &mut [C; 3]) {
    values.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
}

/// Eigenvalues from the characteristic cubic.
pub fn eigen_fallback(a: &Mat3) -> EigenReport {
    let mut values = cubic_roots(-trace(a), principal_minor_sum(a), -det_cofactor(a));
    sort_desc(&mut values);
    EigenReport {
        residuals: values.map(|l| eigen_residual(a, l)),
        values,
        iterations: StageIterations::default(),
        method: EigenMethod::Fallback,
    }
}

/// The power-iteration triple, without fallback.
pub fn eigen_power_triple(a: &Mat3, tol: f64, max_iter: usize) -> Result<EigenReport, EigenError> {
    let (lmax, vmax, it_dom) = power_dominant_counted(a, &DEFAULT_START, tol, max_iter)?;
    let qr = qr_decompose(&to_rows(a));
    let (lmin, vmin, it_small) = smallest_by_inverse_counted(a, &qr, tol, max_iter)?;
    if (lmax.abs() - lmin.abs()).abs() <= 1e-9 * lmax.abs() && (lmax - lmin).abs() > 1e-9 * lmax.abs() {
        // opposite-sign modulus tie: the two stages found different eigenvalues
        // of equal modulus, the middle one is then not identifiable from det alone
        return Err(EigenError::NoConvergence(it_dom.max(it_small)));
    }
    let lmid = third_from_qr(a, &qr, lmax, lmin)?;
    let mut values = [C::new(lmax, 0.0), C::new(lmid, 0.0), C::new(lmin, 0.0)];
    let residuals_raw = [residual_real(a, lmax, &vmax), eigen_residual(a, values[1]), residual_real(a, lmin, &vmin)];
    let bound = RESIDUAL_TOL * frobenius(a);
    if residuals_raw.iter().any(|&r| r > bound) {
        return Err(EigenError::InaccurateInputs(residuals_raw.iter().copied().fold(0.0, f64::max)));
    }
    sort_desc(&mut values);
    Ok(EigenReport {
        residuals: values.map(|l| eigen_residual(a, l)),
        values,
        iterations: StageIterations { dominant: it_dom, smallest: it_small },
        method: EigenMethod::PowerTriple,
    })
}

/// True when the characteristic cubic has a complex-conjugate pair, which a
/// real power iteration cannot resolve.
fn has_complex_pair(a: &Mat3) -> bool {
    let roots = cubic_roots(-trace(a), principal_minor_sum(a), -det_cofactor(a));
    roots.iter().any(|z| z.im != 0.0)
}

/// Eigenvalues of a 3x3 real matrix. Always returns finite values.
pub fn eigen3(a: &Mat3) -> EigenReport {
    if a.iter().flatten().all(|&x| x == 0.0) {
        return eigen_fallback(a);
    }
    if !has_complex_pair(a) {
        if let Ok(report) = eigen_power_triple(a, DEFAULT_TOL, DEFAULT_MAX_ITER) {
            return report;
        }
    }
    eigen_fallback(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(a: f64, b: f64, c: f64) -> Mat3 {
        [[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]]
    }

    #[test]
    fn power_on_diagonal() {
        let (l, _) = power_dominant(&diag(3.0, 1.0, 0.5), &DEFAULT_START, 1e-12, 100_000).unwrap();
        assert!((l - 3.0).abs() < 1e-10);
    }

    #[test]
    fn power_fails_on_opposite_tie() {
        let r = power_dominant(&diag(2.0, -2.0, 1.0), &DEFAULT_START, 1e-12, 10_000);
        assert!(matches!(r, Err(EigenError::NoConvergence(_))));
    }

    #[test]
    fn power_rejects_zero_start() {
        assert_eq!(power_dominant(&diag(1.0, 2.0, 3.0), &[0.0; 3], 1e-12, 10), Err(EigenError::ZeroStartVector));
    }

    #[test]
    fn qr_identity() {
        let id = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let qr = qr_decompose(&id);
        for i in 0..3 {
            for j in 0..3 {
                assert!((qr.q[i][j].abs() - id[i][j]).abs() < 1e-15);
                assert!((qr.r[i][j].abs() - id[i][j]).abs() < 1e-15);
            }
        }
        assert!((qr.determinant() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qr_singular_shows_on_diagonal() {
        let a = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0], vec![1.0, 0.0, 1.0]];
        let qr = qr_decompose(&a);
        let scale = 1.0_f64.max(a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt());
        assert!((0..3).any(|i| qr.r[i][i].abs() <= 1e-12 * scale));
        let m: Mat3 = [[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [1.0, 0.0, 1.0]];
        assert_eq!(smallest_by_inverse(&m, 1e-12, 1000), Err(EigenError::SingularMatrix));
    }

    #[test]
    fn smallest_and_third_on_diagonal() {
        let a = diag(3.0, 1.0, 0.5);
        let lmin = smallest_by_inverse(&a, 1e-12, 100_000).unwrap();
        assert!((lmin - 0.5).abs() < 1e-10);
        let mid = third_by_determinant(&a, 3.0, 0.5).unwrap();
        assert!((mid - 1.0).abs() < 1e-12);
        assert!(matches!(third_by_determinant(&a, 3.0, 0.7), Err(EigenError::InaccurateInputs(_))));
    }

    #[test]
    fn cubic_handles_complex_and_repeated() {
        // rotation block plus a real eigenvalue
        let a: Mat3 = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 2.0]];
        let r = eigen3(&a);
        assert_eq!(r.method, EigenMethod::Fallback);
        assert!((r.values[0] - C::new(2.0, 0.0)).norm() < 1e-12);
        assert!((r.values[1] - C::new(0.0, 1.0)).norm() < 1e-12);
        assert!((r.values[2] - C::new(0.0, -1.0)).norm() < 1e-12);
        // Jordan block
        let j: Mat3 = [[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]];
        let r = eigen3(&j);
        for (v, res) in r.values.iter().zip(r.residuals) {
            assert!((v.re - 1.0).abs() < 1e-4);
            assert!(res <= 1e-6 * frobenius(&j));
        }
    }

    #[test]
    fn symmetric_matrix_real_sorted() {
        let a: Mat3 = [[2.0, 1.0, 0.5], [1.0, -1.0, 0.3], [0.5, 0.3, 0.7]];
        let r = eigen3(&a);
        assert!(r.is_real());
        let re = r.real_parts();
        assert!(re[0] >= re[1] && re[1] >= re[2]);
        assert!((re.iter().sum::<f64>() - trace(&a)).abs() < 1e-10);
    }

    #[test]
    fn zero_matrix() {
        let r = eigen3(&[[0.0; 3]; 3]);
        assert!(r.values.iter().all(|v| v.norm() == 0.0));
    }
}
