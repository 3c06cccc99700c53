//! Parameter-plane experiments over `(f0 Q, f1 Qp)`.
//!
//! Every grid node is simulated from the same initial state and compared
//! with the analytic prediction. Cells are independent and are evaluated in
//! parallel on the current rayon pool; results come back in grid order.

use rayon::prelude::*;
use thiserror::Error;

use crate::eigensolver::{eigen3, EigenReport};
use crate::equilibria::{
    candidate_attractors, classify_analytic, existing_fixed_points, fixed_point, Equilibrium, EquilibriumKind, Surface,
};
use crate::integrator::{integrate, IntegratorConfig, IntegratorError};
use crate::model::{jacobian, ModelParams, SimplexState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("invalid sweep specification: {0}")]
    InvalidSpec(String),
    #[error("section value {value} outside the range [{min}, {max}] of {axis}")]
    OutOfRange { axis: &'static str, value: f64, min: f64, max: f64 },
}

/// Inclusive grid `min + k * step <= max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridRange {
    pub fn new(min: f64, max: f64, step: f64) -> Self {
        Self { min, max, step }
    }

    pub fn len(&self) -> usize {
        // slack absorbs rounding in (max - min) / step
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.min + k as f64 * self.step).collect()
    }

    fn scaled(&self, factor: f64) -> Self {
        Self { min: self.min * factor, max: self.max * factor, step: self.step * factor }
    }

    fn validate(&self, name: &str) -> Result<(), SweepError> {
        let ok = self.min.is_finite()
            && self.max.is_finite()
            && self.step.is_finite()
            && self.min > 0.0
            && self.step > 0.0
            && self.max >= self.min;
        if ok {
            Ok(())
        } else {
            Err(SweepError::InvalidSpec(format!(
                "{name} range must satisfy 0 < min <= max and step > 0, got ({}, {}, {})",
                self.min, self.max, self.step
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub q: f64,
    pub qp: f64,
    pub f2: f64,
    /// Range of `f0` (not of the product `f0 Q`).
    pub f0_range: GridRange,
    /// Range of `f1`.
    pub f1_range: GridRange,
    pub classify_tol: f64,
    pub transient_tol: f64,
    pub integrator: IntegratorConfig,
    pub initial_state: SimplexState,
}

impl SweepSpec {
    /// `Q = 0.7`, `Qp = 0.3`, `f2 = 0.42`, with `f0` from `step` to `1/Q` and
    /// `f1` from `step` to `1/Qp`.
    pub fn standard(step: f64) -> Self {
        let (q, qp) = (0.7, 0.3);
        Self {
            q,
            qp,
            f2: 0.42,
            f0_range: GridRange::new(step, 1.0 / q, step),
            f1_range: GridRange::new(step, 1.0 / qp, step),
            classify_tol: 1e-10,
            transient_tol: 1e-2,
            integrator: IntegratorConfig::default(),
            initial_state: SimplexState::vertex(0),
        }
    }

    /// Replaces the ranges with ones given in product coordinates
    /// `(f0 Q, f1 Qp)`.
    pub fn with_product_ranges(mut self, f0q: GridRange, f1qp: GridRange) -> Self {
        self.f0_range = f0q.scaled(1.0 / self.q);
        self.f1_range = f1qp.scaled(1.0 / self.qp);
        self
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        ModelParams::new(1.0, 1.0, self.f2, self.q, self.qp).map_err(|e| SweepError::InvalidSpec(e.to_string()))?;
        self.f0_range.validate("f0")?;
        self.f1_range.validate("f1")?;
        for (name, v) in [("classify_tol", self.classify_tol), ("transient_tol", self.transient_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(SweepError::InvalidSpec(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        self.integrator.validate().map_err(|e| SweepError::InvalidSpec(e.to_string()))?;
        self.initial_state.check(crate::model::SIMPLEX_TOL).map_err(|e| SweepError::InvalidSpec(e.to_string()))?;
        Ok(())
    }

    pub fn params(&self, f0: f64, f1: f64) -> Result<ModelParams, crate::model::ModelError> {
        ModelParams::new(f0, f1, self.f2, self.q, self.qp)
    }

    /// Whether `(f0, f1)` lies within `steps` grid steps of any of the given
    /// surfaces, measured along the axis that crosses it.
    pub fn near_surface(&self, f0: f64, f1: f64, steps: f64, surfaces: &[Surface]) -> bool {
        let dq0 = self.f0_range.step * self.q;
        let dq1 = self.f1_range.step * self.qp;
        let (f0q, f1qp) = (f0 * self.q, f1 * self.qp);
        surfaces.iter().any(|s| match s {
            Surface::EqualFitness => (f1 - self.f2).abs() <= steps * self.f1_range.step,
            Surface::StableVsMutator => (f0q - f1qp).abs() <= steps * dq0.max(dq1),
            Surface::StableVsUnstable => (f0q - self.f2).abs() <= steps * dq0,
            Surface::MutatorVsUnstable => (f1qp - self.f2).abs() <= steps * dq1,
        })
    }
}

/// Simulated outcome of a cell, using the colour code of the phase diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// Unstable dominance `(0, 0, 1)`.
    Red,
    /// Mutator coexistence.
    Blue,
    /// Full coexistence.
    Green,
    Unresolved,
}

impl Outcome {
    pub fn from_kind(kind: EquilibriumKind) -> Self {
        match kind {
            EquilibriumKind::UnstableDominance => Outcome::Red,
            EquilibriumKind::MutatorCoexistence => Outcome::Blue,
            EquilibriumKind::FullCoexistence => Outcome::Green,
        }
    }

    pub fn kind(&self) -> Option<EquilibriumKind> {
        match self {
            Outcome::Red => Some(EquilibriumKind::UnstableDominance),
            Outcome::Blue => Some(EquilibriumKind::MutatorCoexistence),
            Outcome::Green => Some(EquilibriumKind::FullCoexistence),
            Outcome::Unresolved => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Red => "Red",
            Outcome::Blue => "Blue",
            Outcome::Green => "Green",
            Outcome::Unresolved => "Unresolved",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "Red" => Some(Outcome::Red),
            "Blue" => Some(Outcome::Blue),
            "Green" => Some(Outcome::Green),
            "Unresolved" => Some(Outcome::Unresolved),
            _ => None,
        }
    }

    pub fn is_resolved(&self) -> bool {
        *self != Outcome::Unresolved
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepKind {
    Classify,
    Densities,
    Transients,
}

impl SweepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepKind::Classify => "classify",
            SweepKind::Densities => "densities",
            SweepKind::Transients => "transients",
        }
    }
}

impl std::str::FromStr for SweepKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classify" => Ok(SweepKind::Classify),
            "densities" => Ok(SweepKind::Densities),
            "transients" => Ok(SweepKind::Transients),
            other => Err(format!("unknown sweep kind '{other}' (expected classify, densities or transients)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub f0: f64,
    pub f1: f64,
    pub f0q: f64,
    pub f1qp: f64,
    pub outcome: Outcome,
    /// State at arrival for classification runs; for transient runs the
    /// coordinates of the equilibrium that was reached.
    pub densities: Option<SimplexState>,
    /// Arrival time, absent when unresolved.
    pub time: Option<f64>,
    /// `None` when the parameters sit on a degenerate surface.
    pub analytic: Option<EquilibriumKind>,
    pub agreement: bool,
    pub max_drift: f64,
    pub steps: usize,
    pub error: Option<String>,
}

impl SweepCell {
    fn blank(spec: &SweepSpec, f0: f64, f1: f64) -> Self {
        Self {
            f0,
            f1,
            f0q: f0 * spec.q,
            f1qp: f1 * spec.qp,
            outcome: Outcome::Unresolved,
            densities: None,
            time: None,
            analytic: None,
            agreement: false,
            max_drift: 0.0,
            steps: 0,
            error: None,
        }
    }

    pub fn log10_time(&self) -> Option<f64> {
        self.time.map(f64::log10)
    }
}

/// Nearest fixed point within `tol`; exact distance ties go to `prefer`.
fn match_fixed_point<'a>(
    state: &SimplexState,
    points: &'a [Equilibrium],
    tol: f64,
    prefer: Option<EquilibriumKind>,
) -> Option<&'a Equilibrium> {
    let mut best: Option<(&Equilibrium, f64)> = None;
    for e in points {
        let d = state.distance(&e.coords);
        if d >= tol {
            continue;
        }
        best = match best {
            None => Some((e, d)),
            Some((b, bd)) if d < bd || (d == bd && Some(e.kind) == prefer && Some(b.kind) != prefer) => Some((e, d)),
            keep => keep,
        };
    }
    best.map(|(e, _)| e)
}

fn run_to_targets(
    spec: &SweepSpec,
    p: &ModelParams,
    targets: &[Equilibrium],
    tol: f64,
    prefer: Option<EquilibriumKind>,
    cell: &mut SweepCell,
) -> Result<Option<EquilibriumKind>, IntegratorError> {
    let event = |s: &SimplexState| match_fixed_point(s, targets, tol, prefer).is_some();
    let orbit = integrate(p, &spec.initial_state, &spec.integrator, Some(event))?;
    cell.max_drift = orbit.max_drift;
    cell.steps = orbit.steps_taken;
    if !orbit.event_fired {
        return Ok(None);
    }
    cell.time = Some(orbit.final_time);
    let hit = match_fixed_point(&orbit.final_state, targets, tol, prefer).map(|e| e.kind);
    cell.densities = Some(orbit.final_state);
    Ok(hit)
}

fn finish(cell: &mut SweepCell, hit: Result<Option<EquilibriumKind>, IntegratorError>) {
    match hit {
        Ok(Some(kind)) => cell.outcome = Outcome::from_kind(kind),
        Ok(None) => {
            cell.outcome = Outcome::Unresolved;
            cell.time = None;
        }
        Err(e) => {
            cell.outcome = Outcome::Unresolved;
            cell.time = None;
            cell.error = Some(e.to_string());
        }
    }
    cell.agreement = cell.analytic.is_some() && cell.outcome.kind() == cell.analytic;
}

/// Integrates one grid node until it comes within `classify_tol` of any
/// existing fixed point, or gives up at `t_max`.
pub fn classify_cell(spec: &SweepSpec, f0: f64, f1: f64) -> SweepCell {
    let mut cell = SweepCell::blank(spec, f0, f1);
    let p = match spec.params(f0, f1) {
        Ok(p) => p,
        Err(e) => {
            cell.error = Some(e.to_string());
            return cell;
        }
    };
    cell.analytic = classify_analytic(&p).ok().map(|e| e.kind);
    let points = existing_fixed_points(&p);
    let hit = run_to_targets(spec, &p, &points, spec.classify_tol, cell.analytic, &mut cell);
    finish(&mut cell, hit);
    cell
}

/// Time to come within `transient_tol` of the predicted attractor.
pub fn transient_cell(spec: &SweepSpec, f0: f64, f1: f64) -> SweepCell {
    let mut cell = SweepCell::blank(spec, f0, f1);
    let p = match spec.params(f0, f1) {
        Ok(p) => p,
        Err(e) => {
            cell.error = Some(e.to_string());
            return cell;
        }
    };
    cell.analytic = classify_analytic(&p).ok().map(|e| e.kind);
    let targets = candidate_attractors(&p);
    if targets.is_empty() {
        cell.error = Some("no candidate attractor".to_string());
        return cell;
    }
    let hit = run_to_targets(spec, &p, &targets, spec.transient_tol, cell.analytic, &mut cell);
    if let Ok(Some(kind)) = &hit {
        cell.densities = targets.iter().find(|e| e.kind == *kind).map(|e| e.coords);
    }
    finish(&mut cell, hit);
    cell
}

fn run_cell(spec: &SweepSpec, kind: SweepKind, f0: f64, f1: f64) -> SweepCell {
    match kind {
        SweepKind::Classify | SweepKind::Densities => classify_cell(spec, f0, f1),
        SweepKind::Transients => transient_cell(spec, f0, f1),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub spec: SweepSpec,
    pub kind: SweepKind,
    pub f0_nodes: Vec<f64>,
    pub f1_nodes: Vec<f64>,
    /// Row-major with `f0` as the outer index.
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn cell(&self, i0: usize, i1: usize) -> &SweepCell {
        &self.cells[i0 * self.f1_nodes.len() + i1]
    }

    pub fn count(&self, outcome: Outcome) -> usize {
        self.cells.iter().filter(|c| c.outcome == outcome).count()
    }

    /// Fraction of agreeing cells among those farther than `steps` grid steps
    /// from every listed surface, with the number of such cells.
    pub fn agreement_off_surfaces(&self, steps: f64, surfaces: &[Surface]) -> (f64, usize) {
        let off: Vec<&SweepCell> =
            self.cells.iter().filter(|c| !self.spec.near_surface(c.f0, c.f1, steps, surfaces)).collect();
        if off.is_empty() {
            return (1.0, 0);
        }
        let agree = off.iter().filter(|c| c.agreement).count();
        (agree as f64 / off.len() as f64, off.len())
    }

    /// Indices along `f0` (at fixed `f1` index) where `x0` decreases or `x2`
    /// increases between consecutive resolved cells.
    pub fn density_monotonicity_violations(&self, i1: usize, tol: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let mut prev: Option<SimplexState> = None;
        for i0 in 0..self.f0_nodes.len() {
            let c = self.cell(i0, i1);
            let Some(d) = c.densities.filter(|_| c.outcome.is_resolved()) else { continue };
            if let Some(p) = prev {
                if d.x0 < p.x0 - tol || d.x2 > p.x2 + tol {
                    out.push(i0);
                }
            }
            prev = Some(d);
        }
        out
    }
}

fn sweep(spec: &SweepSpec, kind: SweepKind) -> Result<SweepGrid, SweepError> {
    spec.validate()?;
    let f0_nodes = spec.f0_range.nodes();
    let f1_nodes = spec.f1_range.nodes();
    let n1 = f1_nodes.len();
    let cells = (0..f0_nodes.len() * n1)
        .into_par_iter()
        .map(|idx| run_cell(spec, kind, f0_nodes[idx / n1], f1_nodes[idx % n1]))
        .collect();
    Ok(SweepGrid { spec: spec.clone(), kind, f0_nodes, f1_nodes, cells })
}

/// Which fixed point each grid node reaches.
pub fn sweep_classification(spec: &SweepSpec) -> Result<SweepGrid, SweepError> {
    sweep(spec, SweepKind::Classify)
}

/// Arrival densities per grid node.
pub fn sweep_densities(spec: &SweepSpec) -> Result<SweepGrid, SweepError> {
    sweep(spec, SweepKind::Densities)
}

/// Time to reach `transient_tol` of the predicted attractor per grid node.
pub fn sweep_transients(spec: &SweepSpec) -> Result<SweepGrid, SweepError> {
    sweep(spec, SweepKind::Transients)
}

/// Runs any sweep kind.
pub fn sweep_kind(spec: &SweepSpec, kind: SweepKind) -> Result<SweepGrid, SweepError> {
    sweep(spec, kind)
}

/// The product held fixed along a section.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    F0Q,
    F1Qp,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::F0Q => "f0Q",
            Axis::F1Qp => "f1Qp",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f0Q" | "f0q" => Ok(Axis::F0Q),
            "f1Qp" | "f1qp" => Ok(Axis::F1Qp),
            other => Err(format!("unknown axis '{other}' (expected f0Q or f1Qp)")),
        }
    }
}

/// Which equilibrium branch to follow for eigenvalue curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchChoice {
    None,
    /// The attractor predicted at the first non-degenerate node.
    Auto,
    Fixed(EquilibriumKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionRow {
    pub cell: SweepCell,
    /// Eigenvalues of the tracked branch; absent when the branch is undefined
    /// at this node or no branch is tracked.
    pub eigen: Option<EigenReport>,
}

impl SectionRow {
    /// The varying product coordinate.
    pub fn abscissa(&self, axis: Axis) -> f64 {
        match axis {
            Axis::F0Q => self.cell.f1qp,
            Axis::F1Qp => self.cell.f0q,
        }
    }

    /// `(log10(t) - 2) / 2`, the rescaled time used to overlay transients on
    /// density curves.
    pub fn rescaled_time(&self) -> Option<f64> {
        self.cell.log10_time().map(|l| (l - 2.0) / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub axis: Axis,
    pub fixed_value: f64,
    pub kind: SweepKind,
    pub branch: Option<EquilibriumKind>,
    pub rows: Vec<SectionRow>,
    /// Abscissas where the simulated outcome changes between consecutive
    /// resolved nodes.
    pub bifurcations: Vec<f64>,
}

impl Section {
    /// Index of the row with the largest transient time; unresolved rows
    /// count as infinitely slow.
    pub fn slowest_row(&self) -> Option<usize> {
        let t = |r: &SectionRow| r.cell.time.unwrap_or(f64::INFINITY);
        (0..self.rows.len()).max_by(|&a, &b| t(&self.rows[a]).total_cmp(&t(&self.rows[b])))
    }

    /// For each eigenvalue column, the abscissas between consecutive rows
    /// where its real part changes sign.
    pub fn eigen_sign_changes(&self) -> [Vec<f64>; 3] {
        let mut out: [Vec<f64>; 3] = Default::default();
        for w in self.rows.windows(2) {
            let (Some(a), Some(b)) = (&w[0].eigen, &w[1].eigen) else { continue };
            for (j, col) in out.iter_mut().enumerate() {
                if a.values[j].re * b.values[j].re < 0.0 {
                    col.push(0.5 * (w[0].abscissa(self.axis) + w[1].abscissa(self.axis)));
                }
            }
        }
        out
    }
}

/// Outcome changes between consecutive resolved rows.
pub fn detect_bifurcations(rows: &[SectionRow], axis: Axis) -> Vec<f64> {
    let resolved: Vec<&SectionRow> = rows.iter().filter(|r| r.cell.outcome.is_resolved()).collect();
    resolved
        .windows(2)
        .filter(|w| w[0].cell.outcome != w[1].cell.outcome)
        .map(|w| 0.5 * (w[0].abscissa(axis) + w[1].abscissa(axis)))
        .collect()
}

/// Eigenvalues of the Jacobian at the given branch, if it is defined.
pub fn branch_eigen(p: &ModelParams, kind: EquilibriumKind) -> Option<EigenReport> {
    fixed_point(p, kind).ok().map(|e| eigen3(&jacobian(p, &e.coords)))
}

/// One-dimensional slice of the parameter plane with `axis` held at
/// `fixed_value` (a product coordinate); the other product varies over the
/// spec's range.
pub fn section(
    spec: &SweepSpec,
    kind: SweepKind,
    axis: Axis,
    fixed_value: f64,
    branch: BranchChoice,
) -> Result<Section, SweepError> {
    spec.validate()?;
    let (fixed_range, factor) = match axis {
        Axis::F0Q => (spec.f0_range, spec.q),
        Axis::F1Qp => (spec.f1_range, spec.qp),
    };
    let (lo, hi) = (fixed_range.min * factor, fixed_range.max * factor);
    let slack = 1e-9 * fixed_range.step * factor;
    if !(fixed_value >= lo - slack && fixed_value <= hi + slack) {
        return Err(SweepError::OutOfRange { axis: axis.as_str(), value: fixed_value, min: lo, max: hi });
    }
    let fixed_raw = fixed_value / factor;
    let points: Vec<(f64, f64)> = match axis {
        Axis::F0Q => spec.f1_range.nodes().into_iter().map(|f1| (fixed_raw, f1)).collect(),
        Axis::F1Qp => spec.f0_range.nodes().into_iter().map(|f0| (f0, fixed_raw)).collect(),
    };
    let tracked = match branch {
        BranchChoice::None => None,
        BranchChoice::Fixed(k) => Some(k),
        BranchChoice::Auto => points
            .iter()
            .find_map(|&(f0, f1)| spec.params(f0, f1).ok().and_then(|p| classify_analytic(&p).ok()))
            .map(|e| e.kind),
    };
    let rows: Vec<SectionRow> = points
        .par_iter()
        .map(|&(f0, f1)| {
            let cell = run_cell(spec, kind, f0, f1);
            let eigen = tracked.and_then(|k| spec.params(f0, f1).ok().and_then(|p| branch_eigen(&p, k)));
            SectionRow { cell, eigen }
        })
        .collect();
    let bifurcations = detect_bifurcations(&rows, axis);
    Ok(Section { axis, fixed_value, kind, branch: tracked, rows, bifurcations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SweepSpec {
        SweepSpec::standard(0.05)
    }

    #[test]
    fn grid_nodes_inclusive() {
        let r = GridRange::new(0.01, 1.0 / 0.7, 0.01);
        let n = r.nodes();
        assert_eq!(n.len(), 142);
        assert!(*n.last().unwrap() <= 1.0 / 0.7);
        assert_eq!(GridRange::new(0.5, 0.5, 0.1).nodes(), vec![0.5]);
        assert_eq!(GridRange::new(0.1, 0.3, 0.1).len(), 3);
    }

    #[test]
    fn spec_validation() {
        let mut s = spec();
        assert!(s.validate().is_ok());
        s.f0_range.min = 0.0;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.classify_tol = 1.5;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.q = 1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn red_cell() {
        let s = spec();
        let c = classify_cell(&s, 0.21 / 0.7, 0.21 / 0.3);
        assert_eq!(c.outcome, Outcome::Red);
        assert!(c.agreement);
        let d = c.densities.unwrap();
        assert!(d.distance(&SimplexState::vertex(2)) < s.classify_tol);
    }

    #[test]
    fn green_cell_densities() {
        let s = spec();
        let c = classify_cell(&s, 0.9, 0.7);
        assert_eq!(c.outcome, Outcome::Green);
        let d = c.densities.unwrap();
        assert!((d.x0 - 0.0882 / 0.2772).abs() < 1e-9);
        assert!((d.x1 - 0.0567 / 0.2772).abs() < 1e-9);
        assert!((d.x2 - 0.1323 / 0.2772).abs() < 1e-9);
    }

    #[test]
    fn blue_cell_densities() {
        let s = spec();
        let c = classify_cell(&s, 0.3, 2.1);
        assert_eq!(c.outcome, Outcome::Blue);
        let d = c.densities.unwrap();
        assert!(d.x0.abs() < 1e-9 && (d.x1 - 0.125).abs() < 1e-9 && (d.x2 - 0.875).abs() < 1e-9);
    }

    #[test]
    fn transcritical_cell_is_slow_or_unresolved() {
        let mut s = spec();
        s.integrator.t_max = 1e4;
        let c = classify_cell(&s, 0.9, 2.1);
        assert!(c.outcome == Outcome::Unresolved || c.time.unwrap() > 1e3);
        assert!(c.analytic.is_none());
        assert!(c.error.is_none());
    }

    #[test]
    fn single_node_grid_matches_cell() {
        let mut s = spec();
        s.f0_range = GridRange::new(0.3, 0.3, 0.05);
        s.f1_range = GridRange::new(0.7, 0.7, 0.05);
        let g = sweep_classification(&s).unwrap();
        assert_eq!(g.cells.len(), 1);
        assert_eq!(g.cells[0], classify_cell(&s, 0.3, 0.7));
    }

    #[test]
    fn transient_deep_red_is_quick() {
        let c = transient_cell(&spec(), 0.05 / 0.7, 0.05 / 0.3);
        assert_eq!(c.outcome, Outcome::Red);
        let t = c.time.unwrap();
        assert!(t > 0.0 && t < 100.0, "{t}");
        assert_eq!(c.densities, Some(SimplexState::vertex(2)));
    }

    #[test]
    fn equal_fitness_cells_still_classify() {
        let s = spec();
        let c = classify_cell(&s, 0.3, 0.42);
        assert_eq!(c.outcome, Outcome::Red);
        assert!(c.error.is_none());
        let t = transient_cell(&s, 0.3, 0.42);
        assert_eq!(t.outcome, Outcome::Red);
    }

    #[test]
    fn section_out_of_range() {
        let r = section(&spec(), SweepKind::Classify, Axis::F0Q, 5.0, BranchChoice::None);
        assert!(matches!(r, Err(SweepError::OutOfRange { .. })));
    }

    #[test]
    fn constant_stretch_has_no_bifurcation() {
        let s = spec().with_product_ranges(GridRange::new(0.05, 0.35, 0.05), GridRange::new(0.05, 0.35, 0.05));
        let sec = section(&s, SweepKind::Classify, Axis::F0Q, 0.2, BranchChoice::Auto).unwrap();
        assert!(sec.bifurcations.is_empty());
        assert!(sec.rows.iter().all(|r| r.cell.outcome == Outcome::Red));
        assert_eq!(sec.branch, Some(EquilibriumKind::UnstableDominance));
    }

    #[test]
    fn outcome_strings_round_trip() {
        for o in [Outcome::Red, Outcome::Blue, Outcome::Green, Outcome::Unresolved] {
            assert_eq!(Outcome::parse(o.as_str()), Some(o));
        }
        assert_eq!("transients".parse::<SweepKind>(), Ok(SweepKind::Transients));
        assert!("f0Q".parse::<Axis>().is_ok() && "x".parse::<Axis>().is_err());
    }
}
