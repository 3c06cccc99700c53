//! Adaptive time integration with event detection.
//!
//! Steps use the Dormand-Prince 5(4) embedded pair, advancing with the
//! fifth-order solution. The simplex sum `S = x0 + x1 + ...` is a first
//! integral of every field in this crate, so the drift `|S - 1|` is tracked
//! on every accepted step and treated as a hard error past `drift_tol`.
//! States are never renormalized while stepping.

use thiserror::Error;

use crate::model::{GeneralModel, ModelError, ModelParams, SimplexState, VectorField};

/// Smallest step size before the integration is declared stuck.
pub const MIN_STEP: f64 = 1e-14;
/// Time resolution of event localization.
pub const EVENT_TIME_RESOLUTION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegratorError {
    #[error("first integral violated: |S - 1| = {drift:e} at t = {t}")]
    DriftExceeded { drift: f64, t: f64 },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub t_max: f64,
    pub drift_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, h_init: 1e-3, h_max: 1.0, t_max: 1e5, drift_tol: 1e-10 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegratorError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(IntegratorError::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("abs_tol", self.abs_tol)?;
        positive("rel_tol", self.rel_tol)?;
        positive("h_init", self.h_init)?;
        positive("h_max", self.h_max)?;
        positive("t_max", self.t_max)?;
        positive("drift_tol", self.drift_tol)?;
        if self.h_init > self.h_max {
            return Err(IntegratorError::InvalidConfig(format!(
                "h_init ({}) exceeds h_max ({})",
                self.h_init, self.h_max
            )));
        }
        Ok(())
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitResult<S = SimplexState> {
    pub final_state: S,
    pub final_time: f64,
    pub event_fired: bool,
    pub steps_taken: usize,
    pub max_drift: f64,
}

// Dormand-Prince tableau; the fields are autonomous so the nodes c_i are not needed
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Explicit adaptive stepper over an autonomous [`VectorField`].
pub struct Stepper<'f, F: VectorField + ?Sized> {
    field: &'f F,
    cfg: IntegratorConfig,
    t: f64,
    y: Vec<f64>,
    h: f64,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    steps: usize,
    max_drift: f64,
    step_log: Option<Vec<f64>>,
}

impl<'f, F: VectorField + ?Sized> Stepper<'f, F> {
    pub fn new(field: &'f F, y0: &[f64], cfg: IntegratorConfig) -> Result<Self, IntegratorError> {
        cfg.validate()?;
        let n = field.dim();
        if y0.len() != n {
            return Err(ModelError::Dimension { expected: n, got: y0.len() }.into());
        }
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite.into());
        }
        let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
        field.eval(y0, &mut k[0]);
        let drift = (y0.iter().sum::<f64>() - 1.0).abs();
        Ok(Self {
            field,
            cfg,
            t: 0.0,
            y: y0.to_vec(),
            h: cfg.h_init,
            k,
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            steps: 0,
            max_drift: drift,
            step_log: None,
        })
    }

    /// Records the size of every accepted step.
    pub fn record_steps(&mut self) {
        self.step_log = Some(Vec::new());
    }

    pub fn step_log(&self) -> Option<&[f64]> {
        self.step_log.as_deref()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64] {
        &self.y
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    /// One trial step of size `h` from the current state into `y_new`;
    /// `k[0]` must hold `f(y)`. Returns the scaled error norm.
    fn trial(&mut self, h: f64) -> f64 {
        let n = self.y.len();
        let y = &self.y;
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;
        for i in 0..n {
            tmp[i] = y[i] + h * (A21 * k1[i]);
        }
        self.field.eval(tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        self.field.eval(tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        self.field.eval(tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        self.field.eval(tmp, k5);
        for i in 0..n {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        self.field.eval(tmp, k6);
        for i in 0..n {
            self.y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        self.field.eval(&self.y_new, k7);
        let mut err: f64 = 0.0;
        let mut ymax: f64 = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err = err.max(e.abs());
            ymax = ymax.max(y[i].abs()).max(self.y_new[i].abs());
        }
        err / self.cfg.abs_tol.max(self.cfg.rel_tol * ymax)
    }

    fn accept(&mut self, h: f64) -> Result<(), IntegratorError> {
        self.t += h;
        std::mem::swap(&mut self.y, &mut self.y_new);
        self.k.swap(0, 6);
        self.steps += 1;
        if let Some(log) = self.step_log.as_mut() {
            log.push(h);
        }
        let drift = (self.y.iter().sum::<f64>() - 1.0).abs();
        self.max_drift = self.max_drift.max(drift);
        if drift > self.cfg.drift_tol || !drift.is_finite() {
            return Err(IntegratorError::DriftExceeded { drift, t: self.t });
        }
        Ok(())
    }

    /// Advances to `t_end` (clamped to `t_max`), stopping early at the first
    /// accepted state where `event` holds. The event time is then refined by
    /// bisection on the last step to [`EVENT_TIME_RESOLUTION`]. Returns
    /// whether the event fired.
    pub fn advance<E>(&mut self, t_end: f64, mut event: Option<E>) -> Result<bool, IntegratorError>
    where
        E: FnMut(&[f64]) -> bool,
    {
        let t_end = t_end.min(self.cfg.t_max);
        if let Some(ev) = event.as_mut() {
            if ev(&self.y) {
                return Ok(true);
            }
        }
        while self.t < t_end {
            let remaining = t_end - self.t;
            let h_prop = self.h.min(self.cfg.h_max);
            let clamped = h_prop >= remaining;
            let h = if clamped { remaining } else { h_prop };
            let err = self.trial(h);
            if !err.is_finite() || err > 1.0 {
                let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.2 };
                self.h = h * fac;
                if self.h < MIN_STEP {
                    return Err(IntegratorError::StepUnderflow { t: self.t, h: self.h });
                }
                continue;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let next_h = (h * fac).min(self.cfg.h_max);
            if let Some(ev) = event.as_mut() {
                if ev(&self.y_new) {
                    let h_hit = self.bisect_event(h, ev);
                    if h_hit < h {
                        self.trial(h_hit);
                    }
                    self.accept(h_hit)?;
                    self.h = next_h;
                    return Ok(true);
                }
            }
            self.accept(h)?;
            // a step shortened only to land on t_end keeps the proposal
            self.h = if clamped { next_h.max(h_prop) } else { next_h };
        }
        Ok(false)
    }

    /// Smallest sub-step (to the time resolution) whose end state satisfies
    /// the event, given that the full step `h` does.
    fn bisect_event<E>(&mut self, h: f64, ev: &mut E) -> f64
    where
        E: FnMut(&[f64]) -> bool,
    {
        let saved = self.y_new.clone();
        let saved_k7 = self.k[6].clone();
        let (mut lo, mut hi) = (0.0, h);
        while hi - lo > EVENT_TIME_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            self.trial(mid);
            if ev(&self.y_new) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        self.y_new.copy_from_slice(&saved);
        self.k[6].copy_from_slice(&saved_k7);
        hi
    }

    fn into_result<S>(self, event_fired: bool, map: impl FnOnce(Vec<f64>) -> S) -> OrbitResult<S> {
        OrbitResult {
            final_time: self.t,
            event_fired,
            steps_taken: self.steps,
            max_drift: self.max_drift,
            final_state: map(self.y),
        }
    }
}

/// Integrates any field from `y0` until `event` holds or `t_max` is reached.
pub fn integrate_field<F, E>(
    field: &F,
    y0: &[f64],
    cfg: &IntegratorConfig,
    event: Option<E>,
) -> Result<OrbitResult<Vec<f64>>, IntegratorError>
where
    F: VectorField + ?Sized,
    E: FnMut(&[f64]) -> bool,
{
    let mut stepper = Stepper::new(field, y0, *cfg)?;
    let fired = stepper.advance(cfg.t_max, event)?;
    Ok(stepper.into_result(fired, |y| y))
}

/// Integrates the reduced model.
pub fn integrate<E>(
    p: &ModelParams,
    s0: &SimplexState,
    cfg: &IntegratorConfig,
    event: Option<E>,
) -> Result<OrbitResult, IntegratorError>
where
    E: FnMut(&SimplexState) -> bool,
{
    s0.check(crate::model::SIMPLEX_TOL)?;
    let mut stepper = Stepper::new(p, &s0.to_array(), *cfg)?;
    let fired = match event {
        Some(mut ev) => stepper.advance(cfg.t_max, Some(|y: &[f64]| ev(&SimplexState::from_raw(y[0], y[1], y[2]))))?,
        None => stepper.advance(cfg.t_max, None::<fn(&[f64]) -> bool>)?,
    };
    Ok(stepper.into_result(fired, |y| SimplexState::from_raw(y[0], y[1], y[2])))
}

/// Integrates the generalized model on the `(n+2)`-simplex.
pub fn integrate_general<E>(
    g: &GeneralModel,
    s0: &[f64],
    cfg: &IntegratorConfig,
    event: Option<E>,
) -> Result<OrbitResult<Vec<f64>>, IntegratorError>
where
    E: FnMut(&[f64]) -> bool,
{
    check_general_simplex(s0)?;
    integrate_field(g, s0, cfg, event)
}

fn check_general_simplex(s0: &[f64]) -> Result<(), ModelError> {
    if s0.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite);
    }
    let sum: f64 = s0.iter().sum();
    let min = s0.iter().copied().fold(f64::INFINITY, f64::min);
    if (sum - 1.0).abs() > crate::model::SIMPLEX_TOL || min < -crate::model::SIMPLEX_TOL {
        return Err(ModelError::OffSimplex { sum, min });
    }
    Ok(())
}

/// Samples an orbit at multiples of `interval` up to `t_end`, starting with
/// the initial state. Rows are `(t, state...)`.
pub fn trace<F>(
    field: &F,
    y0: &[f64],
    cfg: &IntegratorConfig,
    interval: f64,
    t_end: f64,
) -> Result<Vec<(f64, Vec<f64>)>, IntegratorError>
where
    F: VectorField + ?Sized,
{
    if !(interval.is_finite() && interval > 0.0) {
        return Err(IntegratorError::InvalidConfig(format!("sampling interval must be positive, got {interval}")));
    }
    let t_end = t_end.min(cfg.t_max);
    let mut stepper = Stepper::new(field, y0, *cfg)?;
    let mut rows = vec![(0.0, y0.to_vec())];
    let mut k = 1u64;
    loop {
        let target = (k as f64 * interval).min(t_end);
        stepper.advance(target, None::<fn(&[f64]) -> bool>)?;
        rows.push((stepper.time(), stepper.state().to_vec()));
        if target >= t_end {
            break;
        }
        k += 1;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SimplexState;

    struct Decay;
    impl VectorField for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, x: &[f64], dx: &mut [f64]) {
            dx[0] = -x[0];
        }
    }

    #[test]
    fn exponential_decay_accuracy() {
        let cfg = IntegratorConfig { drift_tol: 10.0, t_max: 5.0, ..Default::default() };
        let r = integrate_field(&Decay, &[1.0], &cfg, None::<fn(&[f64]) -> bool>).unwrap();
        assert!((r.final_time - 5.0).abs() < 1e-15);
        assert!((r.final_state[0] - (-5.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn event_bisection_brackets_crossing() {
        let cfg = IntegratorConfig { drift_tol: 10.0, t_max: 10.0, ..Default::default() };
        let r = integrate_field(&Decay, &[1.0], &cfg, Some(|x: &[f64]| x[0] < 0.5)).unwrap();
        assert!(r.event_fired);
        let t_exact = 2.0f64.ln();
        assert!(r.final_time >= t_exact - 1e-12);
        assert!(r.final_time - t_exact <= EVENT_TIME_RESOLUTION + 1e-12);
    }

    #[test]
    fn config_validation() {
        let bad = IntegratorConfig { h_init: 2.0, h_max: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = IntegratorConfig { abs_tol: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(IntegratorConfig::default().validate().is_ok());
    }

    #[test]
    fn rejects_off_simplex_start() {
        let p = ModelParams::new(1.0, 1.0, 0.5, 0.7, 0.3).unwrap();
        let s = SimplexState::from_raw(0.5, 0.6, 0.0);
        let r = integrate(&p, &s, &IntegratorConfig::default(), None::<fn(&SimplexState) -> bool>);
        assert!(matches!(r, Err(IntegratorError::Model(ModelError::OffSimplex { .. }))));
    }

    #[test]
    fn drift_is_a_hard_error() {
        struct Leak;
        impl VectorField for Leak {
            fn dim(&self) -> usize {
                2
            }
            fn eval(&self, _x: &[f64], dx: &mut [f64]) {
                dx[0] = 1e-3;
                dx[1] = 0.0;
            }
        }
        let cfg = IntegratorConfig { t_max: 1.0, ..Default::default() };
        let r = integrate_field(&Leak, &[0.5, 0.5], &cfg, None::<fn(&[f64]) -> bool>);
        assert!(matches!(r, Err(IntegratorError::DriftExceeded { .. })));
    }

    #[test]
    fn trace_samples_on_grid() {
        let p = ModelParams::new(0.9, 0.7, 0.42, 0.7, 0.3).unwrap();
        let cfg = IntegratorConfig::default();
        let rows = trace(&p, &[1.0, 0.0, 0.0], &cfg, 0.5, 3.0).unwrap();
        assert_eq!(rows.len(), 7);
        for (i, (t, _)) in rows.iter().enumerate() {
            assert!((t - 0.5 * i as f64).abs() < 1e-12);
        }
    }
}
