//! Fixed-step explicit integration (classical RK4 or forward Euler).
//!
//! Steps are laid out on the grid `t0 + k * dt`; the final step of an interval
//! is shortened so the interval ends exactly at `t1`. Callers that need to
//! respect discontinuities in the control integrate each smooth piece
//! separately.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{KnowledgeState, TeachingControl};
use crate::trace::{Sample, SimulationTrace, TraceMetadata};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
    Euler,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::Euler => "euler",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_RECORD_EVERY: usize = 10;

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_record_every() -> usize {
    DEFAULT_RECORD_EVERY
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            method: Method::Rk4,
            record_every: DEFAULT_RECORD_EVERY,
        }
    }
}

impl IntegratorConfig {
    pub fn new(dt: f64, method: Method, record_every: usize) -> Result<Self> {
        let cfg = Self {
            dt,
            method,
            record_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn rk4(dt: f64) -> Self {
        Self {
            dt,
            method: Method::Rk4,
            record_every: 1,
        }
    }

    pub fn euler(dt: f64) -> Self {
        Self {
            dt,
            method: Method::Euler,
            record_every: 1,
        }
    }

    pub fn with_record_every(mut self, record_every: usize) -> Self {
        self.record_every = record_every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::param("integrator.dt", format!("must be > 0, got {}", self.dt)));
        }
        if self.record_every == 0 {
            return Err(Error::param("integrator.record_every", "must be >= 1"));
        }
        Ok(())
    }
}

/// Right-hand side of an ODE system, optionally reporting the control signal
/// that drives it so traces can record it.
pub trait Dynamics {
    fn rates(&self, t: f64, z: &[f64], out: &mut [f64]);

    fn control(&self, _t: f64) -> TeachingControl {
        TeachingControl::idle()
    }
}

impl<F> Dynamics for F
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn rates(&self, t: f64, z: &[f64], out: &mut [f64]) {
        self(t, z, out)
    }
}

/// Number of grid steps covering `[t0, t1]`.
pub(crate) fn step_count(t0: f64, t1: f64, dt: f64) -> usize {
    let span = (t1 - t0) / dt;
    (span - 1e-9).ceil().max(1.0) as usize
}

/// Single-use stepping engine. Keeps scratch buffers and the clamp counter.
#[derive(Debug, Clone)]
pub struct Integrator {
    cfg: IntegratorConfig,
    clamp_events: u64,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Integrator {
    pub fn new(cfg: IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            clamp_events: 0,
            k: Default::default(),
            tmp: Vec::new(),
        })
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    pub fn clamp_events(&self) -> u64 {
        self.clamp_events
    }

    fn eval<D: Dynamics + ?Sized>(dynamics: &D, t: f64, z: &[f64], out: &mut [f64]) -> Result<()> {
        dynamics.rates(t, z, out);
        if out.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite {
                t,
                state: z.to_vec(),
            });
        }
        Ok(())
    }

    /// Advances `z` in place by `h` starting at `t`.
    pub fn step_by<D: Dynamics + ?Sized>(&mut self, dynamics: &D, t: f64, h: f64, z: &mut [f64]) -> Result<()> {
        let n = z.len();
        for k in &mut self.k {
            k.resize(n, 0.0);
        }
        self.tmp.resize(n, 0.0);
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;

        match self.cfg.method {
            Method::Euler => {
                Self::eval(dynamics, t, z, k1)?;
                for (zi, ki) in z.iter_mut().zip(k1.iter()) {
                    *zi += h * ki;
                }
            }
            Method::Rk4 => {
                Self::eval(dynamics, t, z, k1)?;
                for i in 0..n {
                    tmp[i] = z[i] + 0.5 * h * k1[i];
                }
                Self::eval(dynamics, t + 0.5 * h, tmp, k2)?;
                for i in 0..n {
                    tmp[i] = z[i] + 0.5 * h * k2[i];
                }
                Self::eval(dynamics, t + 0.5 * h, tmp, k3)?;
                for i in 0..n {
                    tmp[i] = z[i] + h * k3[i];
                }
                Self::eval(dynamics, t + h, tmp, k4)?;
                for i in 0..n {
                    z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }

        let mut clamped = false;
        for zi in z.iter_mut() {
            if *zi < 0.0 {
                *zi = 0.0;
                clamped = true;
            }
        }
        if clamped {
            self.clamp_events += 1;
        }
        Ok(())
    }

    /// Integrates `z` from `t0` to `t1`. `record` is called after every
    /// `record_every`-th step and always after the final one, with the time
    /// reached and the state.
    pub fn advance<D, R>(&mut self, dynamics: &D, t0: f64, t1: f64, z: &mut [f64], mut record: R) -> Result<()>
    where
        D: Dynamics + ?Sized,
        R: FnMut(f64, &[f64]),
    {
        if t1.partial_cmp(&t0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Domain(format!("integration interval [{t0}, {t1}] is empty")));
        }
        let dt = self.cfg.dt;
        let steps = step_count(t0, t1, dt);
        let every = self.cfg.record_every;
        let mut t = t0;
        for k in 0..steps {
            let next = if k + 1 == steps { t1 } else { t0 + (k + 1) as f64 * dt };
            self.step_by(dynamics, t, next - t, z)?;
            t = next;
            if k + 1 == steps || (k + 1) % every == 0 {
                record(t, z);
            }
        }
        Ok(())
    }
}

/// One step of size `cfg.dt` from `t`.
pub fn step<D: Dynamics + ?Sized>(
    state: &KnowledgeState,
    dynamics: &D,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<KnowledgeState> {
    let mut integrator = Integrator::new(*cfg)?;
    let mut z = state.as_slice().to_vec();
    integrator.step_by(dynamics, t, cfg.dt, &mut z)?;
    Ok(KnowledgeState::from_raw(z))
}

/// Integrates over `[t0, t1]` and returns the recorded trace, including the
/// initial and final samples.
pub fn integrate<D: Dynamics + ?Sized>(
    state0: &KnowledgeState,
    dynamics: &D,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<SimulationTrace> {
    let mut integrator = Integrator::new(*cfg)?;
    let mut z = state0.as_slice().to_vec();
    let mut samples = vec![Sample::new(t0, dynamics.control(t0), &z)];
    integrator.advance(dynamics, t0, t1, &mut z, |t, z| {
        samples.push(Sample::new(t, dynamics.control(t), z));
    })?;
    Ok(SimulationTrace {
        metadata: TraceMetadata {
            scenario: "integrate".into(),
            model: "custom".into(),
            components: state0.len(),
            strength: crate::model::StrengthKind::Pr,
            unit: String::new(),
            params: None,
            dt: cfg.dt,
            method: cfg.method.name().into(),
            seed: None,
            rng: None,
            clamp_events: integrator.clamp_events(),
        },
        samples,
        events: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn decay(_t: f64, z: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(z) {
            *o = -v;
        }
    }

    fn one() -> KnowledgeState {
        KnowledgeState::new(vec![1.0]).unwrap()
    }

    #[test]
    fn zero_dynamics_is_identity() {
        let s = KnowledgeState::new(vec![1.0, 2.5, 0.0]).unwrap();
        let zero = |_t: f64, _z: &[f64], out: &mut [f64]| out.fill(0.0);
        let next = step(&s, &zero, 0.0, &IntegratorConfig::rk4(0.1)).unwrap();
        assert_eq!(next, s);
    }

    #[test]
    fn rk4_decay_single_step() {
        let exact = (-0.1f64).exp();
        let rk4 = step(&one(), &decay, 0.0, &IntegratorConfig::rk4(0.1)).unwrap().as_slice()[0];
        let euler = step(&one(), &decay, 0.0, &IntegratorConfig::euler(0.1)).unwrap().as_slice()[0];
        assert_abs_diff_eq!(rk4, 0.904837, epsilon = 1e-6);
        assert_eq!(euler, 0.9);
        assert!((rk4 - exact).abs() < (euler - exact).abs());
    }

    #[test]
    fn integrate_decay_to_five() {
        let trace = integrate(&one(), &decay, 0.0, 5.0, &IntegratorConfig::rk4(0.01)).unwrap();
        let last = trace.last().unwrap();
        assert_eq!(last.t, 5.0);
        assert_abs_diff_eq!(last.z[0], (-5.0f64).exp(), epsilon = 1e-8);
        assert_eq!(trace.samples[0].t, 0.0);
        assert!(trace.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn empty_interval_rejected() {
        assert!(integrate(&one(), &decay, 1.0, 1.0, &IntegratorConfig::rk4(0.01)).is_err());
    }

    #[test]
    fn partial_last_step_lands_on_endpoint() {
        let cfg = IntegratorConfig::rk4(0.3).with_record_every(1);
        let trace = integrate(&one(), &decay, 0.0, 1.0, &cfg).unwrap();
        let times: Vec<f64> = trace.times().collect();
        assert_eq!(times.len(), 5);
        assert_eq!(*times.last().unwrap(), 1.0);
        assert_abs_diff_eq!(trace.last().unwrap().z[0], (-1.0f64).exp(), epsilon = 1e-4);
    }

    #[test]
    fn record_every_thins_samples() {
        let cfg = IntegratorConfig::rk4(0.01).with_record_every(10);
        let trace = integrate(&one(), &decay, 0.0, 1.0, &cfg).unwrap();
        assert_eq!(trace.samples.len(), 11);
    }

    #[test]
    fn non_finite_rate_aborts() {
        let blow_up = |_t: f64, _z: &[f64], out: &mut [f64]| out.fill(f64::NAN);
        let err = integrate(&one(), &blow_up, 0.0, 1.0, &IntegratorConfig::rk4(0.1)).unwrap_err();
        assert!(matches!(err, Error::NonFinite { t, .. } if t == 0.0));
    }

    #[test]
    fn negative_undershoot_is_clamped_and_counted() {
        let steep = |_t: f64, z: &[f64], out: &mut [f64]| out[0] = -50.0 * z[0];
        let trace = integrate(&one(), &steep, 0.0, 1.0, &IntegratorConfig::euler(0.1)).unwrap();
        assert!(trace.metadata.clamp_events > 0);
        assert!(trace.samples.iter().all(|s| s.z[0] >= 0.0));
    }

    #[test]
    fn invalid_config() {
        assert!(IntegratorConfig::new(0.0, Method::Rk4, 1).is_err());
        assert!(IntegratorConfig::new(0.1, Method::Rk4, 0).is_err());
    }

    #[test]
    fn step_halving_orders() {
        // dz/dt = -z + sin t, a smooth non-autonomous test problem
        let f = |t: f64, z: &[f64], out: &mut [f64]| out[0] = -z[0] + t.sin();
        let run = |cfg: IntegratorConfig| integrate(&one(), &f, 0.0, 2.0, &cfg).unwrap().last().unwrap().z[0];
        let ratio = |make: fn(f64) -> IntegratorConfig, dt: f64| {
            let a = run(make(dt));
            let b = run(make(dt / 2.0));
            let c = run(make(dt / 4.0));
            (a - b).abs() / (b - c).abs()
        };
        let r4 = ratio(IntegratorConfig::rk4, 0.1);
        let r1 = ratio(IntegratorConfig::euler, 0.01);
        assert!((8.0..=32.0).contains(&r4), "rk4 ratio {r4}");
        assert!((1.0..=4.0).contains(&r1), "euler ratio {r1}");
    }
}
