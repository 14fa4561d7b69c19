//! Multi-component learning models.
//!
//! Knowledge is split into `n` firmness categories `Z_1..Z_n`. Category 1 is
//! the weakest (fastest forgetting) and category `n` the firmest. While a
//! lesson is in progress new knowledge enters category 1 in proportion to the
//! deficit `U - Z` between the teacher's requirement level and the student's
//! total knowledge, and knowledge migrates category by category towards the
//! firm end. Every category decays exponentially with its own forgetting rate.
//!
//! Three right-hand sides are provided:
//!
//! * [`derivatives_two`]: two categories, no `Z^b` factor on acquisition;
//! * [`derivatives_four`]: four categories with the `Z^b` factor;
//! * [`derivatives_general`]: `n` categories with an additional complexity
//!   factor `(1 - S)` on every teaching-driven term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amount of knowledge held in each firmness category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct KnowledgeState(Vec<f64>);

impl KnowledgeState {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::param("state", "must have at least one component"));
        }
        if let Some((i, v)) = z.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::param(
                format!("state[{i}]"),
                format!("must be finite and non-negative, got {v}"),
            ));
        }
        Ok(Self(z))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        total_knowledge(&self.0)
    }

    /// Replaces the components without re-validating them. Only used by the
    /// integrator, which clamps negative values itself.
    pub(crate) fn from_raw(z: Vec<f64>) -> Self {
        Self(z)
    }
}

impl TryFrom<Vec<f64>> for KnowledgeState {
    type Error = Error;

    fn try_from(z: Vec<f64>) -> Result<Self> {
        Self::new(z)
    }
}

impl From<KnowledgeState> for Vec<f64> {
    fn from(state: KnowledgeState) -> Self {
        state.0
    }
}

impl AsRef<[f64]> for KnowledgeState {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Rate coefficients of a model.
///
/// `alphas[0]` is the acquisition rate; `alphas[i]` for `i >= 1` moves
/// knowledge from category `i` into category `i + 1` (1-based). `gammas` are
/// forgetting rates and must be strictly decreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    alphas: Vec<f64>,
    gammas: Vec<f64>,
    b: f64,
    lambda: f64,
    s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    alphas: Vec<f64>,
    gammas: Vec<f64>,
    #[serde(default)]
    b: f64,
    #[serde(default = "default_lambda")]
    lambda: f64,
    #[serde(default)]
    s: f64,
}

fn default_lambda() -> f64 {
    1.0
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.alphas, raw.gammas, raw.b, raw.lambda, raw.s)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            alphas: p.alphas,
            gammas: p.gammas,
            b: p.b,
            lambda: p.lambda,
            s: p.s,
        }
    }
}

impl ModelParams {
    pub fn new(alphas: Vec<f64>, gammas: Vec<f64>, b: f64, lambda: f64, s: f64) -> Result<Self> {
        if alphas.len() < 2 {
            return Err(Error::param(
                "alphas",
                format!("at least 2 components required, got {}", alphas.len()),
            ));
        }
        if gammas.len() != alphas.len() {
            return Err(Error::param(
                "gammas",
                format!(
                    "length {} does not match alphas length {}",
                    gammas.len(),
                    alphas.len()
                ),
            ));
        }
        for (i, a) in alphas.iter().enumerate() {
            if !a.is_finite() || *a < 0.0 {
                return Err(Error::param(
                    format!("alphas[{i}]"),
                    format!("must be finite and >= 0, got {a}"),
                ));
            }
        }
        for (i, g) in gammas.iter().enumerate() {
            if !g.is_finite() || *g < 0.0 {
                return Err(Error::param(
                    format!("gammas[{i}]"),
                    format!("must be finite and >= 0, got {g}"),
                ));
            }
        }
        if let Some(i) = gammas.windows(2).position(|w| w[1] >= w[0]) {
            return Err(Error::param(
                "gammas",
                format!(
                    "forgetting rates must be strictly decreasing (gamma_1 > gamma_2 > ... > gamma_n), \
                     but gammas[{}] = {} >= gammas[{}] = {}",
                    i + 1,
                    gammas[i + 1],
                    i,
                    gammas[i]
                ),
            ));
        }
        if !b.is_finite() || b < 0.0 {
            return Err(Error::param("b", format!("must be finite and >= 0, got {b}")));
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::param("lambda", format!("must be finite and > 0, got {lambda}")));
        }
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::param("s", format!("must lie in [0, 1], got {s}")));
        }
        Ok(Self {
            alphas,
            gammas,
            b,
            lambda,
            s,
        })
    }

    /// Parameters with `b = 0`, `lambda = 1` and `s = 0`.
    pub fn simple(alphas: Vec<f64>, gammas: Vec<f64>) -> Result<Self> {
        Self::new(alphas, gammas, 0.0, 1.0, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn complexity(&self) -> f64 {
        self.s
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::param("lambda", format!("must be finite and > 0, got {lambda}")));
        }
        self.lambda = lambda;
        Ok(self)
    }
}

/// Teaching indicator and requirement level at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeachingControl {
    pub teaching: bool,
    pub u: f64,
}

impl TeachingControl {
    pub fn teach(u: f64) -> Self {
        Self { teaching: true, u }
    }

    /// Break: no teaching and no requirement.
    pub fn idle() -> Self {
        Self {
            teaching: false,
            u: 0.0,
        }
    }

    fn k(&self) -> f64 {
        if self.teaching {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Two,
    /// The generalized model instantiated with three categories.
    Three,
    Four,
    General(usize),
}

impl ModelKind {
    pub fn dim(&self) -> usize {
        match self {
            ModelKind::Two => 2,
            ModelKind::Three => 3,
            ModelKind::Four => 4,
            ModelKind::General(n) => *n,
        }
    }

    pub fn strength_kind(&self) -> StrengthKind {
        match self {
            ModelKind::Four => StrengthKind::Pf,
            _ => StrengthKind::Pr,
        }
    }

    pub fn name(&self) -> String {
        match self {
            ModelKind::Two => "two".into(),
            ModelKind::Three => "three".into(),
            ModelKind::Four => "four".into(),
            ModelKind::General(n) => format!("general({n})"),
        }
    }
}

/// Which strength coefficient a trace reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrengthKind {
    /// Firm fraction `Z_4 / Z` of the four-component model.
    Pf,
    /// Weighted firm fraction of the generalized model.
    Pr,
}

impl StrengthKind {
    pub fn eval(&self, z: &[f64]) -> f64 {
        match self {
            StrengthKind::Pf => pf_unchecked(z),
            StrengthKind::Pr => pr_unchecked(z),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            StrengthKind::Pf => "pf",
            StrengthKind::Pr => "pr",
        }
    }
}

/// A model kind bound to dimensionally consistent parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    kind: ModelKind,
    params: ModelParams,
}

impl Model {
    pub fn new(kind: ModelKind, params: ModelParams) -> Result<Self> {
        if let ModelKind::General(n) = kind {
            if n < 2 {
                return Err(Error::param("model", "general model needs n >= 2"));
            }
        }
        if params.dim() != kind.dim() {
            return Err(Error::Dimension {
                what: "params",
                expected: kind.dim(),
                found: params.dim(),
            });
        }
        Ok(Self { kind, params })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn strength_kind(&self) -> StrengthKind {
        self.kind.strength_kind()
    }

    pub fn check_state(&self, state: &KnowledgeState) -> Result<()> {
        check_len("state", self.dim(), state.len())
    }

    /// Writes the rates for `z` into `out`. Both slices must have length
    /// `self.dim()`.
    pub fn rates_into(&self, z: &[f64], ctrl: &TeachingControl, out: &mut [f64]) {
        debug_assert_eq!(z.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        match self.kind {
            ModelKind::Two => two_into(z, &self.params, ctrl, out),
            ModelKind::Four => four_into(z, &self.params, ctrl, out),
            ModelKind::Three | ModelKind::General(_) => general_into(z, &self.params, ctrl, out),
        }
    }

    /// Rates with acquisition switched off: the requirement level is pinned to
    /// the current total so the deficit is zero, while transitions between
    /// categories stay active.
    pub fn consolidation_rates_into(&self, z: &[f64], out: &mut [f64]) {
        let ctrl = TeachingControl::teach(total_knowledge(z));
        self.rates_into(z, &ctrl, out);
    }

    pub fn rates(&self, state: &KnowledgeState, ctrl: &TeachingControl) -> Result<Vec<f64>> {
        self.check_state(state)?;
        let mut out = vec![0.0; self.dim()];
        self.rates_into(state.as_slice(), ctrl, &mut out);
        Ok(out)
    }

    pub fn strength(&self, z: &[f64]) -> f64 {
        self.strength_kind().eval(z)
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

/// `Z^b` with `0^0 = 1` and `0^b = 0` for `b > 0`.
fn knowledge_power(z: f64, b: f64) -> f64 {
    if b == 0.0 {
        1.0
    } else if z <= 0.0 {
        0.0
    } else {
        z.powf(b)
    }
}

fn decay_into(z: &[f64], gammas: &[f64], out: &mut [f64]) {
    for ((o, zi), g) in out.iter_mut().zip(z).zip(gammas) {
        *o = -g * zi;
    }
}

fn two_into(z: &[f64], p: &ModelParams, ctrl: &TeachingControl, out: &mut [f64]) {
    let (a, g) = (&p.alphas, &p.gammas);
    if !ctrl.teaching {
        return decay_into(z, g, out);
    }
    let k = ctrl.k();
    let total = z[0] + z[1];
    out[0] = k * a[0] * (ctrl.u - total) - k * a[1] * z[0] - g[0] * z[0];
    out[1] = k * a[1] * z[0] - g[1] * z[1];
}

fn four_into(z: &[f64], p: &ModelParams, ctrl: &TeachingControl, out: &mut [f64]) {
    let (a, g) = (&p.alphas, &p.gammas);
    if !ctrl.teaching {
        return decay_into(z, g, out);
    }
    let k = ctrl.k();
    let total = total_knowledge(z);
    let zb = knowledge_power(total, p.b);
    out[0] = k * a[0] * (ctrl.u - total) * zb - k * a[1] * z[0] - g[0] * z[0];
    out[1] = k * a[1] * z[0] - k * a[2] * z[1] - g[1] * z[1];
    out[2] = k * a[2] * z[1] - k * a[3] * z[2] - g[2] * z[2];
    out[3] = k * a[3] * z[2] - g[3] * z[3];
}

fn general_into(z: &[f64], p: &ModelParams, ctrl: &TeachingControl, out: &mut [f64]) {
    let (a, g) = (&p.alphas, &p.gammas);
    if !ctrl.teaching {
        return decay_into(z, g, out);
    }
    let n = z.len();
    let drive = ctrl.k() * (1.0 - p.s);
    let total = total_knowledge(z);
    let zb = knowledge_power(total, p.b);
    out[0] = drive * (a[0] * (ctrl.u - total) * zb - a[1] * z[0]) - g[0] * z[0];
    for i in 1..n - 1 {
        out[i] = drive * (a[i] * z[i - 1] - a[i + 1] * z[i]) - g[i] * z[i];
    }
    out[n - 1] = drive * a[n - 1] * z[n - 2] - g[n - 1] * z[n - 1];
}

/// Four-component right-hand side.
pub fn derivatives_four(
    state: &KnowledgeState,
    params: &ModelParams,
    ctrl: &TeachingControl,
) -> Result<Vec<f64>> {
    check_len("state", 4, state.len())?;
    check_len("params", 4, params.dim())?;
    let mut out = vec![0.0; 4];
    four_into(state.as_slice(), params, ctrl, &mut out);
    Ok(out)
}

/// Two-component right-hand side (acquisition without the `Z^b` factor).
pub fn derivatives_two(
    state: &KnowledgeState,
    params: &ModelParams,
    ctrl: &TeachingControl,
) -> Result<Vec<f64>> {
    check_len("state", 2, state.len())?;
    check_len("params", 2, params.dim())?;
    let mut out = vec![0.0; 2];
    two_into(state.as_slice(), params, ctrl, &mut out);
    Ok(out)
}

/// Generalized `n`-component right-hand side with complexity factor.
pub fn derivatives_general(
    state: &KnowledgeState,
    params: &ModelParams,
    ctrl: &TeachingControl,
) -> Result<Vec<f64>> {
    if state.len() < 2 {
        return Err(Error::Dimension {
            what: "state",
            expected: 2,
            found: state.len(),
        });
    }
    check_len("params", state.len(), params.dim())?;
    let mut out = vec![0.0; state.len()];
    general_into(state.as_slice(), params, ctrl, &mut out);
    Ok(out)
}

pub fn total_knowledge(z: &[f64]) -> f64 {
    z.iter().sum()
}

fn pf_unchecked(z: &[f64]) -> f64 {
    let total = total_knowledge(z);
    if total <= 0.0 {
        return 0.0;
    }
    z[z.len() - 1] / total
}

fn pr_unchecked(z: &[f64]) -> f64 {
    let total = total_knowledge(z);
    if total <= 0.0 {
        return 0.0;
    }
    let n = z.len();
    // weight 1/2^(n-i) for category i >= 2, category 1 carries none
    let weighted: f64 = z
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, zi)| zi / f64::powi(2.0, (n - 1 - i) as i32))
        .sum();
    weighted / total
}

/// Fraction of knowledge in the firmest of four categories. Zero for an empty
/// state.
pub fn strength_pf(state: &KnowledgeState) -> Result<f64> {
    check_len("state", 4, state.len())?;
    Ok(pf_unchecked(state.as_slice()))
}

/// Weighted firm fraction for `n >= 2` categories. Zero for an empty state.
pub fn strength_pr(state: &KnowledgeState) -> Result<f64> {
    if state.len() < 2 {
        return Err(Error::Dimension {
            what: "state",
            expected: 2,
            found: state.len(),
        });
    }
    Ok(pr_unchecked(state.as_slice()))
}

/// Forgetting rate from the e-folding time.
pub fn gamma_from_tau(tau: f64) -> Result<f64> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    Ok(1.0 / tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn state(z: &[f64]) -> KnowledgeState {
        KnowledgeState::new(z.to_vec()).unwrap()
    }

    fn params4() -> ModelParams {
        ModelParams::simple(vec![0.5, 0.1, 0.05, 0.02], vec![0.1, 0.05, 0.02, 0.01]).unwrap()
    }

    #[test]
    fn four_zero_state_zero_requirement() {
        let r = derivatives_four(&state(&[0.0; 4]), &params4(), &TeachingControl::teach(0.0)).unwrap();
        assert_eq!(r, vec![0.0; 4]);
    }

    #[test]
    fn four_break_is_pure_forgetting() {
        let ctrl = TeachingControl {
            teaching: false,
            u: 123.0,
        };
        let r = derivatives_four(&state(&[1.0; 4]), &params4(), &ctrl).unwrap();
        assert_eq!(r, vec![-0.1, -0.05, -0.02, -0.01]);
    }

    #[test]
    fn four_lesson_rates() {
        let r = derivatives_four(&state(&[1.0; 4]), &params4(), &TeachingControl::teach(10.0)).unwrap();
        let expected = [2.8, 0.0, 0.01, 0.01];
        for (a, e) in r.iter().zip(expected) {
            assert_abs_diff_eq!(*a, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn four_power_term_at_empty_state() {
        let p = ModelParams::new(vec![0.5, 0.1, 0.05, 0.02], vec![0.1, 0.05, 0.02, 0.01], 0.5, 1.0, 0.0)
            .unwrap();
        let r = derivatives_four(&state(&[0.0; 4]), &p, &TeachingControl::teach(10.0)).unwrap();
        assert_eq!(r[0], 0.0);
        let r = derivatives_four(&state(&[0.0; 4]), &params4(), &TeachingControl::teach(10.0)).unwrap();
        assert_eq!(r[0], 5.0);
    }

    #[test]
    fn two_component_examples() {
        let p = ModelParams::simple(vec![0.4, 0.1], vec![0.1, 0.01]).unwrap();
        let r = derivatives_two(&state(&[0.0, 0.0]), &p, &TeachingControl::teach(5.0)).unwrap();
        assert_abs_diff_eq!(r[0], 2.0, epsilon = 1e-15);
        assert_eq!(r[1], 0.0);

        let r = derivatives_two(&state(&[2.0, 3.0]), &p, &TeachingControl::idle()).unwrap();
        assert_abs_diff_eq!(r[0], -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(r[1], -0.03, epsilon = 1e-15);

        let r = derivatives_two(&state(&[0.0, 0.0]), &p, &TeachingControl::teach(0.0)).unwrap();
        assert_eq!(r, vec![0.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p2 = ModelParams::simple(vec![0.4, 0.1], vec![0.1, 0.01]).unwrap();
        assert!(matches!(
            derivatives_four(&state(&[0.0; 4]), &p2, &TeachingControl::idle()),
            Err(Error::Dimension { what: "params", .. })
        ));
        assert!(matches!(
            derivatives_two(&state(&[0.0; 3]), &p2, &TeachingControl::idle()),
            Err(Error::Dimension { what: "state", .. })
        ));
        assert!(derivatives_general(&state(&[0.0; 3]), &p2, &TeachingControl::idle()).is_err());
        assert!(Model::new(ModelKind::Three, p2).is_err());
    }

    #[test]
    fn general_break_and_full_complexity() {
        let p = ModelParams::new(vec![0.5, 0.2, 0.1], vec![0.3, 0.1, 0.01], 0.0, 1.0, 1.0).unwrap();
        let s = state(&[2.0, 3.0, 4.0]);
        let decay = vec![-0.6, -0.30000000000000004, -0.04];
        let r = derivatives_general(&s, &p, &TeachingControl::teach(10.0)).unwrap();
        for (a, e) in r.iter().zip(&decay) {
            assert_abs_diff_eq!(*a, *e, epsilon = 1e-15);
        }
        let p0 = ModelParams::simple(vec![0.5, 0.2, 0.1], vec![0.3, 0.1, 0.01]).unwrap();
        let r = derivatives_general(&s, &p0, &TeachingControl::idle()).unwrap();
        assert_eq!(r, vec![-0.3 * 2.0, -0.1 * 3.0, -0.01 * 4.0]);
    }

    #[test]
    fn totals() {
        assert_eq!(total_knowledge(&[0.0; 4]), 0.0);
        assert_eq!(total_knowledge(&[1.0, 2.0, 3.0, 4.0]), 10.0);
        assert_eq!(total_knowledge(&[0.5, 0.25]), 0.75);
    }

    #[test]
    fn strength_coefficients() {
        assert_eq!(strength_pf(&state(&[3.0, 0.0, 0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(strength_pf(&state(&[0.0, 0.0, 0.0, 3.0])).unwrap(), 1.0);
        assert_eq!(strength_pf(&state(&[1.0; 4])).unwrap(), 0.25);
        assert_eq!(strength_pf(&state(&[0.0; 4])).unwrap(), 0.0);
        assert!(strength_pf(&state(&[1.0; 3])).is_err());

        assert_eq!(strength_pr(&state(&[3.0, 0.0, 0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(strength_pr(&state(&[0.0, 0.0, 0.0, 3.0])).unwrap(), 1.0);
        assert_abs_diff_eq!(strength_pr(&state(&[0.0, 4.0, 2.0, 1.0])).unwrap(), 3.0 / 7.0, epsilon = 1e-15);
        assert_eq!(strength_pr(&state(&[0.0; 5])).unwrap(), 0.0);
        assert!(strength_pr(&state(&[1.0])).is_err());
    }

    #[test]
    fn gamma_tau() {
        assert_eq!(gamma_from_tau(1.0).unwrap(), 1.0);
        assert_eq!(gamma_from_tau(2.0).unwrap(), 0.5);
        assert!(gamma_from_tau(0.0).is_err());
        assert!(gamma_from_tau(-1.0).is_err());
    }

    #[test]
    fn params_validation() {
        let err = ModelParams::simple(vec![0.1, 0.1], vec![0.1, 0.2]).unwrap_err();
        assert!(err.to_string().contains("strictly decreasing"), "{err}");
        assert!(ModelParams::simple(vec![0.1, 0.1], vec![0.1, 0.1]).is_err());
        assert!(ModelParams::simple(vec![-0.1, 0.1], vec![0.2, 0.1]).is_err());
        assert!(ModelParams::simple(vec![0.1], vec![0.2]).is_err());
        assert!(ModelParams::new(vec![0.1, 0.1], vec![0.2, 0.1], -1.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(vec![0.1, 0.1], vec![0.2, 0.1], 0.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(vec![0.1, 0.1], vec![0.2, 0.1], 0.0, 1.0, 1.5).is_err());
        assert!(KnowledgeState::new(vec![1.0, -0.5]).is_err());
    }

    fn arb_state4() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..50.0, 4)
    }

    fn arb_params4() -> impl Strategy<Value = ModelParams> {
        (
            prop::collection::vec(0.0f64..2.0, 4),
            prop::collection::vec(0.001f64..1.0, 4),
            0.0f64..2.0,
        )
            .prop_map(|(a, mut g, b)| {
                g.sort_by(|x, y| y.partial_cmp(x).unwrap());
                for i in 1..g.len() {
                    if g[i] >= g[i - 1] {
                        g[i] = g[i - 1] * 0.5;
                    }
                }
                ModelParams::new(a, g, b, 1.0, 0.0).unwrap()
            })
    }

    proptest! {
        #[test]
        fn general_reduces_to_four(z in arb_state4(), p in arb_params4(), teaching: bool, u in 0.0f64..100.0) {
            let s = state(&z);
            let ctrl = TeachingControl { teaching, u };
            let a = derivatives_four(&s, &p, &ctrl).unwrap();
            let g = derivatives_general(&s, &p, &ctrl).unwrap();
            for (x, y) in a.iter().zip(&g) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn strength_scale_invariant_and_bounded(z in prop::collection::vec(0.0f64..10.0, 4), c in 0.01f64..100.0) {
            let s = state(&z);
            let scaled = state(&z.iter().map(|v| v * c).collect::<Vec<_>>());
            for f in [strength_pf, strength_pr] {
                let a = f(&s).unwrap();
                let b = f(&scaled).unwrap();
                prop_assert!((0.0..=1.0).contains(&a));
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn zero_component_has_non_negative_rate(
            mut z in arb_state4(), p in arb_params4(), idx in 0usize..4, u in 0.0f64..100.0, teaching: bool
        ) {
            z[idx] = 0.0;
            let s = state(&z);
            let ctrl = TeachingControl { teaching, u: u.max(total_knowledge(&z)) };
            let r = derivatives_four(&s, &p, &ctrl).unwrap();
            prop_assert!(r[idx] >= 0.0);
        }
    }
}
