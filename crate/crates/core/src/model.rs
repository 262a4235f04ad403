//! Problem-instance representation: benefit/cost function families, market
//! parameters, contracts, and validity checking.
//!
//! All curve-level checks (monotonicity, concavity, increasing differences)
//! run on a shared uniform grid of `grid_m` points on `[0, 1]` including both
//! endpoints. Solvers search the same grid, so oracle comparisons are exact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default tolerance for shape checks (monotonicity, concavity, ID).
pub const DEFAULT_SHAPE_TOL: f64 = 1e-9;
/// Default tolerance for IR/IC/SR constraint checks.
pub const DEFAULT_IR_IC_TOL: f64 = 1e-7;
/// Default global fine cap. The SR constraint never binds when `gamma = 0`,
/// so an explicit cap is required for well-posedness.
pub const DEFAULT_S_MAX: f64 = 1e6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("privacy level {0} outside [0, 1]")]
    EpsOutOfRange(f64),
    #[error("type index {0} out of range (n = {1})")]
    TypeIndexOutOfRange(usize, usize),
    #[error("invalid model: {0}")]
    Invalid(ValidationReport),
}

/// Uniform grid of `m` points on `[0, 1]`, both endpoints included.
pub fn eps_grid(m: usize) -> Vec<f64> {
    assert!(m >= 2);
    (0..m).map(|t| t as f64 / (m - 1) as f64).collect()
}

/// Honest-buyer benefit curve `b(eps)` on `[0, 1]`.
///
/// Every family is monotone non-decreasing and concave with `b(0) = 0`;
/// `validate` checks these shape properties on the model grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BenefitFunction {
    /// `b(eps) = scale * (1 - exp(-rate * eps))`
    ScaledSaturatingExp { scale: f64, rate: f64 },
    /// `b(eps) = scale * ln(1 + eps)`
    Log1p { scale: f64 },
    /// `b(eps) = scale * eps^exponent`, `exponent` in `(0, 1]`
    Power { scale: f64, exponent: f64 },
    /// Piecewise-linear interpolation through knots on `[0, 1]`.
    Tabulated { knots: Vec<(f64, f64)> },
}

impl BenefitFunction {
    /// Evaluate at `eps`; `eps` must already be in `[0, 1]`.
    pub(crate) fn value(&self, eps: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&eps));
        match self {
            BenefitFunction::ScaledSaturatingExp { scale, rate } => {
                scale * (1.0 - (-rate * eps).exp())
            }
            BenefitFunction::Log1p { scale } => scale * eps.ln_1p(),
            BenefitFunction::Power { scale, exponent } => scale * eps.powf(*exponent),
            BenefitFunction::Tabulated { knots } => interp_linear(knots, eps),
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self, BenefitFunction::Tabulated { .. })
    }
}

/// Adversary attack-benefit curve `C(eps)`: monotone increasing and convex
/// with `C(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AdversaryCost {
    /// `C(eps) = scale * (exp(eps) - 1)`
    ExpScaled { scale: f64 },
    /// Piecewise-linear interpolation through knots on `[0, 1]`.
    Tabulated { knots: Vec<(f64, f64)> },
}

impl AdversaryCost {
    pub(crate) fn value(&self, eps: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&eps));
        match self {
            AdversaryCost::ExpScaled { scale } => scale * (eps.exp() - 1.0),
            AdversaryCost::Tabulated { knots } => interp_linear(knots, eps),
        }
    }
}

fn interp_linear(knots: &[(f64, f64)], x: f64) -> f64 {
    assert!(knots.len() >= 2, "tabulated function needs at least two knots");
    if x <= knots[0].0 {
        return knots[0].1;
    }
    for w in knots.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if x <= x1 {
            let t = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
            return y0 + t * (y1 - y0);
        }
    }
    knots[knots.len() - 1].1
}

/// Analytic (or interpolated) benefit evaluation with domain checking.
pub fn eval_benefit(f: &BenefitFunction, eps: f64) -> Result<f64, ModelError> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(ModelError::EpsOutOfRange(eps));
    }
    Ok(f.value(eps))
}

/// Analytic (or interpolated) adversary-cost evaluation with domain checking.
pub fn eval_cost(c: &AdversaryCost, eps: f64) -> Result<f64, ModelError> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(ModelError::EpsOutOfRange(eps));
    }
    Ok(c.value(eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Shape checks: monotonicity, concavity/convexity, increasing differences.
    pub shape: f64,
    /// IR / IC / SR constraint checks.
    pub ir_ic: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { shape: DEFAULT_SHAPE_TOL, ir_ic: DEFAULT_IR_IC_TOL }
    }
}

/// Full problem instance for one query bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketModel {
    /// Number of honest buyer types.
    pub n: usize,
    /// Honest-type shares, length `n`, summing to 1.
    pub q: Vec<f64>,
    /// Adversary fraction, in `[0, 1)`.
    pub rho: f64,
    /// Attack probability on an honest buyer, in `[0, 1]`.
    pub gamma: f64,
    /// Steady-revenue fraction parameter, in `(0, 1]`.
    pub phi: f64,
    /// Benefit curve per honest type, ordered `b_1 <= ... <= b_n`.
    pub benefits: Vec<BenefitFunction>,
    pub cost: AdversaryCost,
    /// Grid resolution for curve checks and solver searches.
    pub grid_m: usize,
    /// Global fine cap.
    pub s_max: f64,
    pub tol: Tolerances,
}

impl MarketModel {
    pub fn grid(&self) -> Vec<f64> {
        eps_grid(self.grid_m)
    }

    /// Benefit of type `i` (1-based) at `eps`.
    pub fn benefit(&self, i: usize, eps: f64) -> f64 {
        self.benefits[i - 1].value(eps)
    }

    pub fn cost_at(&self, eps: f64) -> f64 {
        self.cost.value(eps)
    }

    /// Share of types `i` and above (1-based); zero above `n`.
    pub fn share_from(&self, i: usize) -> f64 {
        if i > self.n {
            0.0
        } else {
            self.q[i - 1..].iter().sum()
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate_model(self)
    }

    pub fn ensure_valid(&self) -> Result<(), ModelError> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(ModelError::Invalid(report))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    ShareSimplex,
    SharePositive,
    TypeOrdering,
    IncreasingDifferences,
    BenefitAtOrigin,
    BenefitMonotone,
    BenefitConcave,
    CostAtOrigin,
    CostMonotone,
    CostConvex,
    ParamRange,
    GridTooCoarse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Grid point at which the violation was detected, when applicable.
    pub eps: Option<f64>,
    pub message: String,
}

/// Validation never aborts; it reports every violated invariant.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ViolationKind, eps: Option<f64>, message: String) {
        self.violations.push(Violation { kind, eps, message });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{}", v.message)?;
        }
        Ok(())
    }
}

/// Grid-check every model invariant: share simplex, parameter ranges, benefit
/// and cost shapes, type ordering, and increasing differences.
pub fn validate_model(m: &MarketModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let tol = m.tol.shape;

    if m.n == 0 || m.benefits.len() != m.n || m.q.len() != m.n {
        report.push(
            ViolationKind::ParamRange,
            None,
            format!("n = {} but {} benefits and {} shares", m.n, m.benefits.len(), m.q.len()),
        );
        return report;
    }
    if m.grid_m < 11 {
        report.push(
            ViolationKind::GridTooCoarse,
            None,
            format!("grid_m = {} < 11", m.grid_m),
        );
        return report;
    }

    let qsum: f64 = m.q.iter().sum();
    if (qsum - 1.0).abs() > 1e-9 {
        report.push(
            ViolationKind::ShareSimplex,
            None,
            format!("type shares sum to {qsum}, expected 1"),
        );
    }
    for (i, &qi) in m.q.iter().enumerate() {
        if qi <= 0.0 {
            report.push(
                ViolationKind::SharePositive,
                None,
                format!("share q_{} = {qi} is not positive", i + 1),
            );
        }
    }
    if !(0.0..1.0).contains(&m.rho) {
        report.push(ViolationKind::ParamRange, None, format!("rho = {} outside [0, 1)", m.rho));
    }
    if !(0.0..=1.0).contains(&m.gamma) {
        report.push(ViolationKind::ParamRange, None, format!("gamma = {} outside [0, 1]", m.gamma));
    }
    if !(m.phi > 0.0 && m.phi <= 1.0) {
        report.push(ViolationKind::ParamRange, None, format!("phi = {} outside (0, 1]", m.phi));
    }
    if m.s_max <= 0.0 {
        report.push(ViolationKind::ParamRange, None, format!("s_max = {} must be positive", m.s_max));
    }

    let grid = m.grid();

    for (idx, b) in m.benefits.iter().enumerate() {
        let i = idx + 1;
        let b0 = b.value(0.0);
        let origin_tol = if b.is_tabulated() { 1e-12 } else { 0.0 };
        if b0.abs() > origin_tol {
            report.push(
                ViolationKind::BenefitAtOrigin,
                Some(0.0),
                format!("b_{i}(0) = {b0}, expected 0"),
            );
        }
        // Tabulated functions are checked on their knots; piecewise-linear
        // interpolation preserves knot-level shape properties.
        let pts: Vec<f64> = match b {
            BenefitFunction::Tabulated { knots } => knots.iter().map(|k| k.0).collect(),
            _ => grid.clone(),
        };
        check_shape(&pts, |e| b.value(e), tol, Shape::ConcaveNonDecreasing, &mut report, &|msg| {
            format!("b_{i}: {msg}")
        });
    }

    let c0 = m.cost.value(0.0);
    if c0.abs() > 1e-12 {
        report.push(ViolationKind::CostAtOrigin, Some(0.0), format!("C(0) = {c0}, expected 0"));
    }
    let cost_pts: Vec<f64> = match &m.cost {
        AdversaryCost::Tabulated { knots } => knots.iter().map(|k| k.0).collect(),
        _ => grid.clone(),
    };
    check_shape(&cost_pts, |e| m.cost.value(e), tol, Shape::ConvexNonDecreasing, &mut report, &|msg| {
        format!("C: {msg}")
    });

    // Type ordering and (non-strict) increasing differences on the grid.
    let vals: Vec<Vec<f64>> =
        m.benefits.iter().map(|b| grid.iter().map(|&e| b.value(e)).collect()).collect();
    for i in 1..m.n {
        let lo = &vals[i - 1];
        let hi = &vals[i];
        for (t, &e) in grid.iter().enumerate() {
            if hi[t] < lo[t] - tol {
                report.push(
                    ViolationKind::TypeOrdering,
                    Some(e),
                    format!("b_{}({e}) < b_{}({e})", i + 1, i),
                );
                break;
            }
        }
        'id: for w in 0..grid.len() {
            for w2 in (w + 1)..grid.len() {
                let d_hi = hi[w2] - hi[w];
                let d_lo = lo[w2] - lo[w];
                if d_hi < d_lo - tol {
                    report.push(
                        ViolationKind::IncreasingDifferences,
                        Some(grid[w]),
                        format!(
                            "increasing differences fail for types {}..{} on [{}, {}]",
                            i,
                            i + 1,
                            grid[w],
                            grid[w2]
                        ),
                    );
                    break 'id;
                }
            }
        }
    }

    report
}

enum Shape {
    ConcaveNonDecreasing,
    ConvexNonDecreasing,
}

fn check_shape(
    pts: &[f64],
    f: impl Fn(f64) -> f64,
    tol: f64,
    shape: Shape,
    report: &mut ValidationReport,
    label: &dyn Fn(&str) -> String,
) {
    for w in pts.windows(2) {
        let (e, e2) = (w[0], w[1]);
        if f(e2) < f(e) - tol {
            let kind = match shape {
                Shape::ConcaveNonDecreasing => ViolationKind::BenefitMonotone,
                Shape::ConvexNonDecreasing => ViolationKind::CostMonotone,
            };
            report.push(kind, Some(e), label(&format!("not monotone non-decreasing at {e}")));
            return;
        }
    }
    for w in pts.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        // Chord test at the middle point; for uniform grids this is the
        // midpoint test, for knots it is the equivalent chord inequality.
        let t = if c > a { (b - a) / (c - a) } else { 0.5 };
        let chord = f(a) + t * (f(c) - f(a));
        match shape {
            Shape::ConcaveNonDecreasing => {
                if f(b) < chord - tol {
                    report.push(
                        ViolationKind::BenefitConcave,
                        Some(b),
                        label(&format!("not concave at {b}")),
                    );
                    return;
                }
            }
            Shape::ConvexNonDecreasing => {
                if f(b) > chord + tol {
                    report.push(
                        ViolationKind::CostConvex,
                        Some(b),
                        label(&format!("not convex at {b}")),
                    );
                    return;
                }
            }
        }
    }
}

/// One offer: price, privacy level, post-hoc fine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub p: f64,
    pub eps: f64,
    pub s: f64,
}

impl Contract {
    /// Expected payment of an honest buyer holding this contract.
    pub fn effective_price(&self, gamma: f64) -> f64 {
        self.p + gamma * self.s
    }

    /// Steady-revenue constraint `p >= (1 - phi)(p + gamma s)`.
    pub fn satisfies_sr(&self, m: &MarketModel) -> bool {
        self.p >= (1.0 - m.phi) * self.effective_price(m.gamma) - m.tol.ir_ic
    }
}

/// One contract per honest type (type `i` is offered `contracts[i - 1]`),
/// with cached effective prices.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractMenu {
    pub contracts: Vec<Contract>,
    pub effective_prices: Vec<f64>,
}

impl ContractMenu {
    pub fn new(contracts: Vec<Contract>, gamma: f64) -> Self {
        let effective_prices = contracts.iter().map(|c| c.effective_price(gamma)).collect();
        ContractMenu { contracts, effective_prices }
    }

    pub fn len(&self) -> usize {
        self.contracts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contracts.is_empty()
    }

    /// Check privacy-level monotonicity, honest IR/IC, and SR against the
    /// owning model. Returns human-readable violations, empty if all hold.
    pub fn check(&self, m: &MarketModel) -> Vec<String> {
        let tol = m.tol.ir_ic;
        let mut out = Vec::new();
        for i in 1..self.len() {
            if self.contracts[i].eps < self.contracts[i - 1].eps - tol {
                out.push(format!(
                    "eps_{} = {} < eps_{} = {}",
                    i + 1,
                    self.contracts[i].eps,
                    i,
                    self.contracts[i - 1].eps
                ));
            }
        }
        for (idx, c) in self.contracts.iter().enumerate() {
            let i = idx + 1;
            let own = m.benefit(i, c.eps) - self.effective_prices[idx];
            if own < -tol {
                out.push(format!("IR_{i} violated: utility {own}"));
            }
            for (jdx, cj) in self.contracts.iter().enumerate() {
                if jdx == idx {
                    continue;
                }
                let other = m.benefit(i, cj.eps) - self.effective_prices[jdx];
                if own < other - tol {
                    out.push(format!(
                        "IC_{{{i},{}}} violated: {own} < {other}",
                        jdx + 1
                    ));
                }
            }
            if !c.satisfies_sr(m) {
                out.push(format!(
                    "SR_{i} violated: p = {}, effective price = {}",
                    c.p, self.effective_prices[idx]
                ));
            }
        }
        out
    }
}
