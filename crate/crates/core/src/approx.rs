//! Approximation pipeline: classify the adversary cost against the
//! price-contract curve, build slack contracts, and run the approximation
//! algorithm (single-contract High branch, unchanged Low branch, and the
//! intermediate-case construction) together with its PoAdv guarantee.

use thiserror::Error;

use crate::model::{Contract, ContractMenu, MarketModel, ValidationReport};
use crate::nonadv::{curve_value, NonAdvError, NonAdvSolution};

/// Minimum admissible price for "0-slack λ-priced for some λ": the price must
/// be strictly positive, so λ is floored here.
pub const PRICE_FLOOR: f64 = 1e-9;
const CLASSIFY_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error("invalid model: {0}")]
    InvalidModel(ValidationReport),
    #[error(transparent)]
    NonAdv(#[from] NonAdvError),
    #[error(
        "cost curve is within tolerance of the price-contract curve on \
         [{0:.6}, {1:.6}]; classification is ambiguous"
    )]
    DegenerateClassification(f64, f64),
    #[error("no type has eps* <= eps_M; the intermediate construction is undefined here")]
    EmptyK,
    #[error("contract of type K is not Delta-slack p*_K-priced (cap binding)")]
    KNotSlackFeasible,
    #[error("output menu fails honest validity: {0:?}")]
    ValidityCheckFailed(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostClassKind {
    High,
    Low,
    Intermediate,
}

impl std::fmt::Display for CostClassKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CostClassKind::High => "high",
            CostClassKind::Low => "low",
            CostClassKind::Intermediate => "intermediate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostClass {
    pub kind: CostClassKind,
    /// Last intersection of C with the price-contract curve (Intermediate).
    pub eps_m: Option<f64>,
    /// `Delta = max_{eps < eps_M} (C - P)` on the grid (Intermediate).
    pub delta: Option<f64>,
}

/// A fine-augmented contract certifying the delta-slack lambda-priced bullets.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackContract {
    /// The non-adversarial base `(p, eps, 0)`.
    pub base: Contract,
    /// Least fine bounding the adversary's gain by `delta`.
    pub s: f64,
    /// `p - gamma s`; effective price stays `p`.
    pub new_price: f64,
    pub delta: f64,
    pub lambda: f64,
}

impl SlackContract {
    pub fn contract(&self) -> Contract {
        Contract { p: self.new_price, eps: self.base.eps, s: self.s }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// High C: one 0-slack contract offered to every type.
    HighSingle,
    /// Low C: non-adversarial menu unchanged.
    LowOriginal,
    /// The intermediate construction kept the original menu.
    InterOriginal,
    /// The intermediate construction returned the modified menu.
    InterNew,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Branch::HighSingle => "high-single",
            Branch::LowOriginal => "low-original",
            Branch::InterOriginal => "inter-original",
            Branch::InterNew => "inter-new",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct ApproxMenu {
    pub menu: ContractMenu,
    /// 1-based contract index assigned to each honest type.
    pub assignment: Vec<usize>,
    pub branch: Branch,
    /// Largest certified lambda (High branch only).
    pub lambda: Option<f64>,
    /// Intermediate-construction internals (Intermediate only).
    pub k: Option<usize>,
    pub r_hat: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// True when clipping alpha/beta at zero would flip the branch choice.
    pub clip_divergence: bool,
}

#[derive(Debug, Clone)]
pub enum ApproxOutcome {
    Menu(ApproxMenu),
    /// The algorithm prescribes solving the adversarial problem from scratch.
    SolveAdvCase,
}

#[derive(Debug, Clone)]
pub struct ApproxReport {
    pub class: CostClass,
    pub nonadv: NonAdvSolution,
    pub outcome: ApproxOutcome,
}

/// Classify the adversary cost by the sign pattern of `C - P` on the grid
/// excluding `eps = 0`. Crossings are refined by bisection; an interval where
/// the difference stays within tolerance is reported as an error rather than
/// silently classified.
pub fn classify_cost(sol: &NonAdvSolution, m: &MarketModel) -> Result<CostClass, ApproxError> {
    let grid = m.grid();
    let prices = sol.prices();
    let d: Vec<f64> = grid
        .iter()
        .map(|&e| m.cost_at(e) - curve_value(&sol.eps_star, prices, m, e))
        .collect();

    for t in 2..grid.len() {
        if d[t - 1].abs() <= CLASSIFY_TOL && d[t].abs() <= CLASSIFY_TOL {
            return Err(ApproxError::DegenerateClassification(grid[t - 1], grid[t]));
        }
    }
    let signs: Vec<i8> = d[1..]
        .iter()
        .map(|&x| {
            if x > CLASSIFY_TOL {
                1
            } else if x < -CLASSIFY_TOL {
                -1
            } else {
                0
            }
        })
        .collect();
    let nonzero: Vec<i8> = signs.iter().copied().filter(|&s| s != 0).collect();
    if nonzero.is_empty() {
        return Err(ApproxError::DegenerateClassification(grid[1], 1.0));
    }
    if nonzero.iter().all(|&s| s > 0) {
        return Ok(CostClass { kind: CostClassKind::High, eps_m: None, delta: None });
    }
    if nonzero.iter().all(|&s| s < 0) {
        return Ok(CostClass { kind: CostClassKind::Low, eps_m: None, delta: None });
    }

    // Last crossing, refined by bisection to 1e-10 in eps.
    let f = |e: f64| m.cost_at(e) - curve_value(&sol.eps_star, prices, m, e);
    let mut eps_m = None;
    for t in 1..grid.len() {
        if d[t - 1] * d[t] < 0.0 {
            let (mut lo, mut hi) = (grid[t - 1], grid[t]);
            let mut flo = d[t - 1];
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 || (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            eps_m = Some(0.5 * (lo + hi));
        }
    }
    let eps_m = eps_m.expect("mixed signs imply a bracketed crossing");
    let delta = grid
        .iter()
        .zip(&d)
        .filter(|(&e, _)| e < eps_m)
        .map(|(_, &x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CostClass { kind: CostClassKind::Intermediate, eps_m: Some(eps_m), delta: Some(delta) })
}

/// Least-fine construction for delta-slack lambda-priced contracts:
/// `s = max(0, (C(eps) - p - delta) / (1 - gamma))`, feasible iff the priced
/// bullets and the fine cap hold. `None` when infeasible.
pub fn make_slack_contract(
    p: f64,
    eps: f64,
    delta: f64,
    lambda: f64,
    m: &MarketModel,
) -> Option<SlackContract> {
    let c = m.cost_at(eps);
    let s = if m.gamma >= 1.0 {
        if c - p > delta + 1e-12 {
            return None; // fines cannot reduce the gain when gamma = 1
        }
        0.0
    } else {
        ((c - p - delta) / (1.0 - m.gamma)).max(0.0)
    };
    if s > m.s_max {
        return None;
    }
    let new_price = p - m.gamma * s;
    if new_price < lambda.max((1.0 - m.phi) * p) - 1e-12 {
        return None;
    }
    Some(SlackContract { base: Contract { p, eps, s: 0.0 }, s, new_price, delta, lambda })
}

/// Intermediate case: reroute exposed types onto slack-fined contracts.
pub fn inter_c_app(
    sol: &NonAdvSolution,
    class: &CostClass,
    m: &MarketModel,
) -> Result<ApproxMenu, ApproxError> {
    assert_eq!(class.kind, CostClassKind::Intermediate);
    let eps_m = class.eps_m.expect("intermediate class");
    let delta = class.delta.expect("intermediate class");
    let n = m.n;
    let prices = sol.prices().to_vec();

    let k_type = (1..=n)
        .filter(|&i| sol.eps_star[i - 1] <= eps_m)
        .next_back()
        .ok_or(ApproxError::EmptyK)?;
    let lambda = prices[k_type - 1];

    let mut slack = vec![None; n + 1];
    let mut e_set = Vec::new();
    for k in k_type..=n {
        if let Some(sc) = make_slack_contract(prices[k - 1], sol.eps_star[k - 1], delta, lambda, m)
        {
            e_set.push(k);
            slack[k] = Some(sc);
        }
    }
    if !e_set.contains(&k_type) {
        return Err(ApproxError::KNotSlackFeasible);
    }

    // safe(i): best E-contract for type i by pre-modification utility;
    // ties toward the smallest index.
    let mut safe = vec![0usize; n + 1];
    for i in (k_type + 1)..=n {
        let mut best_k = e_set[0];
        let mut best_v = f64::NEG_INFINITY;
        for &k in &e_set {
            let v = m.benefit(i, sol.eps_star[k - 1]) - prices[k - 1];
            if v > best_v {
                best_v = v;
                best_k = k;
            }
        }
        safe[i] = best_k;
    }

    let mut contracts = Vec::with_capacity(n);
    let mut assignment = Vec::with_capacity(n);
    for i in 1..=n {
        if i <= k_type {
            contracts.push(Contract { p: prices[i - 1], eps: sol.eps_star[i - 1], s: 0.0 });
            assignment.push(i);
        } else {
            let sc = slack[safe[i]].as_ref().expect("safe index is in E");
            contracts.push(sc.contract());
            assignment.push(safe[i]);
        }
    }

    let r_hat: f64 = (1..=n)
        .map(|i| {
            let idx = if i <= k_type { i } else { safe[i] };
            m.q[i - 1] * prices[idx - 1]
        })
        .sum();
    let r_star = sol.revenue_star;
    let alpha = (1..=n)
        .map(|i| m.cost_at(sol.eps_star[i - 1]) - prices[i - 1])
        .fold(f64::NEG_INFINITY, f64::max);
    let beta_low = (1..=k_type)
        .map(|i| m.cost_at(sol.eps_star[i - 1]) - prices[i - 1])
        .fold(f64::NEG_INFINITY, f64::max);
    // Adversary's gain on a modified contract (p - gamma*s, eps, s): it pays
    // the new price plus the full fine, so the gain is C - p - (1 - gamma)s,
    // which the least-fine construction pins at delta whenever s > 0. Using
    // this realized gain keeps the branch comparison consistent with the
    // revenues the two menus actually achieve.
    let beta = ((k_type + 1)..=n)
        .map(|i| {
            let k = safe[i];
            let sc = slack[k].as_ref().unwrap();
            m.cost_at(sol.eps_star[k - 1]) - sc.new_price - sc.s
        })
        .fold(beta_low, f64::max);

    let rho = m.rho;
    let use_orig = (1.0 - rho) * r_star - rho * alpha > (1.0 - rho) * r_hat - rho * beta;
    let use_orig_clipped = (1.0 - rho) * r_star - rho * alpha.max(0.0)
        > (1.0 - rho) * r_hat - rho * beta.max(0.0);

    let (menu, assignment, branch) = if use_orig {
        (sol.menu.clone(), (1..=n).collect(), Branch::InterOriginal)
    } else {
        (ContractMenu::new(contracts, m.gamma), assignment, Branch::InterNew)
    };
    Ok(ApproxMenu {
        menu,
        assignment,
        branch,
        lambda: None,
        k: Some(k_type),
        r_hat: Some(r_hat),
        alpha: Some(alpha),
        beta: Some(beta),
        clip_divergence: use_orig != use_orig_clipped,
    })
}

/// Full approximation pipeline from a fresh non-adversarial solve.
pub fn approx_contracts(m: &MarketModel) -> Result<ApproxReport, ApproxError> {
    let report = m.validate();
    if !report.is_valid() {
        return Err(ApproxError::InvalidModel(report));
    }
    let sol = crate::nonadv::solve_nonadv(m)?;
    approx_contracts_from(sol, m)
}

pub fn approx_contracts_from(
    sol: NonAdvSolution,
    m: &MarketModel,
) -> Result<ApproxReport, ApproxError> {
    let class = classify_cost(&sol, m)?;
    let n = m.n;
    let prices = sol.prices().to_vec();

    let outcome = match class.kind {
        CostClassKind::High => {
            // M: contracts that are 0-slack lambda-priced for some admissible
            // lambda; the largest certificate is the resulting price itself.
            let mut best: Option<(usize, SlackContract)> = None;
            for k in 1..=n {
                if let Some(sc) =
                    make_slack_contract(prices[k - 1], sol.eps_star[k - 1], 0.0, PRICE_FLOOR, m)
                {
                    let better = match &best {
                        Some((j, _)) => prices[k - 1] > prices[*j - 1],
                        None => true,
                    };
                    if better {
                        best = Some((k, sc));
                    }
                }
            }
            match best {
                None => ApproxOutcome::SolveAdvCase,
                Some((j, sc)) => {
                    // IR of type j survives by optimality of the base menu.
                    if m.benefit(j, sc.base.eps) - prices[j - 1] < -m.tol.ir_ic {
                        return Err(ApproxError::ValidityCheckFailed(vec![format!(
                            "type {j} IR fails on the single High-C contract"
                        )]));
                    }
                    let lambda = sc.new_price;
                    let menu =
                        ContractMenu::new(vec![sc.contract(); n], m.gamma);
                    ApproxOutcome::Menu(ApproxMenu {
                        menu,
                        assignment: vec![j; n],
                        branch: Branch::HighSingle,
                        lambda: Some(lambda),
                        k: None,
                        r_hat: None,
                        alpha: None,
                        beta: None,
                        clip_divergence: false,
                    })
                }
            }
        }
        CostClassKind::Low => ApproxOutcome::Menu(ApproxMenu {
            menu: sol.menu.clone(),
            assignment: (1..=n).collect(),
            branch: Branch::LowOriginal,
            lambda: None,
            k: None,
            r_hat: None,
            alpha: None,
            beta: None,
            clip_divergence: false,
        }),
        // The intermediate construction assumes type 1's level sits at or below the last
        // crossing (K well defined, K in E); when the instance breaks that
        // assumption the algorithm's fall-through applies: solve adv. case.
        CostClassKind::Intermediate => match inter_c_app(&sol, &class, m) {
            Ok(am) => ApproxOutcome::Menu(am),
            Err(ApproxError::EmptyK | ApproxError::KNotSlackFeasible) => {
                ApproxOutcome::SolveAdvCase
            }
            Err(e) => return Err(e),
        },
    };

    // Honest-validity gate for the multi-contract branches.
    if let ApproxOutcome::Menu(am) = &outcome {
        if am.branch != Branch::HighSingle {
            let issues = am.menu.check(m);
            if !issues.is_empty() {
                return Err(ApproxError::ValidityCheckFailed(issues));
            }
        }
    }
    Ok(ApproxReport { class, nonadv: sol, outcome })
}

/// PoAdv guarantee for an approx outcome; `None` when the algorithm
/// prescribed the adversarial solve (no bound applies).
pub fn poadv_bound(report: &ApproxReport, m: &MarketModel) -> Option<f64> {
    let r_star = report.nonadv.revenue_star;
    match &report.outcome {
        ApproxOutcome::SolveAdvCase => None,
        ApproxOutcome::Menu(am) => match report.class.kind {
            CostClassKind::Low => Some(1.0),
            CostClassKind::High => {
                let q_min = m.q.iter().cloned().fold(f64::INFINITY, f64::min);
                let lambda = am.lambda.expect("high branch records lambda");
                Some(r_star / (lambda * q_min))
            }
            CostClassKind::Intermediate => {
                let rho = m.rho;
                let delta = report.class.delta.expect("intermediate");
                let r_hat = am.r_hat.expect("intermediate");
                let alpha = am.alpha.expect("intermediate");
                let denom = (r_hat - delta * rho / (1.0 - rho))
                    .max(r_star - alpha * rho / (1.0 - rho));
                if denom > 0.0 {
                    Some(r_star / denom)
                } else {
                    Some(f64::INFINITY)
                }
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adv::{adversary_best_response, poadv_of_menu, realized_revenue, PoAdv};
    use crate::model::AdversaryCost;
    use crate::nonadv::solve_nonadv;
    use crate::presets::demo_model;

    fn demo_with_cost(n: usize, cost: AdversaryCost) -> crate::model::MarketModel {
        let mut m = demo_model(n, 1001);
        m.cost = cost;
        m
    }

    #[test]
    fn classify_high() {
        let m = demo_with_cost(2, AdversaryCost::ExpScaled { scale: 100.0 });
        let sol = solve_nonadv(&m).unwrap();
        let class = classify_cost(&sol, &m).unwrap();
        assert_eq!(class.kind, CostClassKind::High);
    }

    #[test]
    fn classify_low() {
        let m = demo_with_cost(
            2,
            AdversaryCost::Tabulated { knots: vec![(0.0, 0.0), (1.0, 0.01)] },
        );
        let sol = solve_nonadv(&m).unwrap();
        let class = classify_cost(&sol, &m).unwrap();
        assert_eq!(class.kind, CostClassKind::Low);
    }

    #[test]
    fn classify_demo_is_intermediate() {
        let m = demo_model(10, 1001);
        let sol = solve_nonadv(&m).unwrap();
        let class = classify_cost(&sol, &m).unwrap();
        assert_eq!(class.kind, CostClassKind::Intermediate);
        let eps_m = class.eps_m.unwrap();
        assert!(eps_m > 0.0 && eps_m < 1.0);
        assert!((eps_m - 0.2627).abs() < 2e-3, "eps_M = {eps_m}");
        assert!(class.delta.unwrap() >= 0.0);
    }

    #[test]
    fn classify_degenerate_cost_equal_to_curve() {
        // Linear benefit equal to a linear cost: C - P is 0 everywhere.
        let mut m = demo_model(1, 101);
        m.benefits = vec![crate::model::BenefitFunction::Power { scale: 2.0, exponent: 1.0 }];
        m.cost = AdversaryCost::Tabulated { knots: vec![(0.0, 0.0), (1.0, 2.0)] };
        let sol = solve_nonadv(&m).unwrap();
        assert!(matches!(
            classify_cost(&sol, &m),
            Err(ApproxError::DegenerateClassification(_, _))
        ));
    }

    #[test]
    fn slack_contract_hand_values() {
        let mut m = demo_model(2, 101);
        m.gamma = 0.1;
        let eps = (2.0f64).ln() / 5.0;
        let sc = make_slack_contract(0.75, eps, 0.0, PRICE_FLOOR, &m).unwrap();
        assert!((sc.s - 0.157988).abs() < 1e-4, "s = {}", sc.s);
        assert!((sc.new_price - 0.734201).abs() < 1e-4);
        assert!(sc.new_price >= (1.0 - m.phi) * 0.75);
        // Slack-contract conditions on output.
        assert!(m.cost_at(eps) - sc.new_price - sc.s <= 1e-9);
        // Too-high lambda is infeasible.
        assert!(make_slack_contract(0.75, eps, 0.0, 0.74, &m).is_none());
    }

    #[test]
    fn slack_zero_when_cost_below_price() {
        let m = demo_with_cost(
            2,
            AdversaryCost::Tabulated { knots: vec![(0.0, 0.0), (1.0, 0.01)] },
        );
        let sc = make_slack_contract(1.0, 0.5, 0.0, PRICE_FLOOR, &m).unwrap();
        assert_eq!(sc.s, 0.0);
        assert_eq!(sc.new_price, 1.0);
    }

    #[test]
    fn slack_gamma_one() {
        let mut m = demo_model(1, 101);
        m.gamma = 1.0;
        // C(1) ~ 10.31 > p: infeasible at gamma = 1.
        assert!(make_slack_contract(1.0, 1.0, 0.0, PRICE_FLOOR, &m).is_none());
        // C <= p + delta: s = 0 works.
        assert!(make_slack_contract(11.0, 1.0, 0.0, PRICE_FLOOR, &m).is_some());
    }

    #[test]
    fn low_case_returns_nonadv_menu() {
        let m = demo_with_cost(
            3,
            AdversaryCost::Tabulated { knots: vec![(0.0, 0.0), (1.0, 0.01)] },
        );
        let report = approx_contracts(&m).unwrap();
        assert_eq!(report.class.kind, CostClassKind::Low);
        let am = match &report.outcome {
            ApproxOutcome::Menu(am) => am,
            _ => panic!("expected menu"),
        };
        assert_eq!(am.branch, Branch::LowOriginal);
        assert_eq!(am.menu.contracts, report.nonadv.menu.contracts);
        assert_eq!(poadv_bound(&report, &m), Some(1.0));
    }

    #[test]
    fn high_case_single_contract() {
        // Linear cost steeper than b_1 at the origin: above the curve
        // everywhere, yet cheap enough that slack fines keep prices positive.
        let m = demo_with_cost(
            2,
            AdversaryCost::Tabulated { knots: vec![(0.0, 0.0), (1.0, 12.0)] },
        );
        let report = approx_contracts(&m).unwrap();
        assert_eq!(report.class.kind, CostClassKind::High);
        let am = match &report.outcome {
            ApproxOutcome::Menu(am) => am,
            _ => panic!("expected a contract: slack fines are feasible here"),
        };
        assert_eq!(am.branch, Branch::HighSingle);
        assert_eq!(am.assignment, vec![2, 2]);
        // 0-slack: the adversary opts out.
        let (z, _) = adversary_best_response(&am.menu, &m);
        assert_eq!(z, 0);
        let bound = poadv_bound(&report, &m).unwrap();
        assert!(bound >= 1.0);
    }

    #[test]
    fn high_case_gamma_one_forces_solve_adv() {
        let mut m = demo_with_cost(2, AdversaryCost::ExpScaled { scale: 100.0 });
        m.gamma = 1.0;
        let report = approx_contracts(&m).unwrap();
        assert!(matches!(report.outcome, ApproxOutcome::SolveAdvCase));
        assert_eq!(poadv_bound(&report, &m), None);
    }

    #[test]
    fn intermediate_demo_validity_and_beta() {
        let mut m = demo_model(10, 1001);
        m.gamma = 0.5;
        m.rho = 0.3;
        let report = approx_contracts(&m).unwrap();
        assert_eq!(report.class.kind, CostClassKind::Intermediate);
        let am = match &report.outcome {
            ApproxOutcome::Menu(am) => am,
            _ => panic!("intermediate always outputs contracts"),
        };
        assert!(am.menu.check(&m).is_empty());
        let delta = report.class.delta.unwrap();
        assert!(am.beta.unwrap() <= delta + 1e-7, "beta <= Delta");
        // Effective-price preservation for the reassigned types.
        let k = am.k.unwrap();
        for i in (k + 1)..=m.n {
            let assigned = am.assignment[i - 1];
            let p_eff = am.menu.effective_prices[i - 1];
            assert!((p_eff - report.nonadv.prices()[assigned - 1]).abs() < 1e-12);
        }
        // Adversary gain bounded by Delta when the new menu is returned.
        if am.branch == Branch::InterNew {
            let (_, gain) = adversary_best_response(&am.menu, &m);
            assert!(gain <= delta + 1e-7);
        }
        // Guaranteed bound dominates the measured PoAdv.
        let bound = poadv_bound(&report, &m).unwrap();
        let po = poadv_of_menu(&am.menu, report.nonadv.revenue_star, &m);
        match po.value {
            PoAdv::Finite(v) => assert!(v <= bound + 1e-7, "{v} vs {bound}"),
            PoAdv::Unbounded => assert!(bound.is_infinite()),
        }
    }

    #[test]
    fn intermediate_branch_choice_by_gamma() {
        // Small gamma: slack fines barely dent the price (cost 1/(1-gamma)
        // per unit of deterrence is cheap), so the new menu wins the comparison.
        let mut m = demo_model(10, 1001);
        m.gamma = 0.01;
        m.rho = 0.1;
        let report = approx_contracts(&m).unwrap();
        let am = match &report.outcome {
            ApproxOutcome::Menu(am) => am,
            _ => panic!(),
        };
        assert_eq!(am.branch, Branch::InterNew);
        let r = realized_revenue(&am.menu, adversary_best_response(&am.menu, &m).0, &m);
        assert!(r > 0.0);

        // Large gamma + small rho: deterrence is expensive and the adversary
        // mass is small, so the original menu wins the comparison.
        let mut m2 = demo_model(10, 1001);
        m2.gamma = 0.95;
        m2.rho = 0.05;
        let report2 = approx_contracts(&m2).unwrap();
        let am2 = match &report2.outcome {
            ApproxOutcome::Menu(am) => am,
            _ => panic!(),
        };
        assert_eq!(am2.branch, Branch::InterOriginal);
        assert_eq!(am2.menu.contracts, report2.nonadv.menu.contracts);
    }
}
