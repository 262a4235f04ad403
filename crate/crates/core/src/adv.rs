//! Adversarial contract design: best response, revenue accounting, the exact
//! branch-and-bound solver, and the Price of Adversary metric.
//!
//! The search space is menus in tight-recursion form: monotone privacy
//! levels, prices pinned to the effective-price recursion, fines at the SR
//! cap. For `gamma < 1` the adversary's gain `C - p' - (1-gamma) s` is
//! strictly decreasing in `s`, so capped fines dominate; for `gamma = 1` all
//! cap-feasible fines are revenue-equivalent.

use thiserror::Error;

use crate::model::{Contract, ContractMenu, MarketModel, ValidationReport};
use crate::nonadv::{self, NonAdvError};

pub const DEFAULT_NODE_CAP: u64 = 50_000_000;

#[derive(Debug, Error)]
pub enum AdvError {
    #[error("invalid model: {0}")]
    InvalidModel(ValidationReport),
    #[error(transparent)]
    NonAdv(#[from] NonAdvError),
}

/// Solution of the adversarial program.
#[derive(Debug, Clone)]
pub struct AdvSolution {
    pub menu: ContractMenu,
    pub eps_star: Vec<f64>,
    /// Adversary's best response; 0 means opt out.
    pub z: usize,
    /// Realized revenue `R*_A`.
    pub revenue_adv: f64,
    /// `(1 - rho) sum_i q_i p'_i`.
    pub honest_revenue: f64,
    /// `rho (p_Z + s_Z - C(eps_Z))`, zero when the adversary opts out.
    pub adversary_term: f64,
    /// False when the node cap was hit; the solution is then best-found.
    pub complete: bool,
    pub nodes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoAdv {
    Finite(f64),
    Unbounded,
}

impl std::fmt::Display for PoAdv {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PoAdv::Finite(v) => write!(f, "{v}"),
            PoAdv::Unbounded => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PoAdvResult {
    pub value: PoAdv,
    pub r_star: f64,
    pub r_adv_star: f64,
}

/// Adversary gain from each contract: `C(eps_i) - p_i - s_i`.
pub fn adversary_gains(menu: &ContractMenu, m: &MarketModel) -> Vec<f64> {
    menu.contracts.iter().map(|c| m.cost_at(c.eps) - c.p - c.s).collect()
}

/// Best response over opt-out (index 0, utility 0) and the n contracts.
/// Exact ties prefer opt-out, then the smaller index.
pub fn adversary_best_response(menu: &ContractMenu, m: &MarketModel) -> (usize, f64) {
    let mut z = 0usize;
    let mut best = 0.0f64;
    for (i, gain) in adversary_gains(menu, m).into_iter().enumerate() {
        if gain > best {
            best = gain;
            z = i + 1;
        }
    }
    (z, best)
}

/// Seller revenue given the adversary's choice:
/// `(1 - rho) sum q_i p'_i + rho (p_Z + s_Z - C(eps_Z))`, second term zero at
/// opt-out.
pub fn realized_revenue(menu: &ContractMenu, z: usize, m: &MarketModel) -> f64 {
    assert!(z <= menu.len(), "adversary choice {z} out of range");
    let honest: f64 = m.q.iter().zip(&menu.effective_prices).map(|(q, p)| q * p).sum();
    let adv = if z == 0 {
        0.0
    } else {
        let c = &menu.contracts[z - 1];
        c.p + c.s - m.cost_at(c.eps)
    };
    (1.0 - m.rho) * honest + m.rho * adv
}

/// Capped fines solving SR with equality: `s_i = min(s_max, phi p'_i / gamma)`
/// for `gamma > 0`, else `s_max`. Returns `(p, s)` pairs with `p = p' - gamma s`.
pub fn fine_at_cap(p_prime: &[f64], m: &MarketModel) -> Vec<(f64, f64)> {
    assert!(m.gamma <= 1.0, "gamma > 1 is not a probability");
    p_prime
        .iter()
        .map(|&pp| {
            debug_assert!(pp >= -1e-12);
            let s = if m.gamma > 0.0 {
                m.s_max.min(m.phi * pp / m.gamma)
            } else {
                m.s_max
            };
            (pp - m.gamma * s, s)
        })
        .collect()
}

fn menu_from_eps(eps: &[f64], m: &MarketModel) -> Result<ContractMenu, NonAdvError> {
    let p_prime = nonadv::effective_prices(eps, m)?;
    let contracts = fine_at_cap(&p_prime, m)
        .into_iter()
        .zip(eps)
        .map(|((p, s), &e)| Contract { p, eps: e, s })
        .collect();
    Ok(ContractMenu::new(contracts, m.gamma))
}

/// Exact solve by depth-first search over monotone grid index vectors with
/// branch-and-bound pruning.
pub fn solve_adv_exact(m: &MarketModel) -> Result<AdvSolution, AdvError> {
    solve_adv_exact_with(m, DEFAULT_NODE_CAP)
}

pub fn solve_adv_exact_with(m: &MarketModel, node_cap: u64) -> Result<AdvSolution, AdvError> {
    let report = m.validate();
    if !report.is_valid() {
        return Err(AdvError::InvalidModel(report));
    }

    let grid = m.grid();
    let mm = grid.len();
    let n = m.n;
    // Per-type grids of virtual values, benefits, and cost.
    let g: Vec<Vec<f64>> = (1..=n)
        .map(|i| grid.iter().map(|&e| nonadv::virtual_value(i, e, m).unwrap()).collect())
        .collect();
    let b: Vec<Vec<f64>> = (1..=n)
        .map(|i| grid.iter().map(|&e| m.benefit(i, e)).collect())
        .collect();
    let cost: Vec<f64> = grid.iter().map(|&e| m.cost_at(e)).collect();
    // smax[i][t] = max over t' >= t of g[i][t'] (optimistic completion).
    let smax: Vec<Vec<f64>> = g
        .iter()
        .map(|gi| {
            let mut out = gi.clone();
            for t in (0..mm - 1).rev() {
                out[t] = out[t].max(out[t + 1]);
            }
            out
        })
        .collect();
    // suffix_opt[i][t] = sum over j >= i of smax[j][t]: optimistic revenue of
    // completing coordinates i.. with all indices >= t.
    let mut suffix_opt = vec![vec![0.0; mm]; n + 1];
    for i in (0..n).rev() {
        for t in 0..mm {
            suffix_opt[i][t] = suffix_opt[i + 1][t] + smax[i][t];
        }
    }

    struct Search<'a> {
        m: &'a MarketModel,
        grid: &'a [f64],
        b: &'a [Vec<f64>],
        cost: &'a [f64],
        suffix_opt: &'a [Vec<f64>],
        // Current path state.
        idx: Vec<usize>,
        p_prime: Vec<f64>,
        best: f64,
        best_idx: Vec<usize>,
        nodes: u64,
        node_cap: u64,
        capped: bool,
    }

    impl Search<'_> {
        // gain of the capped-fine contract at (t, p').
        fn gain(&self, t: usize, pp: f64) -> f64 {
            let s = if self.m.gamma > 0.0 {
                self.m.s_max.min(self.m.phi * pp / self.m.gamma)
            } else {
                self.m.s_max
            };
            self.cost[t] - pp + self.m.gamma * s - s
        }

        /// `i`: next coordinate to assign; `t_min`: monotonicity lower bound;
        /// `partial`: sum of q_j p'_j over assigned coordinates; `worst_gain`:
        /// max adversary gain among assigned contracts (>= 0 via opt-out).
        fn dfs(&mut self, i: usize, t_min: usize, partial: f64, worst_gain: f64) {
            let n = self.m.n;
            let rho = self.m.rho;
            if i == n {
                let value = (1.0 - rho) * partial - rho * worst_gain;
                if value > self.best {
                    self.best = value;
                    self.best_idx = self.idx.clone();
                }
                return;
            }
            for t in t_min..self.grid.len() {
                if self.capped {
                    return;
                }
                self.nodes += 1;
                if self.nodes > self.node_cap {
                    self.capped = true;
                    return;
                }
                let pp = if i == 0 {
                    self.b[0][t]
                } else {
                    self.p_prime[i - 1] + self.b[i][t] - self.b[i][self.idx[i - 1]]
                };
                let qp = self.m.q[i] * pp;
                let wg = worst_gain.max(self.gain(t, pp));
                // Upper bound: optimistic completion of the honest term minus
                // the already-committed adversary loss.
                let bound =
                    (1.0 - rho) * (partial + qp + self.suffix_opt[i + 1][t]) - rho * wg;
                if bound <= self.best {
                    continue;
                }
                self.idx[i] = t;
                self.p_prime[i] = pp;
                self.dfs(i + 1, t, partial + qp, wg);
            }
        }
    }

    let mut search = Search {
        m,
        grid: &grid,
        b: &b,
        cost: &cost,
        suffix_opt: &suffix_opt,
        idx: vec![0; n],
        p_prime: vec![0.0; n],
        best: f64::NEG_INFINITY,
        best_idx: vec![0; n],
        nodes: 0,
        node_cap,
        capped: false,
    };
    search.dfs(0, 0, 0.0, 0.0);
    let (best_idx, nodes, capped) = (search.best_idx, search.nodes, search.capped);

    let eps_star: Vec<f64> = best_idx.iter().map(|&t| grid[t]).collect();
    let menu = menu_from_eps(&eps_star, m)?;
    let (z, _) = adversary_best_response(&menu, m);
    let revenue_adv = realized_revenue(&menu, z, m);
    let honest: f64 = m.q.iter().zip(&menu.effective_prices).map(|(q, p)| q * p).sum();
    let honest_revenue = (1.0 - m.rho) * honest;
    Ok(AdvSolution {
        menu,
        eps_star,
        z,
        revenue_adv,
        honest_revenue,
        adversary_term: revenue_adv - honest_revenue,
        complete: !capped,
        nodes,
    })
}

/// PoAdv of a given menu against the non-adversarial optimum `r_star`.
pub fn poadv_of_menu(menu: &ContractMenu, r_star: f64, m: &MarketModel) -> PoAdvResult {
    let (z, _) = adversary_best_response(menu, m);
    let r_adv = realized_revenue(menu, z, m);
    poadv_from_revenues(r_star, r_adv, m.rho)
}

pub fn poadv_from_revenues(r_star: f64, r_adv_star: f64, rho: f64) -> PoAdvResult {
    let value = if r_adv_star > 0.0 {
        PoAdv::Finite((1.0 - rho) * r_star / r_adv_star)
    } else {
        PoAdv::Unbounded
    };
    PoAdvResult { value, r_star, r_adv_star }
}

/// `PoAdv = (1 - rho) R* / R*_A` with the Unbounded sentinel at `R*_A <= 0`.
pub fn price_of_adversary(m: &MarketModel) -> Result<PoAdvResult, AdvError> {
    let nonadv_sol = nonadv::solve_nonadv(m)?;
    let adv_sol = solve_adv_exact(m)?;
    Ok(poadv_from_revenues(nonadv_sol.revenue_star, adv_sol.revenue_adv, m.rho))
}
