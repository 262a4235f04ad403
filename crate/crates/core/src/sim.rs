//! Monte Carlo market simulation: sample a buyer population, let honest
//! buyers pick contracts by expected utility and the adversary best-respond,
//! sample attack events for the fine cash flows, and compare the empirical
//! mean revenue with the analytical objective.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adv::adversary_best_response;
use crate::model::{ContractMenu, MarketModel};

#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Mean per-buyer revenue.
    pub empirical_revenue: f64,
    pub std_error: f64,
    /// Rows: true type (0 = adversary, 1..n). Columns: chosen contract
    /// (0 = opt-out, 1..n). Sums to the sample count.
    pub histogram: Vec<Vec<u64>>,
    /// The adversary's (deterministic) best response.
    pub adversary_choice: usize,
    pub samples: usize,
    /// Revenue booked per true type (0 = adversary), same row order as the
    /// histogram.
    pub payment_sums: Vec<f64>,
}

/// Honest type `i`'s expected-utility choice over opt-out and all contracts:
/// `argmax_j b_i(eps_j) - p'_j` with opt-out utility 0. A buyer purchases at
/// zero utility, and ties between contracts go to the buyer's own slot, then
/// the smaller index.
pub fn honest_choice(i: usize, menu: &ContractMenu, m: &MarketModel) -> usize {
    let tol = m.tol.ir_ic;
    let utilities: Vec<f64> = menu
        .contracts
        .iter()
        .zip(&menu.effective_prices)
        .map(|(c, &p)| m.benefit(i, c.eps) - p)
        .collect();
    let max_u = utilities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // Ties (within IR/IC tolerance, where tight IC makes types exactly
    // indifferent up to rounding) go to the buyer's own slot, then the
    // smallest index.
    let pick = if utilities[i - 1] >= max_u - tol {
        i
    } else {
        1 + utilities.iter().position(|&u| u >= max_u - tol).unwrap()
    };
    if utilities[pick - 1] < -tol {
        0
    } else {
        pick
    }
}

/// Contract index each honest type picks; types whose pick is not their own
/// slot (or opt-out) reveal IC/IR violations of the menu as offered.
pub fn check_ic_empirically(menu: &ContractMenu, m: &MarketModel) -> Vec<usize> {
    (1..=m.n).map(|i| honest_choice(i, menu, m)).collect()
}

pub fn simulate(menu: &ContractMenu, m: &MarketModel, cfg: &SimConfig) -> SimReport {
    assert!(cfg.samples >= 1);
    assert!(menu.len() == m.n);

    let n = m.n;
    let choices: Vec<usize> = check_ic_empirically(menu, m);
    let (z, _) = adversary_best_response(menu, m);
    // Cumulative type distribution: adversary mass rho, then (1-rho) q_i.
    let mut cum = Vec::with_capacity(n);
    let mut acc = m.rho;
    for qi in &m.q {
        acc += (1.0 - m.rho) * qi;
        cum.push(acc);
    }
    let adv_value = if z == 0 {
        0.0
    } else {
        let c = &menu.contracts[z - 1];
        c.p + c.s - m.cost_at(c.eps)
    };

    let mut histogram = vec![vec![0u64; n + 1]; n + 1];
    let mut payment_sums = vec![0.0f64; n + 1];
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for buyer in 0..cfg.samples {
        // Per-buyer substream: results do not depend on how buyers would be
        // partitioned across workers.
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(buyer as u64);
        let u: f64 = rng.gen();
        let (row, value) = if u < m.rho {
            histogram[0][z] += 1;
            (0, adv_value)
        } else {
            let ty = 1 + cum.iter().position(|&c| u < c).unwrap_or(n - 1);
            let j = choices[ty - 1];
            histogram[ty][j] += 1;
            let v = if j == 0 {
                0.0
            } else {
                let c = &menu.contracts[j - 1];
                let attacked = rng.gen::<f64>() < m.gamma;
                c.p + if attacked { c.s } else { 0.0 }
            };
            (ty, v)
        };
        payment_sums[row] += value;
        sum += value;
        sum_sq += value * value;
    }

    let nf = cfg.samples as f64;
    let mean = sum / nf;
    let var = ((sum_sq / nf) - mean * mean).max(0.0);
    let std_error = if cfg.samples > 1 { (var / (nf - 1.0)).sqrt() } else { 0.0 };
    SimReport {
        empirical_revenue: mean,
        std_error,
        histogram,
        adversary_choice: z,
        samples: cfg.samples,
        payment_sums,
    }
}
