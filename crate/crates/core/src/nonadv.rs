//! Non-adversarial contract design.
//!
//! The revenue objective separates across types into per-type virtual values
//! `g_i`; each `g_i` is maximized on the grid independently and adjacent
//! coordinates that violate privacy-level monotonicity are pooled and
//! re-maximized jointly (pool-adjacent-violators ironing). Prices follow from
//! the tight IR_1 / IC_{i+1,i} recursion, and fines are zero.

use thiserror::Error;

use crate::model::{Contract, ContractMenu, MarketModel, ModelError, ValidationReport};

#[derive(Debug, Error)]
pub enum NonAdvError {
    #[error("invalid model: {0}")]
    InvalidModel(ValidationReport),
    #[error("privacy levels must be monotone non-decreasing (eps[{0}] decreases)")]
    NonMonotoneEps(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Gridded curve: `values[t]` sampled at `grid[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl CurveTable {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len());
        assert!(grid.windows(2).all(|w| w[1] > w[0]), "grid must be strictly increasing");
        CurveTable { grid, values }
    }
}

/// Solution of the non-adversarial program.
#[derive(Debug, Clone)]
pub struct NonAdvSolution {
    /// Optimal privacy levels, monotone non-decreasing.
    pub eps_star: Vec<f64>,
    /// Menu with zero fines; prices equal effective prices.
    pub menu: ContractMenu,
    /// `R* = sum_i q_i p'_i`.
    pub revenue_star: f64,
    /// Price-contract curve sampled on the model grid.
    pub curve: CurveTable,
}

impl NonAdvSolution {
    pub fn prices(&self) -> &[f64] {
        &self.menu.effective_prices
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveOptions {
    /// Golden-section refinement of each winning grid cell (parametric
    /// families only). Sharpens optima without changing the contract
    /// structure; off by default.
    pub refine: bool,
}

/// Effective prices for a monotone privacy-level vector, by the tight
/// IR_1 / IC_{i+1,i} recursion:
/// `p'_1 = b_1(eps_1)`, `p'_i = p'_{i-1} + b_i(eps_i) - b_i(eps_{i-1})`.
pub fn effective_prices(eps: &[f64], m: &MarketModel) -> Result<Vec<f64>, NonAdvError> {
    for (i, w) in eps.windows(2).enumerate() {
        if w[1] < w[0] {
            return Err(NonAdvError::NonMonotoneEps(i + 1));
        }
    }
    for &e in eps {
        if !(0.0..=1.0).contains(&e) {
            return Err(NonAdvError::Model(ModelError::EpsOutOfRange(e)));
        }
    }
    let mut p = Vec::with_capacity(eps.len());
    for i in 1..=eps.len() {
        let pi = if i == 1 {
            m.benefit(1, eps[0])
        } else {
            p[i - 2] + m.benefit(i, eps[i - 1]) - m.benefit(i, eps[i - 2])
        };
        p.push(pi);
    }
    Ok(p)
}

/// Per-type virtual value `g_i(eps) = Q_{>=i} b_i(eps) - Q_{>=i+1} b_{i+1}(eps)`
/// where `Q_{>=i}` is the share of types `i` and above. Summing `g_i(eps_i)`
/// over types recovers the revenue of the tight-price menu.
pub fn virtual_value(i: usize, eps: f64, m: &MarketModel) -> Result<f64, ModelError> {
    if i < 1 || i > m.n {
        return Err(ModelError::TypeIndexOutOfRange(i, m.n));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(ModelError::EpsOutOfRange(eps));
    }
    let head = m.share_from(i) * m.benefit(i, eps);
    let tail = if i < m.n { m.share_from(i + 1) * m.benefit(i + 1, eps) } else { 0.0 };
    Ok(head - tail)
}

/// Solve the non-adversarial program on the model grid.
pub fn solve_nonadv(m: &MarketModel) -> Result<NonAdvSolution, NonAdvError> {
    solve_nonadv_with(m, SolveOptions::default())
}

pub fn solve_nonadv_with(
    m: &MarketModel,
    opts: SolveOptions,
) -> Result<NonAdvSolution, NonAdvError> {
    let report = m.validate();
    if !report.is_valid() {
        return Err(NonAdvError::InvalidModel(report));
    }

    let grid = m.grid();
    // g[i][t]: virtual value of type i+1 at grid point t.
    let g: Vec<Vec<f64>> = (1..=m.n)
        .map(|i| grid.iter().map(|&e| virtual_value(i, e, m).expect("grid point")).collect())
        .collect();

    // Pool-adjacent-violators on block argmaxes. Ties break toward the
    // smallest grid index so degenerate instances stay deterministic.
    struct Block {
        lo: usize,
        hi: usize,
        t: usize,
    }
    let block_argmax = |lo: usize, hi: usize| -> usize {
        let mut best_t = 0;
        let mut best = f64::NEG_INFINITY;
        for t in 0..grid.len() {
            let v: f64 = (lo..=hi).map(|j| g[j][t]).sum();
            if v > best {
                best = v;
                best_t = t;
            }
        }
        best_t
    };
    let mut blocks: Vec<Block> = Vec::with_capacity(m.n);
    for i in 0..m.n {
        blocks.push(Block { lo: i, hi: i, t: block_argmax(i, i) });
        while blocks.len() >= 2 && blocks[blocks.len() - 2].t > blocks[blocks.len() - 1].t {
            let b2 = blocks.pop().unwrap();
            let b1 = blocks.pop().unwrap();
            blocks.push(Block { lo: b1.lo, hi: b2.hi, t: block_argmax(b1.lo, b2.hi) });
        }
    }

    let mut eps_star = vec![0.0; m.n];
    for b in &blocks {
        let mut e = grid[b.t];
        if opts.refine && m.benefits.iter().all(|f| !f.is_tabulated()) {
            let lo = if b.t > 0 { grid[b.t - 1] } else { grid[0] };
            let hi = if b.t + 1 < grid.len() { grid[b.t + 1] } else { grid[grid.len() - 1] };
            let pooled = |x: f64| -> f64 {
                (b.lo..=b.hi).map(|j| virtual_value(j + 1, x, m).expect("in range")).sum()
            };
            let refined = golden_section_max(lo, hi, pooled);
            if pooled(refined) > pooled(e) {
                e = refined;
            }
        }
        for j in b.lo..=b.hi {
            eps_star[j] = e;
        }
    }

    let prices = effective_prices(&eps_star, m)?;
    let revenue_star: f64 = m.q.iter().zip(&prices).map(|(q, p)| q * p).sum();
    let contracts: Vec<Contract> = eps_star
        .iter()
        .zip(&prices)
        .map(|(&eps, &p)| Contract { p, eps, s: 0.0 })
        .collect();
    let menu = ContractMenu::new(contracts, m.gamma);
    let curve = price_contract_curve(&eps_star, &prices, m);

    Ok(NonAdvSolution { eps_star, menu, revenue_star, curve })
}

/// Price-contract curve through the contract points: `b_1` up to `eps*_1`,
/// then each segment parallel to the next type's benefit curve; extended
/// parallel to `b_n` beyond `eps*_n` so classification sees all of `[0, 1]`.
pub fn price_contract_curve(eps_star: &[f64], prices: &[f64], m: &MarketModel) -> CurveTable {
    let grid = m.grid();
    let values = grid.iter().map(|&e| curve_value(eps_star, prices, m, e)).collect();
    CurveTable::new(grid, values)
}

/// Analytic evaluation of the price-contract curve at one point.
pub fn curve_value(eps_star: &[f64], prices: &[f64], m: &MarketModel, eps: f64) -> f64 {
    debug_assert_eq!(eps_star.len(), m.n);
    if eps <= eps_star[0] {
        return m.benefit(1, eps);
    }
    for i in 2..=m.n {
        if eps <= eps_star[i - 1] {
            return prices[i - 2] + m.benefit(i, eps) - m.benefit(i, eps_star[i - 2]);
        }
    }
    prices[m.n - 1] + m.benefit(m.n, eps) - m.benefit(m.n, eps_star[m.n - 1])
}

fn golden_section_max(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}
