//! Ready-made problem instances used by the bundled scenarios, the benchmark
//! command, and the test suites.

use rand::Rng;

use crate::model::{AdversaryCost, BenefitFunction, MarketModel, Tolerances, DEFAULT_S_MAX};

/// Saturating-exponential demo family: `b_i(eps) = i (1 - exp(-10 eps / i))`
/// with adversary cost `C(eps) = 6 (exp(eps) - 1)`, uniform shares, and
/// `phi = 0.95`.
pub fn demo_model(n: usize, grid_m: usize) -> MarketModel {
    let benefits = (1..=n)
        .map(|i| BenefitFunction::ScaledSaturatingExp {
            scale: i as f64,
            rate: 10.0 / i as f64,
        })
        .collect();
    MarketModel {
        n,
        q: vec![1.0 / n as f64; n],
        rho: 0.1,
        gamma: 0.1,
        phi: 0.95,
        benefits,
        cost: AdversaryCost::ExpScaled { scale: 6.0 },
        grid_m,
        s_max: DEFAULT_S_MAX,
        tol: Tolerances::default(),
    }
}

/// Two-type logarithmic instance with a deterrence-dominant adversary cost
/// `C(eps) = (10/rho + 2(1-gamma)/(rho gamma)) (exp(eps) - 1)`: the adversary
/// cost scale is chosen so that offering any positive privacy level loses
/// money, driving the adversarial optimum to zero revenue.
pub fn log_pair_model(rho: f64, gamma: f64, q_low: f64, grid_m: usize) -> MarketModel {
    assert!(rho > 0.0 && gamma > 0.0);
    let scale = 10.0 / rho + 2.0 * (1.0 - gamma) / (rho * gamma);
    MarketModel {
        n: 2,
        q: vec![q_low, 1.0 - q_low],
        rho,
        gamma,
        phi: 0.95,
        benefits: vec![
            BenefitFunction::Log1p { scale: 1.0 },
            BenefitFunction::Log1p { scale: 2.0 },
        ],
        cost: AdversaryCost::ExpScaled { scale },
        grid_m,
        s_max: DEFAULT_S_MAX,
        tol: Tolerances::default(),
    }
}

/// Random valid instance: benefits drawn from one of the parametric families
/// with type-ordered scales (which guarantees ordering and increasing
/// differences), random simplex shares, and a random exponential cost scale.
pub fn random_model(rng: &mut impl Rng, n: usize, grid_m: usize) -> MarketModel {
    let benefits: Vec<BenefitFunction> = match rng.gen_range(0..3) {
        0 => {
            let c = rng.gen_range(0.5..3.0);
            let r = rng.gen_range(3.0..12.0);
            (1..=n)
                .map(|i| BenefitFunction::ScaledSaturatingExp {
                    scale: c * i as f64,
                    rate: r / i as f64,
                })
                .collect()
        }
        1 => {
            let beta = rng.gen_range(0.3..=1.0);
            let mut scales: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..5.0)).collect();
            scales.sort_by(|a, b| a.partial_cmp(b).unwrap());
            scales
                .into_iter()
                .map(|a| BenefitFunction::Power { scale: a, exponent: beta })
                .collect()
        }
        _ => {
            let mut scales: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..5.0)).collect();
            scales.sort_by(|a, b| a.partial_cmp(b).unwrap());
            scales.into_iter().map(|a| BenefitFunction::Log1p { scale: a }).collect()
        }
    };
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = q.iter().sum();
    for qi in &mut q {
        *qi /= total;
    }
    MarketModel {
        n,
        q,
        rho: rng.gen_range(0.05..0.9),
        gamma: rng.gen_range(0.05..0.95),
        phi: 0.95,
        benefits,
        cost: AdversaryCost::ExpScaled { scale: rng.gen_range(0.5..20.0) },
        grid_m,
        s_max: DEFAULT_S_MAX,
        tol: Tolerances::default(),
    }
}
