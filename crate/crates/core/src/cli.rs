//! Command surface: scenario ingestion, solver commands, sweeps, benchmarks,
//! simulation, and the DP query server, all emitting deterministic CSV.
//!
//! Exit codes: 0 success, 2 validation/usage failure, 3 budget exceedance
//! (search node cap hit, or DP privacy budget overrun).

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::adv::{
    adversary_best_response, poadv_from_revenues, realized_revenue, solve_adv_exact_with,
    DEFAULT_NODE_CAP,
};
use crate::approx::{self, ApproxOutcome};
use crate::dp::{self, BudgetLedger, Dataset, DpError};
use crate::model::{ContractMenu, MarketModel};
use crate::nonadv::solve_nonadv;
use crate::scenario::Scenario;
use crate::sim::{self, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

const SCHEMA: &str = "# privmarket-csv v1";

#[derive(Parser)]
#[command(
    name = "privmarket",
    version,
    about = "Contract-menu design for differentially private data marketplaces"
)]
pub struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    /// Exact adversarial branch-and-bound menu.
    Exact,
    /// Approximation-algorithm menu.
    Approx,
    /// Non-adversarial menu evaluated against the adversary.
    NonadvMenu,
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolverKind::Exact => "exact",
            SolverKind::Approx => "approx",
            SolverKind::NonadvMenu => "nonadv-menu",
        };
        f.write_str(s)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario against every model invariant.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Solve the non-adversarial program.
    SolveNonadv {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        grid_m: Option<usize>,
        /// Also export the price-contract curve as (eps, P) CSV.
        #[arg(long)]
        curve_out: Option<PathBuf>,
    },
    /// Solve the adversarial program exactly (branch and bound).
    SolveAdv {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        grid_m: Option<usize>,
        #[arg(long)]
        node_cap: Option<u64>,
    },
    /// Run the approximation algorithm.
    Approx {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        grid_m: Option<usize>,
    },
    /// Compute the Price of Adversary (exact solvers).
    Poadv {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        grid_m: Option<usize>,
        #[arg(long)]
        node_cap: Option<u64>,
    },
    /// PoAdv over a (gamma, rho) grid.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        grid_m: Option<usize>,
        #[arg(long)]
        node_cap: Option<u64>,
        /// Comma-separated gamma values.
        #[arg(long)]
        gamma_list: String,
        /// Comma-separated rho values.
        #[arg(long)]
        rho_list: String,
        #[arg(long, value_enum, default_value_t = SolverKind::Exact)]
        solver: SolverKind,
    },
    /// Monte Carlo simulation of a solved menu.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        grid_m: Option<usize>,
        #[arg(long)]
        node_cap: Option<u64>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Overrides the scenario's rng_seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = SolverKind::Exact)]
        solver: SolverKind,
    },
    /// Wall-time comparison of the three solvers over a range of n.
    Bench {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "2,3,4,5,6,7")]
        n_list: String,
        #[arg(long, default_value_t = 21)]
        grid_m: usize,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// Answer a batch of DP queries against a dataset under a budget ledger.
    DpServe {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        bounds: PathBuf,
        /// TOML file with [[query]] entries (kind, optional col, eps).
        #[arg(long)]
        queries: PathBuf,
        /// Total purchased privacy budget.
        #[arg(long)]
        purchased: f64,
        #[arg(long, default_value = "buyer")]
        buyer: String,
        /// Append-only journal path (replayable).
        #[arg(long)]
        journal: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run_cli() -> i32 {
    let cli = Cli::parse();
    run(cli)
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            eprintln!("{e}");
            EXIT_INVALID
        }
    }
}

fn run(cli: Cli) -> i32 {
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_INVALID
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<i32> {
    match cmd {
        Command::Validate { scenario } => {
            let sc = Scenario::load(&scenario)?;
            let report = sc.to_model().validate();
            if report.is_valid() {
                println!("valid");
                Ok(EXIT_OK)
            } else {
                println!("{report}");
                Ok(EXIT_INVALID)
            }
        }
        Command::SolveNonadv { scenario, out, grid_m, curve_out } => {
            let m = load_model(&scenario, grid_m)?;
            let sol = solve_nonadv(&m)?;
            let mut csv = String::new();
            push_schema(&mut csv, "solve-nonadv");
            csv.push_str("type_index,eps,price,fine,effective_price\n");
            for (i, c) in sol.menu.contracts.iter().enumerate() {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    i + 1,
                    c.eps,
                    c.p,
                    c.s,
                    sol.menu.effective_prices[i]
                ));
            }
            write_output(&out, &csv)?;
            if let Some(curve_path) = curve_out {
                let mut ccsv = String::new();
                push_schema(&mut ccsv, "price-contract-curve");
                ccsv.push_str("eps,P\n");
                for (e, v) in sol.curve.grid.iter().zip(&sol.curve.values) {
                    ccsv.push_str(&format!("{e},{v}\n"));
                }
                write_output(&Some(curve_path), &ccsv)?;
            }
            Ok(EXIT_OK)
        }
        Command::SolveAdv { scenario, out, grid_m, node_cap } => {
            let m = load_model(&scenario, grid_m)?;
            let sol = solve_adv_exact_with(&m, node_cap.unwrap_or(DEFAULT_NODE_CAP))?;
            let mut csv = String::new();
            push_schema(&mut csv, "solve-adv");
            csv.push_str("record,type_index,eps,price,fine,effective_price,z,r_adv,complete\n");
            for (i, c) in sol.menu.contracts.iter().enumerate() {
                csv.push_str(&format!(
                    "contract,{},{},{},{},{},,,\n",
                    i + 1,
                    c.eps,
                    c.p,
                    c.s,
                    sol.menu.effective_prices[i]
                ));
            }
            csv.push_str(&format!(
                "summary,,,,,,{},{},{}\n",
                sol.z, sol.revenue_adv, sol.complete
            ));
            write_output(&out, &csv)?;
            Ok(if sol.complete { EXIT_OK } else { EXIT_BUDGET })
        }
        Command::Approx { scenario, out, grid_m } => {
            let m = load_model(&scenario, grid_m)?;
            let report = approx::approx_contracts(&m)?;
            let bound = approx::poadv_bound(&report, &m);
            let mut csv = String::new();
            push_schema(&mut csv, "approx");
            csv.push_str(
                "record,type_index,assigned_index,eps,price,fine,effective_price,value\n",
            );
            csv.push_str(&format!("class,,,,,,,{}\n", report.class.kind));
            if let Some(eps_m) = report.class.eps_m {
                csv.push_str(&format!("eps_m,,,,,,,{eps_m}\n"));
            }
            if let Some(delta) = report.class.delta {
                csv.push_str(&format!("delta,,,,,,,{delta}\n"));
            }
            match &report.outcome {
                ApproxOutcome::SolveAdvCase => {
                    csv.push_str("branch,,,,,,,solve-adv-case\n");
                }
                ApproxOutcome::Menu(am) => {
                    csv.push_str(&format!("branch,,,,,,,{}\n", am.branch));
                    for (key, v) in [
                        ("lambda", am.lambda),
                        ("r_hat", am.r_hat),
                        ("alpha", am.alpha),
                        ("beta", am.beta),
                    ] {
                        if let Some(v) = v {
                            csv.push_str(&format!("{key},,,,,,,{v}\n"));
                        }
                    }
                    if let Some(b) = bound {
                        csv.push_str(&format!("bound,,,,,,,{}\n", fmt_f64_or_inf(b)));
                    }
                    for (i, c) in am.menu.contracts.iter().enumerate() {
                        csv.push_str(&format!(
                            "contract,{},{},{},{},{},{},\n",
                            i + 1,
                            am.assignment[i],
                            c.eps,
                            c.p,
                            c.s,
                            am.menu.effective_prices[i]
                        ));
                    }
                }
            }
            write_output(&out, &csv)?;
            Ok(EXIT_OK)
        }
        Command::Poadv { scenario, out, grid_m, node_cap } => {
            let m = load_model(&scenario, grid_m)?;
            let non = solve_nonadv(&m)?;
            let advsol = solve_adv_exact_with(&m, node_cap.unwrap_or(DEFAULT_NODE_CAP))?;
            let po = poadv_from_revenues(non.revenue_star, advsol.revenue_adv, m.rho);
            let mut csv = String::new();
            push_schema(&mut csv, "poadv");
            csv.push_str("r_star,r_adv_star,poadv,complete\n");
            csv.push_str(&format!(
                "{},{},{},{}\n",
                po.r_star, po.r_adv_star, po.value, advsol.complete
            ));
            write_output(&out, &csv)?;
            Ok(if advsol.complete { EXIT_OK } else { EXIT_BUDGET })
        }
        Command::Sweep { scenario, out, grid_m, node_cap, gamma_list, rho_list, solver } => {
            let base = load_model(&scenario, grid_m)?;
            let gammas = parse_list(&gamma_list)?;
            let rhos = parse_list(&rho_list)?;
            for &g in &gammas {
                anyhow::ensure!((0.0..=1.0).contains(&g), "gamma {g} outside [0, 1]");
            }
            for &r in &rhos {
                anyhow::ensure!((0.0..1.0).contains(&r), "rho {r} outside [0, 1)");
            }
            let cap = node_cap.unwrap_or(DEFAULT_NODE_CAP);
            let points: Vec<(f64, f64)> = gammas
                .iter()
                .flat_map(|&g| rhos.iter().map(move |&r| (g, r)))
                .collect();
            let rows: Vec<anyhow::Result<(String, bool)>> = points
                .par_iter()
                .map(|&(g, r)| {
                    let mut m = base.clone();
                    m.gamma = g;
                    m.rho = r;
                    let (row, complete) = sweep_point(&m, solver, cap)?;
                    Ok((format!("{g},{r},{solver},{row}\n"), complete))
                })
                .collect();
            let mut csv = String::new();
            push_schema(&mut csv, "sweep");
            csv.push_str("gamma,rho,solver,r_star,r_adv,poadv,complete\n");
            let mut all_complete = true;
            for row in rows {
                let (line, complete) = row?;
                all_complete &= complete;
                csv.push_str(&line);
            }
            write_output(&out, &csv)?;
            Ok(if all_complete { EXIT_OK } else { EXIT_BUDGET })
        }
        Command::Simulate { scenario, out, grid_m, node_cap, samples, seed, solver } => {
            let sc = Scenario::load(&scenario)?;
            let m = model_from(&sc, grid_m)?;
            let cap = node_cap.unwrap_or(DEFAULT_NODE_CAP);
            let (menu, complete) = menu_for(&m, solver, cap)?;
            let seed = seed.unwrap_or(sc.rng_seed);
            let report = sim::simulate(&menu, &m, &SimConfig { samples, seed });
            // Analytic expectation consistent with the simulated choice model.
            let choices = sim::check_ic_empirically(&menu, &m);
            let honest: f64 = m
                .q
                .iter()
                .zip(&choices)
                .map(|(q, &j)| if j == 0 { 0.0 } else { q * menu.effective_prices[j - 1] })
                .sum();
            let adv_value = {
                let (z, _) = adversary_best_response(&menu, &m);
                if z == 0 {
                    0.0
                } else {
                    let c = &menu.contracts[z - 1];
                    c.p + c.s - m.cost_at(c.eps)
                }
            };
            let analytic = (1.0 - m.rho) * honest + m.rho * adv_value;

            let mut csv = String::new();
            push_schema(&mut csv, "simulate");
            csv.push_str(
                "record,type_index,share_drawn,modal_choice,mean_payment,\
                 empirical_revenue,std_error,analytic_revenue,adversary_choice\n",
            );
            for row in 0..=m.n {
                let drawn: u64 = report.histogram[row].iter().sum();
                let share = drawn as f64 / samples as f64;
                let modal = report.histogram[row]
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                    .map(|(j, _)| j)
                    .unwrap_or(0);
                let mean_pay =
                    if drawn > 0 { report.payment_sums[row] / drawn as f64 } else { 0.0 };
                let label = if row == 0 { "adversary".to_string() } else { row.to_string() };
                csv.push_str(&format!("type,{label},{share},{modal},{mean_pay},,,,\n"));
            }
            csv.push_str(&format!(
                "summary,,,,,{},{},{},{}\n",
                report.empirical_revenue, report.std_error, analytic, report.adversary_choice
            ));
            write_output(&out, &csv)?;
            Ok(if complete { EXIT_OK } else { EXIT_BUDGET })
        }
        Command::Bench { out, n_list, grid_m, repeats } => {
            let ns: Vec<usize> = n_list
                .split(',')
                .map(|s| s.trim().parse().map_err(|e| anyhow::anyhow!("bad n {s:?}: {e}")))
                .collect::<anyhow::Result<_>>()?;
            anyhow::ensure!(repeats >= 1, "repeats must be >= 1");
            let mut csv = String::new();
            push_schema(&mut csv, "bench");
            csv.push_str("n,wall_ms_nonadv,wall_ms_exact,wall_ms_approx\n");
            for &n in &ns {
                let m = crate::presets::demo_model(n, grid_m);
                let t_non = time_min(repeats, || {
                    solve_nonadv(&m).unwrap();
                });
                let t_exact = time_min(repeats, || {
                    solve_adv_exact_with(&m, DEFAULT_NODE_CAP).unwrap();
                });
                let t_approx = time_min(repeats, || {
                    approx::approx_contracts(&m).unwrap();
                });
                csv.push_str(&format!("{n},{t_non},{t_exact},{t_approx}\n"));
            }
            write_output(&out, &csv)?;
            Ok(EXIT_OK)
        }
        Command::DpServe { dataset, bounds, queries, purchased, buyer, journal, seed, out } => {
            let ds = Dataset::load(&dataset, &bounds)?;
            let text = std::fs::read_to_string(&queries)?;
            #[derive(serde::Deserialize)]
            struct QueryFile {
                query: Vec<dp::Query>,
            }
            let qf: QueryFile = toml::from_str(&text)?;
            let mut ledger = BudgetLedger::new(buyer, purchased);
            if let Some(j) = journal {
                ledger = ledger.with_journal(j);
            }
            let mut csv = String::new();
            push_schema(&mut csv, "dp-serve");
            csv.push_str("query,eps,answer\n");
            for (i, q) in qf.query.iter().enumerate() {
                match dp::answer_query(&mut ledger, q, &ds, seed.wrapping_add(i as u64)) {
                    Ok(ans) => csv.push_str(&format!("{},{},{}\n", q.kind, q.eps, ans)),
                    Err(e @ DpError::BudgetExceeded { .. }) => {
                        write_output(&out, &csv)?;
                        eprintln!("error: {e}");
                        return Ok(EXIT_BUDGET);
                    }
                    Err(e) => {
                        write_output(&out, &csv)?;
                        eprintln!("error: {e}");
                        return Ok(EXIT_INVALID);
                    }
                }
            }
            write_output(&out, &csv)?;
            Ok(EXIT_OK)
        }
    }
}

fn sweep_point(
    m: &MarketModel,
    solver: SolverKind,
    cap: u64,
) -> anyhow::Result<(String, bool)> {
    let non = solve_nonadv(m)?;
    let r_star = non.revenue_star;
    let (r_adv, complete) = match solver {
        SolverKind::Exact => {
            let sol = solve_adv_exact_with(m, cap)?;
            (sol.revenue_adv, sol.complete)
        }
        SolverKind::Approx => {
            let report = approx::approx_contracts_from(non.clone(), m)?;
            match &report.outcome {
                ApproxOutcome::Menu(am) => {
                    let (z, _) = adversary_best_response(&am.menu, m);
                    (realized_revenue(&am.menu, z, m), true)
                }
                ApproxOutcome::SolveAdvCase => {
                    let sol = solve_adv_exact_with(m, cap)?;
                    (sol.revenue_adv, sol.complete)
                }
            }
        }
        SolverKind::NonadvMenu => {
            let (z, _) = adversary_best_response(&non.menu, m);
            (realized_revenue(&non.menu, z, m), true)
        }
    };
    let po = poadv_from_revenues(r_star, r_adv, m.rho);
    Ok((format!("{r_star},{r_adv},{}", po.value), complete))
}

fn menu_for(m: &MarketModel, solver: SolverKind, cap: u64) -> anyhow::Result<(ContractMenu, bool)> {
    Ok(match solver {
        SolverKind::Exact => {
            let sol = solve_adv_exact_with(m, cap)?;
            (sol.menu, sol.complete)
        }
        SolverKind::Approx => {
            let report = approx::approx_contracts(m)?;
            match report.outcome {
                ApproxOutcome::Menu(am) => (am.menu, true),
                ApproxOutcome::SolveAdvCase => {
                    let sol = solve_adv_exact_with(m, cap)?;
                    (sol.menu, sol.complete)
                }
            }
        }
        SolverKind::NonadvMenu => (solve_nonadv(m)?.menu, true),
    })
}

fn load_model(path: &PathBuf, grid_m: Option<usize>) -> anyhow::Result<MarketModel> {
    let sc = Scenario::load(path)?;
    model_from(&sc, grid_m)
}

fn model_from(sc: &Scenario, grid_m: Option<usize>) -> anyhow::Result<MarketModel> {
    let mut m = sc.to_model();
    if let Some(g) = grid_m {
        m.grid_m = g;
    }
    let report = m.validate();
    anyhow::ensure!(report.is_valid(), "invalid scenario:\n{report}");
    Ok(m)
}

fn parse_list(s: &str) -> anyhow::Result<Vec<f64>> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse().map_err(|e| anyhow::anyhow!("bad value {t:?}: {e}")))
        .collect::<anyhow::Result<_>>()?;
    anyhow::ensure!(!vals.is_empty(), "empty list");
    Ok(vals)
}

fn fmt_f64_or_inf(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

fn push_schema(csv: &mut String, name: &str) {
    csv.push_str(&format!("{SCHEMA} {name}\n"));
}

fn write_output(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn time_min(repeats: usize, mut f: impl FnMut()) -> f64 {
    let mut best = f64::INFINITY;
    for _ in 0..repeats {
        let start = Instant::now();
        f();
        best = best.min(start.elapsed().as_secs_f64() * 1e3);
    }
    best
}
