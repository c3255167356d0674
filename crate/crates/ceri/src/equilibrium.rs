//! Price computation and verification for competitive equilibrium from
//! random incomes.
//!
//! The solver runs a damped tatonnement over the excess-demand map
//! p_j -> min{(p_j + a * excess_j)^+, P} with geometric step decay and
//! multi-start. The map's fixed points are exactly the market-clearing
//! prices, but iteration is a heuristic: `verify_ceri` is the ground truth
//! and a non-converged outcome is reported as such, carrying the best
//! iterate found.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::demand::{bundle_probabilities, expected_demand};
use crate::model::{BudgetDistribution, Economy, LotteryAllocation, PriceVector};

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Price cap P; None derives (1 + max budget support) * n * delta, which
    /// prices every bundle out of reach so the clamp never binds at a true
    /// equilibrium.
    pub price_cap: Option<f64>,
    /// Initial damping step in (0, 1]. 1 recovers the undamped map.
    pub damping: f64,
    pub tol_clearing: f64,
    pub tol_slackness: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            price_cap: None,
            damping: 1.0,
            tol_clearing: 1e-6,
            tol_slackness: 1e-6,
            max_iters: 20_000,
            restarts: 8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CeriSolution {
    pub prices: PriceVector,
    pub allocation: LotteryAllocation,
    /// Per-good clearing error, aggregate expected demand minus capacity.
    pub residual: Vec<f64>,
    pub iterations: usize,
}

impl CeriSolution {
    /// Worst clearing violation: positive excess anywhere, or any imbalance
    /// on a positively priced good.
    pub fn score(&self, tol_slackness: f64) -> f64 {
        clearing_score(&self.prices.prices, &self.residual, tol_slackness)
    }
}

#[derive(Clone, Debug, Error)]
pub enum SolveError {
    #[error("economy has no agents or no goods")]
    EmptyEconomy,
    #[error("solver did not reach clearing tolerance (best score {best_score:.3e})")]
    NotConverged { best: CeriSolution, best_score: f64 },
}

/// Default price cap: any bundle then costs more than any budget.
pub fn default_price_cap(e: &Economy, budgets: &[BudgetDistribution]) -> f64 {
    let max_support = budgets.iter().map(BudgetDistribution::max_support).fold(0.0, f64::max);
    (1.0 + max_support) * e.num_agents().max(1) as f64 * e.delta().max(1) as f64
}

/// Aggregate expected demand minus capacities at the given prices.
pub fn excess_demand(
    e: &Economy,
    budgets: &[BudgetDistribution],
    prices: &PriceVector,
) -> Vec<f64> {
    let mut excess: Vec<f64> = e.capacities.iter().map(|&c| -(c as f64)).collect();
    for (agent, dist) in e.agents.iter().zip(budgets) {
        for (j, d) in expected_demand(agent, prices, dist).into_iter().enumerate() {
            excess[j] += d;
        }
    }
    excess
}

/// One damped step of the fixed-point map; `damping` = 1 is the raw map.
pub fn fixed_point_step(
    e: &Economy,
    budgets: &[BudgetDistribution],
    prices: &PriceVector,
    damping: f64,
) -> PriceVector {
    let excess = excess_demand(e, budgets, prices);
    let next = prices
        .prices
        .iter()
        .zip(&excess)
        .map(|(&p, &z)| (p + damping * z).max(0.0).min(prices.cap))
        .collect();
    PriceVector::new(next, prices.cap)
}

fn clearing_score(prices: &[f64], residual: &[f64], tol_slackness: f64) -> f64 {
    let mut score: f64 = 0.0;
    for (&p, &r) in prices.iter().zip(residual) {
        score = score.max(r);
        if p > tol_slackness {
            score = score.max(r.abs());
        }
    }
    score.max(0.0)
}

fn allocation_at(e: &Economy, budgets: &[BudgetDistribution], prices: &PriceVector) -> LotteryAllocation {
    LotteryAllocation::new(
        e.agents
            .iter()
            .zip(budgets)
            .map(|(agent, dist)| bundle_probabilities(agent, prices, dist))
            .collect(),
    )
}

/// Solve for approximately clearing prices. Discrete budget distributions
/// are accepted even though an exact equilibrium need not exist for them;
/// the best iterate is returned either way.
pub fn solve_ceri(
    e: &Economy,
    budgets: &[BudgetDistribution],
    cfg: &SolverConfig,
) -> Result<CeriSolution, SolveError> {
    if e.num_agents() == 0 || e.num_goods() == 0 {
        return Err(SolveError::EmptyEconomy);
    }
    assert_eq!(budgets.len(), e.num_agents(), "one budget distribution per agent");
    let cap = cfg.price_cap.unwrap_or_else(|| default_price_cap(e, budgets));
    let max_support = budgets.iter().map(BudgetDistribution::max_support).fold(0.0, f64::max);

    let mut best: Option<(f64, Vec<f64>, Vec<f64>, usize)> = None;
    let mut total_iters = 0usize;

    for restart in 0..cfg.restarts.max(1) {
        let mut prices = if restart == 0 {
            vec![0.0; e.num_goods()]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(restart as u64));
            (0..e.num_goods()).map(|_| rng.gen::<f64>() * max_support).collect()
        };
        let mut alpha = cfg.damping;
        let mut prev_score = f64::INFINITY;
        let mut stalled = 0usize;

        for _ in 0..cfg.max_iters {
            total_iters += 1;
            let pv = PriceVector::new(prices.clone(), cap);
            let excess = excess_demand(e, budgets, &pv);
            let score = clearing_score(&prices, &excess, cfg.tol_slackness);

            let better = best.as_ref().map_or(true, |(s, ..)| score < *s);
            if better {
                best = Some((score, prices.clone(), excess.clone(), total_iters));
            }
            if score <= cfg.tol_clearing {
                let pv = PriceVector::new(prices, cap);
                let allocation = allocation_at(e, budgets, &pv);
                let residual = excess;
                return Ok(CeriSolution { prices: pv, allocation, residual, iterations: total_iters });
            }

            if score > prev_score + cfg.tol_clearing {
                alpha = (alpha * 0.7).max(1e-5);
                stalled += 1;
            } else if score >= prev_score - cfg.tol_clearing {
                stalled += 1;
            } else {
                stalled = 0;
            }
            if stalled > 600 {
                break;
            }
            prev_score = score;

            for (p, &z) in prices.iter_mut().zip(&excess) {
                *p = (*p + alpha * z).max(0.0).min(cap);
            }
        }
    }

    let (best_score, prices, residual, iterations) = best.expect("at least one iterate");
    let pv = PriceVector::new(prices, cap);
    let allocation = allocation_at(e, budgets, &pv);
    Err(SolveError::NotConverged {
        best: CeriSolution { prices: pv, allocation, residual, iterations },
        best_score,
    })
}

/// A single verification violation; the report lists all of them.
#[derive(Clone, Debug, PartialEq)]
pub enum CeriViolation {
    /// Allocation mass differs from the recomputed demand lottery.
    MassMismatch { agent: usize, got: f64, want: f64 },
    /// Aggregate expected demand exceeds capacity.
    OverCapacity { good: usize, excess: f64 },
    /// Positively priced good does not clear with equality.
    NotClearing { good: usize, residual: f64 },
}

#[derive(Clone, Debug)]
pub struct CeriReport {
    pub is_ceri: bool,
    pub violations: Vec<CeriViolation>,
    pub residual: Vec<f64>,
}

/// Check Definition-style equilibrium conditions at tolerance `tol`:
/// (i) the allocation equals the recomputed demand lotteries, (ii) no good is
/// over-demanded in expectation, (iii) positively priced goods clear with
/// equality.
pub fn verify_ceri(
    e: &Economy,
    budgets: &[BudgetDistribution],
    prices: &PriceVector,
    allocation: &LotteryAllocation,
    tol: f64,
) -> CeriReport {
    let mut violations = Vec::new();

    for (i, (agent, dist)) in e.agents.iter().zip(budgets).enumerate() {
        let recomputed = bundle_probabilities(agent, prices, dist);
        let given = &allocation.per_agent[i];
        for bundle in recomputed.masses.keys().chain(given.masses.keys()) {
            let want = recomputed.mass(bundle);
            let got = given.mass(bundle);
            if (want - got).abs() > tol {
                violations.push(CeriViolation::MassMismatch { agent: i, got, want });
                break;
            }
        }
    }

    let aggregate = allocation.aggregate_expectation(e.num_goods());
    let mut residual = Vec::with_capacity(e.num_goods());
    for (j, (&agg, &cap)) in aggregate.iter().zip(&e.capacities).enumerate() {
        let r = agg - cap as f64;
        residual.push(r);
        if r > tol {
            violations.push(CeriViolation::OverCapacity { good: j, excess: r });
        }
        if prices.prices[j] > tol && r.abs() > tol {
            violations.push(CeriViolation::NotClearing { good: j, residual: r });
        }
    }

    CeriReport { is_ceri: violations.is_empty(), violations, residual }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentPreference, Bundle, BudgetDistribution as BD};

    fn unit(m: usize, j: usize) -> Bundle {
        let mut v = vec![0; m];
        v[j] = 1;
        Bundle(v)
    }

    fn sec3_economy() -> (Economy, Vec<BD>) {
        let agent = AgentPreference::new(vec![unit(2, 0), unit(2, 1)]);
        let e = Economy::new(vec![1, 1], vec![agent.clone(), agent]);
        let b = BD::discrete(&[(1.0, 0.5), (2.0, 0.5)]);
        (e, vec![b.clone(), b])
    }

    fn eating_example_economy() -> Economy {
        let ab = Bundle(vec![1, 1]);
        let a1 = AgentPreference::new(vec![ab.clone(), unit(2, 0), unit(2, 1)]);
        let a2 = AgentPreference::new(vec![ab, unit(2, 1), unit(2, 0)]);
        Economy::new(vec![1, 1], vec![a1, a2])
    }

    #[test]
    fn sec3_excess_is_zero_at_published_prices() {
        let (e, budgets) = sec3_economy();
        let p = PriceVector::new(vec![2.0, 1.0], 100.0);
        assert_eq!(excess_demand(&e, &budgets, &p), vec![0.0, 0.0]);
    }

    #[test]
    fn excess_at_zero_prices_sums_top_bundles() {
        let (e, budgets) = sec3_economy();
        let p = PriceVector::zeros(2, 100.0);
        // Both agents demand their top bundle {a}.
        assert_eq!(excess_demand(&e, &budgets, &p), vec![1.0, -1.0]);
    }

    #[test]
    fn excess_is_nonpositive_at_the_cap() {
        let (e, budgets) = sec3_economy();
        let cap = default_price_cap(&e, &budgets);
        let p = PriceVector::new(vec![cap, cap], cap);
        let excess = excess_demand(&e, &budgets, &p);
        assert!(excess.iter().all(|&z| z <= 0.0));
    }

    #[test]
    fn step_is_fixed_at_a_verified_equilibrium() {
        let (e, budgets) = sec3_economy();
        let p = PriceVector::new(vec![2.0, 1.0], 100.0);
        let next = fixed_point_step(&e, &budgets, &p, 1.0);
        assert_eq!(next.prices, p.prices);
    }

    #[test]
    fn step_clamps_negative_excess_at_zero() {
        let (e, budgets) = sec3_economy();
        // At zero prices everyone demands {a}: excess is (1, -1) and the
        // positive-part clamp keeps b's price at zero.
        let p = PriceVector::zeros(2, 100.0);
        let next = fixed_point_step(&e, &budgets, &p, 1.0);
        assert_eq!(next.prices, vec![1.0, 0.0]);
    }

    #[test]
    fn step_matches_demand_oracle_at_intermediate_prices() {
        let (e, budgets) = sec3_economy();
        let p = PriceVector::new(vec![1.5, 1.0], 100.0);
        // At (1.5, 1): budget 2 buys a, budget 1 buys b, for both agents.
        let excess = excess_demand(&e, &budgets, &p);
        assert_eq!(excess, vec![0.0, 0.0]);
        let next = fixed_point_step(&e, &budgets, &p, 1.0);
        assert_eq!(next.prices, p.prices);
    }

    #[test]
    fn solves_sec3_example() {
        let (e, budgets) = sec3_economy();
        let sol = solve_ceri(&e, &budgets, &SolverConfig::default()).expect("converges");
        let report = verify_ceri(&e, &budgets, &sol.prices, &sol.allocation, 1e-5);
        assert!(report.is_ceri, "{:?}", report.violations);
        assert!(sol.residual.iter().all(|r| r.abs() <= 1e-6));
    }

    #[test]
    fn solves_eating_example_with_narrow_uniform_budgets() {
        let e = eating_example_economy();
        let budgets = vec![BD::uniform(1.0, 1.01); 2];
        let sol = solve_ceri(&e, &budgets, &SolverConfig::default()).expect("converges");
        // Agent 1 gets {a} for sure, agent 2 gets {b} for sure.
        assert!((sol.allocation.per_agent[0].mass(&unit(2, 0)) - 1.0).abs() < 1e-9);
        assert!((sol.allocation.per_agent[1].mass(&unit(2, 1)) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unconstrained_good_prices_at_zero() {
        let e = Economy::new(vec![1], vec![AgentPreference::new(vec![unit(1, 0)])]);
        let budgets = vec![BD::uniform(1.0, 2.0)];
        let sol = solve_ceri(&e, &budgets, &SolverConfig::default()).expect("converges");
        assert_eq!(sol.prices.prices, vec![0.0]);
        assert!((sol.allocation.per_agent[0].mass(&unit(1, 0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_economy_is_an_error() {
        let e = Economy::new(vec![], vec![]);
        assert!(matches!(solve_ceri(&e, &[], &SolverConfig::default()), Err(SolveError::EmptyEconomy)));
    }

    #[test]
    fn verify_passes_sec3_and_fails_zero_prices() {
        let (e, budgets) = sec3_economy();
        let good = PriceVector::new(vec![2.0, 1.0], 100.0);
        let allocation = LotteryAllocation::new(
            e.agents
                .iter()
                .zip(&budgets)
                .map(|(a, b)| bundle_probabilities(a, &good, b))
                .collect(),
        );
        assert!(verify_ceri(&e, &budgets, &good, &allocation, 1e-9).is_ceri);

        let zero = PriceVector::zeros(2, 100.0);
        let alloc0 = LotteryAllocation::new(
            e.agents
                .iter()
                .zip(&budgets)
                .map(|(a, b)| bundle_probabilities(a, &zero, b))
                .collect(),
        );
        let report = verify_ceri(&e, &budgets, &zero, &alloc0, 1e-9);
        assert!(!report.is_ceri);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, CeriViolation::OverCapacity { good: 0, excess } if (excess - 1.0).abs() < 1e-12)));
    }

    #[test]
    fn verify_eating_example_deterministic_allocation() {
        let e = eating_example_economy();
        let budgets = vec![BD::point(1.0); 2];
        let p = PriceVector::new(vec![1.0, 1.0], 100.0);
        let allocation = LotteryAllocation::new(vec![
            Lottery::point(unit(2, 0)),
            Lottery::point(unit(2, 1)),
        ]);
        assert!(verify_ceri(&e, &budgets, &p, &allocation, 1e-9).is_ceri);
    }

    #[test]
    fn cap_keeps_per_agent_demand_under_capacity_share() {
        let (e, budgets) = sec3_economy();
        let cap = default_price_cap(&e, &budgets);
        for j in 0..e.num_goods() {
            let mut prices = vec![0.0; e.num_goods()];
            prices[j] = cap;
            let pv = PriceVector::new(prices, cap);
            for (agent, dist) in e.agents.iter().zip(&budgets) {
                let d = expected_demand(agent, &pv, dist);
                assert!(d[j] < e.capacities[j] as f64 / e.num_agents() as f64);
            }
        }
    }

    #[test]
    fn homogeneity_scaled_equilibrium_verifies() {
        let (e, budgets) = sec3_economy();
        let sol = solve_ceri(&e, &budgets, &SolverConfig::default()).expect("converges");
        let s = 3.5;
        let scaled_budgets: Vec<BD> = budgets.iter().map(|b| b.scaled(s)).collect();
        let scaled_prices = PriceVector::new(
            sol.prices.prices.iter().map(|p| p * s).collect(),
            sol.prices.cap * s,
        );
        let allocation = LotteryAllocation::new(
            e.agents
                .iter()
                .zip(&scaled_budgets)
                .map(|(a, b)| bundle_probabilities(a, &scaled_prices, b))
                .collect(),
        );
        assert!(verify_ceri(&e, &scaled_budgets, &scaled_prices, &allocation, 1e-9).is_ceri);
    }
}
