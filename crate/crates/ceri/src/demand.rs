//! Per-agent demand: best affordable bundle at a budget, the budget
//! thresholds at which demand changes, and the induced bundle lottery under a
//! budget distribution.

use thiserror::Error;

use crate::model::{AgentPreference, Bundle, BudgetDistribution, BudgetPiece, Lottery, PriceVector};

/// Costs closer than this are treated as equal when building segments, so
/// floating arithmetic cannot produce spurious zero-width intervals.
pub const COST_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum DemandError {
    #[error("point mass at {budget} sits exactly on a demand threshold and boundary tie-break is disabled")]
    PointMassOnThreshold { budget: f64 },
}

/// Demand on the half-open budget interval [lo, hi); `hi` may be infinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandSegment {
    pub lo: f64,
    pub hi: f64,
    pub bundle: Bundle,
}

/// The step function budget -> optimal bundle, as ordered segments that
/// partition [0, inf). Bundles on later segments are weakly preferred to
/// bundles on earlier ones.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandProfile {
    pub segments: Vec<DemandSegment>,
}

impl DemandProfile {
    /// Segment lookup; budgets below 0 are clamped to the first segment.
    pub fn bundle_at(&self, budget: f64) -> &Bundle {
        for seg in &self.segments {
            if budget < seg.hi {
                return &seg.bundle;
            }
        }
        &self.segments.last().expect("profile covers [0, inf)").bundle
    }
}

/// The highest-ranked bundle costing at most `budget`; the empty bundle if
/// nothing else is affordable. A bundle costing exactly the budget is
/// affordable (weak inequality).
pub fn optimal_bundle(agent: &AgentPreference, prices: &PriceVector, budget: f64) -> Bundle {
    for bundle in agent.ranked() {
        if bundle.cost(&prices.prices) <= budget {
            return bundle.clone();
        }
    }
    Bundle::empty(prices.num_goods())
}

/// Running-minimum thresholds down the ranking: bundle k (cost c_k) is
/// demanded exactly on budgets b with c_k <= b < min cost of anything ranked
/// above it. Segments with empty interior are dropped.
pub fn demand_profile(agent: &AgentPreference, prices: &PriceVector) -> DemandProfile {
    let mut segments = Vec::new();
    let mut cheapest_better = f64::INFINITY;
    for bundle in agent.ranked() {
        let cost = bundle.cost(&prices.prices);
        if cost < cheapest_better - COST_TOL {
            segments.push(DemandSegment { lo: cost, hi: cheapest_better, bundle: bundle.clone() });
            cheapest_better = cost;
        }
    }
    if cheapest_better > COST_TOL {
        segments.push(DemandSegment {
            lo: 0.0,
            hi: cheapest_better,
            bundle: Bundle::empty(prices.num_goods()),
        });
    } else if let Some(last) = segments.last_mut() {
        // A free bundle absorbs the whole low end.
        last.lo = 0.0;
    } else {
        segments.push(DemandSegment {
            lo: 0.0,
            hi: f64::INFINITY,
            bundle: Bundle::empty(prices.num_goods()),
        });
    }
    segments.reverse();
    DemandProfile { segments }
}

/// The lottery over bundles induced by drawing the budget from `dist`:
/// each segment contributes P(lo <= B < hi) to its bundle.
pub fn bundle_probabilities(
    agent: &AgentPreference,
    prices: &PriceVector,
    dist: &BudgetDistribution,
) -> Lottery {
    bundle_probabilities_checked(agent, prices, dist, true)
        .expect("boundary tie-break enabled; no error path")
}

/// As `bundle_probabilities`, but when `boundary_affords` is false any point
/// mass sitting exactly on an interior segment threshold is an error instead
/// of being resolved by the weak-affordability rule.
pub fn bundle_probabilities_checked(
    agent: &AgentPreference,
    prices: &PriceVector,
    dist: &BudgetDistribution,
    boundary_affords: bool,
) -> Result<Lottery, DemandError> {
    let profile = demand_profile(agent, prices);
    if !boundary_affords {
        for seg in &profile.segments[1..] {
            for &(w, ref piece) in &dist.components {
                if let BudgetPiece::Point(v) = *piece {
                    if w > 0.0 && v == seg.lo {
                        return Err(DemandError::PointMassOnThreshold { budget: v });
                    }
                }
            }
        }
    }
    let pairs = profile
        .segments
        .iter()
        .map(|seg| (seg.bundle.clone(), dist.prob_in(seg.lo, seg.hi)))
        .collect();
    Ok(Lottery::from_pairs(pairs))
}

/// E[X_i] per good under the induced lottery.
pub fn expected_demand(
    agent: &AgentPreference,
    prices: &PriceVector,
    dist: &BudgetDistribution,
) -> Vec<f64> {
    bundle_probabilities(agent, prices, dist).expectation(prices.num_goods())
}
