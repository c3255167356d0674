//! Domain types shared by every other module: bundles, ranked preferences,
//! economies, budget distributions, lotteries and price vectors.
//!
//! All types are immutable values after construction and safe to share
//! read-only across parallel workers.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Global tolerance for probability equality checks.
pub const PROB_TOL: f64 = 1e-9;

/// Tolerance for weight normalization of distributions and lotteries.
pub const WEIGHT_TOL: f64 = 1e-12;

/// An integral consumption vector, one count per good.
///
/// The empty bundle (all zeros) is every agent's outside option.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Bundle(pub Vec<u32>);

impl Bundle {
    pub fn empty(num_goods: usize) -> Self {
        Bundle(vec![0; num_goods])
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// Total number of units in the bundle.
    pub fn size(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn count(&self, good: usize) -> u32 {
        self.0[good]
    }

    pub fn num_goods(&self) -> usize {
        self.0.len()
    }

    pub fn cost(&self, prices: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(prices)
            .map(|(&c, &p)| c as f64 * p)
            .sum()
    }

    /// The bundle with one unit of `good` removed, (x - e^j)^+.
    pub fn minus_one(&self, good: usize) -> Bundle {
        let mut counts = self.0.clone();
        if counts[good] > 0 {
            counts[good] -= 1;
        }
        Bundle(counts)
    }
}

impl fmt::Debug for Bundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bundle{:?}", self.0)
    }
}

/// An agent's strict ranking over acceptable bundles, most preferred first.
///
/// The empty bundle is implicitly appended as the least preferred outcome and
/// must not appear in the explicit list.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct AgentPreference {
    ranked_bundles: Vec<Bundle>,
}

impl AgentPreference {
    pub fn new(ranked_bundles: Vec<Bundle>) -> Self {
        AgentPreference { ranked_bundles }
    }

    pub fn ranked(&self) -> &[Bundle] {
        &self.ranked_bundles
    }

    pub fn len(&self) -> usize {
        self.ranked_bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked_bundles.is_empty()
    }

    /// Rank of a bundle: 0 is best, `len()` is the implicit empty bundle.
    /// Returns None for bundles outside the acceptable set.
    pub fn rank_of(&self, bundle: &Bundle) -> Option<usize> {
        if bundle.is_empty() {
            return Some(self.ranked_bundles.len());
        }
        self.ranked_bundles.iter().position(|b| b == bundle)
    }

    /// Weak preference x >= y; both bundles must be acceptable (or empty).
    pub fn weakly_prefers(&self, x: &Bundle, y: &Bundle) -> Option<bool> {
        Some(self.rank_of(x)? <= self.rank_of(y)?)
    }

    pub fn max_bundle_size(&self) -> u32 {
        self.ranked_bundles.iter().map(Bundle::size).max().unwrap_or(0)
    }
}

/// An assignment economy: integer capacities plus one ranked preference list
/// per agent.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Economy {
    pub capacities: Vec<u32>,
    pub agents: Vec<AgentPreference>,
}

impl Economy {
    pub fn new(capacities: Vec<u32>, agents: Vec<AgentPreference>) -> Self {
        Economy { capacities, agents }
    }

    pub fn num_goods(&self) -> usize {
        self.capacities.len()
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    /// Maximum size of any acceptable bundle across agents (0 if all lists
    /// are empty).
    pub fn delta(&self) -> u32 {
        self.agents.iter().map(AgentPreference::max_bundle_size).max().unwrap_or(0)
    }

    pub fn empty_bundle(&self) -> Bundle {
        Bundle::empty(self.num_goods())
    }

    /// Near-feasibility slack from the decomposition bound, max(delta - 1, 0).
    pub fn kappa(&self) -> u32 {
        self.delta().saturating_sub(1)
    }
}

/// A structured economy-invariant violation, reported by `validate_economy`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Violation {
    NoGoods,
    NoAgents,
    NonpositiveCapacity { good: usize },
    WrongBundleLength { agent: usize, index: usize, expected: usize, found: usize },
    ExplicitEmptyBundle { agent: usize, index: usize },
    DuplicateBundle { agent: usize, index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoGoods => write!(f, "economy has no goods"),
            Violation::NoAgents => write!(f, "economy has no agents"),
            Violation::NonpositiveCapacity { good } => {
                write!(f, "good {good} has nonpositive capacity")
            }
            Violation::WrongBundleLength { agent, index, expected, found } => write!(
                f,
                "agent {agent} bundle {index}: has {found} goods, economy has {expected}"
            ),
            Violation::ExplicitEmptyBundle { agent, index } => write!(
                f,
                "agent {agent} bundle {index}: empty bundle listed explicitly (it is implicit)"
            ),
            Violation::DuplicateBundle { agent, index } => {
                write!(f, "agent {agent} bundle {index}: duplicate bundle")
            }
        }
    }
}

/// Returns every invariant violation of the economy; empty iff well-formed.
pub fn validate_economy(e: &Economy) -> Vec<Violation> {
    let mut out = Vec::new();
    if e.capacities.is_empty() {
        out.push(Violation::NoGoods);
    }
    if e.agents.is_empty() {
        out.push(Violation::NoAgents);
    }
    for (j, &cap) in e.capacities.iter().enumerate() {
        if cap == 0 {
            out.push(Violation::NonpositiveCapacity { good: j });
        }
    }
    let m = e.num_goods();
    for (i, agent) in e.agents.iter().enumerate() {
        for (k, bundle) in agent.ranked().iter().enumerate() {
            if bundle.num_goods() != m {
                out.push(Violation::WrongBundleLength {
                    agent: i,
                    index: k,
                    expected: m,
                    found: bundle.num_goods(),
                });
                continue;
            }
            if bundle.is_empty() {
                out.push(Violation::ExplicitEmptyBundle { agent: i, index: k });
            }
            if agent.ranked()[..k].contains(bundle) {
                out.push(Violation::DuplicateBundle { agent: i, index: k });
            }
        }
    }
    out
}

/// One component of a budget mixture.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub enum BudgetPiece {
    /// All mass at a single nonnegative value.
    Point(f64),
    /// Uniform on [lo, hi), lo >= 0, hi > lo.
    Uniform(f64, f64),
}

/// A finite mixture of point masses and uniform intervals on the nonnegative
/// reals. Closed under the conditional restriction used to attach incomes to
/// ex-post allocations.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct BudgetDistribution {
    pub components: Vec<(f64, BudgetPiece)>,
}

impl BudgetDistribution {
    pub fn point(value: f64) -> Self {
        BudgetDistribution { components: vec![(1.0, BudgetPiece::Point(value))] }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        BudgetDistribution { components: vec![(1.0, BudgetPiece::Uniform(lo, hi))] }
    }

    pub fn mixture(components: Vec<(f64, BudgetPiece)>) -> Self {
        BudgetDistribution { components }
    }

    /// Discrete distribution with the given (value, probability) support.
    pub fn discrete(points: &[(f64, f64)]) -> Self {
        BudgetDistribution {
            components: points.iter().map(|&(v, w)| (w, BudgetPiece::Point(v))).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut total = 0.0;
        for &(w, ref piece) in &self.components {
            if w < 0.0 {
                return Err(format!("negative component weight {w}"));
            }
            total += w;
            match *piece {
                BudgetPiece::Point(v) => {
                    if !(v >= 0.0) {
                        return Err(format!("point mass at negative value {v}"));
                    }
                }
                BudgetPiece::Uniform(lo, hi) => {
                    if !(lo >= 0.0) || !(hi > lo) {
                        return Err(format!("bad uniform interval [{lo}, {hi})"));
                    }
                }
            }
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(format!("component weights sum to {total}, expected 1"));
        }
        Ok(())
    }

    /// True iff no point mass carries positive weight (Theorem hypothesis for
    /// guaranteed equilibrium existence).
    pub fn is_continuous(&self) -> bool {
        self.components
            .iter()
            .all(|&(w, ref p)| w <= 0.0 || !matches!(p, BudgetPiece::Point(_)))
    }

    /// Right-continuous mixture CDF, P(B <= t).
    pub fn cdf(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &(w, ref piece) in &self.components {
            acc += w * match *piece {
                BudgetPiece::Point(v) => {
                    if t >= v {
                        1.0
                    } else {
                        0.0
                    }
                }
                BudgetPiece::Uniform(lo, hi) => ((t - lo) / (hi - lo)).clamp(0.0, 1.0),
            };
        }
        acc
    }

    /// Left limit of the CDF, P(B < t).
    pub fn cdf_left(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &(w, ref piece) in &self.components {
            acc += w * match *piece {
                BudgetPiece::Point(v) => {
                    if t > v {
                        1.0
                    } else {
                        0.0
                    }
                }
                BudgetPiece::Uniform(lo, hi) => ((t - lo) / (hi - lo)).clamp(0.0, 1.0),
            };
        }
        acc
    }

    /// P(lo <= B < hi); `hi` may be infinite.
    pub fn prob_in(&self, lo: f64, hi: f64) -> f64 {
        if hi.is_infinite() {
            (1.0 - self.cdf_left(lo)).max(0.0)
        } else {
            (self.cdf_left(hi) - self.cdf_left(lo)).max(0.0)
        }
    }

    /// Smallest support point.
    pub fn min_support(&self) -> f64 {
        self.components
            .iter()
            .filter(|&&(w, _)| w > 0.0)
            .map(|&(_, ref p)| match *p {
                BudgetPiece::Point(v) => v,
                BudgetPiece::Uniform(lo, _) => lo,
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest support point.
    pub fn max_support(&self) -> f64 {
        self.components
            .iter()
            .filter(|&&(w, _)| w > 0.0)
            .map(|&(_, ref p)| match *p {
                BudgetPiece::Point(v) => v,
                BudgetPiece::Uniform(_, hi) => hi,
            })
            .fold(0.0, f64::max)
    }

    /// The distribution of s * B for s > 0.
    pub fn scaled(&self, s: f64) -> Self {
        BudgetDistribution {
            components: self
                .components
                .iter()
                .map(|&(w, ref p)| {
                    let piece = match *p {
                        BudgetPiece::Point(v) => BudgetPiece::Point(v * s),
                        BudgetPiece::Uniform(lo, hi) => BudgetPiece::Uniform(lo * s, hi * s),
                    };
                    (w, piece)
                })
                .collect(),
        }
    }

    /// Inverse-CDF style draw from a uniform [0,1) variate.
    pub fn quantile_sample(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for &(w, ref piece) in &self.components {
            if w <= 0.0 {
                continue;
            }
            if u < acc + w || acc + w >= 1.0 {
                let local = ((u - acc) / w).clamp(0.0, 1.0);
                return match *piece {
                    BudgetPiece::Point(v) => v,
                    BudgetPiece::Uniform(lo, hi) => lo + local * (hi - lo),
                };
            }
            acc += w;
        }
        // Weights sum to 1 within tolerance; fall back to the last component.
        match self.components.last() {
            Some(&(_, BudgetPiece::Point(v))) => v,
            Some(&(_, BudgetPiece::Uniform(_, hi))) => hi,
            None => 0.0,
        }
    }
}

/// One agent's probability mass over acceptable bundles (plus the empty
/// bundle).
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct Lottery {
    pub masses: BTreeMap<Bundle, f64>,
}

impl Lottery {
    pub fn from_pairs(pairs: Vec<(Bundle, f64)>) -> Self {
        let mut masses = BTreeMap::new();
        for (b, w) in pairs {
            if w != 0.0 {
                *masses.entry(b).or_insert(0.0) += w;
            }
        }
        Lottery { masses }
    }

    pub fn point(bundle: Bundle) -> Self {
        Lottery { masses: BTreeMap::from([(bundle, 1.0)]) }
    }

    pub fn mass(&self, bundle: &Bundle) -> f64 {
        self.masses.get(bundle).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.values().sum()
    }

    /// Support with strictly positive mass.
    pub fn support(&self) -> impl Iterator<Item = (&Bundle, f64)> {
        self.masses.iter().filter(|&(_, &w)| w > 0.0).map(|(b, &w)| (b, w))
    }

    /// Expected per-good consumption of the lottery.
    pub fn expectation(&self, num_goods: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_goods];
        for (bundle, &w) in &self.masses {
            for (j, &c) in bundle.0.iter().enumerate() {
                out[j] += w * c as f64;
            }
        }
        out
    }

    pub fn validate(&self, agent: &AgentPreference) -> Result<(), String> {
        let mut total = 0.0;
        for (bundle, &w) in &self.masses {
            if w < -WEIGHT_TOL {
                return Err(format!("negative mass {w} on {bundle:?}"));
            }
            if agent.rank_of(bundle).is_none() {
                return Err(format!("support bundle {bundle:?} is not acceptable"));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-6 {
            return Err(format!("masses sum to {total}, expected 1"));
        }
        Ok(())
    }
}

/// One lottery per agent.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct LotteryAllocation {
    pub per_agent: Vec<Lottery>,
}

impl LotteryAllocation {
    pub fn new(per_agent: Vec<Lottery>) -> Self {
        LotteryAllocation { per_agent }
    }

    /// Aggregate expected consumption per good.
    pub fn aggregate_expectation(&self, num_goods: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_goods];
        for lottery in &self.per_agent {
            for (j, v) in lottery.expectation(num_goods).into_iter().enumerate() {
                out[j] += v;
            }
        }
        out
    }
}

/// Nonnegative per-good prices with a cap P used by the fixed-point map.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct PriceVector {
    pub prices: Vec<f64>,
    pub cap: f64,
}

impl PriceVector {
    pub fn new(prices: Vec<f64>, cap: f64) -> Self {
        PriceVector { prices, cap }
    }

    pub fn zeros(num_goods: usize, cap: f64) -> Self {
        PriceVector { prices: vec![0.0; num_goods], cap }
    }

    pub fn num_goods(&self) -> usize {
        self.prices.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(m: usize, j: usize) -> Bundle {
        let mut v = vec![0; m];
        v[j] = 1;
        Bundle(v)
    }

    #[test]
    fn minimal_economy_is_valid() {
        let e = Economy::new(vec![1], vec![AgentPreference::new(vec![unit(1, 0)])]);
        assert!(validate_economy(&e).is_empty());
        assert_eq!(e.delta(), 1);
    }

    #[test]
    fn duplicate_bundle_is_reported_once() {
        let e = Economy::new(
            vec![1],
            vec![AgentPreference::new(vec![unit(1, 0), unit(1, 0)])],
        );
        let violations = validate_economy(&e);
        assert_eq!(violations.len(), 1);
        assert!(matches!(violations[0], Violation::DuplicateBundle { agent: 0, index: 1 }));
    }

    #[test]
    fn appendix_b_economy_validates_with_delta_100() {
        // Single good with capacity 20; both agents accept only a 100-unit bundle.
        let big = Bundle(vec![100]);
        let e = Economy::new(
            vec![20],
            vec![
                AgentPreference::new(vec![big.clone()]),
                AgentPreference::new(vec![big]),
            ],
        );
        assert!(validate_economy(&e).is_empty());
        assert_eq!(e.delta(), 100);
    }

    #[test]
    fn zero_capacity_is_a_violation() {
        let e = Economy::new(vec![0], vec![AgentPreference::new(vec![unit(1, 0)])]);
        assert_eq!(validate_economy(&e), vec![Violation::NonpositiveCapacity { good: 0 }]);
    }

    #[test]
    fn cdf_uniform_midpoint() {
        let b = BudgetDistribution::uniform(1.0, 2.0);
        assert_eq!(b.cdf(1.5), 0.5);
        assert!(b.is_continuous());
    }

    #[test]
    fn cdf_two_point_mixture_at_lower_atom() {
        let b = BudgetDistribution::discrete(&[(1.0, 0.5), (2.0, 0.5)]);
        assert_eq!(b.cdf(1.0), 0.5);
        assert_eq!(b.cdf_left(1.0), 0.0);
        assert!(!b.is_continuous());
    }

    #[test]
    fn cdf_uniform_point_mixture_is_one_at_upper_end() {
        let b = BudgetDistribution::mixture(vec![
            (0.5, BudgetPiece::Uniform(0.0, 1.0)),
            (0.5, BudgetPiece::Point(1.0)),
        ]);
        assert_eq!(b.cdf(1.0), 1.0);
    }

    #[test]
    fn rank_comparison_is_a_strict_total_order() {
        let m = 2;
        let pref = AgentPreference::new(vec![unit(m, 0), unit(m, 1)]);
        let a = unit(m, 0);
        let b = unit(m, 1);
        let empty = Bundle::empty(m);
        assert_eq!(pref.rank_of(&a), Some(0));
        assert_eq!(pref.rank_of(&b), Some(1));
        assert_eq!(pref.rank_of(&empty), Some(2));
        assert_eq!(pref.weakly_prefers(&a, &b), Some(true));
        assert_eq!(pref.weakly_prefers(&b, &a), Some(false));
        assert_eq!(pref.rank_of(&Bundle(vec![1, 1])), None);
    }

    #[test]
    fn quantile_sampling_respects_components() {
        let b = BudgetDistribution::discrete(&[(1.0, 0.5), (2.0, 0.5)]);
        assert_eq!(b.quantile_sample(0.1), 1.0);
        assert_eq!(b.quantile_sample(0.9), 2.0);
    }
}
