//! Exact backend for weighted sequence spaces: basis-map operators
//! e_n -> c(n) e_{sigma(n)} with injective closed-form index rules and
//! unimodular coefficients. Everything here is integer index calculus, so the
//! phenomena that vanish under dense truncation (non-adjointable isometries,
//! genuine wandering subspaces) stay visible. All verdicts are evidence at a
//! finite horizon, never proofs.

use crate::error::{Error, Result};
use crate::numerics::C64;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};

/// Weight rule n -> w(n) >= 1 for n >= 1. The weighted space sits inside the
/// plain one with |x|_flat <= |x|_weighted, and the flat inner product is the
/// A-inner product of the weight matrix diag(1/w).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    /// w(n) = n + 1 (shifted-index model of the Dirichlet-over-Hardy pair).
    Dirichlet,
    /// w(n) = n.
    SobolevLike,
    /// w(n) = 1.
    Unit,
}

impl Weight {
    pub fn w(&self, n: u64) -> f64 {
        match self {
            Weight::Dirichlet => (n + 1) as f64,
            Weight::SobolevLike => n as f64,
            Weight::Unit => 1.0,
        }
    }
}

// --- index helpers for the odd-square permutation -------------------------

fn isqrt(x: u64) -> u64 {
    if x == 0 {
        return 0;
    }
    let mut r = (x as f64).sqrt() as u64;
    while r.saturating_mul(r) > x {
        r -= 1;
    }
    while (r + 1).saturating_mul(r + 1) <= x {
        r += 1;
    }
    r
}

fn is_odd_square(m: u64) -> bool {
    let r = isqrt(m);
    r * r == m && r % 2 == 1
}

/// Number of odd squares <= x.
fn odd_square_count(x: u64) -> u64 {
    isqrt(x).div_ceil(2)
}

/// k-th positive integer that is not an odd square (k >= 1).
fn nth_non_odd_square(k: u64) -> u64 {
    // f(m) = m - #odd squares <= m is nondecreasing and steps by one exactly
    // at non-odd-squares, so binary search finds the unique preimage.
    let mut lo = k;
    let mut hi = k + isqrt(4 * k) + 4;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if mid - odd_square_count(mid) < k {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    debug_assert!(!is_odd_square(lo));
    debug_assert_eq!(lo - odd_square_count(lo), k);
    lo
}

/// Position of a non-odd-square m in the enumeration of its kind.
fn non_odd_square_index(m: u64) -> Option<u64> {
    if is_odd_square(m) {
        None
    } else {
        Some(m - odd_square_count(m))
    }
}

/// Image under the odd-square permutation: odd n -> n^2, even n -> the
/// (n/2)-th non-odd-square. A bijection of the positive integers.
fn odd_square_perm(n: u64) -> Option<u64> {
    if n % 2 == 1 {
        n.checked_mul(n)
    } else {
        Some(nth_non_odd_square(n / 2))
    }
}

/// Inverse of `odd_square_perm`.
fn odd_square_perm_inv(m: u64) -> Option<u64> {
    if is_odd_square(m) {
        Some(isqrt(m))
    } else {
        non_odd_square_index(m).and_then(|k| k.checked_mul(2))
    }
}

// ---------------------------------------------------------------------------

/// Closed-form injective index rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum BaseRule {
    Identity,
    Shift { offset: u64 },
    Double,
    /// n -> ceil(n / 2); not injective, kept as the canonical counterexample.
    HalfCeil,
    /// The odd-square permutation (odd n -> n^2, even n -> enumeration of the
    /// complement).
    OddSquarePerm,
    /// Its inverse.
    OddSquarePermInv,
}

impl BaseRule {
    fn image(&self, n: u64) -> Option<u64> {
        match self {
            BaseRule::Identity => Some(n),
            BaseRule::Shift { offset } => n.checked_add(*offset),
            BaseRule::Double => n.checked_mul(2),
            BaseRule::HalfCeil => Some(n / 2 + n % 2),
            BaseRule::OddSquarePerm => odd_square_perm(n),
            BaseRule::OddSquarePermInv => odd_square_perm_inv(n),
        }
    }

    fn preimage(&self, k: u64) -> Option<u64> {
        match self {
            BaseRule::Identity => Some(k),
            BaseRule::Shift { offset } => (k > *offset).then(|| k - offset),
            BaseRule::Double => (k > 0 && k.is_multiple_of(2)).then_some(k / 2),
            BaseRule::HalfCeil => None,
            BaseRule::OddSquarePerm => odd_square_perm_inv(k),
            BaseRule::OddSquarePermInv => odd_square_perm(k),
        }
    }

    /// Whether the rule is a bijection of the positive integers; exact
    /// closed-form knowledge, used to shortcut orbit analysis.
    fn bijective(&self) -> bool {
        matches!(
            self,
            BaseRule::Identity | BaseRule::OddSquarePerm | BaseRule::OddSquarePermInv
        )
    }
}

/// Unimodular coefficient rules, closed under conjugation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffRule {
    One,
    /// c(n) = (-1)^n.
    AlternatingSign,
}

impl CoeffRule {
    fn at(&self, n: u64) -> C64 {
        match self {
            CoeffRule::One => C64::new(1.0, 0.0),
            CoeffRule::AlternatingSign => {
                C64::new(if n.is_multiple_of(2) { 1.0 } else { -1.0 }, 0.0)
            }
        }
    }
}

/// A basis-map operator e_n -> c(n) e_{sigma(n)} on a weighted sequence
/// space, with an optional finite set of index overrides. The adjoint of such
/// an operator is again a (partial) basis map, following the inverse index
/// rule; `inverted` selects which direction this value represents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeqOperator {
    pub base: BaseRule,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<u64, u64>,
    #[serde(default)]
    pub inverted: bool,
    pub coeff: CoeffRule,
    pub space: Weight,
    pub description: String,
}

pub const BUILTIN_NAMES: [&str; 4] = [
    "dirichlet_shift",
    "double_shift",
    "example_242_U",
    "example_242_Ustar",
];

impl SeqOperator {
    pub fn new(base: BaseRule, space: Weight, description: impl Into<String>) -> Self {
        SeqOperator {
            base,
            overrides: BTreeMap::new(),
            inverted: false,
            coeff: CoeffRule::One,
            space,
            description: description.into(),
        }
    }

    /// Named operators exposed by the command line.
    pub fn builtin(name: &str) -> Option<SeqOperator> {
        match name {
            "dirichlet_shift" => Some(SeqOperator::new(
                BaseRule::Shift { offset: 1 },
                Weight::Dirichlet,
                "basis shift e_n -> e_{n+1} on the w(n) = n+1 space",
            )),
            "double_shift" => Some(SeqOperator::new(
                BaseRule::Double,
                Weight::SobolevLike,
                "index doubling e_n -> e_{2n} on the w(n) = n space",
            )),
            "example_242_U" => Some(SeqOperator::new(
                BaseRule::OddSquarePermInv,
                Weight::SobolevLike,
                "inverse odd-square permutation on the w(n) = n space",
            )),
            "example_242_Ustar" => Some(SeqOperator::new(
                BaseRule::OddSquarePerm,
                Weight::SobolevLike,
                "odd-square permutation on the w(n) = n space",
            )),
            _ => None,
        }
    }

    pub fn with_override(mut self, from: u64, to: u64) -> Self {
        self.overrides.insert(from, to);
        self
    }

    /// sigma(n), or None when the operator kills e_n (possible after taking
    /// adjoints of non-surjective rules).
    pub fn image(&self, n: u64) -> Option<u64> {
        if n == 0 {
            return None;
        }
        if self.inverted {
            self.preimage_raw(n)
        } else {
            self.image_raw(n)
        }
    }

    /// Preimage of k under the operative index map.
    pub fn preimage(&self, k: u64) -> Option<u64> {
        if k == 0 {
            return None;
        }
        if self.inverted {
            self.image_raw(k)
        } else {
            self.preimage_raw(k)
        }
    }

    fn image_raw(&self, n: u64) -> Option<u64> {
        if let Some(&to) = self.overrides.get(&n) {
            return Some(to);
        }
        self.base.image(n)
    }

    fn preimage_raw(&self, k: u64) -> Option<u64> {
        for (&from, &to) in &self.overrides {
            if to == k {
                return Some(from);
            }
        }
        let candidate = self.base.preimage(k)?;
        // The override may have redirected the base preimage elsewhere.
        if self.overrides.contains_key(&candidate) {
            None
        } else {
            Some(candidate)
        }
    }

    /// Coefficient carried onto the image index.
    pub fn coeff_at(&self, n: u64) -> C64 {
        if self.inverted {
            match self.preimage_raw(n) {
                Some(p) => self.coeff.at(p).conj(),
                None => C64::new(0.0, 0.0),
            }
        } else {
            self.coeff.at(n)
        }
    }

    /// The adjoint basis map: e_k -> conj(c(sigma^{-1}(k))) e_{sigma^{-1}(k)}
    /// on the range of sigma, zero elsewhere.
    pub fn adjoint(&self) -> SeqOperator {
        SeqOperator {
            base: self.base.clone(),
            overrides: self.overrides.clone(),
            inverted: !self.inverted,
            coeff: self.coeff,
            space: self.space,
            description: format!("adjoint of {}", self.description),
        }
    }

    /// Exact knowledge that the operative map is a bijection (no overrides).
    pub fn bijective(&self) -> bool {
        self.overrides.is_empty() && self.base.bijective()
    }
}

/// Flat-space isometry evidence: the map is a total injection with unimodular
/// coefficients on [1, horizon].
pub fn seq_is_l_isometry(op: &SeqOperator, horizon: u64) -> bool {
    let mut seen = HashSet::new();
    for n in 1..=horizon {
        match op.image(n) {
            Some(k) => {
                if !seen.insert(k) {
                    return false;
                }
            }
            None => return false,
        }
        if (op.coeff_at(n).norm() - 1.0).abs() > 0.0 {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Bounded,
    Growing,
}

/// Largest weight ratio found in one dyadic window, with the witness index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowSup {
    pub window_start: u64,
    pub window_end: u64,
    pub index: u64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub sup_ratio: f64,
    pub trend: Trend,
    pub bounded_evidence: bool,
    /// Suprema over the last three dyadic windows (N/8, N/4], (N/4, N/2],
    /// (N/2, N], each with its witness index.
    pub windows: Vec<WindowSup>,
}

/// Growth factor a window supremum must show over its predecessor before the
/// trend counts as growing. Bounded ratio sequences can still increase
/// strictly (for example k/(k+1)), so plain strict monotonicity would
/// misclassify them.
const GROWTH_MARGIN: f64 = 1.05;

/// Boundedness evidence for the operator on the weighted space: the ratio
/// w(sigma(n))/w(n) controls |T x|_w against |x|_w. The trend compares
/// suprema over the last three dyadic windows of the horizon; the verdict is
/// `Growing` when each window beats the previous by the margin.
pub fn seq_bounded_on_h(op: &SeqOperator, horizon: u64) -> Result<BoundednessReport> {
    if horizon < 8 {
        return Err(Error::InvalidInput(
            "horizon must be at least 8 for dyadic windows".into(),
        ));
    }
    let ratio_at = |n: u64| -> Option<(u64, f64)> {
        let k = op.image(n)?;
        Some((n, op.space.w(k) / op.space.w(n)))
    };
    let window_sup = |start: u64, end: u64| -> WindowSup {
        let mut best = WindowSup {
            window_start: start,
            window_end: end,
            index: 0,
            ratio: 0.0,
        };
        for n in (start + 1)..=end {
            if let Some((idx, r)) = ratio_at(n) {
                if r > best.ratio {
                    best.ratio = r;
                    best.index = idx;
                }
            }
        }
        best
    };

    let mut sup_ratio = 0.0f64;
    for n in 1..=horizon {
        if let Some((_, r)) = ratio_at(n) {
            sup_ratio = sup_ratio.max(r);
        }
    }
    let windows = vec![
        window_sup(horizon / 8, horizon / 4),
        window_sup(horizon / 4, horizon / 2),
        window_sup(horizon / 2, horizon),
    ];
    let growing = windows[0].ratio > 0.0
        && windows[1].ratio > GROWTH_MARGIN * windows[0].ratio
        && windows[2].ratio > GROWTH_MARGIN * windows[1].ratio;
    let trend = if growing { Trend::Growing } else { Trend::Bounded };
    Ok(BoundednessReport {
        sup_ratio,
        trend,
        bounded_evidence: !growing,
        windows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjointabilityVerdict {
    AdjointableEvidence,
    NonAdjointableEvidence,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdjointabilityReport {
    pub verdict: AdjointabilityVerdict,
    /// Boundedness of the operator itself (it must leave the weighted space
    /// invariant to act there at all).
    pub self_bounded: BoundednessReport,
    /// Boundedness of its adjoint, the actual adjointability test.
    pub adjoint_bounded: BoundednessReport,
}

/// Adjointability evidence at a horizon. The operator is adjointable exactly
/// when its flat-space adjoint leaves the weighted space invariant; evidence
/// against is a growing weight-ratio trend on either the operator (it does
/// not even act on the weighted space) or its adjoint.
pub fn seq_adjointability(op: &SeqOperator, horizon: u64) -> Result<AdjointabilityReport> {
    if !seq_is_l_isometry(op, horizon.min(10_000)) {
        return Err(Error::InvalidInput(
            "operator is not a flat-space isometry on the probed prefix".into(),
        ));
    }
    let self_bounded = seq_bounded_on_h(op, horizon)?;
    let adjoint_bounded = seq_bounded_on_h(&op.adjoint(), horizon)?;
    let verdict = if self_bounded.trend == Trend::Growing
        || adjoint_bounded.trend == Trend::Growing
    {
        AdjointabilityVerdict::NonAdjointableEvidence
    } else {
        AdjointabilityVerdict::AdjointableEvidence
    };
    Ok(AdjointabilityReport {
        verdict,
        self_bounded,
        adjoint_bounded,
    })
}

/// Partial sums of the reciprocals of odd integers up to the horizon: the
/// squared weighted norm of the image of the witness vector x_k = k^{-3/2}
/// (odd k) under the adjoint of the odd-square permutation. Grows like
/// log(horizon)/2, hence the divergence.
pub fn divergence_demo(horizon: u64) -> Vec<f64> {
    let mut sums = Vec::new();
    let mut acc = 0.0f64;
    let mut n = 1u64;
    while n <= horizon {
        acc += 1.0 / n as f64;
        sums.push(acc);
        n += 2;
    }
    sums
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WoldReport {
    pub horizon: u64,
    /// Indices with no sigma-preimage at all (layer zero of the shift part).
    pub wandering: Vec<u64>,
    /// `shift_layers[j]` = sigma^j(wandering) intersected with the window.
    pub shift_layers: Vec<Vec<u64>>,
    /// Indices whose backward orbit never terminates (cycles, or the rule is
    /// a known bijection).
    pub unitary: Vec<u64>,
    /// Indices whose backward orbit leaves the window before resolving.
    pub undetermined: Vec<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Cls {
    Layer(u64),
    Unitary,
    Undetermined,
}

/// Index-level Wold decomposition over the window [1, horizon]: wandering
/// indices are those outside the range of sigma, shift layers are their
/// forward orbits, and unitary indices are those whose backward orbit never
/// terminates. Backward orbits are followed inside the window only; an orbit
/// that escapes upward is reported as undetermined rather than misclassified,
/// except that a rule known to be a bijection makes the whole window unitary.
pub fn seq_wold(op: &SeqOperator, horizon: u64) -> Result<WoldReport> {
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    if !seq_is_l_isometry(op, horizon.min(10_000)) {
        return Err(Error::InvalidInput(
            "operator is not a flat-space isometry on the probed prefix".into(),
        ));
    }

    if op.bijective() {
        return Ok(WoldReport {
            horizon,
            wandering: Vec::new(),
            shift_layers: Vec::new(),
            unitary: (1..=horizon).collect(),
            undetermined: Vec::new(),
        });
    }

    let mut memo: HashMap<u64, Cls> = HashMap::new();
    for k in 1..=horizon {
        if memo.contains_key(&k) {
            continue;
        }
        // Walk backward through preimages until the orbit terminates, hits a
        // memoized index, revisits itself, or escapes the window.
        let mut path: Vec<u64> = Vec::new();
        let mut on_path: HashSet<u64> = HashSet::new();
        let mut cur = k;
        let resolution: Cls = loop {
            if let Some(&cls) = memo.get(&cur) {
                break cls;
            }
            if cur > horizon {
                break Cls::Undetermined;
            }
            if !on_path.insert(cur) {
                break Cls::Unitary;
            }
            path.push(cur);
            match op.preimage(cur) {
                None => break Cls::Layer(u64::MAX), // marker: `cur` itself is wandering
                Some(prev) => {
                    if path.len() as u64 > horizon {
                        break Cls::Undetermined;
                    }
                    cur = prev;
                }
            }
        };
        // Unwind the path, assigning classes from the far end back to k.
        match resolution {
            Cls::Layer(u64::MAX) => {
                // path = [k, ..., w] with w wandering: depth counts from w.
                for (depth_back, &idx) in path.iter().rev().enumerate() {
                    if idx <= horizon {
                        memo.insert(idx, Cls::Layer(depth_back as u64));
                    }
                }
            }
            Cls::Layer(base_depth) => {
                for (dist, &idx) in path.iter().rev().enumerate() {
                    if idx <= horizon {
                        memo.insert(idx, Cls::Layer(base_depth + 1 + dist as u64));
                    }
                }
            }
            Cls::Unitary => {
                for &idx in &path {
                    if idx <= horizon {
                        memo.insert(idx, Cls::Unitary);
                    }
                }
            }
            Cls::Undetermined => {
                for &idx in &path {
                    if idx <= horizon {
                        memo.insert(idx, Cls::Undetermined);
                    }
                }
            }
        }
    }

    let mut wandering = Vec::new();
    let mut unitary = Vec::new();
    let mut undetermined = Vec::new();
    let mut layer_map: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for k in 1..=horizon {
        match memo[&k] {
            Cls::Layer(0) => {
                wandering.push(k);
                layer_map.entry(0).or_default().push(k);
            }
            Cls::Layer(d) => layer_map.entry(d).or_default().push(k),
            Cls::Unitary => unitary.push(k),
            Cls::Undetermined => undetermined.push(k),
        }
    }
    let max_layer = layer_map.keys().max().copied().unwrap_or(0);
    let shift_layers: Vec<Vec<u64>> = (0..=max_layer)
        .map(|d| layer_map.remove(&d).unwrap_or_default())
        .collect();
    Ok(WoldReport {
        horizon,
        wandering,
        shift_layers,
        unitary,
        undetermined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::a_space::AForm;
    use crate::numerics::CMatrix;

    #[test]
    fn odd_square_helpers_match_a_sieve() {
        // Brute-force enumeration of non-odd-squares as the oracle.
        let sieve: Vec<u64> = (2..=4000).filter(|&m| !is_odd_square(m)).collect();
        for (i, &m) in sieve.iter().enumerate() {
            assert_eq!(nth_non_odd_square(i as u64 + 1), m);
            assert_eq!(non_odd_square_index(m), Some(i as u64 + 1));
        }
        assert!(is_odd_square(1) && is_odd_square(9) && is_odd_square(25));
        assert!(!is_odd_square(4) && !is_odd_square(16));
    }

    #[test]
    fn odd_square_perm_is_a_bijection_on_a_prefix() {
        let mut seen = HashSet::new();
        for n in 1..=2000u64 {
            let img = odd_square_perm(n).unwrap();
            assert!(seen.insert(img));
            assert_eq!(odd_square_perm_inv(img), Some(n));
        }
        // Every small integer is reached by some n (surjectivity evidence).
        let images: HashSet<u64> = (1..=20_000u64).filter_map(odd_square_perm).collect();
        for m in 1..=2000u64 {
            assert!(images.contains(&m), "{m} missed");
        }
    }

    #[test]
    fn builtin_isometry_checks() {
        let shift = SeqOperator::builtin("dirichlet_shift").unwrap();
        assert!(seq_is_l_isometry(&shift, 1000));
        let double = SeqOperator::builtin("double_shift").unwrap();
        assert!(seq_is_l_isometry(&double, 1000));
        let half = SeqOperator::new(BaseRule::HalfCeil, Weight::Unit, "ceil(n/2)");
        assert!(!seq_is_l_isometry(&half, 100));
    }

    #[test]
    fn unknown_builtin_is_none() {
        assert!(SeqOperator::builtin("nope").is_none());
        for name in BUILTIN_NAMES {
            assert!(SeqOperator::builtin(name).is_some());
        }
    }

    #[test]
    fn forward_ratios_of_the_odd_square_inverse_stay_below_two() {
        // w(sigma(n))/w(n) <= 2 because the complement enumeration satisfies
        // k <= c(k) <= 2k.
        let u = SeqOperator::builtin("example_242_U").unwrap();
        let report = seq_bounded_on_h(&u, 100_000).unwrap();
        assert!(report.sup_ratio <= 2.0 + 1e-12, "sup {}", report.sup_ratio);
        assert_eq!(report.trend, Trend::Bounded);
    }

    #[test]
    fn odd_square_map_ratios_grow_linearly() {
        let ustar = SeqOperator::builtin("example_242_Ustar").unwrap();
        let report = seq_bounded_on_h(&ustar, 100_000).unwrap();
        assert_eq!(report.trend, Trend::Growing);
        // Witness ratio at an odd index n equals n exactly.
        let top = report.windows.last().unwrap();
        assert_eq!(top.index % 2, 1);
        assert_eq!(top.ratio, top.index as f64);
    }

    #[test]
    fn identity_map_has_unit_ratio() {
        let ident = SeqOperator::new(BaseRule::Identity, Weight::SobolevLike, "identity");
        let report = seq_bounded_on_h(&ident, 1000).unwrap();
        assert_eq!(report.sup_ratio, 1.0);
        assert_eq!(report.trend, Trend::Bounded);
    }

    #[test]
    fn adjoint_of_double_shift_reads_even_indices() {
        let double = SeqOperator::builtin("double_shift").unwrap();
        let adj = double.adjoint();
        for n in 1..=50u64 {
            assert_eq!(adj.image(2 * n), Some(n));
            assert_eq!(adj.image(2 * n - 1), None);
        }
    }

    #[test]
    fn adjoint_of_shift_kills_first_index() {
        let shift = SeqOperator::builtin("dirichlet_shift").unwrap();
        let adj = shift.adjoint();
        assert_eq!(adj.image(1), None);
        for k in 2..=50u64 {
            assert_eq!(adj.image(k), Some(k - 1));
        }
    }

    #[test]
    fn adjoint_of_permutation_is_the_inverse() {
        let ustar = SeqOperator::builtin("example_242_Ustar").unwrap();
        let adj = ustar.adjoint();
        for n in 1..=500u64 {
            let img = ustar.image(n).unwrap();
            assert_eq!(adj.image(img), Some(n));
        }
    }

    #[test]
    fn adjoint_is_an_involution_on_bijections() {
        let ustar = SeqOperator::builtin("example_242_Ustar").unwrap();
        let twice = ustar.adjoint().adjoint();
        for n in 1..=500u64 {
            assert_eq!(twice.image(n), ustar.image(n));
        }
    }

    #[test]
    fn adjointability_verdicts_match_the_examples() {
        let horizon = 100_000;
        let shift = SeqOperator::builtin("dirichlet_shift").unwrap();
        let report = seq_adjointability(&shift, horizon).unwrap();
        assert_eq!(report.verdict, AdjointabilityVerdict::AdjointableEvidence);

        let double = SeqOperator::builtin("double_shift").unwrap();
        let report = seq_adjointability(&double, horizon).unwrap();
        assert_eq!(report.verdict, AdjointabilityVerdict::AdjointableEvidence);
        assert!(report.adjoint_bounded.sup_ratio <= 1.0);

        let u = SeqOperator::builtin("example_242_U").unwrap();
        let report = seq_adjointability(&u, horizon).unwrap();
        assert_eq!(report.verdict, AdjointabilityVerdict::NonAdjointableEvidence);
        // The obstruction lives on the adjoint side with witness ratio = index.
        let top = report.adjoint_bounded.windows.last().unwrap();
        assert_eq!(top.ratio, top.index as f64);

        // The permutation itself does not leave the weighted space invariant,
        // which already rules out adjointability as an operator there.
        let ustar = SeqOperator::builtin("example_242_Ustar").unwrap();
        let report = seq_adjointability(&ustar, horizon).unwrap();
        assert_eq!(report.verdict, AdjointabilityVerdict::NonAdjointableEvidence);
        assert_eq!(report.self_bounded.trend, Trend::Growing);
    }

    #[test]
    fn divergence_partial_sums() {
        assert_eq!(divergence_demo(1), vec![1.0]);
        let sums = divergence_demo(100);
        // Monotone: positive terms.
        for pair in sums.windows(2) {
            assert!(pair[1] > pair[0]);
        }
        // Direct summation oracle at a small horizon.
        let direct: f64 = (0..).map(|k| 2 * k + 1).take_while(|&n| n <= 100).map(|n| 1.0 / n as f64).sum();
        assert!((sums.last().unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn wold_of_plain_shift() {
        let shift = SeqOperator::builtin("dirichlet_shift").unwrap();
        let report = seq_wold(&shift, 50).unwrap();
        assert_eq!(report.wandering, vec![1]);
        assert!(report.unitary.is_empty());
        assert!(report.undetermined.is_empty());
        // Layer j holds exactly index j + 1.
        for (j, layer) in report.shift_layers.iter().enumerate() {
            assert_eq!(layer, &vec![j as u64 + 1]);
        }
    }

    #[test]
    fn wold_of_bijection_is_all_unitary() {
        let ustar = SeqOperator::builtin("example_242_Ustar").unwrap();
        let report = seq_wold(&ustar, 200).unwrap();
        assert!(report.wandering.is_empty());
        assert_eq!(report.unitary.len(), 200);
        assert!(report.undetermined.is_empty());
    }

    #[test]
    fn wold_of_double_shift_matches_brute_force() {
        let double = SeqOperator::builtin("double_shift").unwrap();
        let horizon = 256;
        let report = seq_wold(&double, horizon).unwrap();
        // Brute-force oracle: forward-iterate images of the window.
        let odds: Vec<u64> = (1..=horizon).filter(|n| n % 2 == 1).collect();
        assert_eq!(report.wandering, odds);
        let mut expected_layers: Vec<Vec<u64>> = Vec::new();
        let mut layer: Vec<u64> = odds.clone();
        while !layer.is_empty() {
            expected_layers.push(layer.clone());
            layer = layer
                .iter()
                .map(|&n| n * 2)
                .filter(|&n| n <= horizon)
                .collect();
        }
        assert_eq!(report.shift_layers, expected_layers);
        assert!(report.unitary.is_empty());
        assert!(report.undetermined.is_empty());
    }

    #[test]
    fn wold_partition_property() {
        for name in BUILTIN_NAMES {
            let op = SeqOperator::builtin(name).unwrap();
            let horizon = 300;
            let report = seq_wold(&op, horizon).unwrap();
            let mut seen = HashSet::new();
            for &k in report
                .unitary
                .iter()
                .chain(report.undetermined.iter())
                .chain(report.shift_layers.iter().flatten())
            {
                assert!(seen.insert(k), "{name}: index {k} classified twice");
            }
            assert_eq!(seen.len() as u64, horizon, "{name}: partition incomplete");
            // Wandering indices coincide with layer zero.
            let layer0 = report.shift_layers.first().cloned().unwrap_or_default();
            assert_eq!(report.wandering, layer0);
        }
    }

    #[test]
    fn wold_reports_escaping_orbits_as_undetermined() {
        // Redirect 4 -> huge and huge' -> 5: the backward orbit of 5 leaves
        // the window immediately, so 5 and its descendants stay undetermined.
        let op = SeqOperator::new(BaseRule::Shift { offset: 1 }, Weight::Unit, "shift with jump")
            .with_override(4, 1_000_000_000)
            .with_override(999_999_999, 5);
        let report = seq_wold(&op, 64).unwrap();
        assert!(report.undetermined.contains(&5));
        assert!(!report.undetermined.contains(&1));
        assert!(report.wandering.contains(&1));
        // The band begins exactly at the redirected index.
        assert!(report.shift_layers.iter().flatten().all(|&k| k <= 4));
    }

    #[test]
    fn truncation_agrees_with_dense_inner_product() {
        // The flat inner product of the weighted model is the A-inner product
        // of diag(1/w). Summation order and operations match, so values agree
        // bit for bit on finitely supported vectors (exactly representable
        // weights like 1/2 are exact in both backends).
        let n = 8usize;
        let weight = Weight::Dirichlet;
        let entries: Vec<f64> = (1..=n as u64).map(|k| 1.0 / weight.w(k)).collect();
        let form = AForm::new(CMatrix::diag_real(&entries)).unwrap();
        let f: Vec<C64> = (0..n).map(|i| C64::new((i % 3) as f64, -((i % 2) as f64))).collect();
        let g: Vec<C64> = (0..n).map(|i| C64::new(1.0, (i % 4) as f64)).collect();
        let dense = form.a_inner(&f, &g);
        let exact = (0..n).fold(C64::new(0.0, 0.0), |acc, i| {
            acc + (f[i] * (1.0 / weight.w(i as u64 + 1))) * g[i].conj()
        });
        assert_eq!(dense, exact);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn wold_partitions_any_window(horizon in 8u64..600, which in 0usize..4) {
            let op = SeqOperator::builtin(BUILTIN_NAMES[which]).unwrap();
            let report = seq_wold(&op, horizon).unwrap();
            let mut seen = HashSet::new();
            for &k in report
                .unitary
                .iter()
                .chain(report.undetermined.iter())
                .chain(report.shift_layers.iter().flatten())
            {
                proptest::prop_assert!(seen.insert(k));
                proptest::prop_assert!(1 <= k && k <= horizon);
            }
            proptest::prop_assert_eq!(seen.len() as u64, horizon);
        }

        #[test]
        fn adjoint_image_inverts_forward_image(n in 1u64..5000, which in 0usize..4) {
            let op = SeqOperator::builtin(BUILTIN_NAMES[which]).unwrap();
            let adj = op.adjoint();
            if let Some(img) = op.image(n) {
                proptest::prop_assert_eq!(adj.image(img), Some(n));
            }
        }
    }

    #[test]
    fn alternating_coefficients_stay_unimodular_under_adjoint() {
        let mut op = SeqOperator::new(BaseRule::Double, Weight::Unit, "signed doubling");
        op.coeff = CoeffRule::AlternatingSign;
        assert!(seq_is_l_isometry(&op, 500));
        let adj = op.adjoint();
        for k in (2..100u64).step_by(2) {
            assert_eq!(adj.coeff_at(k).norm(), 1.0);
            // Sign transported from the preimage.
            assert_eq!(adj.coeff_at(k), op.coeff.at(k / 2).conj());
        }
    }
}
