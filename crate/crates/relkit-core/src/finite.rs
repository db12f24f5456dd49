//! Exact dynamics on finite discrete spaces.
//!
//! A relation on a finite discrete space is a directed graph; closure and
//! interior are the identity, so every theorem hypothesis holds exactly and
//! every operation here is computed without approximation. This module is
//! the independent oracle used to property-test the box engine.

use std::collections::BTreeSet;
use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub type StateSet = BTreeSet<usize>;

/// Deterministic generator used for reproducible instance sampling.
/// SplitMix64: state advances by 0x9E3779B97F4A7C15, output is the
/// xor-shift-multiply finalizer (Steele, Lea, Flood 2014).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1): top 53 bits over 2^53.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn next_below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// A directed graph on `n` states, stored as successor bitmasks.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteRelation {
    n: usize,
    succ: Vec<u64>,
}

impl FiniteRelation {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDomain("need at least one state".into()));
        }
        if n > 64 {
            return Err(Error::Capacity(format!(
                "{n} states exceed the 64-state bitmask representation"
            )));
        }
        let mut succ = vec![0u64; n];
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Range(format!("edge ({i}, {j}) with {n} states")));
            }
            succ[i] |= 1 << j;
        }
        Ok(FiniteRelation { n, succ })
    }

    /// Each of the n^2 possible edges is included independently with the
    /// given probability; the scan order is source-major. Deterministic in
    /// the seed.
    pub fn random(n: usize, density: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::InvalidDomain(format!(
                "density {density} outside [0, 1]"
            )));
        }
        let mut rng = SplitMix64::new(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if rng.next_f64() < density {
                    edges.push((i, j));
                }
            }
        }
        Self::new(n, edges)
    }

    pub fn states(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.succ[i] & (1 << j) != 0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(|m| m.count_ones() as usize).sum()
    }

    fn full_mask(&self) -> u64 {
        if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        }
    }

    fn check_set(&self, s: &StateSet) -> Result<u64> {
        let mut mask = 0u64;
        for &i in s {
            if i >= self.n {
                return Err(Error::Range(format!("state {i} with {} states", self.n)));
            }
            mask |= 1 << i;
        }
        Ok(mask)
    }

    fn to_set(mask: u64) -> StateSet {
        (0..64).filter(|&i| mask & (1 << i) != 0).collect()
    }

    pub fn image_mask(&self, s: u64) -> u64 {
        let mut out = 0u64;
        let mut rest = s;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            out |= self.succ[i];
        }
        out
    }

    /// Exact successor set.
    pub fn image(&self, s: &StateSet) -> Result<StateSet> {
        Ok(Self::to_set(self.image_mask(self.check_set(s)?)))
    }

    /// Exact omega limit: the iterate sequence of subsets eventually cycles
    /// and the limit of the tail unions is the union over one full cycle.
    pub fn omega_mask(&self, s: u64) -> u64 {
        let mut seen: HashMap<u64, usize> = HashMap::new();
        let mut history: Vec<u64> = Vec::new();
        let mut cur = s;
        loop {
            if let Some(&enter) = seen.get(&cur) {
                return history[enter..].iter().fold(0, |acc, m| acc | m);
            }
            seen.insert(cur, history.len());
            history.push(cur);
            cur = self.image_mask(cur);
        }
    }

    /// Tail union of all iterates without the refinement down to the
    /// invariant cycle core. Deliberately wrong except on invariant inputs;
    /// used as the mutation target that the theorem suite must catch.
    pub fn omega_mask_unrefined(&self, s: u64) -> u64 {
        let mut seen = BTreeSet::new();
        let mut acc = 0u64;
        let mut cur = s;
        while seen.insert(cur) {
            acc |= cur;
            cur = self.image_mask(cur);
        }
        acc
    }

    pub fn omega(&self, s: &StateSet) -> Result<StateSet> {
        Ok(Self::to_set(self.omega_mask(self.check_set(s)?)))
    }

    /// Disjointness characterization: no edge from B to its complement.
    pub fn block_by_edges_mask(&self, b: u64) -> bool {
        let comp = self.full_mask() & !b;
        let mut rest = b;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if self.succ[i] & comp != 0 {
                return false;
            }
        }
        true
    }

    /// Image characterization: f(closure(B)) inside interior(B); closure and
    /// interior are the identity on a discrete space.
    pub fn block_by_image_mask(&self, b: u64) -> bool {
        self.image_mask(b) & !b & self.full_mask() == 0
    }

    pub fn is_attractor_block(&self, b: &StateSet) -> Result<bool> {
        let mask = self.check_set(b)?;
        let by_edges = self.block_by_edges_mask(mask);
        debug_assert_eq!(by_edges, self.block_by_image_mask(mask));
        Ok(by_edges)
    }

    pub fn is_attractor_mask(&self, a: u64) -> bool {
        if self.image_mask(a) != a {
            return false;
        }
        // every superset is open, so search them all for a basin
        let comp = self.full_mask() & !a;
        let mut extra = 0u64;
        loop {
            if self.omega_mask(a | extra) == a {
                return true;
            }
            if extra == comp {
                return false;
            }
            extra = (extra.wrapping_sub(comp)) & comp; // next subset of comp
        }
    }

    /// Exact attractor test: invariance plus an exhaustive search for a
    /// neighborhood whose omega limit is the set. Exponential in the number
    /// of states, hence the capacity bound.
    pub fn is_attractor(&self, a: &StateSet) -> Result<bool> {
        if self.n > 14 {
            return Err(Error::Capacity(format!(
                "attractor test enumerates supersets; {} states exceed the 14-state bound",
                self.n
            )));
        }
        Ok(self.is_attractor_mask(self.check_set(a)?))
    }
}

/// Which internal computation the suite deliberately corrupts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mutation {
    /// Omega limits skip the refinement that makes them invariant.
    DropInvariance,
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub n_max: usize,
    pub trials: usize,
    pub seed: u64,
    pub mutation: Option<Mutation>,
}

impl SuiteConfig {
    pub fn new(n_max: usize, trials: usize, seed: u64) -> Self {
        SuiteConfig {
            n_max,
            trials,
            seed,
            mutation: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteFailure {
    pub trial: usize,
    pub check: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub trials: usize,
    /// Individual predicate evaluations per check family.
    pub checks: [usize; 4],
    pub failures: Vec<SuiteFailure>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn first_counterexample(&self) -> Option<&SuiteFailure> {
        self.failures.first()
    }
}

/// Property-test the block/attractor theorems on sampled digraph instances.
///
/// T1: the two block characterizations agree on every subset.
/// T2: the omega limit of every block is invariant, inside the block, and an
///     attractor.
/// T3: for every attractor and every neighborhood of it there is a block
///     between them whose omega limit is that attractor.
/// T4: every relation with no edge leaving a block keeps an attractor inside
///     that block.
pub fn theorem_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    if config.n_max == 0 || config.n_max > 12 {
        return Err(Error::Capacity(format!(
            "suite enumerates all subsets; n_max {} outside 1..=12",
            config.n_max
        )));
    }
    let mut master = SplitMix64::new(config.seed);
    let trial_seeds: Vec<u64> = (0..config.trials).map(|_| master.next_u64()).collect();

    let results: Vec<(usize, [usize; 4], Vec<SuiteFailure>)> = trial_seeds
        .par_iter()
        .enumerate()
        .map(|(trial, &seed)| run_trial(trial, seed, config))
        .collect::<Result<_>>()?;

    let mut report = SuiteReport {
        trials: config.trials,
        ..Default::default()
    };
    for (_, checks, failures) in results {
        for k in 0..4 {
            report.checks[k] += checks[k];
        }
        report.failures.extend(failures);
    }
    Ok(report)
}

fn run_trial(
    trial: usize,
    seed: u64,
    config: &SuiteConfig,
) -> Result<(usize, [usize; 4], Vec<SuiteFailure>)> {
    let mut rng = SplitMix64::new(seed);
    let n = 1 + rng.next_below(config.n_max);
    let density = rng.next_f64();
    let rel = FiniteRelation::random(n, density, rng.next_u64())?;
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let omega = |s: u64| -> u64 {
        match config.mutation {
            Some(Mutation::DropInvariance) => rel.omega_mask_unrefined(s),
            None => rel.omega_mask(s),
        }
    };

    let mut checks = [0usize; 4];
    let mut failures = Vec::new();
    let fail = |check: &'static str, trial: usize, detail: String, out: &mut Vec<SuiteFailure>| {
        out.push(SuiteFailure {
            trial,
            check,
            detail,
        });
    };

    // T1: both characterizations agree on every subset
    let mut blocks = Vec::new();
    for b in 0..=full {
        checks[0] += 1;
        let e = rel.block_by_edges_mask(b);
        let i = rel.block_by_image_mask(b);
        if e != i {
            fail(
                "T1",
                trial,
                format!("n={n} edges={:?} B={b:#b}: edge form {e}, image form {i}", rel.edges()),
                &mut failures,
            );
        }
        if e {
            blocks.push(b);
        }
        if b == full {
            break;
        }
    }

    // T2: omega of a block is invariant, contained, and an attractor
    for &b in &blocks {
        checks[1] += 1;
        let w = omega(b);
        let invariant = rel.image_mask(w) == w;
        let contained = w & !b == 0;
        let attractor = rel.is_attractor_mask(w);
        if !(invariant && contained && attractor) {
            fail(
                "T2",
                trial,
                format!(
                    "n={n} B={b:#b} omega={w:#b}: invariant={invariant} contained={contained} attractor={attractor}"
                ),
                &mut failures,
            );
        }
    }

    // attractors by exhaustive enumeration
    let mut attractors = Vec::new();
    for a in 0..=full {
        if rel.is_attractor_mask(a) {
            attractors.push(a);
        }
        if a == full {
            break;
        }
    }

    // T3: a block exists between each attractor and each neighborhood of it
    for &a in &attractors {
        let comp = full & !a;
        let mut extra = 0u64;
        loop {
            let nbhd = a | extra;
            checks[2] += 1;
            let mut found = false;
            // subsets between a and nbhd, smallest first candidate a itself
            let between = nbhd & !a;
            let mut mid = 0u64;
            loop {
                let b = a | mid;
                if rel.block_by_edges_mask(b) && omega(b) == a {
                    found = true;
                    break;
                }
                if mid == between {
                    break;
                }
                mid = (mid.wrapping_sub(between)) & between;
            }
            if !found {
                fail(
                    "T3",
                    trial,
                    format!("n={n} attractor={a:#b} neighborhood={nbhd:#b}: no block found"),
                    &mut failures,
                );
            }
            if extra == comp {
                break;
            }
            extra = (extra.wrapping_sub(comp)) & comp;
        }
    }

    // T4: perturbed relations with no escaping edge keep an attractor in B
    let mut rng4 = SplitMix64::new(seed ^ 0xD1B54A32D192ED03);
    for &b in &blocks {
        for _ in 0..2 {
            checks[3] += 1;
            let g_density = rng4.next_f64();
            let g_raw = FiniteRelation::random(n, g_density, rng4.next_u64())?;
            // strip edges from B to its complement so that g stays admitted
            let comp = full & !b;
            let mut g_succ = g_raw.succ.clone();
            for i in 0..n {
                if b & (1 << i) != 0 {
                    g_succ[i] &= !comp;
                }
            }
            let g = FiniteRelation { n, succ: g_succ };
            let w = omega_of(&g, b, config.mutation);
            let contained = w & !b == 0;
            let attractor = g.is_attractor_mask(w);
            if !(contained && attractor) {
                fail(
                    "T4",
                    trial,
                    format!(
                        "n={n} B={b:#b} perturbed omega={w:#b}: contained={contained} attractor={attractor}"
                    ),
                    &mut failures,
                );
            }
        }
    }

    Ok((trial, checks, failures))
}

fn omega_of(rel: &FiniteRelation, s: u64, mutation: Option<Mutation>) -> u64 {
    match mutation {
        Some(Mutation::DropInvariance) => rel.omega_mask_unrefined(s),
        None => rel.omega_mask(s),
    }
}
