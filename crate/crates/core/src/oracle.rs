//! Brute-force witnesses for the closed forms.
//!
//! Three independent routes: a dynamic program over the extended trellis,
//! exhaustive enumeration of input/output subset pairs of one accumulator,
//! and literal averaging over every interleaver tuple of the full factor
//! graph. [`verify_all`] cross-checks them against the enumerators.

use std::collections::BTreeMap;
use std::fmt::Display;

use itertools::Itertools;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::accumulator::{
    acc_iotse, acc_iotse_table, acc_iowe, AccTriple, IotseTable, TrellisEdge,
};
use crate::combinatorics::{binomial, BigCount, ExactRatio};
use crate::ensemble::{ensemble_table, format_ratio, Ceilings, EnsembleConfig, TrappingSetClass};
use crate::error::{Error, Result};

pub const TRELLIS_DP_CEILING: usize = 48;
pub const EXHAUSTIVE_ACC_CEILING: usize = 12;
/// Budget on `(N!)^L * 2^(K + L(N-1))` for [`graph_ensemble_average`].
pub const GRAPH_WORK_BUDGET: u128 = 1_000_000_000;

/// Interleaver: `v[k] = x[mapping[k]]`, zero-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; mapping.len()];
        for &m in &mapping {
            if m >= mapping.len() || seen[m] {
                return Err(Error::Range(format!("{mapping:?} is not a permutation")));
            }
            seen[m] = true;
        }
        Ok(Permutation(mapping))
    }

    pub fn identity(len: usize) -> Self {
        Permutation((0..len).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.0.iter().map(|&j| x[j]).collect()
    }
}

/// Variable node of the layered factor graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarNode {
    Info(usize),
    /// `Code(level, k)`, both zero-based.
    Code(usize, usize),
}

/// Concrete Tanner graph of one ensemble member.
///
/// Variable nodes that may join a trapping set are numbered `0..universe`:
/// first the `K` information nodes, then the first `N - 1` code nodes of
/// each level. The terminal code node of every level has no index.
#[derive(Clone, Debug)]
pub struct FactorGraph {
    pub config: EnsembleConfig,
    /// Member-node neighbors of each check, as bitmasks; check `(l, k)` sits at `l * N + k`.
    pub check_masks: Vec<u64>,
    /// Checks touched by each member node, as bitmasks over check indices.
    pub node_checks: Vec<u64>,
}

impl FactorGraph {
    pub fn node_index(config: &EnsembleConfig, node: VarNode) -> Option<usize> {
        let n = config.block_len();
        match node {
            VarNode::Info(j) => Some(j),
            VarNode::Code(_, k) if k + 1 == n => None,
            VarNode::Code(l, k) => Some(config.k + l * (n - 1) + k),
        }
    }

    pub fn build(config: &EnsembleConfig, interleavers: &[Permutation]) -> Result<Self> {
        let n = config.block_len();
        if interleavers.len() != config.levels || interleavers.iter().any(|p| p.len() != n) {
            return Err(Error::Length(format!(
                "need {} interleavers of length {n}",
                config.levels
            )));
        }
        let universe = config.universe_bits();
        let checks = config.levels * n;
        if universe > 64 || checks > 64 {
            return Err(Error::Resource(format!(
                "graph with {universe} member nodes and {checks} checks exceeds 64-bit masks"
            )));
        }
        let bit = |node: VarNode| Self::node_index(config, node).map_or(0u64, |i| 1u64 << i);
        let mut check_masks = Vec::with_capacity(checks);
        for (l, pi) in interleavers.iter().enumerate() {
            for k in 0..n {
                let source = if l == 0 {
                    VarNode::Info(pi.0[k] / config.q)
                } else {
                    VarNode::Code(l - 1, pi.0[k])
                };
                let mut mask = bit(source) ^ bit(VarNode::Code(l, k));
                if k > 0 {
                    mask ^= bit(VarNode::Code(l, k - 1));
                }
                check_masks.push(mask);
            }
        }
        let mut node_checks = vec![0u64; universe];
        for (c, &mask) in check_masks.iter().enumerate() {
            for (j, slot) in node_checks.iter_mut().enumerate() {
                if mask >> j & 1 == 1 {
                    *slot |= 1u64 << c;
                }
            }
        }
        Ok(FactorGraph {
            config: *config,
            check_masks,
            node_checks,
        })
    }

    pub fn universe(&self) -> usize {
        self.node_checks.len()
    }

    /// Number of checks with an odd number of neighbors in `subset`.
    pub fn unsatisfied(&self, subset: u64) -> usize {
        self.check_masks
            .iter()
            .filter(|&&m| (m & subset).count_ones() % 2 == 1)
            .count()
    }

    /// `tally[a][b]` over every membership assignment, walked in Gray-code
    /// order so each step toggles one node and its checks' parities.
    pub fn tally(&self) -> Vec<Vec<u64>> {
        let universe = self.universe();
        let mut tally = vec![vec![0u64; self.check_masks.len() + 1]; universe + 1];
        let mut subset = 0u64;
        let mut parity = 0u64;
        tally[0][0] += 1;
        for step in 1u64..(1u64 << universe) {
            let j = step.trailing_zeros() as usize;
            subset ^= 1u64 << j;
            parity ^= self.node_checks[j];
            tally[subset.count_ones() as usize][parity.count_ones() as usize] += 1;
        }
        tally
    }
}

/// A variable-node subset with its induced `(a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MembershipAssignment {
    pub subset: u64,
    pub a: usize,
    pub b: usize,
}

impl MembershipAssignment {
    pub fn induced(graph: &FactorGraph, subset: u64) -> Self {
        MembershipAssignment {
            subset,
            a: subset.count_ones() as usize,
            b: graph.unsatisfied(subset),
        }
    }
}

/// Path counts of the extended trellis from state 0 back to state 0.
pub fn trellis_dp(block_len: usize) -> Result<IotseTable<BigCount>> {
    if block_len == 0 || block_len > TRELLIS_DP_CEILING {
        return Err(Error::Resource(format!(
            "trellis DP supports 1 <= N <= {TRELLIS_DP_CEILING}, got {block_len}"
        )));
    }
    let side = block_len + 1;
    let idx =
        |s: usize, a_i: usize, a_o: usize, b: usize| ((s * side + a_i) * side + a_o) * side + b;
    let edges = TrellisEdge::all();
    // Total paths are 2^N * 2^N < 2^128 for N <= 48.
    let mut cur = vec![0u128; 2 * side * side * side];
    cur[idx(0, 0, 0, 0)] = 1;
    for pos in 0..block_len {
        let mut next = vec![0u128; cur.len()];
        for s in 0..2 {
            for a_i in 0..=pos {
                for a_o in 0..=pos {
                    for b in 0..=pos {
                        let v = cur[idx(s, a_i, a_o, b)];
                        if v == 0 {
                            continue;
                        }
                        for e in edges.iter().filter(|e| e.from_state as usize == s) {
                            let j = idx(
                                e.to_state as usize,
                                a_i + e.s_i as usize,
                                a_o + e.s_o as usize,
                                b + e.c as usize,
                            );
                            next[j] += v;
                        }
                    }
                }
            }
        }
        cur = next;
    }
    let mut table = IotseTable::new(block_len);
    for a_i in 0..side {
        for a_o in 0..side {
            for b in 0..side {
                let v = cur[idx(0, a_i, a_o, b)];
                if v > 0 {
                    table.entries.insert((a_i, a_o, b), BigUint::from(v));
                }
            }
        }
    }
    Ok(table)
}

/// Tallies every input subset and every output subset that leaves the last
/// output node out, with per-position check parity `I_k ^ O_(k-1) ^ O_k`.
pub fn exhaustive_acc(block_len: usize) -> Result<IotseTable<BigCount>> {
    if block_len == 0 || block_len > EXHAUSTIVE_ACC_CEILING {
        return Err(Error::Range(format!(
            "exhaustive enumeration supports 1 <= N <= {EXHAUSTIVE_ACC_CEILING}, got {block_len}"
        )));
    }
    let side = block_len + 1;
    let full = (1u32 << block_len) - 1;
    let tallies: Vec<Vec<u64>> = (0u32..1 << block_len)
        .into_par_iter()
        .map(|inputs| {
            let mut local = vec![0u64; side * side];
            let a_i = inputs.count_ones() as usize;
            for outputs in 0u32..1 << (block_len - 1) {
                let checks = (inputs ^ outputs ^ (outputs << 1)) & full;
                local[outputs.count_ones() as usize * side + checks.count_ones() as usize] += 1;
            }
            let _ = a_i;
            local
        })
        .collect();
    let mut table = IotseTable::new(block_len);
    for (inputs, local) in tallies.iter().enumerate() {
        let a_i = (inputs as u32).count_ones() as usize;
        for (j, &v) in local.iter().enumerate() {
            if v > 0 {
                *table
                    .entries
                    .entry((a_i, j / side, j % side))
                    .or_insert_with(BigUint::zero) += BigUint::from(v);
            }
        }
    }
    Ok(table)
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// The `index`-th tuple of interleavers in mixed-radix order over all permutations.
fn interleaver_tuple(perms: &[Vec<usize>], levels: usize, mut index: usize) -> Vec<Permutation> {
    let mut tuple = Vec::with_capacity(levels);
    for _ in 0..levels {
        tuple.push(Permutation(perms[index % perms.len()].clone()));
        index /= perms.len();
    }
    tuple.reverse();
    tuple
}

/// Ensemble average of the `(a, b)` tally over every interleaver tuple.
pub fn graph_ensemble_average(
    config: &EnsembleConfig,
) -> Result<BTreeMap<TrappingSetClass, ExactRatio>> {
    let n = config.block_len();
    let tuples = factorial(n).checked_pow(config.levels as u32);
    let work = tuples.and_then(|t| t.checked_mul(1u128 << config.universe_bits().min(127)));
    let tuples = match (tuples, work) {
        (Some(t), Some(w)) if w <= GRAPH_WORK_BUDGET => t as usize,
        _ => {
            return Err(Error::Resource(format!(
                "graph oracle for {config:?} exceeds the budget of {GRAPH_WORK_BUDGET}"
            )))
        }
    };
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let universe = config.universe_bits();
    let checks = config.levels * n;
    let totals = (0..tuples)
        .into_par_iter()
        .map(|i| {
            let graph = FactorGraph::build(config, &interleaver_tuple(&perms, config.levels, i))?;
            Ok(graph.tally())
        })
        .try_reduce(
            || vec![vec![0u64; checks + 1]; universe + 1],
            |mut acc, t| {
                for (row, trow) in acc.iter_mut().zip(t) {
                    for (x, y) in row.iter_mut().zip(trow) {
                        *x += y;
                    }
                }
                Ok(acc)
            },
        )?;
    let den = BigInt::from(tuples);
    let mut table = BTreeMap::new();
    for (a, row) in totals.iter().enumerate() {
        for (b, &v) in row.iter().enumerate() {
            if v > 0 {
                table.insert(
                    TrappingSetClass { a, b },
                    BigRational::new(BigInt::from(v), den.clone()),
                );
            }
        }
    }
    Ok(table)
}

/// Encoder output: the repetition layer and each accumulator's codeword.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedLayers {
    pub repeated: Vec<u8>,
    pub levels: Vec<Vec<u8>>,
}

/// Repeat each bit `q` times, then interleave and accumulate level by level
/// (`x_k = x_(k-1) + v_k`, `x_0 = 0`).
pub fn encode(u: &[u8], q: usize, interleavers: &[Permutation]) -> Result<EncodedLayers> {
    let n = u.len() * q;
    if let Some(p) = interleavers.iter().find(|p| p.len() != n) {
        return Err(Error::Length(format!(
            "interleaver of length {} for N = {n}",
            p.len()
        )));
    }
    let repeated: Vec<u8> = u
        .iter()
        .flat_map(|&bit| std::iter::repeat(bit & 1).take(q))
        .collect();
    let mut levels = Vec::with_capacity(interleavers.len());
    let mut input = repeated.clone();
    for pi in interleavers {
        let mut state = 0u8;
        let x: Vec<u8> = pi
            .apply(&input)
            .into_iter()
            .map(|v| {
                state ^= v;
                state
            })
            .collect();
        input = x.clone();
        levels.push(x);
    }
    Ok(EncodedLayers { repeated, levels })
}

impl EncodedLayers {
    /// Support as a membership subset, if every level ends in state zero.
    pub fn support(&self, config: &EnsembleConfig, u: &[u8]) -> Option<u64> {
        if self.levels.iter().any(|x| x.last() == Some(&1)) {
            return None;
        }
        let mut subset = 0u64;
        for (j, &bit) in u.iter().enumerate() {
            if bit == 1 {
                subset |= 1 << j;
            }
        }
        for (l, x) in self.levels.iter().enumerate() {
            for (k, &bit) in x.iter().enumerate() {
                if bit == 1 {
                    let idx = FactorGraph::node_index(config, VarNode::Code(l, k))?;
                    subset |= 1 << idx;
                }
            }
        }
        Some(subset)
    }
}

/// First disagreement between two tables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub key: Vec<usize>,
    pub expected: String,
    pub actual: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Comparison {
    pub name: String,
    pub classes_checked: u64,
    pub mismatch: Option<Mismatch>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub comparisons: Vec<Comparison>,
    pub mismatches: usize,
}

impl OracleReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches == 0
    }

    pub fn first_mismatch(&self) -> Option<(&str, &Mismatch)> {
        self.comparisons
            .iter()
            .find_map(|c| c.mismatch.as_ref().map(|m| (c.name.as_str(), m)))
    }

    fn push(&mut self, c: Comparison) {
        if c.mismatch.is_some() {
            self.mismatches += 1;
        }
        self.comparisons.push(c);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Running comparison of keyed values; remembers only the first mismatch.
struct Tracker {
    name: String,
    checked: u64,
    mismatch: Option<Mismatch>,
}

impl Tracker {
    fn new(name: impl Into<String>) -> Self {
        Tracker {
            name: name.into(),
            checked: 0,
            mismatch: None,
        }
    }

    fn check<V: PartialEq + Display>(&mut self, key: Vec<usize>, expected: &V, actual: &V) {
        self.checked += 1;
        if self.mismatch.is_none() && expected != actual {
            self.mismatch = Some(Mismatch {
                key,
                expected: expected.to_string(),
                actual: actual.to_string(),
            });
        }
    }

    fn fail(&mut self, key: Vec<usize>, expected: String, actual: String) {
        self.checked += 1;
        if self.mismatch.is_none() {
            self.mismatch = Some(Mismatch {
                key,
                expected,
                actual,
            });
        }
    }

    fn finish(self) -> Comparison {
        Comparison {
            name: self.name,
            classes_checked: self.checked,
            mismatch: self.mismatch,
        }
    }
}

/// Compares every key of either table, treating absent keys as zero.
fn compare_maps<K: Ord + Clone, V: PartialEq + Display + Default>(
    tracker: &mut Tracker,
    prefix: &[usize],
    expected: &BTreeMap<K, V>,
    actual: &BTreeMap<K, V>,
    key_vec: impl Fn(&K) -> Vec<usize>,
) {
    let zero = V::default();
    let keys: Vec<&K> = expected.keys().merge(actual.keys()).dedup().collect();
    for k in keys {
        let mut key = prefix.to_vec();
        key.extend(key_vec(k));
        tracker.check(
            key,
            expected.get(k).unwrap_or(&zero),
            actual.get(k).unwrap_or(&zero),
        );
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyLimits {
    /// Largest `N` for exhaustive subset pairs against the trellis DP.
    pub exhaustive_max_n: usize,
    /// Largest `N` for the closed form against the trellis DP and the row sums.
    pub trellis_max_n: usize,
    /// Largest `N` for the b = 0 corollary.
    pub iowe_max_n: usize,
    /// Closure identity over `q <= max_q`, `K <= max_k`, `L <= max_levels`.
    pub closure_max_q: usize,
    pub closure_max_k: usize,
    pub closure_max_levels: usize,
    /// Configurations averaged literally over all interleavers.
    pub graph_configs: Vec<EnsembleConfig>,
}

impl Default for VerifyLimits {
    fn default() -> Self {
        VerifyLimits {
            exhaustive_max_n: 12,
            trellis_max_n: 32,
            iowe_max_n: 64,
            closure_max_q: 3,
            closure_max_k: 4,
            closure_max_levels: 3,
            graph_configs: vec![
                EnsembleConfig {
                    q: 2,
                    k: 2,
                    levels: 1,
                },
                EnsembleConfig {
                    q: 2,
                    k: 2,
                    levels: 2,
                },
            ],
        }
    }
}

impl VerifyLimits {
    /// Default limits with every block length capped at `max_n`.
    pub fn with_max_n(max_n: usize) -> Self {
        let d = VerifyLimits::default();
        let graph_configs = if max_n >= 4 {
            d.graph_configs
        } else {
            vec![EnsembleConfig {
                q: 1,
                k: max_n.max(1),
                levels: 1,
            }]
        };
        VerifyLimits {
            exhaustive_max_n: d.exhaustive_max_n.min(max_n),
            trellis_max_n: d.trellis_max_n.min(max_n),
            iowe_max_n: d.iowe_max_n.min(max_n),
            closure_max_q: d.closure_max_q.min(max_n),
            closure_max_k: d.closure_max_k.min(max_n),
            graph_configs,
            ..d
        }
    }
}

/// Implementations under test; the defaults are the library enumerators.
pub struct Subjects<'a> {
    pub iotse_table: &'a (dyn Fn(usize) -> Result<IotseTable<BigCount>> + Sync),
    pub iotse: &'a (dyn Fn(&AccTriple) -> BigCount + Sync),
}

impl Default for Subjects<'static> {
    fn default() -> Self {
        Subjects {
            iotse_table: &acc_iotse_table,
            iotse: &acc_iotse,
        }
    }
}

fn triple_key(k: &(usize, usize, usize)) -> Vec<usize> {
    vec![k.0, k.1, k.2]
}

fn class_key(k: &TrappingSetClass) -> Vec<usize> {
    vec![k.a, k.b]
}

fn error_comparison(name: &str, e: Error) -> Comparison {
    Comparison {
        name: name.to_string(),
        classes_checked: 0,
        mismatch: Some(Mismatch {
            key: vec![],
            expected: "a table".into(),
            actual: e.to_string(),
        }),
    }
}

pub fn verify_all(limits: &VerifyLimits) -> OracleReport {
    verify_subjects(limits, &Subjects::default())
}

/// Runs every cross-oracle equality and identity within `limits`.
pub fn verify_subjects(limits: &VerifyLimits, subjects: &Subjects<'_>) -> OracleReport {
    let mut report = OracleReport::default();

    let mut t = Tracker::new("trellis_dp = exhaustive_acc");
    for n in 1..=limits.exhaustive_max_n {
        match (trellis_dp(n), exhaustive_acc(n)) {
            (Ok(dp), Ok(ex)) => compare_maps(&mut t, &[n], &dp.entries, &ex.entries, triple_key),
            (Err(e), _) | (_, Err(e)) => t.fail(vec![n], "table".into(), e.to_string()),
        }
    }
    report.push(t.finish());

    let mut t = Tracker::new("acc_iotse_table = trellis_dp");
    let mut rows = Tracker::new("row sums = C(N, a_i) C(N-1, a_o)");
    for n in 1..=limits.trellis_max_n {
        let (closed, dp) = match ((subjects.iotse_table)(n), trellis_dp(n)) {
            (Ok(c), Ok(d)) => (c, d),
            (Err(e), _) | (_, Err(e)) => {
                t.fail(vec![n], "table".into(), e.to_string());
                continue;
            }
        };
        compare_maps(&mut t, &[n], &dp.entries, &closed.entries, triple_key);
        let mut sums = vec![vec![BigUint::zero(); n + 1]; n + 1];
        for (&(a_i, a_o, _), v) in &closed.entries {
            if a_i <= n && a_o <= n {
                sums[a_i][a_o] += v;
            }
        }
        for (a_i, row) in sums.iter().enumerate() {
            for (a_o, s) in row.iter().enumerate() {
                let expected = binomial(n as i64, a_i as i64) * binomial(n as i64 - 1, a_o as i64);
                rows.check(vec![n, a_i, a_o], &expected, s);
            }
        }
    }
    report.push(t.finish());
    report.push(rows.finish());

    let mut t = Tracker::new("acc_iotse(b = 0) = acc_iowe");
    for n in 1..=limits.iowe_max_n {
        for w in 0..=n {
            for d in 0..=n {
                let closed = (subjects.iotse)(&AccTriple {
                    block_len: n,
                    a_i: w,
                    a_o: d,
                    b: 0,
                });
                match acc_iowe(n, w, d) {
                    Ok(iowe) => t.check(vec![n, w, d], &iowe, &closed),
                    Err(e) => t.fail(vec![n, w, d], closed.to_string(), e.to_string()),
                }
            }
        }
    }
    report.push(t.finish());

    let mut t = Tracker::new("closure: sum of ensemble_table = 2^(K + L(N-1))");
    let ceilings = Ceilings::default();
    for q in 1..=limits.closure_max_q {
        for k in 1..=limits.closure_max_k {
            for levels in 1..=limits.closure_max_levels {
                let config = EnsembleConfig { q, k, levels };
                let key = vec![q, k, levels];
                match ensemble_table(&config, &ceilings) {
                    Ok(table) => {
                        let total: ExactRatio = table.values().sum();
                        let expected =
                            BigRational::from_integer(BigInt::one() << config.universe_bits());
                        t.check(key, &RatioDisplay(expected), &RatioDisplay(total));
                    }
                    Err(e) => t.fail(key, "table".into(), e.to_string()),
                }
            }
        }
    }
    report.push(t.finish());

    for config in &limits.graph_configs {
        let name = format!(
            "ensemble_table = graph_ensemble_average (q={}, K={}, L={})",
            config.q, config.k, config.levels
        );
        match (
            ensemble_table(config, &ceilings),
            graph_ensemble_average(config),
        ) {
            (Ok(closed), Ok(graph)) => {
                let mut t = Tracker::new(name);
                let wrap = |m: BTreeMap<TrappingSetClass, ExactRatio>| -> BTreeMap<_, _> {
                    m.into_iter().map(|(k, v)| (k, RatioDisplay(v))).collect()
                };
                compare_maps(&mut t, &[], &wrap(graph), &wrap(closed), class_key);
                report.push(t.finish());
            }
            (Err(e), _) | (_, Err(e)) => report.push(error_comparison(&name, e)),
        }
        report.push(codeword_support_check(config));
    }

    report
}

/// Every terminated codeword's support must induce no unsatisfied check.
pub fn codeword_support_check(config: &EnsembleConfig) -> Comparison {
    let name = format!(
        "codeword supports induce b = 0 (q={}, K={}, L={})",
        config.q, config.k, config.levels
    );
    let mut t = Tracker::new(name);
    let n = config.block_len();
    let tuples = factorial(n)
        .checked_pow(config.levels as u32)
        .unwrap_or(u128::MAX);
    if tuples.saturating_mul(1u128 << config.k.min(127)) > GRAPH_WORK_BUDGET {
        t.fail(vec![], "within budget".into(), "budget exceeded".into());
        return t.finish();
    }
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    for i in 0..tuples as usize {
        let tuple = interleaver_tuple(&perms, config.levels, i);
        let graph = match FactorGraph::build(config, &tuple) {
            Ok(g) => g,
            Err(e) => {
                t.fail(vec![i], "graph".into(), e.to_string());
                break;
            }
        };
        for bits in 0u64..1 << config.k {
            let u: Vec<u8> = (0..config.k).map(|j| (bits >> j & 1) as u8).collect();
            let layers = encode(&u, config.q, &tuple).expect("lengths match");
            if let Some(subset) = layers.support(config, &u) {
                let b = graph.unsatisfied(subset);
                t.check(vec![i, bits as usize], &0usize, &b);
            }
        }
    }
    t.finish()
}

/// Display adapter printing rationals as `num` or `num/den`.
#[derive(Clone, Debug, PartialEq, Default)]
struct RatioDisplay(ExactRatio);

impl Display for RatioDisplay {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", format_ratio(&self.0))
    }
}
