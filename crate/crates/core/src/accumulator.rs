//! Input-output trapping set enumerator of the terminated `1/(1+D)` accumulator.
//!
//! A trapping configuration of one accumulator is a path through the
//! extended trellis: eight edges `s_i/c/s_o` between the two encoder states,
//! starting and ending in state zero. The count of paths with `a_i` input
//! nodes, `a_o` output nodes and `b` unsatisfied checks has a closed form as
//! a double sum over the number `m` of detours through state one and the
//! number `n` of `1/1/0` self-loops at state zero.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::combinatorics::{binomial, log_binomial, log_sum_exp, BigCount, LogValue};
use crate::error::{Error, Result};

/// Largest block length accepted by the exact-mode table builders.
pub const EXACT_TABLE_CEILING: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Exact,
    Log,
}

/// A count in either representation.
#[derive(Clone, Debug, PartialEq)]
pub enum Count {
    Exact(BigCount),
    Log(LogValue),
}

/// One trapping-set class of an accumulator with block length `block_len`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AccTriple {
    pub block_len: usize,
    pub a_i: usize,
    pub a_o: usize,
    pub b: usize,
}

impl AccTriple {
    pub fn new(block_len: usize, a_i: usize, a_o: usize, b: usize) -> Result<Self> {
        for (name, v) in [("a_i", a_i), ("a_o", a_o), ("b", b)] {
            if v > block_len {
                return Err(Error::Range(format!(
                    "{name} = {v} exceeds block length {block_len}"
                )));
            }
        }
        Ok(AccTriple {
            block_len,
            a_i,
            a_o,
            b,
        })
    }

    /// Termination forces `a_i + b` even and keeps the last output node out.
    pub fn is_admissible(&self) -> bool {
        (self.a_i + self.b).is_multiple_of(2) && (self.a_o == 0 || self.a_o < self.block_len)
    }
}

/// Event counts behind one product term of the closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathDecomposition {
    /// Detours leaving state zero and remerging later.
    pub m: usize,
    /// Length-one `1/1/0` events at state zero.
    pub n: usize,
    /// Input weight on the `0 -> 1` and `1 -> 0` transitions.
    pub w_t: usize,
    /// Input weight on the `1 -> 1` transitions.
    pub w_11: usize,
}

/// An edge of the extended trellis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrellisEdge {
    pub from_state: u8,
    pub s_i: u8,
    pub c: u8,
    pub s_o: u8,
    pub to_state: u8,
}

impl TrellisEdge {
    /// All eight edges, ordered by `(from_state, s_i, s_o)`.
    pub fn all() -> [TrellisEdge; 8] {
        let mut edges = [TrellisEdge {
            from_state: 0,
            s_i: 0,
            c: 0,
            s_o: 0,
            to_state: 0,
        }; 8];
        let mut idx = 0;
        for from_state in 0..2u8 {
            for s_i in 0..2u8 {
                for s_o in 0..2u8 {
                    edges[idx] = TrellisEdge {
                        from_state,
                        s_i,
                        c: s_i ^ from_state ^ s_o,
                        s_o,
                        to_state: s_o,
                    };
                    idx += 1;
                }
            }
        }
        edges
    }

    /// Edges of the ordinary accumulator trellis (satisfied check).
    pub fn is_standard(&self) -> bool {
        self.c == 0
    }
}

/// Table of nonzero `(a_i, a_o, b) -> count` entries for one block length.
#[derive(Clone, Debug, PartialEq)]
pub struct IotseTable<V = BigCount> {
    pub block_len: usize,
    pub entries: BTreeMap<(usize, usize, usize), V>,
}

impl<V> IotseTable<V> {
    pub fn new(block_len: usize) -> Self {
        IotseTable {
            block_len,
            entries: BTreeMap::new(),
        }
    }

    pub fn get(&self, a_i: usize, a_o: usize, b: usize) -> Option<&V> {
        self.entries.get(&(a_i, a_o, b))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl IotseTable<BigCount> {
    /// Count for a class, zero when absent.
    pub fn count(&self, a_i: usize, a_o: usize, b: usize) -> BigCount {
        self.get(a_i, a_o, b).cloned().unwrap_or_default()
    }

    /// Entries grouped by input count: `rows[a_i]` lists `(a_o, b, count)`.
    pub fn rows_by_input(&self) -> Vec<Vec<(usize, usize, &BigCount)>> {
        let mut rows = vec![Vec::new(); self.block_len + 1];
        for (&(a_i, a_o, b), v) in &self.entries {
            rows[a_i].push((a_o, b, v));
        }
        rows
    }
}

/// Feasible `(m, n)` pairs of the closed form, each with a nonzero product.
fn for_each_decomposition(t: &AccTriple, mut visit: impl FnMut(PathDecomposition)) {
    if !t.is_admissible() {
        return;
    }
    let (big_n, a_i, a_o, b) = (t.block_len as i64, t.a_i as i64, t.a_o as i64, t.b as i64);
    let half_sum = (a_i + b) / 2;
    if a_o == 0 {
        // Only 1/1/0 self-loops at state zero.
        if a_i == b {
            visit(PathDecomposition {
                m: 0,
                n: t.a_i,
                w_t: 0,
                w_11: 0,
            });
        }
        return;
    }
    let m_lo = ((a_i - b).abs() / 2).max(1);
    let m_hi = a_o.min(big_n - a_o);
    for m in m_lo..=m_hi {
        let n_lo = (half_sum - a_o).max(0);
        let n_hi = (big_n - a_o - m).min(half_sum - m);
        for n in n_lo..=n_hi {
            let w_t = (a_i - b) / 2 + m;
            let w_11 = half_sum - n - m;
            visit(PathDecomposition {
                m: m as usize,
                n: n as usize,
                w_t: w_t as usize,
                w_11: w_11 as usize,
            });
        }
    }
}

/// Binomial arguments of the five factors of one product term.
fn term_factors(t: &AccTriple, d: &PathDecomposition) -> [(i64, i64); 5] {
    let (big_n, a_o) = (t.block_len as i64, t.a_o as i64);
    let (m, n) = (d.m as i64, d.n as i64);
    if t.a_o == 0 {
        return [(big_n, n), (0, 0), (0, 0), (0, 0), (0, 0)];
    }
    [
        (big_n - a_o, m),
        (a_o - 1, m - 1),
        (a_o - m, d.w_11 as i64),
        (big_n - a_o - m, n),
        (2 * m, d.w_t as i64),
    ]
}

fn exact_term(t: &AccTriple, d: &PathDecomposition) -> BigCount {
    term_factors(t, d)
        .iter()
        .fold(BigUint::one(), |acc, &(n, k)| acc * binomial(n, k))
}

fn log_term(t: &AccTriple, d: &PathDecomposition) -> LogValue {
    term_factors(t, d)
        .iter()
        .fold(LogValue::ONE, |acc, &(n, k)| acc.mul(log_binomial(n, k)))
}

/// Exact closed-form count of trapping configurations of one accumulator.
pub fn acc_iotse(t: &AccTriple) -> BigCount {
    let mut total = BigUint::zero();
    for_each_decomposition(t, |d| total += exact_term(t, &d));
    total
}

/// Log-domain closed form; terms summed in `(m, n)` order.
pub fn acc_iotse_log(t: &AccTriple) -> LogValue {
    let mut terms = Vec::new();
    for_each_decomposition(t, |d| terms.push(log_term(t, &d)));
    log_sum_exp(&terms)
}

pub fn acc_iotse_in(t: &AccTriple, mode: Mode) -> Count {
    match mode {
        Mode::Exact => Count::Exact(acc_iotse(t)),
        Mode::Log => Count::Log(acc_iotse_log(t)),
    }
}

/// Per-`(m, n)` product terms; they sum to [`acc_iotse`].
pub fn decompositions(t: &AccTriple) -> Vec<(PathDecomposition, BigCount)> {
    let mut out = Vec::new();
    for_each_decomposition(t, |d| out.push((d, exact_term(t, &d))));
    out
}

/// Input-output weight enumerator of the accumulator (no unsatisfied checks).
pub fn acc_iowe(block_len: usize, w: usize, d: usize) -> Result<BigCount> {
    if w > block_len || d > block_len {
        return Err(Error::Range(format!(
            "weights ({w}, {d}) exceed block length {block_len}"
        )));
    }
    if w == 0 {
        return Ok(if d == 0 {
            BigUint::one()
        } else {
            BigUint::zero()
        });
    }
    if w % 2 == 1 {
        return Ok(BigUint::zero());
    }
    let (big_n, w, d) = (block_len as i64, w as i64, d as i64);
    Ok(binomial(big_n - d, w / 2) * binomial(d - 1, w / 2 - 1))
}

fn check_table_len(block_len: usize, ceiling: Option<usize>) -> Result<()> {
    if block_len == 0 {
        return Err(Error::Range("block length must be at least 1".into()));
    }
    if let Some(max) = ceiling {
        if block_len > max {
            return Err(Error::Resource(format!(
                "exact table for N = {block_len} exceeds the ceiling N = {max}"
            )));
        }
    }
    Ok(())
}

fn build_table<V: Send>(
    block_len: usize,
    eval: impl Fn(&AccTriple) -> Option<V> + Sync,
) -> IotseTable<V> {
    let rows: Vec<Vec<((usize, usize, usize), V)>> = (0..=block_len)
        .into_par_iter()
        .map(|a_i| {
            let mut row = Vec::new();
            for a_o in 0..block_len {
                for b in (a_i % 2..=block_len).step_by(2) {
                    let t = AccTriple {
                        block_len,
                        a_i,
                        a_o,
                        b,
                    };
                    if let Some(v) = eval(&t) {
                        row.push(((a_i, a_o, b), v));
                    }
                }
            }
            row
        })
        .collect();
    IotseTable {
        block_len,
        entries: rows.into_iter().flatten().collect(),
    }
}

/// Exact table over every class with a nonzero count.
pub fn acc_iotse_table(block_len: usize) -> Result<IotseTable<BigCount>> {
    check_table_len(block_len, Some(EXACT_TABLE_CEILING))?;
    Ok(build_table(block_len, |t| {
        let v = acc_iotse(t);
        (!v.is_zero()).then_some(v)
    }))
}

pub fn acc_iotse_table_log(block_len: usize) -> Result<IotseTable<LogValue>> {
    check_table_len(block_len, None)?;
    Ok(build_table(block_len, |t| {
        let v = acc_iotse_log(t);
        (!v.is_zero()).then_some(v)
    }))
}
