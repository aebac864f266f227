//! Uniform-interleaver composition of the repetition code and a chain of
//! accumulators into ensemble-average trapping set counts.
//!
//! Level `l` of the chain turns `a_i_l` input nodes into `a_o_l` output nodes
//! with `b_l` unsatisfied checks. The repetition code feeds `q * w` nodes into
//! level 1 and each further level reads the previous level's output. Every
//! interleaver contributes a division by `C(N, a_i_l)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::accumulator::{
    acc_iotse, acc_iotse_log, acc_iotse_table, acc_iotse_table_log, AccTriple, Mode,
};
use crate::combinatorics::{
    binomial, log_binomial, log_sum_exp, ratio_from_count, BigCount, ExactRatio, LogValue,
};
use crate::error::{Error, Result};

/// Computation ceilings on the inner block length `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ceilings {
    pub exact_table: usize,
    pub exact_class: usize,
    pub log: usize,
}

impl Default for Ceilings {
    fn default() -> Self {
        Ceilings {
            exact_table: 64,
            exact_class: 128,
            log: 512,
        }
    }
}

/// Repetition factor `q`, information length `K` and `levels` accumulators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EnsembleConfig {
    pub q: usize,
    pub k: usize,
    pub levels: usize,
}

impl EnsembleConfig {
    pub fn new(q: usize, k: usize, levels: usize) -> Result<Self> {
        if q == 0 || k == 0 || levels == 0 {
            return Err(Error::Range(format!(
                "q, K and L must be at least 1 (got q={q}, K={k}, L={levels})"
            )));
        }
        Ok(EnsembleConfig { q, k, levels })
    }

    /// Inner block length `N = q K`.
    pub fn block_len(&self) -> usize {
        self.q * self.k
    }

    pub fn rate(&self) -> f64 {
        1.0 / self.q as f64
    }

    /// Upper bound on `a`: each accumulator's final output node is excluded.
    pub fn max_set_size(&self) -> usize {
        self.k + self.levels * (self.block_len() - 1)
    }

    pub fn max_unsatisfied(&self) -> usize {
        self.levels * self.block_len()
    }

    /// Number of variable nodes that may join a trapping set.
    pub fn universe_bits(&self) -> usize {
        self.max_set_size()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrappingSetClass {
    pub a: usize,
    pub b: usize,
}

impl TrappingSetClass {
    pub fn validate(&self, config: &EnsembleConfig) -> Result<()> {
        if self.a > config.max_set_size() || self.b > config.max_unsatisfied() {
            return Err(Error::Range(format!(
                "class (a={}, b={}) outside 0..={} x 0..={}",
                self.a,
                self.b,
                config.max_set_size(),
                config.max_unsatisfied()
            )));
        }
        Ok(())
    }
}

/// Per-level split `(a_o_l, b_l)` of a class, plus the information weight `w`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConditionalProfile {
    pub w: usize,
    pub levels: Vec<(usize, usize)>,
}

impl ConditionalProfile {
    pub fn class(&self) -> TrappingSetClass {
        TrappingSetClass {
            a: self.w + self.levels.iter().map(|l| l.0).sum::<usize>(),
            b: self.levels.iter().map(|l| l.1).sum(),
        }
    }

    /// `(a_i_l, a_o_l, b_l)` for each level.
    pub fn triples(&self, config: &EnsembleConfig) -> Vec<(usize, usize, usize)> {
        let mut input = config.q * self.w;
        self.levels
            .iter()
            .map(|&(a_o, b)| {
                let t = (input, a_o, b);
                input = a_o;
                t
            })
            .collect()
    }
}

/// An ensemble average in either representation.
#[derive(Clone, Debug, PartialEq)]
pub enum Average {
    Exact(ExactRatio),
    Log(LogValue),
}

impl Average {
    pub fn is_zero(&self) -> bool {
        match self {
            Average::Exact(r) => r.is_zero(),
            Average::Log(l) => l.is_zero(),
        }
    }

    pub fn ln(&self) -> f64 {
        match self {
            Average::Exact(r) => LogValue::from_ratio(r).ln(),
            Average::Log(l) => l.ln(),
        }
    }
}

impl fmt::Display for Average {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Average::Exact(r) => write!(f, "{}", format_ratio(r)),
            Average::Log(l) => write!(f, "{l}"),
        }
    }
}

/// `"num"` for integers and `"num/den"` otherwise.
pub fn format_ratio(r: &ExactRatio) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TseResult {
    pub value: Average,
    pub breakdown: Option<Vec<(ConditionalProfile, Average)>>,
}

fn check_block_len(config: &EnsembleConfig, max: usize, what: &str) -> Result<()> {
    if config.block_len() > max {
        return Err(Error::Resource(format!(
            "{what} for N = {} exceeds the ceiling N = {max}",
            config.block_len()
        )));
    }
    Ok(())
}

/// Lazily evaluated component counts at one block length.
struct ComponentCache {
    block_len: usize,
    exact: HashMap<(usize, usize, usize), BigCount>,
    log: HashMap<(usize, usize, usize), LogValue>,
}

impl ComponentCache {
    fn new(block_len: usize) -> Self {
        ComponentCache {
            block_len,
            exact: HashMap::new(),
            log: HashMap::new(),
        }
    }

    fn triple(&self, key: (usize, usize, usize)) -> AccTriple {
        AccTriple {
            block_len: self.block_len,
            a_i: key.0,
            a_o: key.1,
            b: key.2,
        }
    }

    fn exact(&mut self, key: (usize, usize, usize)) -> &BigCount {
        let t = self.triple(key);
        self.exact.entry(key).or_insert_with(|| acc_iotse(&t))
    }

    fn log(&mut self, key: (usize, usize, usize)) -> LogValue {
        let t = self.triple(key);
        *self.log.entry(key).or_insert_with(|| acc_iotse_log(&t))
    }
}

fn profile_fits(config: &EnsembleConfig, profile: &ConditionalProfile) -> Result<bool> {
    if profile.levels.len() != config.levels {
        return Err(Error::Length(format!(
            "profile has {} levels, ensemble has {}",
            profile.levels.len(),
            config.levels
        )));
    }
    if profile.w > config.k {
        return Err(Error::Range(format!(
            "w = {} exceeds K = {}",
            profile.w, config.k
        )));
    }
    let n = config.block_len();
    for (a_i, a_o, b) in profile.triples(config) {
        AccTriple::new(n, a_i, a_o, b)?;
    }
    Ok(true)
}

fn conditional_exact(
    config: &EnsembleConfig,
    profile: &ConditionalProfile,
    cache: &mut ComponentCache,
) -> ExactRatio {
    let n = config.block_len() as i64;
    let mut num = binomial(config.k as i64, profile.w as i64);
    let mut den = BigUint::one();
    for key in profile.triples(config) {
        if num.is_zero() {
            break;
        }
        num *= cache.exact(key);
        den *= binomial(n, key.0 as i64);
    }
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn conditional_log(
    config: &EnsembleConfig,
    profile: &ConditionalProfile,
    cache: &mut ComponentCache,
) -> LogValue {
    let n = config.block_len() as i64;
    let mut acc = log_binomial(config.k as i64, profile.w as i64);
    for key in profile.triples(config) {
        if acc.is_zero() {
            break;
        }
        acc = acc.mul(cache.log(key)).div(log_binomial(n, key.0 as i64));
    }
    acc
}

/// Ensemble-average count of one conditional profile. Infeasible profiles give zero.
pub fn conditional_tse(
    config: &EnsembleConfig,
    profile: &ConditionalProfile,
    mode: Mode,
) -> Result<Average> {
    profile_fits(config, profile)?;
    let mut cache = ComponentCache::new(config.block_len());
    Ok(match mode {
        Mode::Exact => Average::Exact(conditional_exact(config, profile, &mut cache)),
        Mode::Log => Average::Log(conditional_log(config, profile, &mut cache)),
    })
}

/// All parity-feasible profiles of a class, in lexicographic order of
/// `(w, a_o_1, b_1, ..., a_o_L, b_L)`.
pub fn profiles(config: &EnsembleConfig, class: TrappingSetClass) -> Vec<ConditionalProfile> {
    fn recurse(
        config: &EnsembleConfig,
        level: usize,
        input: usize,
        a_left: usize,
        b_left: usize,
        current: &mut ConditionalProfile,
        out: &mut Vec<ConditionalProfile>,
    ) {
        let n = config.block_len();
        let last = level + 1 == config.levels;
        let a_range = if last {
            a_left..=a_left
        } else {
            0..=a_left.min(n - 1)
        };
        for a_o in a_range {
            if a_o > n.saturating_sub(1) {
                continue;
            }
            let b_range = if last {
                b_left..=b_left
            } else {
                0..=b_left.min(n)
            };
            for b in b_range {
                if b > n || (input + b) % 2 == 1 {
                    continue;
                }
                current.levels.push((a_o, b));
                if last {
                    out.push(current.clone());
                } else {
                    recurse(
                        config,
                        level + 1,
                        a_o,
                        a_left - a_o,
                        b_left - b,
                        current,
                        out,
                    );
                }
                current.levels.pop();
            }
        }
    }

    let mut out = Vec::new();
    for w in 0..=class.a.min(config.k) {
        let mut current = ConditionalProfile {
            w,
            levels: Vec::with_capacity(config.levels),
        };
        recurse(
            config,
            0,
            config.q * w,
            class.a - w,
            class.b,
            &mut current,
            &mut out,
        );
    }
    out
}

/// Ensemble-average count of `(a, b)` trapping sets, summed over profiles.
pub fn ensemble_tse(
    config: &EnsembleConfig,
    class: TrappingSetClass,
    mode: Mode,
    with_breakdown: bool,
    ceilings: &Ceilings,
) -> Result<TseResult> {
    class.validate(config)?;
    match mode {
        Mode::Exact => check_block_len(config, ceilings.exact_class, "exact class query")?,
        Mode::Log => check_block_len(config, ceilings.log, "log-mode class query")?,
    }
    let mut cache = ComponentCache::new(config.block_len());
    let mut breakdown = Vec::new();
    let value = match mode {
        Mode::Exact => {
            let mut total = BigRational::zero();
            for p in profiles(config, class) {
                let v = conditional_exact(config, &p, &mut cache);
                if v.is_zero() {
                    continue;
                }
                total += &v;
                if with_breakdown {
                    breakdown.push((p, Average::Exact(v)));
                }
            }
            Average::Exact(total)
        }
        Mode::Log => {
            let mut terms = Vec::new();
            for p in profiles(config, class) {
                let v = conditional_log(config, &p, &mut cache);
                if v.is_zero() {
                    continue;
                }
                terms.push(v);
                if with_breakdown {
                    breakdown.push((p, Average::Log(v)));
                }
            }
            Average::Log(log_sum_exp(&terms))
        }
    };
    Ok(TseResult {
        value,
        breakdown: with_breakdown.then_some(breakdown),
    })
}

/// Exact averages of every nonzero class.
pub fn ensemble_table(
    config: &EnsembleConfig,
    ceilings: &Ceilings,
) -> Result<BTreeMap<TrappingSetClass, ExactRatio>> {
    check_block_len(config, ceilings.exact_table, "exact ensemble table")?;
    let n = config.block_len();
    let component = acc_iotse_table(n)?;
    let rows = component.rows_by_input();

    // Every 1/C(N, j) is an integer multiple of 1/D with D = lcm_j C(N, j), so
    // numerators scaled by D^L stay integral through the whole chain.
    let common = (0..=n as i64).fold(BigUint::one(), |acc, j| acc.lcm(&binomial(n as i64, j)));
    let scale: Vec<BigUint> = (0..=n as i64)
        .map(|j| &common / binomial(n as i64, j))
        .collect();

    let mut states: HashMap<(usize, usize, usize), BigUint> = HashMap::new();
    for w in 0..=config.k {
        let input = config.q * w;
        states.insert((w, 0, input), binomial(config.k as i64, w as i64));
    }
    for _ in 0..config.levels {
        let mut next: HashMap<(usize, usize, usize), BigUint> = HashMap::new();
        for ((a, b, input), v) in states {
            let v = v * &scale[input];
            for &(a_o, b_l, count) in &rows[input] {
                *next.entry((a + a_o, b + b_l, a_o)).or_default() += &v * count;
            }
        }
        states = next;
    }

    let mut totals: BTreeMap<TrappingSetClass, BigUint> = BTreeMap::new();
    for ((a, b, _), v) in states {
        *totals.entry(TrappingSetClass { a, b }).or_default() += v;
    }
    let den = BigInt::from(num_traits::pow(common, config.levels));
    Ok(totals
        .into_iter()
        .filter(|(_, v)| !v.is_zero())
        .map(|(c, v)| (c, BigRational::new(BigInt::from(v), den.clone())))
        .collect())
}

/// Log-domain averages of every nonzero class.
pub fn ensemble_table_log(
    config: &EnsembleConfig,
    ceilings: &Ceilings,
) -> Result<BTreeMap<TrappingSetClass, LogValue>> {
    check_block_len(config, ceilings.log, "log-mode ensemble table")?;
    let n = config.block_len();
    let component = acc_iotse_table_log(n)?;
    let mut rows: Vec<Vec<(usize, usize, LogValue)>> = vec![Vec::new(); n + 1];
    for (&(a_i, a_o, b), &v) in &component.entries {
        rows[a_i].push((a_o, b, v));
    }

    let mut states: BTreeMap<(usize, usize, usize), LogValue> = BTreeMap::new();
    for w in 0..=config.k {
        states.insert(
            (w, 0, config.q * w),
            log_binomial(config.k as i64, w as i64),
        );
    }
    for _ in 0..config.levels {
        let mut next: BTreeMap<(usize, usize, usize), LogValue> = BTreeMap::new();
        for ((a, b, input), v) in states {
            let v = v.div(log_binomial(n as i64, input as i64));
            for &(a_o, b_l, count) in &rows[input] {
                let slot = next
                    .entry((a + a_o, b + b_l, a_o))
                    .or_insert(LogValue::ZERO);
                *slot = slot.add(v.mul(count));
            }
        }
        states = next;
    }

    let mut totals: BTreeMap<TrappingSetClass, LogValue> = BTreeMap::new();
    for ((a, b, _), v) in states {
        let slot = totals
            .entry(TrappingSetClass { a, b })
            .or_insert(LogValue::ZERO);
        *slot = slot.add(v);
    }
    totals.retain(|_, v| !v.is_zero());
    Ok(totals)
}

/// Average number of codewords whose final-level output weight is `d`.
pub fn ensemble_iowe(config: &EnsembleConfig, d: usize, ceilings: &Ceilings) -> Result<ExactRatio> {
    let n = config.block_len();
    if d > n {
        return Err(Error::Range(format!("output weight {d} exceeds N = {n}")));
    }
    check_block_len(config, ceilings.exact_class, "exact IOWE")?;
    let mut cache = ComponentCache::new(n);
    let mut weights: BTreeMap<usize, ExactRatio> = BTreeMap::new();
    for w in 0..=config.k {
        weights.insert(
            config.q * w,
            ratio_from_count(binomial(config.k as i64, w as i64)),
        );
    }
    for _ in 0..config.levels {
        let mut next: BTreeMap<usize, ExactRatio> = BTreeMap::new();
        for (input, v) in weights {
            let v = v / ratio_from_count(binomial(n as i64, input as i64));
            for a_o in 0..n {
                let count = cache.exact((input, a_o, 0));
                if count.is_zero() {
                    continue;
                }
                let term = &v * ratio_from_count(count.clone());
                *next.entry(a_o).or_insert_with(BigRational::zero) += term;
            }
        }
        weights = next;
    }
    Ok(weights.remove(&d).unwrap_or_else(BigRational::zero))
}
