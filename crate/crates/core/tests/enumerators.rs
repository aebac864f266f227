use itertools::Itertools;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tse_core::accumulator::*;
use tse_core::combinatorics::*;
use tse_core::ensemble::*;
use tse_core::oracle::*;

fn triple(n: usize, a_i: usize, a_o: usize, b: usize) -> AccTriple {
    AccTriple::new(n, a_i, a_o, b).unwrap()
}

fn ratio(n: i64, d: i64) -> ExactRatio {
    BigRational::new(n.into(), d.into())
}

fn rel_err(log: LogValue, exact: f64) -> f64 {
    (log.exp() - exact).abs() / exact
}

#[test]
fn binomial_examples() {
    assert_eq!(binomial(5, 2), BigUint::from(10u32));
    assert_eq!(binomial(0, 0), BigUint::from(1u32));
    assert!(binomial(3, 5).is_zero());
    assert!(binomial(-1, -1).is_zero());
    assert!((log_binomial(5, 2).ln() - 10f64.ln()).abs() < 1e-12);
    assert!(log_binomial(10, 11).is_zero());
    let exact = ln_biguint(&binomial(400, 200));
    assert!((log_binomial(400, 200).ln() - exact).abs() <= 1e-9 * exact);
}

#[test]
fn log_sum_exp_matches_exact_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let counts: Vec<BigUint> = (0..1000)
        .map(|_| BigUint::from(rng.gen_range(1u64..1 << 40)))
        .collect();
    let total: BigUint = counts.iter().sum();
    let logs: Vec<LogValue> = counts.iter().map(LogValue::from_count).collect();
    let got = log_sum_exp(&logs).ln();
    let want = ln_biguint(&total);
    assert!((got - want).abs() <= 1e-9 * want);
    assert!(
        (log_sum_exp(&[LogValue::from_ln(2f64.ln()), LogValue::from_ln(3f64.ln())]).ln()
            - 5f64.ln())
        .abs()
            < 1e-15
    );
    assert!(log_sum_exp(&[]).is_zero());
}

#[test]
fn accumulator_examples() {
    for n in [1, 4, 17] {
        assert_eq!(acc_iotse(&triple(n, 0, 0, 0)), BigUint::from(1u32));
    }
    assert_eq!(acc_iotse(&triple(5, 1, 0, 1)), BigUint::from(5u32));
    assert_eq!(acc_iotse(&triple(3, 2, 1, 0)), BigUint::from(2u32));
    assert_eq!(acc_iotse(&triple(2, 1, 1, 1)), BigUint::from(2u32));
    assert!(AccTriple::new(3, 4, 0, 0).is_err());

    assert_eq!(acc_iowe(3, 2, 1).unwrap(), BigUint::from(2u32));
    assert!(acc_iowe(8, 3, 4).unwrap().is_zero());
    assert_eq!(acc_iowe(4, 0, 0).unwrap(), BigUint::from(1u32));
    assert!(acc_iowe(4, 5, 0).is_err());
}

#[test]
fn accumulator_tables_match_oracles() {
    let t1 = acc_iotse_table(1).unwrap();
    let keys: Vec<_> = t1.entries.keys().copied().collect();
    assert_eq!(keys, vec![(0, 0, 0), (1, 0, 1)]);
    assert_eq!(trellis_dp(1).unwrap(), t1);
    assert_eq!(trellis_dp(3).unwrap().count(2, 1, 0), BigUint::from(2u32));
    let t2 = exhaustive_acc(2).unwrap();
    assert_eq!(t2.count(1, 1, 1), BigUint::from(2u32));
    assert_eq!(t2.count(0, 0, 0), BigUint::from(1u32));
    assert!(exhaustive_acc(13).is_err());
    for n in 1..=10 {
        let closed = acc_iotse_table(n).unwrap();
        assert_eq!(closed, trellis_dp(n).unwrap(), "N = {n}");
        assert!(closed.entries.values().all(|v| !v.is_zero()));
        assert!(closed
            .entries
            .keys()
            .all(|&(a_i, a_o, b)| (a_i + b) % 2 == 0 && a_o < n.max(1)));
    }
}

#[test]
fn decomposition_examples() {
    let d = decompositions(&triple(3, 2, 1, 0));
    assert_eq!(d.len(), 1);
    assert_eq!((d[0].0.m, d[0].0.n, d[0].0.w_t, d[0].0.w_11), (1, 0, 2, 0));
    assert_eq!(d[0].1, BigUint::from(2u32));

    let d = decompositions(&triple(2, 1, 1, 1));
    assert_eq!(d.len(), 1);
    assert_eq!((d[0].0.m, d[0].0.n, d[0].0.w_t, d[0].0.w_11), (1, 0, 1, 0));
    assert_eq!(d[0].1, BigUint::from(2u32));

    let d = decompositions(&triple(9, 0, 0, 0));
    assert_eq!(d.len(), 1);
    assert_eq!((d[0].0.m, d[0].0.n), (0, 0));
    assert_eq!(d[0].1, BigUint::from(1u32));
}

#[test]
fn decompositions_sum_to_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    while checked < 1000 {
        let n = rng.gen_range(1..=24);
        let t = triple(
            n,
            rng.gen_range(0..=n),
            rng.gen_range(0..n),
            rng.gen_range(0..=n),
        );
        if !t.is_admissible() {
            continue;
        }
        let total: BigUint = decompositions(&t)
            .into_iter()
            .map(|(d, v)| {
                assert_eq!(d.w_t + d.w_11 + d.n, t.a_i);
                v
            })
            .sum();
        assert_eq!(total, acc_iotse(&t), "{t:?}");
        checked += 1;
    }
}

#[test]
fn accumulator_log_mode_agrees() {
    for n in 1..=32 {
        let exact = acc_iotse_table(n).unwrap();
        let log = acc_iotse_table_log(n).unwrap();
        assert_eq!(exact.len(), log.len());
        for (k, v) in &exact.entries {
            let e = rel_err(log.entries[k], v.to_f64().unwrap());
            assert!(e <= 1e-8, "N = {n} {k:?}: {e}");
        }
    }
}

#[test]
fn conditional_examples() {
    let c = EnsembleConfig::new(2, 2, 1).unwrap();
    let p = |w, levels: Vec<(usize, usize)>| ConditionalProfile { w, levels };
    let avg = |profile| match conditional_tse(&c, &profile, Mode::Exact).unwrap() {
        Average::Exact(r) => r,
        Average::Log(_) => unreachable!(),
    };
    assert_eq!(avg(p(1, vec![(0, 2)])), ratio(2, 1));
    assert_eq!(avg(p(0, vec![(1, 2)])), ratio(3, 1));
    for levels in 1..=3 {
        let c = EnsembleConfig::new(3, 2, levels).unwrap();
        let empty = ConditionalProfile {
            w: 0,
            levels: vec![(0, 0); levels],
        };
        assert_eq!(
            conditional_tse(&c, &empty, Mode::Exact).unwrap(),
            Average::Exact(ratio(1, 1))
        );
    }
}

#[test]
fn ensemble_examples() {
    let ceil = Ceilings::default();
    let c = EnsembleConfig::new(2, 2, 1).unwrap();
    let res = ensemble_tse(
        &c,
        TrappingSetClass { a: 1, b: 2 },
        Mode::Exact,
        true,
        &ceil,
    )
    .unwrap();
    assert_eq!(res.value, Average::Exact(ratio(5, 1)));
    let parts: Vec<String> = res
        .breakdown
        .unwrap()
        .iter()
        .map(|(_, v)| v.to_string())
        .collect();
    assert_eq!(parts.len(), 2);
    assert!(parts.contains(&"3".to_string()) && parts.contains(&"2".to_string()));
    assert!(ensemble_tse(
        &c,
        TrappingSetClass { a: 1, b: 1 },
        Mode::Exact,
        false,
        &ceil
    )
    .unwrap()
    .value
    .is_zero());

    let sum =
        |c: &EnsembleConfig| -> ExactRatio { ensemble_table(c, &ceil).unwrap().values().sum() };
    assert_eq!(sum(&c), ratio(32, 1));
    assert_eq!(sum(&EnsembleConfig::new(2, 2, 2).unwrap()), ratio(256, 1));
    for (q, k, l) in [(1, 3, 1), (3, 2, 3), (2, 4, 2)] {
        let c = EnsembleConfig::new(q, k, l).unwrap();
        assert_eq!(
            ensemble_table(&c, &ceil).unwrap()[&TrappingSetClass { a: 0, b: 0 }],
            ratio(1, 1)
        );
    }
}

#[test]
fn ensemble_breakdowns_sum() {
    let ceil = Ceilings::default();
    let c = EnsembleConfig::new(3, 3, 2).unwrap();
    for (a, b) in [(4, 2), (6, 1), (7, 3), (9, 0)] {
        let class = TrappingSetClass { a, b };
        let exact = ensemble_tse(&c, class, Mode::Exact, true, &ceil).unwrap();
        let Average::Exact(total) = exact.value else {
            unreachable!()
        };
        let parts: ExactRatio = exact
            .breakdown
            .unwrap()
            .into_iter()
            .map(|(p, v)| {
                assert_eq!(p.class(), class);
                match v {
                    Average::Exact(r) => r,
                    Average::Log(_) => unreachable!(),
                }
            })
            .sum();
        assert_eq!(parts, total);

        let log = ensemble_tse(&c, class, Mode::Log, true, &ceil).unwrap();
        let parts: Vec<LogValue> = log
            .breakdown
            .unwrap()
            .into_iter()
            .map(|(_, v)| match v {
                Average::Log(l) => l,
                Average::Exact(_) => unreachable!(),
            })
            .collect();
        assert!((log_sum_exp(&parts).ln() - log.value.ln()).abs() <= 1e-9);
    }
}

#[test]
fn ensemble_log_mode_agrees() {
    let ceil = Ceilings::default();
    for (q, k, l) in [(2, 3, 2), (3, 4, 2), (2, 5, 3)] {
        let c = EnsembleConfig::new(q, k, l).unwrap();
        let exact = ensemble_table(&c, &ceil).unwrap();
        let log = ensemble_table_log(&c, &ceil).unwrap();
        assert_eq!(exact.len(), log.len());
        for (class, v) in &exact {
            let e = rel_err(log[class], v.to_f64().unwrap());
            assert!(e <= 1e-8, "{c:?} {class:?}: {e}");
        }
    }
}

#[test]
fn ensemble_iowe_is_the_b0_chain() {
    let ceil = Ceilings::default();
    let c = EnsembleConfig::new(2, 2, 1).unwrap();
    assert_eq!(ensemble_iowe(&c, 0, &ceil).unwrap(), ratio(1, 1));
    assert!(ensemble_iowe(&c, 5, &ceil).is_err());

    // Literal average of the number of codewords with each output weight.
    let n = c.block_len();
    let perms: Vec<Vec<usize>> = permutations(n);
    let mut counts = vec![0u64; n + 1];
    for p in &perms {
        let pi = Permutation::new(p.clone()).unwrap();
        for bits in 0u32..1 << c.k {
            let u: Vec<u8> = (0..c.k).map(|j| (bits >> j & 1) as u8).collect();
            let layers = encode(&u, c.q, std::slice::from_ref(&pi)).unwrap();
            if layers.levels[0][n - 1] == 0 {
                counts[layers.levels[0].iter().filter(|&&x| x == 1).count()] += 1;
            }
        }
    }
    for d in 0..=n {
        let literal = ratio(counts[d] as i64, perms.len() as i64);
        assert_eq!(ensemble_iowe(&c, d, &ceil).unwrap(), literal, "d = {d}");
    }
    assert_eq!(ensemble_iowe(&c, 1, &ceil).unwrap(), ratio(1, 1));

    for (q, k, l) in [(2, 3, 2), (3, 2, 3)] {
        let c = EnsembleConfig::new(q, k, l).unwrap();
        for d in 0..=c.block_len() {
            let chain: ExactRatio = (0..=c.max_set_size())
                .flat_map(|a| profiles(&c, TrappingSetClass { a, b: 0 }))
                .filter(|p| p.levels.last().unwrap().0 == d)
                .map(|p| match conditional_tse(&c, &p, Mode::Exact).unwrap() {
                    Average::Exact(r) => r,
                    Average::Log(_) => unreachable!(),
                })
                .sum();
            assert_eq!(ensemble_iowe(&c, d, &ceil).unwrap(), chain, "{c:?} d = {d}");
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    (0..n).permutations(n).collect()
}

#[test]
fn graph_oracle_examples() {
    let c = EnsembleConfig::new(2, 2, 1).unwrap();
    let g = graph_ensemble_average(&c).unwrap();
    assert_eq!(g[&TrappingSetClass { a: 1, b: 2 }], ratio(5, 1));
    assert!(!g.contains_key(&TrappingSetClass { a: 1, b: 1 }));
    let c2 = EnsembleConfig::new(2, 2, 2).unwrap();
    assert_eq!(
        graph_ensemble_average(&c2).unwrap(),
        ensemble_table(&c2, &Ceilings::default()).unwrap()
    );
    assert!(graph_ensemble_average(&EnsembleConfig::new(3, 3, 2).unwrap()).is_err());
}

#[test]
fn per_tuple_universe_is_complete() {
    let c = EnsembleConfig::new(2, 2, 2).unwrap();
    let perms = permutations(4);
    for (i, p1) in perms.iter().enumerate().step_by(5) {
        let p2 = &perms[(i * 7 + 3) % perms.len()];
        let tuple = [
            Permutation::new(p1.clone()).unwrap(),
            Permutation::new(p2.clone()).unwrap(),
        ];
        let g = FactorGraph::build(&c, &tuple).unwrap();
        let total: u64 = g.tally().iter().flatten().sum();
        assert_eq!(total, 1 << c.universe_bits());
    }
}

#[test]
fn encoder_examples() {
    let id = Permutation::identity(4);
    let zero = encode(&[0, 0], 2, &[id.clone(), id.clone()]).unwrap();
    assert!(zero
        .repeated
        .iter()
        .chain(zero.levels.iter().flatten())
        .all(|&x| x == 0));
    let e = encode(&[1, 0], 2, &[id.clone(), id.clone()]).unwrap();
    assert_eq!(e.repeated, vec![1, 1, 0, 0]);
    assert_eq!(e.levels, vec![vec![1, 0, 0, 0], vec![1, 1, 1, 1]]);
    assert!(encode(&[1, 0, 1], 2, &[id]).is_err());
    let c = EnsembleConfig::new(2, 2, 2).unwrap();
    assert!(codeword_support_check(&c).mismatch.is_none());
}

#[test]
fn membership_counts_odd_checks() {
    let c = EnsembleConfig::new(2, 2, 1).unwrap();
    let g = FactorGraph::build(&c, &[Permutation::identity(4)]).unwrap();
    for subset in 0u64..1 << c.universe_bits() {
        let m = MembershipAssignment::induced(&g, subset);
        assert_eq!(m.a, subset.count_ones() as usize);
        assert_eq!(m.b, g.unsatisfied(subset));
    }
}

#[test]
fn verify_with_tiny_limits() {
    let report = verify_all(&VerifyLimits::with_max_n(1));
    assert!(report.is_clean(), "{}", report.to_json());
    assert!(!report.comparisons.is_empty());
}
