//! Property suites shared by the `properties` and `acceptance` targets.
//! Every suite runs 1000 cases from a fixed seed.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestRunner};

use zt_ratsim::composition::ParallelLinkSet;
use zt_ratsim::portability::{
    issue_artefact, portable_recovery_cost_with, validate_artefact, ArtefactDecision, ArtefactKey,
    ReplayCache,
};
use zt_ratsim::rng::SimRng;
use zt_ratsim::scenario::{parse_scenario, BUILTIN_SCENARIOS};
use zt_ratsim::transition::{apply_survival, recovery_cost_with};
use zt_ratsim::trust::{
    clamp_to_ceiling, composite_score, decay, DecayParams, PerComponent, RatFamily, RatId, RatProfile,
    TrustComponent, TrustState, WeightVector,
};
use zt_ratsim::TransitionKind;

pub const CASES: u32 = 1000;

fn runner(seed: u64) -> TestRunner {
    TestRunner::new(Config {
        cases: CASES,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    })
}

fn unit() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

fn state() -> impl Strategy<Value = TrustState> {
    prop::array::uniform5(unit()).prop_map(|v| TrustState::new(v).unwrap())
}

fn sigma() -> impl Strategy<Value = PerComponent<f64>> {
    prop::array::uniform5(unit()).prop_map(PerComponent)
}

fn weights() -> impl Strategy<Value = WeightVector> {
    prop::array::uniform5(0.01..1.0f64).prop_map(|raw| {
        let sum: f64 = raw.iter().sum();
        let mut w = raw.map(|x| x / sum);
        let rest: f64 = w[..4].iter().sum();
        w[4] = 1.0 - rest;
        WeightVector::new(w).unwrap()
    })
}

fn kind() -> impl Strategy<Value = TransitionKind> {
    prop::sample::select(TransitionKind::ALL.to_vec())
}

fn components() -> impl Strategy<Value = BTreeSet<TrustComponent>> {
    prop::sample::subsequence(TrustComponent::ALL.to_vec(), 0..=5).prop_map(|v| v.into_iter().collect())
}

fn check(r: Result<(), proptest::test_runner::TestError<impl std::fmt::Debug>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

/// Decay never raises a component, later is never higher than earlier, and
/// with shape 1 decaying for `a` then `b` equals decaying for `a + b`.
pub fn decay_monotone_and_additive() -> Result<(), String> {
    let strat = (state(), prop::array::uniform5(0.0..0.5f64), 0.0..120.0f64, 0.0..120.0f64);
    check(runner(0xDECA).run(&strat, |(s, rates, a, b)| {
        let p = DecayParams::exponential(rates);
        let da = decay(&s, a, &p).unwrap();
        let dab = decay(&s, a + b, &p).unwrap();
        let chained = decay(&da, b, &p).unwrap();
        prop_assert!(da.le(&s));
        prop_assert!(dab.le(&da));
        for c in TrustComponent::ALL {
            prop_assert!((chained.get(c) - dab.get(c)).abs() <= 1e-12);
        }
        Ok(())
    }))
}

pub fn crossing_never_increases() -> Result<(), String> {
    check(runner(0xC405).run(&(state(), sigma()), |(s, sg)| {
        let post = apply_survival(&s, &sg);
        prop_assert!(post.le(&s));
        for c in TrustComponent::ALL {
            prop_assert_eq!(post.get(c), sg[c] * s.get(c));
        }
        Ok(())
    }))
}

pub fn clamp_idempotent() -> Result<(), String> {
    check(runner(0xC1A4).run(&(state(), state()), |(s, ceiling)| {
        let mut p = RatProfile::open("X", RatFamily::Cellular);
        p.ceiling = ceiling;
        let once = clamp_to_ceiling(&s, &p);
        prop_assert_eq!(clamp_to_ceiling(&once, &p), once);
        prop_assert!(once.le(&ceiling));
        prop_assert!(once.le(&s));
        Ok(())
    }))
}

/// The composite of a convex combination is the same combination of composites.
pub fn composite_linear() -> Result<(), String> {
    check(runner(0x11EA).run(&(state(), state(), unit(), weights()), |(a, b, l, w)| {
        let mix = TrustState::new(std::array::from_fn(|i| {
            (l * a.values()[i] + (1.0 - l) * b.values()[i]).clamp(0.0, 1.0)
        }))
        .unwrap();
        let lhs = composite_score(&mix, &w);
        let rhs = l * composite_score(&a, &w) + (1.0 - l) * composite_score(&b, &w);
        prop_assert!((lhs - rhs).abs() <= 1e-12);
        Ok(())
    }))
}

/// Reassigning the same link states to different RAT ids leaves the aggregate unchanged.
pub fn parallel_permutation_invariant() -> Result<(), String> {
    let strat = prop::collection::vec((state(), any::<bool>()), 1..6)
        .prop_flat_map(|links| {
            let n = links.len();
            (Just(links), Just((0..n).collect::<Vec<_>>()).prop_shuffle(), prop::option::of(unit()))
        });
    check(runner(0x9A4A).run(&strat, |(links, perm, silo_ctx)| {
        let build = |order: &[usize]| {
            let mut set = ParallelLinkSet::new().with_silo_context(silo_ctx);
            for (slot, &i) in order.iter().enumerate() {
                let (s, silo) = links[i];
                set.insert(RatId::new(format!("R{slot}")), s, 0, silo);
            }
            set.aggregate().unwrap()
        };
        let identity: Vec<usize> = (0..links.len()).collect();
        let a = build(&identity);
        let b = build(&perm);
        for c in TrustComponent::ALL {
            prop_assert!((a.get(c) - b.get(c)).abs() <= 1e-12);
        }
        Ok(())
    }))
}

pub fn portable_cost_le_naive() -> Result<(), String> {
    let strat = (
        sigma(),
        prop::array::uniform5(1.0..1000.0f64),
        prop::array::uniform5(0.0..0.999f64),
        kind(),
        components(),
    );
    check(runner(0x907A).run(&strat, |(sg, costs, frac, k, accepted)| {
        let mut p = RatProfile::open("T", RatFamily::Cellular);
        p.cost_mj = PerComponent(costs);
        let verify = PerComponent(std::array::from_fn(|i| costs[i] * frac[i]));
        let naive = recovery_cost_with(&sg, &p.cost_mj, k);
        let portable = portable_recovery_cost_with(&sg, &p, k, &accepted, &verify).unwrap();
        prop_assert!(portable <= naive + 1e-9);
        prop_assert!(portable >= 0.0);
        Ok(())
    }))
}

/// However often and in whatever order artefacts are presented, each nonce
/// is accepted at most once.
pub fn replay_accepted_at_most_once() -> Result<(), String> {
    let strat = (any::<u64>(), 1usize..8, prop::collection::vec(0usize..64, 1..40), 1usize..64);
    check(runner(0x4E91).run(&strat, |(seed, n, order, capacity)| {
        let key = ArtefactKey::test_key();
        let mut rng = SimRng::new(seed, 1);
        let artefacts: Vec<_> = (0..n)
            .map(|i| {
                issue_artefact("5G", "uav-1", TrustComponent::ALL[i % 5], 0.9, 0, &key, &mut rng).unwrap()
            })
            .collect();
        let mut cache = ReplayCache::new(capacity.max(n));
        let mut accepted: BTreeMap<u128, usize> = BTreeMap::new();
        for (t, &i) in order.iter().enumerate() {
            let a = &artefacts[i % n];
            let d = validate_artefact(a, "uav-1", t as i64, 300_000, &mut cache, None, &key);
            if d == ArtefactDecision::Accepted {
                *accepted.entry(a.nonce).or_default() += 1;
            }
        }
        prop_assert!(accepted.values().all(|&c| c <= 1));
        Ok(())
    }))
}

fn mutate(base: &[u8], ops: &[(u8, usize, u8)]) -> Vec<u8> {
    let mut out = base.to_vec();
    for &(op, pos, byte) in ops {
        if out.is_empty() {
            out.push(byte);
            continue;
        }
        let at = pos % out.len();
        match op % 5 {
            0 => out[at] = byte,
            1 => out.insert(at, byte),
            2 => {
                out.remove(at);
            }
            3 => {
                // Drop the line containing `at`.
                let start = out[..at].iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
                let end = out[at..].iter().position(|&b| b == b'\n').map_or(out.len(), |p| at + p + 1);
                out.drain(start..end);
            }
            _ => {
                let token: &[u8] = match byte % 6 {
                    0 => b"[",
                    1 => b"]",
                    2 => b" = ",
                    3 => b"\n[event]\n",
                    4 => b"nan",
                    _ => b"\xff\xfe",
                };
                out.splice(at..at, token.iter().copied());
            }
        }
    }
    out
}

/// Any byte input yields either a scenario or at least one error diagnostic.
pub fn parser_total() -> Result<(), String> {
    let corpus: Vec<&'static str> = BUILTIN_SCENARIOS.iter().map(|(_, t)| *t).collect();
    let strat = prop_oneof![
        prop::collection::vec(any::<u8>(), 0..512),
        (
            prop::sample::select(corpus),
            prop::collection::vec((any::<u8>(), any::<usize>(), any::<u8>()), 0..12)
        )
            .prop_map(|(base, ops)| mutate(base.as_bytes(), &ops)),
    ];
    check(runner(0xF022).run(&strat, |input| {
        let outcome = std::panic::catch_unwind(|| parse_scenario(&input));
        prop_assert!(outcome.is_ok(), "parser panicked");
        if let Err(diags) = outcome.unwrap() {
            prop_assert!(diags.iter().any(|d| d.is_error()));
        }
        Ok(())
    }))
}

pub type Suite = fn() -> Result<(), String>;

pub const SUITES: &[(&str, Suite)] = &[
    ("decay monotonicity and time-additivity", decay_monotone_and_additive),
    ("crossing never increases a component", crossing_never_increases),
    ("ceiling clamp idempotence", clamp_idempotent),
    ("composite linearity", composite_linear),
    ("parallel composition permutation invariance", parallel_permutation_invariant),
    ("portable cost at most naive cost", portable_cost_le_naive),
    ("replay acceptance at most once per nonce", replay_accepted_at_most_once),
    ("parser total on fuzz corpus", parser_total),
];
