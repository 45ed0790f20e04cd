use ghz_core::baseline::{enumerate_assignments, search, GHZ_CONSTRAINTS};
use ghz_core::harness::{
    compare_with_tolerance, estimate_mermin, run_grandma, run_noncontextual, Policy, RunConfig,
};
use ghz_core::polarization::{born_distribution, expand, ghz_state, Context};
use ghz_core::sampler::{validate_sheet, SheetSampler};
use ghz_core::{LocalAssignment, RandomStream};
use proptest::prelude::*;

fn config(runs: u64, seed: u64, policy: Policy) -> RunConfig {
    RunConfig::new(runs, seed, policy, 0.01).unwrap()
}

#[test]
fn revealed_marginals_converge_to_born() {
    let ghz = ghz_state();
    let sampler = SheetSampler::new(&ghz);
    let mut rng = RandomStream::new(2024);
    let n = 100_000;
    let mut counts = [[0u64; 8]; 8];
    for _ in 0..n {
        let sheet = sampler.sample(&mut rng);
        for c in Context::ALL {
            let i = c.outcome_index(&sheet.reveal(c)).unwrap();
            counts[c.index()][i] += 1;
        }
    }
    for c in Context::ALL {
        let dist = born_distribution(&expand(&ghz, c));
        let tv: f64 = counts[c.index()]
            .iter()
            .zip(dist.probabilities())
            .map(|(&k, p)| (k as f64 / n as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "{c}: tv {tv}");
    }
}

#[test]
fn yyx_entry_frequency_is_one_quarter() {
    let sampler = SheetSampler::new(&ghz_state());
    let mut rng = RandomStream::new(77);
    let target = "R L H'".parse().unwrap();
    let n = 100_000;
    let hits = (0..n)
        .filter(|_| sampler.sample(&mut rng).reveal(Context::YYX) == target)
        .count();
    let freq = hits as f64 / n as f64;
    // Binomial sd at n = 1e5 is about 0.00137.
    assert!((freq - 0.25).abs() < 0.007, "{freq}");
}

#[test]
fn sheet_precedes_choice() {
    // Revealing contexts in any order returns the same entries, and the
    // stream position afterwards does not depend on what was revealed.
    let sampler = SheetSampler::new(&ghz_state());
    let mut a = RandomStream::new(31);
    let mut b = RandomStream::new(31);
    let sa = sampler.sample(&mut a);
    let sb = sampler.sample(&mut b);
    let forward: Vec<_> = Context::ALL.iter().map(|c| sa.reveal(*c)).collect();
    let mut backward: Vec<_> = Context::ALL.iter().rev().map(|c| sb.reveal(*c)).collect();
    backward.reverse();
    assert_eq!(forward, backward);
    assert_eq!(a.next_u64(), b.next_u64());
}

#[test]
fn sampled_sheets_obey_parity_and_support() {
    let ghz = ghz_state();
    let sampler = SheetSampler::new(&ghz);
    let mut rng = RandomStream::new(5);
    for _ in 0..20_000 {
        let sheet = sampler.sample(&mut rng);
        for (context, target) in GHZ_CONSTRAINTS {
            assert_eq!(sheet.reveal(context).parity_product(), target);
        }
        for c in Context::ALL {
            assert!(sampler.distribution(c).probability(&sheet.reveal(c)) > 0.0);
        }
        assert_eq!(sheet.reveal(Context::XXX).count(ghz_core::Outcome::Vp) % 2, 0);
    }
    let sheet = sampler.sample(&mut rng);
    assert!(validate_sheet(sheet.entries(), &ghz).pass());
}

#[test]
fn mixed_context_products_multiply_to_xxx() {
    for a in enumerate_assignments() {
        let mixed = a.predicted_product(Context::YYX)
            * a.predicted_product(Context::YXY)
            * a.predicted_product(Context::XYY);
        assert_eq!(mixed, a.predicted_product(Context::XXX), "{a}");
    }
}

#[test]
fn search_is_order_independent() {
    let reference = search(&enumerate_assignments());
    let mut rng = RandomStream::new(3);
    for _ in 0..10 {
        let mut shuffled = enumerate_assignments();
        for i in (1..shuffled.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            shuffled.swap(i, j);
        }
        let s = search(&shuffled);
        assert_eq!(
            (s.assignments, s.satisfying, s.best_constraints, s.mermin_max, s.mermin_min),
            (
                reference.assignments,
                reference.satisfying,
                reference.best_constraints,
                reference.mermin_max,
                reference.mermin_min
            )
        );
    }
}

#[test]
fn policies_agree_per_context() {
    let ghz = ghz_state();
    let fixed: Vec<_> = Context::ALL
        .iter()
        .map(|c| run_grandma(&config(100_000, 10 + c.index() as u64, Policy::FixedContext(*c)), &ghz))
        .collect();
    let round_robin = run_grandma(&config(800_000, 20, Policy::RoundRobin), &ghz);
    let uniform = run_grandma(&config(800_000, 30, Policy::UniformRandom), &ghz);
    assert_eq!(round_robin.runs_per_context(Context::YXY), 100_000);

    for c in Context::ALL {
        let per_policy = [&fixed[c.index()], &round_robin, &uniform];
        for tally in per_policy {
            let report = compare_with_tolerance(tally, &ghz, 0.01);
            let stats = report.record(c).stats.unwrap();
            assert!(stats.pass, "{c}: {stats:?}");
        }
        let freq = |t: &ghz_core::TallyTable| {
            let n = t.runs_per_context(c) as f64;
            t.counts(c).map(|k| k as f64 / n)
        };
        let (f, r, u) = (freq(per_policy[0]), freq(&round_robin), freq(&uniform));
        let tv = |a: [f64; 8], b: [f64; 8]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0;
        assert!(tv(f, r) <= 0.01 && tv(f, u) <= 0.01 && tv(r, u) <= 0.01, "{c}");
    }
}

#[test]
fn classical_tallies_stay_within_bound() {
    let c = config(800, 1, Policy::RoundRobin);
    let mut seen_extremes = (false, false);
    for a in enumerate_assignments() {
        let est = estimate_mermin(&run_noncontextual(&c, &a)).unwrap();
        assert!((-2.0..=2.0).contains(&est.value), "{a}: {}", est.value);
        assert_eq!(est.value, f64::from(a.mermin()));
        seen_extremes.0 |= est.value == 2.0;
        seen_extremes.1 |= est.value == -2.0;
    }
    assert_eq!(seen_extremes, (true, true));
}

#[test]
fn conservation_of_counts() {
    let ghz = ghz_state();
    for policy in [Policy::RoundRobin, Policy::UniformRandom, Policy::FixedContext(Context::XYX)] {
        let cfg = config(12_345, 6, policy);
        let tally = run_grandma(&cfg, &ghz);
        assert_eq!(tally.total(), 12_345);
        let per_context: u64 = Context::ALL.iter().map(|c| tally.runs_per_context(*c)).sum();
        assert_eq!(per_context, 12_345);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grandma_mermin_is_exactly_four(seed in any::<u64>(), runs in 7u64..400) {
        let tally = run_grandma(&config(runs, seed, Policy::RoundRobin), &ghz_state());
        let est = estimate_mermin(&tally).unwrap();
        prop_assert_eq!(est.value, 4.0);
        prop_assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn classical_mermin_is_bounded(index in 0u8..64, seed in any::<u64>(), runs in 1u64..500) {
        let a = LocalAssignment::from_index(index).unwrap();
        let tally = run_noncontextual(&config(runs, seed, Policy::UniformRandom), &a);
        if let Ok(est) = estimate_mermin(&tally) {
            prop_assert!((-2.0..=2.0).contains(&est.value));
        }
    }
}
