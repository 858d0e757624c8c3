mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_basis, random_scenario, random_state, GenOptions};
use wfs::inference::{ContradictionKind, Derivation};
use wfs::scenario::{builtin, ScenarioBuilder, BUILTIN_NAMES};
use wfs::{
    certainty, derive_certainty_chain, detect_contradictions, enumerate_branches, Agent,
    CollapsePolicy, Run, Scenario, SpaceRegistry, Subsystem,
};

fn scenario(seed: u64, opts: GenOptions) -> Scenario {
    random_scenario(&mut ChaCha8Rng::seed_from_u64(seed), opts)
}

fn assert_views_identical(run: &Run) -> Result<(), TestCaseError> {
    for b in &run.branches {
        let mut snapshots: Vec<_> = b.timeline.iter().collect();
        snapshots.push(&b.views);
        for views in snapshots {
            let mut it = views.values();
            if let Some(first) = it.next() {
                for v in it {
                    let d = first.state.distance(&v.state).unwrap();
                    prop_assert!(d < 1e-9, "{} and {} differ by {d}", first.agent, v.agent);
                }
            }
        }
    }
    Ok(())
}

fn assert_runs_equal(a: &Run, b: &Run) -> Result<(), TestCaseError> {
    prop_assert_eq!(a.branches.len(), b.branches.len());
    for (x, y) in a.branches.iter().zip(&b.branches) {
        prop_assert_eq!(&x.outcomes, &y.outcomes);
        prop_assert_eq!(x.bookkeeper_probability, y.bookkeeper_probability);
        prop_assert_eq!(x.timeline.len(), y.timeline.len());
        let mut pairs: Vec<_> = x.timeline.iter().zip(&y.timeline).collect();
        pairs.push((&x.views, &y.views));
        for (vx, vy) in pairs {
            prop_assert_eq!(vx.len(), vy.len());
            for (name, v) in vx {
                let w = &vy[name];
                prop_assert_eq!(v.state.amplitudes(), w.state.amplitudes());
                prop_assert_eq!(&v.known_events, &w.known_events);
                prop_assert_eq!(&v.anomalies, &w.anomalies);
            }
        }
    }
    Ok(())
}

#[test]
fn builtins_are_consistent_under_universal_collapse() {
    for name in BUILTIN_NAMES {
        let s = builtin(name).unwrap();
        s.validate().unwrap();
        let run = enumerate_branches(&s, &CollapsePolicy::UniversalCollapse).unwrap();
        assert_views_identical(&run).unwrap();
        assert!(
            detect_contradictions(&s, &CollapsePolicy::UniversalCollapse)
                .unwrap()
                .is_empty(),
            "{name}"
        );
    }
}

#[test]
fn contradiction_output_is_stable() {
    for name in BUILTIN_NAMES {
        let s = builtin(name).unwrap();
        let a = detect_contradictions(&s, &CollapsePolicy::PolicyH).unwrap();
        let b = detect_contradictions(&s, &CollapsePolicy::PolicyH).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn violating_mass_equals_squared_coefficient() {
    let s = builtin("fr").unwrap();
    let bases = vec![
        s.measurement("Wbar").unwrap().basis.clone(),
        s.measurement("W").unwrap().basis.clone(),
    ];
    let coeff = wfs::rewrite_in_basis(&s.unitary_state().unwrap(), &bases)
        .unwrap()
        .get(&["o", "o"])
        .unwrap();
    let found = detect_contradictions(&s, &CollapsePolicy::PolicyH).unwrap();
    let v = found
        .iter()
        .find(|c| c.kind == ContradictionKind::BranchViolation)
        .unwrap();
    match &v.evidence {
        wfs::inference::Evidence::Branch { mass, .. } => {
            assert!((mass - coeff.norm_sqr()).abs() <= 1e-12)
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn fr_state_after_preparation() {
    let s = builtin("fr").unwrap();
    let third = (1.0f64 / 3.0).sqrt();
    let state = s.unitary_state().unwrap();
    for (labels, want) in [
        (["h", "u"], 0.0),
        (["h", "d"], third),
        (["t", "u"], third),
        (["t", "d"], third),
    ] {
        let a = state.amplitude(&labels).unwrap();
        assert!(
            (a.re - want).abs() <= 1e-12 && a.im.abs() <= 1e-12,
            "{labels:?}"
        );
    }
}

fn chained_links_hold(s: &Scenario, policy: &CollapsePolicy) -> Result<(), TestCaseError> {
    let run = enumerate_branches(s, policy).unwrap();
    let list = derive_certainty_chain(s, policy).unwrap();
    for st in &list {
        if !st.is_chained() {
            continue;
        }
        let mut stack = vec![st];
        while let Some(cur) = stack.pop() {
            match &cur.derivation {
                Derivation::Chained(links) => stack.extend(links.iter().map(|&i| &list[i])),
                Derivation::Direct => {
                    let p = certainty(
                        s,
                        &run,
                        &cur.agent,
                        std::slice::from_ref(&cur.condition),
                        &cur.target,
                    )
                    .unwrap();
                    prop_assert!(p >= 1.0 - 1e-9, "link {cur} of {st}: {p}");
                }
            }
        }
    }
    Ok(())
}

#[test]
fn builtin_chains_are_sound() {
    for name in BUILTIN_NAMES {
        let s = builtin(name).unwrap();
        for p in [
            CollapsePolicy::PolicyH,
            CollapsePolicy::UniversalCollapse,
            CollapsePolicy::NoCollapse,
        ] {
            chained_links_hold(&s, &p).unwrap();
        }
    }
}

/// Two open measurements on different systems, in either order.
fn disjoint_pair(seed: u64, swap: bool) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reg = Arc::new(
        SpaceRegistry::new(vec![
            Subsystem::new("x", ["a", "b", "c"]),
            Subsystem::new("y", ["a", "b"]),
        ])
        .unwrap(),
    );
    let init = random_state(&mut rng, &reg);
    let bx = random_basis(&mut rng, &reg, &["x".into()]);
    let by = random_basis(&mut rng, &reg, &["y".into()]);
    let mut b = ScenarioBuilder::new(reg);
    b.agent(Agent::outside("P"))
        .agent(Agent::outside("Q"))
        .init(init);
    let (first, second) = if swap {
        (("Q", by), ("P", bx))
    } else {
        (("P", bx), ("Q", by))
    };
    b.measure(first.0, first.1, Some(false)).unwrap();
    b.measure(second.0, second.1, Some(false)).unwrap();
    b.build().unwrap()
}

fn branch_masses(run: &Run) -> BTreeMap<Vec<(String, String)>, f64> {
    run.branches
        .iter()
        .map(|b| {
            let mut k = b.outcomes.clone();
            k.sort();
            (k, b.bookkeeper_probability)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn universal_collapse_gives_one_shared_view(seed in any::<u64>()) {
        let s = scenario(seed, GenOptions::default());
        let run = enumerate_branches(&s, &CollapsePolicy::UniversalCollapse).unwrap();
        assert_views_identical(&run)?;
        prop_assert!(detect_contradictions(&s, &CollapsePolicy::UniversalCollapse).unwrap().is_empty());
    }

    #[test]
    fn policy_h_without_sealed_steps_is_universal(seed in any::<u64>()) {
        let s = scenario(seed, GenOptions { sealed: false, ..GenOptions::default() });
        prop_assert!(!s.has_sealed_steps());
        let h = enumerate_branches(&s, &CollapsePolicy::PolicyH).unwrap();
        let u = enumerate_branches(&s, &CollapsePolicy::UniversalCollapse).unwrap();
        assert_runs_equal(&h, &u)?;
        prop_assert_eq!(
            derive_certainty_chain(&s, &CollapsePolicy::PolicyH).unwrap(),
            derive_certainty_chain(&s, &CollapsePolicy::UniversalCollapse).unwrap()
        );
        prop_assert_eq!(
            detect_contradictions(&s, &CollapsePolicy::PolicyH).unwrap(),
            detect_contradictions(&s, &CollapsePolicy::UniversalCollapse).unwrap()
        );
    }

    #[test]
    fn bookkeeper_mass_is_policy_independent(seed in any::<u64>()) {
        let s = scenario(seed, GenOptions::default());
        let reference = enumerate_branches(&s, &CollapsePolicy::UniversalCollapse).unwrap();
        prop_assert!((reference.total_probability() - 1.0).abs() <= 1e-9);
        for p in [CollapsePolicy::PolicyH, CollapsePolicy::NoCollapse] {
            let run = enumerate_branches(&s, &p).unwrap();
            prop_assert!((run.total_probability() - 1.0).abs() <= 1e-9);
            prop_assert_eq!(run.branches.len(), reference.branches.len());
            for (a, b) in run.branches.iter().zip(&reference.branches) {
                prop_assert_eq!(&a.outcomes, &b.outcomes);
                prop_assert!((a.bookkeeper_probability - b.bookkeeper_probability).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn measurer_always_records_own_outcome(seed in any::<u64>()) {
        let s = scenario(seed, GenOptions::default());
        for p in [CollapsePolicy::PolicyH, CollapsePolicy::UniversalCollapse, CollapsePolicy::NoCollapse] {
            let run = enumerate_branches(&s, &p).unwrap();
            for b in &run.branches {
                for m in s.measurements() {
                    let got = b.views[&m.measurer].knows(&m.id);
                    prop_assert_eq!(got, b.outcome(&m.id));
                }
            }
        }
    }

    #[test]
    fn no_collapse_without_announcements_has_no_violations(seed in any::<u64>()) {
        let opts = GenOptions { announcements: false, computational_only: true, ..GenOptions::default() };
        let s = scenario(seed, opts);
        let found = detect_contradictions(&s, &CollapsePolicy::NoCollapse).unwrap();
        prop_assert!(found.iter().all(|c| c.kind != ContradictionKind::BranchViolation), "{:?}", found);
    }

    #[test]
    fn chained_statements_are_sound(seed in any::<u64>()) {
        let s = scenario(seed, GenOptions::default());
        chained_links_hold(&s, &CollapsePolicy::PolicyH)?;
    }

    #[test]
    fn disjoint_steps_commute(seed in any::<u64>()) {
        let a = enumerate_branches(&disjoint_pair(seed, false), &CollapsePolicy::PolicyH).unwrap();
        let b = enumerate_branches(&disjoint_pair(seed, true), &CollapsePolicy::PolicyH).unwrap();
        let (ma, mb) = (branch_masses(&a), branch_masses(&b));
        prop_assert_eq!(ma.len(), mb.len());
        for (k, v) in &ma {
            prop_assert!((v - mb[k]).abs() <= 1e-9);
        }
    }
}
