use brwlab::genfun::{global_extinction_bracket, never_hit_bracket, IterationSettings};
use brwlab::model::*;
use brwlab::simulate::*;
use brwlab::spaces::*;
use brwlab::Error;

fn single(law: ReproductionLaw<Site>) -> BrwModel {
    let s = Site::scalar(0);
    BrwModel::new(FiniteStructure::new("single", s.clone(), vec![(s, law)]).unwrap())
}

fn children_at_self(k: Count) -> ReproductionLaw<Site> {
    ReproductionLaw::Explicit(vec![Outcome { prob: 1.0, config: OffspringConfig { children: vec![(Site::scalar(0), k)] } }])
}

fn plan(trials: u64, horizon: u64, cap: u64, seed: u64) -> TrialPlan {
    TrialPlan { trials, horizon, population_cap: cap, seed, ..TrialPlan::default() }
}

#[test]
fn childless_walk_dies_at_generation_one() {
    let m = galton_watson(&[1.0]);
    let start = Population::single(m.root());
    for t in 0..20 {
        let o = run_trial(&m, &start, &plan(1, 50, 10, 7), t).unwrap();
        assert_eq!(o.stop, StopReason::Extinct);
        assert_eq!(o.final_generation, 1);
        assert_eq!(o.final_population, 0);
    }
}

#[test]
fn truncated_self_copy_stays_constant() {
    let m = single(children_at_self(1)).with_truncation(1).unwrap();
    let p = TrialPlan { record_history: true, ..plan(1, 30, 10, 1) };
    let o = run_trial(&m, &Population::single(m.root()), &p, 0).unwrap();
    assert_eq!(o.stop, StopReason::Horizon);
    assert_eq!(o.history.unwrap(), vec![1; 31]);

    let doubling = single(children_at_self(2)).with_truncation(3).unwrap();
    let o = run_trial(&doubling, &Population::single(doubling.root()), &p, 0).unwrap();
    assert_eq!(o.history.unwrap()[..4], [1, 2, 3, 3]);
}

#[test]
fn restrained_acceptance_uses_occupancy_in_the_new_generation() {
    let base = single(children_at_self(2));
    let one_per_site = base.clone().with_acceptance(Acceptance::new(vec![1.0, 0.0]).unwrap());
    let p = TrialPlan { record_history: true, ..plan(1, 20, 100, 3) };
    let o = run_trial(&one_per_site, &Population::single(base.root()), &p, 0).unwrap();
    assert_eq!(o.history.unwrap(), vec![1; 21]);

    let overridden = TrialPlan { acceptance: Some(Acceptance::new(vec![1.0, 1.0, 0.0]).unwrap()), ..p };
    let o = run_trial(&base, &Population::single(base.root()), &overridden, 0).unwrap();
    assert_eq!(o.history.unwrap()[1..], [2; 20]);
}

#[test]
fn population_cap_stops_the_trial() {
    let m = single(children_at_self(2));
    let o = run_trial(&m, &Population::single(m.root()), &plan(1, 100, 1000, 0), 0).unwrap();
    assert_eq!(o.stop, StopReason::PopulationCap);
    assert_eq!(o.final_generation, 9);
    assert_eq!(o.max_population, 512);
}

#[test]
fn galton_watson_extinct_fraction() {
    let m = build_example("galton-watson").unwrap().model;
    // Once 100 particles are alive the chance of later extinction is 3^-100.
    let p = plan(100_000, 200, 100, 2024);
    let est = estimate_survival(&m, &m.root(), &p, SurvivalMode::Global).unwrap();
    let extinct = 1.0 - est.estimate;
    assert!((extinct - 1.0 / 3.0).abs() < 0.005, "extinct fraction {extinct}");
    assert!(est.ci_low < 2.0 / 3.0 && 2.0 / 3.0 < est.ci_high);
    assert_eq!(est.lower_estimate, est.successes as f64 / 100_000.0);
}

#[test]
fn never_hit_matches_the_fixed_point() {
    let m = lattice_zd(1, 0.6);
    let h = never_hit_bracket(&m, &[0], 60, IterationSettings::default()).unwrap();
    let (lo, hi) = (h.lower.values[0], h.upper.values[0]);
    assert!(lo > 0.0 && hi < 1.0 && hi - lo < 1e-6);

    let trials = 100_000;
    let p = TrialPlan { targets: vec![vec![m.root()]], ..plan(trials, 60, 300, 11) };
    let outcomes = run_trials(&m, &Population::single(m.root()), &p).unwrap();
    let missed = |o: &&SimOutcome| o.visits[0].first_visit.is_none();
    let certain = outcomes.iter().filter(missed).filter(|o| o.stop == StopReason::Extinct).count() as f64 / trials as f64;
    let possible = outcomes.iter().filter(missed).count() as f64 / trials as f64;
    let sigma = (possible * (1.0 - possible) / trials as f64).sqrt().max(1e-4);
    assert!(certain - 3.0 * sigma <= hi && lo <= possible + 3.0 * sigma, "mc [{certain}, {possible}] vs [{lo}, {hi}]");
    assert!(possible - certain < 0.01);
}

#[test]
fn outcomes_do_not_depend_on_worker_count() {
    let m = lattice_zd(2, 0.3);
    let p = TrialPlan { targets: vec![vec![m.root()]], record_history: true, ..plan(300, 25, 10_000, 99) };
    let start = Population::single(m.root());
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| run_trials(&m, &start, &p).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a, b);
    let single: Vec<_> = (0..10).map(|t| run_trial(&m, &start, &p, t).unwrap()).collect();
    assert_eq!(single[..], a[..10]);

    let (mut x, mut y) = (Vec::new(), Vec::new());
    write_trials_csv(&mut x, &a).unwrap();
    write_trials_csv(&mut y, &b).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("trial,stop_reason,final_gen,max_pop,visits_A\n0,"));

    let other = run_trials(&m, &start, &TrialPlan { seed: 100, ..p.clone() }).unwrap();
    assert_ne!(a, other);
}

#[test]
fn untruncated_coupled_trial_is_the_plain_trajectory() {
    let m = homogeneous_tree(3, 0.5, Decoration::None);
    let p = TrialPlan { record_history: true, targets: vec![vec![m.root()]], ..plan(1, 30, 5_000, 5) };
    for t in 0..30 {
        let plain = run_trial(&m, &Population::single(m.root()), &p, t).unwrap();
        let coupled = coupled_trial(&m, &m.root(), &p, &[None], t).unwrap();
        assert_eq!(coupled, vec![plain]);
    }
}

#[test]
fn truncation_sweep_is_monotone() {
    let m = homogeneous_tree(3, 0.5, Decoration::None);
    let p = plan(300, 30, 5_000, 8);
    let r = coupled_truncation_sweep(&m, &m.root(), &p, &[Some(1), Some(2), Some(4), Some(8), None]).unwrap();
    assert!(r.comparisons > 300);
    assert!(r.monotone(), "{:?}", r.levels.iter().map(|l| l.global.estimate).collect::<Vec<_>>());

    let z = lattice_zd(1, 2.0);
    let r = coupled_truncation_sweep(&z, &z.root(), &plan(300, 30, 5_000, 9), &[Some(1), None]).unwrap();
    assert!(r.levels[0].global.estimate <= r.levels[1].global.estimate);

    for bad in [&[Some(2), Some(1)][..], &[None, Some(1)], &[Some(0)], &[]] {
        assert!(matches!(coupled_truncation_sweep(&m, &m.root(), &p, bad), Err(Error::Invalid(_))));
    }
    let restrained = m.clone().with_acceptance(Acceptance::new(vec![1.0, 0.5]).unwrap());
    assert!(coupled_truncation_sweep(&restrained, &m.root(), &p, &[Some(1)]).is_err());
}

#[test]
fn strip_survives_locally_at_the_upper_row() {
    let m = build_example("strip(0.9)").unwrap().model;
    let p = plan(4_000, 12, 1_000_000, 12);
    let target = vec![Site::new(&[0, 1])];
    let est = estimate_survival(&m, &m.root(), &p, SurvivalMode::Local { target: target.clone() }).unwrap();
    assert!(est.bounded_away_from_zero(), "{est:?}");
    assert_eq!(est.censored, 0);
    let strong = estimate_survival(&m, &m.root(), &p, SurvivalMode::StrongLocal { target }).unwrap();
    assert!(strong.eligible < 4_000 && strong.lower_ci_low > 0.5);
}

#[test]
fn pure_global_phase_on_the_tree() {
    // The depth quotient has the same law for visits to the root and no index overflow.
    let m = homogeneous_tree(3, 0.34, Decoration::None).lumped().unwrap();
    let p = plan(3_000, 300, 100_000, 34);
    let local = estimate_survival(&m, &m.root(), &p, SurvivalMode::Local { target: vec![m.root()] }).unwrap();
    assert!(local.ci_low <= 0.0 + 1e-12, "{local:?}");
    let global = estimate_survival(&m, &m.root(), &p, SurvivalMode::Global).unwrap();
    assert!(global.bounded_away_from_zero(), "{global:?}");
}

#[test]
fn global_estimate_agrees_with_the_fixed_point() {
    let m = build_example("continuous-bp").unwrap().model;
    let q = global_extinction_bracket(&m, 1, IterationSettings::default()).unwrap();
    let est = estimate_survival(&m, &m.root(), &plan(20_000, 200, 200, 4), SurvivalMode::Global).unwrap();
    let truth = 1.0 - q.lower.values[0];
    assert!((est.estimate - truth).abs() <= 3.0 * est.std_error() + q.width(), "{} vs {truth}", est.estimate);
}

#[test]
fn one_step_means_match_the_kernel() {
    let m = lattice_zd(1, 0.6);
    let means = one_step_means(&m, &m.root(), 200_000, 3).unwrap();
    assert_eq!(means.len(), 2);
    for s in &means {
        assert!((s.mean - 0.6).abs() < 4.0 * s.std_error, "{s:?}");
    }
    let gw = build_example("galton-watson").unwrap().model;
    let means = one_step_means(&gw, &gw.root(), 100_000, 3).unwrap();
    assert!((means[0].mean - 1.5).abs() < 4.0 * means[0].std_error);
}

#[derive(Debug)]
struct BoundedRay;

impl Structure for BoundedRay {
    fn name(&self) -> String {
        "bounded ray".into()
    }
    fn root(&self) -> Site {
        Site::scalar(0)
    }
    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        let next = Site::scalar(site.get(0) + 1);
        ReproductionLaw::Explicit(vec![Outcome { prob: 1.0, config: OffspringConfig { children: vec![(next, 1)] } }])
    }
    fn representable(&self, site: &Site) -> bool {
        site.get(0) < 10
    }
}

#[test]
fn leaving_the_representable_range_is_a_stop_reason() {
    let m = BrwModel::new(BoundedRay);
    let o = run_trial(&m, &Population::single(m.root()), &plan(1, 100, 100, 0), 0).unwrap();
    assert_eq!(o.stop, StopReason::EscapedBall);
    assert_eq!(o.final_generation, 9);

    let deep = homogeneous_tree(3, 0.1, Decoration::None);
    let last = Site::new(&[0, 62, (1i64 << 62) + 5]);
    assert!(deep.structure().representable(&Site::new(&[0, 3, 23])));
    assert!(!deep.structure().representable(&last));
}

#[test]
fn invalid_plans_are_rejected() {
    let m = galton_watson(&[0.5, 0.5]);
    assert!(estimate_survival(&m, &m.root(), &plan(0, 10, 10, 0), SurvivalMode::Global).is_err());
    assert!(run_trial(&m, &Population::single(m.root()), &plan(1, 0, 10, 0), 0).is_err());
    assert!(one_step_means(&m, &m.root(), 0, 0).is_err());
    assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    let (lo, hi) = wilson_interval(50, 100);
    assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
}
