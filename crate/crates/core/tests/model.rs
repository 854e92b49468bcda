use brwlab::model::*;
use brwlab::spaces::*;
use brwlab::Error;
use proptest::prelude::*;

#[derive(Debug)]
struct ForwardChain {
    offspring: OffspringLaw,
}

impl Structure for ForwardChain {
    fn name(&self) -> String {
        "forward chain".into()
    }
    fn root(&self) -> Site {
        Site::scalar(0)
    }
    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        ReproductionLaw::IndependentDiffusion {
            offspring: self.offspring.clone(),
            moves: vec![(Site::scalar(site.get(0) + 1), 1.0)],
        }
    }
}

#[derive(Debug)]
struct RateChain {
    rate: f64,
}

impl Structure for RateChain {
    fn name(&self) -> String {
        "rate chain".into()
    }
    fn root(&self) -> Site {
        Site::scalar(0)
    }
    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        ReproductionLaw::ContinuousCounterpart { lambda: 1.0, rates: vec![(Site::scalar(site.get(0) + 1), self.rate)] }
    }
}

fn single(site_law: ReproductionLaw<Site>) -> BrwModel {
    let s = Site::scalar(0);
    BrwModel::new(FiniteStructure::new("single", s.clone(), vec![(s, site_law)]).unwrap())
}

#[test]
fn lattice_edge_breeding_kernel() {
    let ball = lattice_zd(1, 1.0).ball(2).unwrap();
    let k = build_moment_kernel(&ball).unwrap();
    let plus = ball.id(&Site::scalar(1)).unwrap();
    let minus = ball.id(&Site::scalar(-1)).unwrap();
    assert_eq!(k.get(0, plus), 1.0);
    assert_eq!(k.get(0, minus), 1.0);
    assert!(k.is_symmetric());
}

#[test]
fn diffusion_kernel_is_mean_times_move() {
    let m = BrwModel::new(ForwardChain { offspring: OffspringLaw::Finite(vec![0.25, 0.0, 0.75]) });
    let ball = m.ball(3).unwrap();
    let k = build_moment_kernel(&ball).unwrap();
    assert_eq!(k.get(0, 1), 1.5);
    assert!(!k.is_symmetric());
}

#[test]
fn witness_chain_kernel_entries() {
    let e = build_example("lambda-w-attained-chain").unwrap();
    let ball = e.model.ball(3).unwrap();
    let k = build_moment_kernel(&ball).unwrap();
    assert_eq!(k.get(0, 1), 2.0);
    assert_eq!(k.get(1, 2), 4.0);
    assert_eq!(k.get(1, 0), 1.0 / 3.0);
}

#[test]
fn unbounded_rows_are_rejected() {
    let m = BrwModel::new(RateChain { rate: 1e13 });
    let ball = m.ball(2).unwrap();
    assert!(matches!(build_moment_kernel(&ball), Err(Error::UnboundedRowSum { .. })));
}

#[test]
fn counterpart_geometric_law() {
    let e = build_example("continuous-bp").unwrap();
    let d = e.model.discrete_counterpart();
    let ReproductionLaw::IndependentDiffusion { offspring, moves } = d.law(&d.root()) else {
        panic!("counterpart must be a diffusion law");
    };
    assert_eq!(moves.len(), 1);
    for i in 0..8 {
        let expected = (1.0 / 3.0) * (2.0f64 / 3.0).powi(i);
        assert!((offspring.prob(i as usize) - expected).abs() < 1e-15);
    }
}

#[test]
fn counterpart_kernel_on_lattice_and_tree() {
    let z = lattice_zd(1, 0.5).discrete_counterpart();
    let ball = z.ball(2).unwrap();
    let k = build_moment_kernel(&ball).unwrap();
    assert_eq!(k.get(0, ball.id(&Site::scalar(1)).unwrap()), 0.5);

    let t = homogeneous_tree(3, 1.0 / 3.0, Decoration::None).discrete_counterpart();
    let ReproductionLaw::IndependentDiffusion { offspring, .. } = t.law(&t.root()) else {
        panic!("counterpart must be a diffusion law");
    };
    assert!((offspring.mean() - 1.0).abs() < 1e-15);
}

#[test]
fn counterpart_of_dead_end_is_null() {
    let a = Site::scalar(0);
    let b = Site::scalar(1);
    let s = FiniteStructure::new(
        "dead end",
        a.clone(),
        vec![
            (a.clone(), ReproductionLaw::ContinuousCounterpart { lambda: 1.0, rates: vec![(b.clone(), 1.0)] }),
            (b.clone(), ReproductionLaw::ContinuousCounterpart { lambda: 1.0, rates: vec![] }),
        ],
    )
    .unwrap();
    let d = BrwModel::new(s).discrete_counterpart();
    assert_eq!(d.law(&b), ReproductionLaw::null());
}

#[test]
fn validation_accepts_and_rejects() {
    let report = validate_model(&galton_watson(&[0.25, 0.0, 0.75]), 5).unwrap();
    assert_eq!(report.classes, 1);

    let s = Site::scalar(0);
    let stuck = single(ReproductionLaw::Explicit(vec![Outcome { prob: 1.0, config: OffspringConfig { children: vec![(s, 1)] } }]));
    assert!(matches!(validate_model(&stuck, 5), Err(Error::DegenerateClass { .. })));

    let short = BrwModel::new(ForwardChain { offspring: OffspringLaw::Finite(vec![0.0, 0.9]) });
    assert!(matches!(validate_model(&short, 3), Err(Error::Normalization { .. })));
}

#[test]
fn digraph_classes_and_periods() {
    let ball = lattice_zd(1, 1.0).ball(5).unwrap();
    let g = analyze_digraph(&ball);
    assert_eq!(g.classes.len(), 1);
    assert_eq!(g.classes[0].period, Some(2));
    assert!(g.classes[0].touches_boundary);

    let strip = build_example("strip").unwrap().model;
    let ball = strip.ball(6).unwrap();
    let g = analyze_digraph(&ball);
    let corner = ball.id(&Site::new(&[0, 1])).unwrap();
    for c in &g.classes {
        assert_eq!(c.members.len(), 1);
        if c.members[0] == corner {
            assert_eq!(c.period, Some(1));
        } else {
            assert_eq!(c.period, None);
        }
    }

    let bp = build_example("two-type-bp").unwrap().model;
    let g = analyze_digraph(&bp.whole().unwrap());
    assert_eq!(g.classes.len(), 1);
    assert_eq!(g.classes[0].members.len(), 2);
    assert_eq!(g.classes[0].period, Some(2));
}

#[test]
fn square_tree_projects_to_type_kernel() {
    let m = build_example("square-tree-fgraph").unwrap().model;
    let g = |s: &Site| m.structure().type_label(s).unwrap();
    let p = project_local_isomorphism(&m, &g, 8).unwrap();
    assert!(p.residual <= 1e-12, "residual {}", p.residual);
    let k = build_moment_kernel(&p.model.whole().unwrap()).unwrap();
    assert_eq!(k.to_dense(), vec![vec![3.0, 1.0], vec![1.0, 0.0]]);
}

#[test]
fn homogeneous_tree_projects_to_a_branching_process() {
    let m = homogeneous_tree(4, 0.3, Decoration::None);
    let p = project_local_isomorphism(&m, &|_| 0, 5).unwrap();
    assert_eq!(p.types, vec![0]);
    let k = build_moment_kernel(&p.model.whole().unwrap()).unwrap();
    assert!((k.get(0, 0) - 1.2).abs() < 1e-15);
    assert!(p.residual <= 1e-12);
}

#[test]
fn inhomogeneous_fibers_are_rejected() {
    let m = radial_tree(&[1, 2], 1.0);
    assert!(matches!(project_local_isomorphism(&m, &|_| 0, 4), Err(Error::FiberMismatch { .. })));
}

#[test]
fn quasi_transitive_images_are_small() {
    for d in 2..6 {
        let m = homogeneous_tree(d, 0.5, Decoration::None);
        let g = |s: &Site| m.structure().type_label(s).unwrap();
        assert_eq!(project_local_isomorphism(&m, &g, 4).unwrap().types.len(), 1);
    }
    let z2 = lattice_zd(2, 0.5);
    assert_eq!(project_local_isomorphism(&z2, &|_| 0, 6).unwrap().types.len(), 1);
    let sq = build_example("square-tree-fgraph").unwrap().model;
    let g = |s: &Site| sq.structure().type_label(s).unwrap();
    assert!(project_local_isomorphism(&sq, &g, 6).unwrap().types.len() <= 3);
}

#[test]
fn radius_cap_is_enforced() {
    let t = homogeneous_tree(3, 1.0, Decoration::None);
    let cap = t.structure().cap().unwrap();
    assert!(matches!(t.ball(cap + 1), Err(Error::RadiusCap { .. })));
}

#[test]
fn lumped_tree_matches_depth_profile() {
    let t = homogeneous_tree(3, 1.0, Decoration::None);
    let full = build_moment_kernel(&t.ball(6).unwrap()).unwrap();
    let lumped = t.lumped().unwrap();
    let q = build_moment_kernel(&lumped.ball(6).unwrap()).unwrap();
    let mut u = vec![0.0; full.len()];
    u[0] = 1.0;
    let mut v = vec![0.0; q.len()];
    v[0] = 1.0;
    for _ in 0..6 {
        let mut nu = vec![0.0; full.len()];
        full.push_forward(&u, &mut nu);
        u = nu;
        let mut nv = vec![0.0; q.len()];
        q.push_forward(&v, &mut nv);
        v = nv;
        assert_eq!(u[0], v[0]);
        assert_eq!(u.iter().sum::<f64>(), v.iter().sum::<f64>());
    }
}

proptest! {
    #[test]
    fn balls_are_prefix_stable(r in 1u32..6, extra in 1u32..4) {
        for m in [lattice_zd(2, 1.0), homogeneous_tree(3, 1.0, Decoration::Clique { k: 3 })] {
            let small = m.ball(r).unwrap();
            let big = m.ball(r + extra).unwrap();
            for v in 0..small.len() {
                prop_assert_eq!(small.site(v), big.site(v));
            }
        }
    }

    #[test]
    fn counterpart_kernel_is_lambda_times_rates(
        rates in proptest::collection::vec(1u32..64, 1..6),
        lambda_num in 1u32..64,
    ) {
        let lambda = lambda_num as f64 / 16.0;
        let a = Site::scalar(0);
        let targets: Vec<Site> = (1..=rates.len() as i64).map(Site::scalar).collect();
        let mut entries = vec![(a.clone(), ReproductionLaw::ContinuousCounterpart {
            lambda,
            rates: targets.iter().zip(&rates).map(|(t, k)| (t.clone(), *k as f64 / 8.0)).collect(),
        })];
        for t in &targets {
            entries.push((t.clone(), ReproductionLaw::null()));
        }
        let m = BrwModel::new(FiniteStructure::new("star", a, entries).unwrap());
        let rate_kernel = build_moment_kernel(&m.whole().unwrap()).unwrap();
        let counterpart = build_moment_kernel(&m.discrete_counterpart().whole().unwrap()).unwrap();
        for (j, k) in rates.iter().enumerate() {
            let expected = lambda * *k as f64 / 8.0;
            prop_assert_eq!(rate_kernel.get(0, j + 1), expected);
            prop_assert!((counterpart.get(0, j + 1) - expected).abs() <= 1e-14 * expected);
        }
        if rates.iter().all(|k| *k == rates[0]) && rates.len().is_power_of_two() {
            prop_assert_eq!(counterpart.get(0, 1), lambda * rates[0] as f64 / 8.0);
        }
    }
}
