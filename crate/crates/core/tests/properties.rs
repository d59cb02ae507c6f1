use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use femtosim::clustering::{
    avg_min_cochannel_distance, failure_ratio, gvcf_assign, gvcf_assign_traced, ncs_assign,
    ClusterLabel, Phase,
};
use femtosim::geometry::{distance_matrix, min_distance_to_set, Area, MsCount, Point2D, Topology};
use femtosim::radio::{
    dbm_to_mw, mw_to_dbm, path_loss_los, path_loss_nlos, received_power,
    safety_distance_from_threshold, sinr, spectral_efficiency, LinkSample, RadioParams,
};
use femtosim::simkernel::{report_from_replicas, run_scenario_detailed, Algorithm, ScenarioConfig};
use femtosim::spectrum::{build_cluster_sets, update_reserve};

fn points(max: usize) -> impl Strategy<Value = Vec<Point2D>> {
    prop::collection::vec((0.0..200.0f64, 0.0..200.0f64), 2..max)
        .prop_map(|v| v.into_iter().map(|(x, y)| Point2D::new(x, y)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn distance_matrix_is_a_metric(pts in points(25)) {
        let d = distance_matrix(&pts).unwrap();
        let n = pts.len();
        for i in 0..n {
            prop_assert_eq!(d.get(i, i), 0.0);
            for j in 0..n {
                prop_assert_eq!(d.get(i, j), d.get(j, i));
                prop_assert!(d.get(i, j) >= 0.0 && d.get(i, j).is_finite());
                for k in 0..n {
                    prop_assert!(d.get(i, k) <= d.get(i, j) + d.get(j, k) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn distance_matrix_matches_pairwise_loop(pts in points(21)) {
        let d = distance_matrix(&pts).unwrap();
        for (i, a) in pts.iter().enumerate() {
            for (j, b) in pts.iter().enumerate() {
                let dx = a.x - b.x;
                let dy = a.y - b.y;
                prop_assert!((d.get(i, j) - (dx * dx + dy * dy).sqrt()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn min_distance_matches_linear_scan(pts in points(11), mask in prop::collection::vec(any::<bool>(), 11)) {
        let d = distance_matrix(&pts).unwrap();
        let members: BTreeSet<usize> = (1..pts.len()).filter(|&i| mask[i]).collect();
        prop_assume!(!members.is_empty());
        let mut best = f64::INFINITY;
        for &m in &members {
            let v = pts[0].distance(&pts[m]);
            if v < best {
                best = v;
            }
        }
        prop_assert_eq!(min_distance_to_set(0, &members, &d).unwrap(), best);
    }

    #[test]
    fn topology_is_reproducible_and_round_trips(seed in any::<u64>(), n in 1usize..40) {
        let area = Area::default();
        let a = Topology::generate(&area, n, MsCount::default(), 10.0, seed).unwrap();
        let b = Topology::generate(&area, n, MsCount::default(), 10.0, seed).unwrap();
        let text = a.to_csv();
        prop_assert_eq!(&text, &b.to_csv());
        prop_assert_eq!(Topology::from_csv(&text, area).unwrap().to_csv(), text);
        for f in &a.faps {
            prop_assert!((1..=4).contains(&f.mobiles.len()));
            for ms in &f.mobiles {
                prop_assert!(ms.position.distance(&f.position) <= area.femto_radius + 1e-12);
                prop_assert_eq!(ms.serving_fap, f.id);
            }
        }
    }

    #[test]
    fn path_loss_increases_with_distance_and_frequency(d in 0.1..500.0f64, dd in 0.01..50.0f64, f in 0.5..6.0f64, df in 0.01..2.0f64) {
        prop_assert!(path_loss_los(d + dd, f).unwrap() > path_loss_los(d, f).unwrap());
        prop_assert!(path_loss_los(d, f + df).unwrap() > path_loss_los(d, f).unwrap());
        prop_assert!(path_loss_nlos(d + dd, f, 20.0).unwrap() > path_loss_nlos(d, f, 20.0).unwrap());
        prop_assert!(path_loss_nlos(d, f + df, 5.0).unwrap() > path_loss_nlos(d, f, 5.0).unwrap());
    }

    #[test]
    fn extra_interference_lowers_sinr(
        carrier in -120.0..0.0f64,
        interferers in prop::collection::vec(-130.0..-20.0f64, 0..8),
        extra in -130.0..-20.0f64,
        noise in -130.0..-90.0f64,
    ) {
        let base = LinkSample { carrier_power: carrier, interference_powers: interferers.clone(), noise_power: noise };
        let mut more = base.clone();
        more.interference_powers.push(extra);
        prop_assert!(sinr(&more) < sinr(&base));
        let snr = LinkSample { interference_powers: vec![], ..base.clone() };
        let c = dbm_to_mw(carrier);
        let i: f64 = interferers.iter().map(|&p| dbm_to_mw(p)).sum();
        let n = dbm_to_mw(noise);
        prop_assert!(c / n >= c / (i + n));
        prop_assert!(sinr(&snr) >= sinr(&base));
    }

    #[test]
    fn db_linear_round_trip(x in 1e-15..1e6f64) {
        prop_assert!((dbm_to_mw(mw_to_dbm(x)) - x).abs() <= 1e-12 * x);
    }

    #[test]
    fn spectral_efficiency_is_increasing(s in -50.0..60.0f64, ds in 0.001..10.0f64) {
        prop_assert!(spectral_efficiency(s + ds, None) > spectral_efficiency(s, None));
    }

    #[test]
    fn safety_distance_inverts_path_loss(d in 1.0..200.0f64, tx in -10.0..30.0f64) {
        let p = RadioParams::default();
        let thr = received_power(tx, path_loss_nlos(d, p.carrier_freq_ghz, p.interference_wall_loss_db()).unwrap(), 0.0);
        prop_assert!((safety_distance_from_threshold(thr, tx, &p).unwrap() - d).abs() < 1e-6);
    }

    #[test]
    fn reserve_updates_keep_pool_invariants(
        n_vc in 1usize..5,
        extra in 0usize..4,
        released in prop::collection::btree_set(0usize..30, 0..6),
        reclaim_mask in prop::collection::vec(any::<bool>(), 30),
    ) {
        let pool: Vec<usize> = (0..n_vc * 4 + extra).collect();
        let cp = build_cluster_sets(&pool, n_vc, 4).unwrap();
        let reclaimed: BTreeSet<usize> = cp.reserve.iter().copied()
            .filter(|c| reclaim_mask[*c] && !released.contains(c)).collect();
        let next = update_reserve(&cp, &released, &reclaimed).unwrap();
        next.validate().unwrap();
        for (i, a) in next.cluster_sets.iter().enumerate() {
            for b in &next.cluster_sets[i + 1..] {
                prop_assert!(a.iter().all(|c| !b.contains(c)));
            }
        }
        let used: usize = next.cluster_sets.iter().map(Vec::len).sum::<usize>() + next.reserve.len();
        prop_assert!(used <= next.femto_available.len());
        let expected: BTreeSet<usize> = cp.reserve.union(&released).copied()
            .filter(|c| !reclaimed.contains(c)).collect();
        prop_assert_eq!(&next.reserve, &expected);
    }

    #[test]
    fn gvcf_is_complete_and_safe(pts in points(40), n_vc in 1usize..6, d_th in 0.0..40.0f64) {
        let d = distance_matrix(&pts).unwrap();
        let (a, steps) = gvcf_assign_traced(&d, n_vc, d_th).unwrap();
        prop_assert!(a.is_complete());
        prop_assert_eq!(steps.len(), pts.len());
        let mut seen = BTreeSet::new();
        for s in &steps {
            prop_assert!(seen.insert(s.fap));
        }
        if pts.len() >= n_vc {
            for k in 0..n_vc {
                prop_assert!(!a.members(k).is_empty());
            }
        }
        for s in steps.iter().filter(|s| s.phase == Phase::Minimax) {
            if let ClusterLabel::Vcc(k) = s.label {
                prop_assert!(k < n_vc);
                let mut others = a.members(k);
                others.remove(&s.fap);
                prop_assert!(min_distance_to_set(s.fap, &others, &d).unwrap() >= d_th);
            }
        }
        prop_assert_eq!(gvcf_assign(&d, n_vc, d_th).unwrap(), a);
    }

    #[test]
    fn single_cluster_gvcf_matches_ncs(pts in points(30), seed in any::<u64>()) {
        let d = distance_matrix(&pts).unwrap();
        let g = gvcf_assign(&d, 1, 0.0).unwrap();
        let n = ncs_assign(pts.len(), 1, seed).unwrap();
        prop_assert_eq!(&g.labels, &n.labels);
        prop_assert_eq!(failure_ratio(&g, &d, 20.0), failure_ratio(&n, &d, 20.0));
        prop_assert_eq!(avg_min_cochannel_distance(&g, &d), avg_min_cochannel_distance(&n, &d));
    }
}

#[test]
fn cochannel_distance_grows_with_cluster_count() {
    // averaged over random drops; individual greedy runs need not be monotone
    let area = Area::default();
    for n_faps in [50, 100, 150, 200] {
        let mut means = Vec::new();
        for n_vc in 1..=5 {
            let mut total = 0.0;
            let drops = 20;
            for seed in 0..drops {
                let topo =
                    Topology::generate(&area, n_faps, MsCount::default(), 10.0, seed).unwrap();
                let d = topo.distance_matrix().unwrap();
                let a = gvcf_assign(&d, n_vc, 20.0).unwrap();
                let folded = a.fold_reserve(&d, &a.reserve());
                total += avg_min_cochannel_distance(&folded, &d).unwrap();
            }
            means.push(total / drops as f64);
        }
        assert!(
            means.windows(2).all(|w| w[0] <= w[1]),
            "{n_faps} FAPs: {means:?}"
        );
    }
}

#[test]
fn replica_order_does_not_change_statistics() {
    let cfg = ScenarioConfig {
        n_faps: 40,
        channels_available: 12,
        n_replicas: 6,
        ..ScenarioConfig::default()
    };
    let run = run_scenario_detailed(&cfg).unwrap();
    let mut reversed = run.replicas.clone();
    reversed.reverse();
    let back = report_from_replicas(&reversed).unwrap();
    let a = &run.report;
    for (x, y) in [
        (a.p50_sinr, back.p50_sinr),
        (a.p90_sinr, back.p90_sinr),
        (a.x90_sinr, back.x90_sinr),
        (a.mean_sinr, back.mean_sinr),
        (a.p50_se, back.p50_se),
        (a.x90_se, back.x90_se),
        (a.mean_se, back.mean_se),
        (a.failure_ratio_mean, back.failure_ratio_mean),
    ] {
        assert_eq!(x.to_bits(), y.to_bits());
    }
    assert_eq!(
        a.avg_min_cochannel_distance_mean,
        back.avg_min_cochannel_distance_mean
    );
    assert_eq!(a.n_samples, back.n_samples);
}

#[test]
fn percentiles_are_ordered_in_every_report() {
    for algorithm in [Algorithm::Gvcf, Algorithm::Ncs] {
        let cfg = ScenarioConfig {
            n_faps: 60,
            channels_available: 8,
            n_replicas: 5,
            algorithm,
            ..ScenarioConfig::default()
        };
        let r = run_scenario_detailed(&cfg).unwrap().report;
        assert!(r.x90_sinr <= r.p50_sinr && r.p50_sinr <= r.p90_sinr);
        assert!(r.x90_se <= r.p50_se && r.p50_se <= r.p90_se);
    }
}

#[test]
fn best_ci_channel_matches_exhaustive_search() {
    use femtosim::geometry::MobileStation;
    use femtosim::spectrum::allocate_channel_to_ms;
    use rand::{Rng, SeedableRng};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    let ms = MobileStation {
        id: 0,
        position: Point2D::new(100.0, 100.0),
        serving_fap: 0,
        assigned_channel: None,
    };
    let p = RadioParams::default();
    for _ in 0..200 {
        let mut links = BTreeMap::new();
        for c in 0..8usize {
            let k = rng.random_range(0..6);
            let interference_powers = (0..k)
                .map(|_| {
                    let d = rng.random_range(5.0..150.0);
                    10.0 - p.interference_path_loss(d)
                })
                .collect();
            links.insert(
                c,
                LinkSample {
                    carrier_power: 10.0 - p.signal_path_loss(4.0),
                    interference_powers,
                    noise_power: -113.45,
                },
            );
        }
        let candidates: BTreeSet<usize> = links.keys().copied().collect();
        let mut best = 0;
        for c in 1..8 {
            if sinr(&links[&c]) > sinr(&links[&best]) {
                best = c;
            }
        }
        assert_eq!(
            allocate_channel_to_ms(&ms, &candidates, &links).unwrap(),
            best
        );
    }
}
