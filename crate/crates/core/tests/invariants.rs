use jpp_core::metrics::{aggregate_pckh, parsing_scores, pckh, ConfusionMatrix};
use jpp_core::selfsup::{pseudo_joints_from_parsing, region_centers, structure_report};
use jpp_core::{flip_joint_set, flip_label_map, Joint, JointSet, LabelMap, NUM_CLASSES, NUM_JOINTS};
use proptest::prelude::*;

fn label_map(h: usize, w: usize) -> impl Strategy<Value = LabelMap> {
    prop::collection::vec(0..NUM_CLASSES as u8, h * w).prop_map(move |d| LabelMap::from_raw(h, w, d).unwrap())
}

fn pair() -> impl Strategy<Value = (LabelMap, LabelMap)> {
    (1usize..12, 1usize..12).prop_flat_map(|(h, w)| (label_map(h, w), label_map(h, w)))
}

fn pose() -> impl Strategy<Value = JointSet> {
    prop::collection::vec((0.0..100.0f64, 0.0..100.0f64, any::<bool>()), NUM_JOINTS).prop_map(|v| {
        let mut j = JointSet::absent();
        for (s, (x, y, vis)) in j.0.iter_mut().zip(v) {
            if vis {
                *s = Joint::visible(x, y);
            }
        }
        j
    })
}

proptest! {
    #[test]
    fn pooling_is_order_free(pairs in prop::collection::vec(pair(), 1..6)) {
        let parts: Vec<ConfusionMatrix> = pairs.iter().map(|(p, g)| {
            let mut cm = ConfusionMatrix::new();
            cm.add(p, g).unwrap();
            cm
        }).collect();
        let fwd = ConfusionMatrix::merged(&parts);
        let rev = ConfusionMatrix::merged(parts.iter().rev());
        prop_assert_eq!(&fwd, &rev);
        let s = parsing_scores(&fwd).unwrap();
        for v in [s.overall_accuracy, s.mean_accuracy, s.mean_iou] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn self_comparison_is_perfect((p, _) in pair()) {
        let mut cm = ConfusionMatrix::new();
        cm.add(&p, &p).unwrap();
        let s = parsing_scores(&cm).unwrap();
        prop_assert_eq!((s.overall_accuracy, s.mean_accuracy, s.mean_iou), (1.0, 1.0, 1.0));
    }

    #[test]
    fn flipping_twice_is_identity((p, _) in pair(), j in pose(), w in 1usize..200) {
        prop_assert_eq!(flip_label_map(&flip_label_map(&p)), p);
        let back = flip_joint_set(&flip_joint_set(&j, w), w);
        for (a, b) in back.0.iter().zip(j.0.iter()) {
            prop_assert_eq!(a.vis, b.vis);
            prop_assert!((a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9);
        }
    }

    #[test]
    fn pckh_is_a_fraction(p in pose(), g in pose()) {
        if let Some(v) = pckh(&p, &g, 0.5) {
            let s = aggregate_pckh(std::iter::once(&v)).ok();
            if let Some(s) = s {
                prop_assert!((0.0..=1.0).contains(&s.total));
            }
        }
    }

    #[test]
    fn structure_loss_vanishes_only_on_matching_centroids((p, g) in pair(), l in 0.0..5.0f64) {
        let r = structure_report(&p, &g, l, p.height(), p.width(), 1.0);
        prop_assert!(r.l_joint >= 0.0 && r.l_structure >= 0.0);
        prop_assert_eq!(structure_report(&g, &g, l, g.height(), g.width(), 1.0).l_structure, 0.0);
        if region_centers(&p) == region_centers(&g) {
            prop_assert_eq!(r.l_joint, 0.0);
        }
    }

    #[test]
    fn pseudo_heatmaps_peak_at_most_one((p, _) in pair()) {
        let hm = pseudo_joints_from_parsing(&p, p.height(), p.width(), 1.0);
        prop_assert!(hm.as_slice().iter().all(|v| (0.0..=1.0 + 1e-12).contains(v)));
    }
}
