use lipcert::certify::{ratio_sweep, uniform_box, Certifier};
use lipcert::network::random_network;
use lipcert::relaxation::{lipschitz_bound, Method, RelaxationSpec};
use lipcert::{InputRegion, Network};
use proptest::prelude::*;

fn small_net() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (2usize..=4, 2usize..=4, 1usize..=4, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn relaxation_bounds_every_gradient((d, p, s, seed) in small_net(), xs in prop::collection::vec(-10.0f64..10.0, 16)) {
        let net = random_network(&[d, p], s, seed).unwrap();
        let region = InputRegion::global(d);
        let hr2 = lipschitz_bound(&net, &region, 0, &RelaxationSpec::new(Method::HR2)).unwrap().value;
        let shor = lipschitz_bound(&net, &region, 0, &RelaxationSpec::new(Method::Shor)).unwrap().value;
        prop_assert!(hr2 <= shor + 1e-6, "hr2 {hr2} shor {shor}");
        for x in xs.chunks(d).filter(|c| c.len() == d) {
            let g: f64 = net.gradient(x, 0).unwrap().iter().map(|v| v.abs()).sum();
            prop_assert!(g <= hr2 + 1e-6, "gradient {g} above bound {hr2}");
        }
    }

    #[test]
    fn canonical_json_round_trips((d, p, s, seed) in small_net()) {
        let net = random_network(&[d, p, d], s, seed).unwrap();
        let text = net.to_canonical_json();
        let back = Network::from_json_str(&text).unwrap();
        prop_assert_eq!(back.to_canonical_json(), text);
        let x = vec![0.5; d];
        prop_assert_eq!(back.scores(&x).unwrap(), net.scores(&x).unwrap());
    }

    #[test]
    fn certified_ratio_is_monotone(seed in any::<u64>(), l in 0.0f64..20.0, mut eps in prop::collection::vec(0.0f64..1.0, 1..8)) {
        let net = random_network(&[3, 5], 5, seed).unwrap();
        let data = uniform_box(50, 3, 5.0, seed);
        eps.sort_by(f64::total_cmp);
        let cert = Certifier::Binary { bound: l, region: None };
        let reports = ratio_sweep(&net, &cert, &data, &eps).unwrap();
        for w in reports.windows(2) {
            prop_assert!(w[1].ratio <= w[0].ratio);
        }
        let at_zero = ratio_sweep(&net, &cert, &data, &[0.0]).unwrap()[0].ratio;
        prop_assert!(reports[0].ratio <= at_zero);
    }

    #[test]
    fn local_bounds_shrink_with_the_region((d, p, s, seed) in small_net(), c in prop::collection::vec(-3.0f64..3.0, 4)) {
        let net = random_network(&[d, p], s, seed).unwrap();
        let spec = RelaxationSpec::new(Method::HR2);
        let center = c[..d].to_vec();
        let small = lipschitz_bound(&net, &InputRegion::local(center.clone(), 0.1).unwrap(), 0, &spec).unwrap().value;
        let large = lipschitz_bound(&net, &InputRegion::local(center.clone(), 1.0).unwrap(), 0, &spec).unwrap().value;
        prop_assert!(small <= large + 1e-6, "eps 0.1: {small}, eps 1: {large}");
        let g: f64 = net.gradient(&center, 0).unwrap().iter().map(|v| v.abs()).sum();
        prop_assert!(g <= small + 1e-6);
    }
}
