mod common;

use common::*;
use posetgame::circulation::{decompose_flow, solve_mccp, PathFlow};
use posetgame::game::{compute_ne, critical_components, equilibrium_quantities, payoffs, pure_ne_check, verify_ne};
use posetgame::network::DEFAULT_PATH_CAP;
use posetgame::oracle::{brute_force_best_responses, MAX_ORACLE_EDGES};
use posetgame::Rational;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn equilibrium_meets_its_defining_conditions(seed in any::<u64>()) {
        let net = random_network(&mut rng(seed), 6);
        let eq = compute_ne(&net).unwrap();
        let routing = &eq.profile.routing;
        let sigma = &eq.profile.interdiction;
        let mccp = solve_mccp(&net).unwrap();
        prop_assert_eq!(routing, &decompose_flow(&mccp.flow, &net).unwrap());

        let mut total = Rational::zero();
        let mut marginal = vec![Rational::zero(); net.edge_count()];
        for (set, w) in sigma.iter() {
            prop_assert!(w.is_positive());
            total += w;
            for &e in set {
                marginal[e] += w;
            }
        }
        prop_assert_eq!(total, Rational::one());
        prop_assert_eq!(&marginal, &eq.dual.rho);

        for path in net.enumerate_paths(DEFAULT_PATH_CAP).unwrap() {
            let hit: Rational = sigma.iter().filter(|(s, _)| path.iter().any(|e| s.contains(e))).map(|(_, w)| w).sum();
            let target = net.base_profit(&path) - path.iter().map(|&e| &eq.dual.mu[e]).sum::<Rational>();
            prop_assert!(hit >= target, "path {:?} hit {} below {}", path, hit, target);
            if routing.get(&path).is_positive() {
                prop_assert_eq!(&hit, &target);
                prop_assert_eq!(eq.pi_star.get(&path), Some(&target));
                for (s, _) in sigma.iter() {
                    prop_assert!(path.iter().filter(|e| s.contains(e)).count() <= 1);
                }
            }
        }

        let u1 = net.p1() * &(0..net.edge_count()).map(|e| &net.edge(e).capacity * &eq.dual.mu[e]).sum::<Rational>();
        prop_assert_eq!(&eq.u1, &u1);
        prop_assert!(eq.u2.is_zero());
        let mut expected = (Rational::zero(), Rational::zero());
        for (set, w) in sigma.iter() {
            let p = payoffs(&net, routing, set).unwrap();
            expected.0 += w * &p.u1;
            expected.1 += w * &p.u2;
        }
        prop_assert_eq!(&expected.0, &eq.u1);
        prop_assert_eq!(&expected.1, &eq.u2);

        let q = equilibrium_quantities(&eq, &net);
        prop_assert_eq!(&eq.u1, &(net.p1() * &q.effective_flow - &q.transport_cost));
        prop_assert_eq!(&q.flow_value, &routing.value());
    }

    #[test]
    fn computed_profile_is_verified(seed in any::<u64>()) {
        let net = random_network(&mut rng(seed), 6);
        let eq = compute_ne(&net).unwrap();
        let report = verify_ne(&net, &eq.profile, DEFAULT_PATH_CAP).unwrap();
        prop_assert!(report.is_ne, "{:?}", report);
        prop_assert!(report.p1_gap.is_zero());
        prop_assert!(report.p2_gap.is_zero());
        let best = brute_force_best_responses(&net, &eq.profile.routing, &eq.profile.interdiction, DEFAULT_PATH_CAP, MAX_ORACLE_EDGES).unwrap();
        prop_assert_eq!(&best.p1_best, &eq.u1);
        prop_assert_eq!(&best.p2_best, &eq.u2);
    }

    #[test]
    fn zero_sum_identities(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_network(&mut r, 6);
        let paths = net.enumerate_paths(DEFAULT_PATH_CAP).unwrap();
        let mut flow = PathFlow::new();
        for p in &paths {
            if r.gen_bool(0.6) {
                flow.add(p.clone(), frac(r.gen_range(0..=6), 3));
            }
        }
        let set: Vec<usize> = (0..net.edge_count()).filter(|_| r.gen_bool(0.4)).collect();
        let u = payoffs(&net, &flow, &set).unwrap();
        let c_s: Rational = set.iter().map(|&e| &net.edge(e).interdiction_cost).sum();
        let f: Rational = flow.iter().map(|(_, v)| v.clone()).sum();
        let f_s: Rational = flow.iter().filter(|(p, _)| !p.iter().any(|e| set.contains(e))).map(|(_, v)| v.clone()).sum();
        let t: Rational = flow
            .iter()
            .map(|(p, v)| v * &p.iter().map(|&e| &net.edge(e).transport_cost).sum::<Rational>())
            .sum();
        let tilde = &u.u1 / net.p1() + &c_s / net.p2();
        prop_assert_eq!(&tilde, &(&f_s - &t / net.p1() + &c_s / net.p2()));
        prop_assert_eq!(-tilde, &u.u2 / net.p2() - &f + &t / net.p1());
    }

    #[test]
    fn critical_sets_follow_the_strict_pair(seed in any::<u64>()) {
        let net = random_network(&mut rng(seed), 6);
        let crit = critical_components(&net, DEFAULT_PATH_CAP).unwrap();
        let pure = pure_ne_check(&net, DEFAULT_PATH_CAP).unwrap();
        prop_assert_eq!(pure.is_some(), crit.edges.is_empty());
        if let Some(profile) = pure {
            prop_assert!(verify_ne(&net, &profile, DEFAULT_PATH_CAP).unwrap().is_ne);
        }
        // Every edge carrying interdiction in the computed equilibrium is critical.
        let eq = compute_ne(&net).unwrap();
        for e in 0..net.edge_count() {
            if eq.dual.rho[e].is_positive() {
                prop_assert!(crit.edges.contains(&e));
            }
        }
        for (p, _) in eq.profile.routing.iter() {
            prop_assert!(crit.paths.contains(p));
        }
    }
}
