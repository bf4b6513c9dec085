mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use common::{haar_u4, random_local};
use entangle_core::linalg::c;
use entangle_core::weyl::{
    canonical_gate, d_pe, f_lec, f_pe, in_pe_polyhedron, local_invariants, weyl_coordinates,
    NamedTarget, WeylPoint,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn chamber_point() -> impl Strategy<Value = WeylPoint> {
    (0.0..PI, 0.0..FRAC_PI_2, 0.0..FRAC_PI_2)
        .prop_filter_map("outside chamber", |(c1, c2, c3)| {
            let p = WeylPoint::new(c1, c2, c3);
            let inside = c3 <= c2 && c2 <= c1.min(PI - c1);
            inside.then_some(p)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn invariants_ignore_local_gates(seed in any::<u64>()) {
        let mut r = rng(seed);
        let u = haar_u4(&mut r);
        let k1 = random_local(&mut r);
        let k2 = random_local(&mut r);
        let a = local_invariants(&u).unwrap();
        let b = local_invariants(&k1.mul(&u).mul(&k2)).unwrap();
        prop_assert!(a.max_diff(&b) < 1e-10, "{a:?} vs {b:?}");
    }

    #[test]
    fn invariants_ignore_global_phase(seed in any::<u64>(), phi in 0.0..std::f64::consts::TAU) {
        let u = haar_u4(&mut rng(seed));
        let a = local_invariants(&u).unwrap();
        let b = local_invariants(&u.scale(c(phi.cos(), phi.sin()))).unwrap();
        prop_assert!(a.max_diff(&b) < 1e-10);
        let pa = weyl_coordinates(&u).unwrap();
        let pb = weyl_coordinates(&u.scale(c(phi.cos(), phi.sin()))).unwrap();
        prop_assert!(pa.distance(&pb) < 1e-8, "{pa:?} vs {pb:?}");
    }

    #[test]
    fn canonical_gate_round_trips(seed in any::<u64>()) {
        let u = haar_u4(&mut rng(seed));
        let p = weyl_coordinates(&u).unwrap();
        prop_assert!(p.in_chamber(1e-9), "{p:?}");
        let v = canonical_gate(&p);
        prop_assert!(local_invariants(&u).unwrap().max_diff(&local_invariants(&v).unwrap()) < 1e-8);
        prop_assert!(weyl_coordinates(&v).unwrap().distance(&p) < 1e-8);
    }

    #[test]
    fn chamber_points_are_fixed_points(p in chamber_point()) {
        // Away from the mirror plane c1 = pi/2 with c3 > 0 the class has a unique label.
        prop_assume!(p.c3 < 1e-9 || (p.c1 - FRAC_PI_2).abs() > 1e-6);
        let q = weyl_coordinates(&canonical_gate(&p)).unwrap();
        let mirrored = WeylPoint::new(PI - p.c1, p.c2, p.c3);
        prop_assert!(q.distance(&p) < 1e-7 || (p.c3 < 1e-9 && q.distance(&mirrored) < 1e-7), "{p:?} -> {q:?}");
    }

    #[test]
    fn pe_functional_vanishes_on_faces(which in 0..3usize, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let p = match which {
            // c1 + c2 = pi/2
            0 => {
                let c1 = PI / 4.0 + a * PI / 4.0;
                let c2 = FRAC_PI_2 - c1;
                WeylPoint::new(c1, c2, b * c2)
            }
            // c1 - c2 = pi/2
            1 => {
                let c2 = a * PI / 4.0;
                WeylPoint::new(FRAC_PI_2 + c2, c2, b * c2)
            }
            // c2 + c3 = pi/2
            _ => {
                let c2 = PI / 4.0 + a * PI / 4.0;
                WeylPoint::new(c2 + b * (PI - 2.0 * c2), c2, FRAC_PI_2 - c2)
            }
        };
        prop_assert!(in_pe_polyhedron(&p));
        let d = d_pe(&local_invariants(&canonical_gate(&p)).unwrap());
        prop_assert!(d.abs() < 1e-10, "{p:?}: D = {d}");
    }

    #[test]
    fn f_pe_is_continuous(p in chamber_point(), dx in -1e-7..1e-7f64, dy in -1e-7..1e-7f64) {
        let q = WeylPoint::new(p.c1 + dx, p.c2 + dy, p.c3);
        prop_assert!((f_pe(&p) - f_pe(&q)).abs() < 1e-6);
    }

    #[test]
    fn f_lec_respects_mirror_symmetry(p in chamber_point(), t in chamber_point()) {
        let mirrored = WeylPoint::new(PI - t.c1, t.c2, -t.c3);
        prop_assert!((f_lec(&p, &t) - f_lec(&p, &mirrored)).abs() < 1e-12);
        prop_assert!(f_lec(&p, &t) <= 1.0 + 1e-15);
        prop_assert!((f_lec(&t, &t) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn named_targets_sit_at_their_points() {
    for t in NamedTarget::ALL {
        let p = weyl_coordinates(&t.gate()).unwrap();
        let q = t.point();
        let mirrored = WeylPoint::new(PI - q.c1, q.c2, q.c3);
        assert!(
            p.distance(&q) < 1e-8 || p.distance(&mirrored) < 1e-8,
            "{}: {p:?} vs {q:?}",
            t.name()
        );
        assert_eq!(in_pe_polyhedron(&q), t.is_perfect_entangler(), "{}", t.name());
    }
}
