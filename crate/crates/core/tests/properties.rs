//! Property tests over small maps, polynomials and the numeric layer.

use std::sync::OnceLock;

use num_bigint::BigInt;
use proptest::prelude::*;

use mapclt::asymptotics::{
    estimate_growth, gw_condition_check, ks_distance, ks_normality, normal_cdf, saddle_factorial_moment,
    SaddleInput, ScaledCoefficients, ALPHA,
};
use mapclt::distribution::DistributionTable;
use mapclt::enumerate::{generate, Limits};
use mapclt::format::{parse_map, to_text};
use mapclt::map::Dart;
use mapclt::pattern::{count_occurrences, find_occurrences, occurrences_intersect, Pattern};
use mapclt::poly::PolyUX;
use mapclt::series::Series3;
use mapclt::{MapClass, RootedMap};

fn small_maps() -> &'static [RootedMap] {
    static MAPS: OnceLock<Vec<RootedMap>> = OnceLock::new();
    MAPS.get_or_init(|| (1..=5).flat_map(|n| generate(n, MapClass::All, &Limits::default()).unwrap().maps).collect())
}

fn any_map() -> impl Strategy<Value = RootedMap> {
    (0..small_maps().len()).prop_map(|i| small_maps()[i].clone())
}

/// The same map with edges permuted and some edges reversed.
fn relabel(m: &RootedMap, perm: &[usize], flips: &[bool]) -> RootedMap {
    let new = |d: Dart| -> Dart {
        let e = d as usize / 2;
        (2 * perm[e] + ((d as usize & 1) ^ flips[e] as usize)) as Dart
    };
    let mut sigma = vec![0; m.darts()];
    for d in 0..m.darts() as Dart {
        sigma[new(d) as usize] = new(m.sigma(d));
    }
    RootedMap::from_sigma(sigma, new(m.root())).unwrap()
}

fn map_with_relabeling() -> impl Strategy<Value = (RootedMap, Vec<usize>, Vec<bool>)> {
    any_map().prop_flat_map(|m| {
        let e = m.edges();
        (Just(m), Just((0..e).collect::<Vec<_>>()).prop_shuffle(), prop::collection::vec(any::<bool>(), e))
    })
}

fn poly() -> impl Strategy<Value = PolyUX> {
    prop::collection::vec((0usize..4, 0usize..3, -5i64..6), 0..6).prop_map(|terms| {
        let mut p = PolyUX::zero();
        for (u, x, c) in terms {
            let v = p.get(u, x) + BigInt::from(c);
            p.set(u, x, v);
        }
        p
    })
}

fn histogram() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..50, 2..7).prop_filter("at least two atoms", |h| h.iter().filter(|&&m| m > 0).count() >= 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn canonical_form_ignores_labels((m, perm, flips) in map_with_relabeling()) {
        let r = relabel(&m, &perm, &flips);
        prop_assert_eq!(r.canonical_code(), m.canonical_code());
        prop_assert_eq!(r.root_face_valency(), m.root_face_valency());
        prop_assert_eq!(count_occurrences(&r, &Pattern::fly()), count_occurrences(&m, &Pattern::fly()));
        prop_assert_eq!(count_occurrences(&r, &Pattern::digon()), count_occurrences(&m, &Pattern::digon()));
    }

    #[test]
    fn euler_formula(m in any_map()) {
        prop_assert_eq!(m.num_vertices() + m.num_faces(), m.edges() + 2);
    }

    #[test]
    fn duality(m in any_map()) {
        let d = m.dual();
        prop_assert_eq!(d.num_vertices(), m.num_faces());
        prop_assert_eq!(d.num_faces(), m.num_vertices());
        prop_assert_eq!(d.dual().canonical_code(), m.canonical_code());
        prop_assert_eq!(m.is_bipartite(), d.degree_sequence().iter().all(|v| v % 2 == 0));
    }

    #[test]
    fn text_roundtrip(m in any_map()) {
        prop_assert_eq!(parse_map(&to_text(&m)).unwrap(), m);
    }

    #[test]
    fn intersection_is_symmetric(m in any_map()) {
        let p = Pattern::digon();
        let occ = find_occurrences(&m, &p);
        for a in &occ {
            for b in &occ {
                prop_assert_eq!(occurrences_intersect(&m, a, b).unwrap(), occurrences_intersect(&m, b, a).unwrap());
            }
        }
    }

    #[test]
    fn product_is_commutative_and_associative(a in poly(), b in poly(), c in poly()) {
        let nx = 3;
        prop_assert_eq!(a.mul(&b, nx), b.mul(&a, nx));
        prop_assert_eq!(a.mul(&b, nx).mul(&c, nx), a.mul(&b.mul(&c, nx), nx));
        let mut sum = b.clone();
        sum.add_assign(&c);
        let mut split = a.mul(&b, nx);
        split.add_assign(&a.mul(&c, nx));
        prop_assert_eq!(a.mul(&sum, nx), split);
    }

    #[test]
    fn divided_difference_inverts(a in poly()) {
        // u * dd - dd + a(1) == a
        let dd = a.divided_difference();
        let mut back = dd.shift_u(1).unwrap();
        back.sub_assign(&dd);
        back.add_assign(&a.eval_u1());
        back.normalize();
        let mut a = a;
        a.normalize();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn series_json_roundtrip(ps in prop::collection::vec(poly(), 1..5)) {
        let nz = ps.len() - 1;
        let s = Series3::from_coeffs(ps, nz, 2).with_class(MapClass::Bipartite);
        prop_assert_eq!(Series3::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn gw_ratios_are_one_at_low_order(h in histogram()) {
        let d = DistributionTable { n: 9, histogram: h };
        for row in gw_condition_check(&[d], 1) {
            if let Some(r) = row.ratio {
                prop_assert!((r - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ks_is_a_distance_and_scale_free(h in histogram(), scale in 1u64..5) {
        let a = ks_normality(&DistributionTable { n: 1, histogram: h.clone() }).unwrap();
        let b = ks_normality(&DistributionTable { n: 1, histogram: h.iter().map(|m| m * scale).collect() }).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a - b).abs() < 1e-12);
        let atoms: Vec<(f64, f64)> = h.iter().enumerate().map(|(i, &m)| (i as f64, m as f64)).collect();
        prop_assert!(ks_distance(&atoms) <= 1.0);
    }

    #[test]
    fn normal_cdf_is_symmetric_and_monotone(x in -8.0f64..8.0, dx in 0.0f64..1.0) {
        prop_assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-15);
        prop_assert!(normal_cdf(x + dx) >= normal_cdf(x));
    }

    #[test]
    fn saddle_without_curvature(n in 100u64..1_000_000, k in 1u64..100, f0 in 0.0f64..3.0, f1 in 0.01f64..2.0, g0 in -2.0f64..2.0) {
        let s = SaddleInput { n, k, f0, f1, f2: 0.0, g0 };
        let want = g0 + (k as f64 + ALPHA) * (n as f64).ln() + n as f64 * f0 + k as f64 * f1.ln();
        prop_assert!((saddle_factorial_moment(&s).unwrap() - want).abs() < 1e-9 * want.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn growth_rate_is_recovered(rho in 3.0f64..20.0, c in 0.1f64..5.0, corr in -0.5f64..0.5) {
        let mut s = ScaledCoefficients { scale: 12.0, a: vec![], b: vec![], c: vec![] };
        for n in 0..200usize {
            let nf = n.max(1) as f64;
            let a = if n == 0 { 0.0 } else { c * nf.powf(ALPHA) * (rho / 12.0).powi(n as i32) * (1.0 + corr / nf) };
            s.a.push(a);
            s.b.push(0.3 * nf * a);
            s.c.push(0.05 * nf * nf * a);
        }
        let g = estimate_growth(&s).unwrap();
        prop_assert!(((g.rho0 - rho) / rho).abs() < 1e-4, "{} vs {}", g.rho0, rho);
    }
}
