//! Solved series against direct counts over enumerated maps, refined by root
//! face valency.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use mapclt::enumerate::{fold_maps, Limits};
use mapclt::itypes::enumerate_intersection_types;
use mapclt::pattern::{count_occurrences, Pattern};
use mapclt::series::Series3;
use mapclt::solver::{build_pattern_equation, partial_boundary_series, solve_exact, solve_tutte};
use mapclt::{MapClass, RootedMap};

/// `u`-exponent -> (maps, sum X, sum X(X-1)).
type Table = BTreeMap<usize, (u64, u64, u64)>;

fn u_power(cls: MapClass, m: &RootedMap) -> usize {
    let v = m.root_face_valency();
    if cls == MapClass::Bipartite {
        v / 2
    } else {
        v
    }
}

fn tabulate(n: usize, cls: MapClass, keep: impl Fn(&RootedMap) -> bool + Sync, occ: impl Fn(&RootedMap) -> u64 + Sync) -> Table {
    fold_maps(
        n,
        cls,
        &Limits::default(),
        Table::new,
        |mut t, m| {
            if keep(m) {
                let x = occ(m);
                let e = t.entry(u_power(cls, m)).or_default();
                e.0 += 1;
                e.1 += x;
                e.2 += x * x.saturating_sub(1);
            }
            t
        },
        |mut a, b| {
            for (k, v) in b {
                let e = a.entry(k).or_default();
                e.0 += v.0;
                e.1 += v.1;
                e.2 += v.2;
            }
            a
        },
    )
    .unwrap()
}

fn layer(s: &Series3, n: usize, x: usize) -> Table {
    let mut t = Table::new();
    for (u, k, c) in s.coeff(n).terms() {
        if k == x && *c != BigInt::from(0) {
            let v: u64 = c.try_into().unwrap();
            let e = t.entry(u).or_default();
            match x {
                0 => e.0 = v,
                1 => e.1 = v,
                _ => e.2 = 2 * v,
            }
        }
    }
    t
}

fn project(t: &Table, x: usize) -> BTreeMap<usize, u64> {
    t.iter()
        .map(|(&u, v)| (u, [v.0, v.1, v.2][x]))
        .filter(|(_, v)| *v != 0)
        .collect()
}

#[test]
fn plain_series_by_root_valency() {
    for (cls, nmax) in [(MapClass::All, 6), (MapClass::Bipartite, 7), (MapClass::TwoConnected, 8)] {
        let s = solve_tutte(cls, nmax).unwrap();
        for n in 0..=nmax {
            let direct = tabulate(n, cls, |_| true, |_| 0);
            assert_eq!(project(&layer(&s, n, 0), 0), project(&direct, 0), "{cls} n={n}");
        }
    }
}

#[test]
fn partial_boundary_series_by_root_valency() {
    for (cls, nmax) in [(MapClass::All, 6), (MapClass::Bipartite, 7)] {
        let base = solve_tutte(cls, nmax).unwrap();
        for i in 0..=4 {
            let p = partial_boundary_series(i, cls, &base).unwrap();
            for n in 0..=nmax {
                let direct = tabulate(n, cls, |m| m.has_partial_simple_boundary(i), |_| 0);
                assert_eq!(project(&layer(&p, n, 0), 0), project(&direct, 0), "{cls} i={i} n={n}");
            }
        }
    }
}

fn check_pattern(p: &Pattern, cls: MapClass, nmax: usize) {
    let cat = enumerate_intersection_types(p, cls, 2 * p.edges()).unwrap();
    let eq = build_pattern_equation(p, &cat.type_shapes(), &cat.correction_shapes(), cls).unwrap();
    assert!(eq.pairwise_exact());
    let s = solve_exact(&eq, nmax, 2).unwrap();
    for n in 0..=nmax {
        let direct = tabulate(n, cls, |_| true, |m| count_occurrences(m, p) as u64);
        for x in 0..=2 {
            assert_eq!(project(&layer(&s, n, x), x), project(&direct, x), "{cls} n={n} x^{x}");
        }
    }
}

#[test]
fn fly_layers_by_root_valency() {
    check_pattern(&Pattern::fly(), MapClass::All, 6);
    check_pattern(&Pattern::fly(), MapClass::Bipartite, 7);
}

#[test]
fn digon_layers_by_root_valency() {
    check_pattern(&Pattern::digon(), MapClass::All, 6);
    check_pattern(&Pattern::digon(), MapClass::Bipartite, 7);
    check_pattern(&Pattern::digon(), MapClass::TwoConnected, 8);
}
