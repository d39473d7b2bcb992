//! Exhaustive generation of rooted planar maps.
//!
//! General and bipartite maps are grown by canonical augmentation: a child is
//! kept only when the edge just inserted is its canonical deletable edge, so
//! every map is produced exactly once and no dedup table is needed. A
//! deletable edge is a non-root edge that is either not a bridge or ends in a
//! vertex of degree one; the canonical one has the largest canonical label.
//! Deleting such an edge keeps a bipartite map bipartite, so the bipartite
//! generation tree is a pruned copy of the general one.
//!
//! Two-connected maps are grown level by level from the digon by inserting an
//! edge either in the map or in its dual (a vertex split), with a hash set of
//! canonical codes per level.

use std::collections::HashSet;

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::map::{alpha, canonical_labels_into, Dart, MapClass, RootedMap};

/// Largest edge count accepted by [`generate`] and [`fold_maps`] per class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub all: usize,
    pub bipartite: usize,
    pub two_connected: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { all: 9, bipartite: 10, two_connected: 11 }
    }
}

impl Limits {
    pub fn for_class(&self, cls: MapClass) -> usize {
        match cls {
            MapClass::All => self.all,
            MapClass::Bipartite => self.bipartite,
            MapClass::TwoConnected => self.two_connected,
        }
    }

    pub fn check(&self, n: usize, cls: MapClass) -> Result<()> {
        let lim = self.for_class(cls);
        if n > lim {
            return Err(Error::ResourceLimit(format!(
                "enumeration of {cls} maps with {n} edges exceeds the limit of {lim}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EnumerationRun {
    pub n: usize,
    pub cls: MapClass,
    pub total: BigUint,
    /// Canonical forms sorted by canonical code.
    pub maps: Vec<RootedMap>,
}

/// All maps of `cls` with `n` edges, canonical and sorted by code.
pub fn generate(n: usize, cls: MapClass, limits: &Limits) -> Result<EnumerationRun> {
    limits.check(n, cls)?;
    let mut codes: Vec<Vec<u32>> = fold_maps_unchecked(
        n,
        cls,
        Vec::new,
        |mut acc, m| {
            acc.push(m.canonical().sigma_slice().to_vec());
            acc
        },
        |mut a, mut b| {
            a.append(&mut b);
            a
        },
    );
    codes.par_sort_unstable();
    let maps: Vec<RootedMap> = codes
        .into_iter()
        .map(|s| if s.is_empty() { RootedMap::atomic() } else { RootedMap::from_sigma_unchecked(s, 0) })
        .collect();
    Ok(EnumerationRun { n, cls, total: BigUint::from(maps.len()), maps })
}

/// Number of maps of `cls` with `n` edges.
pub fn count(n: usize, cls: MapClass, limits: &Limits) -> Result<u64> {
    fold_maps(n, cls, limits, || 0u64, |c, _| c + 1, |a, b| a + b)
}

/// Folds over every map of `cls` with `n` edges in parallel. Maps are passed
/// in an arbitrary labeling; `reduce` must be associative and commutative for
/// the result to be independent of scheduling.
pub fn fold_maps<T, I, F, R>(n: usize, cls: MapClass, limits: &Limits, identity: I, fold: F, reduce: R) -> Result<T>
where
    T: Send,
    I: Fn() -> T + Sync + Send,
    F: Fn(T, &RootedMap) -> T + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    limits.check(n, cls)?;
    Ok(fold_maps_unchecked(n, cls, identity, fold, reduce))
}

fn fold_maps_unchecked<T, I, F, R>(n: usize, cls: MapClass, identity: I, fold: F, reduce: R) -> T
where
    T: Send,
    I: Fn() -> T + Sync + Send,
    F: Fn(T, &RootedMap) -> T + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    match cls {
        MapClass::TwoConnected => {
            let level = two_connected_level(n);
            level.par_iter().fold(&identity, |acc, m| fold(acc, m)).reduce(&identity, &reduce)
        }
        MapClass::All | MapClass::Bipartite => {
            let bip = cls == MapClass::Bipartite;
            if n == 0 {
                return fold(identity(), &RootedMap::atomic());
            }
            let split = n.saturating_sub(3).clamp(0, 5);
            let mut seeds = vec![Vec::new()];
            for _ in 0..split {
                let mut next = Vec::new();
                let mut g = Grower::default();
                for p in &seeds {
                    g.children(p, bip, |c| next.push(c.to_vec()));
                }
                seeds = next;
            }
            let remaining = n - split;
            seeds
                .par_iter()
                .fold(&identity, |acc, seed| {
                    let mut g = Grower::default();
                    let mut acc = Some(acc);
                    g.descend(seed, remaining, bip, &mut |m: &[Dart]| {
                        let map = RootedMap::from_sigma_unchecked(m.to_vec(), 0);
                        acc = Some(fold(acc.take().unwrap(), &map));
                    });
                    acc.unwrap()
                })
                .reduce(&identity, &reduce)
        }
    }
}

/// Scratch buffers for canonical augmentation. Maps are plain rotation
/// vectors rooted at dart 0.
#[derive(Default)]
struct Grower {
    lab: Vec<u32>,
    order: Vec<Dart>,
    face: Vec<u32>,
    corner_face: Vec<u32>,
}

impl Grower {
    fn descend(&mut self, parent: &[Dart], depth: usize, bip: bool, sink: &mut dyn FnMut(&[Dart])) {
        if depth == 0 {
            sink(parent);
            return;
        }
        let mut kids: Vec<Vec<Dart>> = Vec::new();
        if depth == 1 {
            self.children(parent, bip, |c| sink(c));
            return;
        }
        self.children(parent, bip, |c| kids.push(c.to_vec()));
        for k in &kids {
            self.descend(k, depth - 1, bip, sink);
        }
    }

    /// Calls `emit` once for every accepted child of `parent`.
    fn children(&mut self, parent: &[Dart], bip: bool, mut emit: impl FnMut(&[Dart])) {
        let np = parent.len();
        if np == 0 {
            if !bip {
                emit(&[1, 0]);
            }
            emit(&[0, 1]);
            return;
        }
        let a = np as Dart;
        let b = a + 1;
        // corner c (between c and sigma(c)) lies in the face of sigma(c)
        face_ids(parent, &mut self.face);
        self.corner_face.clear();
        self.corner_face.extend((0..np).map(|c| self.face[parent[c] as usize]));
        let mut child = Vec::with_capacity(np + 2);

        // leaf in every corner
        for c in 0..np {
            child.clear();
            child.extend_from_slice(parent);
            child.push(parent[c]);
            child.push(b);
            child[c] = a;
            if self.accept(&child, bip) {
                emit(&child);
            }
        }
        // chords, including the empty loop c1 == c2
        for c1 in 0..np {
            for c2 in c1..np {
                if self.corner_face[c1] != self.corner_face[c2] {
                    continue;
                }
                child.clear();
                child.extend_from_slice(parent);
                if c1 == c2 {
                    child.push(b);
                    child.push(parent[c1]);
                    child[c1] = a;
                } else {
                    child.push(parent[c1]);
                    child.push(parent[c2]);
                    child[c1] = a;
                    child[c2] = b;
                }
                if self.accept(&child, bip) {
                    emit(&child);
                }
            }
        }
    }

    /// The inserted edge is the last one (darts `len-2`, `len-1`).
    fn accept(&mut self, child: &[Dart], bip: bool) -> bool {
        let n = child.len();
        let new_dart = (n - 2) as Dart;
        let mut faces_done = false;
        if bip {
            face_ids(child, &mut self.face);
            faces_done = true;
            if !faces_even(child, &self.face) {
                return false;
            }
        }
        canonical_labels_into(child, 0, &mut self.lab, &mut self.order);
        let new_label = self.lab[new_dart as usize].min(self.lab[new_dart as usize + 1]) >> 1;
        let edges = n / 2;
        for k in (new_label as usize + 1..edges).rev() {
            let d = self.order[2 * k];
            let e = alpha(d);
            if child[d as usize] == d || child[e as usize] == e {
                return false;
            }
            if !faces_done {
                face_ids(child, &mut self.face);
                faces_done = true;
            }
            if self.face[d as usize] != self.face[e as usize] {
                return false;
            }
        }
        true
    }
}

fn face_ids(sigma: &[Dart], face: &mut Vec<u32>) {
    let n = sigma.len();
    face.clear();
    face.resize(n, u32::MAX);
    let mut id = 0;
    for s in 0..n {
        if face[s] != u32::MAX {
            continue;
        }
        let mut d = s;
        loop {
            face[d] = id;
            d = sigma[d ^ 1] as usize;
            if d == s {
                break;
            }
        }
        id += 1;
    }
}

fn faces_even(sigma: &[Dart], face: &[u32]) -> bool {
    let nf = face.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut parity = vec![false; nf];
    for d in 0..sigma.len() {
        parity[face[d] as usize] ^= true;
    }
    parity.iter().all(|odd| !odd)
}

/// Inserts an edge between two corners of the same face that sit at distinct
/// vertices; used for both primal and dual insertion.
fn distinct_vertex_chords(map: &RootedMap, mut emit: impl FnMut(RootedMap)) {
    let sigma = map.sigma_slice();
    let np = sigma.len();
    let faces = map.faces();
    let vx = map.vertices();
    let a = np as Dart;
    let b = a + 1;
    for c1 in 0..np {
        for c2 in c1 + 1..np {
            if faces.face_of[sigma[c1] as usize] != faces.face_of[sigma[c2] as usize] {
                continue;
            }
            if vx.of[c1] == vx.of[c2] {
                continue;
            }
            let mut child = sigma.to_vec();
            child.push(sigma[c1]);
            child.push(sigma[c2]);
            child[c1] = a;
            child[c2] = b;
            emit(RootedMap::from_sigma_unchecked(child, map.root()));
        }
    }
}

fn two_connected_level(n: usize) -> Vec<RootedMap> {
    if n < 2 {
        return Vec::new();
    }
    // digon: two parallel edges between two vertices
    let mut level = vec![RootedMap::from_sigma_unchecked(vec![2, 3, 0, 1], 0)];
    for _ in 2..n {
        let mut next: HashSet<Vec<u32>> = HashSet::new();
        for p in &level {
            let mut add = |c: RootedMap| {
                if c.is_two_connected() {
                    next.insert(c.canonical().sigma_slice().to_vec());
                }
            };
            distinct_vertex_chords(p, &mut add);
            distinct_vertex_chords(&p.dual(), |c| add(c.dual()));
        }
        let mut codes: Vec<Vec<u32>> = next.into_iter().collect();
        codes.sort_unstable();
        level = codes.into_iter().map(|s| RootedMap::from_sigma_unchecked(s, 0)).collect();
    }
    level
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        let lim = Limits::default();
        let all: Vec<u64> = (0..=6).map(|n| count(n, MapClass::All, &lim).unwrap()).collect();
        assert_eq!(all, vec![1, 2, 9, 54, 378, 2916, 24057]);
        let bip: Vec<u64> = (0..=6).map(|n| count(n, MapClass::Bipartite, &lim).unwrap()).collect();
        assert_eq!(bip, vec![1, 1, 3, 12, 56, 288, 1584]);
        let two: Vec<u64> = (0..=7).map(|n| count(n, MapClass::TwoConnected, &lim).unwrap()).collect();
        assert_eq!(two, vec![0, 0, 1, 2, 6, 22, 91, 408]);
    }

    #[test]
    fn generate_is_sorted_and_distinct() {
        let run = generate(4, MapClass::All, &Limits::default()).unwrap();
        assert_eq!(run.maps.len(), 378);
        for w in run.maps.windows(2) {
            assert!(w[0].sigma_slice() < w[1].sigma_slice());
        }
        assert!(run.maps.iter().all(|m| m.is_canonical()));
    }

    #[test]
    fn limit_is_enforced() {
        let lim = Limits { all: 3, ..Limits::default() };
        assert!(matches!(generate(4, MapClass::All, &lim), Err(Error::ResourceLimit(_))));
    }
}
