//! Rooted planar maps as rotation systems.
//!
//! Darts are `0..2m`. The edge involution is implicit: `alpha(d) = d ^ 1`.
//! `sigma` is the counterclockwise rotation around vertices and the face
//! permutation is `phi = sigma . alpha`. The root face is the `phi`-orbit of
//! the root dart, and the boundary walk of the root face starts at the tail of
//! the root dart and follows `d, phi(d), phi(phi(d)), ...`.
//!
//! The corner between `d` and `sigma(d)` lies in the face of `sigma(d)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Dart = u32;

#[inline]
pub fn alpha(d: Dart) -> Dart {
    d ^ 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MapClass {
    All,
    Bipartite,
    TwoConnected,
}

impl MapClass {
    pub fn name(self) -> &'static str {
        match self {
            MapClass::All => "all",
            MapClass::Bipartite => "bipartite",
            MapClass::TwoConnected => "2conn",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" | "general" => Ok(MapClass::All),
            "bipartite" | "bip" => Ok(MapClass::Bipartite),
            "2conn" | "twoconnected" | "two-connected" | "2-connected" | "nonsep" => {
                Ok(MapClass::TwoConnected)
            }
            other => Err(Error::Usage(format!("unknown map class `{other}`"))),
        }
    }
}

impl fmt::Display for MapClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Cycles of a permutation together with the cycle index of every dart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orbits {
    pub of: Vec<u32>,
    pub cycles: Vec<Vec<Dart>>,
}

impl Orbits {
    fn of_permutation(n: usize, next: impl Fn(Dart) -> Dart) -> Orbits {
        let mut of = vec![u32::MAX; n];
        let mut cycles = Vec::new();
        for start in 0..n as u32 {
            if of[start as usize] != u32::MAX {
                continue;
            }
            let id = cycles.len() as u32;
            let mut cyc = Vec::new();
            let mut d = start;
            loop {
                of[d as usize] = id;
                cyc.push(d);
                d = next(d);
                if d == start {
                    break;
                }
            }
            cycles.push(cyc);
        }
        Orbits { of, cycles }
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }
}

/// Faces of a map. Each face lists its darts in `phi` order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceInfo {
    pub faces: Vec<Vec<Dart>>,
    pub face_of: Vec<u32>,
    pub root_face: usize,
}

impl FaceInfo {
    pub fn valency(&self, f: usize) -> usize {
        self.faces[f].len()
    }

    pub fn valencies(&self) -> Vec<usize> {
        self.faces.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }
}

/// Root-preserving isomorphism invariant: the rotation of the canonically
/// relabeled map.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalCode(pub Vec<u32>);

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RootedMap {
    sigma: Vec<Dart>,
    root: Dart,
}

impl fmt::Debug for RootedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RootedMap(sigma={:?}, root={})", self.sigma, self.root)
    }
}

impl RootedMap {
    /// One vertex, no edges.
    pub fn atomic() -> Self {
        RootedMap { sigma: Vec::new(), root: 0 }
    }

    /// Builds a map with the implicit involution `d ^ 1`.
    pub fn from_sigma(sigma: Vec<Dart>, root: Dart) -> Result<Self> {
        let map = RootedMap { sigma, root };
        map.validate()?;
        Ok(map)
    }

    pub(crate) fn from_sigma_unchecked(sigma: Vec<Dart>, root: Dart) -> Self {
        let map = RootedMap { sigma, root };
        debug_assert!(map.validate().is_ok(), "{:?}", map.validate());
        map
    }

    /// Builds a map from an explicit involution. Darts are relabeled so that
    /// edge partners become `2k, 2k+1`, in order of first appearance; an
    /// involution that is already `d ^ 1` leaves labels unchanged.
    pub fn from_permutations(sigma: &[Dart], alpha_perm: &[Dart], root: Dart) -> Result<Self> {
        let n = sigma.len();
        if alpha_perm.len() != n {
            return Err(Error::InvalidMap("sigma and alpha have different lengths".into()));
        }
        if n == 0 {
            return Ok(Self::atomic());
        }
        check_permutation(sigma, "sigma")?;
        check_permutation(alpha_perm, "alpha")?;
        for d in 0..n {
            let a = alpha_perm[d] as usize;
            if a == d {
                return Err(Error::InvalidMap(format!("alpha fixes dart {d}")));
            }
            if alpha_perm[a] as usize != d {
                return Err(Error::InvalidMap("alpha is not an involution".into()));
            }
        }
        if root as usize >= n {
            return Err(Error::InvalidMap(format!("root {root} out of range")));
        }
        let mut relabel = vec![u32::MAX; n];
        let mut next = 0u32;
        for d in 0..n {
            if relabel[d] == u32::MAX {
                relabel[d] = next;
                relabel[alpha_perm[d] as usize] = next + 1;
                next += 2;
            }
        }
        let mut new_sigma = vec![0; n];
        for d in 0..n {
            new_sigma[relabel[d] as usize] = relabel[sigma[d] as usize];
        }
        Self::from_sigma(new_sigma, relabel[root as usize])
    }

    fn validate(&self) -> Result<()> {
        let n = self.sigma.len();
        if n == 0 {
            return Ok(());
        }
        if n % 2 != 0 {
            return Err(Error::InvalidMap("odd number of darts".into()));
        }
        if n > u32::MAX as usize / 2 {
            return Err(Error::InvalidMap("too many darts".into()));
        }
        check_permutation(&self.sigma, "sigma")?;
        if self.root as usize >= n {
            return Err(Error::InvalidMap(format!("root {} out of range", self.root)));
        }
        if !self.is_connected() {
            return Err(Error::InvalidMap("sigma and alpha do not act transitively".into()));
        }
        let v = self.vertices().len() as i64;
        let f = self.faces().len() as i64;
        let e = self.edges() as i64;
        if v - e + f != 2 {
            return Err(Error::InvalidMap(format!(
                "genus is not 0 (V={v}, E={e}, F={f})"
            )));
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        let n = self.darts();
        let mut seen = vec![false; n];
        let mut stack = vec![self.root];
        seen[self.root as usize] = true;
        let mut count = 1;
        while let Some(d) = stack.pop() {
            for nb in [self.sigma[d as usize], alpha(d)] {
                if !seen[nb as usize] {
                    seen[nb as usize] = true;
                    count += 1;
                    stack.push(nb);
                }
            }
        }
        count == n
    }

    pub fn darts(&self) -> usize {
        self.sigma.len()
    }

    pub fn edges(&self) -> usize {
        self.sigma.len() / 2
    }

    pub fn is_atomic(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn root(&self) -> Dart {
        self.root
    }

    #[inline]
    pub fn sigma(&self, d: Dart) -> Dart {
        self.sigma[d as usize]
    }

    #[inline]
    pub fn phi(&self, d: Dart) -> Dart {
        self.sigma[alpha(d) as usize]
    }

    pub fn sigma_slice(&self) -> &[Dart] {
        &self.sigma
    }

    pub fn sigma_inverse(&self) -> Vec<Dart> {
        let mut inv = vec![0; self.darts()];
        for (d, &s) in self.sigma.iter().enumerate() {
            inv[s as usize] = d as Dart;
        }
        inv
    }

    pub fn vertices(&self) -> Orbits {
        if self.is_atomic() {
            return Orbits { of: Vec::new(), cycles: vec![Vec::new()] };
        }
        Orbits::of_permutation(self.darts(), |d| self.sigma(d))
    }

    pub fn faces(&self) -> FaceInfo {
        if self.is_atomic() {
            return FaceInfo { faces: vec![Vec::new()], face_of: Vec::new(), root_face: 0 };
        }
        let o = Orbits::of_permutation(self.darts(), |d| self.phi(d));
        let root_face = o.of[self.root as usize] as usize;
        FaceInfo { faces: o.cycles, face_of: o.of, root_face }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices().len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces().len()
    }

    /// Darts of the root face in walk order, starting with the root.
    pub fn root_walk(&self) -> Vec<Dart> {
        if self.is_atomic() {
            return Vec::new();
        }
        let mut walk = vec![self.root];
        let mut d = self.phi(self.root);
        while d != self.root {
            walk.push(d);
            d = self.phi(d);
        }
        walk
    }

    pub fn root_face_valency(&self) -> usize {
        self.root_walk().len()
    }

    pub fn degree_sequence(&self) -> Vec<usize> {
        self.vertices().cycles.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.degree_sequence().into_iter().max().unwrap_or(0)
    }

    pub fn rerooted(&self, root: Dart) -> RootedMap {
        assert!((root as usize) < self.darts());
        RootedMap { sigma: self.sigma.clone(), root }
    }

    /// Map with the roles of vertices and faces exchanged, same root dart.
    pub fn dual(&self) -> RootedMap {
        let sigma = (0..self.darts() as Dart).map(|d| self.phi(d)).collect();
        RootedMap { sigma, root: self.root }
    }

    /// Old-to-new dart labels of the canonical relabeling.
    pub fn canonical_labels(&self) -> Vec<u32> {
        let mut lab = Vec::new();
        let mut order = Vec::new();
        canonical_labels_into(&self.sigma, self.root, &mut lab, &mut order);
        lab
    }

    /// The canonically relabeled copy: rooted at 0, involution `d ^ 1`.
    pub fn canonical(&self) -> RootedMap {
        if self.is_atomic() {
            return Self::atomic();
        }
        let lab = self.canonical_labels();
        let mut sigma = vec![0; self.darts()];
        for d in 0..self.darts() {
            sigma[lab[d] as usize] = lab[self.sigma[d] as usize];
        }
        RootedMap { sigma, root: 0 }
    }

    pub fn canonical_code(&self) -> CanonicalCode {
        CanonicalCode(self.canonical().sigma)
    }

    /// True if this map equals its own canonical form.
    pub fn is_canonical(&self) -> bool {
        self.root == 0 && self.canonical().sigma == self.sigma
    }

    /// Every face has even valency.
    pub fn is_bipartite(&self) -> bool {
        self.faces().faces.iter().all(|f| f.len() % 2 == 0)
    }

    /// At least two edges, no loops, and no cut vertex in the underlying
    /// multigraph. The atomic map and the one-edge maps are excluded so that
    /// the class series starts with the digon at `z^2`.
    pub fn is_two_connected(&self) -> bool {
        if self.edges() < 2 {
            return false;
        }
        let vx = self.vertices();
        if (0..self.darts() as Dart).any(|d| vx.of[d as usize] == vx.of[alpha(d) as usize]) {
            return false;
        }
        !has_cut_vertex(&vx)
    }

    pub fn belongs_to(&self, cls: MapClass) -> bool {
        match cls {
            MapClass::All => true,
            MapClass::Bipartite => self.is_bipartite(),
            MapClass::TwoConnected => self.is_two_connected(),
        }
    }

    /// Root face valency exceeds `i` and the first `i` steps of the root face
    /// walk visit `i + 1` distinct vertices.
    pub fn has_partial_simple_boundary(&self, i: usize) -> bool {
        let walk = self.root_walk();
        if walk.len() <= i {
            return false;
        }
        let vx = self.vertices();
        let mut seen: Vec<u32> = Vec::with_capacity(i + 1);
        for &d in &walk[..=i] {
            let v = vx.of[d as usize];
            if seen.contains(&v) {
                return false;
            }
            seen.push(v);
        }
        true
    }

    /// The root face boundary is a simple cycle.
    pub fn has_simple_boundary(&self) -> bool {
        let v = self.root_face_valency();
        v > 0 && self.has_partial_simple_boundary(v - 1)
    }

    /// An edge is a bridge iff both of its darts lie on the same face.
    pub fn is_bridge(&self, faces: &FaceInfo, d: Dart) -> bool {
        faces.face_of[d as usize] == faces.face_of[alpha(d) as usize]
    }
}

/// Fills `lab` with the canonical relabeling of `(sigma, root)`: breadth-first
/// over darts, a dart seen for the first time gets the next even label and
/// its partner the following odd one.
pub fn canonical_labels_into(sigma: &[Dart], root: Dart, lab: &mut Vec<u32>, order: &mut Vec<Dart>) {
    let n = sigma.len();
    lab.clear();
    lab.resize(n, u32::MAX);
    order.clear();
    if n == 0 {
        return;
    }
    lab[root as usize] = 0;
    lab[alpha(root) as usize] = 1;
    order.push(root);
    order.push(alpha(root));
    let mut i = 0;
    while i < order.len() {
        let s = sigma[order[i] as usize];
        if lab[s as usize] == u32::MAX {
            let k = order.len() as u32;
            lab[s as usize] = k;
            lab[alpha(s) as usize] = k + 1;
            order.push(s);
            order.push(alpha(s));
        }
        i += 1;
    }
}

fn check_permutation(p: &[Dart], name: &str) -> Result<()> {
    let mut seen = vec![false; p.len()];
    for &x in p {
        let x = x as usize;
        if x >= p.len() || seen[x] {
            return Err(Error::InvalidMap(format!("{name} is not a permutation")));
        }
        seen[x] = true;
    }
    Ok(())
}

/// Articulation-point search on the underlying multigraph (edges identified
/// by dart pairs, so parallel edges are handled).
fn has_cut_vertex(vx: &Orbits) -> bool {
    let nv = vx.len();
    let mut disc = vec![u32::MAX; nv];
    let mut low = vec![0u32; nv];
    let mut timer = 0u32;
    // frame: (vertex, dart index into its cycle, parent edge id)
    let mut stack: Vec<(usize, usize, u32)> = vec![(0, 0, u32::MAX)];
    disc[0] = 0;
    low[0] = 0;
    timer += 1;
    let mut root_children = 0;
    while let Some(top) = stack.len().checked_sub(1) {
        let (v, idx, pe) = stack[top];
        if idx < vx.cycles[v].len() {
            stack[top].1 += 1;
            let d = vx.cycles[v][idx];
            let edge = d >> 1;
            if edge == pe {
                continue;
            }
            let w = vx.of[alpha(d) as usize] as usize;
            if disc[w] == u32::MAX {
                disc[w] = timer;
                low[w] = timer;
                timer += 1;
                if v == 0 {
                    root_children += 1;
                }
                stack.push((w, 0, edge));
            } else {
                low[v] = low[v].min(disc[w]);
            }
        } else {
            stack.pop();
            if let Some(&(p, _, _)) = stack.last() {
                low[p] = low[p].min(low[v]);
                if p != 0 && low[v] >= disc[p] {
                    return true;
                }
            }
        }
    }
    root_children > 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loop_map() -> RootedMap {
        RootedMap::from_sigma(vec![1, 0], 0).unwrap()
    }

    fn bridge() -> RootedMap {
        RootedMap::from_sigma(vec![0, 1], 0).unwrap()
    }

    fn triple_edge() -> RootedMap {
        // vertex a: 0 2 4, vertex b: 1 5 3
        RootedMap::from_sigma(vec![2, 5, 4, 1, 0, 3], 0).unwrap()
    }

    #[test]
    fn small_face_structure() {
        let l = loop_map();
        assert_eq!(l.faces().valencies(), vec![1, 1]);
        assert_eq!(l.num_vertices(), 1);
        let b = bridge();
        assert_eq!(b.faces().valencies(), vec![2]);
        assert_eq!(b.num_vertices(), 2);
        let t = triple_edge();
        assert_eq!(t.faces().valencies(), vec![2, 2, 2]);
        let a = RootedMap::atomic();
        assert_eq!(a.faces().valencies(), vec![0]);
        assert_eq!(a.num_vertices(), 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RootedMap::from_sigma(vec![0, 0], 0).is_err());
        assert!(RootedMap::from_permutations(&[0, 1], &[0, 1], 0).is_err());
        // two disjoint bridges
        assert!(RootedMap::from_sigma(vec![0, 1, 2, 3], 0).is_err());
        // torus: one vertex with two interleaved loops
        assert!(RootedMap::from_sigma(vec![2, 3, 1, 0], 0).is_err());
    }

    #[test]
    fn classes() {
        assert!(!loop_map().is_bipartite());
        assert!(bridge().is_bipartite());
        assert!(triple_edge().is_two_connected());
        assert!(!bridge().is_two_connected());
        assert!(!loop_map().is_two_connected());
        let two_loops = RootedMap::from_sigma(vec![1, 2, 3, 0], 0).unwrap();
        assert!(!two_loops.is_two_connected());
        let path = RootedMap::from_sigma(vec![0, 2, 1, 3], 0).unwrap();
        assert!(!path.is_two_connected());
    }

    #[test]
    fn canonical_is_relabel_invariant() {
        let t = triple_edge();
        let pi: [u32; 6] = [3, 5, 0, 4, 1, 2];
        let mut sig = [0u32; 6];
        let mut alp = [0u32; 6];
        for d in 0..6u32 {
            sig[pi[d as usize] as usize] = pi[t.sigma(d) as usize];
            alp[pi[d as usize] as usize] = pi[alpha(d) as usize];
        }
        let relabeled = RootedMap::from_permutations(&sig, &alp, pi[0]).unwrap();
        assert_eq!(relabeled.canonical_code(), t.canonical_code());
        assert_ne!(loop_map().canonical_code(), bridge().canonical_code());
        assert_eq!(t.canonical_code(), t.canonical().canonical_code());
        assert!(t.canonical().is_canonical());
    }

    #[test]
    fn dual_roundtrip() {
        let t = triple_edge();
        assert_eq!(t.dual().dual(), t);
        assert_eq!(t.dual().num_vertices(), t.num_faces());
        assert_eq!(loop_map().dual().canonical_code(), bridge().canonical_code());
    }

    #[test]
    fn partial_simple_boundary() {
        let l = loop_map();
        assert!(l.has_partial_simple_boundary(0));
        assert!(!l.has_partial_simple_boundary(1));
        assert!(l.has_simple_boundary());
        let b = bridge();
        assert!(b.has_simple_boundary());
        assert!(triple_edge().has_simple_boundary());
        assert!(!RootedMap::atomic().has_partial_simple_boundary(0));
    }
}
