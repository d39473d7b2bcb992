//! Pattern occurrences and their intersections.
//!
//! An occurrence of a pattern `p` in a host `h` is an injective dart map `f`
//! commuting with the edge involution such that:
//! - darts of one pattern vertex land on one host vertex, in the same cyclic
//!   order, and distinct pattern vertices land on distinct host vertices;
//! - every interior corner of `p` (a corner not in the root face of `p`) is a
//!   corner of `h`, i.e. `sigma_h(f(d)) = f(sigma_p(d))`, so interior faces
//!   map onto whole host faces;
//! - the host root face is not the image of an interior face.
//!
//! Embeddings that differ by an automorphism of `p` preserving its exterior
//! have the same dart image and interior faces, and are reported once.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{alpha, Dart, RootedMap};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct Pattern {
    map: RootedMap,
    edges: usize,
    boundary_len: usize,
    rotations: usize,
    pinch_points: Vec<u32>,
    sigma_inv: Vec<Dart>,
    vertex_of: Vec<u32>,
    num_vertices: usize,
    interior_corner: Vec<bool>,
    interior_dart: Vec<bool>,
}

impl Pattern {
    pub fn new(map: RootedMap) -> Result<Self> {
        if map.is_atomic() {
            return Err(Error::Usage("a pattern needs at least one edge".into()));
        }
        let faces = map.faces();
        let vx = map.vertices();
        let n = map.darts();
        let walk = map.root_walk();
        let mut visits: BTreeMap<u32, usize> = BTreeMap::new();
        for &d in &walk {
            *visits.entry(vx.of[d as usize]).or_default() += 1;
        }
        let pinch_points = visits.into_iter().filter(|&(_, c)| c >= 2).map(|(v, _)| v).collect();
        let code = map.canonical_code();
        let symmetry = walk.iter().filter(|&&d| map.rerooted(d).canonical_code() == code).count();
        let boundary_len = walk.len();
        let root_face = faces.root_face as u32;
        let interior_dart: Vec<bool> = (0..n).map(|d| faces.face_of[d] != root_face).collect();
        let interior_corner =
            (0..n).map(|d| interior_dart[map.sigma(d as Dart) as usize]).collect();
        Ok(Pattern {
            edges: map.edges(),
            boundary_len,
            rotations: boundary_len / symmetry,
            pinch_points,
            sigma_inv: map.sigma_inverse(),
            num_vertices: vx.len(),
            vertex_of: vx.of,
            interior_corner,
            interior_dart,
            map,
        })
    }

    /// Double edge whose non-root face is the interior.
    pub fn digon() -> Self {
        Self::new(RootedMap::from_sigma(vec![2, 3, 0, 1], 0).unwrap()).unwrap()
    }

    /// Two digons sharing a vertex, rooted on the exterior face.
    pub fn fly() -> Self {
        Self::new(RootedMap::from_sigma(vec![2, 3, 4, 1, 6, 7, 0, 5], 0).unwrap()).unwrap()
    }

    pub fn map(&self) -> &RootedMap {
        &self.map
    }

    pub fn edges(&self) -> usize {
        self.edges
    }

    /// Valency of the exterior face.
    pub fn boundary_len(&self) -> usize {
        self.boundary_len
    }

    /// Number of distinct re-rootings on the exterior face.
    pub fn rotations(&self) -> usize {
        self.rotations
    }

    pub fn pinch_points(&self) -> &[u32] {
        &self.pinch_points
    }

    pub fn has_simple_boundary(&self) -> bool {
        self.pinch_points.is_empty()
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn is_interior_dart(&self, d: Dart) -> bool {
        self.interior_dart[d as usize]
    }

    /// Every edge has an interior face on at least one side, so the exterior
    /// walk becomes a simple cycle once pinch points are split.
    pub fn every_edge_bounds_interior(&self) -> bool {
        (0..self.map.darts() as Dart).all(|d| self.interior_dart[d as usize] || self.interior_dart[alpha(d) as usize])
    }
}

/// One side of a pattern cut at its only pinch vertex.
#[derive(Debug, Clone)]
pub struct PinchBlock {
    pub pattern: Pattern,
    /// Distinct exterior re-rootings whose root vertex is the attachment
    /// vertex, up to symmetry.
    pub attach_rotations: u64,
    key: (Vec<u32>, Vec<u32>),
}

impl PinchBlock {
    /// Same block with the same attachment vertex, up to isomorphism.
    pub fn same_as(&self, o: &PinchBlock) -> bool {
        self.key == o.key
    }
}

impl Pattern {
    /// Splits a pattern with exactly one pinch vertex, visited twice by the
    /// exterior walk, into its two sides. `None` for any other shape, or when
    /// a side is itself pinched.
    pub fn pinch_blocks(&self) -> Option<Vec<PinchBlock>> {
        let &[pinch] = self.pinch_points.as_slice() else { return None };
        let walk = self.map.root_walk();
        if walk.iter().filter(|&&d| self.vertex_of[d as usize] == pinch).count() != 2 {
            return None;
        }
        let n = self.map.darts();
        // union edges through non-pinch vertices
        let mut comp: Vec<usize> = (0..n / 2).collect();
        fn find(c: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while c[r] != r {
                r = c[r];
            }
            c[i] = r;
            r
        }
        let vx = self.map.vertices();
        for cyc in &vx.cycles {
            if self.vertex_of[cyc[0] as usize] == pinch {
                continue;
            }
            for w in cyc.windows(2) {
                let (a, b) = (find(&mut comp, w[0] as usize / 2), find(&mut comp, w[1] as usize / 2));
                comp[a] = b;
            }
        }
        let mut groups: BTreeMap<usize, Vec<Dart>> = BTreeMap::new();
        for d in 0..n as Dart {
            let c = find(&mut comp, d as usize / 2);
            groups.entry(c).or_default().push(d);
        }
        if groups.len() != 2 {
            return None;
        }
        groups.into_values().map(|darts| self.block(&darts, pinch)).collect()
    }

    fn block(&self, darts: &[Dart], pinch: u32) -> Option<PinchBlock> {
        let mut index = vec![NONE; self.map.darts()];
        for (i, &d) in darts.iter().enumerate() {
            index[d as usize] = i as u32;
        }
        let sigma: Vec<Dart> = darts
            .iter()
            .map(|&d| {
                let mut e = self.map.sigma(d);
                while index[e as usize] == NONE {
                    e = self.map.sigma(e);
                }
                index[e as usize]
            })
            .collect();
        let root = darts.iter().position(|&d| !self.interior_dart[d as usize])? as Dart;
        let map = RootedMap::from_sigma(sigma, root).ok()?;
        let pattern = Pattern::new(map).ok()?;
        if !pattern.has_simple_boundary() {
            return None;
        }
        let attach: Vec<Dart> =
            darts.iter().enumerate().filter(|(_, &d)| self.vertex_of[d as usize] == pinch).map(|(i, _)| i as Dart).collect();
        let attach_vertex = pattern.vertex_of[attach[0] as usize];
        let code = pattern.map.canonical_code();
        let bwalk = pattern.map.root_walk();
        let root_labels = pattern.map.canonical_labels();
        // vertices equivalent to the attachment vertex under exterior symmetries
        let mut orbit = vec![false; pattern.num_vertices];
        let mut symmetric = 0u64;
        for &d in &bwalk {
            let r = pattern.map.rerooted(d);
            if r.canonical_code() != code {
                continue;
            }
            symmetric += 1;
            let lab = r.canonical_labels();
            let mut inv = vec![0; lab.len()];
            for (x, &l) in lab.iter().enumerate() {
                inv[l as usize] = x as Dart;
            }
            let image = inv[root_labels[attach[0] as usize] as usize];
            orbit[pattern.vertex_of[image as usize] as usize] = true;
        }
        let hits = bwalk.iter().filter(|&&d| orbit[pattern.vertex_of[d as usize] as usize]).count() as u64;
        let key = bwalk
            .iter()
            .map(|&d| {
                let r = pattern.map.rerooted(d);
                let lab = r.canonical_labels();
                let mut at: Vec<u32> = (0..lab.len())
                    .filter(|&x| pattern.vertex_of[x] == attach_vertex)
                    .map(|x| lab[x])
                    .collect();
                at.sort_unstable();
                (r.canonical_code().0, at)
            })
            .min()?;
        Some(PinchBlock { pattern, attach_rotations: hits / symmetric, key })
    }
}

pub fn rotations_of(p: &Pattern) -> usize {
    p.rotations()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Occurrence {
    pub host_key: u64,
    /// Sorted host darts.
    pub darts: Vec<Dart>,
    /// Sorted host face indices (faces numbered as in `RootedMap::faces`).
    pub interior_faces: Vec<u32>,
    /// `embedding[d]` is the image of pattern dart `d`; the lexicographically
    /// least among equivalent embeddings.
    pub embedding: Vec<Dart>,
}

pub fn host_key(host: &RootedMap) -> u64 {
    let mut h = DefaultHasher::new();
    host.sigma_slice().hash(&mut h);
    host.root().hash(&mut h);
    h.finish()
}

/// Precomputed host data. `sigma` may differ from the host rotation when
/// searching a host with split vertices.
pub struct HostIndex {
    key: u64,
    sigma: Vec<Dart>,
    sigma_inv: Vec<Dart>,
    vertex_of: Vec<u32>,
    pos: Vec<u32>,
    face_of: Vec<u32>,
    root_face: u32,
    num_vertices: usize,
}

impl HostIndex {
    pub fn new(host: &RootedMap) -> Self {
        Self::with_rotation(host, host.sigma_slice().to_vec())
    }

    /// Host darts with a replacement rotation; faces, positions and vertex
    /// ids are taken from `sigma`. `sigma` must form a planar map with the
    /// same involution.
    pub fn with_rotation(host: &RootedMap, sigma: Vec<Dart>) -> Self {
        let m = RootedMap::from_sigma_unchecked(sigma, host.root());
        let vx = m.vertices();
        let faces = m.faces();
        let mut pos = vec![0u32; m.darts()];
        for cyc in &vx.cycles {
            for (i, &d) in cyc.iter().enumerate() {
                pos[d as usize] = i as u32;
            }
        }
        HostIndex {
            key: host_key(host),
            sigma_inv: m.sigma_inverse(),
            sigma: m.sigma_slice().to_vec(),
            num_vertices: vx.len(),
            vertex_of: vx.of,
            pos,
            root_face: faces.root_face as u32,
            face_of: faces.face_of,
        }
    }

    pub fn face_of(&self, d: Dart) -> u32 {
        self.face_of[d as usize]
    }

    pub fn vertex_of(&self, d: Dart) -> u32 {
        self.vertex_of[d as usize]
    }
}

struct Search<'a> {
    p: &'a Pattern,
    h: &'a HostIndex,
    f: Vec<u32>,
    used: Vec<bool>,
    vmap: Vec<u32>,
    vowner: Vec<u32>,
    trail: Vec<(u32, u32, bool)>,
    found: BTreeMap<(Vec<Dart>, Vec<u32>), Vec<Dart>>,
}

impl<'a> Search<'a> {
    fn assign(&mut self, pd: u32, hd: u32) -> bool {
        let cur = self.f[pd as usize];
        if cur != NONE {
            return cur == hd;
        }
        if self.used[hd as usize] {
            return false;
        }
        let pv = self.p.vertex_of[pd as usize];
        let hv = self.h.vertex_of[hd as usize];
        let new_vertex = if self.vmap[pv as usize] == NONE {
            if self.vowner[hv as usize] != NONE {
                return false;
            }
            self.vmap[pv as usize] = hv;
            self.vowner[hv as usize] = pv;
            true
        } else {
            if self.vmap[pv as usize] != hv {
                return false;
            }
            false
        };
        self.f[pd as usize] = hd;
        self.used[hd as usize] = true;
        self.trail.push((pd, hd, new_vertex));
        true
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (pd, hd, new_vertex) = self.trail.pop().unwrap();
            self.f[pd as usize] = NONE;
            self.used[hd as usize] = false;
            if new_vertex {
                let pv = self.p.vertex_of[pd as usize];
                let hv = self.vmap[pv as usize];
                self.vmap[pv as usize] = NONE;
                self.vowner[hv as usize] = NONE;
            }
        }
    }

    /// Applies forced assignments from trail position `from`.
    fn propagate(&mut self, mut from: usize) -> bool {
        while from < self.trail.len() {
            let (pd, hd, _) = self.trail[from];
            from += 1;
            if !self.assign(alpha(pd), alpha(hd)) {
                return false;
            }
            if self.p.interior_corner[pd as usize]
                && !self.assign(self.p.map.sigma(pd), self.h.sigma[hd as usize])
            {
                return false;
            }
            let prev = self.p.sigma_inv[pd as usize];
            if self.p.interior_corner[prev as usize] && !self.assign(prev, self.h.sigma_inv[hd as usize]) {
                return false;
            }
        }
        true
    }

    fn extend(&mut self) {
        let n = self.p.map.darts();
        // next unassigned dart sharing a vertex with an assigned one
        let mut pick = None;
        for pd in 0..n as u32 {
            if self.f[pd as usize] == NONE && self.vmap[self.p.vertex_of[pd as usize] as usize] != NONE {
                pick = Some(pd);
                break;
            }
        }
        let Some(pd) = pick else {
            if self.f.iter().all(|&x| x != NONE) {
                self.record();
            }
            return;
        };
        let hv_dart = {
            let pv = self.p.vertex_of[pd as usize];
            (0..n).find(|&d| self.p.vertex_of[d] == pv && self.f[d] != NONE).map(|d| self.f[d]).unwrap()
        };
        let mut hd = hv_dart;
        loop {
            hd = self.h.sigma[hd as usize];
            if hd == hv_dart {
                break;
            }
            if self.used[hd as usize] {
                continue;
            }
            let mark = self.trail.len();
            if self.assign(pd, hd) && self.propagate(mark) {
                self.extend();
            }
            self.undo_to(mark);
        }
    }

    fn record(&mut self) {
        let p = self.p;
        let h = self.h;
        // cyclic order at each pattern vertex
        let vx = p.map.vertices();
        for cyc in &vx.cycles {
            if cyc.len() < 2 {
                continue;
            }
            let mut descents = 0;
            for i in 0..cyc.len() {
                let a = h.pos[self.f[cyc[i] as usize] as usize];
                let b = h.pos[self.f[cyc[(i + 1) % cyc.len()] as usize] as usize];
                if b < a {
                    descents += 1;
                }
            }
            if descents != 1 {
                return;
            }
        }
        let mut faces: Vec<u32> = Vec::new();
        for d in 0..p.map.darts() {
            if p.interior_dart[d] {
                let hf = h.face_of[self.f[d] as usize];
                if hf == h.root_face {
                    return;
                }
                if !faces.contains(&hf) {
                    faces.push(hf);
                }
            }
        }
        faces.sort_unstable();
        let mut darts = self.f.clone();
        darts.sort_unstable();
        let emb = self.f.clone();
        self.found
            .entry((darts, faces))
            .and_modify(|e| {
                if emb < *e {
                    *e = emb.clone();
                }
            })
            .or_insert(emb);
    }
}

/// All occurrences of `p` in the host described by `h`, sorted.
pub fn find_in_index(h: &HostIndex, p: &Pattern) -> Vec<Occurrence> {
    let hn = h.sigma.len();
    if hn < p.map.darts() {
        return Vec::new();
    }
    let mut s = Search {
        p,
        h,
        f: vec![NONE; p.map.darts()],
        used: vec![false; hn],
        vmap: vec![NONE; p.num_vertices],
        vowner: vec![NONE; h.num_vertices],
        trail: Vec::new(),
        found: BTreeMap::new(),
    };
    let proot = p.map.root();
    for hd in 0..hn as u32 {
        if s.assign(proot, hd) && s.propagate(0) {
            s.extend();
        }
        s.undo_to(0);
    }
    s.found
        .into_iter()
        .map(|((darts, interior_faces), embedding)| Occurrence { host_key: h.key, darts, interior_faces, embedding })
        .collect()
}

pub fn find_occurrences(host: &RootedMap, p: &Pattern) -> Vec<Occurrence> {
    if host.is_atomic() || host.darts() < p.map.darts() {
        return Vec::new();
    }
    find_in_index(&HostIndex::new(host), p)
}

pub fn count_occurrences(host: &RootedMap, p: &Pattern) -> usize {
    find_occurrences(host, p).len()
}

/// Two occurrences intersect if they share an interior face, or if at some
/// shared vertex the darts used by only one of them alternate at least four
/// times around the vertex.
pub fn occurrences_intersect(host: &RootedMap, o1: &Occurrence, o2: &Occurrence) -> Result<bool> {
    let key = host_key(host);
    if o1.host_key != key || o2.host_key != key {
        return Err(Error::Usage("occurrences belong to a different host".into()));
    }
    Ok(intersect_unchecked(host, o1, o2))
}

pub(crate) fn intersect_unchecked(host: &RootedMap, o1: &Occurrence, o2: &Occurrence) -> bool {
    if o1.interior_faces.iter().any(|f| o2.interior_faces.binary_search(f).is_ok()) {
        return true;
    }
    let n = host.darts();
    let mut tag = vec![0u8; n];
    for &d in &o1.darts {
        tag[d as usize] |= 1;
    }
    for &d in &o2.darts {
        tag[d as usize] |= 2;
    }
    let vx = host.vertices();
    for cyc in &vx.cycles {
        let labels: Vec<u8> = cyc.iter().map(|&d| tag[d as usize]).filter(|&t| t == 1 || t == 2).collect();
        if labels.len() < 4 {
            continue;
        }
        let changes = (0..labels.len()).filter(|&i| labels[i] != labels[(i + 1) % labels.len()]).count();
        if changes >= 4 {
            return true;
        }
    }
    false
}

/// Rotation induced on the image darts, pulled back to pattern darts.
pub fn induced_pattern_rotation(host: &RootedMap, occ: &Occurrence) -> Vec<Dart> {
    let n = occ.embedding.len();
    let mut inv = vec![NONE; host.darts()];
    for (pd, &hd) in occ.embedding.iter().enumerate() {
        inv[hd as usize] = pd as u32;
    }
    let mut sigma = vec![0; n];
    for (pd, &hd) in occ.embedding.iter().enumerate() {
        let mut x = host.sigma(hd);
        while inv[x as usize] == NONE {
            x = host.sigma(x);
        }
        sigma[pd] = inv[x as usize];
    }
    sigma
}
