//! Intersection types of a pattern.
//!
//! A type is a rooted map covered by two intersecting occurrences of the
//! pattern, rooted on a face interior to neither. Faces interior to neither
//! occurrence other than the root face are *deep*; in a host they hold an
//! arbitrary map with a simple boundary.
//!
//! For patterns whose exterior walk revisits a vertex, the single-occurrence
//! term of the equation glues a map in which the revisited vertices are split
//! apart. A second occurrence of that map may then use two split copies of
//! one host vertex, which is not an occurrence of the host. Such
//! configurations are listed as pinch corrections and subtracted.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::enumerate::{fold_maps, Limits};
use crate::error::Result;
use crate::format::to_text;
use crate::map::{alpha, Dart, FaceInfo, MapClass, RootedMap};
use crate::pattern::{find_in_index, find_occurrences, intersect_unchecked, HostIndex, Occurrence, Pattern};
use crate::solver::TypeShape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigKind {
    Type,
    Pinch,
}

/// A group of rooted configurations related by re-rooting on the exterior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionType {
    pub kind: ConfigKind,
    /// Canonical form of the least rooting in the group.
    pub representative: RootedMap,
    /// Darts of the two occurrences in `representative` (for pinch
    /// corrections: the root occurrence, then the split-host occurrence).
    pub first: Vec<Dart>,
    pub second: Vec<Dart>,
    /// Number of rooted configurations in the group.
    pub rotations: u64,
    pub edges: usize,
    pub boundary_len: usize,
    /// `(valency, multiplicity)`, sorted.
    pub deep_faces: Vec<(usize, usize)>,
    /// A shared edge separates an interior face of one occurrence from an
    /// interior face of the other.
    pub contracted: bool,
    /// Unrooted union with its 2-gons between the occurrences contracted.
    family: (Vec<u32>, Vec<u32>, Vec<u32>),
}

impl IntersectionType {
    pub fn shape(&self) -> TypeShape {
        TypeShape {
            rotations: self.rotations,
            edges: self.edges,
            boundary_len: self.boundary_len,
            deep_faces: self.deep_faces.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeCatalog {
    pub class: MapClass,
    pub pattern_edges: usize,
    pub max_edges: usize,
    pub types: Vec<IntersectionType>,
    pub pinch_corrections: Vec<IntersectionType>,
}

#[derive(Serialize)]
struct TypeJson {
    representative: String,
    r_i: u64,
    e_i: usize,
    v_i: usize,
    deep_faces: Vec<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contracted: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variants: Option<Vec<TypeJson>>,
}

fn type_json(t: &IntersectionType, variants: Option<Vec<TypeJson>>) -> TypeJson {
    TypeJson {
        representative: to_text(&t.representative),
        r_i: t.rotations,
        e_i: t.edges,
        v_i: t.boundary_len,
        deep_faces: t.deep_faces.iter().map(|&(a, b)| [a, b]).collect(),
        contracted: variants.is_none().then_some(t.contracted),
        variants,
    }
}

impl TypeCatalog {
    pub fn type_shapes(&self) -> Vec<TypeShape> {
        self.types.iter().map(IntersectionType::shape).collect()
    }

    pub fn correction_shapes(&self) -> Vec<TypeShape> {
        self.pinch_corrections.iter().map(IntersectionType::shape).collect()
    }

    /// Types grouped into families: the same unrooted union of two
    /// occurrences, with any choice of outer face, where a non-interior 2-gon
    /// between the two occurrences may contract to a single shared edge. Each
    /// family is headed by its member with the longest boundary (then fewest
    /// edges, uncontracted first).
    pub fn families(&self) -> Vec<Vec<&IntersectionType>> {
        let mut groups: BTreeMap<&(Vec<u32>, Vec<u32>, Vec<u32>), Vec<&IntersectionType>> = BTreeMap::new();
        for t in &self.types {
            groups.entry(&t.family).or_default().push(t);
        }
        let mut out: Vec<Vec<&IntersectionType>> = groups
            .into_values()
            .map(|mut g| {
                g.sort_by_key(|t| (std::cmp::Reverse(t.boundary_len), t.contracted, t.edges, t.deep_faces.clone()));
                g
            })
            .collect();
        out.sort_by_key(|g| (g[0].edges, std::cmp::Reverse(g[0].boundary_len), g[0].representative.sigma_slice().to_vec()));
        out
    }

    /// Heads of the families.
    pub fn listing(&self) -> Vec<&IntersectionType> {
        self.families().into_iter().map(|g| g[0]).collect()
    }

    /// Whether every configuration up to `2e` edges was examined.
    pub fn is_complete(&self) -> bool {
        self.max_edges >= 2 * self.pattern_edges
    }

    /// `types.json`: one record per family, with every rooted member (each
    /// a term of the equation) under `variants`.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<TypeJson> = self
            .families()
            .into_iter()
            .map(|g| type_json(g[0], Some(g.iter().map(|t| type_json(t, None)).collect())))
            .collect();
        serde_json::to_value(rows).expect("types serialize")
    }
}

type GroupKey = (ConfigKind, Vec<u32>, Vec<u32>, Vec<u32>);

struct Config {
    key: GroupKey,
    ty: IntersectionType,
}

/// Least `(code, first, second)` over re-rootings on the root face; the
/// pair is unordered for types.
fn group_key(m: &RootedMap, kind: ConfigKind, a: &[Dart], b: &[Dart]) -> (GroupKey, RootedMap, Vec<Dart>, Vec<Dart>) {
    let mut best: Option<(GroupKey, RootedMap, Vec<Dart>, Vec<Dart>)> = None;
    for d in m.root_walk() {
        let r = m.rerooted(d);
        let lab = r.canonical_labels();
        let relabel = |s: &[Dart]| {
            let mut v: Vec<u32> = s.iter().map(|&x| lab[x as usize]).collect();
            v.sort_unstable();
            v
        };
        let (mut x, mut y) = (relabel(a), relabel(b));
        if kind == ConfigKind::Type && y < x {
            std::mem::swap(&mut x, &mut y);
        }
        let canon = r.canonical();
        let key = (kind, canon.sigma_slice().to_vec(), x.clone(), y.clone());
        if best.as_ref().map_or(true, |b| key < b.0) {
            best = Some((key, canon, x, y));
        }
    }
    best.expect("non-atomic map has a root walk")
}

fn interior_faces_of(p: &Pattern, faces: &FaceInfo, occ: &Occurrence) -> Vec<usize> {
    let mut out: Vec<usize> = (0..p.map().darts() as Dart)
        .filter(|&d| p.is_interior_dart(d))
        .map(|d| faces.face_of[occ.embedding[d as usize] as usize] as usize)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Deep faces as `(valency, multiplicity)`. A deep face may pass through a
/// vertex twice; its content is still a map with a simple boundary whose
/// boundary vertices get identified by the outside.
fn deep_faces(faces: &FaceInfo, interior: &[usize]) -> Vec<(usize, usize)> {
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for (f, cyc) in faces.faces.iter().enumerate() {
        if f != faces.root_face && !interior.contains(&f) {
            *hist.entry(cyc.len()).or_default() += 1;
        }
    }
    hist.into_iter().collect()
}

fn covers(m: &RootedMap, a: &[Dart], b: &[Dart]) -> bool {
    let mut hit = vec![false; m.darts()];
    for &d in a.iter().chain(b) {
        hit[d as usize] = true;
    }
    hit.into_iter().all(|x| x)
}

fn is_contracted(m: &RootedMap, faces: &FaceInfo, f1: &[usize], f2: &[usize]) -> bool {
    let only = |f: usize, mine: &[usize], other: &[usize]| mine.contains(&f) && !other.contains(&f);
    (0..m.darts() as Dart).any(|d| {
        let a = faces.face_of[d as usize] as usize;
        let b = faces.face_of[alpha(d) as usize] as usize;
        only(a, f1, f2) && only(b, f2, f1)
    })
}

/// Contracts every non-interior 2-gon bounded by one edge of each
/// occurrence alone, then takes the least code over all rootings.
fn family_key(m: &RootedMap, faces: &FaceInfo, interior: &[usize], a: &[Dart], b: &[Dart]) -> (Vec<u32>, Vec<u32>, Vec<u32>) {
    let n = m.darts();
    let mut in_a = vec![false; n];
    let mut in_b = vec![false; n];
    for &d in a {
        in_a[d as usize] = true;
    }
    for &d in b {
        in_b[d as usize] = true;
    }
    let only_a = |d: Dart, ia: &[bool], ib: &[bool]| ia[d as usize] && !ib[d as usize];
    let mut dropped = vec![false; n];
    for (f, cyc) in faces.faces.iter().enumerate() {
        if cyc.len() != 2 || interior.contains(&f) {
            continue;
        }
        let (d1, d2) = (cyc[0], cyc[1]);
        if dropped[d1 as usize] || dropped[d2 as usize] {
            continue;
        }
        let (keep, drop) = if only_a(d1, &in_a, &in_b) && only_a(d2, &in_b, &in_a) {
            (d1, d2)
        } else if only_a(d2, &in_a, &in_b) && only_a(d1, &in_b, &in_a) {
            (d2, d1)
        } else {
            continue;
        };
        dropped[drop as usize] = true;
        dropped[alpha(drop) as usize] = true;
        for x in [keep, alpha(keep)] {
            in_a[x as usize] = true;
            in_b[x as usize] = true;
        }
    }
    let kept: Vec<Dart> = (0..n as Dart).filter(|&d| !dropped[d as usize]).collect();
    let mut index = vec![u32::MAX; n];
    for (i, &d) in kept.iter().enumerate() {
        index[d as usize] = i as u32;
    }
    let sigma: Vec<Dart> = kept
        .iter()
        .map(|&d| {
            let mut e = m.sigma(d);
            while dropped[e as usize] {
                e = m.sigma(e);
            }
            index[e as usize]
        })
        .collect();
    let small = RootedMap::from_sigma_unchecked(sigma, 0);
    let sa: Vec<Dart> = kept.iter().enumerate().filter(|(_, &d)| in_a[d as usize]).map(|(i, _)| i as Dart).collect();
    let sb: Vec<Dart> = kept.iter().enumerate().filter(|(_, &d)| in_b[d as usize]).map(|(i, _)| i as Dart).collect();
    (0..small.darts() as Dart)
        .map(|r| {
            let lab = small.rerooted(r).canonical_labels();
            let relabel = |s: &[Dart]| {
                let mut v: Vec<u32> = s.iter().map(|&x| lab[x as usize]).collect();
                v.sort_unstable();
                v
            };
            let (x, y) = (relabel(&sa), relabel(&sb));
            let (x, y) = if y < x { (y, x) } else { (x, y) };
            (small.rerooted(r).canonical().sigma_slice().to_vec(), x, y)
        })
        .min()
        .expect("a type has edges")
}

fn make_config(
    m: &RootedMap,
    kind: ConfigKind,
    a: &[Dart],
    b: &[Dart],
    deep: Vec<(usize, usize)>,
    contracted: bool,
    family: (Vec<u32>, Vec<u32>, Vec<u32>),
) -> Config {
    let (key, representative, first, second) = group_key(m, kind, a, b);
    Config {
        key,
        ty: IntersectionType {
            kind,
            representative,
            first,
            second,
            rotations: 1,
            edges: m.edges(),
            boundary_len: m.root_face_valency(),
            deep_faces: deep,
            contracted,
            family,
        },
    }
}

fn type_configs(m: &RootedMap, p: &Pattern, occ: &[Occurrence], out: &mut Vec<Config>) -> Result<()> {
    let faces = m.faces();
    let interior: Vec<Vec<usize>> = occ.iter().map(|o| interior_faces_of(p, &faces, o)).collect();
    for i in 0..occ.len() {
        for j in i + 1..occ.len() {
            if !covers(m, &occ[i].darts, &occ[j].darts) || !intersect_unchecked(m, &occ[i], &occ[j]) {
                continue;
            }
            let mut both = interior[i].clone();
            both.extend(&interior[j]);
            let deep = deep_faces(&faces, &both);
            let contracted = is_contracted(m, &faces, &interior[i], &interior[j]);
            let family = family_key(m, &faces, &both, &occ[i].darts, &occ[j].darts);
            out.push(make_config(m, ConfigKind::Type, &occ[i].darts, &occ[j].darts, deep, contracted, family));
        }
    }
    Ok(())
}

/// Host rotation with the exterior pinch vertices of `o` cut at the corners
/// lying in interior faces of `o`.
fn split_rotation(m: &RootedMap, p: &Pattern, faces: &FaceInfo, o_interior: &[usize], o: &Occurrence) -> Vec<Dart> {
    let vx = m.vertices();
    let pvx = p.map().vertices();
    let mut sigma = m.sigma_slice().to_vec();
    for &pv in p.pinch_points() {
        let pd = pvx.cycles[pv as usize][0];
        let hv = vx.of[o.embedding[pd as usize] as usize] as usize;
        let cyc = &vx.cycles[hv];
        let cut: Vec<bool> =
            cyc.iter().map(|&d| o_interior.contains(&(faces.face_of[m.sigma(d) as usize] as usize))).collect();
        let Some(first_cut) = cut.iter().position(|&c| c) else { continue };
        // runs start right after each cut corner
        let k = cyc.len();
        let mut start = (first_cut + 1) % k;
        for step in 0..k {
            let i = (first_cut + 1 + step) % k;
            if cut[i] {
                sigma[cyc[i] as usize] = cyc[start];
                start = (i + 1) % k;
            } else {
                sigma[cyc[i] as usize] = cyc[(i + 1) % k];
            }
        }
    }
    sigma
}

fn pinch_configs(m: &RootedMap, p: &Pattern, occ: &[Occurrence], out: &mut Vec<Config>) -> Result<()> {
    let faces = m.faces();
    let vx = m.vertices();
    let root = m.root();
    let pdarts = p.map().darts() as Dart;
    let pvx = p.map().vertices();
    for o in occ.iter().filter(|o| o.darts.binary_search(&root).is_ok()) {
        let o_int = interior_faces_of(p, &faces, o);
        let mut removed = vec![root, alpha(root)];
        for pd in 0..pdarts {
            if p.is_interior_dart(pd) && p.is_interior_dart(alpha(pd)) {
                removed.push(o.embedding[pd as usize]);
            }
        }
        let sigma = split_rotation(m, p, &faces, &o_int, o);
        let index = HostIndex::with_rotation(m, sigma);
        for w in find_in_index(&index, p) {
            if w.darts.iter().any(|d| removed.contains(d)) {
                continue;
            }
            let w_int = interior_faces_of(p, &faces, &w);
            if w_int.iter().any(|f| o_int.contains(f)) {
                continue;
            }
            let mut images: Vec<u32> =
                pvx.cycles.iter().map(|c| vx.of[w.embedding[c[0] as usize] as usize]).collect();
            images.sort_unstable();
            images.dedup();
            if images.len() == pvx.len() || !covers(m, &o.darts, &w.darts) {
                continue;
            }
            let mut both = o_int.clone();
            both.extend(&w_int);
            let deep = deep_faces(&faces, &both);
            out.push(make_config(m, ConfigKind::Pinch, &o.darts, &w.darts, deep, false, Default::default()));
        }
    }
    Ok(())
}

fn configs_of(m: &RootedMap, p: &Pattern) -> Result<Vec<Config>> {
    let occ = find_occurrences(m, p);
    let mut out = Vec::new();
    if occ.len() >= 2 {
        type_configs(m, p, &occ, &mut out)?;
    }
    if !p.pinch_points().is_empty() && !occ.is_empty() {
        pinch_configs(m, p, &occ, &mut out)?;
    }
    Ok(out)
}

/// Enumerates every rooted configuration with `e..=max_edges` edges (`e` the
/// pattern size) and groups them. `max_edges = 2e` gives the full catalog.
pub fn enumerate_intersection_types(p: &Pattern, cls: MapClass, max_edges: usize) -> Result<TypeCatalog> {
    enumerate_intersection_types_with(p, cls, max_edges, &Limits::default())
}

pub fn enumerate_intersection_types_with(
    p: &Pattern,
    cls: MapClass,
    max_edges: usize,
    limits: &Limits,
) -> Result<TypeCatalog> {
    let e = p.edges();
    let mut all: Vec<Config> = Vec::new();
    for n in e..=max_edges {
        let part = fold_maps(
            n,
            cls,
            limits,
            || Ok(Vec::new()),
            |acc: Result<Vec<Config>>, m| {
                let mut acc = acc?;
                acc.extend(configs_of(m, p)?);
                Ok(acc)
            },
            |a, b| {
                let mut a = a?;
                a.extend(b?);
                Ok(a)
            },
        )??;
        all.extend(part);
    }
    let mut groups: BTreeMap<GroupKey, IntersectionType> = BTreeMap::new();
    for c in all {
        groups.entry(c.key).and_modify(|t| t.rotations += 1).or_insert(c.ty);
    }
    let (mut types, mut pinch_corrections) = (Vec::new(), Vec::new());
    for (_, t) in groups {
        match t.kind {
            ConfigKind::Type => types.push(t),
            ConfigKind::Pinch => pinch_corrections.push(t),
        }
    }
    Ok(TypeCatalog { class: cls, pattern_edges: e, max_edges, types, pinch_corrections })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digon_has_no_types() {
        let c = enumerate_intersection_types(&Pattern::digon(), MapClass::All, 4).unwrap();
        assert!(c.types.is_empty());
        assert!(c.pinch_corrections.is_empty());
        assert!(c.is_complete());
    }

    #[test]
    fn triple_edge_types_cover() {
        let p = Pattern::new(RootedMap::from_sigma(vec![2, 5, 4, 1, 0, 3], 0).unwrap()).unwrap();
        let c = enumerate_intersection_types(&p, MapClass::All, 6).unwrap();
        assert!(!c.types.is_empty());
        for t in &c.types {
            assert!(covers(&t.representative, &t.first, &t.second));
        }
    }
}
