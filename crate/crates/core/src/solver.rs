//! Functional-equation solving.
//!
//! Equations are built as expression graphs over power series in `z`. Nodes
//! cache their `z`-coefficients and compute them on demand, so a product only
//! ever asks its factors for the orders it needs. Each node carries a lower
//! bound on its `z`-valuation; an unknown defined by `F = RHS(F)` is solved
//! order by order, which is well defined whenever every occurrence of `F` in
//! the right-hand side is multiplied by at least one `z`. A right-hand side
//! that needs `[z^n]F` to produce `[z^n]F` is reported as an internal error.
//!
//! Terms are written with `u` marking the root face valency (half of it for
//! bipartite maps) and `x` marking distinguished pattern occurrences.

use std::cell::{Cell, RefCell};
use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::MapClass;
use crate::pattern::Pattern;
use crate::asymptotics::ScaledCoefficients;
use crate::poly::{Coeff, Crt, ModP, Poly, PolyUX, Scaled, FLOAT_SCALE, PRIMES};
use crate::series::Series3;

pub type NodeId = usize;

const NO_VAL: usize = usize::MAX / 4;

enum Op<C> {
    Var { rhs: Option<NodeId>, fixed: Option<Vec<Poly<C>>> },
    Const(Vec<Poly<C>>),
    Add(Vec<NodeId>),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Square(NodeId),
    ShiftZ(NodeId, i64),
    ShiftU(NodeId, i64),
    ShiftX(NodeId, usize),
    Scale(NodeId, i64),
    EvalU1(NodeId),
    CoeffU(NodeId, usize),
    CoeffX(NodeId, usize),
    KeepUFrom(NodeId, usize),
    DivDiff(NodeId),
}

struct Node<C> {
    op: Op<C>,
    val: usize,
    cache: RefCell<Vec<Rc<Poly<C>>>>,
    busy: Cell<bool>,
}

/// Lazily evaluated series expressions.
pub struct Graph<C> {
    nodes: Vec<Node<C>>,
    nx: usize,
    zero: Rc<Poly<C>>,
    error: RefCell<Option<Error>>,
}

impl<C: Coeff> Graph<C> {
    pub fn new(nx: usize) -> Self {
        Graph { nodes: Vec::new(), nx, zero: Rc::new(Poly::zero()), error: RefCell::new(None) }
    }

    fn push(&mut self, op: Op<C>, val: usize) -> NodeId {
        self.nodes.push(Node { op, val: val.min(NO_VAL), cache: RefCell::new(Vec::new()), busy: Cell::new(false) });
        self.nodes.len() - 1
    }

    pub fn val(&self, id: NodeId) -> usize {
        self.nodes[id].val
    }

    /// Declares a stronger lower bound on the valuation of `id`.
    pub fn assert_val(&mut self, id: NodeId, v: usize) -> NodeId {
        let n = &mut self.nodes[id];
        n.val = n.val.max(v);
        id
    }

    pub fn var(&mut self, val: usize) -> NodeId {
        self.push(Op::Var { rhs: None, fixed: None }, val)
    }

    pub fn define(&mut self, var: NodeId, rhs: NodeId) {
        match &mut self.nodes[var].op {
            Op::Var { rhs: r, .. } => *r = Some(rhs),
            _ => panic!("define on a non-variable node"),
        }
    }

    fn fix(&mut self, var: NodeId, value: Vec<Poly<C>>) {
        match &mut self.nodes[var].op {
            Op::Var { fixed, .. } => *fixed = Some(value),
            _ => panic!("fix on a non-variable node"),
        }
    }

    pub fn constant(&mut self, coeffs: Vec<Poly<C>>) -> NodeId {
        let val = coeffs.iter().position(|p| !p.is_zero()).unwrap_or(NO_VAL);
        self.push(Op::Const(coeffs), val)
    }

    /// `c * z^n * u^j * x^k`.
    pub fn monomial(&mut self, c: i64, n: usize, j: usize, k: usize) -> NodeId {
        let mut coeffs = vec![Poly::zero(); n + 1];
        let mut p = Poly::monomial(j, k, C::from_i64(c));
        if let Some(w) = C::z_weight(n as i64) {
            p = p.times(&w);
        }
        coeffs[n] = p;
        self.constant(coeffs)
    }

    pub fn add(&mut self, terms: Vec<NodeId>) -> NodeId {
        let val = terms.iter().map(|&t| self.val(t)).min().unwrap_or(NO_VAL);
        self.push(Op::Add(terms), val)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let val = self.val(a).min(self.val(b));
        self.push(Op::Sub(a, b), val)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let val = self.val(a).saturating_add(self.val(b));
        self.push(Op::Mul(a, b), val)
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        let val = self.val(a).saturating_mul(2);
        self.push(Op::Square(a), val)
    }

    /// Multiplies by `z^k`; a negative `k` requires valuation at least `-k`.
    pub fn shift_z(&mut self, a: NodeId, k: i64) -> Result<NodeId> {
        let va = self.val(a) as i64;
        if va + k < 0 {
            return Err(Error::Internal(format!("division by z^{} of a series with valuation {va}", -k)));
        }
        let val = if va >= NO_VAL as i64 { NO_VAL } else { (va + k) as usize };
        Ok(self.push(Op::ShiftZ(a, k), val))
    }

    pub fn shift_u(&mut self, a: NodeId, k: i64) -> NodeId {
        let val = self.val(a);
        self.push(Op::ShiftU(a, k), val)
    }

    pub fn shift_x(&mut self, a: NodeId, k: usize) -> NodeId {
        let val = self.val(a);
        self.push(Op::ShiftX(a, k), val)
    }

    pub fn scale(&mut self, a: NodeId, k: i64) -> NodeId {
        let val = self.val(a);
        self.push(Op::Scale(a, k), val)
    }

    pub fn eval_u1(&mut self, a: NodeId) -> NodeId {
        let val = self.val(a);
        self.push(Op::EvalU1(a), val)
    }

    pub fn coeff_u(&mut self, a: NodeId, j: usize) -> NodeId {
        let val = self.val(a);
        self.push(Op::CoeffU(a, j), val)
    }

    pub fn coeff_x(&mut self, a: NodeId, k: usize) -> NodeId {
        let val = self.val(a);
        self.push(Op::CoeffX(a, k), val)
    }

    pub fn keep_u_from(&mut self, a: NodeId, j: usize) -> NodeId {
        let val = self.val(a);
        self.push(Op::KeepUFrom(a, j), val)
    }

    pub fn divided_difference(&mut self, a: NodeId) -> NodeId {
        let val = self.val(a);
        self.push(Op::DivDiff(a), val)
    }

    fn fail(&self, e: Error) {
        let mut slot = self.error.borrow_mut();
        if slot.is_none() {
            *slot = Some(e);
        }
    }

    pub fn take_error(&self) -> Option<Error> {
        self.error.borrow_mut().take()
    }

    /// `[z^n]` of node `id`.
    pub fn eval(&self, id: NodeId, n: usize) -> Rc<Poly<C>> {
        let node = &self.nodes[id];
        if n < node.val {
            return self.zero.clone();
        }
        {
            let c = node.cache.borrow();
            if c.len() > n {
                return c[n].clone();
            }
        }
        if node.busy.get() {
            self.fail(Error::Internal(
                "equation is not contracting: a coefficient depends on itself".into(),
            ));
            return self.zero.clone();
        }
        node.busy.set(true);
        let start = node.cache.borrow().len();
        for k in start..=n {
            let v = if k < node.val { self.zero.clone() } else { Rc::new(self.compute(id, k)) };
            node.cache.borrow_mut().push(v);
        }
        node.busy.set(false);
        node.cache.borrow()[n].clone()
    }

    fn compute(&self, id: NodeId, k: usize) -> Poly<C> {
        let nx = self.nx;
        match &self.nodes[id].op {
            Op::Var { rhs, fixed } => match (fixed, rhs) {
                (Some(f), _) => f.get(k).cloned().unwrap_or_default(),
                (None, Some(r)) => (*self.eval(*r, k)).clone(),
                (None, None) => {
                    self.fail(Error::Internal("unknown without a defining equation".into()));
                    Poly::zero()
                }
            },
            Op::Const(v) => v.get(k).cloned().unwrap_or_default(),
            Op::Add(ts) => {
                let mut acc = Poly::zero();
                for &t in ts {
                    acc.add_assign(&self.eval(t, k));
                }
                acc
            }
            Op::Sub(a, b) => {
                let mut acc = (*self.eval(*a, k)).clone();
                acc.sub_assign(&self.eval(*b, k));
                acc
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.val(*a), self.val(*b));
                let mut acc = Poly::zero();
                if k >= va + vb {
                    for i in va..=k - vb {
                        let pa = self.eval(*a, i);
                        if pa.is_zero() {
                            continue;
                        }
                        acc.add_mul(&pa, &self.eval(*b, k - i), nx);
                    }
                }
                acc.normalize();
                acc
            }
            Op::Square(a) => {
                let va = self.val(*a);
                let mut acc = Poly::zero();
                let mut i = va;
                while i < k - i {
                    acc.add_mul(&self.eval(*a, i), &self.eval(*a, k - i), nx);
                    i += 1;
                }
                let mut acc = acc.scale(2);
                if k % 2 == 0 && k / 2 >= va {
                    let h = self.eval(*a, k / 2);
                    acc.add_mul(&h, &h, nx);
                }
                acc.normalize();
                acc
            }
            Op::ShiftZ(a, s) => {
                let src = k as i64 - s;
                if src < 0 {
                    Poly::zero()
                } else {
                    let p = self.eval(*a, src as usize);
                    match C::z_weight(*s) {
                        Some(w) => p.times(&w),
                        None => (*p).clone(),
                    }
                }
            }
            Op::ShiftU(a, s) => match self.eval(*a, k).shift_u(*s) {
                Some(p) => p,
                None => {
                    self.fail(Error::Internal(format!(
                        "negative u-shift by {} beyond available degree at z^{k}",
                        -s
                    )));
                    Poly::zero()
                }
            },
            Op::ShiftX(a, s) => self.eval(*a, k).shift_x(*s, nx),
            Op::Scale(a, c) => self.eval(*a, k).scale(*c),
            Op::EvalU1(a) => self.eval(*a, k).eval_u1(),
            Op::CoeffU(a, j) => self.eval(*a, k).coeff_u(*j),
            Op::CoeffX(a, j) => self.eval(*a, k).coeff_x(*j),
            Op::KeepUFrom(a, j) => self.eval(*a, k).keep_u_from(*j),
            Op::DivDiff(a) => self.eval(*a, k).divided_difference(),
        }
    }
}

/// One pattern term of an equation: a decorated core glued into the root
/// region, weighted by `sign * multiplicity * x^x_power`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EqTerm {
    pub sign: i64,
    pub multiplicity: u64,
    pub x_power: usize,
    pub edges: usize,
    pub boundary_len: usize,
    /// `(valency, count)` of faces filled with simple-boundary maps.
    pub deep_faces: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternEquation {
    pub cls: MapClass,
    /// Darts of the pattern, used to size the modular solve; 0 when plain.
    pub pattern_darts: usize,
    pub terms: Vec<EqTerm>,
    /// The pattern has a pinch vertex.
    pub pinched: bool,
    /// Sides of a pattern pinched at one vertex; occurrences straddling the
    /// cut vertex of a partial-boundary decomposition are removed with them.
    pub split: Option<PinchSplit>,
}

/// A side of a pinched pattern, seen from the vertex it hangs on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitBlock {
    pub edges: usize,
    pub boundary_len: usize,
    pub attach_rotations: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinchSplit {
    pub blocks: Vec<SplitBlock>,
    /// Ordered (outer, inner) block assignments that form one occurrence.
    pub pairs: Vec<(usize, usize)>,
}

impl PatternEquation {
    pub fn plain(cls: MapClass) -> Self {
        PatternEquation { cls, pattern_darts: 0, terms: Vec::new(), pinched: false, split: None }
    }

    /// Terms in `x^1` and `x^2` are exact: the pattern is not pinched, or its
    /// pinch is of the single-vertex, two-sided kind handled by `split`.
    pub fn pairwise_exact(&self) -> bool {
        !self.pinched || self.split.is_some()
    }

    pub fn reduced_at_x0(&self) -> Self {
        Self::plain(self.cls)
    }
}

/// Shape of an intersection type (or of a subtracted pinch configuration)
/// as seen by the equation builder.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeShape {
    pub rotations: u64,
    pub edges: usize,
    pub boundary_len: usize,
    pub deep_faces: Vec<(usize, usize)>,
}

/// Assembles the pattern-marked equation: plain class terms, one term for a
/// distinguished occurrence through the root edge, one term per intersection
/// type, and subtracted pinch configurations (see `itypes`).
pub fn build_pattern_equation(
    p: &Pattern,
    types: &[TypeShape],
    pinch_corrections: &[TypeShape],
    cls: MapClass,
) -> Result<PatternEquation> {
    if !p.every_edge_bounds_interior() {
        return Err(Error::Usage("every pattern edge must border an interior face".into()));
    }
    if !p.map().belongs_to(cls) {
        return Err(Error::Usage(format!("pattern is not a {cls} map")));
    }
    if cls == MapClass::TwoConnected && (!p.has_simple_boundary() || !pinch_corrections.is_empty()) {
        return Err(Error::Usage("two-connected patterns have a simple boundary".into()));
    }
    let mut terms = vec![EqTerm {
        sign: 1,
        multiplicity: p.rotations() as u64,
        x_power: 1,
        edges: p.edges(),
        boundary_len: p.boundary_len(),
        deep_faces: Vec::new(),
    }];
    for (sign, list) in [(1, types), (-1, pinch_corrections)] {
        for t in list {
            if t.edges < t.boundary_len {
                return Err(Error::Usage("type has fewer edges than boundary steps".into()));
            }
            terms.push(EqTerm {
                sign,
                multiplicity: t.rotations,
                x_power: 2,
                edges: t.edges,
                boundary_len: t.boundary_len,
                deep_faces: t.deep_faces.clone(),
            });
        }
    }
    let split = p.pinch_blocks().map(|blocks| {
        let pairs = if blocks[0].same_as(&blocks[1]) { vec![(0, 0)] } else { vec![(0, 1), (1, 0)] };
        let keep = if pairs.len() == 1 { 1 } else { 2 };
        PinchSplit {
            blocks: blocks[..keep]
                .iter()
                .map(|b| SplitBlock {
                    edges: b.pattern.edges(),
                    boundary_len: b.pattern.boundary_len(),
                    attach_rotations: b.attach_rotations,
                })
                .collect(),
            pairs,
        }
    });
    Ok(PatternEquation {
        cls,
        pattern_darts: p.map().darts(),
        terms,
        pinched: !p.has_simple_boundary(),
        split,
    })
}

/// u-exponent of a face of the given valency.
fn u_of(cls: MapClass, valency: usize) -> Option<usize> {
    match cls {
        MapClass::Bipartite => (valency % 2 == 0).then_some(valency / 2),
        _ => Some(valency),
    }
}

/// Smallest u-exponent of a root face of valency greater than `l`.
fn u_above(cls: MapClass, l: usize) -> usize {
    match cls {
        MapClass::Bipartite => l / 2 + 1,
        _ => l + 1,
    }
}

fn slot(v: &mut Vec<Option<NodeId>>, i: usize) -> &mut Option<NodeId> {
    if v.len() <= i {
        v.resize(i + 1, None);
    }
    &mut v[i]
}

/// Partial-boundary series `P_l` built on top of a base series node.
///
/// A map outside `P_l` is cut at the first repeated walk vertex `w_a` into a
/// part in `P_a` and a simple-boundary part hanging at `w_a`. A marked
/// occurrence pinched at `w_a` can have one side in each part; `span` counts
/// those so that they are not subtracted.
struct Boundary {
    cls: MapClass,
    base: NodeId,
    p: Vec<Option<NodeId>>,
    s: Vec<Option<NodeId>>,
    filler: Vec<Option<NodeId>>,
    span: Option<Box<Span>>,
}

/// Occurrences of each side of a pinched pattern at the root vertex, over
/// the unmarked base.
struct Span {
    plain: Boundary,
    blocks: Vec<SideSeries>,
    pairs: Vec<(usize, usize)>,
}

struct SideSeries {
    at_root: NodeId,
    p: Vec<Option<NodeId>>,
    s: Vec<Option<NodeId>>,
}

impl Span {
    /// `P_l` restricted to maps weighted by side occurrences at the root
    /// vertex. By reflection and re-rooting, the same series counts side
    /// occurrences at walk vertex `w_l`.
    fn p<C: Coeff>(&mut self, g: &mut Graph<C>, b: usize, l: usize) -> NodeId {
        if let Some(id) = *slot(&mut self.blocks[b].p, l) {
            return id;
        }
        let cls = self.plain.cls;
        let top = u_above(cls, l);
        let big = g.keep_u_from(self.blocks[b].at_root, top);
        let mut bad = Vec::new();
        for a in 0..l {
            for len in 1..=l - a {
                let Some(ul) = u_of(cls, len) else { continue };
                let s = self.plain.s(g, len);
                let pa = self.p(g, b, a);
                let shifted = g.shift_u(pa, ul as i64);
                let cut = g.keep_u_from(shifted, top);
                bad.push(g.mul(s, cut));
                if a == 0 {
                    // the hanging part shares the root vertex
                    let sv = self.s(g, b, len);
                    let p0 = self.plain.p(g, 0);
                    let shifted = g.shift_u(p0, ul as i64);
                    let cut = g.keep_u_from(shifted, top);
                    bad.push(g.mul(sv, cut));
                }
            }
        }
        let id = if bad.is_empty() {
            big
        } else {
            let sum = g.add(bad);
            g.sub(big, sum)
        };
        let id = g.assert_val(id, l.max(1));
        *slot(&mut self.blocks[b].p, l) = Some(id);
        id
    }

    fn s<C: Coeff>(&mut self, g: &mut Graph<C>, b: usize, len: usize) -> NodeId {
        if let Some(id) = *slot(&mut self.blocks[b].s, len) {
            return id;
        }
        let pl = self.p(g, b, len - 1);
        let ul = u_of(self.plain.cls, len).expect("odd simple boundary in bipartite class");
        let c = g.coeff_u(pl, ul);
        let id = g.assert_val(c, if len == 2 { 1 } else { len });
        *slot(&mut self.blocks[b].s, len) = Some(id);
        id
    }

    /// Occurrences with one side in the hanging part and the other in the
    /// `P_a` part, summed over the cuts that exclude a map from `P_l`.
    fn straddling<C: Coeff>(&mut self, g: &mut Graph<C>, l: usize) -> Option<NodeId> {
        let cls = self.plain.cls;
        let top = u_above(cls, l);
        let mut parts = Vec::new();
        for a in 0..l {
            for len in 1..=l - a {
                let Some(ul) = u_of(cls, len) else { continue };
                for (outer, inner) in self.pairs.clone() {
                    let sv = self.s(g, inner, len);
                    let pa = self.p(g, outer, a);
                    let shifted = g.shift_u(pa, ul as i64);
                    let cut = g.keep_u_from(shifted, top);
                    parts.push(g.mul(sv, cut));
                }
            }
        }
        (!parts.is_empty()).then(|| g.add(parts))
    }
}

impl Boundary {
    fn new(cls: MapClass, base: NodeId) -> Self {
        Boundary { cls, base, p: Vec::new(), s: Vec::new(), filler: Vec::new(), span: None }
    }

    /// Maps whose root face has valency above `l` and whose first `l` walk
    /// steps visit `l + 1` distinct vertices.
    fn p<C: Coeff>(&mut self, g: &mut Graph<C>, l: usize) -> NodeId {
        if let Some(id) = *slot(&mut self.p, l) {
            return id;
        }
        let top = u_above(self.cls, l);
        let big = g.keep_u_from(self.base, top);
        let mut id = if l == 0 {
            big
        } else {
            let mut bad = Vec::new();
            for a in 0..l {
                for len in 1..=l - a {
                    let Some(ul) = u_of(self.cls, len) else { continue };
                    let s = self.s(g, len);
                    let pa = self.p(g, a);
                    let shifted = g.shift_u(pa, ul as i64);
                    let cut = g.keep_u_from(shifted, top);
                    bad.push(g.mul(s, cut));
                }
            }
            if bad.is_empty() {
                big
            } else {
                let sum = g.add(bad);
                g.sub(big, sum)
            }
        };
        if let Some(span) = self.span.as_mut() {
            if let Some(extra) = span.straddling(g, l) {
                let marked = g.shift_x(extra, 1);
                id = g.sub(id, marked);
            }
        }
        let id = g.assert_val(id, l.max(1));
        *slot(&mut self.p, l) = Some(id);
        id
    }

    /// Maps with a simple boundary of length `len` (root face valency `len`).
    fn s<C: Coeff>(&mut self, g: &mut Graph<C>, len: usize) -> NodeId {
        if let Some(id) = *slot(&mut self.s, len) {
            return id;
        }
        let pl = self.p(g, len - 1);
        let ul = u_of(self.cls, len).expect("odd simple boundary in bipartite class");
        let c = g.coeff_u(pl, ul);
        // the lone bridge has a boundary of length 2 and a single edge
        let id = g.assert_val(c, if len == 2 { 1 } else { len });
        *slot(&mut self.s, len) = Some(id);
        id
    }

    /// Content of a deep face of valency `j`, per boundary edge removed:
    /// simple-boundary maps other than the single bridge, divided by `z^j`.
    fn filler<C: Coeff>(&mut self, g: &mut Graph<C>, j: usize) -> Result<NodeId> {
        if let Some(id) = *slot(&mut self.filler, j) {
            return Ok(id);
        }
        let s = self.s(g, j);
        let s = if j == 2 {
            let bridge = g.monomial(1, 1, 0, 0);
            let d = g.sub(s, bridge);
            g.assert_val(d, 2)
        } else {
            s
        };
        let id = g.shift_z(s, -(j as i64))?;
        *slot(&mut self.filler, j) = Some(id);
        Ok(id)
    }
}

/// Block sequences for two-connected maps: `[w^k]` of `S/(1-S)` where
/// `S = z u^2 w + (w N(u) - N(u w))/(1 - w)`.
struct Blocks {
    base: NodeId,
    s: Vec<Option<NodeId>>,
    e: Vec<Option<NodeId>>,
    filler: Vec<Option<NodeId>>,
}

impl Blocks {
    fn new(base: NodeId) -> Self {
        Blocks { base, s: Vec::new(), e: Vec::new(), filler: Vec::new() }
    }

    fn s<C: Coeff>(&mut self, g: &mut Graph<C>, k: usize) -> NodeId {
        if let Some(id) = *slot(&mut self.s, k) {
            return id;
        }
        let big = g.keep_u_from(self.base, k + 1);
        let id = if k == 1 {
            let edge = g.monomial(1, 1, 2, 0);
            g.add(vec![edge, big])
        } else {
            g.assert_val(big, k)
        };
        *slot(&mut self.s, k) = Some(id);
        id
    }

    fn e<C: Coeff>(&mut self, g: &mut Graph<C>, k: usize) -> NodeId {
        if let Some(id) = *slot(&mut self.e, k) {
            return id;
        }
        let id = if k == 0 {
            g.constant(Vec::new())
        } else {
            let mut parts = vec![self.s(g, k)];
            for i in 1..k {
                let si = self.s(g, i);
                let rest = self.e(g, k - i);
                parts.push(g.mul(si, rest));
            }
            let sum = g.add(parts);
            g.assert_val(sum, k)
        };
        *slot(&mut self.e, k) = Some(id);
        id
    }

    fn filler<C: Coeff>(&mut self, g: &mut Graph<C>, j: usize) -> Result<NodeId> {
        if let Some(id) = *slot(&mut self.filler, j) {
            return Ok(id);
        }
        let c = g.coeff_u(self.base, j);
        let c = g.assert_val(c, j);
        let id = g.shift_z(c, -(j as i64))?;
        *slot(&mut self.filler, j) = Some(id);
        Ok(id)
    }
}

/// Side occurrences at the root vertex satisfy the linear part of the class
/// equation: deleting a root edge outside the occurrence keeps it at the root
/// vertex, and an occurrence through the root edge contracts onto `P_(v-1)`.
fn side_series<C: Coeff>(
    g: &mut Graph<C>,
    cls: MapClass,
    f: NodeId,
    split: &PinchSplit,
    unknowns: &mut Vec<(NodeId, NodeId)>,
) -> Result<Span> {
    let f0 = g.coeff_x(f, 0);
    let mut plain = Boundary::new(cls, f0);
    let mut blocks = Vec::new();
    for b in &split.blocks {
        let v = g.var(1);
        let mut terms = Vec::new();
        let ushift = match cls {
            MapClass::All => {
                let prod = g.mul(v, f0);
                let prod = g.shift_u(prod, 2);
                terms.push(g.shift_z(prod, 1)?);
                let dd = g.divided_difference(v);
                let lin = g.add(vec![v, dd]);
                let lin = g.shift_u(lin, 1);
                terms.push(g.shift_z(lin, 1)?);
                b.boundary_len as i64 - 2
            }
            MapClass::Bipartite => {
                let prod = g.mul(v, f0);
                let prod = g.shift_u(prod, 1);
                terms.push(g.shift_z(prod, 1)?);
                let dd = g.divided_difference(v);
                let dd = g.shift_u(dd, 1);
                terms.push(g.shift_z(dd, 1)?);
                (b.boundary_len as i64 - 2) / 2
            }
            MapClass::TwoConnected => {
                return Err(Error::Usage("two-connected patterns have a simple boundary".into()));
            }
        };
        let core = plain.p(g, b.boundary_len - 1);
        let core = g.shift_u(core, -ushift);
        let core = g.shift_z(core, (b.edges - b.boundary_len + 1) as i64)?;
        terms.push(g.scale(core, b.attach_rotations as i64));
        let rhs = g.add(terms);
        g.define(v, rhs);
        unknowns.push((v, rhs));
        blocks.push(SideSeries { at_root: v, p: Vec::new(), s: Vec::new() });
    }
    Ok(Span { plain, blocks, pairs: split.pairs.clone() })
}

struct Built {
    unknowns: Vec<(NodeId, NodeId)>,
    main: NodeId,
}

fn build<C: Coeff>(g: &mut Graph<C>, eq: &PatternEquation) -> Result<Built> {
    let cls = eq.cls;
    let mut unknowns = Vec::new();
    let f = g.var(if cls == MapClass::TwoConnected { 2 } else { 0 });
    let mut rhs_terms = Vec::new();
    match cls {
        MapClass::All => {
            rhs_terms.push(g.monomial(1, 0, 0, 0));
            let sq = g.square(f);
            let sq = g.shift_u(sq, 2);
            rhs_terms.push(g.shift_z(sq, 1)?);
            let dd = g.divided_difference(f);
            let lin = g.add(vec![f, dd]);
            let lin = g.shift_u(lin, 1);
            rhs_terms.push(g.shift_z(lin, 1)?);
        }
        MapClass::Bipartite => {
            rhs_terms.push(g.monomial(1, 0, 0, 0));
            let sq = g.square(f);
            let sq = g.shift_u(sq, 1);
            rhs_terms.push(g.shift_z(sq, 1)?);
            let dd = g.divided_difference(f);
            let dd = g.shift_u(dd, 1);
            rhs_terms.push(g.shift_z(dd, 1)?);
        }
        MapClass::TwoConnected => {
            let y = g.var(1);
            let edge = g.monomial(1, 1, 1, 0);
            let dd = g.divided_difference(f);
            let f1 = g.eval_u1(f);
            let diff = g.sub(dd, f1);
            let d = g.add(vec![edge, diff]);
            let dy = g.mul(d, y);
            let yrhs = g.add(vec![d, dy]);
            g.define(y, yrhs);
            unknowns.push((y, yrhs));
            let yu = g.shift_u(y, 1);
            rhs_terms.push(g.shift_z(yu, 1)?);
        }
    }

    if !eq.terms.is_empty() {
        let mut boundary = Boundary::new(cls, f);
        if let Some(split) = eq.split.as_ref().filter(|_| g.nx >= 1) {
            boundary.span = Some(Box::new(side_series(g, cls, f, split, &mut unknowns)?));
        }
        let mut blocks = Blocks::new(f);
        for t in &eq.terms {
            if t.x_power > g.nx {
                continue;
            }
            let v = t.boundary_len;
            if v < 1 {
                return Err(Error::Usage("pattern term with empty boundary".into()));
            }
            let (core, ushift) = match cls {
                MapClass::TwoConnected => (blocks.e(g, v - 1), v as i64 - 2),
                MapClass::Bipartite => {
                    if v % 2 != 0 {
                        return Err(Error::Usage("bipartite term with odd boundary".into()));
                    }
                    (boundary.p(g, v - 1), (v as i64 - 2) / 2)
                }
                MapClass::All => (boundary.p(g, v - 1), v as i64 - 2),
            };
            let mut prod = core;
            for &(j, mult) in &t.deep_faces {
                let fill = match cls {
                    MapClass::TwoConnected => blocks.filler(g, j)?,
                    _ => {
                        if cls == MapClass::Bipartite && j % 2 != 0 {
                            return Err(Error::Usage("bipartite deep face of odd valency".into()));
                        }
                        boundary.filler(g, j)?
                    }
                };
                for _ in 0..mult {
                    prod = g.mul(prod, fill);
                }
            }
            let shifted = g.shift_u(prod, -ushift);
            let zs = g.shift_z(shifted, (t.edges - v + 1) as i64)?;
            let weight = t.sign * t.multiplicity as i64;
            let scaled = g.scale(zs, weight);
            rhs_terms.push(g.shift_x(scaled, t.x_power));
        }
    }
    let rhs = g.add(rhs_terms);
    g.define(f, rhs);
    unknowns.insert(0, (f, rhs));
    Ok(Built { unknowns, main: f })
}

fn solve_graph<C: Coeff>(eq: &PatternEquation, nz: usize, nx: usize) -> Result<Vec<Poly<C>>> {
    let mut g = Graph::<C>::new(nx);
    let built = build(&mut g, eq)?;
    let mut out = Vec::with_capacity(nz + 1);
    for n in 0..=nz {
        for &(var, _) in built.unknowns.iter().rev() {
            g.eval(var, n);
        }
        out.push((*g.eval(built.main, n)).clone());
        if let Some(e) = g.take_error() {
            return Err(e);
        }
    }
    Ok(out)
}

fn to_series(coeffs: Vec<PolyUX>, eq: &PatternEquation, nz: usize, nx: usize) -> Series3 {
    Series3::from_coeffs(coeffs, nz, nx).with_class(eq.cls)
}

/// Order-by-order solve over exact integers.
pub fn solve_exact(eq: &PatternEquation, nz: usize, nx: usize) -> Result<Series3> {
    Ok(to_series(solve_graph::<BigInt>(eq, nz, nx)?, eq, nz, nx))
}

macro_rules! dispatch_primes {
    ($($i:literal),*) => {
        fn solve_residues(i: usize, eq: &PatternEquation, nz: usize, nx: usize) -> Result<Vec<Vec<Vec<u64>>>> {
            match i {
                $($i => {
                    const P: u64 = PRIMES[$i];
                    let polys = solve_graph::<ModP<P>>(eq, nz, nx)?;
                    Ok(polys
                        .into_iter()
                        .map(|p| p.into_rows().into_iter().map(|r| r.into_iter().map(|c| c.0).collect()).collect())
                        .collect())
                })*
                _ => Err(Error::ResourceLimit("not enough primes for the requested precision".into())),
            }
        }
    };
}

dispatch_primes!(
    0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28,
    29, 30, 31, 32, 33, 34, 35, 36, 37, 38, 39, 40, 41, 42, 43, 44, 45, 46, 47, 48, 49, 50, 51, 52, 53, 54, 55,
    56, 57, 58, 59, 60, 61, 62, 63
);

/// Bits needed for `[z^n x^k]` coefficients: at most `12^n` maps, each with
/// at most `(2n)^d` occurrences for a pattern with `d` darts.
fn coefficient_bits(eq: &PatternEquation, nz: usize, nx: usize) -> f64 {
    let per_occ = (eq.pattern_darts.max(1) as f64) * ((2 * nz + 2) as f64).log2();
    nz as f64 * 12f64.log2() + nx as f64 * per_occ + 4.0
}

/// Solves modulo several primes in parallel and recombines; one extra prime
/// checks the reconstruction.
pub fn solve_modular(eq: &PatternEquation, nz: usize, nx: usize) -> Result<Series3> {
    let bits = coefficient_bits(eq, nz, nx);
    let k = (bits / 30.0).ceil() as usize + 1;
    if k + 1 > PRIMES.len() {
        return Err(Error::ResourceLimit(format!("Nz={nz}, Nx={nx} needs {k} primes")));
    }
    let residues: Vec<Vec<Vec<Vec<u64>>>> =
        (0..=k).into_par_iter().map(|i| solve_residues(i, eq, nz, nx)).collect::<Result<_>>()?;
    let crt = Crt::new(&PRIMES[..k]);
    let check = PRIMES[k];
    let mut coeffs = Vec::with_capacity(nz + 1);
    let mut buf = vec![0u64; k];
    for n in 0..=nz {
        let xlen = residues.iter().map(|r| r[n].len()).max().unwrap_or(0);
        let mut rows = Vec::with_capacity(xlen);
        for x in 0..xlen {
            let ulen = residues.iter().map(|r| r[n].get(x).map_or(0, Vec::len)).max().unwrap_or(0);
            let mut row = Vec::with_capacity(ulen);
            for u in 0..ulen {
                let get = |i: usize| residues[i][n].get(x).and_then(|r| r.get(u)).copied().unwrap_or(0);
                for (i, b) in buf.iter_mut().enumerate() {
                    *b = get(i);
                }
                let v = crt.combine(&buf);
                let m = BigInt::from(check);
                let r = ((&v % &m) + &m) % &m;
                if r.to_u64() != Some(get(k)) {
                    return Err(Error::Internal(format!("modular reconstruction failed at z^{n} u^{u} x^{x}")));
                }
                row.push(v);
            }
            rows.push(row);
        }
        coeffs.push(Poly::from_rows(rows));
    }
    Ok(to_series(coeffs, eq, nz, nx))
}

/// Picks the exact route for small truncations and the modular one otherwise.
pub fn solve_pattern_equation(eq: &PatternEquation, nz: usize, nx: usize) -> Result<Series3> {
    if nz <= 24 {
        solve_exact(eq, nz, nx)
    } else {
        solve_modular(eq, nz, nx)
    }
}

/// Floating-point solve with `z` rescaled by `FLOAT_SCALE`; returns the
/// first three x-layers at `u = 1`. Meant for growth estimates from a few
/// hundred coefficients, where the exact routes are too slow.
pub fn solve_float(eq: &PatternEquation, nz: usize, nx: usize) -> Result<ScaledCoefficients> {
    let polys = solve_graph::<Scaled>(eq, nz, nx)?;
    let layer = |k: usize| -> Vec<f64> { polys.iter().map(|p| p.eval_u1().get(0, k).0).collect() };
    Ok(ScaledCoefficients { scale: FLOAT_SCALE, a: layer(0), b: layer(1), c: layer(2) })
}

pub fn solve_tutte(cls: MapClass, nz: usize) -> Result<Series3> {
    solve_pattern_equation(&PatternEquation::plain(cls), nz, 0)
}

/// Plain fixed-point iteration `F_{t+1} = RHS(F_t)` from the constant term,
/// with every right-hand side evaluated in full. Slow; used as an
/// independent check of the order-by-order solver.
pub fn solve_by_iteration(eq: &PatternEquation, nz: usize, nx: usize) -> Result<Series3> {
    let probe = {
        let mut g = Graph::<BigInt>::new(nx);
        build(&mut g, eq)?.unknowns.len()
    };
    let mut current: Vec<Vec<PolyUX>> = vec![Vec::new(); probe];
    let max_iter = 2 * (nz + 1) * probe + 4;
    for _ in 0..max_iter {
        let mut g = Graph::<BigInt>::new(nx);
        let built = build(&mut g, eq)?;
        for (i, &(var, _)) in built.unknowns.iter().enumerate() {
            g.fix(var, current[i].clone());
        }
        let next: Vec<Vec<PolyUX>> = built
            .unknowns
            .iter()
            .map(|&(_, rhs)| (0..=nz).map(|n| (*g.eval(rhs, n)).clone()).collect())
            .collect();
        if let Some(e) = g.take_error() {
            return Err(e);
        }
        let padded: Vec<Vec<PolyUX>> = current
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.resize(nz + 1, PolyUX::zero());
                c
            })
            .collect();
        if padded == next {
            return Ok(to_series(next.into_iter().next().unwrap(), eq, nz, nx));
        }
        current = next;
    }
    Err(Error::Internal("fixed-point iteration did not stabilize".into()))
}

fn const_graph(base: &Series3) -> (Graph<BigInt>, NodeId) {
    let mut g = Graph::<BigInt>::new(base.nx());
    let f = g.constant(base.coeffs().to_vec());
    (g, f)
}

fn collect(g: &Graph<BigInt>, id: NodeId, nz: usize, nx: usize) -> Result<Series3> {
    let coeffs = (0..=nz).map(|n| (*g.eval(id, n)).clone()).collect();
    if let Some(e) = g.take_error() {
        return Err(e);
    }
    Ok(Series3::from_coeffs(coeffs, nz, nx))
}

/// `P_i` over a solved base series (general or bipartite maps).
pub fn partial_boundary_series(i: usize, cls: MapClass, base: &Series3) -> Result<Series3> {
    if cls == MapClass::TwoConnected {
        return Err(Error::Usage("partial boundaries are defined for general and bipartite maps".into()));
    }
    let (mut g, f) = const_graph(base);
    let mut b = Boundary::new(cls, f);
    let p = b.p(&mut g, i);
    collect(&g, p, base.nz(), base.nx())
}

/// `[w^(b-2)]` of the block-sequence series over a two-connected base.
pub fn sequence_block_extract(n_series: &Series3, b: usize) -> Result<Series3> {
    if b < 2 {
        return Err(Error::Usage("block extraction needs b >= 2".into()));
    }
    let (mut g, f) = const_graph(n_series);
    let mut blocks = Blocks::new(f);
    let e = blocks.e(&mut g, b - 2);
    collect(&g, e, n_series.nz(), n_series.nx())
}
