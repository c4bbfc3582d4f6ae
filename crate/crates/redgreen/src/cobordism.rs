//! Morphisms of the dotted cobordism categories: formal dyadic-linear
//! combinations of decorated surfaces between smoothings, reduced to a
//! canonical normal form by the local relations
//!
//!   sphere = 0,   dotted sphere = 1,   double dot = delta,
//!   tube = dotted sheet + sheet with the dot on the other side,
//!
//! with delta = 0 for the Khovanov theory and delta = 1 for the Lee theory.
//! In normal form every component is a genus-zero piece with exactly one
//! boundary circle and at most one dot; equality of morphisms is then just
//! structural equality of the term maps.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde_json::json;

use crate::diagram::EdgeId;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::smoothing::{Curve, Smoothing};

/// Which local relation holds for two dots on one component.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Theory {
    Khovanov,
    Lee,
}

impl Theory {
    pub fn delta(self) -> u32 {
        match self {
            Theory::Khovanov => 0,
            Theory::Lee => 1,
        }
    }
}

/// A curve of the source or the target smoothing of a cobordism.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum CurveRef {
    Src(usize),
    Tgt(usize),
}

impl CurveRef {
    fn resolve<'a>(&self, src: &'a Smoothing, tgt: &'a Smoothing) -> &'a Curve {
        match *self {
            CurveRef::Src(i) => &src.curves()[i],
            CurveRef::Tgt(i) => &tgt.curves()[i],
        }
    }
}

/// One connected component of a cobordism: the boundary curves it meets,
/// its genus and its dot count.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct CobComp {
    pub curves: BTreeSet<CurveRef>,
    pub genus: u32,
    pub dots: u32,
}

impl CobComp {
    pub fn new(curves: impl IntoIterator<Item = CurveRef>, genus: u32, dots: u32) -> CobComp {
        CobComp { curves: curves.into_iter().collect(), genus, dots }
    }
}

/// A closed component, carrying no boundary curves.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ClosedComp {
    pub genus: u32,
    pub dots: u32,
}

/// A single decorated cobordism between two smoothings.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct CobGenerator {
    pub comps: Vec<CobComp>,
    pub closed: Vec<ClosedComp>,
}

impl CobGenerator {
    pub fn new(mut comps: Vec<CobComp>, mut closed: Vec<ClosedComp>) -> CobGenerator {
        comps.sort();
        closed.sort();
        CobGenerator { comps, closed }
    }

    /// Every curve covered exactly once, and curves sharing a boundary point
    /// lie on the same component.
    fn validate(&self, src: &Smoothing, tgt: &Smoothing) -> Result<()> {
        let mut seen: BTreeSet<CurveRef> = BTreeSet::new();
        for comp in &self.comps {
            for &c in &comp.curves {
                if !seen.insert(c) {
                    return Err(Error::Mismatch(format!("curve {c:?} used twice")));
                }
                match c {
                    CurveRef::Src(i) if i < src.len() => {}
                    CurveRef::Tgt(i) if i < tgt.len() => {}
                    _ => return Err(Error::Mismatch(format!("curve {c:?} out of range"))),
                }
            }
        }
        if seen.len() != src.len() + tgt.len() {
            return Err(Error::Mismatch("component partition must cover all curves".into()));
        }
        // endpoint closure through the vertical walls
        let mut comp_of: BTreeMap<CurveRef, usize> = BTreeMap::new();
        for (i, comp) in self.comps.iter().enumerate() {
            for &c in &comp.curves {
                comp_of.insert(c, i);
            }
        }
        for leg in src.boundary() {
            let s = CurveRef::Src(arc_with_end(src, leg)?);
            let t = CurveRef::Tgt(arc_with_end(tgt, leg)?);
            if comp_of[&s] != comp_of[&t] {
                return Err(Error::Mismatch(format!(
                    "curves at boundary point {leg} lie on different components"
                )));
            }
        }
        Ok(())
    }
}

fn arc_with_end(s: &Smoothing, leg: EdgeId) -> Result<usize> {
    s.curves()
        .iter()
        .position(|c| c.ends.map(|e| e.contains(&leg)).unwrap_or(false))
        .ok_or_else(|| Error::Mismatch(format!("no arc ends at boundary point {leg}")))
}

/// Number of boundary circles of a component: one per closed curve, plus one
/// per cycle of arcs joined through the vertical walls at shared boundary
/// points.
fn boundary_circles(comp: &CobComp, src: &Smoothing, tgt: &Smoothing) -> usize {
    let mut n = 0usize;
    let mut legs: BTreeMap<EdgeId, usize> = BTreeMap::new();
    let mut uf: Vec<usize> = Vec::new();
    let mut adj: Vec<(usize, usize)> = Vec::new();
    let mut arc_count = 0usize;
    for &cr in &comp.curves {
        let curve = cr.resolve(src, tgt);
        match curve.ends {
            None => n += 1,
            Some([p, q]) => {
                let mut node = |leg: EdgeId, uf: &mut Vec<usize>| -> usize {
                    *legs.entry(leg).or_insert_with(|| {
                        uf.push(uf.len());
                        uf.len() - 1
                    })
                };
                let a = node(p, &mut uf);
                let b = node(q, &mut uf);
                adj.push((a, b));
                arc_count += 1;
            }
        }
    }
    if arc_count == 0 {
        return n;
    }
    fn find(uf: &mut Vec<usize>, x: usize) -> usize {
        if uf[x] == x {
            x
        } else {
            let r = find(uf, uf[x]);
            uf[x] = r;
            r
        }
    }
    for (a, b) in adj {
        let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
        if ra != rb {
            uf[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut roots = BTreeSet::new();
    for i in 0..uf.len() {
        roots.insert(find(&mut uf, i));
    }
    n + roots.len()
}

fn euler_char(comp: &CobComp, src: &Smoothing, tgt: &Smoothing) -> i64 {
    2 - 2 * comp.genus as i64 - boundary_circles(comp, src, tgt) as i64
}

/// A formal linear combination of cobordisms in normal form.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CobMorphism {
    theory: Theory,
    src: Smoothing,
    tgt: Smoothing,
    terms: BTreeMap<CobGenerator, Dyadic>,
}

impl CobMorphism {
    pub fn zero(src: Smoothing, tgt: Smoothing, theory: Theory) -> CobMorphism {
        CobMorphism { theory, src, tgt, terms: BTreeMap::new() }
    }

    pub fn theory(&self) -> Theory {
        self.theory
    }

    /// Build from raw generator terms, normalizing everything.
    pub fn new(
        src: Smoothing,
        tgt: Smoothing,
        raw: Vec<(Dyadic, CobGenerator)>,
        theory: Theory,
    ) -> Result<CobMorphism> {
        let mut m = CobMorphism::zero(src, tgt, theory);
        for (coeff, gen) in raw {
            gen.validate(&m.src, &m.tgt)?;
            for (c, g) in normalize_terms(coeff, gen, &m.src, &m.tgt, theory, None) {
                m.push(c, g);
            }
        }
        Ok(m)
    }

    pub fn from_generator(
        src: Smoothing,
        tgt: Smoothing,
        gen: CobGenerator,
        theory: Theory,
    ) -> Result<CobMorphism> {
        CobMorphism::new(src, tgt, vec![(Dyadic::ONE, gen)], theory)
    }

    /// The identity cobordism of `s`, in normal form. Curtains over circles
    /// decompose under neck-cutting, so this may have several terms.
    pub fn identity(s: &Smoothing, theory: Theory) -> CobMorphism {
        let comps = (0..s.len())
            .map(|i| CobComp::new([CurveRef::Src(i), CurveRef::Tgt(i)], 0, 0))
            .collect();
        CobMorphism::from_generator(s.clone(), s.clone(), CobGenerator::new(comps, vec![]), theory)
            .expect("identity is well formed")
    }

    fn push(&mut self, coeff: Dyadic, gen: CobGenerator) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.get_mut(&gen) {
            Some(entry) => {
                *entry = *entry + coeff;
                if entry.is_zero() {
                    self.terms.remove(&gen);
                }
            }
            None => {
                self.terms.insert(gen, coeff);
            }
        }
    }

    pub fn src(&self) -> &Smoothing {
        &self.src
    }

    pub fn tgt(&self) -> &Smoothing {
        &self.tgt
    }

    pub fn terms(&self) -> impl Iterator<Item = (&CobGenerator, &Dyadic)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, s: Dyadic) -> CobMorphism {
        if s.is_zero() {
            return CobMorphism::zero(self.src.clone(), self.tgt.clone(), self.theory);
        }
        CobMorphism {
            theory: self.theory,
            src: self.src.clone(),
            tgt: self.tgt.clone(),
            terms: self.terms.iter().map(|(g, c)| (g.clone(), *c * s)).collect(),
        }
    }

    pub fn add(&self, rhs: &CobMorphism) -> Result<CobMorphism> {
        if self.src != rhs.src || self.tgt != rhs.tgt || self.theory != rhs.theory {
            return Err(Error::Mismatch("sum of morphisms with different shapes".into()));
        }
        let mut out = self.clone();
        for (g, c) in &rhs.terms {
            out.push(*c, g.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &CobMorphism) -> Result<CobMorphism> {
        self.add(&rhs.scale(-Dyadic::ONE))
    }

    /// Vertical composition: `self` followed by `then`, gluing along the
    /// middle smoothing.
    pub fn then(&self, next: &CobMorphism) -> Result<CobMorphism> {
        if self.tgt != next.src || self.theory != next.theory {
            return Err(Error::Mismatch(
                "composition requires target(f) = source(g) in one theory".into(),
            ));
        }
        let mid = &self.tgt;
        let mut out = CobMorphism::zero(self.src.clone(), next.tgt.clone(), self.theory);
        for (gf, cf) in &self.terms {
            for (gh, ch) in &next.terms {
                let glued = glue_vertical(gf, gh, &self.src, mid, &next.tgt);
                for (c, g) in
                    normalize_terms(*cf * *ch, glued, &self.src, &next.tgt, self.theory, None)
                {
                    out.push(c, g);
                }
            }
        }
        Ok(out)
    }

    /// Scalar of a closed morphism (empty source and target).
    pub fn evaluate_closed(&self) -> Result<Dyadic> {
        if !self.src.is_empty() || !self.tgt.is_empty() {
            return Err(Error::Mismatch(
                "evaluate_closed needs an endomorphism of the empty smoothing".into(),
            ));
        }
        let mut total = Dyadic::ZERO;
        for (g, c) in &self.terms {
            debug_assert!(g.comps.is_empty() && g.closed.is_empty());
            total += *c;
        }
        Ok(total)
    }

    /// Disjoint union (side-by-side placement without joins).
    pub fn disjoint_union(&self, rhs: &CobMorphism) -> Result<CobMorphism> {
        if self.theory != rhs.theory {
            return Err(Error::Mismatch("disjoint union across theories".into()));
        }
        let (src, src_map_l, src_map_r) = union_smoothings(&self.src, &rhs.src)?;
        let (tgt, tgt_map_l, tgt_map_r) = union_smoothings(&self.tgt, &rhs.tgt)?;
        let remap = |gen: &CobGenerator, src_map: &[usize], tgt_map: &[usize]| -> Vec<CobComp> {
            gen.comps
                .iter()
                .map(|comp| CobComp {
                    curves: comp
                        .curves
                        .iter()
                        .map(|&c| match c {
                            CurveRef::Src(i) => CurveRef::Src(src_map[i]),
                            CurveRef::Tgt(i) => CurveRef::Tgt(tgt_map[i]),
                        })
                        .collect(),
                    genus: comp.genus,
                    dots: comp.dots,
                })
                .collect()
        };
        let mut out = CobMorphism::zero(src, tgt, self.theory);
        for (gl, cl) in &self.terms {
            for (gr, cr) in &rhs.terms {
                let mut comps = remap(gl, &src_map_l, &tgt_map_l);
                comps.extend(remap(gr, &src_map_r, &tgt_map_r));
                let mut closed = gl.closed.clone();
                closed.extend(gr.closed.iter().copied());
                out.push(*cl * *cr, CobGenerator::new(comps, closed));
            }
        }
        Ok(out)
    }

    /// Horizontal composition: contract pairs of boundary points, gluing the
    /// vertical walls above them.
    pub fn contract(&self, joins: &[(EdgeId, EdgeId)]) -> Result<CobMorphism> {
        if joins.is_empty() {
            return Ok(self.clone());
        }
        let (new_src, src_map) = contract_smoothing(&self.src, joins)?;
        let (new_tgt, tgt_map) = contract_smoothing(&self.tgt, joins)?;
        let mut out = CobMorphism::zero(new_src.clone(), new_tgt.clone(), self.theory);
        for (gen, coeff) in &self.terms {
            let glued = glue_horizontal(
                gen, &self.src, &self.tgt, joins, &src_map, &tgt_map, &new_src, &new_tgt,
            )?;
            for (c, g) in normalize_terms(*coeff, glued, &new_src, &new_tgt, self.theory, None) {
                out.push(c, g);
            }
        }
        Ok(out)
    }

    /// Planar composition under an arc diagram: place the inputs side by
    /// side and contract the prescribed pairs of boundary points.
    pub fn planar_compose(
        morphisms: &[&CobMorphism],
        joins: &[(EdgeId, EdgeId)],
        theory: Theory,
    ) -> Result<CobMorphism> {
        let mut acc = match morphisms.split_first() {
            Some((first, rest)) => {
                let mut acc = (*first).clone();
                for m in rest {
                    acc = acc.disjoint_union(m)?;
                }
                acc
            }
            None => {
                let e = Smoothing::empty();
                let mut m = CobMorphism::zero(e.clone(), e, theory);
                m.push(Dyadic::ONE, CobGenerator::new(vec![], vec![]));
                m
            }
        };
        if acc.theory != theory {
            return Err(Error::Mismatch("planar composition across theories".into()));
        }
        acc = acc.contract(joins)?;
        Ok(acc)
    }

    /// Invertible entries are unit multiples of the identity; their normal
    /// forms are compared directly.
    pub fn try_inverse(&self) -> Option<CobMorphism> {
        if self.src != self.tgt || self.is_zero() {
            return None;
        }
        let id = CobMorphism::identity(&self.src, self.theory);
        let (g0, c0) = id.terms.iter().next()?;
        let ratio = *self.terms.get(g0)?;
        let u = ratio.checked_div(c0)?;
        if !u.is_unit() {
            return None;
        }
        if *self == id.scale(u) {
            Some(id.scale(u.inverse().unwrap()))
        } else {
            None
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<_> = self
            .terms
            .iter()
            .map(|(g, c)| {
                let comps: Vec<_> = g
                    .comps
                    .iter()
                    .map(|comp| {
                        let curves: Vec<String> = comp
                            .curves
                            .iter()
                            .map(|cr| match cr {
                                CurveRef::Src(i) => {
                                    format!("src:{}", self.src.curves()[*i].label())
                                }
                                CurveRef::Tgt(i) => {
                                    format!("tgt:{}", self.tgt.curves()[*i].label())
                                }
                            })
                            .collect();
                        json!({"boundary_curves": curves, "dots": comp.dots})
                    })
                    .collect();
                json!({"coeff": c.to_string(), "components": comps})
            })
            .collect();
        serde_json::Value::Array(terms)
    }
}

impl fmt::Display for CobMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(g, c)| {
                let comps: Vec<String> = g
                    .comps
                    .iter()
                    .map(|comp| {
                        format!(
                            "[{}{}]",
                            comp.curves.len(),
                            if comp.dots > 0 { "." } else { "" }
                        )
                    })
                    .collect();
                format!("{c}*{}", comps.join(""))
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

fn union_smoothings(a: &Smoothing, b: &Smoothing) -> Result<(Smoothing, Vec<usize>, Vec<usize>)> {
    let edges_a: BTreeSet<EdgeId> = a.curves().iter().flat_map(|c| c.edges.clone()).collect();
    if b.curves().iter().any(|c| c.edges.iter().any(|e| edges_a.contains(e))) {
        return Err(Error::Mismatch("disjoint union requires disjoint edge labels".into()));
    }
    let mut curves = a.curves().to_vec();
    curves.extend(b.curves().iter().cloned());
    let s = Smoothing::new(curves);
    let map_a = a.curves().iter().map(|c| s.curve_index(c)).collect();
    let map_b = b.curves().iter().map(|c| s.curve_index(c)).collect();
    Ok((s, map_a, map_b))
}

/// Contract boundary-point pairs on a smoothing; returns the new smoothing
/// and the old-curve to new-curve index map.
pub(crate) fn contract_smoothing(
    s: &Smoothing,
    joins: &[(EdgeId, EdgeId)],
) -> Result<(Smoothing, Vec<usize>)> {
    let n = s.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        if p[x] == x {
            x
        } else {
            let r = find(p, p[x]);
            p[x] = r;
            r
        }
    }
    let mut joined_legs: BTreeSet<EdgeId> = BTreeSet::new();
    for &(a, b) in joins {
        if a == b || !joined_legs.insert(a) || !joined_legs.insert(b) {
            return Err(Error::Mismatch("joins must pair distinct boundary points".into()));
        }
        let ia = arc_with_end(s, a)?;
        let ib = arc_with_end(s, b)?;
        let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut new_curves: Vec<Curve> = Vec::new();
    let mut group_curve: BTreeMap<usize, Curve> = BTreeMap::new();
    for (&root, members) in &groups {
        let touched = members.iter().any(|&i| {
            s.curves()[i]
                .ends
                .map(|e| e.iter().any(|leg| joined_legs.contains(leg)))
                .unwrap_or(false)
        });
        if !touched {
            let c = s.curves()[members[0]].clone();
            debug_assert_eq!(members.len(), 1);
            group_curve.insert(root, c.clone());
            new_curves.push(c);
            continue;
        }
        let mut edges: Vec<EdgeId> = Vec::new();
        let mut free_ends: Vec<EdgeId> = Vec::new();
        for &i in members {
            let c = &s.curves()[i];
            edges.extend(c.edges.iter().copied());
            if let Some(ends) = c.ends {
                for e in ends {
                    if !joined_legs.contains(&e) {
                        free_ends.push(e);
                    }
                }
            }
        }
        let curve = match free_ends.len() {
            0 => Curve::circle(edges),
            2 => Curve::arc([free_ends[0], free_ends[1]], edges),
            k => {
                return Err(Error::Mismatch(format!(
                    "contraction left {k} free ends on one curve"
                )))
            }
        };
        group_curve.insert(root, curve.clone());
        new_curves.push(curve);
    }
    let out = Smoothing::new(new_curves);
    let map = (0..n)
        .map(|i| {
            let r = find(&mut parent, i);
            out.curve_index(&group_curve[&r])
        })
        .collect();
    Ok((out, map))
}

/// Glue two generators along the middle smoothing. The result is a raw
/// generator over (src of f, tgt of h); genus comes from an Euler
/// characteristic count.
fn glue_vertical(
    f: &CobGenerator,
    h: &CobGenerator,
    src: &Smoothing,
    mid: &Smoothing,
    tgt: &Smoothing,
) -> CobGenerator {
    let nf = f.comps.len();
    let n = nf + h.comps.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        if p[x] == x {
            x
        } else {
            let r = find(p, p[x]);
            p[x] = r;
            r
        }
    }
    fn union(p: &mut Vec<usize>, a: usize, b: usize) {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p[ra.max(rb)] = ra.min(rb);
        }
    }

    let f_comp_of_mid: Vec<usize> = (0..mid.len())
        .map(|k| {
            f.comps
                .iter()
                .position(|c| c.curves.contains(&CurveRef::Tgt(k)))
                .expect("middle curve on an f component")
        })
        .collect();
    let h_comp_of_mid: Vec<usize> = (0..mid.len())
        .map(|k| {
            h.comps
                .iter()
                .position(|c| c.curves.contains(&CurveRef::Src(k)))
                .expect("middle curve on an h component")
        })
        .collect();
    for k in 0..mid.len() {
        union(&mut parent, f_comp_of_mid[k], nf + h_comp_of_mid[k]);
    }

    // chi of every piece in its own world
    let chi_f: Vec<i64> = f.comps.iter().map(|c| euler_char(c, src, mid)).collect();
    let chi_h: Vec<i64> = h.comps.iter().map(|c| euler_char(c, mid, tgt)).collect();

    let mut cluster_curves: BTreeMap<usize, BTreeSet<CurveRef>> = BTreeMap::new();
    let mut cluster_chi: BTreeMap<usize, i64> = BTreeMap::new();
    let mut cluster_dots: BTreeMap<usize, u32> = BTreeMap::new();
    for (i, comp) in f.comps.iter().enumerate() {
        let r = find(&mut parent, i);
        let entry = cluster_curves.entry(r).or_default();
        for &c in &comp.curves {
            if let CurveRef::Src(_) = c {
                entry.insert(c);
            }
        }
        *cluster_chi.entry(r).or_insert(0) += chi_f[i];
        *cluster_dots.entry(r).or_insert(0) += comp.dots;
    }
    for (j, comp) in h.comps.iter().enumerate() {
        let r = find(&mut parent, nf + j);
        let entry = cluster_curves.entry(r).or_default();
        for &c in &comp.curves {
            if let CurveRef::Tgt(_) = c {
                entry.insert(c);
            }
        }
        *cluster_chi.entry(r).or_insert(0) += chi_h[j];
        *cluster_dots.entry(r).or_insert(0) += comp.dots;
    }
    // gluing along a middle arc removes an interval from the boundary
    for k in 0..mid.len() {
        if !mid.curves()[k].is_circle() {
            let r = find(&mut parent, f_comp_of_mid[k]);
            *cluster_chi.get_mut(&r).unwrap() -= 1;
        }
    }

    let mut comps = Vec::new();
    let mut closed: Vec<ClosedComp> = f.closed.clone();
    closed.extend(h.closed.iter().copied());
    for (r, curves) in cluster_curves {
        let chi = cluster_chi[&r];
        let dots = cluster_dots[&r];
        if curves.is_empty() {
            let genus = (2 - chi) / 2;
            assert!(genus >= 0 && (2 - chi) % 2 == 0, "bad closed gluing chi={chi}");
            closed.push(ClosedComp { genus: genus as u32, dots });
        } else {
            let tmp = CobComp { curves, genus: 0, dots };
            let b = boundary_circles(&tmp, src, tgt) as i64;
            let genus = (2 - b - chi) / 2;
            assert!(genus >= 0 && (2 - b - chi) % 2 == 0, "bad gluing chi={chi} b={b}");
            comps.push(CobComp { genus: genus as u32, ..tmp });
        }
    }
    CobGenerator::new(comps, closed)
}

/// Glue the vertical walls over joined boundary-point pairs of a single
/// generator.
#[allow(clippy::too_many_arguments)]
fn glue_horizontal(
    gen: &CobGenerator,
    src: &Smoothing,
    tgt: &Smoothing,
    joins: &[(EdgeId, EdgeId)],
    src_map: &[usize],
    tgt_map: &[usize],
    new_src: &Smoothing,
    new_tgt: &Smoothing,
) -> Result<CobGenerator> {
    let n = gen.comps.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        if p[x] == x {
            x
        } else {
            let r = find(p, p[x]);
            p[x] = r;
            r
        }
    }
    let comp_of_leg = |leg: EdgeId| -> Result<usize> {
        let i = arc_with_end(src, leg)?;
        gen.comps
            .iter()
            .position(|c| c.curves.contains(&CurveRef::Src(i)))
            .ok_or_else(|| Error::Mismatch("leg not covered".into()))
    };
    for &(a, b) in joins {
        let (ca, cb) = (comp_of_leg(a)?, comp_of_leg(b)?);
        let (ra, rb) = (find(&mut parent, ca), find(&mut parent, cb));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut cluster_curves: BTreeMap<usize, BTreeSet<CurveRef>> = BTreeMap::new();
    let mut cluster_chi: BTreeMap<usize, i64> = BTreeMap::new();
    let mut cluster_dots: BTreeMap<usize, u32> = BTreeMap::new();
    for (i, comp) in gen.comps.iter().enumerate() {
        let r = find(&mut parent, i);
        let entry = cluster_curves.entry(r).or_default();
        for &c in &comp.curves {
            entry.insert(match c {
                CurveRef::Src(k) => CurveRef::Src(src_map[k]),
                CurveRef::Tgt(k) => CurveRef::Tgt(tgt_map[k]),
            });
        }
        *cluster_chi.entry(r).or_insert(0) += euler_char(comp, src, tgt);
        *cluster_dots.entry(r).or_insert(0) += comp.dots;
    }
    for &(a, _) in joins {
        let r = find(&mut parent, comp_of_leg(a)?);
        *cluster_chi.get_mut(&r).unwrap() -= 1;
    }
    let mut comps = Vec::new();
    for (r, curves) in cluster_curves {
        let chi = cluster_chi[&r];
        let dots = cluster_dots[&r];
        assert!(!curves.is_empty(), "horizontal gluing cannot close a component");
        let tmp = CobComp { curves, genus: 0, dots };
        let b = boundary_circles(&tmp, new_src, new_tgt) as i64;
        let genus = (2 - b - chi) / 2;
        assert!(genus >= 0 && (2 - b - chi) % 2 == 0, "bad wall gluing chi={chi} b={b}");
        comps.push(CobComp { genus: genus as u32, ..tmp });
    }
    Ok(CobGenerator::new(comps, gen.closed.clone()))
}

/// The boundary-circle classes of a component: each class is the set of
/// curves lying on one boundary circle.
fn circle_classes(comp: &CobComp, src: &Smoothing, tgt: &Smoothing) -> Vec<BTreeSet<CurveRef>> {
    let mut classes: Vec<BTreeSet<CurveRef>> = Vec::new();
    let mut arc_legs: BTreeMap<EdgeId, Vec<CurveRef>> = BTreeMap::new();
    let mut arcs: Vec<CurveRef> = Vec::new();
    for &cr in &comp.curves {
        let curve = cr.resolve(src, tgt);
        match curve.ends {
            None => classes.push([cr].into_iter().collect()),
            Some([p, q]) => {
                arc_legs.entry(p).or_default().push(cr);
                arc_legs.entry(q).or_default().push(cr);
                arcs.push(cr);
            }
        }
    }
    let mut parent: BTreeMap<CurveRef, CurveRef> = arcs.iter().map(|&a| (a, a)).collect();
    fn find(p: &mut BTreeMap<CurveRef, CurveRef>, x: CurveRef) -> CurveRef {
        let px = p[&x];
        if px == x {
            x
        } else {
            let r = find(p, px);
            p.insert(x, r);
            r
        }
    }
    for refs in arc_legs.values() {
        debug_assert_eq!(refs.len(), 2, "each leg touched by one source and one target arc");
        let (ra, rb) = (find(&mut parent, refs[0]), find(&mut parent, refs[1]));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent.insert(hi, lo);
        }
    }
    let mut arc_class: BTreeMap<CurveRef, usize> = BTreeMap::new();
    for &a in &arcs {
        let r = find(&mut parent, a);
        let idx = *arc_class.entry(r).or_insert_with(|| {
            classes.push(BTreeSet::new());
            classes.len() - 1
        });
        classes[idx].insert(a);
    }
    classes
}

/// Reduce `coeff * gen` to normal form. The deterministic strategy applies
/// the first available move; passing an rng instead picks moves at random,
/// which is how the confluence tests exercise order independence.
fn normalize_terms(
    coeff: Dyadic,
    gen: CobGenerator,
    src: &Smoothing,
    tgt: &Smoothing,
    theory: Theory,
    mut rng: Option<&mut dyn rand::RngCore>,
) -> Vec<(Dyadic, CobGenerator)> {
    let delta = theory.delta();
    let mut done = Vec::new();
    let mut work = vec![(coeff, gen)];
    'outer: while let Some((mut c, mut g)) = work.pop() {
        if c.is_zero() {
            continue;
        }
        // closed components evaluate to scalars
        while let Some(cc) = g.closed.pop() {
            let mut dots = cc.dots + cc.genus;
            c *= Dyadic::pow2(cc.genus as i32);
            if delta == 1 {
                dots %= 2;
            }
            if dots != 1 {
                continue 'outer; // sphere or a dead double dot
            }
        }

        #[derive(Clone, Copy)]
        enum Move {
            Genus(usize),
            Dots(usize),
            Split(usize),
        }
        let mut moves = Vec::new();
        for (i, comp) in g.comps.iter().enumerate() {
            if comp.genus > 0 {
                moves.push(Move::Genus(i));
            }
            if comp.dots >= 2 {
                moves.push(Move::Dots(i));
            }
            if boundary_circles(comp, src, tgt) >= 2 {
                moves.push(Move::Split(i));
            }
        }
        if moves.is_empty() {
            done.push((c, g));
            continue;
        }
        let mv = match &mut rng {
            None => moves[0],
            Some(r) => {
                let k = r.next_u32() as usize % moves.len();
                moves[k]
            }
        };
        match mv {
            Move::Genus(i) => {
                // cutting a handle: factor 2 and one extra dot
                let comp = &mut g.comps[i];
                comp.genus -= 1;
                comp.dots += 1;
                c *= Dyadic::from_int(2);
                work.push((c, CobGenerator::new(g.comps, g.closed)));
            }
            Move::Dots(i) => {
                let comp = &mut g.comps[i];
                comp.dots -= 2;
                if delta == 0 {
                    continue; // double dot kills the term
                }
                work.push((c, CobGenerator::new(g.comps, g.closed)));
            }
            Move::Split(i) => {
                // neck-cut one boundary-circle class off the component
                let comp = g.comps[i].clone();
                let classes = circle_classes(&comp, src, tgt);
                let (side_b, dots_a, dots_b) = match &mut rng {
                    None => (classes.len() - 1, comp.dots, 0),
                    Some(r) => {
                        let side = r.next_u32() as usize % classes.len();
                        let da = r.next_u32() % (comp.dots + 1);
                        (side, da, comp.dots - da)
                    }
                };
                let curves_b: BTreeSet<CurveRef> = classes[side_b].clone();
                let curves_a: BTreeSet<CurveRef> =
                    comp.curves.difference(&curves_b).copied().collect();
                debug_assert!(!curves_a.is_empty() && !curves_b.is_empty());
                let rest: Vec<CobComp> = g
                    .comps
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, x)| x.clone())
                    .collect();
                for (da, db) in [(dots_a + 1, dots_b), (dots_a, dots_b + 1)] {
                    let mut comps = rest.clone();
                    comps.push(CobComp {
                        curves: curves_a.clone(),
                        genus: comp.genus,
                        dots: da,
                    });
                    comps.push(CobComp { curves: curves_b.clone(), genus: 0, dots: db });
                    work.push((c, CobGenerator::new(comps, g.closed.clone())));
                }
            }
        }
    }
    done
}

/// The canonical partition of the curves of Hom(src, tgt): arcs grouped by
/// the boundary-point cycles they form with the vertical walls, circles in
/// singleton classes. Normal-form generators are supported on refinements
/// of it, and it is the unique partition all of whose classes carry exactly
/// one boundary circle.
pub fn canonical_classes(src: &Smoothing, tgt: &Smoothing) -> Vec<BTreeSet<CurveRef>> {
    let all = CobComp::new(
        (0..src.len())
            .map(CurveRef::Src)
            .chain((0..tgt.len()).map(CurveRef::Tgt)),
        0,
        0,
    );
    circle_classes(&all, src, tgt)
}

/// The undotted generator supported on the canonical partition.
pub fn canonical_generator(src: &Smoothing, tgt: &Smoothing) -> CobGenerator {
    let comps = canonical_classes(src, tgt)
        .into_iter()
        .map(|curves| CobComp { curves, genus: 0, dots: 0 })
        .collect();
    CobGenerator::new(comps, vec![])
}

/// Normal form of a single raw generator; the order in which relations are
/// applied does not change the result.
pub fn normalize(
    src: &Smoothing,
    tgt: &Smoothing,
    gen: CobGenerator,
    theory: Theory,
) -> Result<CobMorphism> {
    CobMorphism::from_generator(src.clone(), tgt.clone(), gen, theory)
}

/// Normalization with a randomized reduction order; for confluence tests.
pub fn normalize_randomized<R: Rng>(
    src: &Smoothing,
    tgt: &Smoothing,
    gen: CobGenerator,
    theory: Theory,
    rng: &mut R,
) -> Result<CobMorphism> {
    gen.validate(src, tgt)?;
    let mut m = CobMorphism::zero(src.clone(), tgt.clone(), theory);
    for (c, g) in normalize_terms(Dyadic::ONE, gen, src, tgt, theory, Some(rng)) {
        m.push(c, g);
    }
    Ok(m)
}

/// Random smoothing and generator fabrication shared by the unit tests and
/// the acceptance suite.
#[doc(hidden)]
pub mod test_support {
    use super::*;
    use rand::RngCore;

    pub fn random_smoothing_pair(
        rng: &mut dyn RngCore,
        max_arcs: usize,
        max_circles: usize,
    ) -> (Smoothing, Smoothing) {
        let arcs = rng.next_u32() as usize % (max_arcs + 1);
        let legs: Vec<EdgeId> = (1..=2 * arcs as EdgeId).collect();
        let mut mk = |rng: &mut dyn RngCore, base: EdgeId| {
            let mut order = legs.clone();
            for i in (1..order.len()).rev() {
                let j = rng.next_u32() as usize % (i + 1);
                order.swap(i, j);
            }
            let mut curves = Vec::new();
            for (k, pair) in order.chunks(2).enumerate() {
                curves.push(Curve::arc([pair[0], pair[1]], vec![base + k as EdgeId]));
            }
            let circles = rng.next_u32() as usize % (max_circles + 1);
            for k in 0..circles {
                curves.push(Curve::circle(vec![base + 100 + k as EdgeId]));
            }
            Smoothing::new(curves)
        };
        (mk(rng, 1000), mk(rng, 2000))
    }

    /// Random endpoint-closed partition with random decorations.
    pub fn random_generator(
        rng: &mut dyn RngCore,
        src: &Smoothing,
        tgt: &Smoothing,
        max_genus: u32,
        max_dots: u32,
    ) -> CobGenerator {
        let n = src.len() + tgt.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            if p[x] == x {
                x
            } else {
                let r = find(p, p[x]);
                p[x] = r;
                r
            }
        }
        let idx = |cr: CurveRef, src_len: usize| match cr {
            CurveRef::Src(i) => i,
            CurveRef::Tgt(i) => src_len + i,
        };
        for leg in src.boundary() {
            let a = idx(CurveRef::Src(arc_with_end(src, leg).unwrap()), src.len());
            let b = idx(CurveRef::Tgt(arc_with_end(tgt, leg).unwrap()), src.len());
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        if n > 0 {
            for _ in 0..(rng.next_u32() as usize % (n + 1)) {
                let a = rng.next_u32() as usize % n;
                let b = rng.next_u32() as usize % n;
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut groups: BTreeMap<usize, BTreeSet<CurveRef>> = BTreeMap::new();
        for i in 0..n {
            let cr = if i < src.len() {
                CurveRef::Src(i)
            } else {
                CurveRef::Tgt(i - src.len())
            };
            groups.entry(find(&mut parent, i)).or_default().insert(cr);
        }
        let comps = groups
            .into_values()
            .map(|curves| CobComp {
                curves,
                genus: rng.next_u32() % (max_genus + 1),
                dots: rng.next_u32() % (max_dots + 1),
            })
            .collect();
        let closed = (0..(rng.next_u32() % 2))
            .map(|_| ClosedComp { genus: rng.next_u32() % 3, dots: rng.next_u32() % 3 })
            .collect();
        CobGenerator::new(comps, closed)
    }
}
