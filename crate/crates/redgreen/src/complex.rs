//! Formal complexes over matrix categories of smoothing objects: the cube
//! of resolutions, planar tensor products of complexes, and simplification
//! by Gaussian elimination of invertible differential entries.

use std::collections::BTreeMap;

use serde_json::json;

use crate::cobordism::{CobComp, CobGenerator, CobMorphism, CurveRef, Theory};
use crate::diagram::{EdgeId, TangleDiagram};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::karoubi::{Morphism, Planar};
use crate::smoothing::{resolve, ResolvedSmoothing};

/// A chain complex of formal direct sums with sparse differential matrices.
/// The entry keyed `(to, from)` at height `h` is a morphism from object
/// `from` at `h` to object `to` at `h + 1`.
#[derive(Clone, Debug)]
pub struct FormalComplex<M: Morphism> {
    ctx: M::Ctx,
    objects: BTreeMap<i64, Vec<M::Obj>>,
    diffs: BTreeMap<i64, BTreeMap<(usize, usize), M>>,
}

impl<M: Morphism> FormalComplex<M> {
    pub fn new(ctx: M::Ctx) -> Self {
        FormalComplex { ctx, objects: BTreeMap::new(), diffs: BTreeMap::new() }
    }

    pub fn single(obj: M::Obj, height: i64, ctx: M::Ctx) -> Self {
        let mut c = FormalComplex::new(ctx);
        c.add_object(height, obj);
        c
    }

    pub fn ctx(&self) -> M::Ctx {
        self.ctx
    }

    pub fn add_object(&mut self, height: i64, obj: M::Obj) -> usize {
        let v = self.objects.entry(height).or_default();
        v.push(obj);
        v.len() - 1
    }

    pub fn set_entry(&mut self, height: i64, from: usize, to: usize, m: M) {
        if m.is_zero() {
            return;
        }
        self.diffs.entry(height).or_default().insert((to, from), m);
    }

    pub fn objects(&self, height: i64) -> &[M::Obj] {
        self.objects.get(&height).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn heights(&self) -> Vec<i64> {
        self.objects
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(&h, _)| h)
            .collect()
    }

    pub fn object_count(&self) -> usize {
        self.objects.values().map(|v| v.len()).sum()
    }

    pub fn entries(&self, height: i64) -> impl Iterator<Item = (usize, usize, &M)> {
        self.diffs
            .get(&height)
            .into_iter()
            .flat_map(|m| m.iter().map(|(&(to, from), e)| (from, to, e)))
    }

    pub fn entry_count(&self) -> usize {
        self.diffs.values().map(|m| m.len()).sum()
    }

    pub fn is_zero_differential(&self) -> bool {
        self.diffs.values().all(|m| m.values().all(|e| e.is_zero()))
    }

    /// Check d . d = 0 entrywise.
    pub fn verify_d_squared(&self) -> Result<()> {
        let heights: Vec<i64> = self.diffs.keys().copied().collect();
        for h in heights {
            let Some(first) = self.diffs.get(&h) else { continue };
            let Some(second) = self.diffs.get(&(h + 1)) else { continue };
            let mut acc: BTreeMap<(usize, usize), M> = BTreeMap::new();
            for (&(mid, from), f) in first {
                for (&(to, mid2), g) in second {
                    if mid != mid2 {
                        continue;
                    }
                    let comp = f.then(g)?;
                    match acc.remove(&(to, from)) {
                        None => {
                            acc.insert((to, from), comp);
                        }
                        Some(prev) => {
                            acc.insert((to, from), prev.add(&comp)?);
                        }
                    }
                }
            }
            for ((to, from), m) in acc {
                if !m.is_zero() {
                    return Err(Error::Mismatch(format!(
                        "d.d != 0 at height {h}, entry {from} -> {to}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Cancel invertible differential entries until none remain. Scans by
    /// ascending height and row-major matrix position, so the result is
    /// deterministic. Each step removes the pair of objects joined by the
    /// invertible entry and applies the zig-zag correction
    /// d' = d - beta . phi^-1 . alpha to the rest.
    pub fn gaussian_eliminate(mut self) -> Result<Self> {
        loop {
            let Some((h, to, from, inv)) = self.find_invertible() else {
                break;
            };
            self.eliminate_pair(h, from, to, inv)?;
            #[cfg(debug_assertions)]
            self.verify_d_squared()?;
        }
        Ok(self)
    }

    fn find_invertible(&self) -> Option<(i64, usize, usize, M)> {
        for (&h, mat) in &self.diffs {
            for (&(to, from), m) in mat {
                if let Some(inv) = m.try_inverse() {
                    return Some((h, to, from, inv));
                }
            }
        }
        None
    }

    fn eliminate_pair(&mut self, h: i64, from: usize, to: usize, inv: M) -> Result<()> {
        let mat = self.diffs.get(&h).cloned().unwrap_or_default();
        // zig-zag correction on the complementary block
        let mut corrected: BTreeMap<(usize, usize), M> = BTreeMap::new();
        for (&(j, i), m) in &mat {
            if i == from || j == to {
                continue;
            }
            corrected.insert((j, i), m.clone());
        }
        for (&(j_b, i), alpha) in &mat {
            // alpha: i -> to (the row of the invertible entry)
            if j_b != to || i == from {
                continue;
            }
            for (&(j, i_a), beta) in &mat {
                // beta: from -> j
                if i_a != from || j == to {
                    continue;
                }
                let corr = alpha.then(&inv)?.then(beta)?;
                let cur = corrected.remove(&(j, i));
                let new = match cur {
                    None => corr.scale(-Dyadic::ONE),
                    Some(c) => c.sub(&corr)?,
                };
                if !new.is_zero() {
                    corrected.insert((j, i), new);
                }
            }
        }
        self.diffs.insert(h, corrected);
        // drop entries into the removed source and out of the removed target
        if let Some(prev) = self.diffs.get_mut(&(h - 1)) {
            prev.retain(|&(j, _), _| j != from);
        }
        if let Some(next) = self.diffs.get_mut(&(h + 1)) {
            next.retain(|&(_, i), _| i != to);
        }
        // remove the two objects and reindex
        self.remove_object(h, from);
        self.remove_object(h + 1, to);
        Ok(())
    }

    fn remove_object(&mut self, h: i64, idx: usize) {
        let v = self.objects.get_mut(&h).expect("height exists");
        v.remove(idx);
        let shift = |k: usize| if k > idx { k - 1 } else { k };
        if let Some(mat) = self.diffs.remove(&h) {
            let remapped = mat
                .into_iter()
                .filter(|&((_, i), _)| i != idx)
                .map(|((j, i), m)| ((j, shift(i)), m))
                .collect();
            self.diffs.insert(h, remapped);
        }
        if let Some(mat) = self.diffs.remove(&(h - 1)) {
            let remapped = mat
                .into_iter()
                .filter(|&((j, _), _)| j != idx)
                .map(|((j, i), m)| ((shift(j), i), m))
                .collect();
            self.diffs.insert(h - 1, remapped);
        }
    }

    pub fn to_json_with(
        &self,
        obj_json: impl Fn(&M::Obj) -> serde_json::Value,
        mor_json: impl Fn(&M) -> serde_json::Value,
    ) -> serde_json::Value {
        let heights: Vec<_> = self
            .objects
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(&h, v)| {
                json!({"h": h, "objects": v.iter().map(&obj_json).collect::<Vec<_>>()})
            })
            .collect();
        let diffs: Vec<_> = self
            .diffs
            .iter()
            .filter(|(_, m)| !m.is_empty())
            .map(|(&h, m)| {
                let entries: Vec<_> = m
                    .iter()
                    .map(|(&(to, from), e)| {
                        json!({"from": from, "to": to, "morphism": mor_json(e)})
                    })
                    .collect();
                json!({"h": h, "entries": entries})
            })
            .collect();
        json!({"heights": heights, "differentials": diffs})
    }
}

/// One vertex of the cube of resolutions.
#[derive(Clone, Debug)]
pub struct CubeVertex {
    pub choices: Vec<u8>,
    pub resolved: ResolvedSmoothing,
    pub height: i64,
}

/// One edge: a saddle from vertex `from` to vertex `to` flipping a single
/// resolution choice, with its cube sign.
#[derive(Clone, Debug)]
pub struct CubeEdge {
    pub from: usize,
    pub to: usize,
    pub sign: i8,
    pub gen: CobGenerator,
}

/// The full cube of resolutions. Shared between the complex builder and the
/// homology oracle, which evaluates the raw edge generators on its own.
#[derive(Clone, Debug)]
pub struct Cube {
    pub vertices: Vec<CubeVertex>,
    pub edges: Vec<CubeEdge>,
}

/// The raw saddle-with-curtains generator for a single resolution change.
/// Curves untouched by the crossing persist as curtains; the rest form the
/// saddle component.
fn edge_generator(src: &ResolvedSmoothing, tgt: &ResolvedSmoothing) -> CobGenerator {
    let mut comps: Vec<CobComp> = Vec::new();
    let mut saddle = Vec::new();
    let mut used_tgt = vec![false; tgt.smoothing.len()];
    for (i, c) in src.smoothing.curves().iter().enumerate() {
        match tgt.smoothing.curves().iter().position(|c2| c2 == c) {
            Some(j) => {
                used_tgt[j] = true;
                comps.push(CobComp::new([CurveRef::Src(i), CurveRef::Tgt(j)], 0, 0));
            }
            None => saddle.push(CurveRef::Src(i)),
        }
    }
    for (j, used) in used_tgt.iter().enumerate() {
        if !used {
            saddle.push(CurveRef::Tgt(j));
        }
    }
    debug_assert!(matches!(saddle.len(), 3 | 4), "a saddle joins three or four curves");
    comps.push(CobComp::new(saddle, 0, 0));
    CobGenerator::new(comps, vec![])
}

/// Build the cube of resolutions: vertices are all 2^n smoothings at height
/// (number of 1-choices) - n_minus, edges flip one choice 0 -> 1 and carry
/// sign (-1)^(number of earlier 1-choices).
pub fn cube(d: &TangleDiagram) -> Cube {
    let n = d.crossing_count();
    assert!(n < 20, "cube too large");
    let shift = d.n_minus() as i64;
    let vertices: Vec<CubeVertex> = (0..(1usize << n))
        .map(|bits| {
            let choices: Vec<u8> = (0..n).map(|i| (bits >> i & 1) as u8).collect();
            let resolved = resolve(d, &choices);
            let height = bits.count_ones() as i64 - shift;
            CubeVertex { choices, resolved, height }
        })
        .collect();
    let mut edges = Vec::new();
    for bits in 0..(1usize << n) {
        for x in 0..n {
            if bits >> x & 1 == 1 {
                continue;
            }
            let to = bits | (1 << x);
            let earlier = (bits & ((1 << x) - 1)).count_ones();
            let sign = if earlier % 2 == 0 { 1 } else { -1 };
            let gen = edge_generator(&vertices[bits].resolved, &vertices[to].resolved);
            edges.push(CubeEdge { from: bits, to, sign, gen });
        }
    }
    Cube { vertices, edges }
}

/// The Khovanov (or Khovanov-Lee) complex of a diagram as a formal complex
/// over the cobordism category.
pub fn khovanov_cube(d: &TangleDiagram, theory: Theory) -> Result<FormalComplex<CobMorphism>> {
    let cube = cube(d);
    let mut c = FormalComplex::new(theory);
    // object index of each vertex within its height, in vertex order
    let mut index = vec![0usize; cube.vertices.len()];
    for (v, vert) in cube.vertices.iter().enumerate() {
        index[v] = c.add_object(vert.height, vert.resolved.smoothing.clone());
    }
    for e in &cube.edges {
        let src = &cube.vertices[e.from].resolved.smoothing;
        let tgt = &cube.vertices[e.to].resolved.smoothing;
        let m = CobMorphism::from_generator(src.clone(), tgt.clone(), e.gen.clone(), theory)?
            .scale(Dyadic::from_int(e.sign as i64));
        let h = cube.vertices[e.from].height;
        c.set_entry(h, index[e.from], index[e.to], m);
    }
    c.verify_d_squared()?;
    Ok(c)
}

/// Tensor of two complexes over a planar arc diagram: objects glue pairwise
/// (zero objects are pruned), heights add, and the differential follows the
/// Leibniz rule with sign (-1)^(height of the left factor).
pub fn planar_tensor<M: Planar>(
    left: &FormalComplex<M>,
    right: &FormalComplex<M>,
    joins: &[(EdgeId, EdgeId)],
) -> Result<FormalComplex<M>> {
    let ctx = left.ctx;
    let mut out = FormalComplex::new(ctx);
    // (h1, i1, h2, i2) -> index at height h1 + h2
    let mut index: BTreeMap<(i64, usize, i64, usize), usize> = BTreeMap::new();
    for (&h1, objs1) in &left.objects {
        for (i1, o1) in objs1.iter().enumerate() {
            for (&h2, objs2) in &right.objects {
                for (i2, o2) in objs2.iter().enumerate() {
                    if let Some(glued) = M::glue_objects(o1, o2, joins, ctx)? {
                        let idx = out.add_object(h1 + h2, glued);
                        index.insert((h1, i1, h2, i2), idx);
                    }
                }
            }
        }
    }
    // d1 (x) id
    for (&h1, mat) in &left.diffs {
        for (&(to1, from1), f) in mat {
            for (&h2, objs2) in &right.objects {
                for (i2, o2) in objs2.iter().enumerate() {
                    let (Some(&src), Some(&tgt)) = (
                        index.get(&(h1, from1, h2, i2)),
                        index.get(&(h1 + 1, to1, h2, i2)),
                    ) else {
                        continue;
                    };
                    let id2 = M::identity(o2, ctx);
                    if let Some(glued) = M::glue(f, &id2, joins)? {
                        out.set_entry(h1 + h2, src, tgt, glued);
                    }
                }
            }
        }
    }
    // (-1)^h1 id (x) d2
    for (&h1, objs1) in &left.objects {
        for (i1, o1) in objs1.iter().enumerate() {
            let sign = if h1.rem_euclid(2) == 0 { Dyadic::ONE } else { -Dyadic::ONE };
            for (&h2, mat) in &right.diffs {
                for (&(to2, from2), g) in mat {
                    let (Some(&src), Some(&tgt)) = (
                        index.get(&(h1, i1, h2, from2)),
                        index.get(&(h1, i1, h2 + 1, to2)),
                    ) else {
                        continue;
                    };
                    let id1 = M::identity(o1, ctx);
                    if let Some(glued) = M::glue(&id1, g, joins)? {
                        out.set_entry(h1 + h2, src, tgt, glued.scale(sign));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Serialization of a cobordism-valued complex.
pub fn complex_to_json(c: &FormalComplex<CobMorphism>) -> serde_json::Value {
    c.to_json_with(
        |s| {
            json!(s
                .curves()
                .iter()
                .map(|curve| curve.label())
                .collect::<Vec<_>>())
        },
        |m| m.to_json(),
    )
}
