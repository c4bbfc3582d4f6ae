//! Smoothings of a diagram, alternately coloured smoothings, and the
//! bijection between those and orientations of the underlying tangle.

use std::collections::BTreeMap;

use serde_json::json;

use crate::diagram::{Colour, EdgeId, End, Orientation, TangleDiagram};

/// One component of a smoothing: an open arc between two boundary points or
/// a closed circle, identified by the set of diagram edges it runs through.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Curve {
    /// Sorted edge ids.
    pub edges: Vec<EdgeId>,
    /// Sorted boundary labels for arcs, `None` for circles.
    pub ends: Option<[EdgeId; 2]>,
}

impl Curve {
    pub fn is_circle(&self) -> bool {
        self.ends.is_none()
    }

    pub fn arc(ends: [EdgeId; 2], mut edges: Vec<EdgeId>) -> Curve {
        edges.sort_unstable();
        let mut e = ends;
        e.sort_unstable();
        Curve { edges, ends: Some(e) }
    }

    pub fn circle(mut edges: Vec<EdgeId>) -> Curve {
        edges.sort_unstable();
        Curve { edges, ends: None }
    }

    pub fn label(&self) -> String {
        match self.ends {
            Some([a, b]) => format!("arc({a},{b})"),
            None => format!("circle({})", self.edges[0]),
        }
    }
}

/// A crossingless planar 1-manifold, canonically ordered.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Smoothing {
    curves: Vec<Curve>,
}

impl Smoothing {
    pub fn new(mut curves: Vec<Curve>) -> Smoothing {
        curves.sort();
        Smoothing { curves }
    }

    pub fn empty() -> Smoothing {
        Smoothing { curves: Vec::new() }
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn curve_index(&self, c: &Curve) -> usize {
        self.curves.binary_search(c).expect("curve present")
    }

    /// Boundary labels of all arcs, sorted.
    pub fn boundary(&self) -> Vec<EdgeId> {
        let mut b: Vec<EdgeId> = self
            .curves
            .iter()
            .filter_map(|c| c.ends)
            .flat_map(|e| e.into_iter())
            .collect();
        b.sort_unstable();
        b
    }
}

/// A smoothing together with the resolution choices that produced it and the
/// pair of curves meeting at each confluence.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ResolvedSmoothing {
    pub choices: Vec<u8>,
    pub smoothing: Smoothing,
    /// Per crossing, the indices of the two curves through its confluence.
    pub confluences: Vec<[usize; 2]>,
}

/// A smoothing with a two-colouring of its components, alternating at every
/// confluence.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ColouredSmoothing {
    pub choices: Vec<u8>,
    pub smoothing: Smoothing,
    /// Colour per curve, parallel to `smoothing.curves()`.
    pub colours: Vec<Colour>,
}

impl ColouredSmoothing {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "choices": self.choices,
            "colours": self.colours.iter().map(|c| c.letter().to_string()).collect::<Vec<_>>(),
        })
    }
}

fn partner(choice: u8, port: usize) -> usize {
    // 0-smoothing joins a-d and b-c, 1-smoothing joins a-b and c-d.
    match (choice, port) {
        (0, 0) => 3,
        (0, 3) => 0,
        (0, 1) => 2,
        (0, 2) => 1,
        (1, 0) => 1,
        (1, 1) => 0,
        (1, 2) => 3,
        (1, 3) => 2,
        _ => unreachable!(),
    }
}

/// Resolve every crossing of `d` according to `choices`.
pub fn resolve(d: &TangleDiagram, choices: &[u8]) -> ResolvedSmoothing {
    assert_eq!(choices.len(), d.crossing_count(), "one choice per crossing");
    assert!(choices.iter().all(|&c| c <= 1));

    // Walk the 1-manifold: entering an edge at one endpoint, leave at the
    // other; at a crossing port, continue through the partner port.
    let step = |edge: EdgeId, entry: usize| -> (Option<(EdgeId, usize)>, Option<End>) {
        let ends = d.edge_ends(edge);
        let exit = ends[1 - entry];
        match exit {
            End::Leaf { .. } => (None, Some(exit)),
            End::Port { crossing, port } => {
                let c = crossing as usize;
                let q = partner(choices[c], port as usize);
                let next = d.crossings()[c].ports[q];
                let want = End::Port { crossing, port: q as u8 };
                let next_ends = d.edge_ends(next);
                let next_entry = if next_ends[0] == want { 0 } else { 1 };
                (Some((next, next_entry)), None)
            }
        }
    };

    let mut visited: BTreeMap<EdgeId, bool> = BTreeMap::new();
    let mut curves: Vec<Curve> = Vec::new();

    // Arcs, traced from each boundary label.
    for &b in d.boundary() {
        if visited.contains_key(&b) {
            continue;
        }
        let ends = d.edge_ends(b);
        let entry = if matches!(ends[0], End::Leaf { .. }) { 0 } else { 1 };
        let mut edges = Vec::new();
        let (mut cur, mut cur_entry) = (b, entry);
        let last;
        loop {
            visited.insert(cur, true);
            edges.push(cur);
            match step(cur, cur_entry) {
                (Some(next), None) => {
                    cur = next.0;
                    cur_entry = next.1;
                }
                (None, Some(_)) => {
                    last = cur;
                    break;
                }
                _ => unreachable!(),
            }
        }
        curves.push(Curve::arc([b, last], edges));
    }

    // Circles from the remaining edges.
    let all_edges: Vec<EdgeId> = d
        .edge_ids()
        .filter(|&e| !TangleDiagram::is_circle_edge(e))
        .collect();
    for &e0 in &all_edges {
        if visited.contains_key(&e0) {
            continue;
        }
        let mut edges = Vec::new();
        let (mut cur, mut cur_entry) = (e0, 0usize);
        loop {
            visited.insert(cur, true);
            edges.push(cur);
            let (next, leaf) = step(cur, cur_entry);
            assert!(leaf.is_none(), "closed walk hit the boundary");
            let (n, ne) = next.unwrap();
            if n == e0 && ne == 0 {
                break;
            }
            cur = n;
            cur_entry = ne;
        }
        curves.push(Curve::circle(edges));
    }

    for &c in d.circle_edges() {
        curves.push(Curve::circle(vec![c]));
    }

    let smoothing = Smoothing::new(curves);
    let edge_curve: BTreeMap<EdgeId, usize> = smoothing
        .curves()
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.edges.iter().map(move |&e| (e, i)))
        .collect();
    let confluences = d
        .crossings()
        .iter()
        .zip(choices)
        .map(|(x, &ch)| {
            // one representative edge from each of the two arc segments
            let second = if ch == 0 { 1 } else { 2 };
            [edge_curve[&x.ports[0]], edge_curve[&x.ports[second]]]
        })
        .collect();

    ResolvedSmoothing { choices: choices.to_vec(), smoothing, confluences }
}

/// Union-find with parity, for propagating "different colour" constraints.
struct ParityUf {
    parent: Vec<usize>,
    parity: Vec<u8>,
}

impl ParityUf {
    fn new(n: usize) -> Self {
        ParityUf { parent: (0..n).collect(), parity: vec![0; n] }
    }

    fn find(&mut self, x: usize) -> (usize, u8) {
        if self.parent[x] == x {
            return (x, 0);
        }
        let (r, p) = self.find(self.parent[x]);
        self.parent[x] = r;
        self.parity[x] ^= p;
        (r, self.parity[x])
    }

    /// Require `colour(a) != colour(b)`; false on contradiction.
    fn union_diff(&mut self, a: usize, b: usize) -> bool {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            return pa != pb;
        }
        self.parent[rb] = ra;
        self.parity[rb] = pa ^ pb ^ 1;
        true
    }
}

/// All alternately coloured smoothings of `d`, over all 2^n resolutions.
pub fn enumerate_alternately_coloured(d: &TangleDiagram) -> Vec<ColouredSmoothing> {
    let n = d.crossing_count();
    assert!(n < 20, "too many crossings to enumerate smoothings");
    let mut out = Vec::new();
    for bits in 0..(1u32 << n) {
        let choices: Vec<u8> = (0..n).map(|i| (bits >> i & 1) as u8).collect();
        let rs = resolve(d, &choices);
        let k = rs.smoothing.len();
        let mut uf = ParityUf::new(k);
        let mut ok = true;
        for &[a, b] in &rs.confluences {
            if !uf.union_diff(a, b) {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        let mut roots: Vec<usize> = Vec::new();
        let mut info: Vec<(usize, u8)> = Vec::with_capacity(k);
        for i in 0..k {
            let (r, p) = uf.find(i);
            if !roots.contains(&r) {
                roots.push(r);
            }
            info.push((r, p));
        }
        roots.sort_unstable();
        for assign in 0..(1u32 << roots.len()) {
            let colours: Vec<Colour> = info
                .iter()
                .map(|&(r, p)| {
                    let idx = roots.binary_search(&r).unwrap();
                    let bit = (assign >> idx & 1) as u8 ^ p;
                    if bit == 0 {
                        Colour::Red
                    } else {
                        Colour::Green
                    }
                })
                .collect();
            out.push(ColouredSmoothing {
                choices: choices.clone(),
                smoothing: rs.smoothing.clone(),
                colours,
            });
        }
    }
    out.sort();
    out
}

/// Resolution choices of the oriented smoothing for `o`: 0 where the
/// crossing is positive under `o`, 1 where it is negative.
pub fn oriented_choices(d: &TangleDiagram, o: &Orientation) -> Vec<u8> {
    (0..d.crossing_count())
        .map(|x| if d.crossing_sign(x, o) > 0 { 0 } else { 1 })
        .collect()
}

/// The alternately coloured smoothing associated to an orientation: take the
/// oriented smoothing and colour every arc by the checkerboard colour of the
/// region on its right.
pub fn orientation_to_colouring(d: &TangleDiagram, o: &Orientation) -> ColouredSmoothing {
    let choices = oriented_choices(d, o);
    let rs = resolve(d, &choices);
    let cb = d.checkerboard();
    let colours: Vec<Colour> = rs
        .smoothing
        .curves()
        .iter()
        .map(|curve| {
            if curve.edges.len() == 1 && TangleDiagram::is_circle_edge(curve.edges[0]) {
                // Declared circles run counterclockwise under the original
                // orientation, so the region on the right is the outer one.
                let pos = d
                    .circle_edges()
                    .iter()
                    .position(|&c| c == curve.edges[0])
                    .unwrap();
                let comp = d.component_of_edge(curve.edges[0]);
                return if o.reversed[comp] {
                    cb.colour(d.circle_inside_region(pos))
                } else {
                    Colour::Green
                };
            }
            let mut colour = None;
            for &e in &curve.edges {
                let comp = d.component_of_edge(e);
                let mut tail = d.tail_index(e);
                if o.reversed[comp] {
                    tail = 1 - tail;
                }
                let c = cb.colour(d.right_region(e, tail));
                match colour {
                    None => colour = Some(c),
                    Some(prev) => assert_eq!(
                        prev, c,
                        "right-hand colour must be constant along an oriented arc"
                    ),
                }
            }
            colour.unwrap()
        })
        .collect();

    let cs = ColouredSmoothing { choices: rs.choices.clone(), smoothing: rs.smoothing, colours };
    debug_assert!(is_alternating(d, &cs));
    cs
}

/// The inverse construction: orient each arc so that its own colour sits on
/// its right, then read off one direction flag per diagram component.
pub fn colouring_to_orientation(d: &TangleDiagram, cs: &ColouredSmoothing) -> Orientation {
    let cb = d.checkerboard();
    let mut flag: Vec<Option<bool>> = vec![None; d.component_count()];
    for (curve, &colour) in cs.smoothing.curves().iter().zip(&cs.colours) {
        if curve.edges.len() == 1 && TangleDiagram::is_circle_edge(curve.edges[0]) {
            let comp = d.component_of_edge(curve.edges[0]);
            let rev = colour != Colour::Green;
            assert!(flag[comp].is_none());
            flag[comp] = Some(rev);
            continue;
        }
        for &e in &curve.edges {
            let r0 = cb.colour(d.right_region(e, 0));
            let r1 = cb.colour(d.right_region(e, 1));
            assert_ne!(r0, r1, "regions across an edge must differ");
            let tail = if r0 == colour { 0 } else { 1 };
            let comp = d.component_of_edge(e);
            let rev = tail != d.tail_index(e);
            match flag[comp] {
                None => flag[comp] = Some(rev),
                Some(prev) => assert_eq!(
                    prev, rev,
                    "arcs of one component must receive a consistent direction"
                ),
            }
        }
    }
    Orientation {
        reversed: flag.into_iter().map(|f| f.expect("every component oriented")).collect(),
    }
}

/// Homological height of the generator attached to `o`: the linking sum of
/// the orientation-preserved and -reversed parts. Also computed as the
/// number of 1-resolutions in the oriented smoothing minus the negative
/// crossing count; the two must agree.
pub fn generator_height(d: &TangleDiagram, o: &Orientation) -> i64 {
    let lk = d.linking_sum(o);
    let ones = oriented_choices(d, o).iter().filter(|&&c| c == 1).count() as i64;
    let shifted = ones - d.n_minus() as i64;
    assert_eq!(lk, shifted, "height formulas disagree");
    lk
}

/// Check the alternation condition at every confluence.
pub fn is_alternating(d: &TangleDiagram, cs: &ColouredSmoothing) -> bool {
    let rs = resolve(d, &cs.choices);
    if rs.smoothing != cs.smoothing {
        return false;
    }
    rs.confluences.iter().all(|&[a, b]| cs.colours[a] != cs.colours[b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::TangleDiagram;

    const TREFOIL: &str = "X 1 4 2 5\nX 3 6 4 1\nX 5 2 6 3\n";
    const SINGLE: &str = "X 1 3 2 4\nBOUNDARY 1 2 3 4\n";

    #[test]
    fn resolve_single_crossing() {
        let d = TangleDiagram::parse(SINGLE).unwrap();
        let s0 = resolve(&d, &[0]);
        assert_eq!(s0.smoothing.len(), 2);
        let ends: Vec<_> = s0.smoothing.curves().iter().map(|c| c.ends.unwrap()).collect();
        assert_eq!(ends, vec![[1, 4], [2, 3]]);
        let s1 = resolve(&d, &[1]);
        let ends: Vec<_> = s1.smoothing.curves().iter().map(|c| c.ends.unwrap()).collect();
        assert_eq!(ends, vec![[1, 3], [2, 4]]);
    }

    #[test]
    fn resolve_trefoil_all_zero() {
        let d = TangleDiagram::parse(TREFOIL).unwrap();
        let s = resolve(&d, &[0, 0, 0]);
        assert_eq!(s.smoothing.len(), 2);
        assert!(s.smoothing.curves().iter().all(|c| c.is_circle()));
        let edges: Vec<_> = s.smoothing.curves().iter().map(|c| c.edges.clone()).collect();
        assert_eq!(edges, vec![vec![1, 3, 5], vec![2, 4, 6]]);
    }

    #[test]
    fn enumerate_counts_are_two_to_the_c() {
        for (text, c) in [
            ("CIRCLES 1\n", 1usize),
            (SINGLE, 2),
            (TREFOIL, 1),
            ("X 1 2 2 1\n", 1),
        ] {
            let d = TangleDiagram::parse(text).unwrap();
            assert_eq!(d.component_count(), c);
            let list = enumerate_alternately_coloured(&d);
            assert_eq!(list.len(), 1 << c, "diagram {text:?}");
            for cs in &list {
                assert!(is_alternating(&d, cs));
            }
        }
    }

    #[test]
    fn single_crossing_colourings_split_across_both_smoothings() {
        let d = TangleDiagram::parse(SINGLE).unwrap();
        let list = enumerate_alternately_coloured(&d);
        let zeros = list.iter().filter(|cs| cs.choices == vec![0]).count();
        let ones = list.iter().filter(|cs| cs.choices == vec![1]).count();
        assert_eq!((zeros, ones), (2, 2));
        for cs in &list {
            assert_ne!(cs.colours[0], cs.colours[1]);
        }
    }

    #[test]
    fn bijection_round_trip() {
        for text in [SINGLE, TREFOIL, "CIRCLES 2\n", "X 1 2 2 1\n"] {
            let d = TangleDiagram::parse(text).unwrap();
            let enumerated = enumerate_alternately_coloured(&d);
            let mut seen = Vec::new();
            for o in d.all_orientations() {
                let cs = orientation_to_colouring(&d, &o);
                assert!(is_alternating(&d, &cs), "diagram {text:?}");
                let back = colouring_to_orientation(&d, &cs);
                assert_eq!(back, o, "diagram {text:?}");
                seen.push(cs);
            }
            seen.sort();
            assert_eq!(seen, enumerated, "diagram {text:?}");
            for cs in &enumerated {
                let o = colouring_to_orientation(&d, cs);
                assert_eq!(&orientation_to_colouring(&d, &o), cs);
            }
        }
    }

    #[test]
    fn heights_on_small_fixtures() {
        let d = TangleDiagram::parse(TREFOIL).unwrap();
        for o in d.all_orientations() {
            assert_eq!(generator_height(&d, &o), 0);
        }
        let d = TangleDiagram::parse(SINGLE).unwrap();
        let mut hs: Vec<i64> =
            d.all_orientations().iter().map(|o| generator_height(&d, o)).collect();
        hs.sort_unstable();
        assert_eq!(hs, vec![0, 0, 1, 1]);
    }

    #[test]
    fn heights_additive_under_disjoint_union() {
        // trefoil alongside a relabelled copy of itself
        let both = "X 1 4 2 5\nX 3 6 4 1\nX 5 2 6 3\nX 11 14 12 15\nX 13 16 14 11\nX 15 12 16 13\n";
        let d = TangleDiagram::parse(both).unwrap();
        assert_eq!(d.component_count(), 2);
        for o in d.all_orientations() {
            // each component is a knot on its own, so every height vanishes
            assert_eq!(generator_height(&d, &o), 0);
        }
    }

    #[test]
    fn coloured_smoothing_serialization() {
        let d = TangleDiagram::parse(SINGLE).unwrap();
        let list = enumerate_alternately_coloured(&d);
        let v = list[0].to_json();
        assert_eq!(v["choices"], serde_json::json!([0]));
        let cols = v["colours"].as_array().unwrap();
        assert_eq!(cols.len(), 2);
    }
}
