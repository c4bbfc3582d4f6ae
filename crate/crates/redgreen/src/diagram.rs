//! Tangle and link diagrams: PD-code parsing, planarity validation via the
//! rotation system, region/checkerboard structure, orientations, crossing
//! signs and linking sums.
//!
//! Conventions fixed here and used everywhere else:
//! * `X a b c d` lists the four edge labels counterclockwise starting from
//!   the incoming under-strand, so the under-strand runs `a -> c`.
//! * A crossing is positive when the over-strand enters at port `b`
//!   (rotating the under-strand direction counterclockwise by a quarter
//!   turn gives the over-strand direction).
//! * The 0-smoothing of a crossing joins ports `a-d` and `b-c`; the
//!   1-smoothing joins `a-b` and `c-d`. With the sign convention above the
//!   0-smoothing of a positive crossing is its oriented smoothing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

pub type EdgeId = u32;

/// One crossing; ports counterclockwise from the incoming under-strand.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Crossing {
    pub ports: [EdgeId; 4],
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub(crate) enum End {
    Port { crossing: u32, port: u8 },
    Leaf { pos: u32 },
}

/// Two-colour names follow the red/green calculus; serialized as R and G.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Colour {
    Red,
    Green,
}

impl Colour {
    pub fn other(self) -> Colour {
        match self {
            Colour::Red => Colour::Green,
            Colour::Green => Colour::Red,
        }
    }

    /// Dot eigenvalue: +1 on red, -1 on green.
    pub fn sign(self) -> i64 {
        match self {
            Colour::Red => 1,
            Colour::Green => -1,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Colour::Red => 'R',
            Colour::Green => 'G',
        }
    }
}

impl Serialize for Colour {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            Colour::Red => "R",
            Colour::Green => "G",
        })
    }
}

impl fmt::Display for Colour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Per-component direction flags relative to the orientation encoded in the
/// PD code. `true` means reversed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Orientation {
    pub reversed: Vec<bool>,
}

impl Orientation {
    pub fn original(component_count: usize) -> Self {
        Orientation { reversed: vec![false; component_count] }
    }

    pub fn toggled(&self) -> Self {
        Orientation { reversed: self.reversed.iter().map(|r| !r).collect() }
    }
}

/// Checkerboard colouring of the diagram regions. Region 0 is the outer
/// region of a link or the marked boundary region of a tangle and is always
/// green.
#[derive(Clone, Debug)]
pub struct CheckerboardColouring {
    colours: Vec<Colour>,
}

impl CheckerboardColouring {
    pub fn colour(&self, region: usize) -> Colour {
        self.colours[region]
    }

    pub fn region_count(&self) -> usize {
        self.colours.len()
    }
}

/// A validated tangle or link diagram.
#[derive(Clone, Debug)]
pub struct TangleDiagram {
    crossings: Vec<Crossing>,
    /// Boundary labels as declared; the first entry is the marked point.
    boundary_declared: Vec<EdgeId>,
    /// Boundary labels in the cyclic order derived from the planar structure,
    /// rotated so the marked point comes first.
    boundary_cyclic: Vec<EdgeId>,
    /// Synthetic edge ids for declared crossingless circles.
    circles: Vec<EdgeId>,
    /// Endpoints of every non-circle edge.
    edge_ends: BTreeMap<EdgeId, [End; 2]>,
    /// Components as sorted edge lists, sorted by smallest edge.
    components: Vec<Vec<EdgeId>>,
    component_of_edge: BTreeMap<EdgeId, usize>,
    /// Index of the tail endpoint of each edge under the original orientation.
    tail_of_edge: BTreeMap<EdgeId, usize>,
    /// Crossing signs under the original orientation.
    signs: Vec<i8>,
    /// Right-hand region of the dart based at each endpoint.
    region_of_dart: Vec<usize>,
    region_count: usize,
    /// Inside regions of declared circles, parallel to `circles`.
    circle_inside_region: Vec<usize>,
}

const CIRCLE_BASE: EdgeId = 1 << 30;

impl TangleDiagram {
    pub fn parse(text: &str) -> Result<TangleDiagram> {
        let mut crossings = Vec::new();
        let mut boundary: Vec<EdgeId> = Vec::new();
        let mut seen_boundary = false;
        let mut n_circles = 0usize;
        let mut seen_circles = false;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            let mut toks = line.split_whitespace();
            let Some(head) = toks.next() else { continue };
            let parse_label = |t: &str| -> Result<EdgeId> {
                match t.parse::<EdgeId>() {
                    Ok(v) if v > 0 && v < (1 << 24) => Ok(v),
                    _ => Err(Error::Parse {
                        line: line_no,
                        msg: format!("bad edge label `{t}`"),
                    }),
                }
            };
            match head {
                "X" => {
                    let rest: Vec<&str> = toks.collect();
                    if rest.len() != 4 {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("X line needs 4 labels, got {}", rest.len()),
                        });
                    }
                    let mut ports = [0; 4];
                    for (i, t) in rest.iter().enumerate() {
                        ports[i] = parse_label(t)?;
                    }
                    crossings.push(Crossing { ports });
                }
                "BOUNDARY" => {
                    if seen_boundary {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "repeated BOUNDARY line".into(),
                        });
                    }
                    seen_boundary = true;
                    for t in toks {
                        boundary.push(parse_label(t)?);
                    }
                    if boundary.len() % 2 != 0 {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("odd number of boundary points ({})", boundary.len()),
                        });
                    }
                }
                "CIRCLES" => {
                    if seen_circles {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "repeated CIRCLES line".into(),
                        });
                    }
                    seen_circles = true;
                    let t = toks.next().ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: "CIRCLES needs a count".into(),
                    })?;
                    n_circles = t.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("bad circle count `{t}`"),
                    })?;
                    if toks.next().is_some() {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "trailing tokens after CIRCLES count".into(),
                        });
                    }
                }
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("unknown directive `{other}`"),
                    });
                }
            }
        }

        TangleDiagram::build(crossings, boundary, n_circles)
    }

    fn build(
        crossings: Vec<Crossing>,
        boundary_declared: Vec<EdgeId>,
        n_circles: usize,
    ) -> Result<TangleDiagram> {
        // Label usage counts.
        let mut uses: BTreeMap<EdgeId, Vec<End>> = BTreeMap::new();
        for (c, x) in crossings.iter().enumerate() {
            for (p, &e) in x.ports.iter().enumerate() {
                uses.entry(e)
                    .or_default()
                    .push(End::Port { crossing: c as u32, port: p as u8 });
            }
        }
        let boundary_set: BTreeSet<EdgeId> = boundary_declared.iter().copied().collect();
        if boundary_set.len() != boundary_declared.len() {
            return Err(Error::Invalid("repeated label in BOUNDARY".into()));
        }
        for (pos, &e) in boundary_declared.iter().enumerate() {
            uses.entry(e).or_default().push(End::Leaf { pos: pos as u32 });
        }
        let mut edge_ends: BTreeMap<EdgeId, [End; 2]> = BTreeMap::new();
        for (&e, ends) in &uses {
            if ends.len() != 2 {
                return Err(Error::Invalid(format!(
                    "edge label {e} used {} time(s); every label must appear exactly twice",
                    ends.len()
                )));
            }
            let n_leaf = ends.iter().filter(|x| matches!(x, End::Leaf { .. })).count();
            if boundary_set.contains(&e) {
                if n_leaf != 1 {
                    return Err(Error::Invalid(format!(
                        "boundary label {e} must appear exactly once in an X line"
                    )));
                }
            } else if n_leaf != 0 {
                unreachable!();
            }
            edge_ends.insert(e, [ends[0], ends[1]]);
        }

        let circles: Vec<EdgeId> = (0..n_circles).map(|i| CIRCLE_BASE + i as EdgeId).collect();

        let mut d = TangleDiagram {
            crossings,
            boundary_declared,
            boundary_cyclic: Vec::new(),
            circles,
            edge_ends,
            components: Vec::new(),
            component_of_edge: BTreeMap::new(),
            tail_of_edge: BTreeMap::new(),
            signs: Vec::new(),
            region_of_dart: Vec::new(),
            region_count: 0,
            circle_inside_region: Vec::new(),
        };
        d.trace_components()?;
        d.orient()?;
        d.build_regions()?;
        Ok(d)
    }

    pub fn crossings(&self) -> &[Crossing] {
        &self.crossings
    }

    pub fn crossing_count(&self) -> usize {
        self.crossings.len()
    }

    /// Boundary labels in derived cyclic order, marked point first.
    pub fn boundary(&self) -> &[EdgeId] {
        &self.boundary_cyclic
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_declared.is_empty()
    }

    /// Synthetic edge ids of declared crossingless circles.
    pub fn circle_edges(&self) -> &[EdgeId] {
        &self.circles
    }

    pub fn is_circle_edge(e: EdgeId) -> bool {
        e >= CIRCLE_BASE
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edge_ends.keys().copied().chain(self.circles.iter().copied())
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Components as sorted edge lists, in canonical order.
    pub fn components(&self) -> &[Vec<EdgeId>] {
        &self.components
    }

    pub fn component_of_edge(&self, e: EdgeId) -> usize {
        self.component_of_edge[&e]
    }

    pub fn all_orientations(&self) -> Vec<Orientation> {
        let c = self.component_count();
        assert!(c < 26, "too many components to enumerate orientations");
        (0..(1usize << c))
            .map(|bits| Orientation {
                reversed: (0..c).map(|i| bits >> i & 1 == 1).collect(),
            })
            .collect()
    }

    /// Component partition by strand tracing: under-edges pair through ports
    /// a-c, over-edges through b-d.
    fn trace_components(&mut self) -> Result<()> {
        let mut uf = UnionFind::new();
        for e in self.edge_ends.keys() {
            uf.add(*e);
        }
        for x in &self.crossings {
            uf.union(x.ports[0], x.ports[2]);
            uf.union(x.ports[1], x.ports[3]);
        }
        let mut groups: BTreeMap<EdgeId, Vec<EdgeId>> = BTreeMap::new();
        for &e in self.edge_ends.keys() {
            groups.entry(uf.find(e)).or_default().push(e);
        }
        let mut components: Vec<Vec<EdgeId>> = groups.into_values().collect();
        for c in &self.circles {
            components.push(vec![*c]);
        }
        components.sort_by_key(|v| v[0]);
        for (i, comp) in components.iter().enumerate() {
            for &e in comp {
                self.component_of_edge.insert(e, i);
            }
        }
        self.components = components;
        Ok(())
    }

    /// Fix the original orientation of every edge. Under-strands force the
    /// direction a -> c; the rest propagates along strands. Components that
    /// never pass under a crossing are oriented by a canonical rule on their
    /// smallest edge.
    fn orient(&mut self) -> Result<()> {
        let mut tail: BTreeMap<EdgeId, usize> = BTreeMap::new();
        let mut set_tail = |tail: &mut BTreeMap<EdgeId, usize>, e: EdgeId, idx: usize| -> Result<()> {
            match tail.get(&e) {
                None => {
                    tail.insert(e, idx);
                    Ok(())
                }
                Some(&old) if old == idx => Ok(()),
                Some(_) => Err(Error::Invalid(format!(
                    "inconsistent orientation at edge {e}"
                ))),
            }
        };

        let end_index = |ends: &[End; 2], want: End| -> usize {
            if ends[0] == want {
                0
            } else {
                debug_assert_eq!(ends[1], want);
                1
            }
        };

        // Seed with under-strand directions.
        for (c, x) in self.crossings.iter().enumerate() {
            let a = x.ports[0];
            let out = x.ports[2];
            // head of `a` is this port, so its tail is the other endpoint
            let ends_a = self.edge_ends[&a];
            let head_idx = end_index(&ends_a, End::Port { crossing: c as u32, port: 0 });
            set_tail(&mut tail, a, 1 - head_idx)?;
            let ends_o = self.edge_ends[&out];
            let tail_idx = end_index(&ends_o, End::Port { crossing: c as u32, port: 2 });
            set_tail(&mut tail, out, tail_idx)?;
        }

        // Propagate along strands through crossings until stable; then fix
        // any all-over component canonically and propagate again.
        loop {
            let mut changed = true;
            while changed {
                changed = false;
                for (c, x) in self.crossings.iter().enumerate() {
                    for (p, q) in [(0usize, 2usize), (1, 3)] {
                        let (ep, eq) = (x.ports[p], x.ports[q]);
                        let end_p = End::Port { crossing: c as u32, port: p as u8 };
                        let end_q = End::Port { crossing: c as u32, port: q as u8 };
                        // Self-loop between the paired ports: orientation of the
                        // loop through this crossing is already consistent.
                        if ep == eq {
                            continue;
                        }
                        let known_p = tail.get(&ep).copied();
                        let known_q = tail.get(&eq).copied();
                        let idx_p = end_index(&self.edge_ends[&ep], end_p);
                        let idx_q = end_index(&self.edge_ends[&eq], end_q);
                        // The strand runs through the crossing: exactly one of
                        // ep/eq is incoming (head at the port).
                        match (known_p, known_q) {
                            (Some(tp), None) => {
                                let p_incoming = tp != idx_p;
                                // if ep comes in, eq goes out (tail at port) and
                                // vice versa
                                let tq = if p_incoming { idx_q } else { 1 - idx_q };
                                set_tail(&mut tail, eq, tq)?;
                                changed = true;
                            }
                            (None, Some(tq)) => {
                                let q_incoming = tq != idx_q;
                                let tp = if q_incoming { idx_p } else { 1 - idx_p };
                                set_tail(&mut tail, ep, tp)?;
                                changed = true;
                            }
                            (Some(tp), Some(tq)) => {
                                let p_incoming = tp != idx_p;
                                let q_incoming = tq != idx_q;
                                if p_incoming == q_incoming {
                                    return Err(Error::Invalid(format!(
                                        "inconsistent orientation at crossing {c}"
                                    )));
                                }
                            }
                            (None, None) => {}
                        }
                    }
                }
            }
            // Components not yet oriented (all-over strands): orient the
            // smallest edge away from its boundary endpoint if it has one,
            // else away from its smaller endpoint.
            let mut seeded = false;
            for comp in &self.components {
                let e = comp[0];
                if Self::is_circle_edge(e) || tail.contains_key(&e) {
                    continue;
                }
                let ends = self.edge_ends[&e];
                let idx = match (ends[0], ends[1]) {
                    (End::Leaf { .. }, _) => 0,
                    (_, End::Leaf { .. }) => 1,
                    (a, b) => {
                        if a <= b {
                            0
                        } else {
                            1
                        }
                    }
                };
                tail.insert(e, idx);
                seeded = true;
                break;
            }
            if !seeded {
                break;
            }
        }

        for &e in self.edge_ends.keys() {
            if !tail.contains_key(&e) {
                return Err(Error::Invalid(format!("could not orient edge {e}")));
            }
        }
        self.tail_of_edge = tail;

        // Crossing signs: positive means the over-strand enters at port b.
        self.signs = self
            .crossings
            .iter()
            .enumerate()
            .map(|(c, x)| {
                let b = x.ports[1];
                let ends = self.edge_ends[&b];
                let idx_b = if ends[0] == (End::Port { crossing: c as u32, port: 1 }) {
                    0
                } else {
                    1
                };
                let incoming = self.tail_of_edge[&b] != idx_b;
                // A self-loop b-d looks incoming at exactly one of the two
                // ports; using port b is well defined.
                if x.ports[1] == x.ports[3] {
                    let other_idx = 1 - idx_b;
                    debug_assert!(
                        ends[other_idx] == (End::Port { crossing: c as u32, port: 3 })
                    );
                }
                if incoming {
                    1
                } else {
                    -1
                }
            })
            .collect();
        Ok(())
    }

    fn dart_count(&self) -> usize {
        self.crossings.len() * 4 + self.boundary_declared.len()
    }

    fn dart_of_end(&self, end: End) -> usize {
        match end {
            End::Port { crossing, port } => crossing as usize * 4 + port as usize,
            End::Leaf { pos } => self.crossings.len() * 4 + pos as usize,
        }
    }

    fn vertex_of_dart(&self, d: usize) -> usize {
        // crossings then leaves
        if d < self.crossings.len() * 4 {
            d / 4
        } else {
            self.crossings.len() + (d - self.crossings.len() * 4)
        }
    }

    /// Faces of the rotation system, planarity check, sector splitting and
    /// region numbering. Region 0 is the marked/outer region.
    fn build_regions(&mut self) -> Result<()> {
        let nd = self.dart_count();
        if nd == 0 {
            // Only declared circles (possibly none). Host region plus one
            // inside region per circle.
            self.region_count = 1 + self.circles.len();
            self.circle_inside_region = (0..self.circles.len()).map(|i| 1 + i).collect();
            return Ok(());
        }

        // alpha: other end of the same edge; sigma: next port counterclockwise.
        let mut alpha = vec![usize::MAX; nd];
        for ends in self.edge_ends.values() {
            let d0 = self.dart_of_end(ends[0]);
            let d1 = self.dart_of_end(ends[1]);
            alpha[d0] = d1;
            alpha[d1] = d0;
        }
        let sigma = |d: usize| -> usize {
            if d < self.crossings.len() * 4 {
                d / 4 * 4 + (d % 4 + 1) % 4
            } else {
                d
            }
        };

        // Face orbits of sigma . alpha; the orbit of a dart is the region to
        // the right when travelling away from the dart's base vertex.
        let mut face_of_dart = vec![usize::MAX; nd];
        let mut faces: Vec<Vec<usize>> = Vec::new();
        for d0 in 0..nd {
            if face_of_dart[d0] != usize::MAX {
                continue;
            }
            let id = faces.len();
            let mut orbit = Vec::new();
            let mut d = d0;
            loop {
                face_of_dart[d] = id;
                orbit.push(d);
                d = sigma(alpha[d]);
                if d == d0 {
                    break;
                }
            }
            faces.push(orbit);
        }

        // Connected pieces over vertices (crossings + leaves).
        let n_vert = self.crossings.len() + self.boundary_declared.len();
        let mut uf = UnionFind::new();
        for v in 0..n_vert {
            uf.add(v as u32);
        }
        for ends in self.edge_ends.values() {
            let v0 = self.vertex_of_dart(self.dart_of_end(ends[0])) as u32;
            let v1 = self.vertex_of_dart(self.dart_of_end(ends[1])) as u32;
            uf.union(v0, v1);
        }
        let mut piece_of_vertex: HashMap<u32, usize> = HashMap::new();
        let mut pieces: Vec<Vec<usize>> = Vec::new();
        for v in 0..n_vert {
            let r = uf.find(v as u32);
            let id = *piece_of_vertex.entry(r).or_insert_with(|| {
                pieces.push(Vec::new());
                pieces.len() - 1
            });
            pieces[id].push(v);
        }

        // Euler check per piece: V - E + F = 2 on the sphere.
        let mut piece_of_face = vec![usize::MAX; faces.len()];
        for (f, orbit) in faces.iter().enumerate() {
            let v = self.vertex_of_dart(orbit[0]);
            piece_of_face[f] = *piece_of_vertex.get(&uf.find(v as u32)).unwrap();
        }
        for (pid, verts) in pieces.iter().enumerate() {
            let vset: BTreeSet<usize> = verts.iter().copied().collect();
            let v = verts.len();
            let e = self
                .edge_ends
                .values()
                .filter(|ends| vset.contains(&self.vertex_of_dart(self.dart_of_end(ends[0]))))
                .count();
            let f = piece_of_face.iter().filter(|&&p| p == pid).count();
            if v + f != e + 2 {
                return Err(Error::NonPlanar(format!(
                    "Euler check failed on a connected piece: V={v} E={e} F={f}"
                )));
            }
        }

        // Region numbering. For a tangle the outer face of the piece holding
        // the boundary splits into sectors along the boundary circle; every
        // other piece's canonical outer face merges into region 0.
        let n_cross_darts = self.crossings.len() * 4;
        let mut region_of_face: Vec<Option<usize>> = vec![None; faces.len()];
        let mut region_of_dart = vec![usize::MAX; nd];
        let mut next_region;

        if !self.boundary_declared.is_empty() {
            // Main piece: the one containing leaf 0.
            let leaf_vertex0 = self.crossings.len();
            let main_piece = piece_of_vertex[&uf.find(leaf_vertex0 as u32)];
            for pos in 0..self.boundary_declared.len() {
                let v = self.crossings.len() + pos;
                if piece_of_vertex[&uf.find(v as u32)] != main_piece {
                    return Err(Error::Invalid(
                        "all boundary points must lie in one connected piece".into(),
                    ));
                }
            }
            // All leaf darts must share a single face: the outside of the disk.
            let leaf_dart = |pos: usize| n_cross_darts + pos;
            let outer_face = face_of_dart[leaf_dart(0)];
            for pos in 0..self.boundary_declared.len() {
                if face_of_dart[leaf_dart(pos)] != outer_face {
                    return Err(Error::NonPlanar(
                        "boundary points are not accessible from a common outer region".into(),
                    ));
                }
            }
            // Walk the outer face starting at the marked leaf dart; record the
            // cyclic order of leaves and assign darts to sectors. A sector
            // starts at each leaf dart.
            let orbit = &faces[outer_face];
            let start = orbit
                .iter()
                .position(|&d| d == leaf_dart(0))
                .expect("marked leaf dart in outer orbit");
            let k = self.boundary_declared.len();
            // sector regions: 0..k, sector 0 (the marked region) begins at the
            // marked point
            next_region = k;
            let mut sector = usize::MAX;
            let mut cyclic = Vec::new();
            for i in 0..orbit.len() {
                let d = orbit[(start + i) % orbit.len()];
                if d >= n_cross_darts {
                    let pos = d - n_cross_darts;
                    cyclic.push(self.boundary_declared[pos]);
                    sector = if sector == usize::MAX { 0 } else { sector + 1 };
                }
                region_of_dart[d] = sector;
            }
            debug_assert_eq!(cyclic.len(), k);
            self.boundary_cyclic = cyclic;
            region_of_face[outer_face] = Some(usize::MAX); // handled dart-wise

            // Remaining faces of the main piece get fresh regions.
            for (f, orbit) in faces.iter().enumerate() {
                if piece_of_face[f] == main_piece && f != outer_face {
                    region_of_face[f] = Some(next_region);
                    for &d in orbit {
                        region_of_dart[d] = next_region;
                    }
                    next_region += 1;
                }
            }
            // Extra closed pieces: canonical outer face merges into region 0.
            for pid in 0..pieces.len() {
                if pid == main_piece {
                    continue;
                }
                self.number_closed_piece(
                    pid,
                    &faces,
                    &piece_of_face,
                    &mut region_of_face,
                    &mut region_of_dart,
                    &mut next_region,
                    0,
                );
            }
        } else {
            // Link: region 0 is the merged outer region of all pieces.
            next_region = 1;
            for pid in 0..pieces.len() {
                self.number_closed_piece(
                    pid,
                    &faces,
                    &piece_of_face,
                    &mut region_of_face,
                    &mut region_of_dart,
                    &mut next_region,
                    0,
                );
            }
        }

        // Declared circles each enclose one fresh region; they sit in the
        // marked/outer region.
        self.circle_inside_region = (0..self.circles.len())
            .map(|_| {
                let r = next_region;
                next_region += 1;
                r
            })
            .collect();

        self.region_of_dart = region_of_dart;
        self.region_count = next_region;
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn number_closed_piece(
        &self,
        pid: usize,
        faces: &[Vec<usize>],
        piece_of_face: &[usize],
        region_of_face: &mut [Option<usize>],
        region_of_dart: &mut [usize],
        next_region: &mut usize,
        host_region: usize,
    ) {
        // Canonical outer face: the one containing the piece's smallest dart.
        let outer = (0..faces.len())
            .filter(|&f| piece_of_face[f] == pid)
            .min_by_key(|&f| faces[f].iter().min().copied().unwrap())
            .expect("piece has a face");
        for f in 0..faces.len() {
            if piece_of_face[f] != pid {
                continue;
            }
            let r = if f == outer {
                host_region
            } else {
                let r = *next_region;
                *next_region += 1;
                r
            };
            region_of_face[f] = Some(r);
            for &d in &faces[f] {
                region_of_dart[d] = r;
            }
        }
    }

    /// Region to the right when travelling along `edge` away from endpoint
    /// `tail_idx`.
    pub(crate) fn right_region(&self, edge: EdgeId, tail_idx: usize) -> usize {
        let ends = self.edge_ends[&edge];
        self.region_of_dart[self.dart_of_end(ends[tail_idx])]
    }

    pub(crate) fn edge_ends(&self, edge: EdgeId) -> [End; 2] {
        self.edge_ends[&edge]
    }

    pub(crate) fn tail_index(&self, edge: EdgeId) -> usize {
        self.tail_of_edge[&edge]
    }

    pub(crate) fn circle_inside_region(&self, circle_pos: usize) -> usize {
        self.circle_inside_region[circle_pos]
    }

    /// The unique checkerboard colouring with the marked/outer region green.
    pub fn checkerboard(&self) -> CheckerboardColouring {
        let mut colours: Vec<Option<Colour>> = vec![None; self.region_count];
        colours[0] = Some(Colour::Green);
        // Adjacency across every edge; repeat until stable (the region
        // adjacency graph is connected through region 0 piece by piece).
        let mut changed = true;
        while changed {
            changed = false;
            for ends in self.edge_ends.values() {
                let r0 = self.region_of_dart[self.dart_of_end(ends[0])];
                let r1 = self.region_of_dart[self.dart_of_end(ends[1])];
                match (colours[r0], colours[r1]) {
                    (Some(a), None) => {
                        colours[r1] = Some(a.other());
                        changed = true;
                    }
                    (None, Some(b)) => {
                        colours[r0] = Some(b.other());
                        changed = true;
                    }
                    (Some(a), Some(b)) => {
                        assert_ne!(a, b, "checkerboard conflict between regions {r0} and {r1}");
                    }
                    (None, None) => {}
                }
            }
        }
        for (pos, &r) in self.circle_inside_region.iter().enumerate() {
            let _ = pos;
            colours[r] = Some(Colour::Red);
        }
        let colours: Vec<Colour> = colours
            .into_iter()
            .map(|c| c.expect("all regions coloured"))
            .collect();
        CheckerboardColouring { colours }
    }

    /// Sign of crossing `x` under orientation `o`.
    pub fn crossing_sign(&self, x: usize, o: &Orientation) -> i8 {
        let cr = &self.crossings[x];
        let cu = self.component_of_edge[&cr.ports[0]];
        let co = self.component_of_edge[&cr.ports[1]];
        let mut s = self.signs[x];
        if o.reversed[cu] {
            s = -s;
        }
        if o.reversed[co] {
            s = -s;
        }
        s
    }

    pub fn crossing_sign_original(&self, x: usize) -> i8 {
        self.signs[x]
    }

    /// Count of crossings negative under the original orientation.
    pub fn n_minus(&self) -> usize {
        self.signs.iter().filter(|&&s| s < 0).count()
    }

    /// Unhalved linking sum between the orientation-preserved and the
    /// orientation-reversed parts, with signs taken in the original
    /// orientation.
    pub fn linking_sum(&self, o: &Orientation) -> i64 {
        self.crossings
            .iter()
            .enumerate()
            .filter(|(_, cr)| {
                let cu = self.component_of_edge[&cr.ports[0]];
                let co = self.component_of_edge[&cr.ports[1]];
                o.reversed[cu] != o.reversed[co]
            })
            .map(|(x, _)| self.signs[x] as i64)
            .sum()
    }
}

struct UnionFind {
    parent: HashMap<u32, u32>,
}

impl UnionFind {
    fn new() -> Self {
        UnionFind { parent: HashMap::new() }
    }

    fn add(&mut self, x: u32) {
        self.parent.entry(x).or_insert(x);
    }

    fn find(&mut self, x: u32) -> u32 {
        let p = self.parent[&x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.parent.insert(x, r);
        r
    }

    fn union(&mut self, a: u32, b: u32) {
        self.add(a);
        self.add(b);
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent.insert(ra.max(rb), ra.min(rb));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TREFOIL: &str = "X 1 4 2 5\nX 3 6 4 1\nX 5 2 6 3\n";

    #[test]
    fn parse_trefoil() {
        let d = TangleDiagram::parse(TREFOIL).unwrap();
        assert_eq!(d.crossing_count(), 3);
        assert_eq!(d.component_count(), 1);
        assert!(d.is_closed());
        // all three crossings positive under this labelling
        assert_eq!(d.n_minus(), 0);
        for x in 0..3 {
            assert_eq!(d.crossing_sign_original(x), 1);
        }
    }

    #[test]
    fn trefoil_regions() {
        let d = TangleDiagram::parse(TREFOIL).unwrap();
        let cb = d.checkerboard();
        assert_eq!(cb.region_count(), 5);
        assert_eq!(cb.colour(0), Colour::Green);
        // adjacent regions differ across every edge
        for e in d.edge_ends.keys() {
            let r0 = d.right_region(*e, 0);
            let r1 = d.right_region(*e, 1);
            assert_ne!(cb.colour(r0), cb.colour(r1));
        }
    }

    #[test]
    fn parse_single_crossing_tangle() {
        let d = TangleDiagram::parse("X 1 3 2 4\nBOUNDARY 1 2 3 4\n").unwrap();
        assert_eq!(d.crossing_count(), 1);
        assert_eq!(d.component_count(), 2);
        assert!(!d.is_closed());
        assert_eq!(d.boundary().len(), 4);
        assert_eq!(d.boundary()[0], 1); // marked point
        // positive crossing under the canonical orientation of the over strand
        assert_eq!(d.crossing_sign_original(0), 1);
        // 4 boundary sectors plus nothing else
        let cb = d.checkerboard();
        assert_eq!(cb.region_count(), 4);
        assert_eq!(cb.colour(0), Colour::Green);
    }

    #[test]
    fn parse_unknot_zero_crossing() {
        let d = TangleDiagram::parse("# unknot\nCIRCLES 1\n").unwrap();
        assert_eq!(d.crossing_count(), 0);
        assert_eq!(d.component_count(), 1);
        let cb = d.checkerboard();
        assert_eq!(cb.region_count(), 2);
        assert_eq!(cb.colour(0), Colour::Green);
        assert_eq!(cb.colour(1), Colour::Red);
    }

    #[test]
    fn parse_kinked_unknot() {
        let d = TangleDiagram::parse("X 1 2 2 1\n").unwrap();
        assert_eq!(d.component_count(), 1);
        assert_eq!(d.crossing_sign_original(0), 1);
        assert_eq!(d.n_minus(), 0);
    }

    #[test]
    fn reject_bad_label_count() {
        let err = TangleDiagram::parse("X 1 2 3 4\n").unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
    }

    #[test]
    fn reject_malformed_token() {
        let err = TangleDiagram::parse("X 1 2 three 4\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn reject_odd_boundary() {
        let err = TangleDiagram::parse("BOUNDARY 1 2 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn reject_nonplanar() {
        // Two circles meeting at two crossings, with rotations that only
        // close up on a torus.
        let err = TangleDiagram::parse("X 1 2 3 4\nX 3 4 1 2\n").unwrap_err();
        assert!(matches!(err, Error::NonPlanar(_)), "got {err:?}");
    }

    #[test]
    fn reject_inconsistent_orientation() {
        let err = TangleDiagram::parse("X 1 2 3 4\nX 1 2 3 4\n").unwrap_err();
        assert!(matches!(err, Error::Invalid(_)), "got {err:?}");
    }

    #[test]
    fn crossing_sign_flips_with_single_reversal() {
        let d = TangleDiagram::parse("X 1 3 2 4\nBOUNDARY 1 2 3 4\n").unwrap();
        let o0 = Orientation::original(2);
        assert_eq!(d.crossing_sign(0, &o0), 1);
        let o1 = Orientation { reversed: vec![true, false] };
        assert_eq!(d.crossing_sign(0, &o1), -1);
        let o2 = Orientation { reversed: vec![true, true] };
        assert_eq!(d.crossing_sign(0, &o2), 1);
    }

    #[test]
    fn linking_sum_single_crossing() {
        let d = TangleDiagram::parse("X 1 3 2 4\nBOUNDARY 1 2 3 4\n").unwrap();
        assert_eq!(d.linking_sum(&Orientation::original(2)), 0);
        let one_reversed = Orientation { reversed: vec![true, false] };
        assert_eq!(d.linking_sum(&one_reversed), 1);
        assert_eq!(d.linking_sum(&one_reversed.toggled()), 1);
    }

    #[test]
    fn linking_sum_all_original_is_zero() {
        let d = TangleDiagram::parse(TREFOIL).unwrap();
        for o in d.all_orientations() {
            if o.reversed.iter().all(|&r| !r) {
                assert_eq!(d.linking_sum(&o), 0);
            }
        }
    }
}
