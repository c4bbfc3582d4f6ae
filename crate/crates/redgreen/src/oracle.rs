//! Brute-force homology oracle: a rank-two Frobenius algebra evaluates the
//! cube of resolutions of a closed diagram into an exact rational chain
//! complex, whose ranks come from fraction-free Gaussian elimination.
//!
//! The algebra is pinned by the local relations rather than quoted: with
//! basis {1, X}, counit e(1) = 0, e(X) = 1 and X.X = delta, duality under
//! the pairing e(ab) forces D(1) = 1(x)X + X(x)1 and D(X) = X(x)X +
//! delta 1(x)1, and `verify_relations` checks the four relation pictures
//! and the Frobenius axioms at startup. Evaluation works on raw cube
//! generators, so this path never touches the cobordism normal forms it is
//! used to check.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::cobordism::{CobGenerator, CobMorphism, CurveRef, Theory};
use crate::complex::{cube, Cube, FormalComplex};
use crate::diagram::TangleDiagram;
use crate::error::{Error, Result};
use crate::karoubi::ColouredMorphism;
use crate::karoubi::Morphism as _;
use crate::smoothing::Smoothing;

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// An element of the rank-two algebra: coefficients of 1 and X.
type Elem = [BigRational; 2];

fn elem(a: i64, b: i64) -> Elem {
    [q(a), q(b)]
}

/// The Frobenius structure used by the oracle; only the double-dot value
/// differs between theories.
#[derive(Clone, Debug)]
pub struct FrobeniusData {
    delta: i64,
}

impl FrobeniusData {
    pub fn new(theory: Theory) -> Result<FrobeniusData> {
        let f = FrobeniusData { delta: theory.delta() as i64 };
        f.verify_relations()?;
        Ok(f)
    }

    pub fn unit(&self) -> Elem {
        elem(1, 0)
    }

    pub fn counit(&self, v: &Elem) -> BigRational {
        // e(1) = 0, e(X) = 1
        v[1].clone()
    }

    pub fn mult(&self, a: &Elem, b: &Elem) -> Elem {
        // (a0 + a1 X)(b0 + b1 X) with X.X = delta
        [
            &a[0] * &b[0] + q(self.delta) * &a[1] * &b[1],
            &a[0] * &b[1] + &a[1] * &b[0],
        ]
    }

    /// Comultiplication from duality: D(1) = 1(x)X + X(x)1,
    /// D(X) = X(x)X + delta 1(x)1.
    pub fn comult(&self, v: &Elem) -> Vec<(usize, usize, BigRational)> {
        let mut out = Vec::new();
        if !v[0].is_zero() {
            out.push((0, 1, v[0].clone()));
            out.push((1, 0, v[0].clone()));
        }
        if !v[1].is_zero() {
            out.push((1, 1, v[1].clone()));
            if self.delta != 0 {
                out.push((0, 0, q(self.delta) * &v[1]));
            }
        }
        out
    }

    pub fn dot(&self, v: &Elem) -> Elem {
        self.mult(v, &elem(0, 1))
    }

    /// The handle operator: multiply by m(D(1)) = 2X.
    pub fn handle(&self, v: &Elem) -> Elem {
        let two_x = elem(0, 2);
        self.mult(v, &two_x)
    }

    /// Startup check: the four local-relation pictures and the Frobenius
    /// axioms hold for this structure.
    pub fn verify_relations(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::Mismatch(format!("relation check failed: {what}")));
        let basis = [elem(1, 0), elem(0, 1)];
        // sphere = 0 and dotted sphere = 1
        if !self.counit(&self.unit()).is_zero() {
            return fail("sphere");
        }
        if self.counit(&self.dot(&self.unit())) != q(1) {
            return fail("dotted sphere");
        }
        // double dot = delta
        for v in &basis {
            let vv = self.dot(&self.dot(v));
            let dv = [q(self.delta) * &v[0], q(self.delta) * &v[1]];
            if vv != dv {
                return fail("double dot");
            }
        }
        // neck-cutting: id = cup . dotted-cap + dotted-cup . cap
        for v in &basis {
            let lhs = v.clone();
            let c1 = self.counit(&self.dot(v));
            let c2 = self.counit(v);
            let rhs = [c1, c2];
            if lhs != rhs {
                return fail("neck-cutting");
            }
        }
        // associativity and the Frobenius compatibility
        for a in &basis {
            for b in &basis {
                for c in &basis {
                    let l = self.mult(&self.mult(a, b), c);
                    let r = self.mult(a, &self.mult(b, c));
                    if l != r {
                        return fail("associativity");
                    }
                }
            }
        }
        // coassociativity: (D (x) id) D = (id (x) D) D as maps A -> A^3
        for v in &basis {
            let mut left: BTreeMap<(usize, usize, usize), BigRational> = BTreeMap::new();
            for (i, j, c) in self.comult(v) {
                for (i1, i2, c2) in self.comult(&basis[i]) {
                    *left.entry((i1, i2, j)).or_insert_with(BigRational::zero) += &c * c2;
                }
            }
            let mut right: BTreeMap<(usize, usize, usize), BigRational> = BTreeMap::new();
            for (i, j, c) in self.comult(v) {
                for (j1, j2, c2) in self.comult(&basis[j]) {
                    *right.entry((i, j1, j2)).or_insert_with(BigRational::zero) += &c * c2;
                }
            }
            left.retain(|_, c| !c.is_zero());
            right.retain(|_, c| !c.is_zero());
            if left != right {
                return fail("coassociativity");
            }
        }
        // D m = (m (x) id)(id (x) D) on basis pairs
        for a in 0..2usize {
            for b in 0..2usize {
                let prod = self.mult(&basis[a], &basis[b]);
                let mut lhs: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
                for (i, j, c) in self.comult(&prod) {
                    *lhs.entry((i, j)).or_insert_with(BigRational::zero) += c;
                }
                let mut rhs: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
                for (i, j, c) in self.comult(&basis[b]) {
                    let m = self.mult(&basis[a], &basis[i]);
                    for (k, coeff) in m.iter().enumerate() {
                        if !coeff.is_zero() {
                            *rhs.entry((k, j)).or_insert_with(BigRational::zero) += &c * coeff;
                        }
                    }
                }
                lhs.retain(|_, c| !c.is_zero());
                rhs.retain(|_, c| !c.is_zero());
                if lhs != rhs {
                    return fail("frobenius compatibility");
                }
            }
        }
        Ok(())
    }
}

/// Dense exact matrix, rows x cols.
#[derive(Clone, Debug, PartialEq)]
pub struct QMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<BigRational>,
}

impl QMatrix {
    pub fn zero(rows: usize, cols: usize) -> QMatrix {
        QMatrix { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> QMatrix {
        let mut m = QMatrix::zero(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigRational::one();
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> &BigRational {
        &self.data[r * self.cols + c]
    }

    pub fn add_at(&mut self, r: usize, c: usize, v: BigRational) {
        self.data[r * self.cols + c] += v;
    }

    pub fn mul(&self, rhs: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, rhs.rows);
        let mut out = QMatrix::zero(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if !b.is_zero() {
                        out.data[i * rhs.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, s: &BigRational) -> QMatrix {
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, rhs: &QMatrix) -> QMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Rank by fraction-free (Bareiss) elimination over the integers after
    /// clearing denominators row by row. Runs in machine integers while the
    /// entries fit and falls back to big integers on overflow, staying
    /// exact either way.
    pub fn rank(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        match self.rank_i128() {
            Some(r) => r,
            None => self.rank_bigint(),
        }
    }

    fn rank_i128(&self) -> Option<usize> {
        let mut m: Vec<Vec<i128>> = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut lcm: i128 = 1;
            for j in 0..self.cols {
                let d = i128::try_from(self.get(i, j).denom()).ok()?;
                let g = gcd_i128(lcm, d);
                lcm = lcm.checked_mul(d / g)?;
            }
            let mut row = Vec::with_capacity(self.cols);
            for j in 0..self.cols {
                let x = self.get(i, j);
                let n = i128::try_from(x.numer()).ok()?;
                let d = i128::try_from(x.denom()).ok()?;
                row.push(n.checked_mul(lcm / d)?);
            }
            m.push(row);
        }
        let (rows, cols) = (self.rows, self.cols);
        let mut rank = 0usize;
        let mut prev: i128 = 1;
        let mut row = 0usize;
        for col in 0..cols {
            let Some(p) = (row..rows).find(|&r| m[r][col] != 0) else {
                continue;
            };
            m.swap(row, p);
            let pivot = m[row][col];
            for r in row + 1..rows {
                let lead = m[r][col];
                for c in col..cols {
                    let v = pivot.checked_mul(m[r][c])?.checked_sub(lead.checked_mul(m[row][c])?)?;
                    m[r][c] = v / prev;
                }
            }
            prev = pivot;
            row += 1;
            rank += 1;
            if row == rows {
                break;
            }
        }
        Some(rank)
    }

    fn rank_bigint(&self) -> usize {
        let mut m: Vec<Vec<BigInt>> = (0..self.rows)
            .map(|i| {
                let row: Vec<&BigRational> = (0..self.cols).map(|j| self.get(i, j)).collect();
                let lcm = row
                    .iter()
                    .map(|x| x.denom().clone())
                    .fold(BigInt::one(), |acc, d| {
                        let g = gcd(&acc, &d);
                        &acc / g * d
                    });
                row.iter().map(|x| x.numer() * (&lcm / x.denom())).collect()
            })
            .collect();
        let (rows, cols) = (self.rows, self.cols);
        let mut rank = 0usize;
        let mut prev = BigInt::one();
        let mut row = 0usize;
        for col in 0..cols {
            let Some(p) = (row..rows).find(|&r| !m[r][col].is_zero()) else {
                continue;
            };
            m.swap(row, p);
            let pivot = m[row][col].clone();
            for r in row + 1..rows {
                let lead = m[r][col].clone();
                for c in col..cols {
                    let v = (&pivot * &m[r][c] - &lead * &m[row][c]) / &prev;
                    m[r][c] = v;
                }
            }
            prev = pivot;
            row += 1;
            rank += 1;
            if row == rows {
                break;
            }
        }
        rank
    }
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    if a == 0 {
        1
    } else {
        a
    }
}

fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let (mut a, mut b) = (a.abs(), b.abs());
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    if a.is_zero() {
        BigInt::one()
    } else {
        a
    }
}

/// A chain complex of finite-dimensional rational vector spaces.
#[derive(Clone, Debug)]
pub struct RationalChainComplex {
    pub dims: BTreeMap<i64, usize>,
    /// Differential out of height h, of shape dims[h+1] x dims[h].
    pub diffs: BTreeMap<i64, QMatrix>,
}

impl RationalChainComplex {
    pub fn verify_d_squared(&self) -> Result<()> {
        for (&h, d0) in &self.diffs {
            if let Some(d1) = self.diffs.get(&(h + 1)) {
                if !d1.mul(d0).is_zero() {
                    return Err(Error::Mismatch(format!("oracle d.d != 0 at height {h}")));
                }
            }
        }
        Ok(())
    }

    pub fn total_dim(&self) -> usize {
        self.dims.values().sum()
    }
}

/// Per-height homology ranks: dim - rank(out) - rank(in).
pub fn homology_ranks(c: &RationalChainComplex) -> BTreeMap<i64, usize> {
    let diff_rank: BTreeMap<i64, usize> =
        c.diffs.iter().map(|(&h, m)| (h, m.rank())).collect();
    let mut out = BTreeMap::new();
    for (&h, &dim) in &c.dims {
        let rank_out = diff_rank.get(&h).copied().unwrap_or(0);
        let rank_in = diff_rank.get(&(h - 1)).copied().unwrap_or(0);
        let rank = dim - rank_out - rank_in;
        if rank > 0 {
            out.insert(h, rank);
        }
    }
    out
}

/// Tensor-network evaluation of one raw generator: each component
/// multiplies its inputs, applies handles and dots, and comultiplies into
/// its outputs. Returns the 2^|tgt| x 2^|src| matrix over the circle bases.
pub fn evaluate_generator(
    f: &FrobeniusData,
    gen: &CobGenerator,
    src: &Smoothing,
    tgt: &Smoothing,
) -> Result<QMatrix> {
    if !src.boundary().is_empty() || !tgt.boundary().is_empty() {
        return Err(Error::OpenBoundary);
    }
    let (ns, nt) = (src.len(), tgt.len());
    let mut out = QMatrix::zero(1 << nt, 1 << ns);
    // scalar factor from closed pieces
    let mut closed_factor = BigRational::one();
    for cc in &gen.closed {
        let mut v = f.unit();
        for _ in 0..cc.genus {
            v = f.handle(&v);
        }
        for _ in 0..cc.dots {
            v = f.dot(&v);
        }
        closed_factor *= f.counit(&v);
    }
    if closed_factor.is_zero() {
        return Ok(out);
    }

    for src_mask in 0..(1usize << ns) {
        // per component: a distribution over assignments to its target circles
        let mut dist: Vec<(usize, BigRational)> = vec![(0usize, closed_factor.clone())];
        for comp in &gen.comps {
            let mut v = f.unit();
            let mut tgts: Vec<usize> = Vec::new();
            for &cr in &comp.curves {
                match cr {
                    CurveRef::Src(i) => {
                        let basis = if src_mask >> i & 1 == 1 { elem(0, 1) } else { elem(1, 0) };
                        v = f.mult(&v, &basis);
                    }
                    CurveRef::Tgt(j) => tgts.push(j),
                }
            }
            for _ in 0..comp.genus {
                v = f.handle(&v);
            }
            for _ in 0..comp.dots {
                v = f.dot(&v);
            }
            // comultiply into the component's target circles
            let mut local: Vec<(usize, BigRational)> = Vec::new();
            if tgts.is_empty() {
                let s = f.counit(&v);
                if !s.is_zero() {
                    local.push((0, s));
                }
            } else {
                // split v into k outputs; assignments are masks over tgts
                let mut parts: Vec<(Vec<usize>, BigRational)> = v
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(i, c)| (vec![i], c.clone()))
                    .collect();
                for _ in 1..tgts.len() {
                    let mut next = Vec::new();
                    for (assign, c) in parts {
                        let last = *assign.last().unwrap();
                        for (a, b, c2) in f.comult(&[
                            if last == 0 { BigRational::one() } else { BigRational::zero() },
                            if last == 1 { BigRational::one() } else { BigRational::zero() },
                        ]) {
                            let mut assign2 = assign.clone();
                            *assign2.last_mut().unwrap() = a;
                            assign2.push(b);
                            next.push((assign2, &c * c2));
                        }
                    }
                    parts = next;
                }
                for (assign, c) in parts {
                    let mut mask = 0usize;
                    for (pos, &j) in tgts.iter().enumerate() {
                        if assign[pos] == 1 {
                            mask |= 1 << j;
                        }
                    }
                    local.push((mask, c));
                }
            }
            // combine with the running distribution
            let mut combined = Vec::new();
            for (m1, c1) in &dist {
                for (m2, c2) in &local {
                    combined.push((m1 | m2, c1 * c2));
                }
            }
            dist = combined;
            if dist.is_empty() {
                break;
            }
        }
        for (tgt_mask, c) in dist {
            out.add_at(tgt_mask, src_mask, c);
        }
    }
    Ok(out)
}

/// Evaluate a normalized morphism (linear combination of generators).
pub fn evaluate_morphism(f: &FrobeniusData, m: &CobMorphism) -> Result<QMatrix> {
    let mut out = QMatrix::zero(1 << m.tgt().len(), 1 << m.src().len());
    for (g, c) in m.terms() {
        let (num, den) = c.as_fraction();
        let scalar = BigRational::new(BigInt::from(num), BigInt::from(den));
        out = out.add(&evaluate_generator(f, g, m.src(), m.tgt())?.scale(&scalar));
    }
    Ok(out)
}

fn block_offsets(objs: &[Smoothing]) -> (Vec<usize>, usize) {
    let mut offs = Vec::with_capacity(objs.len());
    let mut total = 0usize;
    for s in objs {
        offs.push(total);
        total += 1 << s.len();
    }
    (offs, total)
}

/// Evaluate the cube of a closed diagram directly from the raw edge
/// generators.
pub fn tqft_evaluate_cube(cube: &Cube, f: &FrobeniusData) -> Result<RationalChainComplex> {
    let mut by_height: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (v, vert) in cube.vertices.iter().enumerate() {
        by_height.entry(vert.height).or_default().push(v);
    }
    let mut dims = BTreeMap::new();
    let mut offsets: Vec<usize> = vec![0; cube.vertices.len()];
    for (&h, verts) in &by_height {
        let objs: Vec<Smoothing> = verts
            .iter()
            .map(|&v| cube.vertices[v].resolved.smoothing.clone())
            .collect();
        let (offs, total) = block_offsets(&objs);
        for (k, &v) in verts.iter().enumerate() {
            offsets[v] = offs[k];
        }
        dims.insert(h, total);
    }
    let mut diffs: BTreeMap<i64, QMatrix> = BTreeMap::new();
    for e in &cube.edges {
        let h = cube.vertices[e.from].height;
        let rows = dims[&(h + 1)];
        let cols = dims[&h];
        let mat = diffs.entry(h).or_insert_with(|| QMatrix::zero(rows, cols));
        let src = &cube.vertices[e.from].resolved.smoothing;
        let tgt = &cube.vertices[e.to].resolved.smoothing;
        let block = evaluate_generator(f, &e.gen, src, tgt)?;
        let (ro, co) = (offsets[e.to], offsets[e.from]);
        let sign = q(e.sign as i64);
        for r in 0..block.rows {
            for c in 0..block.cols {
                let v = block.get(r, c);
                if !v.is_zero() {
                    mat.add_at(ro + r, co + c, v * &sign);
                }
            }
        }
    }
    let out = RationalChainComplex { dims, diffs };
    out.verify_d_squared()?;
    Ok(out)
}

/// Evaluate a cobordism-valued formal complex of closed smoothings.
pub fn tqft_evaluate(
    c: &FormalComplex<CobMorphism>,
    f: &FrobeniusData,
) -> Result<RationalChainComplex> {
    let mut dims = BTreeMap::new();
    let mut offsets: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for h in c.heights() {
        let (offs, total) = block_offsets(c.objects(h));
        offsets.insert(h, offs);
        dims.insert(h, total);
    }
    let mut diffs: BTreeMap<i64, QMatrix> = BTreeMap::new();
    for h in c.heights() {
        for (from, to, m) in c.entries(h) {
            let rows = dims[&(h + 1)];
            let cols = dims[&h];
            let mat = diffs.entry(h).or_insert_with(|| QMatrix::zero(rows, cols));
            let block = evaluate_morphism(f, m)?;
            let (ro, co) = (offsets[&(h + 1)][to], offsets[&h][from]);
            for r in 0..block.rows {
                for cc in 0..block.cols {
                    let v = block.get(r, cc);
                    if !v.is_zero() {
                        mat.add_at(ro + r, co + cc, v.clone());
                    }
                }
            }
        }
    }
    let out = RationalChainComplex { dims, diffs };
    out.verify_d_squared()?;
    Ok(out)
}

/// Evaluate a coloured complex: every coloured object spans the rank-one
/// image of its projection, so entries become scalars.
pub fn tqft_evaluate_coloured(
    c: &FormalComplex<ColouredMorphism>,
    f: &FrobeniusData,
) -> Result<RationalChainComplex> {
    let mut dims = BTreeMap::new();
    for h in c.heights() {
        dims.insert(h, c.objects(h).len());
    }
    let mut diffs: BTreeMap<i64, QMatrix> = BTreeMap::new();
    for h in c.heights() {
        for (from, to, m) in c.entries(h) {
            let rows = dims[&(h + 1)];
            let cols = dims[&h];
            let mat = diffs.entry(h).or_insert_with(|| QMatrix::zero(rows, cols));
            let scalar = coloured_scalar(f, m)?;
            if !scalar.is_zero() {
                mat.add_at(to, from, scalar);
            }
        }
    }
    let out = RationalChainComplex { dims, diffs };
    out.verify_d_squared()?;
    Ok(out)
}

/// The scalar by which a coloured morphism maps the projected basis vector
/// of its source to the one of its target.
fn coloured_scalar(f: &FrobeniusData, m: &ColouredMorphism) -> Result<BigRational> {
    let expanded = m.expand().map_err(|_| Error::OpenBoundary)?;
    let mat = evaluate_morphism(f, &expanded)?;
    // projected basis vectors: tensor of (1 + sX)/2 over circles
    let vec_of = |o: &crate::smoothing::ColouredSmoothing| -> Vec<BigRational> {
        let k = o.smoothing.len();
        let mut v = vec![BigRational::zero(); 1 << k];
        for mask in 0..(1usize << k) {
            let mut c = BigRational::new(BigInt::one(), BigInt::from(1i64 << k));
            for i in 0..k {
                if mask >> i & 1 == 1 && o.colours[i].sign() < 0 {
                    c = -c;
                }
            }
            v[mask] = c;
        }
        v
    };
    let sv = vec_of(m.src());
    let tv = vec_of(m.tgt());
    // image = mat . sv, and it must be a multiple of tv
    let mut img = vec![BigRational::zero(); mat.rows];
    for (r, item) in img.iter_mut().enumerate() {
        for (c, s) in sv.iter().enumerate() {
            if !s.is_zero() {
                *item += mat.get(r, c) * s;
            }
        }
    }
    let pivot = tv.iter().position(|x| !x.is_zero()).expect("projected vector nonzero");
    let scalar = &img[pivot] / &tv[pivot];
    for r in 0..img.len() {
        if img[r] != &scalar * &tv[r] {
            return Err(Error::Mismatch(
                "image of a coloured morphism is not a multiple of the target vector".into(),
            ));
        }
    }
    Ok(scalar)
}

/// Lee homology ranks of a closed diagram, straight from the raw cube.
pub fn lee_homology(d: &TangleDiagram) -> Result<BTreeMap<i64, usize>> {
    homology_of_theory(d, Theory::Lee)
}

pub fn homology_of_theory(d: &TangleDiagram, theory: Theory) -> Result<BTreeMap<i64, usize>> {
    if !d.is_closed() {
        return Err(Error::OpenBoundary);
    }
    let f = FrobeniusData::new(theory)?;
    let c = tqft_evaluate_cube(&cube(d), &f)?;
    Ok(homology_ranks(&c))
}

pub fn ranks_to_json(delta: u32, ranks: &BTreeMap<i64, usize>) -> serde_json::Value {
    let total: usize = ranks.values().sum();
    let map: serde_json::Map<String, serde_json::Value> = ranks
        .iter()
        .map(|(h, r)| (h.to_string(), serde_json::json!(r)))
        .collect();
    serde_json::json!({"delta": delta, "ranks": map, "total": total})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cobordism::test_support::{random_generator, random_smoothing_pair};
    use crate::smoothing::Curve;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub const HOPF_POS: &str = "X 1 2 4 3\nX 3 4 2 1\n";
    pub const TREFOIL: &str = "X 1 4 2 5\nX 3 6 4 1\nX 5 2 6 3\n";
    pub const FIG8: &str = "X 4 2 5 1\nX 8 6 1 5\nX 6 3 7 4\nX 2 7 3 8\n";
    pub const WHITEHEAD: &str = "X 6 1 7 2\nX 10 7 5 8\nX 4 5 1 6\nX 2 10 3 9\nX 8 4 9 3\n";

    #[test]
    fn frobenius_relations_hold() {
        FrobeniusData::new(Theory::Khovanov).unwrap();
        FrobeniusData::new(Theory::Lee).unwrap();
    }

    #[test]
    fn rank_of_small_matrices() {
        let id = QMatrix::identity(4);
        assert_eq!(id.rank(), 4);
        let mut m = QMatrix::zero(3, 3);
        // rows (1,2,3), (2,4,6), (0,1,1): rank 2
        for (r, row) in [[1i64, 2, 3], [2, 4, 6], [0, 1, 1]].iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                m.add_at(r, c, q(v));
            }
        }
        assert_eq!(m.rank(), 2);
        assert_eq!(QMatrix::zero(5, 7).rank(), 0);
        // fractional entries
        let mut fr = QMatrix::zero(2, 2);
        fr.add_at(0, 0, BigRational::new(BigInt::from(1), BigInt::from(2)));
        fr.add_at(1, 1, BigRational::new(BigInt::from(-3), BigInt::from(4)));
        assert_eq!(fr.rank(), 2);
    }

    #[test]
    fn identity_curtain_evaluates_to_identity() {
        let f = FrobeniusData::new(Theory::Lee).unwrap();
        let s = Smoothing::new(vec![Curve::circle(vec![5])]);
        let gen = crate::cobordism::canonical_generator(&s, &s);
        // the canonical generator splits the circle; the honest curtain is
        // one component
        let _ = gen;
        let curtain = CobGenerator::new(
            vec![crate::cobordism::CobComp::new([CurveRef::Src(0), CurveRef::Tgt(0)], 0, 0)],
            vec![],
        );
        let m = evaluate_generator(&f, &curtain, &s, &s).unwrap();
        assert_eq!(m, QMatrix::identity(2));
    }

    #[test]
    fn merge_saddle_values() {
        // merge of two circles into one: X (x) X maps to delta . 1
        let two = Smoothing::new(vec![Curve::circle(vec![5]), Curve::circle(vec![6])]);
        let one = Smoothing::new(vec![Curve::circle(vec![7])]);
        let pants = CobGenerator::new(
            vec![crate::cobordism::CobComp::new(
                [CurveRef::Src(0), CurveRef::Src(1), CurveRef::Tgt(0)],
                0,
                0,
            )],
            vec![],
        );
        for (theory, xx) in [(Theory::Khovanov, 0i64), (Theory::Lee, 1i64)] {
            let f = FrobeniusData::new(theory).unwrap();
            let m = evaluate_generator(&f, &pants, &two, &one).unwrap();
            // column of X(x)X (mask 0b11) at row 1 (coefficient of 1): delta
            assert_eq!(m.get(0, 3), &q(xx));
            assert_eq!(m.get(1, 3), &q(0));
            // 1(x)X goes to X
            assert_eq!(m.get(1, 2), &q(1));
        }
    }

    #[test]
    fn evaluation_respects_normalization() {
        // evaluating a raw generator equals evaluating its normal form
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for theory in [Theory::Khovanov, Theory::Lee] {
            let f = FrobeniusData::new(theory).unwrap();
            for _ in 0..40 {
                let (src, tgt) = random_smoothing_pair(&mut rng, 0, 3);
                let gen = random_generator(&mut rng, &src, &tgt, 2, 3);
                let raw = evaluate_generator(&f, &gen, &src, &tgt).unwrap();
                let normalized =
                    CobMorphism::from_generator(src.clone(), tgt.clone(), gen, theory).unwrap();
                let cooked = evaluate_morphism(&f, &normalized).unwrap();
                assert_eq!(raw, cooked);
            }
        }
    }

    #[test]
    fn evaluation_is_functorial() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for theory in [Theory::Khovanov, Theory::Lee] {
            let f = FrobeniusData::new(theory).unwrap();
            for _ in 0..30 {
                let (a, b) = random_smoothing_pair(&mut rng, 0, 2);
                let (c, _) = random_smoothing_pair(&mut rng, 0, 2);
                let m1 = CobMorphism::from_generator(
                    a.clone(),
                    b.clone(),
                    random_generator(&mut rng, &a, &b, 1, 2),
                    theory,
                )
                .unwrap();
                let m2 = CobMorphism::from_generator(
                    b.clone(),
                    c.clone(),
                    random_generator(&mut rng, &b, &c, 1, 2),
                    theory,
                )
                .unwrap();
                let composed = evaluate_morphism(&f, &m1.then(&m2).unwrap()).unwrap();
                let product =
                    evaluate_morphism(&f, &m2).unwrap().mul(&evaluate_morphism(&f, &m1).unwrap());
                assert_eq!(composed, product);
            }
        }
    }

    #[test]
    fn unknot_homology() {
        let d = TangleDiagram::parse("CIRCLES 1\n").unwrap();
        assert_eq!(lee_homology(&d).unwrap(), BTreeMap::from([(0, 2)]));
        let d = TangleDiagram::parse("X 1 2 2 1\n").unwrap();
        assert_eq!(lee_homology(&d).unwrap(), BTreeMap::from([(0, 2)]));
    }

    #[test]
    fn hopf_homology() {
        let d = TangleDiagram::parse(HOPF_POS).unwrap();
        assert_eq!(d.component_count(), 2);
        assert_eq!(d.n_minus(), 0);
        assert_eq!(lee_homology(&d).unwrap(), BTreeMap::from([(0, 2), (2, 2)]));
    }

    #[test]
    fn trefoil_homology() {
        let d = TangleDiagram::parse(TREFOIL).unwrap();
        assert_eq!(lee_homology(&d).unwrap(), BTreeMap::from([(0, 2)]));
    }

    #[test]
    fn figure_eight_homology() {
        let d = TangleDiagram::parse(FIG8).unwrap();
        assert_eq!(d.component_count(), 1);
        assert_eq!(lee_homology(&d).unwrap(), BTreeMap::from([(0, 2)]));
    }

    #[test]
    fn whitehead_homology() {
        let d = TangleDiagram::parse(WHITEHEAD).unwrap();
        assert_eq!(d.component_count(), 2);
        // linking number zero: all four classes in height zero
        for o in d.all_orientations() {
            assert_eq!(d.linking_sum(&o), 0);
        }
        assert_eq!(lee_homology(&d).unwrap(), BTreeMap::from([(0, 4)]));
    }

    #[test]
    fn open_diagrams_are_rejected() {
        let d = TangleDiagram::parse("X 1 3 2 4\nBOUNDARY 1 2 3 4\n").unwrap();
        assert!(matches!(lee_homology(&d), Err(Error::OpenBoundary)));
    }

    #[test]
    fn euler_characteristics_agree_across_theories() {
        for text in ["CIRCLES 1\n", HOPF_POS, TREFOIL] {
            let d = TangleDiagram::parse(text).unwrap();
            let fr_k = FrobeniusData::new(Theory::Khovanov).unwrap();
            let fr_l = FrobeniusData::new(Theory::Lee).unwrap();
            let ck = tqft_evaluate_cube(&cube(&d), &fr_k).unwrap();
            let cl = tqft_evaluate_cube(&cube(&d), &fr_l).unwrap();
            assert_eq!(ck.dims, cl.dims);
        }
    }

    #[test]
    fn evaluate_formal_complex_matches_cube_path() {
        for text in [HOPF_POS, TREFOIL] {
            let d = TangleDiagram::parse(text).unwrap();
            let f = FrobeniusData::new(Theory::Lee).unwrap();
            let via_cube = tqft_evaluate_cube(&cube(&d), &f).unwrap();
            let via_complex =
                tqft_evaluate(&crate::complex::khovanov_cube(&d, Theory::Lee).unwrap(), &f)
                    .unwrap();
            assert_eq!(via_cube.dims, via_complex.dims);
            assert_eq!(homology_ranks(&via_cube), homology_ranks(&via_complex));
        }
    }
}
