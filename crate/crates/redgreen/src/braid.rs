//! Random planar diagrams from braid words. Emitting crossings column by
//! column keeps every sample planar by construction; the parser still runs
//! its full validation on the output.

use rand::Rng;

use crate::diagram::{EdgeId, TangleDiagram};
use crate::error::Result;

/// A braid word: letters (i, positive) acting on columns i and i + 1,
/// 1-based.
#[derive(Clone, Debug)]
pub struct BraidWord {
    pub strands: usize,
    pub letters: Vec<(usize, bool)>,
}

/// An emitted open braid tangle with its hanging edge labels.
#[derive(Clone, Debug)]
pub struct BraidTangle {
    pub pd: String,
    pub top: Vec<EdgeId>,
    pub bottom: Vec<EdgeId>,
}

/// Emit the braid as an open tangle. Strands run downwards; a positive
/// letter takes the left strand under the right one.
pub fn braid_tangle(word: &BraidWord, label_base: EdgeId) -> BraidTangle {
    let k = word.strands;
    assert!(k >= 2);
    let mut cur: Vec<EdgeId> = (0..k).map(|j| label_base + 1 + j as EdgeId).collect();
    let top = cur.clone();
    let mut fresh = label_base + 1 + k as EdgeId;
    let mut lines = Vec::new();
    for &(i, positive) in &word.letters {
        assert!(i >= 1 && i < k);
        let (l, r) = (cur[i - 1], cur[i]);
        let (l2, r2) = (fresh, fresh + 1);
        fresh += 2;
        if positive {
            // under-strand from top-left to bottom-right
            lines.push(format!("X {l} {r} {r2} {l2}"));
        } else {
            lines.push(format!("X {r} {r2} {l2} {l}"));
        }
        cur[i - 1] = l2;
        cur[i] = r2;
    }
    let boundary: Vec<String> = top
        .iter()
        .map(|e| e.to_string())
        .chain(cur.iter().rev().map(|e| e.to_string()))
        .collect();
    let pd = format!("{}\nBOUNDARY {}\n", lines.join("\n"), boundary.join(" "));
    BraidTangle { pd, top, bottom: cur }
}

/// Emit the closure of the braid as a link diagram. Untouched columns close
/// into declared crossingless circles.
pub fn braid_closure(word: &BraidWord) -> String {
    let k = word.strands;
    let open = braid_tangle(word, 0);
    let mut lines: Vec<String> = open
        .pd
        .lines()
        .filter(|l| l.starts_with('X'))
        .map(|s| s.to_string())
        .collect();
    let mut circles = 0usize;
    for j in 0..k {
        let (t, b) = (open.top[j], open.bottom[j]);
        if t == b {
            circles += 1;
            continue;
        }
        // merge the bottom label into the top one
        for line in &mut lines {
            let toks: Vec<String> = line
                .split_whitespace()
                .map(|tok| {
                    if tok.parse::<EdgeId>() == Ok(b) {
                        t.to_string()
                    } else {
                        tok.to_string()
                    }
                })
                .collect();
            *line = toks.join(" ");
        }
    }
    let mut pd = lines.join("\n");
    pd.push('\n');
    if circles > 0 {
        pd.push_str(&format!("CIRCLES {circles}\n"));
    }
    pd
}

/// A random closed diagram with at most `max_crossings` crossings and at
/// most `max_components` components.
pub fn random_closed_diagram<R: Rng>(
    rng: &mut R,
    max_crossings: usize,
    max_components: usize,
) -> Result<(String, TangleDiagram)> {
    loop {
        let strands = rng.gen_range(2..=4usize);
        let n = rng.gen_range(1..=max_crossings.max(1));
        let letters = (0..n)
            .map(|_| (rng.gen_range(1..strands), rng.gen_bool(0.5)))
            .collect();
        let word = BraidWord { strands, letters };
        let pd = braid_closure(&word);
        let d = TangleDiagram::parse(&pd)?;
        if d.component_count() <= max_components {
            return Ok((pd, d));
        }
    }
}

/// A random open braid tangle. Columns that never cross would be
/// crossingless open arcs, which PD codes cannot express, so such words are
/// resampled.
pub fn random_tangle<R: Rng>(rng: &mut R, max_crossings: usize) -> Result<(String, TangleDiagram)> {
    loop {
        let strands = rng.gen_range(2..=3usize);
        let n = rng.gen_range(1..=max_crossings.max(1));
        let letters = (0..n)
            .map(|_| (rng.gen_range(1..strands), rng.gen_bool(0.5)))
            .collect();
        let word = BraidWord { strands, letters };
        let t = braid_tangle(&word, 0);
        if t.top.iter().zip(&t.bottom).any(|(a, b)| a == b) {
            continue;
        }
        let d = TangleDiagram::parse(&t.pd)?;
        return Ok((t.pd, d));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hopf_from_two_positive_letters() {
        let word = BraidWord { strands: 2, letters: vec![(1, true), (1, true)] };
        let pd = braid_closure(&word);
        assert_eq!(pd, "X 1 2 4 3\nX 3 4 2 1\n");
        let d = TangleDiagram::parse(&pd).unwrap();
        assert_eq!(d.component_count(), 2);
        assert_eq!(d.n_minus(), 0);
    }

    #[test]
    fn single_letter_closure_is_kinked_unknot() {
        let word = BraidWord { strands: 2, letters: vec![(1, true)] };
        let pd = braid_closure(&word);
        assert_eq!(pd, "X 1 2 2 1\n");
        let d = TangleDiagram::parse(&pd).unwrap();
        assert_eq!(d.component_count(), 1);
    }

    #[test]
    fn untouched_strand_becomes_circle() {
        let word = BraidWord { strands: 3, letters: vec![(1, true), (1, false)] };
        let pd = braid_closure(&word);
        assert!(pd.contains("CIRCLES 1"));
        let d = TangleDiagram::parse(&pd).unwrap();
        assert_eq!(d.component_count(), 3);
        assert_eq!(d.n_minus(), 1);
    }

    #[test]
    fn negative_letters_flip_signs() {
        let word = BraidWord { strands: 2, letters: vec![(1, false), (1, false)] };
        let pd = braid_closure(&word);
        let d = TangleDiagram::parse(&pd).unwrap();
        assert_eq!(d.n_minus(), 2);
        let one_reversed = crate::diagram::Orientation { reversed: vec![true, false] };
        assert_eq!(d.linking_sum(&one_reversed), -2);
    }

    #[test]
    fn random_diagrams_parse_and_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        for _ in 0..50 {
            let (pd, d) = random_closed_diagram(&mut rng, 6, 3).unwrap();
            assert!(d.is_closed(), "{pd}");
            assert!(d.crossing_count() <= 6);
            assert!(d.component_count() <= 3);
            let (_, t) = random_tangle(&mut rng, 4).unwrap();
            assert!(!t.is_closed());
        }
    }
}
