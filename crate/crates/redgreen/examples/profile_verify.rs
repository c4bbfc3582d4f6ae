use std::time::Instant;
use redgreen::{braid, lee, oracle, TangleDiagram};
use rand::SeedableRng;

fn main() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
    let mut worst = (0u128, String::new());
    let t0 = Instant::now();
    let mut fold_ms = 0u128;
    let mut oracle_ms = 0u128;
    for _ in 0..25 {
        let (pd, d) = braid::random_closed_diagram(&mut rng, 6, 3).unwrap();
        let t = Instant::now();
        let _ = lee::lee_generators(&d).unwrap();
        fold_ms += t.elapsed().as_millis();
        let t = Instant::now();
        let _ = oracle::lee_homology(&d).unwrap();
        let o = t.elapsed().as_millis();
        oracle_ms += o;
        if o > worst.0 {
            worst = (o, pd.clone());
        }
    }
    println!("total {:?} fold {} ms oracle {} ms", t0.elapsed(), fold_ms, oracle_ms);
    println!("worst oracle {} ms on:\n{}", worst.0, worst.1);
    let d = TangleDiagram::parse(&worst.1).unwrap();
    let c = redgreen::complex::cube(&d);
    let mut dims = std::collections::BTreeMap::new();
    for v in &c.vertices { *dims.entry(v.height).or_insert(0usize) += 1usize << v.resolved.smoothing.len(); }
    println!("dims {:?}", dims);
}
