//! Seed/construction scan for the rate criteria.
use roughwedge::field::*;
use roughwedge::germ::*;
use roughwedge::integrate::*;
use roughwedge::irregular::*;
use roughwedge::sewing::*;
use roughwedge::simplex::*;

fn slope_and_monotone(t: &FormTriple, nmax: u32) -> (f64, bool, f64, f64) {
    let std_tri = Simplex2::standard();
    let ws = strat_germ(t);
    let wi = ito_germ(t);
    let mut vals = vec![];
    let mut gaps = vec![];
    for n in 0..=nmax {
        vals.push(dyadic_sum(&ws, &std_tri, n).unwrap());
        gaps.push((dyadic_sum(&wi, &std_tri, n).unwrap() - vals[n as usize]).abs());
    }
    let mut logs = vec![];
    for n in 5..=(nmax as usize - 1) {
        let inc = (vals[n + 1] - vals[n]).abs();
        if inc > 0.0 { logs.push((n as f64, inc.log2())); }
    }
    let nf = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
    let mut monotone = true;
    for n in 4..(nmax as usize) {
        if gaps[n + 1] > gaps[n] { monotone = false; }
    }
    (slope, monotone, gaps[nmax as usize], vals[nmax as usize].abs())
}

fn main() {
    // coherent axis-aligned pair: W1(x)=sum 2^{-kb} cos(2^k x1), W2 same in x2
    println!("coherent axis pair:");
    let f = ScalarField::affine(0.3, 1.0, -0.5);
    let w1 = make_weierstrass_axis(0.85, 2, 14).unwrap();
    let w2p = ScalarField::from_fn(
        0.85, w1.seminorm_bound(), w1.sup_bound(),
        |p| (0..14).map(|k| 2f64.powf(-(k as f64) * 0.85) * (2f64.powi(k) * p.x2).cos()).sum::<f64>(),
    ).unwrap();
    let t = FormTriple::new(f.clone(), w1, w2p);
    let (s, m, g, v) = slope_and_monotone(&t, 12);
    println!("  slope {s:.3} gap-monotone {m} gap11 {g:.3e} |V| {v:.4}");

    // seed scan (random directions)
    for seed in [7u64, 21, 33, 55, 77, 91, 123, 200] {
        let g1 = make_weierstrass(0.85, 2, 14, seed).unwrap();
        let g2 = make_weierstrass(0.85, 2, 14, seed + 1000).unwrap();
        let t = FormTriple::new(f.clone(), g1, g2);
        let (s, m, g, v) = slope_and_monotone(&t, 12);
        println!("  seeds {seed}: slope {s:.3} gap-monotone {m} gap11 {g:.3e} |V| {v:.4}");
    }

    // degree trend at odd coarse levels
    let phi = ComposedIntegrand::builtin("one").unwrap();
    let id1 = ScalarField::coordinate(1);
    let id2 = ScalarField::coordinate(2);
    let std_tri = Simplex2::standard();
    for gl in [3u32, 5, 7] {
        let rep = degree_identity_check(&phi, &id1, &id2, &std_tri, gl, gl).unwrap();
        println!("degree identity: level {gl} gap {:.4e}", rep.gap);
    }
    let sq1 = ScalarField::from_fn(1.0, 6.0, 9.0, |p| p.x1 * p.x1 - p.x2 * p.x2).unwrap();
    let sq2 = ScalarField::from_fn(1.0, 6.0, 9.0, |p| 2.0 * p.x1 * p.x2).unwrap();
    let tri_sq = Simplex2::new(point(0.25, 0.25), point(1.25, 0.25), point(0.25, 1.25));
    for gl in [3u32, 5, 7] {
        let rep = degree_identity_check(&phi, &sq1, &sq2, &tri_sq, gl, gl).unwrap();
        println!("degree square: level {gl} gap {:.4e}", rep.gap);
    }
}
