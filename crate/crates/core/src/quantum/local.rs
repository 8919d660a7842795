//! Products with a k-qubit gate embedded in an n-qubit register, computed
//! without materializing the register-sized matrix.
//!
//! `g` is the gate in row-major order (2ᵏ × 2ᵏ, targets MSB-first) and `s`
//! is any matrix with 2ⁿ rows (left products) or 2ⁿ columns (right
//! products), so statevector columns and density matrices share one code
//! path.

use super::matrix::{CMatrix, C64, ZERO};

const MAX_TARGETS: usize = 3;

/// Calls `f` with the 2ᵏ register indices of every target block.
fn for_each_block(targets: &[usize], n: usize, mut f: impl FnMut(&[usize])) {
    let k = targets.len();
    debug_assert!(k <= MAX_TARGETS && targets.iter().all(|&t| t < n));
    let kk = 1usize << k;
    let mut offs = [0usize; 1 << MAX_TARGETS];
    let mut mask = 0;
    for (j, &t) in targets.iter().enumerate() {
        let bit = 1usize << (n - 1 - t);
        mask |= bit;
        for (sub, o) in offs[..kk].iter_mut().enumerate() {
            if sub & (1 << (k - 1 - j)) != 0 {
                *o |= bit;
            }
        }
    }
    let mut idx = [0usize; 1 << MAX_TARGETS];
    for rest in (0..1usize << n).filter(|r| r & mask == 0) {
        for (i, o) in idx[..kk].iter_mut().zip(&offs[..kk]) {
            *i = rest | o;
        }
        f(&idx[..kk]);
    }
}

fn row_op(out: &mut CMatrix, dst: usize, s: &CMatrix, src: usize, g: C64) {
    let cols = s.cols();
    let from = &s.data()[src * cols..(src + 1) * cols];
    for (o, v) in out.data_mut()[dst * cols..(dst + 1) * cols].iter_mut().zip(from) {
        *o += g * v;
    }
}

fn col_op(out: &mut CMatrix, dst: usize, s: &CMatrix, src: usize, g: C64) {
    let cols = s.cols();
    for r in 0..s.rows() {
        let v = s.data()[r * cols + src];
        out.data_mut()[r * cols + dst] += v * g;
    }
}

/// G·s
pub fn left(g: &[C64], targets: &[usize], n: usize, s: &CMatrix) -> CMatrix {
    let kk = 1 << targets.len();
    let mut out = CMatrix::zeros(s.rows(), s.cols());
    for_each_block(targets, n, |idx| {
        for a in 0..kk {
            for b in 0..kk {
                let z = g[a * kk + b];
                if z != ZERO {
                    row_op(&mut out, idx[a], s, idx[b], z);
                }
            }
        }
    });
    out
}

/// G†·s
pub fn left_dagger(g: &[C64], targets: &[usize], n: usize, s: &CMatrix) -> CMatrix {
    let kk = 1 << targets.len();
    let mut out = CMatrix::zeros(s.rows(), s.cols());
    for_each_block(targets, n, |idx| {
        for a in 0..kk {
            for b in 0..kk {
                let z = g[a * kk + b];
                if z != ZERO {
                    row_op(&mut out, idx[b], s, idx[a], z.conj());
                }
            }
        }
    });
    out
}

/// s·G
pub fn right(s: &CMatrix, g: &[C64], targets: &[usize], n: usize) -> CMatrix {
    let kk = 1 << targets.len();
    let mut out = CMatrix::zeros(s.rows(), s.cols());
    for_each_block(targets, n, |idx| {
        for a in 0..kk {
            for b in 0..kk {
                let z = g[a * kk + b];
                if z != ZERO {
                    col_op(&mut out, idx[b], s, idx[a], z);
                }
            }
        }
    });
    out
}

/// s·G†
pub fn right_dagger(s: &CMatrix, g: &[C64], targets: &[usize], n: usize) -> CMatrix {
    let kk = 1 << targets.len();
    let mut out = CMatrix::zeros(s.rows(), s.cols());
    for_each_block(targets, n, |idx| {
        for a in 0..kk {
            for b in 0..kk {
                let z = g[a * kk + b];
                if z != ZERO {
                    col_op(&mut out, idx[a], s, idx[b], z.conj());
                }
            }
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::gates::{controlled, lift, rotation, Axis};
    use rand::Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut rng = crate::rng::seeded(seed, 0);
        let mut m = CMatrix::zeros(rows, cols);
        for z in m.data_mut() {
            *z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        m
    }

    #[test]
    fn matches_lifted_products() {
        let g1 = rotation(Axis::Y, 0.7);
        let g2 = controlled(&rotation(Axis::X, -1.3));
        let g3 = random(8, 8, 3);
        let cases: [(&CMatrix, &[usize]); 5] = [(&g1, &[0]), (&g1, &[2]), (&g2, &[2, 0]), (&g2, &[1, 2]), (&g3, &[1, 0, 2])];
        for (i, (g, t)) in cases.into_iter().enumerate() {
            let full = lift(g, t, 3).unwrap();
            for cols in [1, 8] {
                let s = random(8, cols, 10 + i as u64);
                assert!(left(g.data(), t, 3, &s).max_abs_diff(&(&full * &s)) < 1e-14);
                assert!(left_dagger(g.data(), t, 3, &s).max_abs_diff(&(&full.dagger() * &s)) < 1e-14);
            }
            let s = random(8, 8, 20 + i as u64);
            assert!(right(&s, g.data(), t, 3).max_abs_diff(&(&s * &full)) < 1e-14);
            assert!(right_dagger(&s, g.data(), t, 3).max_abs_diff(&(&s * &full.dagger())) < 1e-14);
        }
    }
}
