//! Maximal averages over every lattice-aligned cube.
//!
//! For each side `s` (in cells) the averages of all `s`-cubes, including
//! those hanging over the lattice edge, are computed from the prefix table;
//! a separable sliding-window maximum then gives, for every cell, the best
//! `s`-cube containing it. Cost `O(S (L + S)^n)` for `S` = longest axis.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::measures::prefix::PrefixTable;

/// Sliding maximum of width `w` along `axis`: `out[.., x, ..] = max in[.., x..x+w, ..]`.
fn reduce_axis(data: &[f64], shape: &[usize], axis: usize, w: usize) -> (Vec<f64>, Vec<usize>) {
    let n_in = shape[axis];
    let n_out = n_in + 1 - w;
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out_shape = shape.to_vec();
    out_shape[axis] = n_out;
    let mut out = vec![0.0; outer * n_out * inner];
    let mut window: VecDeque<usize> = VecDeque::with_capacity(w);
    for o in 0..outer {
        for i in 0..inner {
            let at = |p: usize| data[(o * n_in + p) * inner + i];
            window.clear();
            for p in 0..n_in {
                while window.back().is_some_and(|&b| at(b) <= at(p)) {
                    window.pop_back();
                }
                window.push_back(p);
                if p + 1 >= w {
                    let x = p + 1 - w;
                    while window.front().is_some_and(|&f| f < x) {
                        window.pop_front();
                    }
                    out[(o * n_out + x) * inner + i] = at(*window.front().expect("nonempty window"));
                }
            }
        }
    }
    (out, out_shape)
}

/// Field of `sup_{C ⊇ cell} weight(s) * mass(C)` over aligned cubes `C` of
/// side `s` cells, `1 <= s <= max_side`.
pub(crate) fn sliding_maximal(
    shape: &[usize],
    masses: &[f64],
    max_side: usize,
    weight: impl Fn(usize) -> f64 + Sync,
) -> Vec<f64> {
    let n = shape.len();
    let len: usize = shape.iter().product();
    if masses.iter().all(|m| *m == 0.0) {
        return vec![0.0; len];
    }
    let table = PrefixTable::new(shape, masses);
    (1..=max_side)
        .into_par_iter()
        .map(|s| {
            let pos_shape: Vec<usize> = shape.iter().map(|l| l + s - 1).collect();
            let total: usize = pos_shape.iter().product();
            let w = weight(s);
            let mut lo = vec![0i64; n];
            let mut hi = vec![0i64; n];
            let mut avgs = Vec::with_capacity(total);
            if n == 1 {
                let s = s as i64;
                avgs.extend((0..total as i64).map(|p| table.interval_sum(p + 1 - s, p + 1) * w));
            }
            for lin in (0..total).filter(|_| n > 1) {
                let mut rem = lin;
                for d in (0..n).rev() {
                    let p = rem % pos_shape[d];
                    rem /= pos_shape[d];
                    lo[d] = p as i64 - (s as i64 - 1);
                    hi[d] = lo[d] + s as i64;
                }
                avgs.push(table.box_sum(&lo, &hi) * w);
            }
            let (mut data, mut cur) = (avgs, pos_shape);
            for axis in 0..n {
                let (d2, s2) = reduce_axis(&data, &cur, axis, s);
                data = d2;
                cur = s2;
            }
            data
        })
        .reduce(
            || vec![0.0; len],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    if y > *x {
                        *x = y;
                    }
                }
                a
            },
        )
}
