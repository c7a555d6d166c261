//! Summed-area tables kept in double-double precision, so that box sums
//! taken as differences of large prefixes stay accurate to ~1e-30 relative
//! to the table total.

use crate::geometry::MAX_DIM;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn scale(self, w: f64) -> Dd {
        let p = self.hi * w;
        let e = self.hi.mul_add(w, -p);
        let (hi, lo) = two_sum(p, e + self.lo * w);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// `n`-dimensional inclusive prefix sums over a row-major cell array.
#[derive(Clone, Debug)]
pub(crate) struct PrefixTable {
    /// `shape[d] + 1` entries per axis.
    dims: Vec<usize>,
    strides: Vec<usize>,
    table: Vec<Dd>,
}

impl PrefixTable {
    pub fn new(shape: &[usize], values: &[f64]) -> Self {
        let dims: Vec<usize> = shape.iter().map(|s| s + 1).collect();
        let n = dims.len();
        let mut strides = vec![1; n];
        for d in (0..n.saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * dims[d + 1];
        }
        let total: usize = dims.iter().product();
        let mut table = vec![Dd::default(); total];
        // scatter values to (i+1) positions
        let mut cell_strides = vec![1; n];
        for d in (0..n.saturating_sub(1)).rev() {
            cell_strides[d] = cell_strides[d + 1] * shape[d + 1];
        }
        for (lin, v) in values.iter().enumerate() {
            let mut rem = lin;
            let mut pos = 0;
            for d in 0..n {
                let i = rem / cell_strides[d];
                rem %= cell_strides[d];
                pos += (i + 1) * strides[d];
            }
            table[pos] = Dd::from_f64(*v);
        }
        // cumulative sums along each axis
        for d in 0..n {
            for pos in 0..total {
                let i = (pos / strides[d]) % dims[d];
                if i > 0 {
                    let prev = table[pos - strides[d]];
                    table[pos] = table[pos].add(prev);
                }
            }
        }
        PrefixTable { dims, strides, table }
    }

    #[inline]
    fn at(&self, idx: &[usize]) -> Dd {
        let pos: usize = idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum();
        self.table[pos]
    }

    /// [`PrefixTable::box_sum`] on a one-dimensional table.
    #[inline]
    pub fn interval_sum(&self, lo: i64, hi: i64) -> f64 {
        let top = self.dims[0] as i64 - 1;
        let (a, b) = (self.table[lo.clamp(0, top) as usize], self.table[hi.clamp(0, top) as usize]);
        b.add(a.neg()).to_f64().max(0.0)
    }

    /// Sum over the integer cell box `[lo, hi)` (indices clamped to the table).
    pub fn box_sum(&self, lo: &[i64], hi: &[i64]) -> f64 {
        let n = self.dims.len();
        let clamp = |x: i64, d: usize| x.clamp(0, self.dims[d] as i64 - 1) as usize;
        let mut acc = Dd::default();
        let mut idx = [0usize; MAX_DIM];
        for m in 0..1usize << n {
            let mut neg = false;
            for d in 0..n {
                if m >> d & 1 == 1 {
                    idx[d] = clamp(hi[d], d);
                } else {
                    idx[d] = clamp(lo[d], d);
                    neg = !neg;
                }
            }
            let v = self.at(&idx);
            acc = acc.add(if neg { v.neg() } else { v });
        }
        acc.to_f64().max(0.0)
    }

    /// Proportional-overlap cumulative function at fractional cell
    /// coordinates `t` (each split as integer part + fraction in `[0,1)`).
    fn cumulative(&self, t: &[(i64, f64)]) -> Dd {
        let n = self.dims.len();
        let mut acc = Dd::default();
        let mut idx = [0usize; MAX_DIM];
        'corners: for m in 0..1usize << n {
            let mut w = 1.0;
            for d in 0..n {
                let (base, frac) = t[d];
                let top = self.dims[d] as i64 - 1;
                if m >> d & 1 == 1 {
                    if frac == 0.0 {
                        continue 'corners;
                    }
                    w *= frac;
                    idx[d] = (base + 1).clamp(0, top) as usize;
                } else {
                    w *= 1.0 - frac;
                    idx[d] = base.clamp(0, top) as usize;
                }
            }
            acc = acc.add(self.at(&idx).scale(w));
        }
        acc
    }

    /// Proportional-overlap sum over the fractional box `[lo, hi)`.
    pub fn frac_box_sum(&self, lo: &[(i64, f64)], hi: &[(i64, f64)]) -> f64 {
        let n = self.dims.len();
        let mut acc = Dd::default();
        let mut t = vec![(0i64, 0.0); n];
        for m in 0..1usize << n {
            let mut neg = false;
            for d in 0..n {
                if m >> d & 1 == 1 {
                    t[d] = hi[d];
                } else {
                    t[d] = lo[d];
                    neg = !neg;
                }
            }
            let v = self.cumulative(&t);
            acc = acc.add(if neg { v.neg() } else { v });
        }
        acc.to_f64().max(0.0)
    }
}
