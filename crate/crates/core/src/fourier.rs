//! Normalized Fourier transform on `F_q^d`.
//!
//! Forward: `f^(m) = q^{-d} sum_x f(x) chi(-x.m)`. Inverse: `f(x) = sum_m chi(x.m) f^(m)`,
//! with no normalization on the inverse side. Both are computed one axis at a time, axis 1
//! first, each axis applying the `q x q` character matrix to every line.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::field::{Elem, Field};

/// Point `x` of `F_q^d` is stored at index `sum_j enc(x_j) q^(j-1)`.
#[derive(Debug, Clone)]
pub struct ComplexGrid {
    field: Field,
    d: usize,
    values: Vec<Complex64>,
}

/// Coordinates of the point stored at `index`.
pub fn decode_index(q: u32, d: usize, mut index: usize) -> Vec<Elem> {
    let q = q as usize;
    (0..d)
        .map(|_| {
            let c = index % q;
            index /= q;
            Elem(c as u32)
        })
        .collect()
}

/// Inverse of [`decode_index`].
pub fn encode_point(q: u32, coords: &[Elem]) -> usize {
    coords
        .iter()
        .rev()
        .fold(0usize, |acc, c| acc * q as usize + c.index())
}

/// `q^d`, or `None` on overflow.
pub fn grid_len(q: u32, d: usize) -> Option<usize> {
    (q as usize).checked_pow(d as u32)
}

impl ComplexGrid {
    pub fn zeros(field: &Field, d: usize) -> Self {
        assert!(d >= 1, "dimension must be at least 1");
        let len = grid_len(field.q(), d).expect("grid size overflows usize");
        Self {
            field: field.clone(),
            d,
            values: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn from_values(field: &Field, d: usize, values: Vec<Complex64>) -> Self {
        assert!(d >= 1, "dimension must be at least 1");
        assert_eq!(
            Some(values.len()),
            grid_len(field.q(), d),
            "grid length must be q^d"
        );
        Self {
            field: field.clone(),
            d,
            values,
        }
    }

    /// Indicator grid of a list of point indices.
    pub fn indicator(field: &Field, d: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut g = Self::zeros(field, d);
        for i in indices {
            g.values[i] = Complex64::new(1.0, 0.0);
        }
        g
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

/// `f^`, with the `q^{-d}` normalization.
pub fn fourier_transform(f: &ComplexGrid) -> ComplexGrid {
    let mut out = f.clone();
    transform_in_place(&mut out, Direction::Forward);
    out
}

/// Inverse of [`fourier_transform`]; applies no normalization.
pub fn inverse_transform(g: &ComplexGrid) -> ComplexGrid {
    let mut out = g.clone();
    transform_in_place(&mut out, Direction::Inverse);
    out
}

/// `|sum_m |f^(m)|^2 - q^{-d} sum_x |f(x)|^2|`.
pub fn plancherel_residual(f: &ComplexGrid) -> f64 {
    let spectrum = fourier_transform(f);
    let lhs: f64 = spectrum.values.iter().map(|z| z.norm_sqr()).sum();
    let rhs: f64 = f.values.iter().map(|z| z.norm_sqr()).sum::<f64>() / f.values.len() as f64;
    (lhs - rhs).abs()
}

fn transform_in_place(grid: &mut ComplexGrid, dir: Direction) {
    let field = grid.field.clone();
    let q = field.q() as usize;
    let kernel = AxisKernel::new(&field, dir);
    let mut stride = 1usize;
    for _axis in 0..grid.d {
        let block = stride * q;
        let work = |chunk: &mut [Complex64]| {
            let mut line = vec![Complex64::new(0.0, 0.0); q];
            let mut out = vec![Complex64::new(0.0, 0.0); q];
            for offset in 0..stride {
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = chunk[offset + k * stride];
                }
                kernel.apply(&line, &mut out);
                for (k, v) in out.iter().enumerate() {
                    chunk[offset + k * stride] = *v;
                }
            }
        };
        if grid.values.len() >= 1 << 14 {
            grid.values.par_chunks_mut(block).for_each(work);
        } else {
            grid.values.chunks_mut(block).for_each(work);
        }
        stride = block;
    }
    if dir == Direction::Forward {
        let scale = 1.0 / grid.values.len() as f64;
        for v in &mut grid.values {
            *v *= scale;
        }
    }
}

/// One-axis transform `out[m] = sum_x in[x] chi(+-x m)` with a fixed left-to-right reduction.
struct AxisKernel<'a> {
    field: &'a Field,
    matrix: Option<&'a [Complex64]>,
    dir: Direction,
}

impl<'a> AxisKernel<'a> {
    fn new(field: &'a Field, dir: Direction) -> Self {
        Self {
            field,
            matrix: field.char_matrix(),
            dir,
        }
    }

    #[inline]
    fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        let q = input.len();
        for (m, slot) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            match self.matrix {
                Some(mat) => {
                    let row = &mat[m * q..(m + 1) * q];
                    for (x, &w) in row.iter().enumerate() {
                        acc += input[x] * self.orient(w);
                    }
                }
                None => {
                    for (x, &v) in input.iter().enumerate() {
                        let w = self
                            .field
                            .chi(self.field.mul(Elem(x as u32), Elem(m as u32)));
                        acc += v * self.orient(w);
                    }
                }
            }
            *slot = acc;
        }
    }

    #[inline]
    fn orient(&self, w: Complex64) -> Complex64 {
        match self.dir {
            Direction::Forward => w.conj(),
            Direction::Inverse => w,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;
    use proptest::prelude::*;

    /// Direct `O(q^{2d})` evaluation of the forward transform.
    fn direct_transform(f: &ComplexGrid) -> Vec<Complex64> {
        let field = f.field();
        let d = f.dim();
        let n = f.len();
        let scale = 1.0 / n as f64;
        (0..n)
            .map(|m| {
                let mc = decode_index(field.q(), d, m);
                let mut acc = Complex64::new(0.0, 0.0);
                for x in 0..n {
                    let xc = decode_index(field.q(), d, x);
                    let dot = xc
                        .iter()
                        .zip(&mc)
                        .fold(Elem::ZERO, |s, (&a, &b)| field.add(s, field.mul(a, b)));
                    acc += f.values()[x] * field.chi(field.neg(dot));
                }
                acc * scale
            })
            .collect()
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    fn pseudo_grid(field: &Field, d: usize, seed: u64) -> ComplexGrid {
        // small LCG, enough for filling test grids
        let mut s = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let mut next = move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let len = grid_len(field.q(), d).unwrap();
        let values = (0..len)
            .map(|_| Complex64::new(next(), next()) * 0.7)
            .collect();
        ComplexGrid::from_values(field, d, values)
    }

    #[test]
    fn origin_indicator_transforms_to_constant() {
        let f = make_field(5, 1, None).unwrap();
        let g = ComplexGrid::indicator(&f, 2, [0]);
        let h = fourier_transform(&g);
        for v in h.values() {
            assert!((v - Complex64::new(1.0 / 25.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_one_transforms_to_delta() {
        let f = make_field(3, 2, None).unwrap();
        let g = ComplexGrid::from_values(&f, 2, vec![Complex64::new(1.0, 0.0); 81]);
        let h = fourier_transform(&g);
        assert!((h.values()[0] - 1.0).norm() < 1e-12);
        assert!(h.values()[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn zero_frequency_counts_the_set() {
        let f = make_field(7, 1, None).unwrap();
        let idx = [0, 3, 8, 11, 40, 48];
        let h = fourier_transform(&ComplexGrid::indicator(&f, 2, idx));
        assert!((h.values()[0].re - 6.0 / 49.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_of_a_delta_is_a_character() {
        let f = make_field(7, 1, None).unwrap();
        let m0 = 3 + 7 * 5;
        let mut g = ComplexGrid::zeros(&f, 2);
        g.values_mut()[m0] = Complex64::new(1.0, 0.0);
        let h = inverse_transform(&g);
        let mc = decode_index(7, 2, m0);
        for x in 0..49 {
            let xc = decode_index(7, 2, x);
            let dot = f.add(f.mul(xc[0], mc[0]), f.mul(xc[1], mc[1]));
            assert!((h.values()[x] - f.chi(dot)).norm() < 1e-12);
        }
        let z = inverse_transform(&ComplexGrid::zeros(&f, 2));
        assert!(z.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn round_trip_ten_point_indicator() {
        let f = make_field(7, 1, None).unwrap();
        let g = ComplexGrid::indicator(&f, 2, [1, 5, 9, 13, 17, 22, 30, 33, 41, 47]);
        let back = inverse_transform(&fourier_transform(&g));
        assert!(max_err(back.values(), g.values()) < 1e-9);
    }

    #[test]
    fn plancherel_examples() {
        let f = make_field(5, 1, None).unwrap();
        let full = ComplexGrid::from_values(&f, 2, vec![Complex64::new(1.0, 0.0); 25]);
        assert!(plancherel_residual(&full) < 1e-9);
        assert!(plancherel_residual(&ComplexGrid::indicator(&f, 2, [7])) < 1e-12);
        let f9 = make_field(3, 2, None).unwrap();
        let idx: Vec<usize> = (0..81).filter(|i| (i * 37 + 11) % 5 < 2).collect();
        let g = ComplexGrid::indicator(&f9, 2, idx.iter().copied());
        let lhs: f64 = fourier_transform(&g)
            .values()
            .iter()
            .map(|z| z.norm_sqr())
            .sum();
        assert!((lhs - idx.len() as f64 / 81.0).abs() < 1e-9);
        assert!(plancherel_residual(&g) < 1e-9);
    }

    #[test]
    fn factorized_matches_direct_on_f5_squared() {
        let f = make_field(5, 1, None).unwrap();
        for seed in 0..10 {
            let g = pseudo_grid(&f, 2, seed);
            assert!(max_err(fourier_transform(&g).values(), &direct_transform(&g)) < 1e-10);
        }
        // every indicator of a single point too
        for i in 0..25 {
            let g = ComplexGrid::indicator(&f, 2, [i]);
            assert!(max_err(fourier_transform(&g).values(), &direct_transform(&g)) < 1e-10);
        }
    }

    #[test]
    fn factorized_matches_direct_on_extension_fields() {
        for (p, n, d) in [(2, 2, 2), (3, 2, 2), (2, 3, 1), (7, 1, 3)] {
            let f = make_field(p, n, None).unwrap();
            let g = pseudo_grid(&f, d, 99);
            assert!(max_err(fourier_transform(&g).values(), &direct_transform(&g)) < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn linearity(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let f = make_field(7, 1, None).unwrap();
            let g1 = pseudo_grid(&f, 2, seed);
            let g2 = pseudo_grid(&f, 2, seed ^ 0xdead_beef);
            let (alpha, beta) = (Complex64::new(a, 0.3), Complex64::new(-0.5, b));
            let combo: Vec<Complex64> = g1.values().iter().zip(g2.values())
                .map(|(x, y)| alpha * x + beta * y).collect();
            let lhs = fourier_transform(&ComplexGrid::from_values(&f, 2, combo));
            let t1 = fourier_transform(&g1);
            let t2 = fourier_transform(&g2);
            let rhs: Vec<Complex64> = t1.values().iter().zip(t2.values())
                .map(|(x, y)| alpha * x + beta * y).collect();
            prop_assert!(max_err(lhs.values(), &rhs) < 1e-9 * 49.0);
        }

        #[test]
        fn round_trip_and_plancherel(seed in any::<u64>(), which in 0usize..4) {
            let (p, n, d) = [(3, 1, 3), (5, 1, 2), (3, 2, 2), (13, 1, 2)][which];
            let f = make_field(p, n, None).unwrap();
            let g = pseudo_grid(&f, d, seed);
            let qd = g.len() as f64;
            let back = inverse_transform(&fourier_transform(&g));
            prop_assert!(max_err(back.values(), g.values()) < 1e-9 * qd.sqrt());
            prop_assert!(plancherel_residual(&g) < 1e-9 * qd);
        }
    }
}
