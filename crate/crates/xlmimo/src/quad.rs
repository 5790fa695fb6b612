//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The vector form integrates every component of a `Vec<f64>`-valued
//! integrand on a shared subdivision, which is what the correlation-matrix
//! integrals need: one integrand evaluation fills all `M²` entries.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result, C64};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Stopping rule for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-12, rel: 1e-9, max_intervals: 4000 }
    }
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Tolerance { abs: 0.0, rel, ..Default::default() }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: Vec<f64>,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod<F>(f: &mut F, dim: usize, a: f64, b: f64, scratch: &mut [f64]) -> (Vec<f64>, f64)
where
    F: FnMut(f64, &mut [f64]),
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for (j, &x) in XGK.iter().enumerate() {
        let gauss_w = if j % 2 == 1 { Some(WG[j / 2]) } else { None };
        let nodes: &[f64] = if x == 0.0 { &[0.0] } else { &[-1.0, 1.0] };
        for &sign in nodes {
            f(c + sign * h * x, scratch);
            for i in 0..dim {
                k[i] += WGK[j] * scratch[i];
                if let Some(w) = gauss_w {
                    g[i] += w * scratch[i];
                }
            }
        }
    }
    let mut err: f64 = 0.0;
    for i in 0..dim {
        k[i] *= h;
        g[i] *= h;
        err = err.max((k[i] - g[i]).abs());
    }
    (k, err)
}

/// Integrates a vector-valued function over `[a, b]`.
///
/// `f(x, out)` must write `dim` components into `out`. Convergence is judged
/// on the largest component error against `max(tol.abs, tol.rel · max|I_i|)`.
pub fn integrate_vec<F>(mut f: F, dim: usize, a: f64, b: f64, tol: Tolerance) -> Result<Vec<f64>>
where
    F: FnMut(f64, &mut [f64]),
{
    if a == b {
        return Ok(vec![0.0; dim]);
    }
    let mut scratch = vec![0.0; dim];
    let (value, err) = kronrod(&mut f, dim, a, b, &mut scratch);
    let mut total = value.clone();
    let mut total_err = err;
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value, err });

    loop {
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let target = tol.abs.max(tol.rel * scale);
        if total_err <= target {
            return Ok(total);
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::QuadratureFailed { tol: target, err: total_err });
        }
        let worst = heap.pop().expect("heap holds at least one piece");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::QuadratureFailed { tol: target, err: total_err });
        }
        let (lv, le) = kronrod(&mut f, dim, worst.a, mid, &mut scratch);
        let (rv, re) = kronrod(&mut f, dim, mid, worst.b, &mut scratch);
        for i in 0..dim {
            total[i] += lv[i] + rv[i] - worst.value[i];
        }
        total_err += le + re - worst.err;
        heap.push(Piece { a: worst.a, b: mid, value: lv, err: le });
        heap.push(Piece { a: mid, b: worst.b, value: rv, err: re });
        // Re-sum occasionally so cancellation in the running totals does not drift.
        if heap.len() % 64 == 0 {
            total = vec![0.0; dim];
            total_err = 0.0;
            for p in heap.iter() {
                for (t, v) in total.iter_mut().zip(&p.value) {
                    *t += v;
                }
                total_err += p.err;
            }
        }
    }
}

/// Integrates a real function over `[a, b]`.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_vec(|x, out| out[0] = f(x), 1, a, b, tol).map(|v| v[0])
}

/// Integrates a complex function over `[a, b]`.
pub fn integrate_complex<F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<C64>
where
    F: Fn(f64) -> C64,
{
    integrate_vec(
        |x, out| {
            let z = f(x);
            out[0] = z.re;
            out[1] = z.im;
        },
        2,
        a,
        b,
        tol,
    )
    .map(|v| C64::new(v[0], v[1]))
}
