//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

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
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5] and the center.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

/// One 15-point Kronrod panel; the error is `|K15 - G7|`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Integrates `f` over `[a, b]`, bisecting the panel with the largest error
/// estimate until the summed estimate drops to `tol` or `max_panels` is hit.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_panels: usize) -> QuadResult {
    let (value, error) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut evaluations = 15;
    let mut total_err = error;
    while total_err > tol && heap.len() < max_panels {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = gk15(&f, worst.a, mid);
        let (rv, re) = gk15(&f, mid, worst.b);
        evaluations += 30;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
        total_err = heap.iter().map(|p| p.error).sum();
    }
    // sum in ascending panel order so the result does not depend on heap layout
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    QuadResult {
        value: panels.iter().map(|p| p.value).sum(),
        abs_error: panels.iter().map(|p| p.error).sum(),
        evaluations,
    }
}

/// Integrates over consecutive breakpoints, where `f` may have square-root
/// kinks at every breakpoint. Each panel `[lo, hi]` is mapped through
/// `theta = lo + (hi - lo)(3u^2 - 2u^3)`, whose Jacobian vanishes at both ends
/// and turns `sqrt|theta - kink|` into a smooth function of `u`.
pub fn integrate_with_kinks<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], tol: f64, max_panels: usize) -> QuadResult {
    let pieces = breakpoints.len().saturating_sub(1).max(1);
    let mut out = QuadResult {
        value: 0.0,
        abs_error: 0.0,
        evaluations: 0,
    };
    for w in breakpoints.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let width = hi - lo;
        let g = |u: f64| {
            let theta = lo + width * u * u * (3.0 - 2.0 * u);
            f(theta) * width * 6.0 * u * (1.0 - u)
        };
        let r = integrate(g, 0.0, 1.0, tol / pieces as f64, max_panels);
        out.value += r.value;
        out.abs_error += r.abs_error;
        out.evaluations += r.evaluations;
    }
    out
}
