//! Independent numerical oracles used only by unit tests.

use std::vec::Vec;

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
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

/// Globally adaptive Gauss-Kronrod quadrature on a finite interval.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let mut segs: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(f, a, b);
    segs.push((a, b, v, e));
    for _ in 0..5000 {
        let total_err: f64 = segs.iter().map(|s| s.3).sum();
        if total_err <= tol {
            break;
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (lo, hi, _, _) = segs.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        segs.push((lo, mid, v1, e1));
        segs.push((mid, hi, v2, e2));
    }
    segs.iter().map(|s| s.2).sum()
}

/// Integral over `[a, b]` with an integrable power singularity allowed at `b`:
/// the substitution `x = b - (b - a) v^4` flattens it.
pub fn integrate_to_singular_end(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let d = b - a;
    let g = |v: f64| {
        let x = b - d * v * v * v * v;
        if x >= b {
            return 0.0;
        }
        f(x) * 4.0 * d * v * v * v
    };
    integrate(&g, 0.0, 1.0, tol)
}

/// Integral over `[a, ∞)` via `x = a / u` (requires `a > 0`).
pub fn integrate_to_infinity(f: &dyn Fn(f64) -> f64, a: f64, tol: f64) -> f64 {
    let g = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        f(a / u) * a / (u * u)
    };
    integrate(&g, 0.0, 1.0, tol)
}
