//! Scalar minimisation helpers for witness refinement.

/// Golden-section minimum of `f` on [a, b]. Assumes a single local minimum on
/// the bracket; with a fixed iteration count the result is deterministic.
pub fn golden_min(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Golden-section maximum of `f` on [a, b].
pub fn golden_max(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, iters: usize) -> (f64, f64) {
    let (x, neg) = golden_min(&mut |t| -f(t), a, b, iters);
    (x, -neg)
}

/// Golden-section minimum that also evaluates both endpoints, so minima on
/// the boundary of a clamped interval are hit exactly.
pub fn golden_min_closed(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, iters: usize) -> (f64, f64) {
    let (mut x, mut v) = golden_min(f, a, b, iters);
    for end in [a, b] {
        let fe = f(end);
        if fe < v {
            x = end;
            v = fe;
        }
    }
    (x, v)
}

/// Golden-section maximum with endpoint evaluation.
pub fn golden_max_closed(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, iters: usize) -> (f64, f64) {
    let (x, neg) = golden_min_closed(&mut |t| -f(t), a, b, iters);
    (x, -neg)
}
