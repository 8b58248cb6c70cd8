//! Cubic Hermite segments for dense output between committed steps.

/// Value of the cubic Hermite interpolant on a segment of width `h` at the
/// normalized abscissa `theta` (0 at the left knot, 1 at the right knot).
/// `theta` outside `[0, 1]` extrapolates the same cubic.
#[inline]
pub fn eval(y0: f64, y1: f64, m0: f64, m1: f64, h: f64, theta: f64) -> f64 {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
}

/// `(min, max)` of the interpolant over `theta in [lo, hi]`, including
/// interior critical points.
pub fn extrema(y0: f64, y1: f64, m0: f64, m1: f64, h: f64, lo: f64, hi: f64) -> (f64, f64) {
    let a = eval(y0, y1, m0, m1, h, lo);
    let b = eval(y0, y1, m0, m1, h, hi);
    let (mut mn, mut mx) = (a.min(b), a.max(b));

    // p(theta) = y0 + c1 theta + c2 theta^2 + c3 theta^3
    let c1 = h * m0;
    let c2 = -3.0 * y0 - 2.0 * h * m0 + 3.0 * y1 - h * m1;
    let c3 = 2.0 * y0 + h * m0 - 2.0 * y1 + h * m1;
    // p'(theta) = c1 + 2 c2 theta + 3 c3 theta^2
    let (qa, qb, qc) = (3.0 * c3, 2.0 * c2, c1);
    let mut consider = |theta: f64| {
        if theta > lo && theta < hi {
            let v = eval(y0, y1, m0, m1, h, theta);
            mn = mn.min(v);
            mx = mx.max(v);
        }
    };
    let scale = qa.abs().max(qb.abs()).max(qc.abs());
    if scale == 0.0 {
        return (mn, mx);
    }
    if qa.abs() <= 1e-14 * scale {
        if qb != 0.0 {
            consider(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // numerically stable pair of roots
            let q = -0.5 * (qb + qb.signum() * sq);
            if q != 0.0 {
                consider(q / qa);
                consider(qc / q);
            } else {
                consider(-qb / (2.0 * qa));
            }
        }
    }
    (mn, mx)
}
