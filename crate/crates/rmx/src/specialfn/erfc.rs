//! Complex complementary error function through the Faddeeva function
//! `w(z) = exp(-z^2) erfc(-iz)`, evaluated with the Poppe-Wijers scheme
//! (Taylor series near the origin, Laplace continued fraction elsewhere).

use num_complex::Complex64;

const TWO_OVER_SQRT_PI: f64 = 1.128_379_167_095_512_6;

/// `|z|` up to which erfc is held to `1e-12 * max(1, |erfc z|)`.
pub const ERFC_ACCURACY_RADIUS: f64 = 30.0;

/// Faddeeva function `w(z)`.
pub fn faddeeva(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let xabs = x.abs();
    let yabs = y.abs();
    let xs = xabs / 6.3;
    let ys = yabs / 4.4;
    let mut qrho = xs * xs + ys * ys;
    let xquad = xabs * xabs - yabs * yabs;
    let yquad = 2.0 * xabs * yabs;
    let series = qrho < 0.085264;

    let (mut u, mut v);
    let (mut u2, mut v2) = (0.0, 0.0);
    if series {
        qrho = (1.0 - 0.85 * ys) * qrho.sqrt();
        let n = (6.0 + 72.0 * qrho).round() as i64;
        let mut j = 2 * n + 1;
        let mut xsum = 1.0 / j as f64;
        let mut ysum = 0.0;
        for i in (1..=n).rev() {
            j -= 2;
            let xaux = (xsum * xquad - ysum * yquad) / i as f64;
            ysum = (xsum * yquad + ysum * xquad) / i as f64;
            xsum = xaux + 1.0 / j as f64;
        }
        let u1 = -TWO_OVER_SQRT_PI * (xsum * yabs + ysum * xabs) + 1.0;
        let v1 = TWO_OVER_SQRT_PI * (xsum * xabs - ysum * yabs);
        let daux = (-xquad).exp();
        u2 = daux * yquad.cos();
        v2 = -daux * yquad.sin();
        u = u1 * u2 - v1 * v2;
        v = u1 * v2 + v1 * u2;
    } else {
        let (h, kapn, nu);
        if qrho > 1.0 {
            h = 0.0;
            kapn = 0;
            qrho = qrho.sqrt();
            nu = (3.0 + 1442.0 / (26.0 * qrho + 77.0)) as i64;
        } else {
            qrho = (1.0 - ys) * (1.0 - qrho).sqrt();
            h = 1.88 * qrho;
            kapn = (7.0 + 34.0 * qrho).round() as i64;
            nu = (16.0 + 26.0 * qrho).round() as i64;
        }
        let h2 = 2.0 * h;
        let mut qlambda = if h > 0.0 { h2.powi(kapn as i32) } else { 0.0 };
        let (mut rx, mut ry, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0);
        for n in (0..=nu).rev() {
            let np1 = (n + 1) as f64;
            let tx = yabs + h + np1 * rx;
            let ty = xabs - np1 * ry;
            let c = 0.5 / (tx * tx + ty * ty);
            rx = c * tx;
            ry = c * ty;
            if h > 0.0 && n <= kapn {
                let tx = qlambda + sx;
                sx = rx * tx - ry * sy;
                sy = ry * tx + rx * sy;
                qlambda /= h2;
            }
        }
        if h == 0.0 {
            u = TWO_OVER_SQRT_PI * rx;
            v = TWO_OVER_SQRT_PI * ry;
        } else {
            u = TWO_OVER_SQRT_PI * sx;
            v = TWO_OVER_SQRT_PI * sy;
        }
        if yabs == 0.0 {
            u = (-xabs * xabs).exp();
        }
    }

    if y < 0.0 {
        if series {
            u2 *= 2.0;
            v2 *= 2.0;
        } else {
            let w1 = 2.0 * xquad.exp();
            u2 = w1 * yquad.cos();
            v2 = -w1 * yquad.sin();
        }
        u = u2 - u;
        v = v2 - v;
        if x > 0.0 {
            v = -v;
        }
    } else if x < 0.0 {
        v = -v;
    }
    Complex64::new(u, v)
}

/// `erfc(z)` for complex `z`; accurate for `|z| <= 30`, best effort beyond.
pub fn erfc_complex(z: Complex64) -> Complex64 {
    if z.re < 0.0 {
        return Complex64::new(2.0, 0.0) - erfc_complex(-z);
    }
    if z.im < 0.0 {
        return erfc_complex(z.conj()).conj();
    }
    // erfc(z) = exp(-z^2) w(iz), with iz in the closed upper half plane
    let w = faddeeva(Complex64::new(-z.im, z.re));
    let e = (-z * z).exp();
    if w.re.is_finite() && e.re.is_finite() {
        e * w
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// `(value, in_domain)`: the flag is false outside the accuracy radius.
pub fn erfc_complex_flagged(z: Complex64) -> (Complex64, bool) {
    (erfc_complex(z), z.norm() <= ERFC_ACCURACY_RADIUS)
}

pub fn erfc_real(x: f64) -> f64 {
    erfc_complex(Complex64::new(x, 0.0)).re
}
