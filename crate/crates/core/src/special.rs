//! Special functions needed by the chirp coefficient closed forms and the
//! error-rate bound.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

const FRESNEL_SERIES_LIMIT: f64 = 1.5;
const FRESNEL_EPS: f64 = 1e-16;
const FRESNEL_MAX_ITER: usize = 10_000;

/// Normalized Fresnel integrals `(C(x), S(x))` with
/// `C(x) = ∫₀ˣ cos(πt²/2) dt` and `S(x) = ∫₀ˣ sin(πt²/2) dt`.
///
/// Power series below |x| = 1.5, otherwise a Lentz-evaluated continued
/// fraction of the complementary error function. Absolute error stays well
/// below 1e-12 over the whole real line.
pub fn fresnel(x: f64) -> (f64, f64) {
    let ax = x.abs();
    let (c, s) = if ax < FRESNEL_SERIES_LIMIT {
        fresnel_series(ax)
    } else {
        fresnel_continued_fraction(ax)
    };
    if x < 0.0 {
        (-c, -s)
    } else {
        (c, s)
    }
}

fn fresnel_series(x: f64) -> (f64, f64) {
    if x == 0.0 {
        return (0.0, 0.0);
    }
    // term_n = (-1)^⌊n/2⌋ (πx²/2)^n x / (n! (2n+1)); even n feed C, odd n feed S.
    let t = FRAC_PI_2 * x * x;
    let mut c = x;
    let mut s = 0.0;
    let mut fact = x;
    let mut n = 1usize;
    loop {
        fact *= t / n as f64;
        let term = fact / (2 * n + 1) as f64;
        let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if n % 2 == 1 {
            s += sign * term;
        } else {
            c += sign * term;
        }
        if term < FRESNEL_EPS * c.abs().max(s.abs()).max(1e-300) || n > FRESNEL_MAX_ITER {
            break;
        }
        n += 1;
    }
    (c, s)
}

fn fresnel_continued_fraction(x: f64) -> (f64, f64) {
    let pix2 = PI * x * x;
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, -pix2);
    let mut cc = Complex64::new(1.0 / tiny, 0.0);
    let mut d = b.inv();
    let mut h = d;
    let mut n = -1.0f64;
    for _ in 2..FRESNEL_MAX_ITER {
        n += 2.0;
        let a = -n * (n + 1.0);
        b += 4.0;
        d = (d * a + b).inv();
        cc = b + cc.inv() * a;
        let del = cc * d;
        h *= del;
        if (del - 1.0).norm() < FRESNEL_EPS {
            break;
        }
    }
    h *= Complex64::new(x, -x);
    let cs = Complex64::new(0.5, 0.5)
        * (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, 0.5 * pix2) * h);
    (cs.re, cs.im)
}

/// Bessel functions of the first kind `J_0(x) ..= J_max_order(x)`.
///
/// Miller's downward recurrence normalized with `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_orders(max_order: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; max_order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = (max_order as f64).max(ax);
    let mut start = (top + 30.0 + 12.0 * top.sqrt()) as usize;
    start += start % 2;

    let mut next = 0.0f64; // J_{n+1}
    let mut cur = 1e-30f64; // J_n
    let mut norm = 0.0f64;
    for n in (1..=start).rev() {
        let prev = 2.0 * n as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        let order = n - 1;
        if order <= max_order {
            out[order] = cur;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// `J_n(x)` for any integer order, using `J_{-n} = (-1)^n J_n`.
pub fn bessel_j(order: i64, x: f64) -> f64 {
    let n = order.unsigned_abs() as usize;
    let v = bessel_j_orders(n, x)[n];
    if order < 0 && n % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from scipy.special (fresnel, jv).
    #[test]
    fn fresnel_matches_reference() {
        let cases = [
            (0.5, 0.492_344_225_871_446_4, 0.064_732_432_859_999_29),
            (1.0, 0.779_893_400_376_823, 0.438_259_147_390_354_7),
            (1.49, 0.454_586_520_177_636_95, 0.701_113_224_998_279_8),
            (1.51, 0.436_116_168_036_017_3, 0.693_461_421_915_976),
            (3.0, 0.605_720_789_297_685_7, 0.496_312_998_967_375),
            (10.0, 0.499_898_694_205_515_75, 0.468_169_978_584_882_24),
            (53.7, 0.497_225_740_550_974_24, 0.494_761_733_972_270_1),
        ];
        for (x, c_ref, s_ref) in cases {
            let (c, s) = fresnel(x);
            assert!((c - c_ref).abs() < 1e-12, "C({x}) = {c}, want {c_ref}");
            assert!((s - s_ref).abs() < 1e-12, "S({x}) = {s}, want {s_ref}");
            let (cn, sn) = fresnel(-x);
            assert_eq!((cn, sn), (-c, -s));
        }
    }

    #[test]
    fn bessel_matches_reference() {
        let cases = [
            (0, 6.0, 0.150_645_257_250_996_98),
            (5, 6.0, 0.362_087_074_887_172_34),
            (12, 6.0, 0.000_545_154_443_783_211_6),
            (0, 16.0, -0.174_899_073_983_629_17),
            (20, 16.0, 0.017_328_746_227_591_996),
            (0, 691.0, 0.018_000_621_054_535_454),
            (600, 691.0, 0.028_142_967_317_629_226),
            (724, 691.0, 3.045_002_916_177_094e-5),
        ];
        for (n, x, want) in cases {
            let got = bessel_j(n, x);
            assert!((got - want).abs() < 1e-11, "J_{n}({x}) = {got}, want {want}");
        }
        assert!((bessel_j(-5, 6.0) + bessel_j(5, 6.0)).abs() < 1e-15);
    }

    #[test]
    fn bessel_at_zero_argument() {
        let j = bessel_j_orders(4, 0.0);
        assert_eq!(j, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn q_function_values() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        let q1 = q_function(1.0);
        assert!((q1 - 0.158_655_253_931_457_05).abs() < 1e-10, "Q(1) = {q1}");
        assert!(q_function(40.0) < 1e-300);
    }
}
