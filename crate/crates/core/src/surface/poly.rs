//! Real roots of low-degree polynomials on an interval.
//!
//! Roots are isolated recursively: the roots of the derivative split the
//! interval into monotone pieces, and each piece with a sign change is
//! bisected. Double roots without a sign change (tangencies) are not reported.

/// Evaluates `c[0] + c[1] t + c[2] t² + ...` by Horner's rule.
pub fn eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * t + a)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, &a)| a * i as f64).collect()
}

fn trim(c: &[f64]) -> &[f64] {
    let scale = c.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let mut n = c.len();
    while n > 0 && c[n - 1].abs() <= scale * 1e-15 {
        n -= 1;
    }
    &c[..n]
}

/// Sorted real roots of the polynomial in `[lo, hi]`.
pub fn roots_in(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let c = trim(c);
    match c.len() {
        0 | 1 => Vec::new(),
        2 => {
            let t = -c[0] / c[1];
            if t >= lo && t <= hi {
                vec![t]
            } else {
                Vec::new()
            }
        }
        _ => {
            let mut breaks = vec![lo];
            breaks.extend(roots_in(&derivative(c), lo, hi).into_iter().filter(|&t| t > lo && t < hi));
            breaks.push(hi);
            let mut out: Vec<f64> = Vec::new();
            for w in breaks.windows(2) {
                let (a, b) = (w[0], w[1]);
                let (fa, fb) = (eval(c, a), eval(c, b));
                if fa == 0.0 {
                    push_unique(&mut out, a);
                }
                if fa * fb < 0.0 {
                    push_unique(&mut out, bisect(c, a, b, fa));
                }
            }
            if eval(c, hi) == 0.0 {
                push_unique(&mut out, hi);
            }
            out
        }
    }
}

fn push_unique(out: &mut Vec<f64>, t: f64) {
    if out.last().is_none_or(|&l| t > l) {
        out.push(t);
    }
}

fn bisect(c: &[f64], mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = eval(c, m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_roots(rs: &[f64]) -> Vec<f64> {
        let mut c = vec![1.0];
        for &r in rs {
            let mut n = vec![0.0; c.len() + 1];
            for (i, &a) in c.iter().enumerate() {
                n[i] -= r * a;
                n[i + 1] += a;
            }
            c = n;
        }
        c
    }

    #[test]
    fn quartic_roots() {
        let rs = [0.1, 0.35, 0.6, 0.95];
        let found = roots_in(&from_roots(&rs), 0.0, 1.0);
        assert_eq!(found.len(), 4);
        for (a, b) in found.iter().zip(rs) {
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
        let found = roots_in(&from_roots(&rs), 0.2, 0.7);
        assert_eq!(found.len(), 2);
    }

    #[test]
    fn linear_and_constant() {
        assert_eq!(roots_in(&[-0.5, 1.0], 0.0, 1.0), vec![0.5]);
        assert!(roots_in(&[1.0], 0.0, 1.0).is_empty());
        assert_eq!(roots_in(&[-0.5, 1.0, 0.0, 0.0], 0.0, 1.0), vec![0.5]);
    }

    #[test]
    fn no_real_roots() {
        assert!(roots_in(&[1.0, 0.0, 1.0], -10.0, 10.0).is_empty());
    }
}
