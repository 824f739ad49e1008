//! Polynomials and rational functions in one variable, with just enough
//! algebra for Cramer's rule on small matrices.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Coefficients, constant term first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    pub fn zero() -> Self {
        Poly(vec![0.0])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&0.0) + other.0.get(i).unwrap_or(&0.0))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn scale(&self, c: f64) -> Poly {
        Poly(self.0.iter().map(|v| v * c).collect())
    }

    /// Drops coefficients that are zero up to `eps` from the top.
    pub fn trimmed(&self, eps: f64) -> Poly {
        let mut v = self.0.clone();
        while v.len() > 1 && v.last().is_some_and(|c| c.abs() <= eps) {
            v.pop();
        }
        Poly(v)
    }
}

/// Determinant by cofactor expansion along the first row.
pub fn determinant(m: &[Vec<Poly>]) -> Poly {
    match m.len() {
        0 => Poly::constant(1.0),
        1 => m[0][0].clone(),
        n => {
            let mut acc = Poly::zero();
            for col in 0..n {
                let minor: Vec<Vec<Poly>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(j, _)| *j != col)
                            .map(|(_, v)| v.clone())
                            .collect()
                    })
                    .collect();
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                acc = acc.add(&m[0][col].mul(&determinant(&minor)).scale(sign));
            }
            acc
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalFn {
    pub numerator: Poly,
    pub denominator: Poly,
}

impl RationalFn {
    pub fn new(numerator: Poly, denominator: Poly) -> Self {
        Self {
            numerator,
            denominator,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.numerator.eval(x) / self.denominator.eval(x)
    }

    /// Rescales numerator and denominator by the smallest integer factor
    /// (up to 1000) that makes every coefficient integral, with a positive
    /// constant term in the denominator.
    pub fn normalized(&self) -> RationalFn {
        let eps = 1e-9;
        let num = self.numerator.trimmed(eps);
        let den = self.denominator.trimmed(eps);
        let lead = den.0.iter().copied().find(|c| c.abs() > eps).unwrap_or(1.0);
        let (num, den) = (num.scale(1.0 / lead), den.scale(1.0 / lead));
        let integral = |c: f64| (c - c.round()).abs() <= 1e-7 * c.abs().max(1.0);
        for m in 1..=1000 {
            let f = m as f64;
            if num.0.iter().chain(&den.0).all(|c| integral(c * f)) {
                let round = |p: &Poly| Poly(p.0.iter().map(|c| (c * f).round() + 0.0).collect());
                return RationalFn::new(round(&num), round(&den));
            }
        }
        RationalFn::new(num, den)
    }
}

fn format_poly(p: &Poly, var: &str) -> String {
    let mut out = String::new();
    for (i, &c) in p.0.iter().enumerate() {
        if c == 0.0 && p.0.len() > 1 {
            continue;
        }
        let mag = c.abs();
        let coef = if mag.fract() == 0.0 {
            format!("{}", mag as i64)
        } else {
            format!("{mag}")
        };
        let term = match i {
            0 => coef,
            _ => {
                let c = if mag == 1.0 { String::new() } else { coef };
                if i == 1 {
                    format!("{c}{var}")
                } else {
                    format!("{c}{var}^{i}")
                }
            }
        };
        if out.is_empty() {
            if c < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(if c < 0.0 { " - " } else { " + " });
        }
        out.push_str(&term);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

impl fmt::Display for RationalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num = format_poly(&self.numerator, "p");
        let den = &self.denominator;
        if den.0.len() == 1 && den.0[0] == 1.0 {
            return f.write_str(&num);
        }
        let wrap = |s: String, p: &Poly| {
            if p.0.iter().filter(|c| **c != 0.0).count() > 1 {
                format!("({s})")
            } else {
                s
            }
        };
        write!(
            f,
            "{}/{}",
            wrap(num, &self.numerator),
            wrap(format_poly(den, "p"), den)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_determinant() {
        // | 1      -0.9p |
        // | -0.8p   1    |  = 1 - 0.72 p^2
        let m = vec![
            vec![Poly::constant(1.0), Poly(vec![0.0, -0.9])],
            vec![Poly(vec![0.0, -0.8]), Poly::constant(1.0)],
        ];
        let d = determinant(&m).trimmed(1e-12);
        assert_eq!(d.0.len(), 3);
        assert!((d.0[2] + 0.72).abs() < 1e-15);
        assert!((d.eval(0.5) - (1.0 - 0.18)).abs() < 1e-15);
    }

    #[test]
    fn normalization_and_display() {
        let r = RationalFn::new(Poly(vec![0.7, 0.54]), Poly(vec![1.0, 0.0, -0.72])).normalized();
        assert_eq!(r.to_string(), "(35 + 27p)/(50 - 36p^2)");
        let r = RationalFn::new(Poly(vec![0.7, 0.9]), Poly::constant(1.0)).normalized();
        assert_eq!(r.to_string(), "(7 + 9p)/10");
        let r = RationalFn::new(Poly::constant(1.0), Poly::constant(1.0)).normalized();
        assert_eq!(r.to_string(), "1");
        let r = RationalFn::new(Poly(vec![0.0, 0.56]), Poly(vec![1.0, -0.2, -0.72])).normalized();
        assert_eq!(r.to_string(), "14p/(25 - 5p - 18p^2)");
    }
}
