//! Truncated power series in `z` with polynomial coefficients in `u`, `x`.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::map::MapClass;
use crate::poly::PolyUX;

#[derive(Debug, Clone, PartialEq)]
pub struct Series3 {
    pub cls: Option<MapClass>,
    nz: usize,
    nx: usize,
    coeffs: Vec<PolyUX>,
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    class: Option<String>,
    #[serde(rename = "Nz")]
    nz: usize,
    #[serde(rename = "Nx")]
    nx: usize,
    coeffs: Vec<(usize, Vec<(usize, usize, String)>)>,
}

impl Series3 {
    pub fn zero(nz: usize, nx: usize) -> Self {
        Series3 { cls: None, nz, nx, coeffs: vec![PolyUX::zero(); nz + 1] }
    }

    /// Pads or cuts `coeffs` to `nz + 1` entries and drops x-degrees above `nx`.
    pub fn from_coeffs(mut coeffs: Vec<PolyUX>, nz: usize, nx: usize) -> Self {
        coeffs.resize(nz + 1, PolyUX::zero());
        let coeffs = coeffs.into_iter().map(|p| p.truncate_x(nx)).collect();
        Series3 { cls: None, nz, nx, coeffs }
    }

    pub fn with_class(mut self, cls: MapClass) -> Self {
        self.cls = Some(cls);
        self
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn coeff(&self, n: usize) -> &PolyUX {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[PolyUX] {
        &self.coeffs
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.nz != o.nz || self.nx != o.nx {
            return Err(Error::Usage(format!(
                "truncation mismatch: (Nz={}, Nx={}) vs (Nz={}, Nx={})",
                self.nz, self.nx, o.nz, o.nx
            )));
        }
        Ok(())
    }

    fn map(&self, f: impl Fn(&PolyUX) -> PolyUX) -> Self {
        Series3 { cls: None, nz: self.nz, nx: self.nx, coeffs: self.coeffs.iter().map(f).collect() }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let mut out = self.clone();
        out.cls = None;
        for (a, b) in out.coeffs.iter_mut().zip(&o.coeffs) {
            a.add_assign(b);
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let mut out = self.clone();
        out.cls = None;
        for (a, b) in out.coeffs.iter_mut().zip(&o.coeffs) {
            a.sub_assign(b);
        }
        Ok(out)
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let mut coeffs = vec![PolyUX::zero(); self.nz + 1];
        for (n, c) in coeffs.iter_mut().enumerate() {
            for a in 0..=n {
                c.add_mul(&self.coeffs[a], &o.coeffs[n - a], self.nx);
            }
            c.normalize();
        }
        Ok(Series3 { cls: None, nz: self.nz, nx: self.nx, coeffs })
    }

    pub fn scale(&self, k: i64) -> Self {
        self.map(|p| p.scale(k))
    }

    /// `[u^j]` of every coefficient.
    pub fn coeff_u(&self, j: usize) -> Self {
        self.map(|p| p.coeff_u(j))
    }

    /// `[x^k]` of every coefficient.
    pub fn coeff_x(&self, k: usize) -> Self {
        self.map(|p| p.coeff_x(k))
    }

    pub fn eval_u1(&self) -> Self {
        self.map(PolyUX::eval_u1)
    }

    pub fn divided_difference_u(&self) -> Self {
        self.map(PolyUX::divided_difference)
    }

    /// `[z^n x^k]` at `u = 1` for `n = 0..=Nz`.
    pub fn counts_at_u1(&self, k: usize) -> Vec<BigInt> {
        self.coeffs.iter().map(|p| p.eval_u1().get(0, k)).collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.coeffs.iter().all(PolyUX::is_nonnegative)
    }

    pub fn to_json(&self) -> Value {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, p)| (n, p.terms().map(|(u, x, c)| (u, x, c.to_string())).collect()))
            .collect();
        let doc = SeriesJson { class: self.cls.map(|c| c.name().to_string()), nz: self.nz, nx: self.nx, coeffs };
        serde_json::to_value(doc).expect("series serializes")
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let doc: SeriesJson =
            serde_json::from_value(v.clone()).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
        let mut coeffs = vec![PolyUX::zero(); doc.nz + 1];
        for (n, terms) in doc.coeffs {
            if n > doc.nz {
                return Err(Error::Parse { line: 0, msg: format!("z-power {n} beyond Nz") });
            }
            for (u, x, c) in terms {
                let c: BigInt =
                    c.parse().map_err(|_| Error::Parse { line: 0, msg: format!("bad integer `{c}`") })?;
                let mut p = coeffs[n].clone();
                p.set(u, x, c);
                coeffs[n] = p;
            }
        }
        let mut s = Series3::from_coeffs(coeffs, doc.nz, doc.nx);
        s.cls = match doc.class {
            Some(c) => Some(MapClass::parse(&c)?),
            None => None,
        };
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn square_of_one_plus_zu() {
        let mut c = vec![PolyUX::constant(1), PolyUX::monomial(1, 0, bi(1))];
        c.resize(3, PolyUX::zero());
        let s = Series3::from_coeffs(c, 2, 0);
        let sq = s.mul(&s).unwrap();
        assert_eq!(sq.coeff(0), &PolyUX::constant(1));
        assert_eq!(sq.coeff(1), &PolyUX::monomial(1, 0, bi(2)));
        assert_eq!(sq.coeff(2), &PolyUX::monomial(2, 0, bi(1)));
        assert!(s.mul(&Series3::zero(3, 0)).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let s = Series3::from_coeffs(vec![PolyUX::constant(1), PolyUX::monomial(2, 1, bi(-5))], 3, 2)
            .with_class(MapClass::Bipartite);
        let back = Series3::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }
}
