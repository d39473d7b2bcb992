//! Polynomials in `u` and `x` over a coefficient ring.
//!
//! Storage is dense: `rows[x][u]`, trailing zeros trimmed on both axes. The
//! exact ring is `BigInt`; `ModP` residues are used for fast solves that are
//! recombined by the Chinese remainder theorem.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait Coeff: Clone + Send + Sync + fmt::Debug + PartialEq + 'static {
    fn zero() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_bigint(v: &BigInt) -> Self;
    fn is_zero(&self) -> bool;
    fn add_assign(&mut self, o: &Self);
    fn sub_assign(&mut self, o: &Self);
    /// `self += a * b`
    fn mul_add(&mut self, a: &Self, b: &Self);
    fn mul_i64(&mut self, k: i64);
    /// Weight of `z^k` for rings that rescale `z`; `None` means 1.
    fn z_weight(_k: i64) -> Option<Self> {
        None
    }
}

impl Coeff for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn from_bigint(v: &BigInt) -> Self {
        v.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_assign(&mut self, o: &Self) {
        *self += o;
    }
    fn sub_assign(&mut self, o: &Self) {
        *self -= o;
    }
    fn mul_add(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn mul_i64(&mut self, k: i64) {
        *self *= k;
    }
}

/// Residue modulo a prime below `2^31`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ModP<const P: u64>(pub u64);

impl<const P: u64> Coeff for ModP<P> {
    fn zero() -> Self {
        ModP(0)
    }
    fn from_i64(v: i64) -> Self {
        ModP(v.rem_euclid(P as i64) as u64)
    }
    fn from_bigint(v: &BigInt) -> Self {
        let m = BigInt::from(P);
        let r = ((v % &m) + &m) % &m;
        ModP(r.to_u64().unwrap())
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
    #[inline]
    fn add_assign(&mut self, o: &Self) {
        let s = self.0 + o.0;
        self.0 = if s >= P { s - P } else { s };
    }
    #[inline]
    fn sub_assign(&mut self, o: &Self) {
        self.0 = if self.0 >= o.0 { self.0 - o.0 } else { self.0 + P - o.0 };
    }
    #[inline]
    fn mul_add(&mut self, a: &Self, b: &Self) {
        self.0 = (self.0 + a.0 * b.0) % P;
    }
    fn mul_i64(&mut self, k: i64) {
        let k = k.rem_euclid(P as i64) as u64;
        self.0 = self.0 * k % P;
    }
}

/// `z` is replaced by `z / FLOAT_SCALE`, so `[z^n]` holds the count divided
/// by `FLOAT_SCALE^n` and stays within `f64` range for a few hundred terms.
pub const FLOAT_SCALE: f64 = 12.0;

/// Floating-point coefficient with rescaled `z`.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Scaled(pub f64);

impl Coeff for Scaled {
    fn zero() -> Self {
        Scaled(0.0)
    }
    fn from_i64(v: i64) -> Self {
        Scaled(v as f64)
    }
    fn from_bigint(v: &BigInt) -> Self {
        Scaled(v.to_f64().unwrap_or(f64::NAN))
    }
    fn is_zero(&self) -> bool {
        self.0 == 0.0
    }
    fn add_assign(&mut self, o: &Self) {
        self.0 += o.0;
    }
    fn sub_assign(&mut self, o: &Self) {
        self.0 -= o.0;
    }
    #[inline]
    fn mul_add(&mut self, a: &Self, b: &Self) {
        self.0 += a.0 * b.0;
    }
    fn mul_i64(&mut self, k: i64) {
        self.0 *= k as f64;
    }
    fn z_weight(k: i64) -> Option<Self> {
        Some(Scaled(FLOAT_SCALE.powi(-(k as i32))))
    }
}

/// Primes below `2^31`, largest first.
pub const PRIMES: [u64; 64] = [
    2147483647, 2147483629, 2147483587, 2147483579, 2147483563, 2147483549,
    2147483543, 2147483497, 2147483489, 2147483477, 2147483423, 2147483399,
    2147483353, 2147483323, 2147483269, 2147483249, 2147483237, 2147483179,
    2147483171, 2147483137, 2147483123, 2147483077, 2147483069, 2147483059,
    2147483053, 2147483033, 2147483029, 2147482951, 2147482949, 2147482943,
    2147482937, 2147482921, 2147482877, 2147482873, 2147482867, 2147482859,
    2147482819, 2147482817, 2147482811, 2147482801, 2147482763, 2147482739,
    2147482697, 2147482693, 2147482681, 2147482663, 2147482661, 2147482621,
    2147482591, 2147482583, 2147482577, 2147482507, 2147482501, 2147482481,
    2147482417, 2147482409, 2147482367, 2147482361, 2147482349, 2147482343,
    2147482327, 2147482291, 2147482273, 2147482237,
];

#[derive(Clone, PartialEq)]
pub struct Poly<C> {
    rows: Vec<Vec<C>>,
}

pub type PolyUX = Poly<BigInt>;

impl<C: Coeff> fmt::Debug for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (x, row) in self.rows.iter().enumerate() {
            for (u, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    if !first {
                        f.write_str(" + ")?;
                    }
                    first = false;
                    write!(f, "{c:?}*u^{u}*x^{x}")?;
                }
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl<C: Coeff> Default for Poly<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coeff> Poly<C> {
    pub fn zero() -> Self {
        Poly { rows: Vec::new() }
    }

    pub fn monomial(u: usize, x: usize, c: C) -> Self {
        let mut p = Self::zero();
        p.set(u, x, c);
        p
    }

    pub fn constant(c: i64) -> Self {
        Self::monomial(0, 0, C::from_i64(c))
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn x_len(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, x: usize) -> &[C] {
        self.rows.get(x).map_or(&[], Vec::as_slice)
    }

    /// Largest u-degree plus one.
    pub fn u_len(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn get(&self, u: usize, x: usize) -> C {
        self.rows.get(x).and_then(|r| r.get(u)).cloned().unwrap_or_else(C::zero)
    }

    pub fn set(&mut self, u: usize, x: usize, c: C) {
        if self.rows.len() <= x {
            self.rows.resize(x + 1, Vec::new());
        }
        let row = &mut self.rows[x];
        if row.len() <= u {
            row.resize(u + 1, C::zero());
        }
        row[u] = c;
        self.trim();
    }

    pub fn from_rows(rows: Vec<Vec<C>>) -> Self {
        let mut p = Poly { rows };
        p.trim();
        p
    }

    pub fn into_rows(self) -> Vec<Vec<C>> {
        self.rows
    }

    /// Nonzero terms as `(u, x, coefficient)`, x-major.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, &C)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(x, r)| r.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(move |(u, c)| (u, x, c)))
    }

    fn trim(&mut self) {
        for r in &mut self.rows {
            while r.last().is_some_and(C::is_zero) {
                r.pop();
            }
        }
        while self.rows.last().is_some_and(Vec::is_empty) {
            self.rows.pop();
        }
    }

    fn row_mut(&mut self, x: usize, ulen: usize) -> &mut Vec<C> {
        if self.rows.len() <= x {
            self.rows.resize(x + 1, Vec::new());
        }
        let r = &mut self.rows[x];
        if r.len() < ulen {
            r.resize(ulen, C::zero());
        }
        r
    }

    pub fn add_assign(&mut self, o: &Self) {
        for (x, r) in o.rows.iter().enumerate() {
            let dst = self.row_mut(x, r.len());
            for (d, c) in dst.iter_mut().zip(r) {
                d.add_assign(c);
            }
        }
        self.trim();
    }

    pub fn sub_assign(&mut self, o: &Self) {
        for (x, r) in o.rows.iter().enumerate() {
            let dst = self.row_mut(x, r.len());
            for (d, c) in dst.iter_mut().zip(r) {
                d.sub_assign(c);
            }
        }
        self.trim();
    }

    /// `self += a * b`, dropping x-degrees above `nx`. Call `normalize`
    /// afterwards if cancellation is possible.
    pub fn add_mul(&mut self, a: &Self, b: &Self, nx: usize) {
        for (xa, ra) in a.rows.iter().enumerate() {
            if ra.is_empty() {
                continue;
            }
            for (xb, rb) in b.rows.iter().enumerate() {
                if xa + xb > nx {
                    break;
                }
                if rb.is_empty() {
                    continue;
                }
                let dst = self.row_mut(xa + xb, ra.len() + rb.len() - 1);
                for (i, ca) in ra.iter().enumerate() {
                    if ca.is_zero() {
                        continue;
                    }
                    for (j, cb) in rb.iter().enumerate() {
                        dst[i + j].mul_add(ca, cb);
                    }
                }
            }
        }
    }

    pub fn normalize(&mut self) {
        self.trim();
    }

    pub fn mul(&self, o: &Self, nx: usize) -> Self {
        let mut p = Self::zero();
        p.add_mul(self, o, nx);
        p.trim();
        p
    }

    pub fn scale(&self, k: i64) -> Self {
        let mut p = self.clone();
        for r in &mut p.rows {
            for c in r.iter_mut() {
                c.mul_i64(k);
            }
        }
        p.trim();
        p
    }

    /// Multiplies by `u^k`; `None` if a negative shift would drop a nonzero
    /// coefficient.
    pub fn shift_u(&self, k: i64) -> Option<Self> {
        let mut rows = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            if k >= 0 {
                let mut nr = vec![C::zero(); k as usize];
                if r.is_empty() {
                    nr.clear();
                } else {
                    nr.extend(r.iter().cloned());
                }
                rows.push(nr);
            } else {
                let drop = (-k) as usize;
                if r.iter().take(drop).any(|c| !c.is_zero()) {
                    return None;
                }
                rows.push(r.iter().skip(drop).cloned().collect());
            }
        }
        Some(Self::from_rows(rows))
    }

    pub fn shift_x(&self, k: usize, nx: usize) -> Self {
        let mut rows = vec![Vec::new(); k.min(nx + 1)];
        for r in self.rows.iter().take((nx + 1).saturating_sub(k)) {
            rows.push(r.clone());
        }
        Self::from_rows(rows)
    }

    pub fn truncate_x(&self, nx: usize) -> Self {
        Self::from_rows(self.rows.iter().take(nx + 1).cloned().collect())
    }

    /// Substitutes `u = 1`.
    pub fn eval_u1(&self) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut s = C::zero();
                for c in r {
                    s.add_assign(c);
                }
                vec![s]
            })
            .collect();
        Self::from_rows(rows)
    }

    /// `[u^j]`, as a polynomial of u-degree 0.
    pub fn coeff_u(&self, j: usize) -> Self {
        let rows = self.rows.iter().map(|r| vec![r.get(j).cloned().unwrap_or_else(C::zero)]).collect();
        Self::from_rows(rows)
    }

    /// `[x^k]`, as a polynomial of x-degree 0.
    pub fn coeff_x(&self, k: usize) -> Self {
        Self::from_rows(vec![self.row(k).to_vec()])
    }

    /// Keeps the terms of u-degree at least `min_deg`.
    pub fn keep_u_from(&self, min_deg: usize) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().enumerate().map(|(u, c)| if u < min_deg { C::zero() } else { c.clone() }).collect())
            .collect();
        Self::from_rows(rows)
    }

    /// `(a(u) - a(1)) / (u - 1)`: the coefficient of `u^i` is the sum of the
    /// coefficients of `u^k`, `k > i`.
    pub fn divided_difference(&self) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut out = vec![C::zero(); r.len().saturating_sub(1)];
                let mut acc = C::zero();
                for i in (0..out.len()).rev() {
                    acc.add_assign(&r[i + 1]);
                    out[i] = acc.clone();
                }
                out
            })
            .collect();
        Self::from_rows(rows)
    }

    /// Multiplies every coefficient by `w`.
    pub fn times(&self, w: &C) -> Self {
        self.map(|c| {
            let mut r = C::zero();
            r.mul_add(c, w);
            r
        })
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        Poly::from_rows(self.rows.iter().map(|r| r.iter().map(&f).collect()).collect())
    }
}

impl PolyUX {
    pub fn is_nonnegative(&self) -> bool {
        self.rows.iter().flatten().all(|c| !c.is_negative())
    }
}

/// Garner reconstruction in the symmetric range `(-M/2, M/2]`.
pub struct Crt {
    primes: Vec<u64>,
    /// `inv[i]` is the inverse of `p_0 ... p_{i-1}` modulo `p_i`.
    inv: Vec<u64>,
    radix: Vec<BigUint>,
    modulus: BigUint,
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

impl Crt {
    pub fn new(primes: &[u64]) -> Self {
        let mut inv = Vec::with_capacity(primes.len());
        let mut radix = Vec::with_capacity(primes.len());
        let mut prod = BigUint::one();
        for (i, &p) in primes.iter().enumerate() {
            let mut m = 1u64;
            for &q in &primes[..i] {
                m = m * (q % p) % p;
            }
            inv.push(pow_mod(m, p - 2, p));
            radix.push(prod.clone());
            prod *= p;
        }
        Crt { primes: primes.to_vec(), inv, radix, modulus: prod }
    }

    pub fn bits(&self) -> u64 {
        self.modulus.bits()
    }

    pub fn combine(&self, residues: &[u64]) -> BigInt {
        let k = self.primes.len();
        let mut digits = vec![0u64; k];
        for i in 0..k {
            let p = self.primes[i];
            // value of the partial mixed-radix sum modulo p
            let mut acc = 0u64;
            let mut base = 1u64;
            for j in 0..i {
                acc = (acc + digits[j] % p * base) % p;
                base = base * (self.primes[j] % p) % p;
            }
            let r = residues[i] % p;
            digits[i] = (r + p - acc) % p * self.inv[i] % p;
        }
        let mut x = BigUint::zero();
        for i in 0..k {
            if digits[i] != 0 {
                x += &self.radix[i] * digits[i];
            }
        }
        let half = &self.modulus >> 1;
        if x > half {
            BigInt::from_biguint(Sign::Minus, &self.modulus - x)
        } else {
            BigInt::from_biguint(Sign::Plus, x)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = Poly<BigInt>;

    fn bi(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn divided_difference_examples() {
        let a = P::monomial(2, 0, bi(1));
        let dd = a.divided_difference();
        assert_eq!(dd, P::from_rows(vec![vec![bi(1), bi(1)]]));
        assert!(P::constant(7).divided_difference().is_zero());
    }

    #[test]
    fn product_and_shift() {
        let one_plus_u = P::from_rows(vec![vec![bi(1), bi(1)]]);
        let sq = one_plus_u.mul(&one_plus_u, 2);
        assert_eq!(sq, P::from_rows(vec![vec![bi(1), bi(2), bi(1)]]));
        assert!(sq.shift_u(-1).is_none());
        let u2 = P::monomial(2, 1, bi(3));
        assert_eq!(u2.shift_u(-2).unwrap(), P::monomial(0, 1, bi(3)));
        assert_eq!(u2.shift_x(1, 1), P::zero());
        assert_eq!(u2.eval_u1(), P::monomial(0, 1, bi(3)));
    }

    #[test]
    fn crt_roundtrip() {
        let crt = Crt::new(&PRIMES[..5]);
        for v in [bi(0), bi(-1), bi(123456789), BigInt::from(10).pow(40), -BigInt::from(7).pow(50)] {
            let res: Vec<u64> = PRIMES[..5].iter().map(|&p| {
                let m = BigInt::from(p);
                (((&v % &m) + &m) % &m).to_u64().unwrap()
            }).collect();
            assert_eq!(crt.combine(&res), v);
        }
    }

    #[test]
    fn modp_matches_bigint() {
        const Q: u64 = PRIMES[0];
        let a = ModP::<Q>::from_i64(-5);
        let mut acc = ModP::<Q>::from_i64(3);
        acc.mul_add(&a, &ModP::from_i64(4));
        assert_eq!(acc, ModP::from_bigint(&bi(-17)));
    }
}
