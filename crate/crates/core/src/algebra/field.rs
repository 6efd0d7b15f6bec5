//! Small finite fields: GF(2^w) for w in {4, 8, 16} and prime fields GF(p), p < 2^16.
//!
//! Elements are plain `u32` values in `[0, order)`. A [`Field`] is a cheap `Copy`
//! handle; binary-extension fields share process-wide log/antilog tables.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Which field a code lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldSpec {
    /// GF(2^w) with a fixed irreducible polynomial per `w`.
    Binary { w: u32 },
    /// GF(p) for a prime `p < 2^16`.
    Prime { p: u32 },
}

/// Fixed reduction polynomials. These never change: shard files depend on them.
pub const fn binary_poly(w: u32) -> Option<u32> {
    match w {
        4 => Some(0x13),
        8 => Some(0x11D),
        16 => Some(0x1100B),
        _ => None,
    }
}

impl FieldSpec {
    pub const GF256: FieldSpec = FieldSpec::Binary { w: 8 };

    pub fn order(&self) -> u32 {
        match *self {
            FieldSpec::Binary { w } => 1 << w,
            FieldSpec::Prime { p } => p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FieldSpec::Binary { w } => {
                if binary_poly(w).is_none() {
                    return Err(Error::InvalidField(format!(
                        "GF(2^{w}) unsupported, use w in {{4, 8, 16}}"
                    )));
                }
            }
            FieldSpec::Prime { p } => {
                if !(2..(1 << 16)).contains(&p) || !is_prime(p) {
                    return Err(Error::InvalidField(format!("{p} is not a prime below 2^16")));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Binary { w } => write!(f, "GF(2^{w})"),
            FieldSpec::Prime { p } => write!(f, "GF({p})"),
        }
    }
}

impl FromStr for FieldSpec {
    type Err = Error;

    /// Accepts `GF(2^8)`, `gf2^8`, `GF(5)`, `gf5` (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidField(format!("cannot parse field spec {s:?}"));
        let lower = s.trim().to_ascii_lowercase();
        let body = lower.strip_prefix("gf").ok_or_else(bad)?;
        let body = match body.strip_prefix('(') {
            Some(inner) => inner.strip_suffix(')').ok_or_else(bad)?,
            None => body,
        };
        let spec = if let Some(w) = body.strip_prefix("2^") {
            FieldSpec::Binary {
                w: w.parse().map_err(|_| bad())?,
            }
        } else {
            FieldSpec::Prime {
                p: body.parse().map_err(|_| bad())?,
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

struct BinaryTables {
    log: Vec<u32>,
    // exp is doubled so that exp[log a + log b] needs no reduction
    exp: Vec<u32>,
}

impl BinaryTables {
    fn build(w: u32) -> BinaryTables {
        let poly = binary_poly(w).expect("validated width");
        let order = 1u32 << w;
        let mut log = vec![0u32; order as usize];
        let mut exp = vec![0u32; 2 * order as usize];
        let mut x = 1u32;
        for i in 0..(order - 1) {
            exp[i as usize] = x;
            log[x as usize] = i;
            x <<= 1;
            if x & order != 0 {
                x ^= poly;
            }
        }
        for i in (order - 1) as usize..exp.len() {
            exp[i] = exp[i - (order - 1) as usize];
        }
        BinaryTables { log, exp }
    }
}

fn tables(w: u32) -> &'static BinaryTables {
    static GF16: OnceLock<BinaryTables> = OnceLock::new();
    static GF256: OnceLock<BinaryTables> = OnceLock::new();
    static GF65536: OnceLock<BinaryTables> = OnceLock::new();
    match w {
        4 => GF16.get_or_init(|| BinaryTables::build(4)),
        8 => GF256.get_or_init(|| BinaryTables::build(8)),
        16 => GF65536.get_or_init(|| BinaryTables::build(16)),
        _ => unreachable!("validated width"),
    }
}

/// Arithmetic handle for one field.
#[derive(Clone, Copy)]
pub struct Field {
    spec: FieldSpec,
    order: u32,
    tables: Option<&'static BinaryTables>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.spec)
    }
}

impl Field {
    pub fn new(spec: FieldSpec) -> Result<Field> {
        spec.validate()?;
        let tables = match spec {
            FieldSpec::Binary { w } => Some(tables(w)),
            FieldSpec::Prime { .. } => None,
        };
        Ok(Field {
            spec,
            order: spec.order(),
            tables,
        })
    }

    /// GF(2^8) over 0x11D, the default for shard storage.
    pub fn gf256() -> Field {
        Field::new(FieldSpec::GF256).expect("GF(2^8) is valid")
    }

    pub fn prime(p: u32) -> Result<Field> {
        Field::new(FieldSpec::Prime { p })
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_binary(&self) -> bool {
        self.tables.is_some()
    }

    /// Validate a raw value as an element.
    pub fn elem(&self, value: u32) -> Result<u32> {
        if value < self.order {
            Ok(value)
        } else {
            Err(Error::ElementOutOfRange {
                value,
                order: self.order,
            })
        }
    }

    /// Map an integer into the field: reduction mod p for prime fields, the
    /// bit pattern itself (must fit) for binary fields.
    pub fn from_int(&self, v: u64) -> Result<u32> {
        if self.is_binary() {
            if v < self.order as u64 {
                Ok(v as u32)
            } else {
                Err(Error::ElementOutOfRange {
                    value: v.min(u32::MAX as u64) as u32,
                    order: self.order,
                })
            }
        } else {
            Ok((v % self.order as u64) as u32)
        }
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        if self.tables.is_some() {
            a ^ b
        } else {
            let s = a + b;
            if s >= self.order {
                s - self.order
            } else {
                s
            }
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if self.tables.is_some() {
            a ^ b
        } else if a >= b {
            a - b
        } else {
            a + self.order - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        self.sub(0, a)
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        match self.tables {
            Some(t) => {
                if a == 0 || b == 0 {
                    0
                } else {
                    t.exp[(t.log[a as usize] + t.log[b as usize]) as usize]
                }
            }
            None => ((a as u64 * b as u64) % self.order as u64) as u32,
        }
    }

    pub fn inv(&self, a: u32) -> Result<u32> {
        if a == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.inv_nonzero(a))
    }

    #[inline]
    pub(crate) fn inv_nonzero(&self, a: u32) -> u32 {
        debug_assert!(a != 0);
        match self.tables {
            Some(t) => t.exp[(self.order - 1 - t.log[a as usize]) as usize],
            None => self.pow(a, (self.order - 2) as u64),
        }
    }

    pub fn div(&self, a: u32, b: u32) -> Result<u32> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        let mut base = a;
        let mut acc = 1u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// A generator of the multiplicative group.
    pub fn generator(&self) -> u32 {
        if self.tables.is_some() {
            // x is primitive for all three fixed polynomials
            return 2;
        }
        let q = self.order - 1;
        let factors = prime_factors(q);
        (2..self.order)
            .find(|&g| factors.iter().all(|&f| self.pow(g, (q / f) as u64) != 1))
            .unwrap_or(1)
    }
}

fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    // Carry-less multiply followed by polynomial reduction. Independent of the tables.
    fn clmul_reduce(a: u32, b: u32, w: u32) -> u32 {
        let poly = binary_poly(w).unwrap();
        let mut prod = 0u64;
        for i in 0..w {
            if (b >> i) & 1 == 1 {
                prod ^= (a as u64) << i;
            }
        }
        for bit in (w..2 * w).rev() {
            if (prod >> bit) & 1 == 1 {
                prod ^= (poly as u64) << (bit - w);
            }
        }
        prod as u32
    }

    #[test]
    fn gf5_product() {
        let f = Field::prime(5).unwrap();
        assert_eq!(f.mul(3, 4), 2);
        assert_eq!(f.sub(1, 3), 3);
        assert_eq!(f.inv(2).unwrap(), 3);
    }

    #[test]
    fn gf256_known_product() {
        let f = Field::gf256();
        assert_eq!(clmul_reduce(0x02, 0x80, 8), 0x1D);
        assert_eq!(f.mul(0x02, 0x80), 0x1D);
    }

    #[test]
    fn binary_tables_match_clmul_oracle() {
        for w in [4u32, 8] {
            let f = Field::new(FieldSpec::Binary { w }).unwrap();
            for a in 0..f.order() {
                for b in 0..f.order() {
                    assert_eq!(f.mul(a, b), clmul_reduce(a, b, w), "w={w} {a}*{b}");
                }
            }
        }
        let f = Field::new(FieldSpec::Binary { w: 16 }).unwrap();
        for (a, b) in [(0x1234, 0xBEEF), (0xFFFF, 0xFFFF), (0x8000, 2), (7, 0x4321)] {
            assert_eq!(f.mul(a, b), clmul_reduce(a, b, 16));
        }
    }

    #[test]
    fn generator_spans_group() {
        for spec in [
            FieldSpec::Binary { w: 4 },
            FieldSpec::Binary { w: 8 },
            FieldSpec::Binary { w: 16 },
            FieldSpec::Prime { p: 5 },
            FieldSpec::Prime { p: 257 },
        ] {
            let f = Field::new(spec).unwrap();
            let g = f.generator();
            let mut x = 1;
            let mut seen = 0u32;
            loop {
                x = f.mul(x, g);
                seen += 1;
                if x == 1 {
                    break;
                }
            }
            assert_eq!(seen, f.order() - 1, "{spec}");
        }
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let f = Field::gf256();
        assert!(matches!(f.div(3, 0), Err(Error::DivisionByZero)));
        assert!(matches!(f.inv(0), Err(Error::DivisionByZero)));
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("GF(2^8)".parse::<FieldSpec>().unwrap(), FieldSpec::GF256);
        assert_eq!("gf2^16".parse::<FieldSpec>().unwrap(), FieldSpec::Binary { w: 16 });
        assert_eq!("gf(5)".parse::<FieldSpec>().unwrap(), FieldSpec::Prime { p: 5 });
        assert!("GF(6)".parse::<FieldSpec>().is_err());
        assert!("GF(2^9)".parse::<FieldSpec>().is_err());
        assert!("GF(65537)".parse::<FieldSpec>().is_err());
        assert!("F5".parse::<FieldSpec>().is_err());
        for s in [FieldSpec::GF256, FieldSpec::Prime { p: 7 }] {
            assert_eq!(s.to_string().parse::<FieldSpec>().unwrap(), s);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn fields() -> impl Strategy<Value = Field> {
            prop_oneof![
                Just(Field::gf256()),
                Just(Field::new(FieldSpec::Binary { w: 16 }).unwrap()),
                Just(Field::prime(5).unwrap()),
                Just(Field::prime(65521).unwrap()),
            ]
        }

        proptest! {
            #[test]
            fn axioms(f in fields(), a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
                let (a, b, c) = (a % f.order(), b % f.order(), c % f.order());
                prop_assert_eq!(f.add(a, 0), a);
                prop_assert_eq!(f.add(a, b), f.add(b, a));
                prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                prop_assert_eq!(f.add(a, f.neg(a)), 0);
                prop_assert_eq!(f.sub(f.add(a, b), b), a);
                if a != 0 {
                    prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
            }
        }
    }
}
