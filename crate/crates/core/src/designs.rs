//! Builds any supported design from a small parameter record.

use std::fmt;
use std::str::FromStr;

use crate::algebra::{Field, FieldSpec};
use crate::basecode::{make_cauchy_base_seeded, BaseCode, VectorLinearBase};
use crate::engine::{full_download_plan, RepairPlan, Repairable};
use crate::error::{Error, Result};
use crate::framework::{instantiate, LinearCode};
use crate::{design1, design2, design3, paritypatch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DesignId {
    Base,
    D1,
    D2,
    D3,
    Pp,
}

impl DesignId {
    pub const ALL: [DesignId; 5] = [DesignId::Base, DesignId::D1, DesignId::D2, DesignId::D3, DesignId::Pp];

    pub fn name(self) -> &'static str {
        match self {
            DesignId::Base => "base",
            DesignId::D1 => "d1",
            DesignId::D2 => "d2",
            DesignId::D3 => "d3",
            DesignId::Pp => "pp",
        }
    }

    /// `m1 = 2` for design 3, one instance group otherwise.
    pub fn default_m(self) -> usize {
        match self {
            DesignId::D3 => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for DesignId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DesignId {
    type Err = Error;

    fn from_str(s: &str) -> Result<DesignId> {
        DesignId::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::params(format!("unknown design {s:?} (expected base, d1, d2, d3 or pp)")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeParams {
    pub design: DesignId,
    pub field: FieldSpec,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub seed: u64,
}

impl CodeParams {
    pub fn new(design: DesignId, n: usize, k: usize) -> CodeParams {
        CodeParams {
            design,
            field: FieldSpec::GF256,
            n,
            k,
            m: design.default_m(),
            seed: 0,
        }
    }

    pub fn r(&self) -> usize {
        self.n.saturating_sub(self.k)
    }
}

/// The unmodified base code over `m` instances, repaired by full download.
#[derive(Clone, Debug)]
pub struct Plain {
    code: LinearCode,
}

impl Repairable for Plain {
    fn code(&self) -> &LinearCode {
        &self.code
    }
    fn repair_plan(&self, node: usize) -> Result<RepairPlan> {
        full_download_plan(&self.code, node)
    }
}

pub struct Built {
    pub design: Box<dyn Repairable + Send>,
    pub base: Box<dyn BaseCode + Send>,
}

impl Built {
    pub fn code(&self) -> &LinearCode {
        self.design.code()
    }
}

pub fn build(p: &CodeParams) -> Result<Built> {
    if p.k == 0 || p.n <= p.k {
        return Err(Error::params(format!("need n > k >= 1, got n={}, k={}", p.n, p.k)));
    }
    if p.m == 0 {
        return Err(Error::params("m must be at least 1"));
    }
    let field = Field::new(p.field)?;
    let base = make_cauchy_base_seeded(field, p.k, p.r(), p.seed)?;
    let design: Box<dyn Repairable + Send> = match p.design {
        DesignId::Base => Box::new(Plain {
            code: instantiate(&base, p.m)?,
        }),
        DesignId::D1 => Box::new(design1::construct(&base, p.m)?),
        DesignId::D2 => Box::new(design2::construct(&base, p.m)?),
        DesignId::D3 => Box::new(design3::construct(&base, p.m)?),
        DesignId::Pp => {
            let vector = VectorLinearBase::from_scalar(&base);
            let built = paritypatch::pp_construct(&vector)?;
            return Ok(Built {
                design: Box::new(built),
                base: Box::new(vector),
            });
        }
    };
    Ok(Built {
        design,
        base: Box::new(base),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framework::theorem1_check;

    #[test]
    fn names_round_trip() {
        for d in DesignId::ALL {
            assert_eq!(d.name().parse::<DesignId>().unwrap(), d);
        }
        assert!("d4".parse::<DesignId>().is_err());
    }

    #[test]
    fn alphas() {
        let cases = [
            (DesignId::Base, 1),
            (DesignId::D1, 2),
            (DesignId::D2, 5),
            (DesignId::D3, 4),
            (DesignId::Pp, 2),
        ];
        for (d, alpha) in cases {
            let b = build(&CodeParams::new(d, 8, 4)).unwrap();
            assert_eq!(b.code().alpha(), alpha, "{d}");
            assert!(theorem1_check(b.base.as_ref(), b.code(), 1 << 20).unwrap());
        }
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(
            build(&CodeParams::new(DesignId::D2, 12, 10)),
            Err(Error::InvalidParams(_))
        ));
        assert!(build(&CodeParams::new(DesignId::D1, 4, 4)).is_err());
        let mut p = CodeParams::new(DesignId::D3, 13, 10);
        p.m = 1;
        assert!(build(&p).is_err());
        let mut big = CodeParams::new(DesignId::D1, 300, 200);
        big.field = FieldSpec::GF256;
        assert!(matches!(build(&big), Err(Error::FieldTooSmall { .. })));
    }

    #[test]
    fn seeds_change_the_base() {
        let mut p = CodeParams::new(DesignId::D1, 6, 4);
        let a = build(&p).unwrap();
        p.seed = 7;
        let b = build(&p).unwrap();
        assert_ne!(a.code().grid(), b.code().grid());
    }
}
