//! Target functions `S, T, X, Y, Z` of the reduction conditions
//!
//! ```text
//! 2f_t + f_a f_a = S(ω)    Δf = T(ω)    ω_t + f_a ω_a = X(ω)
//! Δω = Y(ω)                ω_a ω_a = Z
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed-form real function of the reduced variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ProfileFn {
    Zero,
    Constant { value: f64 },
    /// `c0 + c1·ω`
    Affine { c0: f64, c1: f64 },
    /// `c0 + c2·ω⁻²`
    InverseSquare { c0: f64, c2: f64 },
    /// `Σ 1/(ω + p_i)`
    PoleSum { poles: Vec<f64> },
    /// `numerator / ω`
    Reciprocal { numerator: f64 },
}

impl ProfileFn {
    pub fn eval(&self, w: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant { value } => *value,
            Self::Affine { c0, c1 } => c0 + c1 * w,
            Self::InverseSquare { c0, c2 } => c0 + c2 / (w * w),
            Self::PoleSum { poles } => poles.iter().map(|p| 1.0 / (w + p)).sum(),
            Self::Reciprocal { numerator } => numerator / w,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Constant { value } => *value == 0.0,
            Self::PoleSum { poles } => poles.is_empty(),
            Self::Reciprocal { numerator } => *numerator == 0.0,
            Self::Affine { c0, c1 } => *c0 == 0.0 && *c1 == 0.0,
            Self::InverseSquare { c0, c2 } => *c0 == 0.0 && *c2 == 0.0,
        }
    }
}

impl fmt::Display for ProfileFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "0"),
            Self::Constant { value } => write!(f, "{value}"),
            Self::Affine { c0, c1 } => write!(f, "{c0} + {c1}·ω"),
            Self::InverseSquare { c0, c2 } => write!(f, "{c0} + {c2}·ω^-2"),
            Self::PoleSum { poles } if poles.is_empty() => write!(f, "0"),
            Self::PoleSum { poles } => {
                let terms: Vec<String> = poles.iter().map(|p| format!("1/(ω+{p})")).collect();
                write!(f, "{}", terms.join(" + "))
            }
            Self::Reciprocal { numerator } => write!(f, "{numerator}/ω"),
        }
    }
}

/// Profile characterizing one reduction. For `Z = 0` the reduced variable is
/// `ω = t`, `S ≡ 0`, `X ≡ 1`, `Y ≡ 0`; for `Z = 1`, `X ≡ 0` and `Y = N/ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionProfile {
    pub dim: usize,
    pub z: u8,
    /// `N` in `Δω = N/ω`; zero when `Z = 0`.
    pub radial: u8,
    pub s: ProfileFn,
    pub t: ProfileFn,
    pub x: ProfileFn,
    pub y: ProfileFn,
}

impl ReductionProfile {
    pub fn time_branch(dim: usize, poles: Vec<f64>) -> Self {
        Self {
            dim,
            z: 0,
            radial: 0,
            s: ProfileFn::Zero,
            t: ProfileFn::PoleSum { poles },
            x: ProfileFn::Constant { value: 1.0 },
            y: ProfileFn::Zero,
        }
    }

    pub fn unit_branch(dim: usize, radial: u8, s: ProfileFn) -> Self {
        Self {
            dim,
            z: 1,
            radial,
            s,
            t: ProfileFn::Zero,
            x: ProfileFn::Zero,
            y: ProfileFn::Reciprocal {
                numerator: radial as f64,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InconsistentProfile(m.to_string()));
        if !(2..=3).contains(&self.dim) {
            return bad("dimension must be 2 or 3");
        }
        match self.z {
            0 => {
                if !self.s.is_zero() {
                    return bad("Z = 0 requires S ≡ 0");
                }
                if self.x != (ProfileFn::Constant { value: 1.0 }) {
                    return bad("Z = 0 requires X ≡ 1 (ω = t)");
                }
                if !self.y.is_zero() || self.radial != 0 {
                    return bad("Z = 0 requires Y ≡ 0 and N = 0");
                }
            }
            1 => {
                if !self.x.is_zero() {
                    return bad("Z = 1 requires X ≡ 0");
                }
                if !self.t.is_zero() {
                    return bad("Z = 1 requires T ≡ 0");
                }
                let expect_y = ProfileFn::Reciprocal {
                    numerator: self.radial as f64,
                };
                if self.y != expect_y && !(self.radial == 0 && self.y.is_zero()) {
                    return bad("Z = 1 requires Y = N/ω");
                }
                if self.radial as usize > self.dim - 1 {
                    return bad("N must not exceed n − 1");
                }
            }
            _ => return bad("Z must be 0 or 1"),
        }
        Ok(())
    }

    pub fn eval_s(&self, w: f64) -> f64 {
        self.s.eval(w)
    }
    pub fn eval_t(&self, w: f64) -> f64 {
        self.t.eval(w)
    }
    pub fn eval_x(&self, w: f64) -> f64 {
        self.x.eval(w)
    }
    pub fn eval_y(&self, w: f64) -> f64 {
        self.y.eval(w)
    }
    pub fn z_value(&self) -> f64 {
        self.z as f64
    }
}

impl fmt::Display for ReductionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Z={} N={} S(ω)={} T(ω)={} X(ω)={} Y(ω)={}",
            self.z, self.radial, self.s, self.t, self.x, self.y
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_constructors_validate() {
        ReductionProfile::time_branch(3, vec![1.0, 2.0]).validate().unwrap();
        ReductionProfile::unit_branch(3, 2, ProfileFn::Constant { value: 2.0 })
            .validate()
            .unwrap();
        ReductionProfile::unit_branch(2, 0, ProfileFn::Zero).validate().unwrap();
    }

    #[test]
    fn invariants_are_enforced() {
        assert!(ReductionProfile::unit_branch(2, 2, ProfileFn::Zero).validate().is_err());
        let mut p = ReductionProfile::time_branch(3, vec![]);
        p.s = ProfileFn::Constant { value: 1.0 };
        assert!(p.validate().is_err());
        let mut p = ReductionProfile::unit_branch(3, 1, ProfileFn::Zero);
        p.x = ProfileFn::Constant { value: 0.5 };
        assert!(p.validate().is_err());
        let mut p = ReductionProfile::unit_branch(3, 1, ProfileFn::Zero);
        p.z = 2;
        assert!(p.validate().is_err());
    }

    #[test]
    fn evaluation() {
        assert_eq!(ProfileFn::Affine { c0: 2.0, c1: -4.0 }.eval(0.5), 0.0);
        assert_eq!(ProfileFn::InverseSquare { c0: 2.0, c2: 1.0 }.eval(2.0), 2.25);
        let t = ProfileFn::PoleSum { poles: vec![1.0, 2.0, 3.0] }.eval(0.0);
        assert!((t - 11.0 / 6.0).abs() < 1e-15);
    }
}
