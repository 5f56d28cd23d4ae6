use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The modulus nonlinearity `F(|u|)`.
#[derive(Clone)]
pub enum Nonlinearity {
    /// `F ≡ 0`.
    Zero,
    /// `F(r) = g·r^p`.
    Power { g: f64, p: f64 },
    /// `F(r) = s·ln r`.
    Log { s: f64 },
    Custom {
        label: String,
        eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Nonlinearity({self})")
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "F = 0"),
            Self::Power { g, p } => write!(f, "F(r) = {g}·r^{p}"),
            Self::Log { s } => write!(f, "F(r) = {s}·ln r"),
            Self::Custom { label, .. } => write!(f, "F = {label}"),
        }
    }
}

impl Nonlinearity {
    pub fn power(g: f64, p: f64) -> Self {
        Self::Power { g, p }
    }

    pub fn log(s: f64) -> Self {
        Self::Log { s }
    }

    pub fn custom(label: impl Into<String>, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom {
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Power { g, p } => {
                if *p == 0.0 {
                    *g
                } else {
                    g * r.powf(*p)
                }
            }
            Self::Log { s } => s * r.ln(),
            Self::Custom { eval, .. } => eval(r),
        }
    }

    pub fn descriptor(&self) -> Option<NonlinearityDescriptor> {
        Some(match self {
            Self::Zero => NonlinearityDescriptor {
                kind: NonlinearityKind::None,
                g: None,
                p: None,
                s: None,
            },
            Self::Power { g, p } => NonlinearityDescriptor {
                kind: NonlinearityKind::Power,
                g: Some(*g),
                p: Some(*p),
                s: None,
            },
            Self::Log { s } => NonlinearityDescriptor {
                kind: NonlinearityKind::Log,
                g: None,
                p: None,
                s: Some(*s),
            },
            Self::Custom { .. } => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearityKind {
    Power,
    Log,
    None,
}

/// Serializable form `{kind: power|log|none, g, p, s}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityDescriptor {
    pub kind: NonlinearityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
}

impl TryFrom<&NonlinearityDescriptor> for Nonlinearity {
    type Error = Error;

    fn try_from(d: &NonlinearityDescriptor) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Config(format!("nonlinearity {:?} needs `{name}`", d.kind)))
        };
        Ok(match d.kind {
            NonlinearityKind::None => Self::Zero,
            NonlinearityKind::Power => Self::power(need(d.g, "g")?, need(d.p, "p")?),
            NonlinearityKind::Log => Self::log(need(d.s, "s")?),
        })
    }
}
