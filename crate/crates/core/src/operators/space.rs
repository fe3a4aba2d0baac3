use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest spin register handled with dense matrices (dimension 4096).
pub const MAX_REGISTER_SPINS: usize = 12;

/// A labeled finite-dimensional Hilbert space.
///
/// Two operators can only be combined when their spaces compare equal, so the
/// label doubles as a guard against mixing, say, a Dicke-sector operator with a
/// register operator of the same dimension.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HilbertSpace {
    /// `spins` qubits, dimension 2^spins. Site 0 is the most significant bit.
    SpinRegister { spins: usize },
    /// Fully symmetric sector of `spins` spin-1/2, dimension spins + 1.
    DickeSector { spins: usize },
    /// Direct sum of fixed-number Fock blocks `(n_a + k, n_b - k)`, |k| ≤ k_max,
    /// over `modes` pairs of bosonic modes.
    FockBlock {
        modes: usize,
        n_a: usize,
        n_b: usize,
        k_max: usize,
        dim: usize,
    },
    /// Tensor product of arbitrary factors.
    Product { factors: Vec<HilbertSpace> },
}

impl HilbertSpace {
    pub fn spin_register(spins: usize) -> Result<Self> {
        if spins == 0 {
            return Err(Error::InvalidArgument("a register needs at least one spin".into()));
        }
        if spins > MAX_REGISTER_SPINS {
            return Err(Error::TooManySpins {
                spins,
                cap: MAX_REGISTER_SPINS,
            });
        }
        Ok(Self::SpinRegister { spins })
    }

    pub fn dicke(spins: usize) -> Result<Self> {
        if spins == 0 {
            return Err(Error::InvalidArgument("the Dicke sector needs at least one spin".into()));
        }
        Ok(Self::DickeSector { spins })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::SpinRegister { spins } => 1 << spins,
            Self::DickeSector { spins } => spins + 1,
            Self::FockBlock { dim, .. } => *dim,
            Self::Product { factors } => factors.iter().map(Self::dim).product(),
        }
    }

    /// Number of spins for register and Dicke spaces.
    pub fn spins(&self) -> Option<usize> {
        match self {
            Self::SpinRegister { spins } | Self::DickeSector { spins } => Some(*spins),
            _ => None,
        }
    }

    /// Space of `self ⊗ other`. Registers merge into a larger register.
    pub fn tensor(&self, other: &Self) -> Self {
        match (self, other) {
            (Self::SpinRegister { spins: a }, Self::SpinRegister { spins: b }) => {
                Self::SpinRegister { spins: a + b }
            }
            _ => {
                let mut factors = Vec::new();
                for space in [self, other] {
                    match space {
                        Self::Product { factors: inner } => factors.extend(inner.iter().cloned()),
                        s => factors.push(s.clone()),
                    }
                }
                Self::Product { factors }
            }
        }
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SpinRegister { spins } => write!(f, "register({spins} spins)"),
            Self::DickeSector { spins } => write!(f, "dicke({spins} spins)"),
            Self::FockBlock {
                modes,
                n_a,
                n_b,
                k_max,
                dim,
            } => write!(f, "fock(modes={modes}, N_A={n_a}, N_B={n_b}, k_max={k_max}, dim={dim})"),
            Self::Product { factors } => {
                let parts: Vec<String> = factors.iter().map(ToString::to_string).collect();
                write!(f, "{}", parts.join(" ⊗ "))
            }
        }
    }
}

pub(crate) fn ensure_same(left: &HilbertSpace, right: &HilbertSpace) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::SpaceMismatch {
            left: left.clone(),
            right: right.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        assert_eq!(HilbertSpace::spin_register(4).unwrap().dim(), 16);
        assert_eq!(HilbertSpace::dicke(8).unwrap().dim(), 9);
        assert!(matches!(
            HilbertSpace::spin_register(13),
            Err(Error::TooManySpins { .. })
        ));
    }

    #[test]
    fn registers_merge_under_tensor() {
        let a = HilbertSpace::spin_register(2).unwrap();
        let b = HilbertSpace::spin_register(3).unwrap();
        assert_eq!(a.tensor(&b), HilbertSpace::SpinRegister { spins: 5 });
        let d = HilbertSpace::dicke(2).unwrap();
        let p = a.tensor(&d);
        assert_eq!(p.dim(), 12);
        assert_eq!(p.tensor(&d).dim(), 36);
    }
}
