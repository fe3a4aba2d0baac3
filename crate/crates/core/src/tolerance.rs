use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by validation and verification routines.
///
/// Defaults sit just above the double-precision eigensolver noise floor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Max-entry |A - A†| accepted as Hermitian, scaled by max(1, max|A|).
    pub hermitian: f64,
    /// Most negative eigenvalue accepted for a density operator.
    pub positivity: f64,
    /// Allowed |Tr ρ - 1|.
    pub trace: f64,
    /// Sector-support and off-diagonality residual bound.
    pub hypothesis: f64,
    /// Relative bound on |F_Q - 4⟨G²⟩|.
    pub qfi_equality: f64,
    /// Relative bound on |ξ_P⁻² - F_Q|.
    pub xi_equality: f64,
    /// Pairs with p_n + p_m at or below this are dropped from the QFI sum.
    pub eig_cutoff: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            positivity: 1e-10,
            trace: 1e-10,
            hypothesis: 1e-10,
            qfi_equality: 1e-8,
            xi_equality: 1e-6,
            eig_cutoff: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> crate::Result<()> {
        let fields = [
            ("hermitian", self.hermitian),
            ("positivity", self.positivity),
            ("trace", self.trace),
            ("hypothesis", self.hypothesis),
            ("qfi_equality", self.qfi_equality),
            ("xi_equality", self.xi_equality),
            ("eig_cutoff", self.eig_cutoff),
        ];
        for (name, value) in fields {
            if !value.is_finite() || value < 0.0 {
                return Err(crate::Error::InvalidArgument(format!(
                    "tolerance `{name}` must be a finite nonnegative number, got {value}"
                )));
            }
        }
        Ok(())
    }
}
