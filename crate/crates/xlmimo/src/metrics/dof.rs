use serde::{Deserialize, Serialize};

use crate::{CMatrix, Error, Result};

/// Effective degrees of freedom `(tr(HHᴴ) / ‖HHᴴ‖_F)²`.
pub fn edof(h: &CMatrix) -> Result<f64> {
    let gram = h * h.adjoint();
    let frob = gram.norm();
    if frob == 0.0 {
        return Err(Error::ZeroInput("channel matrix is zero"));
    }
    Ok((gram.trace().re / frob).powi(2))
}

/// Link geometry for the degrees-of-freedom approximations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DofGeometry {
    /// Parallel lines of lengths `tx_length`, `rx_length` metres.
    Ula { tx_length: f64, rx_length: f64, distance: f64 },
    /// Parallel planes of areas `tx_area`, `rx_area` m².
    Upa { tx_area: f64, rx_area: f64, distance: f64 },
}

/// `D_R D_T / (λ r)` for lines and `A_R A_T / (λ² r²)` for planes.
pub fn dof_approx(geometry: &DofGeometry, wavelength: f64) -> Result<f64> {
    crate::error::ensure_positive("wavelength", wavelength)?;
    match *geometry {
        DofGeometry::Ula { tx_length, rx_length, distance } => {
            crate::error::ensure_positive("distance", distance)?;
            Ok(tx_length * rx_length / (wavelength * distance))
        }
        DofGeometry::Upa { tx_area, rx_area, distance } => {
            crate::error::ensure_positive("distance", distance)?;
            Ok(tx_area * rx_area / (wavelength * distance).powi(2))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{CVector, C64};

    #[test]
    fn edof_extremes() {
        let a = CVector::from_fn(4, |i, _| C64::new(1.0, i as f64));
        let b = CVector::from_fn(3, |i, _| C64::new(0.5, -(i as f64)));
        assert!((edof(&(&a * b.adjoint())).unwrap() - 1.0).abs() < 1e-12);
        assert!((edof(&CMatrix::identity(5, 5)).unwrap() - 5.0).abs() < 1e-12);
        assert!(edof(&CMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn approximations() {
        let ula = DofGeometry::Ula { tx_length: 1.0, rx_length: 1.0, distance: 10.0 };
        assert!((dof_approx(&ula, 0.01).unwrap() - 10.0).abs() < 1e-12);
        let far = DofGeometry::Ula { tx_length: 1.0, rx_length: 1.0, distance: 20.0 };
        assert!((dof_approx(&far, 0.01).unwrap() - 5.0).abs() < 1e-12);
        let upa = DofGeometry::Upa { tx_area: 1.0, rx_area: 1.0, distance: 100.0 };
        assert!((dof_approx(&upa, 0.01).unwrap() - 1.0).abs() < 1e-12);
        let upa2 = DofGeometry::Upa { tx_area: 1.0, rx_area: 1.0, distance: 200.0 };
        assert!((dof_approx(&upa2, 0.01).unwrap() - 0.25).abs() < 1e-12);
    }
}
