//! Array layouts and element positions.
//!
//! Element `m` (0-based here, 1-based in the usual textbook notation) of a
//! uniform line sits at `p + δ_m d û` with `δ_m = (2m - M + 1) / 2`, so the
//! reference point `p` is the array centre. Planar arrays are indexed row by
//! row: all horizontal elements of the bottom row first.

use serde::{Deserialize, Serialize};

use crate::error::ensure_positive;
use crate::{Error, Result, Vec3};

const UNIT_TOLERANCE: f64 = 1e-12;

/// Shape parameters of an array, independent of placement and wavelength.
///
/// Element spacing is half a wavelength except for [`ArrayGeometry::SparseUla`],
/// which spreads elements `separation · λ/2` apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrayGeometry {
    CollocatedUla {
        elements: usize,
    },
    SparseUla {
        elements: usize,
        /// Spacing in half-wavelengths; must exceed 1.
        separation: f64,
    },
    ModularUla {
        modules: usize,
        per_module: usize,
        /// Distance between adjacent module centres in element spacings.
        module_separation: f64,
    },
    CollocatedUpa {
        horizontal: usize,
        vertical: usize,
    },
    ModularUpa {
        modules_h: usize,
        modules_v: usize,
        per_module_h: usize,
        per_module_v: usize,
        separation_h: f64,
        /// Defaults to `separation_h`.
        #[serde(default)]
        separation_v: Option<f64>,
    },
}

impl ArrayGeometry {
    pub fn is_linear(&self) -> bool {
        matches!(
            self,
            ArrayGeometry::CollocatedUla { .. } | ArrayGeometry::SparseUla { .. } | ArrayGeometry::ModularUla { .. }
        )
    }

    pub fn num_elements(&self) -> usize {
        match *self {
            ArrayGeometry::CollocatedUla { elements } | ArrayGeometry::SparseUla { elements, .. } => elements,
            ArrayGeometry::ModularUla { modules, per_module, .. } => modules * per_module,
            ArrayGeometry::CollocatedUpa { horizontal, vertical } => horizontal * vertical,
            ArrayGeometry::ModularUpa { modules_h, modules_v, per_module_h, per_module_v, .. } => {
                modules_h * per_module_h * modules_v * per_module_v
            }
        }
    }

    /// Element spacing inside a module, in metres.
    pub fn spacing(&self, wavelength: f64) -> f64 {
        match *self {
            ArrayGeometry::SparseUla { separation, .. } => separation * wavelength / 2.0,
            _ => wavelength / 2.0,
        }
    }

    /// Checks the structural constraints of each kind.
    pub fn validate(&self) -> Result<()> {
        let count = |name: &'static str, n: usize| {
            if n == 0 {
                Err(Error::param(name, "must be at least 1"))
            } else {
                Ok(())
            }
        };
        match *self {
            ArrayGeometry::CollocatedUla { elements } => count("elements", elements),
            ArrayGeometry::SparseUla { elements, separation } => {
                count("elements", elements)?;
                if !(separation.is_finite() && separation > 1.0) {
                    return Err(Error::param(
                        "separation",
                        format!("sparse arrays need a separation above 1 half-wavelength, got {separation}"),
                    ));
                }
                Ok(())
            }
            ArrayGeometry::ModularUla { modules, per_module, module_separation } => {
                count("modules", modules)?;
                count("per_module", per_module)?;
                check_module_separation("module_separation", module_separation, per_module)
            }
            ArrayGeometry::CollocatedUpa { horizontal, vertical } => {
                count("horizontal", horizontal)?;
                count("vertical", vertical)
            }
            ArrayGeometry::ModularUpa {
                modules_h,
                modules_v,
                per_module_h,
                per_module_v,
                separation_h,
                separation_v,
            } => {
                count("modules_h", modules_h)?;
                count("modules_v", modules_v)?;
                count("per_module_h", per_module_h)?;
                count("per_module_v", per_module_v)?;
                check_module_separation("separation_h", separation_h, per_module_h)?;
                check_module_separation("separation_v", separation_v.unwrap_or(separation_h), per_module_v)
            }
        }
    }

    /// Element coordinates along the horizontal and vertical axes, in metres
    /// from the reference point. Linear arrays have a single vertical entry.
    ///
    /// No validation is done here; [`ArrayLayout`] validates before calling.
    pub(crate) fn axis_coordinates(&self, wavelength: f64) -> (Vec<f64>, Vec<f64>) {
        let d = self.spacing(wavelength);
        match *self {
            ArrayGeometry::CollocatedUla { elements } | ArrayGeometry::SparseUla { elements, .. } => {
                (centred(elements, d), vec![0.0])
            }
            ArrayGeometry::ModularUla { modules, per_module, module_separation } => {
                (modular(modules, per_module, module_separation, d), vec![0.0])
            }
            ArrayGeometry::CollocatedUpa { horizontal, vertical } => (centred(horizontal, d), centred(vertical, d)),
            ArrayGeometry::ModularUpa {
                modules_h,
                modules_v,
                per_module_h,
                per_module_v,
                separation_h,
                separation_v,
            } => (
                modular(modules_h, per_module_h, separation_h, d),
                modular(modules_v, per_module_v, separation_v.unwrap_or(separation_h), d),
            ),
        }
    }
}

fn check_module_separation(name: &'static str, gamma: f64, per_module: usize) -> Result<()> {
    if !gamma.is_finite() || gamma < per_module as f64 {
        return Err(Error::param(
            name,
            format!("modular arrays need module separation >= elements per module ({per_module}), got {gamma}"),
        ));
    }
    Ok(())
}

fn centred(count: usize, spacing: f64) -> Vec<f64> {
    (0..count).map(|i| (2.0 * i as f64 - count as f64 + 1.0) / 2.0 * spacing).collect()
}

fn modular(modules: usize, per_module: usize, gamma: f64, spacing: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(modules * per_module);
    for n in centred(modules, gamma * spacing) {
        out.extend(centred(per_module, spacing).into_iter().map(|x| n + x));
    }
    out
}

/// A placed, oriented array at a given carrier wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayLayout {
    geometry: ArrayGeometry,
    wavelength: f64,
    reference: Vec3,
    axis: Vec3,
    vertical_axis: Vec3,
    boresight: Vec3,
}

fn check_unit(name: &'static str, v: &Vec3) -> Result<()> {
    let n = v.norm();
    if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::param(name, format!("must be a unit vector, norm is {n}")));
    }
    Ok(())
}

fn default_boresight(axis: &Vec3) -> Vec3 {
    let b = axis.cross(&Vec3::z());
    if b.norm() < 1e-9 {
        Vec3::x()
    } else {
        b.normalize()
    }
}

impl ArrayLayout {
    /// Linear array along `axis` centred at `reference`.
    ///
    /// The boresight defaults to `axis × ẑ` (for an array along `ŷ` it is
    /// `x̂`). Planar geometries are rejected; use [`ArrayLayout::planar`].
    pub fn linear(geometry: ArrayGeometry, wavelength: f64, reference: Vec3, axis: Vec3) -> Result<Self> {
        ensure_positive("wavelength", wavelength)?;
        geometry.validate()?;
        if !geometry.is_linear() {
            return Err(Error::param("kind", "planar geometry needs two axes"));
        }
        check_unit("axis", &axis)?;
        let boresight = default_boresight(&axis);
        Ok(ArrayLayout { geometry, wavelength, reference, axis, vertical_axis: boresight.cross(&axis), boresight })
    }

    /// Planar array spanned by orthogonal unit axes; boresight is `axis_h × axis_v`.
    pub fn planar(
        geometry: ArrayGeometry,
        wavelength: f64,
        reference: Vec3,
        axis_h: Vec3,
        axis_v: Vec3,
    ) -> Result<Self> {
        ensure_positive("wavelength", wavelength)?;
        geometry.validate()?;
        if geometry.is_linear() {
            return Err(Error::param("kind", "linear geometry takes a single axis"));
        }
        check_unit("axis_h", &axis_h)?;
        check_unit("axis_v", &axis_v)?;
        if axis_h.dot(&axis_v).abs() > UNIT_TOLERANCE {
            return Err(Error::param("axis_v", "must be orthogonal to axis_h"));
        }
        let boresight = axis_h.cross(&axis_v);
        Ok(ArrayLayout { geometry, wavelength, reference, axis: axis_h, vertical_axis: axis_v, boresight })
    }

    /// Array centred at the origin: linear arrays along `ŷ` facing `x̂`,
    /// planar arrays in the `y`–`z` plane facing `x̂`.
    pub fn along_y(geometry: ArrayGeometry, wavelength: f64) -> Result<Self> {
        if geometry.is_linear() {
            Self::linear(geometry, wavelength, Vec3::zeros(), Vec3::y())
        } else {
            Self::planar(geometry, wavelength, Vec3::zeros(), Vec3::y(), Vec3::z())
        }
    }

    /// Replaces the boresight (the direction elements face).
    pub fn with_boresight(mut self, boresight: Vec3) -> Result<Self> {
        check_unit("boresight", &boresight)?;
        if boresight.dot(&self.axis).abs() > 1e-9 {
            return Err(Error::param("boresight", "must be perpendicular to the array axis"));
        }
        if !self.geometry.is_linear() && boresight.dot(&self.vertical_axis).abs() > 1e-9 {
            return Err(Error::param("boresight", "must be normal to the array plane"));
        }
        self.vertical_axis = if self.geometry.is_linear() { boresight.cross(&self.axis) } else { self.vertical_axis };
        self.boresight = boresight;
        Ok(self)
    }

    /// Moves the reference point.
    pub fn with_reference(mut self, reference: Vec3) -> Self {
        self.reference = reference;
        self
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn reference(&self) -> Vec3 {
        self.reference
    }

    /// Array axis `û` (horizontal axis for planar arrays).
    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    /// Vertical axis of a planar array; for linear arrays `boresight × axis`.
    pub fn vertical_axis(&self) -> Vec3 {
        self.vertical_axis
    }

    /// Unit normal the elements face.
    pub fn boresight(&self) -> Vec3 {
        self.boresight
    }

    pub fn num_elements(&self) -> usize {
        self.geometry.num_elements()
    }

    pub fn spacing(&self) -> f64 {
        self.geometry.spacing(self.wavelength)
    }

    /// Element offsets `δ_m` from the reference point, in metres.
    pub fn offsets(&self) -> Vec<Vec3> {
        let (h, v) = self.geometry.axis_coordinates(self.wavelength);
        let mut out = Vec::with_capacity(h.len() * v.len());
        for &y in &v {
            for &x in &h {
                out.push(self.axis * x + self.vertical_axis * y);
            }
        }
        out
    }

    /// Signed element coordinates along the array axis (linear arrays).
    pub fn axial_coordinates(&self) -> Vec<f64> {
        let (h, v) = self.geometry.axis_coordinates(self.wavelength);
        if v.len() == 1 {
            h
        } else {
            v.iter().flat_map(|_| h.iter().copied()).collect()
        }
    }

    /// Absolute element positions `p + δ_m`.
    pub fn positions(&self) -> Vec<Vec3> {
        self.offsets().into_iter().map(|d| self.reference + d).collect()
    }

    /// Horizontal and vertical apertures (vertical is 0 for linear arrays).
    pub fn extent(&self) -> (f64, f64) {
        let (h, v) = self.geometry.axis_coordinates(self.wavelength);
        let span = |c: &[f64]| c.last().copied().unwrap_or(0.0) - c.first().copied().unwrap_or(0.0);
        (span(&h), span(&v))
    }

    /// End-to-end aperture `D`; the diagonal for planar arrays.
    pub fn physical_dimension(&self) -> f64 {
        let (h, v) = self.extent();
        h.hypot(v)
    }

    /// Physical area spanned by a planar array (`D_H · D_V`).
    pub fn area(&self) -> f64 {
        let (h, v) = self.extent();
        h * v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ula(g: ArrayGeometry, lambda: f64) -> ArrayLayout {
        ArrayLayout::along_y(g, lambda).unwrap()
    }

    fn ys(layout: &ArrayLayout) -> Vec<f64> {
        layout.positions().iter().map(|p| p.y).collect()
    }

    #[test]
    fn two_element_collocated() {
        let l = ula(ArrayGeometry::CollocatedUla { elements: 2 }, 0.125);
        assert_eq!(l.positions(), vec![Vec3::new(0.0, -0.03125, 0.0), Vec3::new(0.0, 0.03125, 0.0)]);
    }

    #[test]
    fn two_by_two_modular() {
        let l = ula(ArrayGeometry::ModularUla { modules: 2, per_module: 2, module_separation: 4.0 }, 0.125);
        assert_eq!(ys(&l), vec![-0.15625, -0.09375, 0.09375, 0.15625]);
    }

    #[test]
    fn physical_dimensions() {
        let l = ula(ArrayGeometry::CollocatedUla { elements: 128 }, 0.125);
        assert!((l.physical_dimension() - 7.9375).abs() < 1e-12);
        let m = ula(ArrayGeometry::ModularUla { modules: 4, per_module: 4, module_separation: 13.0 }, 0.125);
        assert!((m.physical_dimension() - 2.625).abs() < 1e-12);
        let one = ula(ArrayGeometry::CollocatedUla { elements: 1 }, 0.125);
        assert_eq!(one.physical_dimension(), 0.0);
    }

    #[test]
    fn planar_is_row_major_and_diagonal() {
        let l = ula(ArrayGeometry::CollocatedUpa { horizontal: 3, vertical: 2 }, 0.1);
        let p = l.positions();
        assert_eq!(p.len(), 6);
        assert!((p[1].y - p[0].y - 0.05).abs() < 1e-15 && p[1].z == p[0].z);
        assert!((p[3].z - p[0].z - 0.05).abs() < 1e-15);
        assert!((l.physical_dimension() - (0.1f64.powi(2) + 0.05f64.powi(2)).sqrt()).abs() < 1e-15);
        assert_eq!(l.boresight(), Vec3::x());
    }

    #[test]
    fn modular_upa_centroid_reference() {
        let g = ArrayGeometry::ModularUpa {
            modules_h: 2,
            modules_v: 3,
            per_module_h: 2,
            per_module_v: 2,
            separation_h: 3.0,
            separation_v: None,
        };
        let l = ula(g, 0.2);
        let sum: Vec3 = l.positions().iter().sum();
        assert!(sum.norm() < 1e-12);
        assert_eq!(l.num_elements(), 24);
    }

    #[test]
    fn rejects_bad_layouts() {
        assert!(ArrayLayout::along_y(ArrayGeometry::SparseUla { elements: 4, separation: 1.0 }, 0.1).is_err());
        assert!(ArrayLayout::along_y(
            ArrayGeometry::ModularUla { modules: 2, per_module: 4, module_separation: 3.0 },
            0.1
        )
        .is_err());
        let bad_axis = Vec3::new(0.0, 1.0 + 1e-9, 0.0);
        assert!(
            ArrayLayout::linear(ArrayGeometry::CollocatedUla { elements: 4 }, 0.1, Vec3::zeros(), bad_axis).is_err()
        );
        assert!(ArrayLayout::along_y(ArrayGeometry::CollocatedUla { elements: 0 }, 0.1).is_err());
        assert!(ArrayLayout::along_y(ArrayGeometry::CollocatedUla { elements: 4 }, -0.1).is_err());
    }

    #[test]
    fn default_boresight_faces_x_for_y_axis() {
        let l = ula(ArrayGeometry::CollocatedUla { elements: 3 }, 0.1);
        assert_eq!(l.boresight(), Vec3::x());
        let z_axis =
            ArrayLayout::linear(ArrayGeometry::CollocatedUla { elements: 3 }, 0.1, Vec3::zeros(), Vec3::z()).unwrap();
        assert_eq!(z_axis.boresight(), Vec3::x());
    }

    fn max_pairwise(p: &[Vec3]) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                best = best.max((p[i] - p[j]).norm());
            }
        }
        best
    }

    proptest! {
        #[test]
        fn aperture_is_max_pairwise_distance(
            n in 1usize..6, m in 1usize..6, extra in 0.0f64..10.0, lambda in 0.01f64..1.0,
            ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in -1.0f64..1.0,
        ) {
            let axis = Vec3::new(ax, ay, az);
            prop_assume!(axis.norm() > 1e-3);
            let g = ArrayGeometry::ModularUla { modules: n, per_module: m, module_separation: m as f64 + extra };
            let l = ArrayLayout::linear(g, lambda, Vec3::new(1.0, -2.0, 0.5), axis.normalize()).unwrap();
            let p = l.positions();
            prop_assert_eq!(p.len(), n * m);
            prop_assert!((max_pairwise(&p) - l.physical_dimension()).abs() < 1e-12);
        }

        #[test]
        fn degenerate_kinds_coincide(m in 1usize..40, lambda in 0.01f64..1.0) {
            let co = ArrayGeometry::CollocatedUla { elements: m }.axis_coordinates(lambda);
            let mo = ArrayGeometry::ModularUla { modules: 1, per_module: m, module_separation: m as f64 }
                .axis_coordinates(lambda);
            let sp = ArrayGeometry::SparseUla { elements: m, separation: 1.0 }.axis_coordinates(lambda);
            prop_assert_eq!(&co, &sp);
            prop_assert_eq!(&co, &mo);
        }

        #[test]
        fn contiguous_modules_equal_collocated(n in 1usize..8, m in 1usize..8) {
            let lambda = 0.125;
            let co = ula(ArrayGeometry::CollocatedUla { elements: n * m }, lambda);
            let mo = ula(ArrayGeometry::ModularUla { modules: n, per_module: m, module_separation: m as f64 }, lambda);
            for (a, b) in co.positions().iter().zip(mo.positions()) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
