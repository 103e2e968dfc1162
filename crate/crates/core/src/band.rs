//! Translation-invariant band data `H(k)` and `P(k)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;


use crate::linalg::{I, ZERO};
use crate::{Error, Result, C64};

/// Tolerance for the coefficient symmetry checks.
pub const COEFF_TOL: f64 = 1e-12;
/// Lowest value `P(k)` may take on the validation grid.
pub const P_NONNEG_TOL: f64 = 1e-12;
/// Size of the grid on which `P(k) >= 0` is checked.
pub const VALIDATION_GRID: usize = 1024;

/// Fourier representation of a one-band dissipative lattice:
/// `H(k) = Σ h_m e^{ikm}` and `P(k) = Σ p_m e^{ikm}`.
///
/// Construction enforces Hermiticity and time-reversal symmetry of `H`
/// (real, even coefficients), realness of `P(k)` and `P(k) >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandModel {
    h: BTreeMap<i64, C64>,
    p: BTreeMap<i64, C64>,
    label: String,
}

impl BandModel {
    pub fn new(
        h: BTreeMap<i64, C64>,
        p: BTreeMap<i64, C64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        check_conjugate_pairs("h_coeffs", &h)?;
        for (&m, &c) in &h {
            if c.im.abs() > COEFF_TOL {
                return Err(Error::param(
                    "h_coeffs",
                    format!("h_{m} = {c} is not real (time-reversal symmetry)"),
                ));
            }
        }
        check_conjugate_pairs("p_coeffs", &p)?;
        let model = BandModel {
            h,
            p,
            label: label.into(),
        };
        for j in 0..VALIDATION_GRID {
            let k = grid_point(j, VALIDATION_GRID);
            let pk = model.p_at(k).re;
            if pk < -P_NONNEG_TOL {
                return Err(Error::param(
                    "p_coeffs",
                    format!("P(k) = {pk:e} < 0 at k = {k}"),
                ));
            }
        }
        Ok(model)
    }

    /// `H(k) = 2J cos k + 2T cos 2k`, `P(k) = R [1 + cos(k + φ)]`.
    pub fn cosine(j: f64, t: f64, r: f64, phi: f64) -> Result<Self> {
        if !(r >= 0.0) {
            return Err(Error::param("R", format!("R = {r} must be >= 0")));
        }
        let mut h = BTreeMap::new();
        for (m, c) in [(1, j), (2, t)] {
            if c != 0.0 {
                h.insert(m, C64::new(c, 0.0));
                h.insert(-m, C64::new(c, 0.0));
            }
        }
        let mut p = BTreeMap::new();
        if r != 0.0 {
            p.insert(0, C64::new(r, 0.0));
            p.insert(1, C64::from_polar(r / 2.0, phi));
            p.insert(-1, C64::from_polar(r / 2.0, -phi));
        }
        Self::new(
            h,
            p,
            format!("cosine(J={j}, T={t}, R={r}, phi={phi})"),
        )
    }

    pub fn h_coeffs(&self) -> &BTreeMap<i64, C64> {
        &self.h
    }

    pub fn p_coeffs(&self) -> &BTreeMap<i64, C64> {
        &self.p
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn h_at(&self, k: f64) -> C64 {
        fourier_sum(&self.h, k)
    }

    pub fn p_at(&self, k: f64) -> C64 {
        fourier_sum(&self.p, k)
    }

    /// `(H(k), P(k))`.
    pub fn eval(&self, k: f64) -> (C64, C64) {
        (self.h_at(k), self.p_at(k))
    }

    /// Group velocity `H'(k)`.
    pub fn group_velocity(&self, k: f64) -> f64 {
        self.h
            .iter()
            .map(|(&m, &c)| c * I * (m as f64) * C64::from_polar(1.0, k * m as f64))
            .sum::<C64>()
            .re
    }

    /// Upper bound on `|H'(k)|`.
    pub fn max_group_velocity(&self) -> f64 {
        self.h.iter().map(|(&m, c)| (m.unsigned_abs() as f64) * c.norm()).sum()
    }

    /// `H(k) - (i/2) P(k)^2`.
    pub fn effective_energy(&self, k: f64) -> C64 {
        let (h, p) = self.eval(k);
        h - I * 0.5 * p * p
    }

    /// Spectrum of the effective Hamiltonian on `k_j = -π + 2πj/n_k`.
    pub fn pbc_spectrum(&self, n_k: usize) -> Result<Vec<(f64, C64)>> {
        if n_k < 2 {
            return Err(Error::param("n_k", "at least two grid points required"));
        }
        Ok((0..n_k)
            .map(|j| {
                let k = grid_point(j, n_k);
                (k, self.effective_energy(k))
            })
            .collect())
    }

    /// `P(-k) = P(k)`, i.e. `p_m = p_{-m}` for every range.
    pub fn is_p_symmetric(&self) -> bool {
        self.p.iter().all(|(&m, &c)| {
            let partner = self.p.get(&-m).copied().unwrap_or(ZERO);
            (c - partner).norm() < COEFF_TOL
        })
    }

    /// Largest `|m|` over both coefficient maps.
    pub fn max_range(&self) -> u64 {
        self.h
            .keys()
            .chain(self.p.keys())
            .map(|m| m.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// Coefficients of `P(k)^2` (self-convolution of `p_m`).
    pub fn p_squared_coeffs(&self) -> BTreeMap<i64, C64> {
        let mut out = BTreeMap::new();
        for (&a, &ca) in &self.p {
            for (&b, &cb) in &self.p {
                *out.entry(a + b).or_insert(ZERO) += ca * cb;
            }
        }
        out
    }
}

/// `k_j = -π + 2πj/n`.
pub fn grid_point(j: usize, n: usize) -> f64 {
    -PI + 2.0 * PI * (j as f64) / (n as f64)
}

fn fourier_sum(coeffs: &BTreeMap<i64, C64>, k: f64) -> C64 {
    coeffs
        .iter()
        .map(|(&m, &c)| c * C64::from_polar(1.0, k * m as f64))
        .sum()
}

fn check_conjugate_pairs(name: &'static str, coeffs: &BTreeMap<i64, C64>) -> Result<()> {
    for (&m, &c) in coeffs {
        let partner = coeffs.get(&-m).copied().unwrap_or(ZERO);
        if (partner - c.conj()).norm() > COEFF_TOL {
            return Err(Error::param(
                name,
                format!("coefficient at {} must equal conj of coefficient at {m}", -m),
            ));
        }
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::param(name, "non-finite coefficient".to_string()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;
    use core::f64::consts::FRAC_PI_4;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn cosine_model_values() {
        let m = BandModel::cosine(1.0, 0.0, 1.0, 0.0).unwrap();
        assert!(close(m.p_at(0.0), C64::new(2.0, 0.0), 1e-15));
        let m = BandModel::cosine(1.0, 0.0, 1.0, FRAC_PI_2).unwrap();
        assert!(close(m.p_at(0.0), C64::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn cosine_model_reproduces_formula_on_grid() {
        let (j, t, r, phi) = (1.0, 0.3, 1.0, FRAC_PI_4);
        let m = BandModel::cosine(j, t, r, phi).unwrap();
        assert!(close(m.p_coeffs()[&1], C64::from_polar(0.5, FRAC_PI_4), 1e-15));
        assert!(close(m.p_coeffs()[&-1], C64::from_polar(0.5, -FRAC_PI_4), 1e-15));
        let mut worst = 0.0f64;
        for jj in 0..64 {
            let k = grid_point(jj, 64);
            let p_ref = r * (1.0 + (k + phi).cos());
            let h_ref = 2.0 * j * k.cos() + 2.0 * t * (2.0 * k).cos();
            let (h, p) = m.eval(k);
            worst = worst.max((p - p_ref).norm()).max((h - h_ref).norm());
        }
        assert!(worst < 1e-14, "max error {worst}");
    }

    #[test]
    fn negative_r_rejected() {
        assert!(matches!(
            BandModel::cosine(1.0, 0.0, -0.1, 0.0),
            Err(Error::InvalidParameter { name: "R", .. })
        ));
    }

    #[test]
    fn dispersion_examples() {
        let m = BandModel::cosine(1.0, 0.0, 1.0, 0.0).unwrap();
        let (h, p) = m.eval(PI);
        assert!(close(h, C64::new(-2.0, 0.0), 1e-14) && close(p, ZERO, 1e-15));
        let (h, p) = m.eval(0.0);
        assert!(close(h, C64::new(2.0, 0.0), 1e-14) && close(p, C64::new(2.0, 0.0), 1e-14));
        let m = BandModel::cosine(1.0, 0.5, 1.0, 0.0).unwrap();
        assert!(close(m.h_at(FRAC_PI_2), C64::new(-1.0, 0.0), 1e-14));
    }

    #[test]
    fn pbc_spectrum_examples() {
        let m = BandModel::cosine(1.0, 0.0, 1.0, 0.0).unwrap();
        assert!(close(m.effective_energy(0.0), C64::new(2.0, -2.0), 1e-14));
        let m = BandModel::cosine(1.0, 0.0, 1.0, FRAC_PI_2).unwrap();
        assert!(close(m.effective_energy(0.0), C64::new(2.0, -0.5), 1e-14));
        // P vanishes at k = π/2 for φ = π/2.
        assert!(m.effective_energy(FRAC_PI_2).im.abs() < 1e-15);
        let spec = m.pbc_spectrum(256).unwrap();
        assert_eq!(spec.len(), 256);
        assert!((spec[0].0 + PI).abs() < 1e-15);
        assert!(spec.iter().all(|(_, e)| e.im <= 1e-15));
        assert!(m.pbc_spectrum(1).is_err());
    }

    #[test]
    fn p_symmetry() {
        assert!(BandModel::cosine(1.0, 0.0, 1.0, 0.0).unwrap().is_p_symmetric());
        assert!(!BandModel::cosine(1.0, 0.0, 1.0, FRAC_PI_4).unwrap().is_p_symmetric());
        assert!(BandModel::cosine(1.0, 0.0, 1.0, PI).unwrap().is_p_symmetric());
        let mut p = BTreeMap::new();
        p.insert(0, C64::new(0.7, 0.0));
        let m = BandModel::new(BTreeMap::new(), p, "flat").unwrap();
        assert!(m.is_p_symmetric());
    }

    #[test]
    fn invariant_violations_rejected() {
        let mut h = BTreeMap::new();
        h.insert(1, C64::new(1.0, 0.0));
        assert!(BandModel::new(h.clone(), BTreeMap::new(), "x").is_err());
        h.insert(-1, C64::new(1.0, 0.0));
        assert!(BandModel::new(h.clone(), BTreeMap::new(), "x").is_ok());
        // Hermitian but complex hopping breaks time reversal.
        let mut hc = BTreeMap::new();
        hc.insert(1, C64::new(1.0, 0.5));
        hc.insert(-1, C64::new(1.0, -0.5));
        assert!(BandModel::new(hc, BTreeMap::new(), "x").is_err());
        // P(k) = cos k takes negative values.
        let mut p = BTreeMap::new();
        p.insert(1, C64::new(0.5, 0.0));
        p.insert(-1, C64::new(0.5, 0.0));
        assert!(BandModel::new(h, p, "x").is_err());
    }

    #[test]
    fn group_velocity_matches_finite_difference() {
        let m = BandModel::cosine(1.0, 0.4, 1.0, 0.3).unwrap();
        for &k in &[-2.0, -0.3, 0.9, 2.5] {
            let d = 1e-6;
            let fd = (m.h_at(k + d).re - m.h_at(k - d).re) / (2.0 * d);
            assert!((m.group_velocity(k) - fd).abs() < 1e-8);
        }
        assert!((m.max_group_velocity() - 3.6).abs() < 1e-14);
    }

    #[test]
    fn p_squared_coefficients() {
        let m = BandModel::cosine(1.0, 0.0, 1.0, 0.7).unwrap();
        let q = m.p_squared_coeffs();
        for jj in 0..32 {
            let k = grid_point(jj, 32);
            let qk: C64 = q.iter().map(|(&mm, &c)| c * C64::from_polar(1.0, k * mm as f64)).sum();
            let p = m.p_at(k);
            assert!(close(qk, p * p, 1e-13));
        }
    }
}
