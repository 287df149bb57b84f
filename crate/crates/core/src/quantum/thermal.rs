//! Thermal qubits: Boltzmann populations of a two-level system with its
//! energy on the excited basis vector.

use super::matrix::{ComplexMatrix, DensityMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// `h / k_B` in millikelvin per gigahertz (CODATA 2018 exact constants,
/// six significant figures).
pub const H_OVER_KB_MK_PER_GHZ: f64 = 47.9924;

/// Transition frequency, temperature and the basis the populations live in.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalQubitSpec {
    frequency_ghz: f64,
    temperature_mk: f64,
    ground: [C64; 2],
    excited: [C64; 2],
}

impl ThermalQubitSpec {
    pub fn new(frequency_ghz: f64, temperature_mk: f64, ground: [C64; 2], excited: [C64; 2]) -> Result<Self> {
        if !(frequency_ghz > 0.0 && frequency_ghz.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "transition frequency must be positive, got {frequency_ghz} GHz"
            )));
        }
        if temperature_mk.is_nan() || temperature_mk < 0.0 {
            return Err(Error::NegativeTemperature(temperature_mk));
        }
        if !temperature_mk.is_finite() {
            return Err(Error::InvalidArgument("temperature must be finite".into()));
        }
        for ket in [&ground, &excited] {
            let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("basis ket has norm^2 {norm}")));
            }
        }
        let overlap = ground[0].conj() * excited[0] + ground[1].conj() * excited[1];
        if overlap.norm() >= 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "ground and excited kets overlap by {:.3e}",
                overlap.norm()
            )));
        }
        Ok(Self {
            frequency_ghz,
            temperature_mk,
            ground,
            excited,
        })
    }

    /// Ground `|0>`, excited `|1>`.
    pub fn computational(frequency_ghz: f64, temperature_mk: f64) -> Result<Self> {
        Self::new(frequency_ghz, temperature_mk, [ONE, ZERO], [ZERO, ONE])
    }

    /// Uses `ground` as given and its orthogonal complement as the excited
    /// state.
    pub fn with_ground(frequency_ghz: f64, temperature_mk: f64, ground: [C64; 2]) -> Result<Self> {
        Self::new(frequency_ghz, temperature_mk, ground, orthogonal_complement(ground))
    }

    pub fn frequency_ghz(&self) -> f64 {
        self.frequency_ghz
    }

    pub fn temperature_mk(&self) -> f64 {
        self.temperature_mk
    }

    pub fn ground(&self) -> [C64; 2] {
        self.ground
    }

    pub fn excited(&self) -> [C64; 2] {
        self.excited
    }

    /// Same basis and frequency at another temperature.
    pub fn at_temperature(&self, temperature_mk: f64) -> Result<Self> {
        Self::new(self.frequency_ghz, temperature_mk, self.ground, self.excited)
    }

    /// `exp(-h f / k_B T)`, zero at `T = 0`.
    pub fn boltzmann_ratio(&self) -> f64 {
        if self.temperature_mk == 0.0 {
            0.0
        } else {
            (-H_OVER_KB_MK_PER_GHZ * self.frequency_ghz / self.temperature_mk).exp()
        }
    }

    /// `(ground, excited)` populations.
    pub fn populations(&self) -> (f64, f64) {
        let ratio = self.boltzmann_ratio();
        (1.0 / (1.0 + ratio), ratio / (1.0 + ratio))
    }

    /// Matrix whose columns are the ground and excited kets.
    pub fn basis(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(&[self.ground.to_vec(), self.excited.to_vec()]).expect("two columns of length two")
    }
}

/// `(-b*, a*)` for `(a, b)`.
pub fn orthogonal_complement(ket: [C64; 2]) -> [C64; 2] {
    [-ket[1].conj(), ket[0].conj()]
}

/// `q |ground><ground| + q_bar |excited><excited|`.
pub fn thermal_state(spec: &ThermalQubitSpec) -> DensityMatrix {
    let (q, q_bar) = spec.populations();
    let ground = ComplexMatrix::projector(&spec.ground);
    let excited = ComplexMatrix::projector(&spec.excited);
    let raw = ground.inner().scale(q) + excited.inner().scale(q_bar);
    DensityMatrix::from_raw(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::ops::purity;

    #[test]
    fn constant_matches_codata() {
        let h = 6.626_070_15e-34;
        let k_b = 1.380_649e-23;
        let exact = h / k_b * 1e9 * 1e3;
        assert!((exact - H_OVER_KB_MK_PER_GHZ).abs() < 5e-5);
    }

    #[test]
    fn zero_temperature_is_pure_ground() {
        let spec = ThermalQubitSpec::computational(5.0, 0.0).unwrap();
        assert_eq!(spec.populations(), (1.0, 0.0));
        let rho = thermal_state(&spec);
        assert_eq!(rho.diagonal(), vec![1.0, 0.0]);
    }

    #[test]
    fn transmon_populations() {
        // q = 1 / (1 + exp(-47.9924 * 5 / T)), evaluated independently.
        let (q, _) = ThermalQubitSpec::computational(5.0, 100.0).unwrap().populations();
        assert!((q - 0.916_798_322_016_281_8).abs() < 1e-14);
        let (_, q_bar) = ThermalQubitSpec::computational(5.0, 15.0).unwrap().populations();
        assert!((q_bar - 1.128_206_125_180_604_8e-7).abs() < 1e-20);
        let rho = thermal_state(&ThermalQubitSpec::computational(5.0, 100.0).unwrap());
        assert!((purity(&rho) - 0.847_441_682_471_176_1).abs() < 1e-13);
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(
            ThermalQubitSpec::computational(5.0, -1.0),
            Err(Error::NegativeTemperature(_))
        ));
        assert!(ThermalQubitSpec::computational(0.0, 10.0).is_err());
        assert!(ThermalQubitSpec::new(5.0, 10.0, [ONE, ZERO], [ONE, ZERO]).is_err());
    }

    #[test]
    fn energy_sits_on_excited_vector() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let ground = [C64::new(h, 0.0), C64::new(0.0, h)];
        let spec = ThermalQubitSpec::with_ground(5.0, 80.0, ground).unwrap();
        let rho = thermal_state(&spec);
        let (q, q_bar) = spec.populations();
        assert!((rho.population(&spec.ground()) - q).abs() < 1e-14);
        assert!((rho.population(&spec.excited()) - q_bar).abs() < 1e-14);
    }
}
