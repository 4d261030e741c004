//! Parametric model of the coupling surface: mode dispersion entries,
//! engineered transmission coefficients, modulation envelope and the
//! position-dependent coupling coefficients they produce.
//!
//! All frequencies are angular (rad/s); positions are meters; wavevectors
//! are rad/m. Conversion from cycles/s happens exactly once, at config load.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cartesian 3-vector (meters or rad/m depending on context).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn minus(&self, other: &Vec3) -> Vec3 {
        Vec3([
            self.0[0] - other.0[0],
            self.0[1] - other.0[1],
            self.0[2] - other.0[2],
        ])
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }
}

/// One qubit: frequency, position, bare coupling and drive parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitSpec {
    pub index: usize,
    /// Qubit angular frequency (rad/s).
    pub frequency: f64,
    /// Position (m).
    pub position: Vec3,
    /// Bare qubit-surface coupling (rad/s, >= 0).
    pub bare_coupling: f64,
    /// Drive amplitude (rad/s); sets the dressing angle together with the
    /// drive detuning.
    pub drive_amplitude: f64,
    /// Drive detuning (rad/s); must be nonzero for dressed-basis operation.
    pub drive_detuning: f64,
    /// Relaxation time (s); `f64::INFINITY` disables decay.
    pub t1: f64,
}

/// One surface mode: a (frequency, wavevector) pair with loss and truncation.
///
/// No dispersion relation is modeled; each mode carries its own independent
/// pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSpec {
    pub index: usize,
    /// Mode angular frequency (rad/s).
    pub frequency: f64,
    /// Mode wavevector (rad/m).
    pub wavevector: Vec3,
    /// Photon loss rate (1/s, >= 0).
    pub loss_rate: f64,
    /// Fock truncation (>= 2).
    pub truncation: usize,
}

/// Engineered transmission amplitude `T(k·r)` as a function of position.
#[derive(Clone, Debug, PartialEq)]
pub enum TransmissionModel {
    /// Position-independent amplitude.
    Uniform { t0: C64 },
    /// `t0 * exp(-|r| / decay_length)`.
    Exponential { t0: C64, decay_length: f64 },
    /// `t0 * exp(-|r_perp|^2 / waist^2)` with `r_perp` transverse to `k`.
    Gaussian { t0: C64, waist: f64 },
    /// Linear interpolation of `(k·r, amplitude)` samples; the abscissa must
    /// be strictly increasing.
    Tabulated { samples: Vec<(f64, C64)> },
}

impl TransmissionModel {
    pub fn validate(&self) -> Result<()> {
        let check_t0 = |t0: &C64| -> Result<()> {
            if t0.norm() > 1.0 + 1e-12 {
                Err(Error::InvalidInput(format!(
                    "transmission amplitude |T0| = {} exceeds 1",
                    t0.norm()
                )))
            } else {
                Ok(())
            }
        };
        match self {
            TransmissionModel::Uniform { t0 } => check_t0(t0),
            TransmissionModel::Exponential { t0, decay_length } => {
                check_t0(t0)?;
                if *decay_length <= 0.0 {
                    return Err(Error::InvalidInput("decay_length must be > 0".into()));
                }
                Ok(())
            }
            TransmissionModel::Gaussian { t0, waist } => {
                check_t0(t0)?;
                if *waist <= 0.0 {
                    return Err(Error::InvalidInput("waist must be > 0".into()));
                }
                Ok(())
            }
            TransmissionModel::Tabulated { samples } => {
                if samples.len() < 2 {
                    return Err(Error::InvalidInput(
                        "tabulated transmission needs at least two samples".into(),
                    ));
                }
                for w in samples.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::InvalidInput(
                            "tabulated abscissas must be strictly increasing".into(),
                        ));
                    }
                }
                for (_, t) in samples {
                    check_t0(t)?;
                }
                Ok(())
            }
        }
    }
}

/// Evaluate the transmission amplitude for mode wavevector `k` at position `r`.
pub fn transmission_at(model: &TransmissionModel, k: &Vec3, r: &Vec3) -> Result<C64> {
    match model {
        TransmissionModel::Uniform { t0 } => Ok(*t0),
        TransmissionModel::Exponential { t0, decay_length } => {
            Ok(t0 * (-r.norm() / decay_length).exp())
        }
        TransmissionModel::Gaussian { t0, waist } => {
            let k_norm = k.norm();
            let r_perp = if k_norm > 0.0 {
                let along = k.scaled(r.dot(k) / (k_norm * k_norm));
                r.minus(&along)
            } else {
                *r
            };
            Ok(t0 * (-r_perp.dot(&r_perp) / (waist * waist)).exp())
        }
        TransmissionModel::Tabulated { samples } => {
            let x = k.dot(r);
            let first = samples.first().expect("validated non-empty");
            let last = samples.last().expect("validated non-empty");
            if x < first.0 || x > last.0 {
                return Err(Error::IndexOutOfRange(format!(
                    "tabulated argument {x} outside [{}, {}]",
                    first.0, last.0
                )));
            }
            let pos = samples.partition_point(|(a, _)| *a <= x);
            if pos == 0 {
                return Ok(first.1);
            }
            if pos == samples.len() {
                return Ok(last.1);
            }
            let (x0, t0) = samples[pos - 1];
            let (x1, t1) = samples[pos];
            let w = (x - x0) / (x1 - x0);
            Ok(t0 * (1.0 - w) + t1 * w)
        }
    }
}

/// Shape of the parametric modulation envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeShape {
    Square,
    RaisedCosine,
}

/// Dimensionless modulation envelope of the surface drive.
///
/// The envelope multiplies every coupling coefficient while the gate drive is
/// on; it is zero outside `[0, duration]`. `modulation_wavevector` is the
/// modulation's spatial frequency along z, entering the exchange-coupling
/// phase-matching factor.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulationEnvelope {
    pub shape: EnvelopeShape,
    /// Peak value, in [0, 1].
    pub amplitude: f64,
    /// Drive duration (s, > 0).
    pub duration: f64,
    /// Modulation wavevector along z (rad/m).
    pub modulation_wavevector: f64,
}

impl ModulationEnvelope {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.amplitude) {
            return Err(Error::InvalidInput(format!(
                "envelope amplitude {} outside [0, 1]",
                self.amplitude
            )));
        }
        if self.duration <= 0.0 {
            return Err(Error::InvalidInput("envelope duration must be > 0".into()));
        }
        Ok(())
    }

    /// Envelope value at time `t`; zero outside `[0, duration]`.
    pub fn value_at(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.duration {
            return 0.0;
        }
        match self.shape {
            EnvelopeShape::Square => self.amplitude,
            EnvelopeShape::RaisedCosine => {
                let x = std::f64::consts::PI * t / self.duration;
                self.amplitude * x.sin() * x.sin()
            }
        }
    }

    /// Peak (plateau) value, used when a static effective model is built.
    pub fn plateau(&self) -> f64 {
        self.amplitude
    }

    /// Same envelope with a different duration.
    pub fn with_duration(&self, duration: f64) -> ModulationEnvelope {
        ModulationEnvelope {
            duration,
            ..self.clone()
        }
    }

    /// Same envelope with the amplitude scaled by `factor` (clamped to 1).
    pub fn with_amplitude_scaled(&self, factor: f64) -> ModulationEnvelope {
        ModulationEnvelope {
            amplitude: (self.amplitude * factor).min(1.0),
            ..self.clone()
        }
    }
}

/// The full surface description: modes, transmission, envelope, drive
/// reference and spurious-mode isolation.
#[derive(Clone, Debug, PartialEq)]
pub struct MetasurfaceConfig {
    /// Surface modes; the FIRST entry is the gate's target mode, later
    /// entries are spectators whose coupling is suppressed by
    /// [`spurious_amplitude`] of `isolation_db`.
    pub modes: Vec<ModeSpec>,
    pub transmission: TransmissionModel,
    pub envelope: ModulationEnvelope,
    /// Drive reference angular frequency (rad/s); mode detunings are
    /// measured from it.
    pub drive_reference: f64,
    /// Spurious-mode suppression (dB, >= 0).
    pub isolation_db: f64,
}

impl MetasurfaceConfig {
    /// Mode detuning from the drive reference.
    pub fn mode_detuning(&self, mode: &ModeSpec) -> f64 {
        mode.frequency - self.drive_reference
    }
}

/// Position- and time-dependent coupling coefficient of one qubit to one
/// mode: `g0 * T(k·r) * e^{i k·r} * envelope(t)`.
///
/// The phase factor and any phase inside the complex transmission amplitude
/// are redundant parameters; only their product is physical.
pub fn coupling_coefficient(
    q: &QubitSpec,
    m: &ModeSpec,
    cfg: &MetasurfaceConfig,
    t: f64,
) -> Result<C64> {
    let envelope = cfg.envelope.value_at(t);
    if envelope == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let trans = transmission_at(&cfg.transmission, &m.wavevector, &q.position)?;
    let phase = C64::from_polar(1.0, m.wavevector.dot(&q.position));
    Ok(trans * phase * q.bare_coupling * envelope)
}

/// Dressing angle of a driven qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DressingAngle {
    /// `theta = atan2(drive_amplitude, drive_detuning)`, in (-pi, pi].
    pub theta: f64,
    /// Set when the detuning is zero with nonzero amplitude; the dressed
    /// frame is degenerate there and gate protocols refuse to proceed.
    pub singular: bool,
}

/// `tan(theta) = drive_amplitude / drive_detuning`.
pub fn dressing_angle(q: &QubitSpec) -> DressingAngle {
    let theta = q.drive_amplitude.atan2(q.drive_detuning);
    let singular = q.drive_detuning == 0.0 && q.drive_amplitude != 0.0;
    DressingAngle { theta, singular }
}

/// Decay length making the symmetric-placement coupling ratio
/// `J(separation)/J(0)` equal `target_ratio` under the exponential model.
pub fn calibrate_length(target_ratio: f64, separation: f64) -> Result<f64> {
    if !(target_ratio > 0.0 && target_ratio < 1.0) {
        return Err(Error::InvalidInput(format!(
            "target ratio {target_ratio} outside (0, 1)"
        )));
    }
    if separation <= 0.0 {
        return Err(Error::InvalidInput("separation must be > 0".into()));
    }
    Ok(separation / (-target_ratio.ln()))
}

/// Amplitude suppression factor for spurious modes: `10^(-dB/20)`.
pub fn spurious_amplitude(isolation_db: f64) -> f64 {
    10f64.powf(-isolation_db / 20.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TWO_PI: f64 = std::f64::consts::TAU;

    fn test_qubit(position: Vec3) -> QubitSpec {
        QubitSpec {
            index: 1,
            frequency: TWO_PI * 5.0e9,
            position,
            bare_coupling: TWO_PI * 28.3e6,
            drive_amplitude: 0.0,
            drive_detuning: TWO_PI * 1.0e9,
            t1: f64::INFINITY,
        }
    }

    fn test_mode(k: Vec3) -> ModeSpec {
        ModeSpec {
            index: 1,
            frequency: TWO_PI * 5.2e9,
            wavevector: k,
            loss_rate: 0.0,
            truncation: 6,
        }
    }

    fn square_cfg(transmission: TransmissionModel) -> MetasurfaceConfig {
        MetasurfaceConfig {
            modes: vec![test_mode(Vec3([1.0, 0.0, 0.0]))],
            transmission,
            envelope: ModulationEnvelope {
                shape: EnvelopeShape::Square,
                amplitude: 1.0,
                duration: 1e-6,
                modulation_wavevector: 0.0,
            },
            drive_reference: TWO_PI * 5.0e9,
            isolation_db: 23.0,
        }
    }

    #[test]
    fn uniform_transmission_is_constant() {
        let m = TransmissionModel::Uniform {
            t0: C64::new(0.9, 0.0),
        };
        let t = transmission_at(&m, &Vec3([0.0, 0.0, 1.0]), &Vec3([0.3, -2.0, 0.7])).unwrap();
        assert_eq!(t, C64::new(0.9, 0.0));
    }

    #[test]
    fn exponential_halves_at_l_ln2() {
        let l = 0.04;
        let m = TransmissionModel::Exponential {
            t0: C64::new(1.0, 0.0),
            decay_length: l,
        };
        let r = Vec3([0.0, 0.0, l * 2f64.ln()]);
        let t = transmission_at(&m, &Vec3::ZERO, &r).unwrap();
        assert!((t.re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exponential_calibrated_for_half_coupling_at_5cm() {
        // L = 0.05 / ln 2; each qubit at 2.5 cm then transmits exp(-0.025/L).
        let l = calibrate_length(0.5, 0.05).unwrap();
        assert!((l - 0.072134752044).abs() < 1e-9);
        let m = TransmissionModel::Exponential {
            t0: C64::new(1.0, 0.0),
            decay_length: l,
        };
        let t = transmission_at(&m, &Vec3::ZERO, &Vec3([0.0, 0.0, 0.025])).unwrap();
        assert!((t.re - (-0.025f64 / l).exp()).abs() < 1e-15);
        assert!((t.re - 0.70711).abs() < 1e-5);
    }

    #[test]
    fn gaussian_uses_transverse_component() {
        let m = TransmissionModel::Gaussian {
            t0: C64::new(1.0, 0.0),
            waist: 0.02,
        };
        let k = Vec3([7.0, 0.0, 0.0]);
        // Displacement purely along k: no transverse falloff.
        let along = transmission_at(&m, &k, &Vec3([0.5, 0.0, 0.0])).unwrap();
        assert!((along.re - 1.0).abs() < 1e-15);
        // Transverse displacement decays.
        let across = transmission_at(&m, &k, &Vec3([0.0, 0.0, 0.02])).unwrap();
        assert!((across.re - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn tabulated_interpolates_and_rejects_out_of_range() {
        let m = TransmissionModel::Tabulated {
            samples: vec![
                (0.0, C64::new(1.0, 0.0)),
                (1.0, C64::new(0.5, 0.0)),
                (2.0, C64::new(0.0, 0.5)),
            ],
        };
        m.validate().unwrap();
        let k = Vec3([1.0, 0.0, 0.0]);
        let mid = transmission_at(&m, &k, &Vec3([0.5, 0.0, 0.0])).unwrap();
        assert!((mid - C64::new(0.75, 0.0)).norm() < 1e-15);
        let hi = transmission_at(&m, &k, &Vec3([1.5, 0.0, 0.0])).unwrap();
        assert!((hi - C64::new(0.25, 0.25)).norm() < 1e-15);
        assert!(transmission_at(&m, &k, &Vec3([2.5, 0.0, 0.0])).is_err());
        assert!(transmission_at(&m, &k, &Vec3([-0.5, 0.0, 0.0])).is_err());
    }

    #[test]
    fn coupling_zero_transmission_is_zero() {
        let cfg = square_cfg(TransmissionModel::Uniform {
            t0: C64::new(0.0, 0.0),
        });
        let q = test_qubit(Vec3([0.0, 0.0, 0.01]));
        let g = coupling_coefficient(&q, &cfg.modes[0], &cfg, 0.5e-6).unwrap();
        assert_eq!(g, C64::new(0.0, 0.0));
    }

    #[test]
    fn coupling_bare_value_at_origin() {
        let cfg = square_cfg(TransmissionModel::Uniform {
            t0: C64::new(1.0, 0.0),
        });
        let q = test_qubit(Vec3::ZERO);
        let g = coupling_coefficient(&q, &cfg.modes[0], &cfg, 0.5e-6).unwrap();
        assert!((g - C64::new(TWO_PI * 28.3e6, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn coupling_quarter_wave_phase() {
        let cfg = square_cfg(TransmissionModel::Uniform {
            t0: C64::new(1.0, 0.0),
        });
        // k·r = pi/2 makes the coupling purely imaginary: i g0.
        let q = test_qubit(Vec3([std::f64::consts::FRAC_PI_2, 0.0, 0.0]));
        let g = coupling_coefficient(&q, &cfg.modes[0], &cfg, 0.5e-6).unwrap();
        assert!((g - C64::new(0.0, TWO_PI * 28.3e6)).norm() < 1e-3);
    }

    #[test]
    fn coupling_outside_envelope_is_zero() {
        let cfg = square_cfg(TransmissionModel::Uniform {
            t0: C64::new(1.0, 0.0),
        });
        let q = test_qubit(Vec3::ZERO);
        assert_eq!(
            coupling_coefficient(&q, &cfg.modes[0], &cfg, 2e-6).unwrap(),
            C64::new(0.0, 0.0)
        );
        assert_eq!(
            coupling_coefficient(&q, &cfg.modes[0], &cfg, -1e-9).unwrap(),
            C64::new(0.0, 0.0)
        );
    }

    #[test]
    fn dressing_angle_cases() {
        let mut q = test_qubit(Vec3::ZERO);
        q.drive_amplitude = 0.0;
        q.drive_detuning = TWO_PI * 1e6;
        assert_eq!(dressing_angle(&q).theta, 0.0);

        q.drive_amplitude = TWO_PI * 1e6;
        assert!((dressing_angle(&q).theta - std::f64::consts::FRAC_PI_4).abs() < 1e-15);

        q.drive_amplitude = TWO_PI * 10.0e6;
        q.drive_detuning = TWO_PI * 17.32e6;
        let d = dressing_angle(&q);
        assert!((d.theta - 0.52360).abs() < 2e-5);
        assert!(!d.singular);

        q.drive_detuning = 0.0;
        let d = dressing_angle(&q);
        assert!(d.singular);
        assert!((d.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn calibrate_length_cases() {
        assert!((calibrate_length(0.5, 0.05).unwrap() - 0.07213475204).abs() < 1e-9);
        let d = 0.031;
        assert!((calibrate_length((-1.0f64).exp(), d).unwrap() - d).abs() < 1e-12);
        assert!((calibrate_length(0.5, 0.10).unwrap() - 0.14426950408).abs() < 1e-9);
        assert!(calibrate_length(0.0, 0.05).is_err());
        assert!(calibrate_length(1.0, 0.05).is_err());
        assert!(calibrate_length(0.5, 0.0).is_err());
    }

    #[test]
    fn spurious_amplitude_cases() {
        assert_eq!(spurious_amplitude(0.0), 1.0);
        assert!((spurious_amplitude(20.0) - 0.1).abs() < 1e-15);
        assert!((spurious_amplitude(23.0) - 10f64.powf(-1.15)).abs() < 1e-15);
        assert!((spurious_amplitude(23.0) - 0.0708).abs() < 1e-4);
    }

    #[test]
    fn calibration_round_trips_coupling_ratio() {
        for &(ratio, sep) in &[(0.5, 0.05), (0.9, 0.01), (0.25, 0.08), (0.7, 0.033)] {
            let l = calibrate_length(ratio, sep).unwrap();
            let m = TransmissionModel::Exponential {
                t0: C64::new(1.0, 0.0),
                decay_length: l,
            };
            let half = Vec3([0.0, 0.0, sep / 2.0]);
            let t1 = transmission_at(&m, &Vec3::ZERO, &half).unwrap().norm();
            let t2 = transmission_at(&m, &Vec3::ZERO, &half.scaled(-1.0))
                .unwrap()
                .norm();
            let t0 = transmission_at(&m, &Vec3::ZERO, &Vec3::ZERO).unwrap().norm();
            assert!((t1 * t2 / (t0 * t0) - ratio).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn transmission_magnitude_at_most_one(
            variant in 0usize..3,
            mag in 0.0f64..1.0,
            phase in 0.0f64..TWO_PI,
            scale in 1e-3f64..1.0,
            rx in -0.2f64..0.2,
            ry in -0.2f64..0.2,
            rz in -0.2f64..0.2,
        ) {
            let t0 = C64::from_polar(mag, phase);
            let model = match variant {
                0 => TransmissionModel::Uniform { t0 },
                1 => TransmissionModel::Exponential { t0, decay_length: scale },
                _ => TransmissionModel::Gaussian { t0, waist: scale },
            };
            model.validate().unwrap();
            let k = Vec3([20.0, 0.0, 5.0]);
            let r = Vec3([rx, ry, rz]);
            let t = transmission_at(&model, &k, &r).unwrap();
            prop_assert!(t.norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn exponential_monotone_in_radius(
            l in 1e-3f64..0.5,
            r1 in 0.0f64..0.3,
            r2 in 0.0f64..0.3,
        ) {
            let model = TransmissionModel::Exponential {
                t0: C64::new(1.0, 0.0),
                decay_length: l,
            };
            let (near, far) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let tn = transmission_at(&model, &Vec3::ZERO, &Vec3([0.0, 0.0, near])).unwrap();
            let tf = transmission_at(&model, &Vec3::ZERO, &Vec3([0.0, 0.0, far])).unwrap();
            prop_assert!(tf.norm() <= tn.norm() + 1e-15);
        }

        #[test]
        fn dressing_quadrature_identity(
            omega in 0.0f64..1e9,
            delta in 1e3f64..1e9,
        ) {
            let mut q = test_qubit(Vec3::ZERO);
            q.drive_amplitude = omega;
            q.drive_detuning = delta;
            let theta = dressing_angle(&q).theta;
            let h = omega.hypot(delta);
            prop_assert!((theta.sin() * h - omega).abs() < 1e-12 * h.max(1.0));
            prop_assert!((theta.cos() * h - delta).abs() < 1e-12 * h.max(1.0));
        }
    }
}
