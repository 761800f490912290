//! Measurement geometry of the five-context pentagon.
//!
//! Each observable A_i is represented by the unit vector
//! v_i = c_i (cos(4πi/5), sin(4πi/5), √cos(π/5)) with c_i² = 1/(1+cos(π/5)).
//! Adjacent vectors are orthogonal, which is what makes {A_i, A_{i+1}} a
//! jointly measurable context. The optical implementation splits the input
//! mode three ways; the intensity fractions on the two signal modes and the
//! ancilla mode are
//!
//!   f_i = f_{i+1} = 1/√5,   f_anc = 1 − 2/√5,
//!
//! identical for every context by pentagon symmetry. The square of the third
//! vector component equals 1/√5 as well, which ties the projective picture to
//! the intensity picture: a single photon fires the A_i detector with
//! probability f_i.
//!
//! Output phases never matter downstream (threshold detectors see only
//! per-mode intensities), so a context is fully described by its fractions
//! and by which physical detector plays which role.

use crate::error::{Error, Result};

/// Ideal signal fraction 1/√5.
pub const SIGNAL_FRACTION: f64 = 0.447_213_595_499_957_9;

/// Ideal ancilla fraction 1 − 2/√5.
pub const ANCILLA_FRACTION: f64 = 1.0 - 2.0 * SIGNAL_FRACTION;

/// Tolerance for recognizing the ideal geometry.
pub const GEOMETRY_TOL: f64 = 1e-12;

/// Physical detector label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    D1,
    D2,
    D3,
}

impl Detector {
    /// Zero-based index, handy for array-backed counters.
    pub fn index(self) -> usize {
        match self {
            Detector::D1 => 0,
            Detector::D2 => 1,
            Detector::D3 => 2,
        }
    }
}

impl std::fmt::Display for Detector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Detector::D1 => write!(f, "D1"),
            Detector::D2 => write!(f, "D2"),
            Detector::D3 => write!(f, "D3"),
        }
    }
}

/// Which physical detector registers each role of a context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorRoles {
    /// Detector whose click means A_i = −1.
    pub a_i: Detector,
    /// Detector whose click means A_{i+1} = −1.
    pub a_next: Detector,
    /// Ancilla detector (click means a_anc = 0).
    pub anc: Detector,
}

impl DetectorRoles {
    /// True when the three roles use three distinct detectors.
    pub fn is_bijective(&self) -> bool {
        self.a_i != self.a_next && self.a_i != self.anc && self.a_next != self.anc
    }
}

/// One measurement context {A_i, A_{i+1}} with its mode-split fractions and
/// detector wiring. Immutable value object; build with [`context`] or
/// [`MeasurementContext::with_fractions`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementContext {
    /// Context index i in 1..=5; the pair is {A_i, A_{i+1 mod 5}}.
    pub index: usize,
    /// Intensity fractions (f_i, f_{i+1}, f_anc); sum to 1.
    pub split_fractions: [f64; 3],
    /// Physical wiring of the three roles.
    pub detector_roles: DetectorRoles,
}

/// Detector wiring per context, matching the experiment's registration table:
/// context i lists (detector for A_i, detector for A_{i+1}, ancilla).
const ROLES: [DetectorRoles; 5] = [
    DetectorRoles {
        a_i: Detector::D2,
        a_next: Detector::D3,
        anc: Detector::D1,
    },
    DetectorRoles {
        a_i: Detector::D3,
        a_next: Detector::D1,
        anc: Detector::D2,
    },
    DetectorRoles {
        a_i: Detector::D1,
        a_next: Detector::D2,
        anc: Detector::D3,
    },
    DetectorRoles {
        a_i: Detector::D2,
        a_next: Detector::D3,
        anc: Detector::D1,
    },
    DetectorRoles {
        a_i: Detector::D3,
        a_next: Detector::D2,
        anc: Detector::D1,
    },
];

fn check_index(i: usize) -> Result<()> {
    if (1..=5).contains(&i) {
        Ok(())
    } else {
        Err(Error::ContextIndex(i))
    }
}

/// Measurement vector v_i for i in 1..=5.
pub fn measurement_vector(i: usize) -> Result<[f64; 3]> {
    check_index(i)?;
    let phi = 4.0 * std::f64::consts::PI * i as f64 / 5.0;
    let z = (std::f64::consts::PI / 5.0).cos();
    let c = 1.0 / (1.0 + z).sqrt();
    Ok([c * phi.cos(), c * phi.sin(), c * z.sqrt()])
}

/// Ideal context for index i.
pub fn context(i: usize) -> Result<MeasurementContext> {
    check_index(i)?;
    Ok(MeasurementContext {
        index: i,
        split_fractions: [SIGNAL_FRACTION, SIGNAL_FRACTION, ANCILLA_FRACTION],
        detector_roles: ROLES[i - 1],
    })
}

/// All five ideal contexts in order.
pub fn all_contexts() -> [MeasurementContext; 5] {
    [1, 2, 3, 4, 5].map(|i| context(i).expect("index in range"))
}

impl MeasurementContext {
    /// Context with explicit split fractions, for studying imperfect
    /// alignment. Fractions must be nonnegative and sum to 1 within
    /// [`GEOMETRY_TOL`]; the detector wiring is the standard one for `i`.
    pub fn with_fractions(i: usize, fractions: [f64; 3]) -> Result<Self> {
        check_index(i)?;
        for f in fractions {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Range {
                    name: "split fraction",
                    value: f,
                    min: 0.0,
                    max: 1.0,
                });
            }
        }
        let total: f64 = fractions.iter().sum();
        if (total - 1.0).abs() > GEOMETRY_TOL {
            return Err(Error::InvalidState(format!(
                "split fractions sum to {total}, expected 1"
            )));
        }
        Ok(MeasurementContext {
            index: i,
            split_fractions: fractions,
            detector_roles: ROLES[i - 1],
        })
    }

    /// True when the fractions are the ideal pentagon values within
    /// [`GEOMETRY_TOL`].
    pub fn is_ideal(&self) -> bool {
        (self.split_fractions[0] - SIGNAL_FRACTION).abs() <= GEOMETRY_TOL
            && (self.split_fractions[1] - SIGNAL_FRACTION).abs() <= GEOMETRY_TOL
            && (self.split_fractions[2] - ANCILLA_FRACTION).abs() <= GEOMETRY_TOL
    }

    /// Detector for a given counter slot: 0 → A_i, 1 → A_{i+1}, 2 → ancilla.
    pub fn detector_for_role(&self, role: usize) -> Detector {
        match role {
            0 => self.detector_roles.a_i,
            1 => self.detector_roles.a_next,
            2 => self.detector_roles.anc,
            _ => panic!("role index {role} out of range"),
        }
    }
}
