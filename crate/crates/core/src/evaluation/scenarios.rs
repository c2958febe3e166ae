//! Reference experiments used by the tests, the sweeps and the CLI.
//!
//! All scenarios use a 2 m link on the x axis, one 2405 MHz channel,
//! 31.25 Hz sampling and no noise; callers set `noise_std` (usually through
//! [`noise_std_for_snr`](super::noise_std_for_snr)) and `seed`.

use crate::geometry::{LinkGeometry, Point2, ReflectorMotion};
use crate::scalar::Scalar;
use crate::simulator::{default_channels, wavelength_of, Medium, Propagation, ScenarioConfig};

/// Breathing rate of every reference scenario: 12 bpm.
pub const BED_BREATH_HZ: f64 = 0.2;

fn template<T: Scalar>(p0: Point2<T>, amplitude: T, duration: T) -> ScenarioConfig<T> {
    ScenarioConfig {
        link: LinkGeometry {
            tx: Point2::new(-T::one(), T::zero()),
            rx: Point2::new(T::one(), T::zero()),
        },
        motion: ReflectorMotion {
            p0,
            direction: Point2::new(T::zero(), T::one()),
            amplitude,
            breath_freq: T::lit(BED_BREATH_HZ),
            velocity: Point2::default(),
        },
        medium: Medium {
            pathloss_exponent: T::lit(2.0),
            rel_permittivity: T::lit(1.5),
        },
        channels_hz: vec![T::lit(default_channels()[0])],
        fs: T::lit(31.25),
        duration,
        baseline_dbm: T::lit(-60.0),
        noise_std: T::zero(),
        quantization_step: T::zero(),
        drop_prob: T::zero(),
        seed: 0,
        propagation: Propagation::Exact,
    }
}

fn wavelength<T: Scalar>() -> T {
    wavelength_of(T::lit(default_channels()[0]))
}

/// Height above the link midpoint at which the excess path equals `delta`.
fn height_for_excess<T: Scalar>(delta: T) -> T {
    let half = (delta + T::lit(2.0)) / T::lit(2.0);
    (half * half - T::one()).sqrt()
}

/// A person lying across the link: chest 30 cm above the line of sight,
/// 1 cm breathing amplitude, 120 s. The static phase is close to an odd
/// quarter wavelength, so the fundamental dominates.
pub fn bed_like<T: Scalar>() -> ScenarioConfig<T> {
    template(Point2::new(T::zero(), T::lit(0.30)), T::lit(0.01), T::lit(120.0))
}

/// Static excess path of exactly 13 half wavelengths: odd harmonics are
/// suppressed and the breathing shows up at twice its rate. The 2 cm
/// amplitude keeps the second harmonic well above the filter's noise floor.
pub fn second_harmonic<T: Scalar>() -> ScenarioConfig<T> {
    let delta0 = T::lit(6.5) * wavelength::<T>();
    template(
        Point2::new(T::zero(), height_for_excess(delta0)),
        T::lit(0.02),
        T::lit(120.0),
    )
}

/// Large displacement (effective amplitude about 1.5 rad) at a generic
/// phase, so several harmonics carry energy. The reflector sits 2 m off
/// the link so the swing stays a fraction of a dB.
pub fn harmonic_rich<T: Scalar>() -> ScenarioConfig<T> {
    let y = T::lit(2.0);
    let grad = T::lit(2.0) * y / (T::one() + y * y).sqrt();
    let amplitude = T::lit(1.5) * wavelength::<T>() / (T::TAU() * grad);
    template(Point2::new(T::zero(), y), amplitude, T::lit(120.0))
}

/// Breathing while walking away from the link so the excess path grows at
/// `shift_hz` wavelengths per second at the start; 20 s long.
pub fn moving_reflector<T: Scalar>(shift_hz: T) -> ScenarioConfig<T> {
    let y = T::lit(2.0);
    let grad = T::lit(2.0) * y / (T::one() + y * y).sqrt();
    let mut s = template(Point2::new(T::zero(), y), T::lit(0.01), T::lit(20.0));
    s.motion.velocity = Point2::new(T::zero(), shift_hz * wavelength::<T>() / grad);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rss_model::ReflectionState;

    fn state(s: &ScenarioConfig<f64>) -> ReflectionState<f64> {
        let medium = s.medium.at_frequency(s.channels_hz[0]);
        ReflectionState::from_geometry(&s.link, &s.motion, &medium).unwrap()
    }

    #[test]
    fn scenarios_validate() {
        for s in [
            bed_like::<f64>(),
            second_harmonic(),
            harmonic_rich(),
            moving_reflector(0.3),
        ] {
            s.validate().unwrap();
        }
        bed_like::<f32>().validate().unwrap();
    }

    #[test]
    fn second_harmonic_phase_is_a_multiple_of_pi() {
        let st = state(&second_harmonic());
        assert!(st.psi.sin().abs() < 1e-9, "{}", st.psi);
    }

    #[test]
    fn bed_like_favours_the_fundamental() {
        let st = state(&bed_like());
        assert!(st.psi.sin().abs() > 0.9);
        assert!(st.a_tilde < 0.5);
    }

    #[test]
    fn harmonic_rich_amplitude() {
        assert!((state(&harmonic_rich()).a_tilde - 1.5).abs() < 1e-9);
    }

    #[test]
    fn moving_shift_rate() {
        let s = moving_reflector(0.3);
        let st = state(&s);
        assert!((st.vel_proj / st.wavelength - 0.3).abs() < 1e-12);
    }
}
