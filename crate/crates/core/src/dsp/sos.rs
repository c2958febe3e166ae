//! Cascaded biquad filter in transposed direct form II.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Second-order sections `[b0, b1, b2, a0, a1, a2]` with `a0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sos<T> {
    pub sections: Vec<[T; 6]>,
}

impl<T: Scalar> Sos<T> {
    pub fn new(sections: Vec<[T; 6]>) -> Self {
        let sections = sections
            .into_iter()
            .map(|s| {
                let a0 = s[3];
                [s[0] / a0, s[1] / a0, s[2] / a0, T::one(), s[4] / a0, s[5] / a0]
            })
            .collect();
        Self { sections }
    }

    pub fn order(&self) -> usize {
        self.sections
            .iter()
            .map(|s| if s[5] != T::zero() { 2 } else if s[4] != T::zero() { 1 } else { 0 })
            .sum()
    }

    /// Complex frequency response at `freq` (Hz).
    pub fn response(&self, freq: T, fs: T) -> Complex<T> {
        let w = T::TAU() * freq / fs;
        let z1 = Complex::new(w.cos(), -w.sin());
        let z2 = z1 * z1;
        self.sections.iter().fold(Complex::new(T::one(), T::zero()), |acc, s| {
            let num = z1 * s[1] + z2 * s[2] + s[0];
            let den = z1 * s[4] + z2 * s[5] + s[3];
            acc * num / den
        })
    }

    pub fn magnitude_db(&self, freq: T, fs: T) -> T {
        T::lit(20.0) * self.response(freq, fs).norm().log10()
    }

    /// Multiplies the overall gain by `g`.
    pub fn scale_gain(&mut self, g: T) {
        if let Some(first) = self.sections.first_mut() {
            for c in &mut first[..3] {
                *c *= g;
            }
        }
    }

    pub fn cast<U: Scalar>(&self) -> Sos<U> {
        Sos {
            sections: self
                .sections
                .iter()
                .map(|s| s.map(|c| U::lit(c.as_f64())))
                .collect(),
        }
    }

    /// Causal filtering. The state starts in the steady state for a constant
    /// input equal to `x[0]`, so a constant sequence passes unchanged and the
    /// map stays linear in `x`.
    pub fn filter(&self, x: &[T]) -> Vec<T> {
        let mut state = self.steady_state(x.first().copied().unwrap_or_else(T::zero));
        x.iter()
            .map(|&v| {
                let mut u = v;
                for (s, st) in self.sections.iter().zip(state.iter_mut()) {
                    let y = s[0] * u + st[0];
                    st[0] = s[1] * u - s[4] * y + st[1];
                    st[1] = s[2] * u - s[5] * y;
                    u = y;
                }
                u
            })
            .collect()
    }

    fn steady_state(&self, level: T) -> Vec<[T; 2]> {
        let mut input = level;
        self.sections
            .iter()
            .map(|s| {
                let gain = (s[0] + s[1] + s[2]) / (s[3] + s[4] + s[5]);
                let out = gain * input;
                let st = [out - s[0] * input, s[2] * input - s[5] * out];
                input = out;
                st
            })
            .collect()
    }
}
