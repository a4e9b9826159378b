use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

/// A complex number held as `ln|z|` and `arg z`.
///
/// Frame coefficients start at `2^-n` and only ever get multiplied, so the
/// log-polar form turns every update into an addition and never underflows
/// for large `n·d`. Zero is `ln|z| = -inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogComplex {
    ln_abs: f64,
    arg: f64,
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex { ln_abs: f64::NEG_INFINITY, arg: 0.0 };
    pub const ONE: LogComplex = LogComplex { ln_abs: 0.0, arg: 0.0 };

    pub fn from_polar(ln_abs: f64, arg: f64) -> Self {
        if ln_abs == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        LogComplex { ln_abs, arg: wrap(arg) }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z.re == 0.0 && z.im == 0.0 {
            return Self::ZERO;
        }
        LogComplex { ln_abs: z.norm().ln(), arg: z.arg() }
    }

    pub fn to_complex(self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.ln_abs.exp(), self.arg)
    }

    pub fn is_zero(self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    pub fn ln_abs(self) -> f64 {
        self.ln_abs
    }

    pub fn arg(self) -> f64 {
        self.arg
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: LogComplex) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        LogComplex { ln_abs: self.ln_abs + other.ln_abs, arg: wrap(self.arg + other.arg) }
    }

    pub fn mul_complex(self, z: Complex64) -> Self {
        self.mul(Self::from_complex(z))
    }

    /// Multiplies by `e^{i phase}`.
    pub fn rotate(self, phase: f64) -> Self {
        if self.is_zero() {
            return self;
        }
        LogComplex { ln_abs: self.ln_abs, arg: wrap(self.arg + phase) }
    }

    /// Multiplies by the positive real `e^{ln_factor}`.
    pub fn scale_ln(self, ln_factor: f64) -> Self {
        Self::from_polar(self.ln_abs + ln_factor, self.arg)
    }

    /// Raises to a non-negative integer power.
    pub fn powu(self, k: u64) -> Self {
        if k == 0 {
            return Self::ONE;
        }
        if self.is_zero() {
            return self;
        }
        LogComplex { ln_abs: self.ln_abs * k as f64, arg: wrap(self.arg * k as f64) }
    }

    pub fn conj(self) -> Self {
        if self.is_zero() {
            return self;
        }
        LogComplex { ln_abs: self.ln_abs, arg: wrap(-self.arg) }
    }
}

fn wrap(arg: f64) -> f64 {
    if (-PI..=PI).contains(&arg) {
        arg
    } else {
        let r = arg.rem_euclid(TAU);
        if r > PI {
            r - TAU
        } else {
            r
        }
    }
}
