//! Sums of separable trigonometric terms `a T(t) X(x) Y(y)`, evaluated with
//! exact derivatives.

use std::f64::consts::PI;

/// One-dimensional standing wave `sin(k pi s / L)` or `cos(k pi s / L)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wave {
    Sin(u32),
    Cos(u32),
}

impl Wave {
    pub fn is_sine(self) -> bool {
        matches!(self, Wave::Sin(k) if k > 0)
    }

    fn wavenumber(self) -> u32 {
        match self {
            Wave::Sin(k) | Wave::Cos(k) => k,
        }
    }

    /// `n`-th derivative at `s` on an interval of length `length`.
    pub fn derivative(self, s: f64, length: f64, n: u8) -> f64 {
        let k = self.wavenumber();
        let w = k as f64 * PI / length;
        let (sn, cs) = (w * s).sin_cos();
        // Phase shift by n quarter turns: sin -> cos -> -sin -> -cos.
        let quarter = match self {
            Wave::Sin(_) => n % 4,
            Wave::Cos(_) => (n + 1) % 4,
        };
        let base = match quarter {
            0 => sn,
            1 => cs,
            2 => -sn,
            _ => -cs,
        };
        if n == 0 {
            base
        } else {
            w.powi(n as i32) * base
        }
    }
}

/// Time factor of a separable term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clock {
    Steady,
    Cos(f64),
    Sin(f64),
    /// `exp(rate * t)`.
    Exp(f64),
}

impl Clock {
    pub fn value(self, t: f64) -> f64 {
        match self {
            Clock::Steady => 1.0,
            Clock::Cos(w) => (w * t).cos(),
            Clock::Sin(w) => (w * t).sin(),
            Clock::Exp(r) => (r * t).exp(),
        }
    }

    pub fn rate(self, t: f64) -> f64 {
        match self {
            Clock::Steady => 0.0,
            Clock::Cos(w) => -w * (w * t).sin(),
            Clock::Sin(w) => w * (w * t).cos(),
            Clock::Exp(r) => r * (r * t).exp(),
        }
    }
}

/// Linear combination of waves along one axis.
pub type Profile = Vec<(f64, Wave)>;

fn profile_derivative(p: &Profile, s: f64, length: f64, n: u8) -> f64 {
    p.iter().map(|&(a, w)| a * w.derivative(s, length, n)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableTerm {
    pub coef: f64,
    pub clock: Clock,
    pub x: Profile,
    pub y: Profile,
}

impl SeparableTerm {
    pub fn new(coef: f64, clock: Clock, x: Profile, y: Profile) -> Self {
        Self { coef, clock, x, y }
    }

    /// Space-only term `coef`.
    pub fn constant(coef: f64) -> Self {
        Self::new(coef, Clock::Steady, vec![(1.0, Wave::Cos(0))], vec![(1.0, Wave::Cos(0))])
    }
}

/// Which partial derivative to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Partial {
    pub x: u8,
    pub y: u8,
    pub t: bool,
}

impl Partial {
    pub const VALUE: Partial = Partial { x: 0, y: 0, t: false };

    pub const fn space(x: u8, y: u8) -> Self {
        Partial { x, y, t: false }
    }

    pub const fn time() -> Self {
        Partial { x: 0, y: 0, t: true }
    }
}

/// Sum of separable terms on `[0, lx] x [0, ly]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableField {
    pub lx: f64,
    pub ly: f64,
    pub terms: Vec<SeparableTerm>,
}

impl SeparableField {
    pub fn new(lx: f64, ly: f64, terms: Vec<SeparableTerm>) -> Self {
        Self { lx, ly, terms }
    }

    pub fn zero(lx: f64, ly: f64) -> Self {
        Self::new(lx, ly, Vec::new())
    }

    pub fn value(&self, x: f64, y: f64, t: f64) -> f64 {
        self.derivative(x, y, t, Partial::VALUE)
    }

    pub fn derivative(&self, x: f64, y: f64, t: f64, d: Partial) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                let time = if d.t { term.clock.rate(t) } else { term.clock.value(t) };
                term.coef
                    * time
                    * profile_derivative(&term.x, x, self.lx, d.x)
                    * profile_derivative(&term.y, y, self.ly, d.y)
            })
            .sum()
    }

    pub fn laplacian(&self, x: f64, y: f64, t: f64) -> f64 {
        self.derivative(x, y, t, Partial::space(2, 0)) + self.derivative(x, y, t, Partial::space(0, 2))
    }

    pub fn gradient(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        (
            self.derivative(x, y, t, Partial::space(1, 0)),
            self.derivative(x, y, t, Partial::space(0, 1)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wave_derivatives_match_closed_forms() {
        let s = 0.37;
        let w = 3.0 * PI / 2.0;
        let sin = Wave::Sin(3);
        let cos = Wave::Cos(3);
        assert!((sin.derivative(s, 2.0, 1) - w * (w * s).cos()).abs() < 1e-13);
        assert!((sin.derivative(s, 2.0, 3) + w.powi(3) * (w * s).cos()).abs() < 1e-11);
        assert!((cos.derivative(s, 2.0, 1) + w * (w * s).sin()).abs() < 1e-13);
        assert!((cos.derivative(s, 2.0, 2) + w * w * (w * s).cos()).abs() < 1e-12);
        assert_eq!(Wave::Cos(0).derivative(s, 1.0, 0), 1.0);
        assert_eq!(Wave::Cos(0).derivative(s, 1.0, 2), 0.0);
    }

    #[test]
    fn clock_rates_are_derivatives() {
        for c in [Clock::Steady, Clock::Cos(1.5), Clock::Sin(0.7), Clock::Exp(-2.0)] {
            let (t, h) = (0.4, 1e-6);
            let fd = (c.value(t + h) - c.value(t - h)) / (2.0 * h);
            assert!((fd - c.rate(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn squared_sine_expands_to_cosines() {
        let f = SeparableField::new(
            1.0,
            1.0,
            vec![SeparableTerm::new(
                1.0,
                Clock::Steady,
                vec![(0.5, Wave::Cos(0)), (-0.5, Wave::Cos(2))],
                vec![(1.0, Wave::Cos(0))],
            )],
        );
        let x = 0.23;
        assert!((f.value(x, 0.9, 0.0) - (PI * x).sin().powi(2)).abs() < 1e-15);
        let d = 2.0 * PI * (PI * x).sin() * (PI * x).cos();
        assert!((f.gradient(x, 0.1, 0.0).0 - d).abs() < 1e-14);
    }
}
