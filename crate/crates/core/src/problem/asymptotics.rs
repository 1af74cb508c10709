//! Asymptotic bookkeeping for logarithms of coefficient profiles.
//!
//! Every closed coefficient family has `ln f(t) = const + ρ t + α ln t + β ln ln t + o(1)`
//! and every running integral `∫_0^t f` either converges or grows like one of
//! `e^{ρt} t^a ln^b t`, `t^a ln^b t`, `ln^b t`, `ln ln t`. Sums of such scales
//! are ordered by dominance, which is enough to decide every integrability and
//! limit condition the regime classifier needs without numerics.

use std::cmp::Ordering;

const EPS: f64 = 1e-12;

/// A growth scale `e^{ρt} t^a (ln t)^b`, or `ln ln t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    Growth { rho: f64, a: f64, b: f64 },
    LnLn,
}

impl Scale {
    pub const T: Scale = Scale::Growth { rho: 0.0, a: 1.0, b: 0.0 };
    pub const LN: Scale = Scale::Growth { rho: 0.0, a: 0.0, b: 1.0 };

    fn dominance(&self, other: &Scale) -> Ordering {
        match (self, other) {
            (Scale::LnLn, Scale::LnLn) => Ordering::Equal,
            (Scale::LnLn, _) => Ordering::Less,
            (_, Scale::LnLn) => Ordering::Greater,
            (Scale::Growth { rho: r1, a: a1, b: b1 }, Scale::Growth { rho: r2, a: a2, b: b2 }) => {
                cmp_eps(*r1, *r2).then(cmp_eps(*a1, *a2)).then(cmp_eps(*b1, *b2))
            }
        }
    }

    fn same(&self, other: &Scale) -> bool {
        self.dominance(other) == Ordering::Equal
    }
}

fn cmp_eps(x: f64, y: f64) -> Ordering {
    if (x - y).abs() <= EPS {
        Ordering::Equal
    } else if x < y {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// `ln f(t)` as `t → ∞`, up to an additive constant. `vanishing` marks `f ≡ 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LogAsymptotic {
    terms: Vec<(Scale, f64)>,
    vanishing: bool,
}

impl LogAsymptotic {
    pub fn zero_function() -> Self {
        Self { terms: Vec::new(), vanishing: true }
    }

    pub fn constant() -> Self {
        Self::default()
    }

    pub fn is_vanishing(&self) -> bool {
        self.vanishing
    }

    pub fn with_term(mut self, scale: Scale, coef: f64) -> Self {
        self.add_term(scale, coef);
        self
    }

    pub fn add_term(&mut self, scale: Scale, coef: f64) {
        if let Some(slot) = self.terms.iter_mut().find(|(s, _)| s.same(&scale)) {
            slot.1 += coef;
        } else {
            self.terms.push((scale, coef));
        }
    }

    /// `ln(f·g)` from `ln f` and `ln g`.
    pub fn plus(&self, other: &LogAsymptotic) -> LogAsymptotic {
        if self.vanishing || other.vanishing {
            return Self::zero_function();
        }
        let mut out = self.clone();
        for &(s, c) in &other.terms {
            out.add_term(s, c);
        }
        out
    }

    /// `ln(f^k)`; `k` must be positive when `f` may vanish.
    pub fn scaled(&self, k: f64) -> LogAsymptotic {
        if self.vanishing {
            return Self::zero_function();
        }
        LogAsymptotic {
            terms: self.terms.iter().map(|&(s, c)| (s, c * k)).collect(),
            vanishing: false,
        }
    }

    /// Dominant term with a non-negligible coefficient.
    pub fn dominant(&self) -> Option<(Scale, f64)> {
        self.terms
            .iter()
            .filter(|(_, c)| c.abs() > EPS)
            .copied()
            .max_by(|(s1, _), (s2, _)| s1.dominance(s2))
    }

    /// `f(t) → +∞`.
    pub fn tends_to_infinity(&self) -> bool {
        !self.vanishing && matches!(self.dominant(), Some((_, c)) if c > 0.0)
    }

    /// `sup_{t ≥ t_0} f(t) < ∞` for large `t_0`.
    pub fn bounded_at_infinity(&self) -> bool {
        self.vanishing || !matches!(self.dominant(), Some((_, c)) if c > 0.0)
    }

    /// `∫^∞ f(t) dt < ∞`.
    pub fn integrable(&self) -> bool {
        if self.vanishing {
            return true;
        }
        // Substituting s = ln t turns ∫ f dt into ∫ exp(ln f + s) ds.
        let mut shifted = self.clone();
        shifted.add_term(Scale::LN, 1.0);
        match shifted.dominant() {
            None => false,
            Some((Scale::LnLn, c)) => c < -1.0,
            Some((Scale::Growth { .. }, c)) => c < 0.0,
        }
    }
}

/// Growth class of a running integral `∫_0^t f` of a nonnegative function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegralGrowth {
    Converges,
    Diverges { scale: Scale, coef: f64 },
}
