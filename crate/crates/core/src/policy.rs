//! Interface mobility law alpha(I), the threshold-directed sign rule,
//! and lockdown (Robin -> Neumann) bookkeeping.

use crate::model::{AlphaForm, LockdownSignal, Region, SimulationConfig};
use std::fmt;

/// Whether the interface currently admits flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterfaceMode {
    RobinOpen,
    NeumannClosed,
}

impl fmt::Display for InterfaceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterfaceMode::RobinOpen => write!(f, "robin_open"),
            InterfaceMode::NeumannClosed => write!(f, "neumann_closed"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativeInfected(pub f64);

impl fmt::Display for NegativeInfected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "alpha evaluated at negative infected density {}", self.0)
    }
}

impl std::error::Error for NegativeInfected {}

/// Interface mobility policy: functional form of alpha, per-region
/// direction thresholds, and the lockdown trigger.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityPolicy {
    pub alpha_form: AlphaForm,
    /// Direction thresholds (I_th of region 1, I_th of region 2).
    pub i_threshold: [f64; 2],
    /// Infected level at which the interface closes.
    pub lockdown_trigger: f64,
    /// alpha values at or below this count as exact zero.
    pub alpha_floor: f64,
    /// Days the interface stays closed after the trigger clears.
    pub reopen_delay: f64,
    pub lockdown_signal: LockdownSignal,
}

impl MobilityPolicy {
    pub fn from_config(cfg: &SimulationConfig) -> Self {
        MobilityPolicy {
            alpha_form: cfg.alpha_form,
            i_threshold: [cfg.params.i_threshold_1, cfg.params.i_threshold_2],
            lockdown_trigger: cfg.lockdown_trigger,
            alpha_floor: cfg.alpha_floor,
            reopen_delay: cfg.reopen_delay,
            lockdown_signal: cfg.lockdown_signal,
        }
    }

    fn alpha_raw(&self, i_value: f64) -> f64 {
        match self.alpha_form {
            AlphaForm::RationalDecay => 1.0 / (1.0 + i_value * i_value),
            AlphaForm::ExponentialDecay => (-i_value).exp(),
        }
    }

    /// alpha(I), floored to exact zero below `alpha_floor`.
    pub fn alpha_eval(&self, i_value: f64) -> Result<f64, NegativeInfected> {
        if i_value < 0.0 {
            return Err(NegativeInfected(i_value));
        }
        let a = self.alpha_raw(i_value);
        Ok(if a <= self.alpha_floor { 0.0 } else { a })
    }

    /// Signed mobility rate of the interface condition of region `i`:
    /// `+alpha(I)` when the local infected level has reached the other
    /// region's threshold, `-alpha(I)` below it.
    pub fn signed_alpha(
        &self,
        i_local: f64,
        threshold_region: Region,
    ) -> Result<f64, NegativeInfected> {
        let a = self.alpha_eval(i_local)?;
        if i_local >= self.i_threshold[threshold_region.idx()] {
            Ok(a)
        } else {
            Ok(-a)
        }
    }
}

/// Accumulated lockdown bookkeeping, owned by the time loop.
#[derive(Debug, Clone, PartialEq)]
pub struct LockdownLedger {
    pub mode: InterfaceMode,
    pub lockdown_days: f64,
    /// Last time the raw trigger condition held.
    last_signal_time: Option<f64>,
}

impl Default for LockdownLedger {
    fn default() -> Self {
        LockdownLedger {
            mode: InterfaceMode::RobinOpen,
            lockdown_days: 0.0,
            last_signal_time: None,
        }
    }
}

impl LockdownLedger {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Decides the interface mode for the step starting at `t` from the two
/// interface infected signals, and accrues `dt` of lockdown time when
/// closed. Closure holds while the signal is at or above the trigger
/// (or alpha has decayed to the floor), and for `reopen_delay` days
/// after the condition last held.
pub fn lockdown_update(
    policy: &MobilityPolicy,
    i_signal_1: f64,
    i_signal_2: f64,
    t: f64,
    dt: f64,
    ledger: &mut LockdownLedger,
) -> InterfaceMode {
    let level = i_signal_1.max(i_signal_2);
    let by_trigger = level >= policy.lockdown_trigger;
    let by_decay = policy.alpha_raw(level.max(0.0)) <= policy.alpha_floor;
    if by_trigger || by_decay {
        ledger.last_signal_time = Some(t);
    }
    let within_delay = match ledger.last_signal_time {
        Some(t0) => t - t0 < policy.reopen_delay,
        None => false,
    };
    let mode = if by_trigger || by_decay || within_delay {
        InterfaceMode::NeumannClosed
    } else {
        InterfaceMode::RobinOpen
    };
    ledger.mode = mode;
    if mode == InterfaceMode::NeumannClosed {
        ledger.lockdown_days += dt;
    }
    mode
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AlphaForm, LockdownSignal, Region};
    use proptest::prelude::*;

    fn policy(form: AlphaForm) -> MobilityPolicy {
        MobilityPolicy {
            alpha_form: form,
            i_threshold: [0.5, 0.5],
            lockdown_trigger: 0.5,
            alpha_floor: 0.0,
            reopen_delay: 0.0,
            lockdown_signal: LockdownSignal::Interface,
        }
    }

    #[test]
    fn alpha_at_zero_is_one_for_both_forms() {
        assert_eq!(
            policy(AlphaForm::RationalDecay).alpha_eval(0.0).unwrap(),
            1.0
        );
        assert_eq!(
            policy(AlphaForm::ExponentialDecay).alpha_eval(0.0).unwrap(),
            1.0
        );
    }

    #[test]
    fn alpha_rational_at_one_is_half() {
        assert_eq!(
            policy(AlphaForm::RationalDecay).alpha_eval(1.0).unwrap(),
            0.5
        );
    }

    #[test]
    fn alpha_rejects_negative_infected() {
        assert!(policy(AlphaForm::RationalDecay).alpha_eval(-0.1).is_err());
    }

    #[test]
    fn alpha_floor_zeroes_small_values() {
        let mut p = policy(AlphaForm::ExponentialDecay);
        p.alpha_floor = 1e-3;
        assert_eq!(p.alpha_eval(10.0).unwrap(), 0.0); // e^-10 ~ 4.5e-5
        assert!(p.alpha_eval(1.0).unwrap() > 0.0);
    }

    #[test]
    fn signed_alpha_at_threshold_takes_positive_branch() {
        let p = policy(AlphaForm::RationalDecay);
        let a = p.signed_alpha(0.5, Region::Two).unwrap();
        assert!(a > 0.0);
        assert_eq!(a, 1.0 / 1.25);
    }

    #[test]
    fn signed_alpha_below_threshold_is_negative_one_at_zero() {
        let p = policy(AlphaForm::RationalDecay);
        assert_eq!(p.signed_alpha(0.0, Region::Two).unwrap(), -1.0);
    }

    #[test]
    fn sign_flips_exactly_once_along_a_scan() {
        let p = policy(AlphaForm::RationalDecay);
        let mut flips = 0;
        let mut prev = p.signed_alpha(0.0, Region::One).unwrap().signum();
        for k in 1..=1000 {
            let i = k as f64 * 0.001;
            let s = p.signed_alpha(i, Region::One).unwrap().signum();
            if s != prev {
                flips += 1;
                prev = s;
            }
        }
        assert_eq!(flips, 1);
    }

    #[test]
    fn lockdown_never_triggers_with_infinite_trigger() {
        let mut p = policy(AlphaForm::RationalDecay);
        p.lockdown_trigger = f64::INFINITY;
        let mut ledger = LockdownLedger::new();
        for step in 0..100 {
            let t = step as f64 * 0.0125;
            let mode = lockdown_update(&p, 5.0, 3.0, t, 0.0125, &mut ledger);
            assert_eq!(mode, InterfaceMode::RobinOpen);
        }
        assert_eq!(ledger.lockdown_days, 0.0);
    }

    #[test]
    fn lockdown_accumulates_exactly_while_above_trigger() {
        let p = policy(AlphaForm::RationalDecay);
        let mut ledger = LockdownLedger::new();
        let dt = 0.0125;
        // 40 steps above the trigger, then below.
        for step in 0..100 {
            let sig = if step < 40 { 1.0 } else { 0.0 };
            lockdown_update(&p, sig, 0.0, step as f64 * dt, dt, &mut ledger);
        }
        assert!((ledger.lockdown_days - 40.0 * dt).abs() < 1e-15);
        assert_eq!(ledger.mode, InterfaceMode::RobinOpen);
    }

    #[test]
    fn reopen_delay_holds_the_closure() {
        let mut p = policy(AlphaForm::RationalDecay);
        p.reopen_delay = 1.0;
        let mut ledger = LockdownLedger::new();
        let dt = 0.25;
        // Signal high only at t = 0.
        let mut closed_steps = 0;
        for step in 0..12 {
            let t = step as f64 * dt;
            let sig = if step == 0 { 1.0 } else { 0.0 };
            if lockdown_update(&p, sig, 0.0, t, dt, &mut ledger) == InterfaceMode::NeumannClosed {
                closed_steps += 1;
            }
        }
        // Closed at t = 0 and while t - 0 < 1.0: steps 0..=3.
        assert_eq!(closed_steps, 4);
    }

    proptest! {
        #[test]
        fn alpha_monotone_non_increasing(
            mut xs in prop::collection::vec(0.0..50.0f64, 2..40),
        ) {
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for form in [AlphaForm::RationalDecay, AlphaForm::ExponentialDecay] {
                let p = policy(form);
                let mut prev = f64::INFINITY;
                for &x in &xs {
                    let a = p.alpha_eval(x).unwrap();
                    prop_assert!(a <= prev + 1e-15);
                    prev = a;
                }
            }
        }

        #[test]
        fn alpha_lipschitz_bounds(a in 0.0..50.0f64, b in 0.0..50.0f64) {
            // |alpha'| <= 0.6495 for the rational form, <= 1 for the
            // exponential form.
            let d = (a - b).abs();
            let pr = policy(AlphaForm::RationalDecay);
            let pe = policy(AlphaForm::ExponentialDecay);
            let dr = (pr.alpha_eval(a).unwrap() - pr.alpha_eval(b).unwrap()).abs();
            let de = (pe.alpha_eval(a).unwrap() - pe.alpha_eval(b).unwrap()).abs();
            prop_assert!(dr <= 0.65 * d + 1e-12);
            prop_assert!(de <= 1.0 * d + 1e-12);
        }

        #[test]
        fn alpha_in_unit_interval(x in 0.0..1e6f64) {
            for form in [AlphaForm::RationalDecay, AlphaForm::ExponentialDecay] {
                let a = policy(form).alpha_eval(x).unwrap();
                prop_assert!((0.0..=1.0).contains(&a));
            }
        }
    }
}
