use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trailer::BatteryParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Constant,
    BangBang,
}

/// Reactive towing controller. `towing_latched` is the hysteresis state and
/// is updated by [`policy_step`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactivePolicy {
    pub kind: PolicyKind,
    pub lower_soc: f64,
    pub upper_soc: f64,
    pub towing_latched: bool,
}

impl ReactivePolicy {
    pub fn constant() -> Self {
        Self {
            kind: PolicyKind::Constant,
            lower_soc: 0.0,
            upper_soc: 1.0,
            towing_latched: false,
        }
    }

    pub fn bang_bang(lower_soc: f64, upper_soc: f64) -> Self {
        Self {
            kind: PolicyKind::BangBang,
            lower_soc,
            upper_soc,
            towing_latched: false,
        }
    }

    pub fn validate(&self, battery: &BatteryParams) -> Result<()> {
        if self.kind == PolicyKind::BangBang {
            let ok = battery.soc_floor <= self.lower_soc
                && self.lower_soc < self.upper_soc
                && self.upper_soc <= battery.soc_cap;
            if !ok {
                return Err(Error::invalid(format!(
                    "bang-bang thresholds need floor {} <= lower {} < upper {} <= cap {}",
                    battery.soc_floor, self.lower_soc, self.upper_soc, battery.soc_cap
                )));
            }
        }
        Ok(())
    }
}

/// One controller decision. Bang-bang latches on at or below the lower
/// threshold and off at or above the upper one.
pub fn policy_step(policy: &mut ReactivePolicy, soc: f64, moving: bool, admissible: bool) -> bool {
    match policy.kind {
        PolicyKind::Constant => moving && admissible,
        PolicyKind::BangBang => {
            if soc <= policy.lower_soc {
                policy.towing_latched = true;
            } else if soc >= policy.upper_soc {
                policy.towing_latched = false;
            }
            policy.towing_latched && moving && admissible
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bang_bang_thresholds_and_hysteresis() {
        let mut p = ReactivePolicy::bang_bang(0.45, 0.50);
        assert!(policy_step(&mut p, 0.44, true, true));
        assert!(p.towing_latched);
        // inside the band the latch holds
        assert!(policy_step(&mut p, 0.47, true, true));
        assert!(!policy_step(&mut p, 0.51, true, true));
        assert!(!p.towing_latched);
        assert!(!policy_step(&mut p, 0.47, true, true));
    }

    #[test]
    fn latch_survives_standstill() {
        let mut p = ReactivePolicy::bang_bang(0.45, 0.50);
        assert!(!policy_step(&mut p, 0.40, false, false));
        assert!(p.towing_latched);
        assert!(policy_step(&mut p, 0.41, true, true));
    }

    #[test]
    fn constant_tows_whenever_possible() {
        let mut p = ReactivePolicy::constant();
        assert!(policy_step(&mut p, 0.99, true, true));
        assert!(!policy_step(&mut p, 0.5, false, false));
        assert!(!policy_step(&mut p, 1.0, true, false));
    }

    #[test]
    fn replay_reproduces_decisions() {
        let socs = [0.6, 0.5, 0.46, 0.45, 0.47, 0.49, 0.5, 0.48, 0.44, 0.52];
        let run = || {
            let mut p = ReactivePolicy::bang_bang(0.45, 0.50);
            socs.iter()
                .map(|s| policy_step(&mut p, *s, true, true))
                .collect::<Vec<_>>()
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(
            a,
            [false, false, false, true, true, true, false, false, true, false]
        );
    }

    #[test]
    fn threshold_validation() {
        let b = BatteryParams::default();
        assert!(ReactivePolicy::bang_bang(0.45, 0.5).validate(&b).is_ok());
        assert!(ReactivePolicy::bang_bang(0.5, 0.45).validate(&b).is_err());
        assert!(ReactivePolicy::bang_bang(0.1, 0.45).validate(&b).is_err());
        assert!(ReactivePolicy::constant().validate(&b).is_ok());
    }
}
