use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Choice of block exponent per dyadic level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ScheduleVariant {
    /// `m(L) = ⌊2(L − log₂ L)/p⌋`.
    Balanced,
    /// `m(L) = ⌊2(L + ε log₂ L)/p⌋`.
    Inflated { epsilon: f64 },
    /// `m(L) = ⌊2(L + (1+ε) log₂ L)/p⌋`.
    LogInflated { epsilon: f64 },
}

/// Block exponents `m(L)` and thresholds `λ_L` for levels `L = 0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSchedule {
    pub levels: Vec<u32>,
    pub m: Vec<u32>,
    pub variant: ScheduleVariant,
    pub p: f64,
    pub c_fit: f64,
    pub lambda: Vec<f64>,
}

impl CouplingSchedule {
    /// Top level `N`.
    pub fn top(&self) -> u32 {
        *self.levels.last().expect("schedule has levels")
    }

    /// Path length `2^{N+1}` covered by the schedule.
    pub fn path_len(&self) -> usize {
        1usize << (self.top() + 1)
    }
}

pub fn make_schedule(
    top: u32,
    p: f64,
    variant: ScheduleVariant,
    c_fit: f64,
) -> Result<CouplingSchedule> {
    if !(p > 2.0 && p <= 4.0) {
        return invalid(format!("p = {p} outside (2, 4]"));
    }
    if !(2..=40).contains(&top) {
        return invalid("top level N must lie in [2, 40]");
    }
    if !(c_fit > 0.0) {
        return invalid("c_fit must be positive");
    }
    let shift = match variant {
        ScheduleVariant::Balanced => -1.0,
        ScheduleVariant::Inflated { epsilon } | ScheduleVariant::LogInflated { epsilon }
            if !(epsilon > 0.0) =>
        {
            return invalid("epsilon must be positive");
        }
        ScheduleVariant::Inflated { epsilon } => epsilon,
        ScheduleVariant::LogInflated { epsilon } => 1.0 + epsilon,
    };
    let levels: Vec<u32> = (0..=top).collect();
    let m: Vec<u32> = levels
        .iter()
        .map(|&l| {
            if l == 0 {
                return 0;
            }
            let lf = f64::from(l);
            let raw = (2.0 * (lf + shift * lf.log2()) / p).floor();
            raw.clamp(0.0, lf) as u32
        })
        .collect();
    let kappa = (2.0 * c_fit * std::f64::consts::LN_2).sqrt();
    let lambda = levels
        .iter()
        .zip(&m)
        .map(|(&l, &mm)| kappa * 2f64.powf(f64::from(mm) / 2.0) * f64::from(l).sqrt())
        .collect();
    Ok(CouplingSchedule {
        levels,
        m,
        variant,
        p,
        c_fit,
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_sixteen_examples() {
        let b = make_schedule(16, 4.0, ScheduleVariant::Balanced, 1.0).unwrap();
        assert_eq!(b.m[16], 6);
        let li =
            make_schedule(16, 4.0, ScheduleVariant::LogInflated { epsilon: 0.5 }, 1.0).unwrap();
        assert_eq!(li.m[16], 11);
    }

    #[test]
    fn clamped_into_level() {
        for v in [
            ScheduleVariant::Balanced,
            ScheduleVariant::Inflated { epsilon: 3.0 },
            ScheduleVariant::LogInflated { epsilon: 5.0 },
        ] {
            let s = make_schedule(10, 2.1, v, 1.0).unwrap();
            assert!(s.m.iter().zip(&s.levels).all(|(m, l)| m <= l));
            assert!(s.m[1] <= 1 && s.m[0] == 0);
        }
    }

    #[test]
    fn rejects_bad_p() {
        assert!(make_schedule(10, 2.0, ScheduleVariant::Balanced, 1.0).is_err());
        assert!(make_schedule(10, 4.5, ScheduleVariant::Balanced, 1.0).is_err());
        assert!(make_schedule(10, 3.0, ScheduleVariant::Inflated { epsilon: 0.0 }, 1.0).is_err());
    }

    #[test]
    fn lambda_formula() {
        let s = make_schedule(4, 4.0, ScheduleVariant::Balanced, 2.0).unwrap();
        let kappa = (4.0 * std::f64::consts::LN_2).sqrt();
        assert!((s.lambda[4] - kappa * 2f64.powf(s.m[4] as f64 / 2.0) * 2.0).abs() < 1e-12);
        assert_eq!(s.path_len(), 32);
    }
}
