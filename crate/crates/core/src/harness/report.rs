use std::fmt::Write as _;

use serde::Serialize;

use super::{ComparisonReport, SweepReport};
use crate::error::Result;

/// Pretty JSON with a trailing newline. Field order follows the struct
/// definitions and maps are ordered, so output is stable.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Formats with 6 significant digits, `%g`-style, independent of locale.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // rounding may carry into a new digit (e.g. 999999.5)
        let digits = s
            .trim_start_matches('-')
            .split('.')
            .next()
            .map_or(0, str::len);
        if digits <= 6 {
            return trim(s);
        }
    }
    let s = format!("{x:.5e}");
    let (mantissa, e) = s.split_once('e').unwrap_or((&s, "0"));
    let m = trim(mantissa.to_string());
    let e: i32 = e.parse().unwrap_or(0);
    format!("{m}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

pub fn sweep_to_csv(report: &SweepReport) -> String {
    let mut out = String::from("lower,upper,extra_fuel_L,feasible\n");
    for c in &report.grid {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_sig6(c.lower),
            fmt_sig6(c.upper),
            fmt_sig6(c.extra_fuel_l),
            c.feasible
        );
    }
    out
}

pub fn comparison_to_csv(reports: &[ComparisonReport]) -> String {
    let mut out =
        String::from("cycle,strategy,extra_fuel_L,total_fuel_L,min_soc,final_soc,feasible\n");
    for r in reports {
        for (name, s) in &r.strategies {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.cycle,
                name,
                fmt_sig6(s.extra_fuel_l),
                fmt_sig6(s.total_fuel_l),
                fmt_sig6(s.min_soc),
                fmt_sig6(s.final_soc),
                s.feasible
            );
        }
    }
    out
}
