//! CSV artifact writers.
//!
//! Every file is written atomically (temp file in the same directory, then
//! rename) so a crashed or interrupted run never leaves a half-written
//! artifact behind. Floats are formatted with the shortest representation
//! that round-trips, so downstream tooling sees exactly the computed values.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use hjb_core::evolution::EvolutionTrace;
use hjb_core::ergodic::{DiscountStudy, TwoRouteResult};
use hjb_core::grid::GridFunction;
use hjb_core::model::CheckReport;

/// Quote a field if it contains a separator, quote, or newline.
pub fn field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        let mut out = String::with_capacity(s.len() + 2);
        out.push('"');
        for c in s.chars() {
            if c == '"' {
                out.push('"');
            }
            out.push(c);
        }
        out.push('"');
        out
    } else {
        s.to_string()
    }
}

/// Shortest round-tripping decimal form of `x`.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Write `contents` to `path` atomically: the bytes land under a temporary
/// name in the target directory first and are renamed into place only once
/// fully flushed.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

/// `state.csv`: one grid node per row with its coordinates.
pub fn state_csv(u: &GridFunction) -> String {
    let grid = u.grid();
    let mut out = String::new();
    if grid.dim() == 1 {
        out.push_str("index,x,value\n");
    } else {
        out.push_str("index,x0,x1,value\n");
    }
    let mut x = [0.0f64; 2];
    for (i, v) in u.values().iter().enumerate() {
        grid.point(i, &mut x);
        if grid.dim() == 1 {
            let _ = writeln!(out, "{i},{},{}", num(x[0]), num(*v));
        } else {
            let _ = writeln!(out, "{i},{},{},{}", num(x[0]), num(x[1]), num(*v));
        }
    }
    out
}

/// `trace.csv`: the sampled evolution diagnostics, one sample per row.
pub fn trace_csv(trace: &EvolutionTrace) -> String {
    let mut out = String::from("t,osc,sup_norm,lip_space,lip_time,mean,slope,residual\n");
    for k in 0..trace.times.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            num(trace.times[k]),
            num(trace.osc[k]),
            num(trace.sup_norm[k]),
            num(trace.lip_space[k]),
            num(trace.lip_time[k]),
            num(trace.mean[k]),
            num(trace.running_slope[k]),
            num(trace.step_residual[k]),
        );
    }
    out
}

/// `checks.csv`: one structural-assumption check per row, keyed by seed.
pub fn checks_csv(rows: &[(u64, CheckReport)]) -> String {
    let mut out = String::from("seed,name,samples,worst_slack,pass,witness\n");
    for (seed, r) in rows {
        let _ = writeln!(
            out,
            "{seed},{},{},{},{},{}",
            field(r.name),
            r.samples,
            num(r.worst_slack),
            r.pass,
            field(r.witness.as_deref().unwrap_or("")),
        );
    }
    out
}

/// Scheme-level facts recorded alongside each solver run.
#[derive(Clone, Copy, Debug, Default)]
pub struct Diagnostics {
    pub node_count: usize,
    pub dropped_tail_mass: f64,
    pub sup_outflow: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub theta: f64,
    pub dt: f64,
}

/// `diagnostics.csv`: a single row of quadrature/scheme constants.
pub fn diagnostics_csv(d: &Diagnostics) -> String {
    format!(
        "node_count,dropped_tail_mass,sup_outflow,kappa_min,kappa_max,theta,dt\n{},{},{},{},{},{},{}\n",
        d.node_count,
        num(d.dropped_tail_mass),
        num(d.sup_outflow),
        num(d.kappa_min),
        num(d.kappa_max),
        num(d.theta),
        num(d.dt),
    )
}

/// `ergodic.csv`: the discount sweep plus summary scalars in one file.
///
/// Row kinds: `level` (one per discount, left block filled), `defect`
/// (profile defect at a horizon, `t`+`value` filled), and named summary
/// scalars (`c_discount`, `fit_residual`, `c_slope`, `slope_fit_residual`,
/// `agreement_gap`) carrying only `value`.
pub fn ergodic_csv(
    study: &DiscountStudy,
    two_route: Option<&TwoRouteResult>,
    agreement_gap: Option<f64>,
) -> String {
    let mut out = String::from(
        "kind,lambda,sup_norm,osc,lipschitz,anchor_value,discount_product,residual,steps,t,value\n",
    );
    for r in &study.records {
        let _ = writeln!(
            out,
            "level,{},{},{},{},{},{},{},{},,",
            num(r.lambda),
            num(r.sup_norm),
            num(r.osc),
            num(r.lipschitz),
            num(r.anchor_value),
            num(r.discount_product),
            num(r.residual),
            r.steps,
        );
    }
    fn scalar(out: &mut String, kind: &str, v: f64) {
        let _ = writeln!(out, "{kind},,,,,,,,,,{}", num(v));
    }
    scalar(&mut out, "c_discount", study.c_discount);
    scalar(&mut out, "fit_residual", study.fit_residual);
    if let Some(tr) = two_route {
        scalar(&mut out, "c_slope", tr.c_slope);
        scalar(&mut out, "slope_fit_residual", tr.slope_fit_residual);
        for (t, d) in &tr.defects {
            let _ = writeln!(out, "defect,,,,,,,,,{},{}", num(*t), num(*d));
        }
    }
    if let Some(g) = agreement_gap {
        scalar(&mut out, "agreement_gap", g);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields_with_separators_are_quoted() {
        assert_eq!(field("plain"), "plain");
        assert_eq!(field("a,b"), "\"a,b\"");
        assert_eq!(field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.202e-8, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("t.csv");
        write_atomic(&path, "a,b\n1,2\n").unwrap();
        write_atomic(&path, "a,b\n3,4\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n3,4\n");
        assert!(!path.with_extension("csv.tmp").exists());
    }
}
