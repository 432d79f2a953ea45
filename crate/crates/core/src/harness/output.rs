use std::fmt::Write as _;
use std::fs;
use std::path::Path as FsPath;

use super::adversary::{FAVORED_PROB, TARGET_NOISE};
use super::ensemble::Instance;
use super::experiment::RegretTrace;
use super::metrics::{compute_metrics, Metrics};
use crate::error::Result;
use crate::learners::LearnerConfig;

pub const TRACE_HEADER: &str = "t,chosen_path,realized_gain,expected_gain,comparator_gain,regret,bound";

pub fn trace_csv(trace: &RegretTrace) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in &trace.rows {
        let _ = writeln!(s, "{},{},{},{},{},{},{}", r.t, r.chosen, r.realized, r.expected, r.comparator, r.regret, r.bound);
    }
    s
}

pub fn meta_text(inst: &Instance, cfg: &LearnerConfig, trace: &RegretTrace, m: &Metrics) -> String {
    let sz = inst.context.machine().sizes();
    let spec = &inst.spec;
    let mut s = String::new();
    let _ = writeln!(s, "# run");
    let _ = writeln!(s, "seed = {}", spec.seed);
    let _ = writeln!(s, "regime = {}", trace.regime);
    let _ = writeln!(s, "adversary = {}", spec.adversary);
    let _ = writeln!(s, "experts = {}", spec.experts);
    let _ = writeln!(s, "substructures = {}", spec.substructures);
    let _ = writeln!(s, "order = {}", spec.order);
    let _ = writeln!(s, "alphabet = {}", spec.alphabet.join(" "));
    let _ = writeln!(s, "\n# context automaton");
    let _ = writeln!(s, "states = {}", sz.states);
    let _ = writeln!(s, "transitions = {}", sz.transitions);
    let _ = writeln!(s, "longest_path = {}", sz.longest_path);
    let _ = writeln!(s, "paths = {}", sz.paths);
    let _ = writeln!(s, "covering_paths = {}", inst.covering_paths);
    let _ = writeln!(s, "lambda_min = {}", inst.lambda_min);
    let _ = writeln!(s, "\n# resolved tuning");
    for l in cfg.describe() {
        let _ = writeln!(s, "{l}");
    }
    let _ = writeln!(s, "\n# results");
    let _ = writeln!(s, "rounds = {}", m.rounds);
    let _ = writeln!(s, "best_path = {}", inst.path_string(&trace.best_path));
    let _ = writeln!(s, "comparator_gain = {}", m.comparator);
    let _ = writeln!(s, "expected_regret = {}", m.expected_regret);
    let _ = writeln!(s, "realized_regret = {}", m.realized_regret);
    match m.log_regret {
        Some(v) => {
            let _ = writeln!(s, "log_regret = {v}");
        }
        None => {
            let _ = writeln!(s, "log_regret = unbounded");
        }
    }
    let _ = writeln!(s, "alpha = {}", m.alpha);
    let _ = writeln!(s, "bound = {}", m.bound);
    let _ = writeln!(s, "\n# modelling choices");
    let _ = writeln!(
        s,
        "target = output of a hidden path following a favored expert with probability {FAVORED_PROB}, each position replaced by a uniform symbol with probability {TARGET_NOISE}"
    );
    let _ = writeln!(s, "regret = best fixed path minus the learner's expected gain over enumerated paths");
    let _ = writeln!(s, "bound = evaluated at each prefix length t with the run's sizes");
    s
}

/// Line plot of expected regret and bound against rounds.
pub fn regret_svg(trace: &RegretTrace) -> String {
    let (w, h, pad) = (640.0, 400.0, 40.0);
    let n = trace.rows.len().max(1) as f64;
    let top = trace
        .rows
        .iter()
        .flat_map(|r| [r.regret, r.bound])
        .filter(|v| v.is_finite())
        .fold(1.0f64, f64::max);
    let bottom = trace.rows.iter().map(|r| r.regret).fold(0.0f64, f64::min);
    let x = |t: usize| pad + (w - 2.0 * pad) * t as f64 / n;
    let y = |v: f64| h - pad - (h - 2.0 * pad) * (v - bottom) / (top - bottom);
    let line = |f: &dyn Fn(usize) -> f64| {
        trace
            .rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", x(r.t), y(f(r.t - 1))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{pad},{pad} V{} H{}" stroke="black" fill="none"/>"#,
        h - pad,
        w - pad
    );
    let _ = writeln!(s, r##"<polyline points="{}" stroke="#c0392b" fill="none" stroke-dasharray="4 3"/>"##, line(&|i| trace.rows[i].bound));
    let _ = writeln!(s, r##"<polyline points="{}" stroke="#1f4e9c" fill="none"/>"##, line(&|i| trace.rows[i].regret));
    let _ = writeln!(s, r#"<text x="{pad}" y="{}" font-size="12">{} ({}), regret (solid) and bound (dashed)</text>"#, pad - 12.0, trace.algorithm, trace.regime);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="end">t = {}</text>"#, w - pad, h - pad + 16.0, trace.rows.len());
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{top:.1}</text>"#, pad - 4.0, pad + 4.0);
    s.push_str("</svg>\n");
    s
}

/// Writes `trace.csv`, `meta.txt` and, if asked, `regret.svg` into `dir`.
pub fn write_run(dir: &FsPath, inst: &Instance, cfg: &LearnerConfig, trace: &RegretTrace, svg: bool) -> Result<Metrics> {
    fs::create_dir_all(dir)?;
    let m = compute_metrics(trace);
    fs::write(dir.join("trace.csv"), trace_csv(trace))?;
    fs::write(dir.join("meta.txt"), meta_text(inst, cfg, trace, &m))?;
    if svg {
        fs::write(dir.join("regret.svg"), regret_svg(trace))?;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::adversary::AdversaryModel;
    use crate::harness::ensemble::EnsembleSpec;
    use crate::harness::experiment::run_default;
    use crate::learners::{Algorithm, PartialConfig};

    #[test]
    fn csv_has_one_row_per_round() {
        let spec = EnsembleSpec {
            experts: 2,
            substructures: 3,
            order: 2,
            alphabet: vec!["a".into(), "b".into()],
            adversary: AdversaryModel::Iid,
            horizon: 4,
            seed: 3,
        };
        let (inst, cfg, tr) = run_default(&spec, Algorithm::Cdch, &PartialConfig::default()).unwrap();
        let csv = trace_csv(&tr);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("1,h"));
        let meta = meta_text(&inst, &cfg, &tr, &compute_metrics(&tr));
        assert!(meta.contains("seed = 3"));
        assert!(meta.contains("learning_rate = "));
        let svg = regret_svg(&tr);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
