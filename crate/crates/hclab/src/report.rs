//! Experiment reports and their rendered forms.
//!
//! A report records the theoretical constant, the sweep points, the
//! extrapolated limit and a verdict, and renders to CSV (one row per
//! sweep point plus a summary row), versioned JSON, and a static SVG
//! plot. Rendering is deterministic: the only volatile fields are the
//! timestamp and the runtime, each kept on its own line in the JSON so
//! byte comparisons can strip them.

use crate::ext::ExtReal;
use serde::Serialize;
use std::fmt;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "sharp-confirmed")]
    SharpConfirmed,
    #[serde(rename = "bound-only")]
    BoundOnly,
    #[serde(rename = "violated")]
    Violated,
}

impl Verdict {
    /// Process exit code contract: confirmations and pure bounds are
    /// success, a violated inequality is the distinguished failure.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::SharpConfirmed | Verdict::BoundOnly => 0,
            Verdict::Violated => 2,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::SharpConfirmed => "sharp-confirmed",
            Verdict::BoundOnly => "bound-only",
            Verdict::Violated => "violated",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub experiment: String,
    pub verdict: Verdict,
    pub theoretical_constant: ExtReal,
    /// Where the constant comes from (closed-form moment, quadrature, ...).
    pub constant_source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extrapolated_limit: Option<f64>,
    pub rel_tol: f64,
    pub seed: u64,
    pub sweep: Vec<SweepPoint>,
    pub notes: Vec<String>,
    pub runtime_seconds: f64,
    pub timestamp_unix: u64,
}

impl ExperimentReport {
    pub fn new(
        experiment: impl Into<String>,
        theoretical_constant: ExtReal,
        constant_source: impl Into<String>,
    ) -> ExperimentReport {
        ExperimentReport {
            schema: "hclab/1".into(),
            experiment: experiment.into(),
            verdict: Verdict::BoundOnly,
            theoretical_constant,
            constant_source: constant_source.into(),
            extrapolated_limit: None,
            rel_tol: 1e-10,
            seed: 0,
            sweep: Vec::new(),
            notes: Vec::new(),
            runtime_seconds: 0.0,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn finish(mut self, started: std::time::Instant) -> ExperimentReport {
        self.runtime_seconds = started.elapsed().as_secs_f64();
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization is total");
        s.push('\n');
        s
    }

    /// One row per sweep point; nonempty sweeps get a trailing summary
    /// row carrying the extrapolated limit and the theoretical constant.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,ratio,lower_bound\n");
        for p in &self.sweep {
            let lb = p.lower_bound.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", p.epsilon, p.ratio, lb));
        }
        if !self.sweep.is_empty() {
            let limit = self
                .extrapolated_limit
                .map(|v| v.to_string())
                .unwrap_or_default();
            out.push_str(&format!("summary,{},{}\n", limit, self.theoretical_constant));
        }
        out
    }

    /// Ratio-versus-epsilon plot: the sweep as a polyline with point
    /// markers, the lower-bound sequence dashed when present, and exactly
    /// one horizontal reference line when the theoretical constant is
    /// finite.
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const L: f64 = 70.0;
        const R: f64 = 610.0;
        const T: f64 = 40.0;
        const B: f64 = 350.0;
        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
             font-family=\"monospace\" font-size=\"12\">\n"
        ));
        svg.push_str(&format!(
            "  <text x=\"{L}\" y=\"20\">{} [{}]</text>\n",
            xml_escape(&self.experiment),
            self.verdict
        ));

        let eps: Vec<f64> = self.sweep.iter().map(|p| p.epsilon).collect();
        let mut y_top = 1e-12f64;
        for p in &self.sweep {
            y_top = y_top.max(p.ratio).max(p.lower_bound.unwrap_or(0.0));
        }
        if let Some(c) = self.theoretical_constant.value() {
            y_top = y_top.max(c);
        }
        y_top *= 1.08;
        let (lx, hx) = match (
            eps.iter().cloned().reduce(f64::min),
            eps.iter().cloned().reduce(f64::max),
        ) {
            (Some(a), Some(b)) if a < b => (a.log2(), b.log2()),
            (Some(a), _) => (a.log2() - 1.0, a.log2() + 1.0),
            _ => (-4.0, 0.0),
        };
        let x_of = |e: f64| L + (e.log2() - lx) / (hx - lx) * (R - L);
        let y_of = |v: f64| B - (v / y_top).clamp(0.0, 1.0) * (B - T);

        // Axes.
        svg.push_str(&format!(
            "  <line class=\"axis\" x1=\"{L}\" y1=\"{B}\" x2=\"{R}\" y2=\"{B}\" stroke=\"black\"/>\n"
        ));
        svg.push_str(&format!(
            "  <line class=\"axis\" x1=\"{L}\" y1=\"{T}\" x2=\"{L}\" y2=\"{B}\" stroke=\"black\"/>\n"
        ));
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\">epsilon (log scale)</text>\n",
            (L + R) / 2.0 - 60.0,
            B + 30.0
        ));
        svg.push_str(&format!(
            "  <text x=\"8\" y=\"{}\">{:.4}</text>\n",
            T + 4.0,
            y_top
        ));
        svg.push_str(&format!("  <text x=\"8\" y=\"{B}\">0</text>\n"));

        if let Some(c) = self.theoretical_constant.value() {
            let y = y_of(c);
            svg.push_str(&format!(
                "  <line class=\"reference\" x1=\"{L}\" y1=\"{y:.2}\" x2=\"{R}\" y2=\"{y:.2}\" \
                 stroke=\"firebrick\" stroke-dasharray=\"6 3\"/>\n"
            ));
            svg.push_str(&format!(
                "  <text x=\"{}\" y=\"{:.2}\" fill=\"firebrick\">constant = {}</text>\n",
                R - 140.0,
                y - 6.0,
                c
            ));
        } else {
            svg.push_str(&format!(
                "  <text x=\"{}\" y=\"{}\" fill=\"firebrick\">constant diverges</text>\n",
                R - 160.0,
                T + 16.0
            ));
        }

        if self.sweep.len() >= 2 {
            let pts: Vec<String> = self
                .sweep
                .iter()
                .map(|p| format!("{:.2},{:.2}", x_of(p.epsilon), y_of(p.ratio)))
                .collect();
            svg.push_str(&format!(
                "  <polyline class=\"ratio\" fill=\"none\" stroke=\"steelblue\" points=\"{}\"/>\n",
                pts.join(" ")
            ));
            if self.sweep.iter().all(|p| p.lower_bound.is_some()) {
                let pts: Vec<String> = self
                    .sweep
                    .iter()
                    .map(|p| {
                        format!("{:.2},{:.2}", x_of(p.epsilon), y_of(p.lower_bound.unwrap()))
                    })
                    .collect();
                svg.push_str(&format!(
                    "  <polyline class=\"lower-bound\" fill=\"none\" stroke=\"darkseagreen\" \
                     stroke-dasharray=\"2 3\" points=\"{}\"/>\n",
                    pts.join(" ")
                ));
            }
        }
        for p in &self.sweep {
            svg.push_str(&format!(
                "  <circle class=\"point\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>\n",
                x_of(p.epsilon),
                y_of(p.ratio)
            ));
        }
        if let Some(limit) = self.extrapolated_limit {
            svg.push_str(&format!(
                "  <text x=\"{L}\" y=\"{}\">extrapolated limit = {}</text>\n",
                B + 45.0,
                limit
            ));
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Strips the volatile lines (timestamp, runtime) from a rendered JSON
/// report so that two runs of the same experiment compare byte-for-byte.
pub fn strip_volatile_lines(json: &str) -> String {
    json.lines()
        .filter(|line| {
            !line.trim_start().starts_with("\"timestamp_unix\"")
                && !line.trim_start().starts_with("\"runtime_seconds\"")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        let mut r = ExperimentReport::new(
            "sharpness",
            ExtReal::finite(2.0),
            "closed-form kernel moment",
        );
        r.verdict = Verdict::SharpConfirmed;
        r.extrapolated_limit = Some(1.98);
        r.sweep = vec![
            SweepPoint {
                epsilon: 0.125,
                ratio: 1.88,
                lower_bound: Some(1.7),
            },
            SweepPoint {
                epsilon: 0.0625,
                ratio: 1.94,
                lower_bound: Some(1.8),
            },
        ];
        r
    }

    #[test]
    fn exit_codes_follow_the_verdict() {
        assert_eq!(Verdict::SharpConfirmed.exit_code(), 0);
        assert_eq!(Verdict::BoundOnly.exit_code(), 0);
        assert_eq!(Verdict::Violated.exit_code(), 2);
        assert_eq!(Verdict::Violated.to_string(), "violated");
    }

    #[test]
    fn csv_rows_and_summary() {
        let r = sample();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "epsilon,ratio,lower_bound");
        assert_eq!(lines.len(), 4, "two data rows plus summary: {csv}");
        assert!(lines[3].starts_with("summary,1.98,2"));

        let mut empty = sample();
        empty.sweep.clear();
        let csv = empty.to_csv();
        assert_eq!(csv, "epsilon,ratio,lower_bound\n", "empty sweep is header only");
    }

    #[test]
    fn json_is_versioned_and_strippable() {
        let r = sample();
        let json = r.to_json();
        assert!(json.contains("\"schema\": \"hclab/1\""));
        assert!(json.contains("\"verdict\": \"sharp-confirmed\""));
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["sweep"].as_array().unwrap().len(), 2);
        assert_eq!(parsed["theoretical_constant"]["kind"], "finite");

        // Reports differing only in volatile fields compare equal after
        // stripping.
        let mut later = r.clone();
        later.timestamp_unix += 100;
        later.runtime_seconds = 9.9;
        assert_ne!(r.to_json(), later.to_json());
        assert_eq!(
            strip_volatile_lines(&r.to_json()),
            strip_volatile_lines(&later.to_json())
        );
    }

    #[test]
    fn svg_has_one_reference_line_per_finite_constant() {
        let r = sample();
        let svg = r.to_svg();
        assert_eq!(svg.matches("class=\"reference\"").count(), 1);
        assert_eq!(svg.matches("<polyline class=\"ratio\"").count(), 1);
        assert!(svg.contains("constant = 2"));

        let mut divergent = sample();
        divergent.theoretical_constant = ExtReal::Infinite;
        let svg = divergent.to_svg();
        assert_eq!(svg.matches("class=\"reference\"").count(), 0);
        assert!(svg.contains("constant diverges"));
    }

    #[test]
    fn svg_handles_degenerate_sweeps() {
        let mut r = sample();
        r.sweep.truncate(1);
        let svg = r.to_svg();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 0);
        r.sweep.clear();
        let svg = r.to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
