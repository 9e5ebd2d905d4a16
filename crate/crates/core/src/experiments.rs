//! Concavity parameter studies and the optimum-versus-baseline comparison.
//!
//! Each study simulates its points, writes one Touchstone file and one CSV
//! per point, then derives `report.csv` from the per-point CSVs and
//! evaluates its trend checks from `report.csv` alone. `summary.svg` and
//! `summary.md` are pure functions of those CSV files, so
//! [`regenerate_report`] reproduces them byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cache::ResultCache;
use crate::em::touchstone::{parse_csv, to_csv, to_touchstone, CsvRow};
use crate::em::{find_resonance, frequency_grid, SParamRow, SParamTable, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry::PatchDesign;
use crate::optimizer::{s_matrix_cost, CostWeights};
use crate::plot::{render_svg, Panel, Series};
use crate::simulation::{simulate, SceneConfig};

pub const REPORT_FILE: &str = "report.csv";
pub const SUMMARY_SVG: &str = "summary.svg";
pub const SUMMARY_MD: &str = "summary.md";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    Width,
    Length,
    Both,
    Optimal,
}

impl Study {
    pub const ALL: [Study; 4] = [Study::Width, Study::Length, Study::Both, Study::Optimal];

    pub fn name(self) -> &'static str {
        match self {
            Study::Width => "width",
            Study::Length => "length",
            Study::Both => "both",
            Study::Optimal => "optimal",
        }
    }

    pub fn parse(name: &str) -> Option<Study> {
        Study::ALL.into_iter().find(|s| s.name() == name)
    }

    fn parameter(self) -> &'static str {
        match self {
            Study::Width => "h1",
            Study::Length => "h2",
            Study::Both | Study::Optimal => "h",
        }
    }

    fn apply(self, base: &PatchDesign, value: f64) -> PatchDesign {
        match self {
            Study::Width => base.with_concavity(value, base.h2),
            Study::Length => base.with_concavity(base.h1, value),
            Study::Both | Study::Optimal => base.with_concavity(value, value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Concavity depths swept, mm.
    pub values: Vec<f64>,
    pub f_start: f64,
    pub f_stop: f64,
    pub n_points: usize,
    /// Window extension on each side when a resonance is not bracketed.
    pub widen_ghz: f64,
    /// Design frequency, GHz.
    pub f0: f64,
    /// Frequency at which the coupling trends are compared. When absent, the
    /// resonance of the first (unmodified) point is used.
    pub coupling_reference_ghz: Option<f64>,
    /// Spearman threshold for the width study.
    pub min_spearman: f64,
    pub weights: CostWeights,
    pub optimum: PatchDesign,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            values: vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.25],
            f_start: 7.5,
            f_stop: 9.5,
            n_points: 41,
            widen_ghz: 0.5,
            f0: 8.55,
            coupling_reference_ghz: None,
            min_spearman: 0.8,
            weights: CostWeights::default(),
            optimum: PatchDesign::PUBLISHED_OPTIMUM,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::config("study.values", "must be a non-empty list of non-negative depths"));
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("study.values", "must be strictly increasing"));
        }
        if !(self.f_start > 0.0 && self.f_start < self.f_stop) {
            return Err(Error::config("study.f_start", format!("need 0 < f_start < f_stop (got {}, {})", self.f_start, self.f_stop)));
        }
        if self.n_points < 3 {
            return Err(Error::config("study.n_points", format!("must be >= 3 (got {})", self.n_points)));
        }
        if !(self.widen_ghz >= 0.0) {
            return Err(Error::config("study.widen_ghz", "must be >= 0"));
        }
        if !(self.f0 > 0.0) {
            return Err(Error::config("study.f0", "must be > 0"));
        }
        if let Some(f) = self.coupling_reference_ghz {
            if !(f > 0.0) {
                return Err(Error::config("study.coupling_reference_ghz", "must be > 0"));
            }
        }
        Ok(())
    }
}

/// One row of `report.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub study: String,
    pub label: String,
    pub design: PatchDesign,
    /// Stem of the per-point `.s4p` / `.csv` pair.
    pub stem: String,
    pub f_start: f64,
    pub f_stop: f64,
    pub bracketed: bool,
    pub resonance_ghz: f64,
    pub s11_resonance_db: f64,
    pub f0: f64,
    pub s11_f0_db: f64,
    /// |S12|, |S13|, |S14| in dB at f0, then their maximum.
    pub coupling_f0_db: [f64; 3],
    pub max_coupling_f0_db: f64,
    pub f_ref: f64,
    pub coupling_ref_db: [f64; 3],
    pub max_coupling_ref_db: f64,
    pub cost_f0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCheck {
    pub name: String,
    /// Hard checks decide the study's pass/fail; others are informational.
    pub hard: bool,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub study: String,
    pub rows: Vec<TrendRow>,
    pub checks: Vec<TrendCheck>,
}

impl TrendReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.hard).all(|c| c.passed)
    }
}

pub struct StudyContext<'a> {
    pub scene: &'a SceneConfig,
    pub solver: &'a SolverConfig,
    pub study: &'a StudyConfig,
    pub cache: Option<&'a ResultCache>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutcome {
    pub report: TrendReport,
    /// Frequency points actually solved (cache misses).
    pub solver_calls: usize,
    pub files: Vec<PathBuf>,
}

const REPORT_HEADER: &str = "study,label,w,l,ins,h1,h2,stem,f_start_GHz,f_stop_GHz,bracketed,resonance_GHz,S11_res_dB,f0_GHz,S11_f0_dB,S12_f0_dB,S13_f0_dB,S14_f0_dB,max_coupling_f0_dB,fref_GHz,S12_ref_dB,S13_ref_dB,S14_ref_dB,max_coupling_ref_dB,cost_f0";

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn fmt_value(v: f64) -> String {
    format!("{v:.2}")
}

/// Simulated S-table of one point, widened once when the resonance falls
/// on the window edge.
fn sweep_point(ctx: &StudyContext, design: &PatchDesign, calls: &mut usize) -> Result<SParamTable> {
    let cfg = ctx.study;
    let scene = ctx.scene.with_design(*design);
    let mut freqs = frequency_grid(cfg.f_start, cfg.f_stop, cfg.n_points);
    let out = simulate(&scene, ctx.solver, &freqs, ctx.cache)?;
    *calls += out.solver_calls;
    if find_resonance(&out.table, 1)?.bracketed || cfg.widen_ghz == 0.0 {
        return Ok(out.table);
    }
    let step = (cfg.f_stop - cfg.f_start) / (cfg.n_points - 1) as f64;
    let extra = (cfg.widen_ghz / step).round() as usize;
    let lo = (cfg.f_start - extra as f64 * step).max(step);
    freqs = frequency_grid(lo, cfg.f_stop + extra as f64 * step, cfg.n_points + 2 * extra);
    let out = simulate(&scene, ctx.solver, &freqs, ctx.cache)?;
    *calls += out.solver_calls;
    Ok(out.table)
}

fn points(study: Study, ctx: &StudyContext) -> Vec<(String, String, PatchDesign, f64)> {
    let base = ctx.scene.design;
    match study {
        Study::Optimal => vec![
            ("baseline".into(), "baseline".into(), base, 0.0),
            ("optimum".into(), "optimum".into(), ctx.study.optimum, 1.0),
        ],
        _ => ctx
            .study
            .values
            .iter()
            .map(|&v| {
                let label = format!("{}={}", study.parameter(), fmt_value(v));
                let stem = format!("{}_{}_{}", study.name(), study.parameter(), fmt_value(v));
                (label, stem, study.apply(&base, v), v)
            })
            .collect(),
    }
}

/// Run a study, writing every output into `out_dir`.
pub fn run_study(study: Study, ctx: &StudyContext, out_dir: &Path) -> Result<StudyOutcome> {
    ctx.study.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut calls = 0;
    let mut files = Vec::new();
    let mut rows = Vec::new();
    for (label, stem, design, value) in points(study, ctx) {
        let wrap = |e: Error| Error::StudyPoint {
            study: study.name().into(),
            parameter: study.parameter().into(),
            value,
            source: Box::new(e),
        };
        let table = sweep_point(ctx, &design, &mut calls).map_err(wrap)?;
        let at_f0 = simulate(&ctx.scene.with_design(design), ctx.solver, &[ctx.study.f0], ctx.cache).map_err(wrap)?;
        calls += at_f0.solver_calls;
        let cost = s_matrix_cost(&at_f0.table.rows[0].s, &ctx.study.weights);
        for (ext, text) in [("s4p", to_touchstone(&table)), ("csv", to_csv(&table))] {
            let path = out_dir.join(format!("{stem}.{ext}"));
            write(&path, &text)?;
            files.push(path);
        }
        rows.push((label, stem, design, cost));
    }
    // Everything below is derived from the files just written.
    let report_rows = rows
        .into_iter()
        .map(|(label, stem, design, cost)| {
            let csv = parse_csv(&read(&out_dir.join(format!("{stem}.csv")))?)?;
            Ok(PointSummary { label, stem, design, cost, csv })
        })
        .collect::<Result<Vec<_>>>()?;
    let f_ref = ctx.study.coupling_reference_ghz;
    let trend_rows = summarize(study, &report_rows, ctx.study.f0, f_ref)?;
    let report_path = out_dir.join(REPORT_FILE);
    write(&report_path, &report_csv(&trend_rows))?;
    files.push(report_path);
    let report = regenerate_report(out_dir, ctx.study)?;
    files.push(out_dir.join(SUMMARY_SVG));
    files.push(out_dir.join(SUMMARY_MD));
    Ok(StudyOutcome { report, solver_calls: calls, files })
}

struct PointSummary {
    label: String,
    stem: String,
    design: PatchDesign,
    cost: f64,
    csv: Vec<CsvRow>,
}

/// S-table rebuilt from dB/degree CSV rows.
pub fn table_from_csv(rows: &[CsvRow], z0: f64) -> SParamTable {
    SParamTable {
        z0,
        rows: rows
            .iter()
            .map(|r| SParamRow {
                frequency_ghz: r.frequency_ghz,
                s: std::array::from_fn(|i| {
                    std::array::from_fn(|j| {
                        let k = 4 * i + j;
                        Complex64::from_polar(10f64.powf(r.db[k] / 20.0), r.deg[k].to_radians())
                    })
                }),
            })
            .collect(),
    }
}

/// dB value of entry `k` at `f`, linearly interpolated (clamped to the window).
fn db_at(rows: &[CsvRow], k: usize, f: f64) -> f64 {
    let last = rows.len() - 1;
    if f <= rows[0].frequency_ghz {
        return rows[0].db[k];
    }
    if f >= rows[last].frequency_ghz {
        return rows[last].db[k];
    }
    let i = rows.partition_point(|r| r.frequency_ghz <= f) - 1;
    let (a, b) = (&rows[i], &rows[i + 1]);
    let t = (f - a.frequency_ghz) / (b.frequency_ghz - a.frequency_ghz);
    a.db[k] + t * (b.db[k] - a.db[k])
}

fn couplings(rows: &[CsvRow], f: f64) -> ([f64; 3], f64) {
    let c = [db_at(rows, 1, f), db_at(rows, 2, f), db_at(rows, 3, f)];
    (c, c.iter().copied().fold(f64::MIN, f64::max))
}

fn summarize(study: Study, points: &[PointSummary], f0: f64, f_ref: Option<f64>) -> Result<Vec<TrendRow>> {
    let mut out = Vec::with_capacity(points.len());
    let mut reference = f_ref;
    for p in points {
        let table = table_from_csv(&p.csv, 50.0);
        let res = find_resonance(&table, 1)?;
        let f_ref = *reference.get_or_insert(res.frequency_ghz);
        let (c0, m0) = couplings(&p.csv, f0);
        let (cr, mr) = couplings(&p.csv, f_ref);
        out.push(TrendRow {
            study: study.name().into(),
            label: p.label.clone(),
            design: p.design,
            stem: p.stem.clone(),
            f_start: p.csv[0].frequency_ghz,
            f_stop: p.csv[p.csv.len() - 1].frequency_ghz,
            bracketed: res.bracketed,
            resonance_ghz: res.frequency_ghz,
            s11_resonance_db: 20.0 * res.magnitude.log10(),
            f0,
            s11_f0_db: db_at(&p.csv, 0, f0),
            coupling_f0_db: c0,
            max_coupling_f0_db: m0,
            f_ref,
            coupling_ref_db: cr,
            max_coupling_ref_db: mr,
            cost_f0: p.cost,
        });
    }
    Ok(out)
}

pub fn report_csv(rows: &[TrendRow]) -> String {
    let mut s = String::from(REPORT_HEADER);
    s.push('\n');
    for r in rows {
        let d = &r.design;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{:.9},{:.9},{},{:.9},{:.6},{:.9},{:.6},{:.6},{:.6},{:.6},{:.6},{:.9},{:.6},{:.6},{:.6},{:.6},{:.12e}",
            r.study,
            r.label,
            d.w,
            d.l,
            d.ins,
            d.h1,
            d.h2,
            r.stem,
            r.f_start,
            r.f_stop,
            r.bracketed,
            r.resonance_ghz,
            r.s11_resonance_db,
            r.f0,
            r.s11_f0_db,
            r.coupling_f0_db[0],
            r.coupling_f0_db[1],
            r.coupling_f0_db[2],
            r.max_coupling_f0_db,
            r.f_ref,
            r.coupling_ref_db[0],
            r.coupling_ref_db[1],
            r.coupling_ref_db[2],
            r.max_coupling_ref_db,
            r.cost_f0
        );
    }
    s
}

pub fn parse_report_csv(text: &str) -> Result<Vec<TrendRow>> {
    let bad = |m: String| Error::format(REPORT_FILE, m);
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some(REPORT_HEADER) {
        return Err(bad("unexpected header".into()));
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 25 {
            return Err(bad(format!("line {}: expected 25 fields, got {}", n + 2, f.len())));
        }
        let num = |i: usize| f[i].trim().parse::<f64>().map_err(|e| bad(format!("line {} field {}: {e}", n + 2, i + 1)));
        rows.push(TrendRow {
            study: f[0].into(),
            label: f[1].into(),
            design: PatchDesign { w: num(2)?, l: num(3)?, ins: num(4)?, h1: num(5)?, h2: num(6)? },
            stem: f[7].into(),
            f_start: num(8)?,
            f_stop: num(9)?,
            bracketed: f[10].trim().parse().map_err(|e| bad(format!("line {}: {e}", n + 2)))?,
            resonance_ghz: num(11)?,
            s11_resonance_db: num(12)?,
            f0: num(13)?,
            s11_f0_db: num(14)?,
            coupling_f0_db: [num(15)?, num(16)?, num(17)?],
            max_coupling_f0_db: num(18)?,
            f_ref: num(19)?,
            coupling_ref_db: [num(20)?, num(21)?, num(22)?],
            max_coupling_ref_db: num(23)?,
            cost_f0: num(24)?,
        });
    }
    if rows.is_empty() {
        return Err(bad("no data rows".into()));
    }
    Ok(rows)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

fn check(name: &str, hard: bool, passed: bool, detail: String) -> TrendCheck {
    TrendCheck { name: name.into(), hard, passed, detail }
}

fn direction(a: f64, b: f64) -> &'static str {
    if b > a {
        "increases"
    } else if b < a {
        "decreases"
    } else {
        "unchanged"
    }
}

/// Trend checks of a study, evaluated from its report rows.
pub fn evaluate_checks(rows: &[TrendRow], min_spearman: f64) -> Vec<TrendCheck> {
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    let mut out = Vec::new();
    let study = first.study.as_str();
    let coupling_drop = |name: &str| {
        check(
            name,
            true,
            last.max_coupling_ref_db < first.max_coupling_ref_db,
            format!(
                "max coupling at {:.4} GHz: {:.3} dB ({}) -> {:.3} dB ({})",
                first.f_ref, first.max_coupling_ref_db, first.label, last.max_coupling_ref_db, last.label
            ),
        )
    };
    let brackets = rows.iter().filter(|r| !r.bracketed).map(|r| r.label.as_str()).collect::<Vec<_>>();
    match study {
        "width" => {
            out.push(check(
                "resonance shifts up",
                true,
                last.resonance_ghz > first.resonance_ghz,
                format!("{:.4} GHz -> {:.4} GHz", first.resonance_ghz, last.resonance_ghz),
            ));
            let h: Vec<f64> = rows.iter().map(|r| r.design.h1).collect();
            let f: Vec<f64> = rows.iter().map(|r| r.resonance_ghz).collect();
            let rho = spearman(&h, &f);
            out.push(check("resonance rank-correlates with h1", true, rho >= min_spearman, format!("spearman {rho:.4} (threshold {min_spearman})")));
            out.push(coupling_drop("mutual coupling decreases"));
            out.push(check(
                "reflection at f0 increases",
                false,
                last.s11_f0_db > first.s11_f0_db,
                format!("|S11| at {} GHz: {:.3} dB -> {:.3} dB", first.f0, first.s11_f0_db, last.s11_f0_db),
            ));
        }
        "length" => {
            out.push(check(
                "resonance shifts down",
                true,
                last.resonance_ghz < first.resonance_ghz,
                format!("{:.4} GHz -> {:.4} GHz", first.resonance_ghz, last.resonance_ghz),
            ));
            let best = rows.iter().fold(first, |b, r| if r.s11_resonance_db < b.s11_resonance_db { r } else { b });
            out.push(check(
                "deepest reflection at h2 = 1 mm",
                false,
                (best.design.h2 - 1.0).abs() < 1e-9,
                format!("deepest |S11| at {} ({:.3} dB)", best.label, best.s11_resonance_db),
            ));
            let expected = ["decreases", "decreases", "increases"];
            for (k, name) in ["S12", "S13", "S14"].iter().enumerate() {
                let got = direction(first.coupling_ref_db[k], last.coupling_ref_db[k]);
                out.push(check(
                    &format!("{name} {}", expected[k]),
                    false,
                    got == expected[k],
                    format!("{:.3} dB -> {:.3} dB ({got})", first.coupling_ref_db[k], last.coupling_ref_db[k]),
                ));
            }
        }
        "both" => {
            out.push(coupling_drop("mutual coupling decreases"));
            out.push(check(
                "h1 = h2 on every row",
                true,
                rows.iter().all(|r| r.design.h1 == r.design.h2),
                format!("{} rows", rows.len()),
            ));
        }
        "optimal" => {
            out.push(check(
                "optimum cost <= baseline cost",
                true,
                last.cost_f0 <= first.cost_f0,
                format!("baseline {:.6}, optimum {:.6} at {} GHz", first.cost_f0, last.cost_f0, first.f0),
            ));
        }
        _ => {}
    }
    out.push(check(
        "all resonances bracketed",
        false,
        brackets.is_empty(),
        if brackets.is_empty() { "yes".into() } else { format!("unbracketed: {}", brackets.join(" ")) },
    ));
    out
}

fn summary_panels(points: &[(String, Vec<CsvRow>)]) -> Vec<Panel> {
    ["S11", "S12", "S13", "S14"]
        .iter()
        .enumerate()
        .map(|(k, name)| Panel {
            title: format!("|{name}|"),
            x_label: "Frequency (GHz)".into(),
            y_label: "dB".into(),
            series: points
                .iter()
                .map(|(label, rows)| Series { label: label.clone(), points: rows.iter().map(|r| (r.frequency_ghz, r.db[k])).collect() })
                .collect(),
        })
        .collect()
}

/// SVG with |S11|..|S14| panels for one or more S-parameter CSVs.
pub fn sparam_svg(points: &[(String, Vec<CsvRow>)]) -> String {
    render_svg(&summary_panels(points), 2)
}

fn summary_markdown(report: &TrendReport) -> String {
    let mut s = format!("# {} study\n\n", report.study);
    s.push_str("| point | resonance (GHz) | S11 at resonance (dB) | max coupling at f0 (dB) | max coupling at reference (dB) | cost at f0 |\n");
    s.push_str("|---|---|---|---|---|---|\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "| {} | {:.4}{} | {:.3} | {:.3} | {:.3} | {:.4} |",
            r.label,
            r.resonance_ghz,
            if r.bracketed { "" } else { " (edge)" },
            r.s11_resonance_db,
            r.max_coupling_f0_db,
            r.max_coupling_ref_db,
            r.cost_f0
        );
    }
    if let Some(r) = report.rows.first() {
        let _ = writeln!(s, "\nf0 = {} GHz; coupling reference = {:.4} GHz.", r.f0, r.f_ref);
    }
    s.push_str("\n## Checks\n\n");
    for c in &report.checks {
        let status = match (c.hard, c.passed) {
            (true, true) => "PASS",
            (true, false) => "FAIL",
            (false, true) => "agree",
            (false, false) => "disagree",
        };
        let _ = writeln!(s, "- [{status}] {}: {}", c.name, c.detail);
    }
    let _ = writeln!(s, "\nOverall: {}", if report.passed() { "PASS" } else { "FAIL" });
    s
}

/// Rebuild `summary.svg` and `summary.md` in `dir` from `report.csv` and
/// the per-point CSVs it references.
pub fn regenerate_report(dir: &Path, cfg: &StudyConfig) -> Result<TrendReport> {
    let rows = parse_report_csv(&read(&dir.join(REPORT_FILE))?)?;
    let mut points = Vec::with_capacity(rows.len());
    for r in &rows {
        points.push((r.label.clone(), parse_csv(&read(&dir.join(format!("{}.csv", r.stem)))?)?));
    }
    let report = TrendReport { study: rows[0].study.clone(), checks: evaluate_checks(&rows, cfg.min_spearman), rows };
    write(&dir.join(SUMMARY_SVG), &sparam_svg(&points))?;
    write(&dir.join(SUMMARY_MD), &summary_markdown(&report))?;
    Ok(report)
}
