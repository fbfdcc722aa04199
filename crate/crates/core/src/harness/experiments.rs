//! Built-in experiment suites and their pass/fail property checks.
//!
//! Each suite reproduces one study as a batch job over the scenario
//! archetypes: E1 swaps an aux vehicle for the infrastructure, E2 crosses
//! ego type with range shape, E3 compares ego types under perfect and
//! simple noise, and E4 sweeps harsh noise levels. Outputs are reports,
//! flat CSV tables, an AP-versus-noise chart, and named property checks.

use std::io;
use std::path::Path;

use crate::channel::NoiseSetting;
use crate::eval::{ConfigDescriptor, EvalReport};
use crate::fusion::ranges;
use crate::scene::{open_sanity_scene, Archetype};

use super::svg::line_chart;
use super::{run_scene, ConfigError, CpMode, ExperimentConfig};

/// One acceptance property evaluated by an experiment.
#[derive(Debug, Clone)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl PropertyCheck {
    fn gate(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Everything an experiment produces.
#[derive(Debug, Clone)]
pub struct ExperimentOutputs {
    pub name: String,
    pub reports: Vec<EvalReport>,
    /// (file name, CSV content) pairs.
    pub tables: Vec<(String, String)>,
    /// (file name, SVG content) pairs.
    pub charts: Vec<(String, String)>,
    pub checks: Vec<PropertyCheck>,
}

impl ExperimentOutputs {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One line per property, `PASS`/`FAIL` prefixed.
    pub fn check_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                )
            })
            .collect()
    }

    /// Write `report.json`, every table, and every chart into `dir`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(&self.reports).expect("reports serialize");
        std::fs::write(dir.join("report.json"), json)?;
        for (name, content) in self.tables.iter().chain(self.charts.iter()) {
            std::fs::write(dir.join(name), content)?;
        }
        Ok(())
    }
}

/// Suite used by the comparative experiments.
fn intersection_suite() -> Vec<Archetype> {
    vec![
        Archetype::FourWayIntersection,
        Archetype::ThreeWayIntersection,
    ]
}

pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// Mean per-scene AP@0.7 restricted to one scenario label.
fn mean_ap70_for(report: &EvalReport, label: &str) -> Option<f64> {
    let vals: Vec<f64> = report
        .scenes
        .iter()
        .filter(|s| s.scene == label)
        .filter_map(|s| s.ap70)
        .collect();
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

fn full_rows_table(reports: &[&EvalReport]) -> String {
    let mut out = String::from(crate::eval::CSV_HEADER);
    out.push('\n');
    for r in reports {
        for row in r.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
    }
    out
}

/// E1: the value of infrastructure data in vehicle-centric CP.
///
/// NoFusion, V2V, and V2X on all four archetypes under the perfect
/// setting. Checks the merge-ramp gain, the aggregate gain, and the
/// twin-intersections no-gain case.
pub fn experiment_e1_v2v_vs_v2x(seeds: &[u64]) -> Result<ExperimentOutputs, ConfigError> {
    let archetypes = Archetype::ALL.to_vec();
    let mut reports = Vec::new();
    for mode in [CpMode::NoFusion, CpMode::V2V, CpMode::V2X] {
        let cfg = ExperimentConfig::new(mode, archetypes.clone(), seeds.to_vec());
        reports.extend(run_experiment_tagged(&cfg)?);
    }
    let (no_fusion, v2v, v2x) = (&reports[0], &reports[1], &reports[2]);

    let merge_gain = mean_ap70_for(v2x, "merge_ramp")
        .zip(mean_ap70_for(v2v, "merge_ramp"))
        .map(|(x, v)| x - v);
    let aggregate_gain = v2x.mean_ap70().zip(v2v.mean_ap70()).map(|(x, v)| x - v);
    let twin_gain = mean_ap70_for(v2x, "twin_intersections")
        .zip(mean_ap70_for(v2v, "twin_intersections"))
        .map(|(x, v)| x - v);

    let checks = vec![
        PropertyCheck::gate(
            "e1_merge_ramp_infra_gain",
            merge_gain.is_some_and(|g| g >= 0.05),
            format!("mean AP@0.7 v2x - v2v on merge_ramp = {:?} (need >= 0.05)", merge_gain),
        ),
        PropertyCheck::gate(
            "e1_aggregate_infra_gain",
            aggregate_gain.is_some_and(|g| g >= 0.0),
            format!("mean AP@0.7 v2x - v2v over all archetypes = {:?} (need >= 0)", aggregate_gain),
        ),
        PropertyCheck::gate(
            "e1_twin_intersections_no_gain",
            twin_gain.is_some_and(|g| g <= 0.02),
            format!(
                "mean AP@0.7 v2x - v2v on twin_intersections = {:?} (need <= 0.02)",
                twin_gain
            ),
        ),
    ];

    // Mode x archetype AP@0.7 matrix.
    let mut table = String::from("mode,four_way,three_way,merge_ramp,twin_intersections,overall\n");
    for (name, rep) in [("no_fusion", no_fusion), ("v2v", v2v), ("v2x", v2x)] {
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            name,
            fmt_opt(mean_ap70_for(rep, "four_way")),
            fmt_opt(mean_ap70_for(rep, "three_way")),
            fmt_opt(mean_ap70_for(rep, "merge_ramp")),
            fmt_opt(mean_ap70_for(rep, "twin_intersections")),
            fmt_opt(rep.mean_ap70()),
        ));
    }

    Ok(ExperimentOutputs {
        name: "e1".into(),
        tables: vec![
            ("table.csv".into(), table),
            (
                "rows.csv".into(),
                full_rows_table(&[no_fusion, v2v, v2x]),
            ),
        ],
        charts: Vec::new(),
        checks,
        reports,
    })
}

fn run_experiment_tagged(cfg: &ExperimentConfig) -> Result<Vec<EvalReport>, ConfigError> {
    super::run_experiment(cfg)
}

/// E2: detection-range shape by ego type (rectangle vs square for V2X and
/// I2X) on the intersection suites.
pub fn experiment_e2_range_shape(seeds: &[u64]) -> Result<ExperimentOutputs, ConfigError> {
    let suite = intersection_suite();
    let mut reports = Vec::new();
    let combos = [
        (CpMode::V2X, ranges::vehicle_rectangle()),
        (CpMode::V2X, ranges::vehicle_square()),
        (CpMode::I2X, ranges::infra_rectangle()),
        (CpMode::I2X, ranges::infra_square()),
    ];
    for (mode, range) in combos {
        let mut cfg = ExperimentConfig::new(mode, suite.clone(), seeds.to_vec());
        cfg.range = Some(range);
        reports.extend(run_experiment_tagged(&cfg)?);
    }
    let (v2x_rect, v2x_sq, i2x_rect, i2x_sq) =
        (&reports[0], &reports[1], &reports[2], &reports[3]);

    let v2x_margin = v2x_rect
        .mean_ap70()
        .zip(v2x_sq.mean_ap70())
        .map(|(r, s)| r - s);
    let i2x_margin = i2x_sq
        .mean_ap70()
        .zip(i2x_rect.mean_ap70())
        .map(|(s, r)| s - r);
    let checks = vec![
        PropertyCheck::gate(
            "e2_v2x_prefers_rectangle",
            v2x_margin.is_some_and(|m| m >= 0.02),
            format!("v2x rectangle - square AP@0.7 = {:?} (need >= 0.02)", v2x_margin),
        ),
        PropertyCheck::gate(
            "e2_i2x_prefers_square",
            i2x_margin.is_some_and(|m| m >= 0.02),
            format!("i2x square - rectangle AP@0.7 = {:?} (need >= 0.02)", i2x_margin),
        ),
    ];

    let mut table = String::from("mode,rectangle,square\n");
    table.push_str(&format!(
        "v2x,{},{}\n",
        fmt_opt(v2x_rect.mean_ap70()),
        fmt_opt(v2x_sq.mean_ap70())
    ));
    table.push_str(&format!(
        "i2x,{},{}\n",
        fmt_opt(i2x_rect.mean_ap70()),
        fmt_opt(i2x_sq.mean_ap70())
    ));

    Ok(ExperimentOutputs {
        name: "e2".into(),
        tables: vec![
            ("table.csv".into(), table),
            (
                "rows.csv".into(),
                full_rows_table(&[v2x_rect, v2x_sq, i2x_rect, i2x_sq]),
            ),
        ],
        charts: Vec::new(),
        checks,
        reports,
    })
}

/// E3: V2X vs I2X accuracy under the perfect and simple-noise settings,
/// each mode with its preferred range shape.
pub fn experiment_e3_v2x_vs_i2x(seeds: &[u64]) -> Result<ExperimentOutputs, ConfigError> {
    let suite = intersection_suite();
    let mut reports = Vec::new();
    for mode in [CpMode::V2X, CpMode::I2X] {
        let mut cfg = ExperimentConfig::new(mode, suite.clone(), seeds.to_vec());
        cfg.noise = vec![NoiseSetting::perfect(), NoiseSetting::simple()];
        reports.extend(run_experiment_tagged(&cfg)?);
    }
    let (v2x_perfect, v2x_simple, i2x_perfect, i2x_simple) =
        (&reports[0], &reports[1], &reports[2], &reports[3]);

    let simple_margin = i2x_simple
        .mean_ap70()
        .zip(v2x_simple.mean_ap70())
        .map(|(i, v)| i - v);
    let checks = vec![PropertyCheck::gate(
        "e3_i2x_wins_under_simple_noise",
        simple_margin.is_some_and(|m| m > 0.0),
        format!("i2x - v2x AP@0.7 under simple noise = {:?} (need > 0)", simple_margin),
    )];

    let mut table = String::from("mode,perfect,simple\n");
    table.push_str(&format!(
        "v2x,{},{}\n",
        fmt_opt(v2x_perfect.mean_ap70()),
        fmt_opt(v2x_simple.mean_ap70())
    ));
    table.push_str(&format!(
        "i2x,{},{}\n",
        fmt_opt(i2x_perfect.mean_ap70()),
        fmt_opt(i2x_simple.mean_ap70())
    ));

    Ok(ExperimentOutputs {
        name: "e3".into(),
        tables: vec![
            ("table.csv".into(), table),
            (
                "rows.csv".into(),
                full_rows_table(&[v2x_perfect, v2x_simple, i2x_perfect, i2x_simple]),
            ),
        ],
        charts: Vec::new(),
        checks,
        reports,
    })
}

/// E4: noise-sensitivity sweep over the harsh levels for V2X and I2X.
///
/// Checks: AP@0.7 non-increasing per level for both modes (0.01 tolerance
/// per step), I2X above V2X at the maximum level, and a strictly smaller
/// relative drop for I2X.
pub fn experiment_e4_noise_sweep(seeds: &[u64]) -> Result<ExperimentOutputs, ConfigError> {
    let suite = intersection_suite();
    let sweep = NoiseSetting::harsh_sweep();
    let mut per_mode: Vec<(CpMode, Vec<EvalReport>)> = Vec::new();
    for mode in [CpMode::V2X, CpMode::I2X] {
        let mut cfg = ExperimentConfig::new(mode, suite.clone(), seeds.to_vec());
        cfg.noise = sweep.clone();
        per_mode.push((mode, run_experiment_tagged(&cfg)?));
    }

    let curve = |reports: &[EvalReport]| -> Vec<f64> {
        reports
            .iter()
            .map(|r| r.mean_ap70().unwrap_or(0.0))
            .collect()
    };
    let v2x_curve = curve(&per_mode[0].1);
    let i2x_curve = curve(&per_mode[1].1);

    let mut checks = Vec::new();
    for (mode, c) in [("v2x", &v2x_curve), ("i2x", &i2x_curve)] {
        let monotone = c.windows(2).all(|w| w[1] <= w[0] + 0.01);
        checks.push(PropertyCheck::gate(
            &format!("e4_{mode}_ap_non_increasing"),
            monotone,
            format!("AP@0.7 by level = {c:?} (each step may rise at most 0.01)"),
        ));
    }
    let last = sweep.len() - 1;
    checks.push(PropertyCheck::gate(
        "e4_i2x_wins_at_max_noise",
        i2x_curve[last] > v2x_curve[last],
        format!(
            "at harsh{last}: i2x {:.3} vs v2x {:.3} (need i2x > v2x)",
            i2x_curve[last], v2x_curve[last]
        ),
    ));
    let rel_drop = |c: &[f64]| {
        if c[0] > 0.0 {
            (c[0] - c[last]) / c[0]
        } else {
            0.0
        }
    };
    let v2x_drop = rel_drop(&v2x_curve);
    let i2x_drop = rel_drop(&i2x_curve);
    checks.push(PropertyCheck::gate(
        "e4_i2x_smaller_relative_drop",
        i2x_drop < v2x_drop,
        format!("relative AP drop: i2x {i2x_drop:.3} vs v2x {v2x_drop:.3} (need i2x < v2x)"),
    ));

    let mut table = String::from("level,sigma_xy,sigma_yaw_deg,v2x_ap70,i2x_ap70\n");
    for (i, setting) in sweep.iter().enumerate() {
        table.push_str(&format!(
            "{},{},{},{:.4},{:.4}\n",
            i, setting.sigma_xy, setting.sigma_yaw_deg, v2x_curve[i], i2x_curve[i]
        ));
    }

    let chart = line_chart(
        "AP@0.7 vs noise level (harsh sweep)",
        "noise level",
        "AP@0.7",
        &[
            ("V2X", &to_points(&v2x_curve)),
            ("I2X", &to_points(&i2x_curve)),
        ],
    );

    let reports: Vec<EvalReport> = per_mode.into_iter().flat_map(|(_, r)| r).collect();
    Ok(ExperimentOutputs {
        name: "e4".into(),
        tables: vec![("table.csv".into(), table)],
        charts: vec![("ap_vs_noise.svg".into(), chart)],
        checks,
        reports,
    })
}

fn to_points(curve: &[f64]) -> Vec<(f64, f64)> {
    curve
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as f64, v))
        .collect()
}

/// No-fusion run on the unoccluded single-vehicle sanity scenes: confirms
/// the detector itself clears AP@0.7 >= 0.9 when nothing is hidden.
pub fn sanity_no_fusion(seeds: &[u64]) -> Result<ExperimentOutputs, ConfigError> {
    let range = ranges::vehicle_rectangle();
    let mut runs = Vec::new();
    for &seed in seeds {
        let scene = open_sanity_scene(seed, 5, 20);
        runs.push(run_scene(
            &scene,
            "open_sanity",
            seed,
            CpMode::NoFusion,
            &range,
            &crate::fusion::FusionMethod::IntermediateSum,
            &NoiseSetting::perfect(),
            0xC0FFEE,
        )?);
    }
    let report = crate::eval::report(
        ConfigDescriptor {
            cp_mode: "no_fusion".into(),
            range_shape: "rectangle".into(),
            noise: "perfect".into(),
            fusion: "intermediate_sum".into(),
            rng_seed: 0xC0FFEE,
        },
        &runs,
    );
    let mean = report.mean_ap70();
    let checks = vec![PropertyCheck::gate(
        "sanity_detector_not_bottleneck",
        mean.is_some_and(|m| m >= 0.9),
        format!("no-fusion AP@0.7 on open scenes = {:?} (need >= 0.9)", mean),
    )];
    Ok(ExperimentOutputs {
        name: "sanity".into(),
        tables: vec![("rows.csv".into(), full_rows_table(&[&report]))],
        charts: Vec::new(),
        checks,
        reports: vec![report],
    })
}
