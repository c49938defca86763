use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use paintlidar_core::analysis::{self, io as results_io, Grouping};
use paintlidar_core::cloud_io::{self, CloudHeader};
use paintlidar_core::paints::{load_paint_table, PaintTable};
use paintlidar_core::pem::{self, io as pem_io, ErrorModel, PemSettings};
use paintlidar_core::scenario::{config_hash, Scenario};
use paintlidar_core::scanner::scan;
use paintlidar_core::{Error, RandomStream};

use crate::manifest::{self, Entry};
use crate::{
    ApplyArgs, CalibrateArgs, CloudFormat, Command, PaintTableArgs, ReportArgs, SimulateArgs, SweepArgs,
    ValidateArgs,
};

const DEFAULT_SCENARIO: &str = include_str!("../../../scenarios/default.toml");

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Report(a) => report(a),
        Command::PemCalibrate(a) => pem_calibrate(a),
        Command::PemApply(a) => pem_apply(a),
        Command::PemValidate(a) => pem_validate(a),
        Command::PaintTable(a) => paint_table(a),
    }
}

fn load_scenario(path: Option<&Path>, seed: Option<u64>) -> Result<Scenario> {
    let mut scenario = match path {
        Some(p) => Scenario::load(p)?,
        None => Scenario::parse(DEFAULT_SCENARIO, "<built-in default scenario>", Path::new("."))?,
    };
    if let Some(seed) = seed {
        scenario.scene.seed = seed;
    }
    Ok(scenario)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e }.into())
}

/// Artifact writer that also records each file in the manifest.
struct Outputs<'a> {
    out: &'a Path,
    subcommand: &'static str,
    seed: Option<u64>,
    config_hash: String,
    written: Vec<(String, Entry)>,
}

impl<'a> Outputs<'a> {
    fn new(out: &'a Path, subcommand: &'static str, seed: Option<u64>, config_hash: String) -> Self {
        Self { out, subcommand, seed, config_hash, written: Vec::new() }
    }

    fn write(&mut self, relative: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.out.join(relative);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push((
            relative.to_string(),
            Entry {
                subcommand: self.subcommand.to_string(),
                seed: self.seed.map(|s| s.to_string()),
                config_hash: self.config_hash.clone(),
            },
        ));
        Ok(path)
    }

    fn finish(self) -> Result<()> {
        manifest::record(self.out, &self.written)
    }
}

fn file_name(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let scenario = load_scenario(a.scenario.as_deref(), a.seed)?;
    let scene = &scenario.scene;
    let hash = scenario.config_hash()?;
    let cloud = scan(scene, &RandomStream::new(scene.seed, format!("scan/{}", scene.scene_id)))?;
    let header = CloudHeader { scene_id: scene.scene_id.clone(), seed: scene.seed, config_hash: hash.clone() };

    let mut bytes = Vec::new();
    let ext = match a.format {
        CloudFormat::Text => {
            cloud_io::write_text(&mut bytes, &header, &cloud)?;
            "txt"
        }
        CloudFormat::Binary => {
            cloud_io::write_binary(&mut bytes, &header, &cloud)?;
            "bin"
        }
        CloudFormat::Csv => {
            cloud_io::write_csv(&mut bytes, &header, &cloud)?;
            "csv"
        }
    };
    let stem = file_name(&scene.scene_id);
    let mut outputs = Outputs::new(&a.common.out, "simulate", Some(scene.seed), hash);
    let cloud_path = outputs.write(&format!("clouds/{stem}.{ext}"), &bytes)?;

    let mut summary = String::from("panel,paint_code,mean,variance,count\n");
    for (g, panel) in scene.panel_geometries().iter().zip(&scene.panels) {
        let roi = analysis::extract_panel_roi(&cloud, g, analysis::DEFAULT_ROI_MARGIN);
        let stats = match analysis::intensity_stats(&roi) {
            Ok(s) => s,
            Err(Error::EmptyRoi) => analysis::IntensityStats::EMPTY,
            Err(e) => return Err(e.into()),
        };
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            g.index, panel.paint.panel_code, stats.mean, stats.variance, stats.count
        ));
    }
    outputs.write(&format!("reports/{stem}_summary.csv"), &summary)?;
    outputs.finish()?;
    print!("{summary}");
    eprintln!("wrote {} ({} points)", cloud_path.display(), cloud.len());
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let scenario = load_scenario(a.scenario.as_deref(), a.seed)?;
    let mut settings = scenario.sweep.clone().unwrap_or_default();
    if let Some(paints) = a.paints {
        for code in &paints {
            scenario.paints.require(code)?;
        }
        settings.paints = paints;
    }
    settings.validate()?;
    let pem_settings = scenario.pem.clone().unwrap_or_default();
    let grid = analysis::SweepGrid::from_settings(&settings, &scenario.paints, scenario.scene.seed);
    let result = analysis::run_sweep(&grid, &scenario.scene, &scenario.paints, &settings.options(&pem_settings))?;
    let aggregated = analysis::aggregate_runs(&result.records);

    let mut outputs = Outputs::new(&a.common.out, "sweep", Some(grid.seed), scenario.config_hash()?);
    outputs.write("results/results.csv", results_io::results_csv(&result.records))?;
    outputs.write("results/aggregated.csv", results_io::aggregated_csv(&aggregated))?;
    outputs.write("results/error_records.csv", pem_io::error_records_csv(&result.errors))?;
    outputs.write("results/ground_truth.csv", pem_io::ground_truth_csv(&result.ground_truth))?;
    outputs.finish()?;
    let unreliable = result.records.iter().filter(|r| !r.reliable).count();
    eprintln!(
        "{} records ({} unreliable) written to {}",
        result.records.len(),
        unreliable,
        a.common.out.join("results").display()
    );
    Ok(())
}

fn paints_for(table: Option<&Path>) -> Result<PaintTable> {
    Ok(match table {
        Some(p) => load_paint_table(p)?,
        None => PaintTable::builtin(),
    })
}

fn report(a: ReportArgs) -> Result<()> {
    let results_path = a.results.unwrap_or_else(|| a.common.out.join("results/results.csv"));
    let text = read(&results_path)?;
    let records = results_io::parse_results(&text, &results_path.display().to_string())?;
    let paints = paints_for(a.table.as_deref())?;
    let aggregated = analysis::aggregate_runs(&records);
    let mut groups = Vec::new();
    for g in Grouping::ALL {
        groups.extend(analysis::group_compare(&aggregated, &paints, g)?);
    }
    let trends = analysis::trend_check(&aggregated);
    let plot = analysis::plot_series(&aggregated, &paints)?;

    let hash = config_hash(&format!("{}\n{}", results_io::aggregated_csv(&aggregated), paints.to_toml()));
    let mut outputs = Outputs::new(&a.common.out, "report", None, hash);
    outputs.write("reports/groups.csv", results_io::groups_csv(&groups))?;
    outputs.write("reports/trends.csv", results_io::trend_csv(&trends))?;
    let mut failures = trends.failures.join("\n");
    if !failures.is_empty() {
        failures.push('\n');
    }
    outputs.write("reports/trend_failures.txt", &failures)?;
    outputs.write("reports/plot_data.csv", results_io::plot_csv(&plot))?;
    outputs.finish()?;

    for p in &trends.paints {
        println!(
            "{:<12} angle-monotone={} distance-monotone={} knee={}",
            p.panel_code, p.angle_monotone, p.distance_monotone, p.knee_present
        );
    }
    for f in &trends.failures {
        eprintln!("trend: {f}");
    }
    Ok(())
}

fn source_date() -> Option<String> {
    let epoch: i64 = std::env::var("SOURCE_DATE_EPOCH").ok()?.trim().parse().ok()?;
    let t = time::OffsetDateTime::from_unix_timestamp(epoch).ok()?;
    Some(t.date().to_string())
}

fn pem_calibrate(a: CalibrateArgs) -> Result<()> {
    let records_path = a.records.unwrap_or_else(|| a.common.out.join("results/error_records.csv"));
    let text = read(&records_path)?;
    let records = pem_io::parse_error_records(&text, &records_path.display().to_string())?;
    let settings = match &a.scenario {
        Some(p) => Scenario::load(p)?.pem.unwrap_or_default(),
        None => PemSettings::default(),
    };
    let mut model = pem::calibrate(&records, &settings.binning())?;
    let grid_hash = config_hash(&text);
    model.metadata = pem::ModelMetadata {
        seed: a.seed.map(|s| s.to_string()),
        grid_hash: Some(grid_hash.clone()),
        calibration_date: source_date(),
    };
    let mut outputs = Outputs::new(&a.common.out, "pem-calibrate", a.seed, grid_hash);
    let path = outputs.write("models/error_model.toml", model.to_toml())?;
    outputs.finish()?;
    for b in model.bins.iter().filter(|b| b.low_confidence) {
        eprintln!("low confidence: {} ({} samples, {} true positives)", b.label(), b.sample_count, b.true_positives);
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn load_model(model: Option<PathBuf>, out: &Path) -> Result<(ErrorModel, String)> {
    let path = model.unwrap_or_else(|| out.join("models/error_model.toml"));
    let text = read(&path)?;
    Ok((ErrorModel::parse(&text, &path.display().to_string())?, text))
}

fn pem_apply(a: ApplyArgs) -> Result<()> {
    let (model, model_text) = load_model(a.model, &a.common.out)?;
    let gt_text = read(&a.gt)?;
    let gt = pem_io::parse_ground_truth(&gt_text, &a.gt.display().to_string())?;
    let outcome = pem::apply(&model, &gt, &RandomStream::new(a.seed, "pem-apply"), a.allow_fallback)?;
    let hash = config_hash(&format!("{model_text}\n{gt_text}"));
    let mut outputs = Outputs::new(&a.common.out, "pem-apply", Some(a.seed), hash);
    let path = outputs.write("results/perceived_objects.csv", pem_io::perceived_csv(&outcome.objects))?;
    outputs.finish()?;
    for id in &outcome.fallbacks {
        eprintln!("fallback: `{id}` served by the nearest populated bin");
    }
    eprintln!("wrote {} ({} objects from {} ground-truth objects)", path.display(), outcome.objects.len(), gt.len());
    Ok(())
}

fn triple(x: Option<[f64; 3]>) -> [String; 3] {
    x.map_or_else(Default::default, |v| v.map(|c| c.to_string()))
}

fn pair(x: Option<[f64; 2]>) -> [String; 2] {
    x.map_or_else(Default::default, |v| v.map(|c| c.to_string()))
}

fn pem_validate(a: ValidateArgs) -> Result<()> {
    let (model, model_text) = load_model(a.model, &a.common.out)?;
    let text = read(&a.records)?;
    let held_out = pem_io::parse_error_records(&text, &a.records.display().to_string())?;
    let report = pem::validate(&model, &held_out)?;
    let mut csv = String::from(
        "bin,model_samples,held_out_samples,detection_probability,false_positive_rate,\
center_mean_x,center_mean_y,center_mean_z,center_std_x,center_std_y,center_std_z,\
extent_mean_width,extent_mean_height,extent_std_width,extent_std_height\n",
    );
    for b in &report.bins {
        let opt = |x: Option<f64>| x.map(|x| x.to_string()).unwrap_or_default();
        let cells: Vec<String> = [b.bin.clone(), b.model_samples.to_string(), b.held_out_samples.to_string()]
            .into_iter()
            .chain([opt(b.detection_probability), opt(b.false_positive_rate)])
            .chain(triple(b.center_error_mean))
            .chain(triple(b.center_error_std))
            .chain(pair(b.extent_error_mean))
            .chain(pair(b.extent_error_std))
            .collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    let hash = config_hash(&format!("{model_text}\n{text}"));
    let mut outputs = Outputs::new(&a.common.out, "pem-validate", None, hash);
    let path = outputs.write("reports/divergence.csv", &csv)?;
    outputs.finish()?;
    println!("max detection divergence: {}", report.max_detection_divergence());
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn paint_table(a: PaintTableArgs) -> Result<()> {
    let table = paints_for(a.table.as_deref())?;
    if table.is_empty() {
        bail!("paint table is empty");
    }
    for w in table.ordering_warnings() {
        eprintln!("warning: {w}");
    }
    print!("{}", table.to_toml());
    Ok(())
}
