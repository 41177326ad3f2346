//! `amiev eval`: texture-quality metrics with a text/CSV report and
//! heatmaps.

use crate::util::{ensure_out_dir, load_events, resolution_from_kv, CliError, CliResult};
use amiev_core::config::KvFile;
use amiev_core::events::{accumulate_iwe, Binning, EventStream, Iwe};
use amiev_core::geometry::GroundTruthEdges;
use amiev_core::metrics::{
    binarized_entropy, default_thresholds, kde_density_variance, ods_f_from_iwe, write_iwe_heatmap,
    EdgeMap, KdeBandwidth, MetricsReport,
};
use amiev_core::pgm;
use std::path::Path;

struct EvalSettings {
    match_radius: f64,
    thresholds: usize,
    gt_tolerance: f64,
    bandwidth: Option<KdeBandwidth>,
}

fn settings_from_kv(kv: &KvFile) -> CliResult<EvalSettings> {
    let bandwidth = match (kv.get("kde_hx"), kv.get("kde_hy"), kv.get("kde_ht")) {
        (None, None, None) => None,
        _ => Some(KdeBandwidth {
            hx: kv.parse_value("kde_hx")?,
            hy: kv.parse_value("kde_hy")?,
            ht: kv.parse_value("kde_ht")?,
        }),
    };
    Ok(EvalSettings {
        match_radius: kv.parse_or("match_radius_px", 2.0)?,
        thresholds: kv.parse_or("thresholds", 8)?,
        gt_tolerance: kv.parse_or("gt_tolerance_px", 0.5)?,
        bandwidth,
    })
}

fn eval_stream(
    report: &mut MetricsReport,
    prefix: &str,
    stream: &EventStream,
    gt: Option<&GroundTruthEdges>,
    settings: &EvalSettings,
    out: &Path,
) -> CliResult {
    let (iwe, _) = accumulate_iwe(stream, Binning::Nearest);
    report.push(&format!("{prefix}_events"), stream.len() as f64);
    report.push(&format!("{prefix}_entropy_bits"), binarized_entropy(&iwe));
    let density = kde_density_variance(stream, settings.bandwidth)?;
    report.push(&format!("{prefix}_kde_variance"), density.variance);
    report.push(&format!("{prefix}_kde_mean"), density.mean);
    report.push(&format!("{prefix}_low_density_fraction"), density.low_density_fraction);
    if let Some(gt) = gt {
        let gt_map = EdgeMap::from_geometry(gt, iwe.width(), iwe.height(), settings.gt_tolerance);
        let thresholds = default_thresholds(&iwe, settings.thresholds);
        let (best, _) = ods_f_from_iwe(&iwe, &gt_map, settings.match_radius, &thresholds)?;
        report.push(&format!("{prefix}_ods_f"), best);
    }
    let heatmap = out.join(format!("{prefix}_iwe.pgm"));
    write_iwe_heatmap(&iwe, &heatmap)?;
    println!("wrote {}", heatmap.display());
    Ok(())
}

fn eval_iwe(
    report: &mut MetricsReport,
    iwe: &Iwe,
    gt: Option<&GroundTruthEdges>,
    settings: &EvalSettings,
) -> CliResult {
    report.push("iwe_entropy_bits", binarized_entropy(iwe));
    if let Some(gt) = gt {
        let gt_map = EdgeMap::from_geometry(gt, iwe.width(), iwe.height(), settings.gt_tolerance);
        let thresholds = default_thresholds(iwe, settings.thresholds);
        let (best, _) = ods_f_from_iwe(iwe, &gt_map, settings.match_radius, &thresholds)?;
        report.push("iwe_ods_f", best);
    }
    Ok(())
}

pub fn run(
    events: Option<&Path>,
    baseline: Option<&Path>,
    iwe: Option<&Path>,
    gt: Option<&Path>,
    config: Option<&Path>,
    out: &Path,
) -> CliResult {
    let kv = match config {
        Some(path) => KvFile::from_path(path)?,
        None => KvFile::new(),
    };
    let settings = settings_from_kv(&kv)?;
    let resolution = resolution_from_kv(&kv)?;
    let gt = gt.map(GroundTruthEdges::read_csv).transpose()?;
    ensure_out_dir(out)?;

    let mut report = MetricsReport::new();
    let mut evaluated = false;
    if let Some(path) = events {
        let (stream, _) = load_events(path, resolution)?;
        eval_stream(&mut report, "events", &stream, gt.as_ref(), &settings, out)?;
        evaluated = true;
    }
    if let Some(path) = baseline {
        let (stream, _) = load_events(path, resolution)?;
        eval_stream(&mut report, "baseline", &stream, gt.as_ref(), &settings, out)?;
        evaluated = true;
    }
    if let Some(path) = iwe {
        let image = pgm::read_pgm(path)?;
        if image.width > u16::MAX as u32 || image.height > u16::MAX as u32 {
            return Err(CliError::Usage("accumulation image too large".to_string()));
        }
        let counts: Vec<f64> = image.samples.iter().map(|&s| s as f64).collect();
        let iwe = Iwe::from_counts(image.width as u16, image.height as u16, counts);
        eval_iwe(&mut report, &iwe, gt.as_ref(), &settings)?;
        evaluated = true;
    }
    if !evaluated {
        return Err(CliError::Usage("need --events, --baseline, or --iwe".to_string()));
    }

    let text_path = out.join("report.txt");
    let csv_path = out.join("report.csv");
    report.write(&text_path, &csv_path)?;
    print!("{}", report.to_text());
    println!("wrote {}", text_path.display());
    println!("wrote {}", csv_path.display());
    Ok(())
}
