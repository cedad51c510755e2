use std::fs;
use std::path::{Path, PathBuf};

use super::run::{EllipsoidStudy, ResultRecord};
use crate::fim::ellipsoid_record;
use crate::{Error, Result};

/// Provenance written next to every result set.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    /// Canonical configuration text.
    pub config: String,
    pub root_seed: u64,
    pub sweep_variable: String,
}

impl RunMeta {
    fn render(&self) -> String {
        format!(
            "version = {}\nroot_seed = {}\nsweep_variable = {}\n# configuration\n{}",
            env!("CARGO_PKG_VERSION"),
            self.root_seed,
            self.sweep_variable,
            self.config
        )
    }
}

/// Write several files into `dir`: all temporaries first, then renames, so a
/// failure leaves no partial output.
pub fn write_atomic_set(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut temps: Vec<(PathBuf, PathBuf)> = Vec::new();
    for (name, bytes) in files {
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&tmp, bytes) {
            for (t, _) in &temps {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(e.into());
        }
        temps.push((tmp, dir.join(name)));
    }
    for (tmp, dst) in temps {
        fs::rename(tmp, dst)?;
    }
    Ok(())
}

fn results_csv(records: &[ResultRecord], sweep_variable: &str) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        sweep_variable,
        "variant",
        "mean_sum_rate",
        "stderr_sum_rate",
        "rms_miss_distance",
        "stderr_rms_miss",
        "mean_crlb_position_bound",
        "mean_eta",
        "trials_used",
        "failures_total",
        "failures",
    ])?;
    for r in records {
        let fails = r.failures.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
        w.write_record([
            r.sweep_value.to_string(),
            r.variant.label().to_string(),
            r.mean_sum_rate.to_string(),
            r.stderr_sum_rate.to_string(),
            r.rms_miss_distance.to_string(),
            r.stderr_rms_miss.to_string(),
            r.mean_crlb_position_bound.to_string(),
            r.mean_eta.to_string(),
            r.trials_used.to_string(),
            r.failures_total().to_string(),
            fails,
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn plot_script(records: &[ResultRecord], sweep_variable: &str) -> String {
    let mut variants: Vec<&str> = records.iter().map(|r| r.variant.label()).collect();
    variants.sort();
    variants.dedup();
    let series = |col_mean: usize, col_err: usize| {
        variants
            .iter()
            .map(|v| {
                format!(
                    "'results.csv' using 1:(strcol(2) eq \"{v}\" ? ${col_mean} : 1/0):(strcol(2) eq \"{v}\" ? ${col_err} : 1/0) with yerrorlines title \"{v}\""
                )
            })
            .collect::<Vec<_>>()
            .join(", \\\n     ")
    };
    format!(
        "# gnuplot script for results.csv\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set terminal pngcairo size 1200,480\n\
         set output 'results.png'\n\
         set multiplot layout 1,2\n\
         set grid\n\
         set xlabel '{sweep_variable}'\n\
         set ylabel 'sum rate (bit/s/Hz)'\n\
         set title 'Sum rate'\n\
         plot {}\n\
         set ylabel 'RMS miss distance (m)'\n\
         set logscale y\n\
         set title 'Eavesdropper RMS miss distance'\n\
         plot {}\n\
         unset multiplot\n",
        series(3, 4),
        series(5, 6)
    )
}

/// Write `results.csv`, `plot.gp` and `run.meta` into `dir`.
pub fn emit_outputs(records: &[ResultRecord], dir: &Path, meta: &RunMeta) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Domain("no records to write".into()));
    }
    let csv = results_csv(records, &meta.sweep_variable)?;
    let plot = plot_script(records, &meta.sweep_variable).into_bytes();
    write_atomic_set(dir, &[("results.csv", csv), ("plot.gp", plot), ("run.meta", meta.render().into_bytes())])
}

/// Write `ellipsoids.csv`, `estimates.csv`, `ellipsoid.gp` and `run.meta`.
pub fn emit_ellipsoid_outputs(study: &EllipsoidStudy, dir: &Path, meta: &RunMeta) -> Result<()> {
    if study.variants.is_empty() {
        return Err(Error::Domain("no ellipsoids to write".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let (head, _) = ellipsoid_record(&study.variants[0].ellipsoid);
    let mut header = vec!["variant".to_string()];
    header.extend(head);
    header.extend(["position_bound", "ill_conditioned", "estimates", "failures", "coverage"].map(String::from));
    w.write_record(&header)?;
    for v in &study.variants {
        let (_, row) = ellipsoid_record(&v.ellipsoid);
        let mut r = vec![v.variant.label().to_string()];
        r.extend(row);
        r.push(v.position_bound.to_string());
        r.push(v.ill_conditioned.to_string());
        r.push(v.estimates.len().to_string());
        r.push(v.failures.values().sum::<usize>().to_string());
        r.push(v.coverage.to_string());
        w.write_record(&r)?;
    }
    let ell = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["variant", "index", "x", "y", "z", "inside"])?;
    for v in &study.variants {
        for (i, p) in v.estimates.iter().enumerate() {
            w.write_record([
                v.variant.label().to_string(),
                i.to_string(),
                p.x.to_string(),
                p.y.to_string(),
                p.z.to_string(),
                v.ellipsoid.contains(*p).to_string(),
            ])?;
        }
    }
    let est = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let mut plot = String::from(
        "# gnuplot script for the ellipsoid study (x-y projection)\n\
         set datafile separator ','\n\
         set terminal pngcairo size 800,800\n\
         set output 'ellipsoid.png'\n\
         set size ratio -1\n\
         set xlabel 'x (m)'\n\
         set ylabel 'y (m)'\n\
         set parametric\n\
         set trange [0:2*pi]\n",
    );
    let mut parts = Vec::new();
    for v in &study.variants {
        let e = &v.ellipsoid;
        // shadow of the ellipsoid on the x-y plane from the covariance block
        let c = e.covariance;
        let (a, b, d) = (c[(0, 0)], c[(0, 1)], c[(1, 1)]);
        let tr = 0.5 * (a + d);
        let disc = (0.25 * (a - d).powi(2) + b * b).sqrt();
        let (l1, l2) = (tr + disc, (tr - disc).max(0.0));
        let ang = 0.5 * (2.0 * b).atan2(a - d);
        let q = e.quantile;
        let (r1, r2) = ((q * l1).sqrt(), (q * l2).sqrt());
        let (cx, cy) = (e.center.x, e.center.y);
        let (ca, sa) = (ang.cos(), ang.sin());
        parts.push(format!(
            "{cx} + {r1}*cos(t)*{ca} - {r2}*sin(t)*{sa}, {cy} + {r1}*cos(t)*{sa} + {r2}*sin(t)*{ca} with lines title '{} 95%'",
            v.variant.label()
        ));
        parts.push(format!(
            "'estimates.csv' using (strcol(1) eq \"{0}\" ? $3 : 1/0):4 with points title '{0} estimates'",
            v.variant.label()
        ));
    }
    plot.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
    write_atomic_set(
        dir,
        &[
            ("ellipsoids.csv", ell),
            ("estimates.csv", est),
            ("ellipsoid.gp", plot.into_bytes()),
            ("run.meta", meta.render().into_bytes()),
        ],
    )
}
