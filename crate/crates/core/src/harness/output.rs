//! JSON for scalar results, CSV for path data. UTF-8 with LF line endings.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::{Model, ScenarioConfig};
use super::run::{ResultRecord, Provenance};
use crate::error::{Error, Result};
use crate::mc::{par_map, Estimate};
use crate::ou::euler_y_path;
use crate::vol_ou::simulate_x_path;
use serde_json::json;

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes one row per `(path, step)` with columns `path, step, t, y_0.., [x_0..]` and
/// returns terminal-mean records for each component.
pub fn write_paths_csv<W: Write>(config: &ScenarioConfig, model: &Model, sink: W) -> Result<Vec<ResultRecord>> {
    let grid = config.grid()?;
    let n = model.dim();
    let seed = config.mc.seed;
    let count = config.mc.path_count;
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = vec!["path".to_string(), "step".into(), "t".into()];
    header.extend((0..n).map(|i| format!("y_{i}")));
    if model.x.is_some() {
        header.extend((0..n).map(|i| format!("x_{i}")));
    }
    writer.write_record(&header)?;
    // paths are generated in parallel batches and written in order
    let batch = 256;
    let mut terminal_y = vec![Vec::with_capacity(count); n];
    let mut terminal_x = vec![Vec::with_capacity(count); if model.x.is_some() { n } else { 0 }];
    for start in (0..count).step_by(batch) {
        let len = batch.min(count - start);
        let chunk = par_map(len, |i| {
            let p = (start + i) as u64;
            match &model.x {
                Some(x) => simulate_x_path(x, &grid, seed, p)
                    .into_iter()
                    .map(|s| (s.y, Some(s.x)))
                    .collect::<Vec<_>>(),
                None => euler_y_path(&model.ou, &grid, seed, p).into_iter().map(|y| (y, None)).collect(),
            }
        });
        for (i, path) in chunk.iter().enumerate() {
            for (k, (y, x)) in path.iter().enumerate() {
                let mut row = vec![(start + i).to_string(), k.to_string(), grid.time(k).to_string()];
                row.extend(y.iter().map(|v| v.to_string()));
                if let Some(x) = x {
                    row.extend(x.iter().map(|v| v.to_string()));
                }
                writer.write_record(&row)?;
            }
            let (y, x) = &path[path.len() - 1];
            for (c, v) in y.iter().enumerate() {
                terminal_y[c].push(*v);
            }
            if let Some(x) = x {
                for (c, v) in x.iter().enumerate() {
                    terminal_x[c].push(*v);
                }
            }
        }
    }
    writer.flush()?;
    let record = |name: &str, comps: &[Vec<f64>]| {
        let est: Vec<Estimate> = comps.iter().map(|c| Estimate::from_samples(c)).collect();
        ResultRecord {
            name: name.into(),
            args: json!({ "t": grid.t_end(), "steps": grid.steps() }),
            value: json!(est.iter().map(|e| e.mean).collect::<Vec<_>>()),
            stderr: Some(json!(est.iter().map(|e| e.stderr).collect::<Vec<_>>())),
            provenance: Provenance::Mc,
            wall_ms: 0.0,
            paths: Some(count),
            error: None,
        }
    };
    let mut out = vec![record("terminal_mean_Y", &terminal_y)];
    if model.x.is_some() {
        out.push(record("terminal_mean_X", &terminal_x));
    }
    Ok(out)
}
