//! CSV, SVG and JSON writers. Every file is written to a temporary sibling
//! and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::Dendrogram;
use crate::error::{Error, Result};
use crate::maze::{Cell, GridMaze, StateIndex};
use crate::stimuli::{PredictorRecord, TeleportRecord};

/// Cells whose value is below this are left blank in heatmaps.
pub const DEFAULT_DISPLAY_THRESHOLD: f64 = 0.005;

/// Full-precision decimal: 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// First 16 hex digits of the SHA-256 of the value's JSON encoding.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_vec(config)?;
    let digest = Sha256::digest(&json);
    Ok(digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

/// The `#` line heading every CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvMeta {
    pub seed: u64,
    pub config_hash: String,
    pub extra: Vec<(String, String)>,
}

impl CsvMeta {
    pub fn new<T: Serialize>(seed: u64, config: &T) -> Result<Self> {
        Ok(Self { seed, config_hash: config_hash(config)?, extra: Vec::new() })
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }

    fn line(&self) -> String {
        let mut s = format!("# seed={} config_hash={}", self.seed, self.config_hash);
        for (k, v) in &self.extra {
            let _ = write!(s, " {k}={v}");
        }
        s.push('\n');
        s
    }
}

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp: PathBuf = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Renders a metadata line, a header and rows as CSV text.
pub fn csv_string(meta: &CsvMeta, header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let body = w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
    Ok(meta.line() + &String::from_utf8(body).expect("csv output is utf-8"))
}

pub fn write_csv(path: &Path, meta: &CsvMeta, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    atomic_write(path, csv_string(meta, header, rows)?.as_bytes())
}

/// Reads a CSV written by [`write_csv`] (or any CSV with a header),
/// skipping `#` lines.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

pub fn predictor_row(r: &PredictorRecord) -> Vec<String> {
    vec![
        r.maze_id.clone(),
        fmt_f64(r.partial_plan_cost),
        r.astar_expanded.to_string(),
        r.astar_inserted.to_string(),
        r.optimal_plan_length.to_string(),
        fmt_f64(r.itbr_cost),
        fmt_f64(r.softmax_entropy),
        fmt_f64(r.soft_bellman_entropy),
        r.vi_iterations.to_string(),
        fmt_f64(r.trajectory_turns),
    ]
}

pub fn teleport_row(r: &TeleportRecord) -> Vec<String> {
    let e = &r.event;
    vec![
        e.maze_id.clone(),
        e.pre_state.row.to_string(),
        e.pre_state.col.to_string(),
        e.post_state.row.to_string(),
        e.post_state.col.to_string(),
        e.step_index.to_string(),
        e.seed.to_string(),
        fmt_f64(r.partial_plan_divergence),
        r.astar_destination_nodes.to_string(),
        r.astar_node_difference.to_string(),
        r.optimal_path_length_post.to_string(),
        fmt_f64(r.teleport_distance),
    ]
}

pub const DENDROGRAM_COLUMNS: [&str; 5] = ["step", "cluster_a", "cluster_b", "height", "size"];

pub fn dendrogram_rows(d: &Dendrogram) -> Vec<Vec<String>> {
    d.merges
        .iter()
        .enumerate()
        .map(|(i, m)| vec![i.to_string(), m.a.to_string(), m.b.to_string(), fmt_f64(m.height), m.size.to_string()])
        .collect()
}

/// Heatmap of one value per open cell. Walls are dark, values below
/// `threshold` are blank, the rest shade linearly from light to dark red
/// between `threshold` and the maximum.
pub fn heatmap_svg(maze: &GridMaze, values: &[f64], threshold: f64, title: &str) -> String {
    const CELL: usize = 40;
    let index = StateIndex::new(maze);
    let (w, h) = (maze.width() * CELL, maze.height() * CELL);
    let max = values.iter().copied().filter(|v| v.is_finite()).fold(threshold, f64::max);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{}" viewBox="0 0 {w} {}">"#,
        h + 24,
        h + 24
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(s, r#"<text x="4" y="16" font-family="sans-serif" font-size="13">{}</text>"#, escape(title));
    for row in 0..maze.height() {
        for col in 0..maze.width() {
            let c = Cell::new(row, col);
            let (x, y) = (col * CELL, row * CELL + 24);
            let fill = match index.state(c) {
                None => "#333333".to_string(),
                Some(st) if values[st] >= threshold && values[st].is_finite() => {
                    let t = if max > threshold { (values[st] - threshold) / (max - threshold) } else { 1.0 };
                    let g = (225.0 * (1.0 - t)).round() as u8;
                    format!("#{:02x}{:02x}{:02x}", 255 - (95.0 * t) as u8, g, g)
                }
                Some(_) => "#ffffff".to_string(),
            };
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#bbbbbb" stroke-width="1"/>"##
            );
            let label = if c == maze.start() {
                "S"
            } else if c == maze.goal() {
                "G"
            } else {
                continue;
            };
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="18" text-anchor="middle">{label}</text>"#,
                x + CELL / 2,
                y + CELL / 2 + 6
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::parse_maze;

    #[test]
    fn seventeen_significant_digits() {
        let x = 0.1 + 0.2;
        let s = fmt_f64(x);
        assert_eq!(s, "3.0000000000000004e-1");
        assert_eq!(s.parse::<f64>().unwrap(), x);
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.csv");
        let meta = CsvMeta::new(7, &("a", 1)).unwrap().with("smoothing", 1e-6);
        let rows = vec![vec!["x,y".to_string(), fmt_f64(1.5)], vec!["z".into(), fmt_f64(-0.25)]];
        write_csv(&path, &meta, &["name", "value"], &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# seed=7 config_hash="));
        assert!(text.lines().next().unwrap().ends_with("smoothing=0.000001"));
        let (header, back) = read_csv(&path).unwrap();
        assert_eq!(header, vec!["name", "value"]);
        assert_eq!(back, rows);
        let leftovers: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }

    #[test]
    fn hash_tracks_config() {
        let a = config_hash(&(1, 2.0)).unwrap();
        assert_eq!(a.len(), 16);
        assert_eq!(a, config_hash(&(1, 2.0)).unwrap());
        assert_ne!(a, config_hash(&(1, 2.5)).unwrap());
    }

    #[test]
    fn heatmap_blanks_small_values() {
        let m = parse_maze("G.#\n..S\n").unwrap();
        let svg = heatmap_svg(&m, &[0.0, 0.001, 0.5, 1.0, 0.004], 0.005, "t");
        assert_eq!(svg.matches("fill=\"#ffffff\"").count(), 3);
        assert_eq!(svg.matches("fill=\"#333333\"").count(), 1);
        assert!(svg.contains("fill=\"#a00000\""));
    }
}
