//! Sweep datasets and their comma-separated file format.
//!
//! A dataset file is a commented header followed by one row per sweep point:
//!
//! ```text
//! # magnonlab dataset
//! # name: ramsey
//! # manifest_hash: 3f2a…
//! # columns: delay[s],p_e[1],stderr[1],n_shots[1],seq_duration[s]
//! delay,p_e,stderr,n_shots,seq_duration
//! 0e0,5.1e-1,1.58e-2,1000,3.2e-5
//! ```
//!
//! Every column must carry a unit tag in the `# columns:` line. Axis columns
//! come first, in row-major order (first axis slowest). Per-shot analog
//! values live in a companion `point,shot,value` table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, unit: &str, values: Vec<f64>) -> Self {
        Self {
            name: name.to_string(),
            unit: unit.to_string(),
            values,
        }
    }
}

/// Analog readout values of the shots taken at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub values: Vec<f64>,
    /// Discrimination threshold: values above it count as excited.
    pub threshold: f64,
}

impl ShotRecord {
    pub fn n_shots(&self) -> usize {
        self.values.len()
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        self.values.iter().map(move |&v| v > self.threshold)
    }

    pub fn excited_count(&self) -> usize {
        self.bits().filter(|&b| b).count()
    }

    /// Thresholded excited fraction and its standard error √(p(1−p)/N).
    pub fn estimate(&self) -> (f64, f64) {
        let n = self.values.len() as f64;
        let p = self.excited_count() as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub coords: Vec<f64>,
    /// Estimated excited-state readout probability.
    pub p_e: f64,
    pub stderr: f64,
    pub n_shots: usize,
    /// Wall-clock duration of one shot (s).
    pub seq_duration: f64,
    pub shots: Option<ShotRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDataset {
    pub name: String,
    pub axes: Vec<Axis>,
    pub points: Vec<PointRecord>,
    /// Warnings raised while producing the data.
    pub flags: Vec<String>,
    pub metadata: BTreeMap<String, String>,
}

impl SweepDataset {
    pub fn new(name: &str, axes: Vec<Axis>, points: Vec<PointRecord>) -> Result<Self> {
        let ds = Self {
            name: name.to_string(),
            axes,
            points,
            flags: Vec::new(),
            metadata: BTreeMap::new(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let expected: usize = self.shape().iter().product();
        if self.axes.is_empty() || expected != self.points.len() {
            return Err(Error::Schema(format!(
                "grid of shape {:?} needs {expected} points, dataset has {}",
                self.shape(),
                self.points.len()
            )));
        }
        for (i, p) in self.points.iter().enumerate() {
            if p.coords.len() != self.axes.len() {
                return Err(Error::Schema(format!("point {i} has wrong coordinate count")));
            }
            if p.n_shots < 1 {
                return Err(Error::Schema(format!("point {i} has no shots")));
            }
            if let Some(s) = &p.shots {
                if s.n_shots() != p.n_shots {
                    return Err(Error::Schema(format!("point {i} shot count mismatch")));
                }
            }
        }
        Ok(())
    }

    pub fn axis(&self, name: &str) -> Result<&Axis> {
        self.axes
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::Schema(format!("dataset `{}` has no axis `{name}`", self.name)))
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::Schema(format!("dataset `{}` has no axis `{name}`", self.name)))
    }

    /// Flat index from per-axis indices (row-major).
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(self.shape())
            .fold(0, |acc, (&i, n)| acc * n + i)
    }

    /// Points along the last axis for fixed leading indices.
    pub fn last_axis_slice(&self, leading: &[usize]) -> &[PointRecord] {
        let n_last = self.axes.last().map(|a| a.values.len()).unwrap_or(0);
        let mut idx = leading.to_vec();
        idx.push(0);
        let start = self.flat_index(&idx);
        &self.points[start..start + n_last]
    }

    pub fn flag(&mut self, msg: impl Into<String>) {
        self.flags.push(msg.into());
    }

    pub fn total_time(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.n_shots as f64 * p.seq_duration)
            .sum()
    }

    /// Per-point table. `manifest_hash` is written into the header.
    pub fn to_csv(&self, manifest_hash: &str) -> String {
        let mut out = String::new();
        out.push_str("# magnonlab dataset\n");
        let _ = writeln!(out, "# name: {}", self.name);
        let _ = writeln!(out, "# manifest_hash: {manifest_hash}");
        for f in &self.flags {
            let _ = writeln!(out, "# flag: {}", f.replace('\n', " "));
        }
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# meta: {k}={}", v.replace('\n', " "));
        }
        let mut cols: Vec<String> = self
            .axes
            .iter()
            .map(|a| format!("{}[{}]", a.name, a.unit))
            .collect();
        cols.extend(
            ["p_e[1]", "stderr[1]", "n_shots[1]", "seq_duration[s]"]
                .iter()
                .map(|s| s.to_string()),
        );
        let _ = writeln!(out, "# columns: {}", cols.join(","));
        let mut names: Vec<&str> = self.axes.iter().map(|a| a.name.as_str()).collect();
        names.extend(["p_e", "stderr", "n_shots", "seq_duration"]);
        let _ = writeln!(out, "{}", names.join(","));
        for p in &self.points {
            let mut row: Vec<String> = p.coords.iter().map(|c| format!("{c:e}")).collect();
            row.push(format!("{:e}", p.p_e));
            row.push(format!("{:e}", p.stderr));
            row.push(p.n_shots.to_string());
            row.push(format!("{:e}", p.seq_duration));
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    /// Companion per-shot table, `None` when shots were not kept.
    pub fn shots_to_csv(&self, manifest_hash: &str) -> Option<String> {
        if self.points.iter().any(|p| p.shots.is_none()) {
            return None;
        }
        let mut out = String::new();
        out.push_str("# magnonlab shots\n");
        let _ = writeln!(out, "# name: {}", self.name);
        let _ = writeln!(out, "# manifest_hash: {manifest_hash}");
        let thr = self.points[0].shots.as_ref().map(|s| s.threshold).unwrap_or(0.0);
        let _ = writeln!(out, "# threshold: {thr:e}");
        let _ = writeln!(out, "# columns: point[1],shot[1],value[a.u.]");
        out.push_str("point,shot,value\n");
        for (i, p) in self.points.iter().enumerate() {
            for (k, v) in p.shots.as_ref().expect("checked").values.iter().enumerate() {
                let _ = writeln!(out, "{i},{k},{v:e}");
            }
        }
        Some(out)
    }

    /// Parses a per-point table. Returns the dataset and the manifest hash found
    /// in the header (empty when absent).
    pub fn from_csv(text: &str) -> Result<(Self, String)> {
        let mut name = String::from("imported");
        let mut hash = String::new();
        let mut flags = Vec::new();
        let mut metadata = BTreeMap::new();
        let mut columns: Option<Vec<(String, String)>> = None;
        let mut header_seen = false;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                let c = c.trim();
                if let Some(v) = c.strip_prefix("name:") {
                    name = v.trim().to_string();
                } else if let Some(v) = c.strip_prefix("manifest_hash:") {
                    hash = v.trim().to_string();
                } else if let Some(v) = c.strip_prefix("flag:") {
                    flags.push(v.trim().to_string());
                } else if let Some(v) = c.strip_prefix("meta:") {
                    if let Some((k, val)) = v.trim().split_once('=') {
                        metadata.insert(k.to_string(), val.to_string());
                    }
                } else if let Some(v) = c.strip_prefix("columns:") {
                    columns = Some(parse_columns(v)?);
                }
                continue;
            }
            let cols = columns.as_ref().ok_or_else(|| {
                Error::Schema("missing `# columns:` header with unit tags".into())
            })?;
            if !header_seen {
                let names: Vec<&str> = line.split(',').map(str::trim).collect();
                if names.len() != cols.len()
                    || names.iter().zip(cols).any(|(n, (c, _))| n != c)
                {
                    return Err(Error::Schema(format!(
                        "column row `{line}` does not match the `# columns:` header"
                    )));
                }
                header_seen = true;
                continue;
            }
            let vals: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| Error::Schema(format!("line {}: {e}", lineno + 1)))?;
            if vals.len() != cols.len() {
                return Err(Error::Schema(format!(
                    "line {}: expected {} fields, got {}",
                    lineno + 1,
                    cols.len(),
                    vals.len()
                )));
            }
            rows.push(vals);
        }
        let cols = columns.ok_or_else(|| Error::Schema("missing `# columns:` header".into()))?;
        let pos = |n: &str| cols.iter().position(|(c, _)| c == n);
        let (ip, ise, ins) = match (pos("p_e"), pos("stderr"), pos("n_shots")) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => {
                return Err(Error::Schema(
                    "table needs p_e, stderr and n_shots columns".into(),
                ))
            }
        };
        let ids = pos("seq_duration");
        let n_axes = ip;
        if n_axes == 0 || ise < n_axes || ins < n_axes {
            return Err(Error::Schema("axis columns must precede the data columns".into()));
        }
        let mut axes: Vec<Axis> = cols[..n_axes]
            .iter()
            .map(|(n, u)| Axis::new(n, u, Vec::new()))
            .collect();
        for row in &rows {
            for (a, &v) in axes.iter_mut().zip(row) {
                if !a.values.contains(&v) {
                    a.values.push(v);
                }
            }
        }
        let points: Vec<PointRecord> = rows
            .iter()
            .map(|r| PointRecord {
                coords: r[..n_axes].to_vec(),
                p_e: r[ip],
                stderr: r[ise],
                n_shots: r[ins] as usize,
                seq_duration: ids.map(|i| r[i]).unwrap_or(0.0),
                shots: None,
            })
            .collect();
        let ds = SweepDataset {
            name,
            axes,
            points,
            flags,
            metadata,
        };
        ds.validate()?;
        // Row-major consistency.
        for (flat, p) in ds.points.iter().enumerate() {
            let mut rem = flat;
            let shape = ds.shape();
            let mut idx = vec![0; shape.len()];
            for k in (0..shape.len()).rev() {
                idx[k] = rem % shape[k];
                rem /= shape[k];
            }
            for (k, &i) in idx.iter().enumerate() {
                if ds.axes[k].values[i] != p.coords[k] {
                    return Err(Error::Schema(format!(
                        "row {flat} breaks the row-major grid ordering"
                    )));
                }
            }
        }
        Ok((ds, hash))
    }

    /// Attaches per-shot values parsed from a companion shots table.
    pub fn attach_shots_csv(&mut self, text: &str) -> Result<()> {
        let mut threshold = None;
        let mut per_point: Vec<Vec<f64>> = vec![Vec::new(); self.points.len()];
        let mut header = false;
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if let Some(v) = c.trim().strip_prefix("threshold:") {
                    threshold = Some(
                        v.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Schema(format!("threshold: {e}")))?,
                    );
                }
                continue;
            }
            if !header {
                if line != "point,shot,value" {
                    return Err(Error::Schema(format!("unexpected shots header `{line}`")));
                }
                header = true;
                continue;
            }
            let mut it = line.split(',');
            let (Some(p), Some(_), Some(v)) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Schema(format!("bad shots row `{line}`")));
            };
            let p: usize = p.parse().map_err(|e| Error::Schema(format!("{e}")))?;
            let v: f64 = v.parse().map_err(|e| Error::Schema(format!("{e}")))?;
            per_point
                .get_mut(p)
                .ok_or_else(|| Error::Schema(format!("shot for unknown point {p}")))?
                .push(v);
        }
        let threshold = threshold.ok_or_else(|| Error::Schema("missing threshold".into()))?;
        for (p, values) in self.points.iter_mut().zip(per_point) {
            if values.len() != p.n_shots {
                return Err(Error::Schema("shot count mismatch".into()));
            }
            p.shots = Some(ShotRecord { values, threshold });
        }
        Ok(())
    }
}

fn parse_columns(spec: &str) -> Result<Vec<(String, String)>> {
    spec.split(',')
        .map(|c| {
            let c = c.trim();
            let open = c.find('[');
            match (open, c.ends_with(']')) {
                (Some(i), true) if i > 0 && i + 1 < c.len() - 1 => {
                    Ok((c[..i].to_string(), c[i + 1..c.len() - 1].to_string()))
                }
                _ => Err(Error::Schema(format!("column `{c}` is missing a [unit] tag"))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SweepDataset {
        let axes = vec![
            Axis::new("a", "s", vec![0.0, 1e-9]),
            Axis::new("b", "Hz", vec![-1.5e6, 0.0, 2.5e6]),
        ];
        let mut points = Vec::new();
        for &a in &axes[0].values {
            for &b in &axes[1].values {
                points.push(PointRecord {
                    coords: vec![a, b],
                    p_e: 0.1 + a * 1e8 + b * 1e-8,
                    stderr: 0.01,
                    n_shots: 2,
                    seq_duration: 3.2e-5,
                    shots: Some(ShotRecord {
                        values: vec![0.1, 0.9],
                        threshold: 0.5,
                    }),
                });
            }
        }
        let mut ds = SweepDataset::new("t", axes, points).unwrap();
        ds.flag("something odd");
        ds.metadata.insert("k".into(), "v".into());
        ds
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let ds = sample();
        let text = ds.to_csv("abc");
        let (mut back, hash) = SweepDataset::from_csv(&text).unwrap();
        assert_eq!(hash, "abc");
        back.attach_shots_csv(&ds.shots_to_csv("abc").unwrap()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn missing_unit_tag_is_schema_error() {
        let text = "# columns: x,p_e[1],stderr[1]\nx,p_e,stderr\n0,0.5,0.1\n";
        let err = SweepDataset::from_csv(text).unwrap_err();
        assert!(matches!(err, Error::Schema(m) if m.contains("unit")));
    }

    #[test]
    fn rejects_ragged_grid() {
        let text = "# columns: x[s],y[s],p_e[1],stderr[1],n_shots[1]\nx,y,p_e,stderr,n_shots\n0,0,0.5,0.1,1\n0,1,0.5,0.1,1\n1,0,0.5,0.1,1\n";
        assert!(SweepDataset::from_csv(text).is_err());
    }
}
