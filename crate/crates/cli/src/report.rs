//! Key-value reports with attached tables.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    /// `(name, unit)`; `1` for dimensionless.
    pub columns: Vec<(String, String)>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|(n, u)| (n.to_string(), u.to_string())).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn body(&self, out: &mut String) {
        let names: Vec<&str> = self.columns.iter().map(|c| c.0.as_str()).collect();
        let _ = writeln!(out, "{}", names.join(","));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
    }

    fn column_tags(&self) -> String {
        self.columns.iter().map(|(n, u)| format!("{n}[{u}]")).collect::<Vec<_>>().join(",")
    }

    /// Stand-alone CSV with the same commented header as dataset files.
    pub fn to_csv(&self, manifest_hash: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# magnonlab table\n# name: {}\n# manifest_hash: {manifest_hash}", self.name);
        let _ = writeln!(out, "# columns: {}", self.column_tags());
        self.body(&mut out);
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<(String, String)>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn kv(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn num(&mut self, key: &str, v: f64) {
        self.kv(key, format!("{v:e}"));
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# magnonlab report\n");
        let width = self.entries.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k:<width$} = {v}");
        }
        for t in &self.tables {
            let _ = writeln!(out, "\n[table {}]\n# columns: {}", t.name, t.column_tags());
            t.body(&mut out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_entries_and_tables() {
        let mut r = Report::default();
        r.kv("protocol", "lifetime");
        r.num("tau", 3.31e-8);
        let mut t = Table::new("track", &[("t", "s"), ("ok", "1")]);
        t.push(vec![1e-9.into(), true.into()]);
        r.tables.push(t);
        let s = r.render();
        assert!(s.contains("tau      = 3.31e-8"));
        assert!(s.contains("[table track]\n# columns: t[s],ok[1]\nt,ok\n1e-9,true\n"));
        assert!(s.starts_with("# magnonlab report\nprotocol = lifetime\n"));
    }
}
