//! gnuplot scripts with the experiment data inlined.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Relative error per grid point, one box per estimator.
    Boxplot,
    /// Mean relative error over the (N1/N, n) grid, one panel per estimator.
    Heatmap,
}

impl PlotKind {
    fn required_columns(self) -> &'static [&'static str] {
        match self {
            PlotKind::Boxplot => &["point", "estimator", "status", "rel_err"],
            PlotKind::Heatmap => &["n1_frac", "n", "estimator", "status", "rel_err"],
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boxplot" => Ok(PlotKind::Boxplot),
            "heatmap" => Ok(PlotKind::Heatmap),
            other => Err(Error::Argument(format!(
                "unknown plot kind {other:?}, expected boxplot or heatmap"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotScript {
    pub script: String,
    pub warnings: Vec<String>,
}

struct Table {
    header: Vec<String>,
    records: Vec<csv::StringRecord>,
}

impl Table {
    fn parse(text: &str, required: &[&str]) -> Result<Table> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Parse(format!("cannot read CSV header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        let missing: Vec<&str> = required
            .iter()
            .copied()
            .filter(|c| !header.iter().any(|h| h == c))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Parse(format!(
                "CSV is missing columns: {}",
                missing.join(", ")
            )));
        }
        let records = reader
            .records()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("malformed CSV row: {e}")))?;
        Ok(Table { header, records })
    }

    fn col(&self, name: &str) -> usize {
        self.header
            .iter()
            .position(|h| h == name)
            .expect("column checked")
    }

    /// `(estimator, record)` pairs for usable rows.
    fn ok_rows(&self) -> impl Iterator<Item = (&str, &csv::StringRecord)> {
        let (est, status, err) = (
            self.col("estimator"),
            self.col("status"),
            self.col("rel_err"),
        );
        self.records.iter().filter_map(move |r| {
            let ok = r.get(status) == Some("ok") && r.get(err).is_some_and(|v| !v.is_empty());
            ok.then(|| (r.get(est).unwrap_or(""), r))
        })
    }
}

pub fn emit_plot_script(csv_text: &str, kind: PlotKind) -> Result<PlotScript> {
    let table = Table::parse(csv_text, kind.required_columns())?;
    let mut warnings = Vec::new();
    if table.records.is_empty() {
        let msg = "CSV has no data rows; the script draws an empty frame".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let script = match kind {
        PlotKind::Boxplot => boxplot(&table),
        PlotKind::Heatmap => heatmap(&table),
    };
    Ok(PlotScript { script, warnings })
}

fn empty_frame(out: &mut String) {
    out.push_str("set xrange [0:1]\nset yrange [-1:1]\nplot NaN notitle\n");
}

fn boxplot(table: &Table) -> String {
    let (point, err) = (table.col("point"), table.col("rel_err"));
    let mut groups: Vec<String> = Vec::new();
    let mut data: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
    for (est, r) in table.ok_rows() {
        let label = r.get(point).unwrap_or("").to_string();
        let idx = match groups.iter().position(|g| *g == label) {
            Some(i) => i,
            None => {
                groups.push(label);
                groups.len() - 1
            }
        };
        data.entry(est.to_string())
            .or_default()
            .push((idx, r.get(err).unwrap_or("").to_string()));
    }

    let mut s = String::new();
    s.push_str("set style data boxplot\nset style boxplot nooutliers\nset boxwidth 0.3\n");
    s.push_str("set ylabel \"relative error (%)\"\nset grid ytics\nset key top right\n");
    s.push_str("set xtics rotate by -30\n");
    if data.is_empty() {
        empty_frame(&mut s);
        return s;
    }
    let tics: Vec<String> = groups
        .iter()
        .enumerate()
        .map(|(i, g)| format!("\"{g}\" {}", i + 1))
        .collect();
    let _ = writeln!(s, "set xtics ({})", tics.join(", "));
    let _ = writeln!(s, "set xrange [0.5:{}.5]", groups.len());
    for (est, rows) in &data {
        let _ = writeln!(s, "${est} << EOD");
        for (idx, v) in rows {
            let _ = writeln!(s, "{} {v}", idx + 1);
        }
        s.push_str("EOD\n");
    }
    let n = data.len() as f64;
    let plots: Vec<String> = data
        .keys()
        .enumerate()
        .map(|(k, est)| {
            let shift = 0.35 * (k as f64 - (n - 1.0) / 2.0);
            format!("${est} using ($1+{shift}):2:(0.3):1 title \"{est}\"")
        })
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

fn heatmap(table: &Table) -> String {
    let (frac, n, err) = (table.col("n1_frac"), table.col("n"), table.col("rel_err"));
    let mut cells: BTreeMap<String, BTreeMap<(String, String), (f64, usize)>> = BTreeMap::new();
    for (est, r) in table.ok_rows() {
        let Ok(v) = r.get(err).unwrap_or("").parse::<f64>() else {
            continue;
        };
        let key = (
            r.get(frac).unwrap_or("").to_string(),
            r.get(n).unwrap_or("").to_string(),
        );
        let cell = cells
            .entry(est.to_string())
            .or_default()
            .entry(key)
            .or_insert((0.0, 0));
        cell.0 += v;
        cell.1 += 1;
    }

    let mut s = String::new();
    s.push_str("set view map\nset xlabel \"N1/N\"\nset ylabel \"n\"\n");
    s.push_str("set cblabel \"|mean relative error| (%)\"\nset logscale cb\n");
    if cells.is_empty() {
        empty_frame(&mut s);
        return s;
    }
    for (est, grid) in &cells {
        let _ = writeln!(s, "${est} << EOD");
        for ((f, size), (sum, count)) in grid {
            let _ = writeln!(s, "{f} {size} {}", sum / *count as f64);
        }
        s.push_str("EOD\n");
    }
    let _ = writeln!(s, "set multiplot layout {},1", cells.len());
    for est in cells.keys() {
        let _ = writeln!(s, "set title \"{est}\"");
        let _ = writeln!(s, "plot ${est} using 1:2:(abs($3)) with image notitle");
    }
    s.push_str("unset multiplot\n");
    s
}
