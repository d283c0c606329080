//! Tabular rendering shared by the `csv` and `table` formats.

use std::io::Write;

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    /// Full precision; shortest round-trip representation of each number.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Num(v) => v.to_string(),
                Cell::Int(v) => v.to_string(),
                Cell::Text(s) => s.clone(),
                Cell::Empty => String::new(),
            }))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Aligned columns, numbers at six significant digits.
    pub fn render(&self) -> String {
        let cells: Vec<Vec<(String, bool)>> = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| match c {
                        Cell::Num(v) => (significant(*v, 6), true),
                        Cell::Int(v) => (v.to_string(), true),
                        Cell::Text(s) => (s.clone(), false),
                        Cell::Empty => ("-".into(), true),
                    })
                    .collect()
            })
            .collect();
        let mut width: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in &cells {
            for (w, (s, _)) in width.iter_mut().zip(row) {
                *w = (*w).max(s.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, items: Vec<(&str, bool)>| {
            let parts: Vec<String> = items
                .iter()
                .zip(&width)
                .map(|((s, right), w)| if *right { format!("{s:>w$}") } else { format!("{s:<w$}") })
                .collect();
            out.push_str(parts.join("  ").trim_end());
            out.push('\n');
        };
        line(&mut out, self.headers.iter().map(|h| (h.as_str(), false)).collect());
        for row in &cells {
            line(&mut out, row.iter().map(|(s, r)| (s.as_str(), *r)).collect());
        }
        out
    }
}

/// `v` rounded to `digits` significant digits, in fixed notation for
/// moderate magnitudes and scientific otherwise.
pub fn significant(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.prec$e}", prec = digits - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(significant(4.517104, 6), "4.51710");
        assert_eq!(significant(199.94974, 6), "199.950");
        assert_eq!(significant(0.002879123, 6), "0.00287912");
        assert_eq!(significant(-1234567.0, 6), "-1.23457e6");
        assert_eq!(significant(2.007699e-5, 6), "2.00770e-5");
        assert_eq!(significant(0.0, 6), "0");
        assert_eq!(significant(f64::INFINITY, 6), "inf");
    }

    #[test]
    fn csv_and_table_agree_on_shape() {
        let mut t = Table::new(["name", "value"]);
        t.push(vec!["a,b".into(), 1.5.into()]);
        t.push(vec!["c".into(), Cell::Empty]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "name,value\n\"a,b\",1.5\nc,\n");
        let text = t.render();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().ends_with("1.50000"));
    }
}
