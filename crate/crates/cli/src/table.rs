use serde_json::{json, Map, Value};

/// Column-oriented numeric output rendered as CSV or JSON.
pub struct Table {
    pub meta: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
    /// Extra `#` lines after the metadata line.
    pub notes: Vec<String>,
}

/// Full double precision, fixed layout.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn meta_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if !n.is_i64() && !n.is_u64() => num(f),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

impl Table {
    pub fn new(meta: Map<String, Value>, columns: Vec<String>) -> Self {
        Table { meta, columns, rows: Vec::new(), notes: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn csv(&self) -> String {
        let meta: Vec<String> = self.meta.iter().map(|(k, v)| format!("{k}={}", meta_value(v))).collect();
        let mut out = format!("# {}\n", meta.join(" "));
        for n in &self.notes {
            out += &format!("# {n}\n");
        }
        out += &self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.map(num).unwrap_or_default()).collect();
            out += &cells.join(",");
            out.push('\n');
        }
        out
    }

    pub fn json(&self, extra: Option<Value>) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let m: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(r)
                    .map(|(c, v)| (c.clone(), v.map_or(Value::Null, |v| json!(v))))
                    .collect();
                Value::Object(m)
            })
            .collect();
        let mut doc = self.meta.clone();
        doc.insert("rows".into(), Value::Array(rows));
        if let Some(Value::Object(e)) = extra {
            doc.extend(e);
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).unwrap_or_default();
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut meta = Map::new();
        meta.insert("case".into(), json!("iv"));
        meta.insert("valid_order".into(), json!("unbounded"));
        let mut t = Table::new(meta, vec!["n".into(), "g".into()]);
        t.push(vec![Some(-2.0), Some(0.1)]);
        t.push(vec![Some(0.0), None]);
        t
    }

    #[test]
    fn csv_layout() {
        let csv = sample().csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "# case=iv valid_order=unbounded");
        assert_eq!(lines[1], "n,g");
        assert_eq!(lines[2], "-2.0000000000000000e0,1.0000000000000001e-1");
        assert_eq!(lines[3], "0.0000000000000000e0,");
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.718281828459045e-300, 6.02214076e23] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_rows_are_keyed() {
        let v: Value = serde_json::from_str(&sample().json(None)).unwrap();
        assert_eq!(v["case"], "iv");
        assert_eq!(v["rows"][0]["g"], 0.1);
        assert!(v["rows"][1]["g"].is_null());
    }
}
