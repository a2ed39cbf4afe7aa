use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Tsv,
}

/// Renders a report. TSV takes the "rows" array when present, else the top-level record.
pub fn emit(v: &Value, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string(v).expect("json values serialize");
            s.push('\n');
            s
        }
        Format::Tsv => {
            let rows: Vec<&Value> = match v.get("rows") {
                Some(Value::Array(rows)) => rows.iter().collect(),
                _ => vec![v],
            };
            tsv(&rows)
        }
    }
}

fn tsv(rows: &[&Value]) -> String {
    let mut header: Vec<String> = Vec::new();
    for r in rows {
        if let Value::Object(m) = r {
            for k in m.keys() {
                if !header.contains(k) {
                    header.push(k.clone());
                }
            }
        }
    }
    let mut out = header.join("\t");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = header.iter().map(|k| cell(r.get(k))).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => serde_json::to_string(other).expect("json values serialize"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn tsv_rows() {
        let v = json!({"rows": [{"a": "3/2", "b": 2}, {"a": "1", "b": null}]});
        assert_eq!(emit(&v, Format::Tsv), "a\tb\n3/2\t2\n1\t\n");
        let single = json!({"x": [1, 2], "y": true});
        assert_eq!(emit(&single, Format::Tsv), "x\ty\n[1,2]\ttrue\n");
    }

    #[test]
    fn json_is_compact() {
        assert_eq!(emit(&json!({"thm12_mu": "5/2"}), Format::Json), "{\"thm12_mu\":\"5/2\"}\n");
    }
}
