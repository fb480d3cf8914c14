//! Relation formatting for the shell: aligned tables or tab-separated
//! lines. Rows print in lexicographic order over all attributes with NULL
//! first; relations stay unordered sets internally, the sort is purely a
//! presentation concern.

use rxo_core::relation::Relation;
use rxo_core::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputMode {
    Aligned,
    Tabs,
}

pub fn format_relation(rel: &Relation, mode: OutputMode) -> String {
    match mode {
        OutputMode::Aligned => aligned(rel),
        OutputMode::Tabs => tabs(rel),
    }
}

fn cell(v: &Value, mode: OutputMode) -> String {
    match (v, mode) {
        (Value::Null, OutputMode::Aligned) => String::new(),
        (Value::Null, OutputMode::Tabs) => "\\N".into(),
        (Value::String(s), OutputMode::Tabs) => {
            let mut out = String::with_capacity(s.len());
            for c in s.chars() {
                match c {
                    '\\' => out.push_str("\\\\"),
                    '\t' => out.push_str("\\t"),
                    '\n' => out.push_str("\\n"),
                    c => out.push(c),
                }
            }
            out
        }
        (v, _) => v.render(),
    }
}

fn aligned(rel: &Relation) -> String {
    let headers: Vec<String> = rel.schema().names().map(|n| n.to_string()).collect();
    // tuples iterate in sorted order already
    let rows: Vec<Vec<String>> = rel
        .iter()
        .map(|t| {
            t.values()
                .iter()
                .map(|v| cell(v, OutputMode::Aligned))
                .collect()
        })
        .collect();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let emit = |out: &mut String, cells: &[String]| {
        let line: Vec<String> = cells
            .iter()
            .zip(widths.iter())
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    };
    emit(&mut out, &headers);
    let dashes: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    emit(&mut out, &dashes);
    for row in &rows {
        emit(&mut out, row);
    }
    out
}

fn tabs(rel: &Relation) -> String {
    let mut out = String::new();
    let headers: Vec<String> = rel.schema().names().map(|n| n.to_string()).collect();
    out.push_str(&headers.join("\t"));
    out.push('\n');
    for t in rel.iter() {
        let row: Vec<String> = t
            .values()
            .iter()
            .map(|v| cell(v, OutputMode::Tabs))
            .collect();
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rxo_core::relation::Schema;
    use rxo_core::value::Domain;

    fn sample() -> Relation {
        Relation::from_rows(
            Schema::of(&[("DocN", Domain::String), ("Items.Pieces", Domain::Integer)]),
            vec![
                vec![Value::String("Ship3".into()), Value::Null],
                vec![Value::String("Ship1".into()), Value::Integer(2)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn aligned_blank_nulls_and_sorting() {
        let text = format_relation(&sample(), OutputMode::Aligned);
        assert_eq!(
            text,
            "DocN   Items.Pieces\n-----  ------------\nShip1  2\nShip3\n"
        );
    }

    #[test]
    fn tab_mode_uses_null_marker() {
        let text = format_relation(&sample(), OutputMode::Tabs);
        assert_eq!(text, "DocN\tItems.Pieces\nShip1\t2\nShip3\t\\N\n");
    }

    #[test]
    fn empty_relation_prints_header_only() {
        let rel = Relation::new(Schema::of(&[("Amount", Domain::Float)]));
        assert_eq!(
            format_relation(&rel, OutputMode::Aligned),
            "Amount\n------\n"
        );
    }

    #[test]
    fn float_amount_renders_without_trailing_zeros() {
        let rel = Relation::from_rows(
            Schema::of(&[("Amount", Domain::Float)]),
            vec![vec![Value::Float(1520.0)]],
        )
        .unwrap();
        assert_eq!(
            format_relation(&rel, OutputMode::Aligned),
            "Amount\n------\n1520\n"
        );
    }
}
