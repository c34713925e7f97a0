//! Reading analysis inputs.
//!
//! Three delimited-text layouts are accepted (comma, tab or whitespace
//! separated, `#` starts a comment):
//!
//! - aggregated counts: header `z,x,y,count`, one row per cell, all 8 cells;
//! - a conditional law: header `z,x,y,p`, all 8 cells;
//! - unit records: `z,x,y` per line, header optional.
//!
//! A JSON document produced by this tool is also accepted; its `counts` or
//! `law` member (top level or under `inputs`) is used.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use ivpi_core::model::{law_from_counts, CellTable, ObservedLaw, TrialCounts};
use serde_json::Value;

#[derive(Debug, Clone)]
pub enum Input {
    Counts(TrialCounts),
    Law(ObservedLaw),
}

impl Input {
    pub fn law(&self) -> ObservedLaw {
        match self {
            Input::Counts(c) => law_from_counts(c),
            Input::Law(l) => l.clone(),
        }
    }

    pub fn counts(&self) -> Option<&TrialCounts> {
        match self {
            Input::Counts(c) => Some(c),
            Input::Law(_) => None,
        }
    }
}

pub fn read_input(path: &Path) -> Result<Input> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_input(&text).with_context(|| format!("{}", path.display()))
}

pub fn parse_input(text: &str) -> Result<Input> {
    if text.trim_start().starts_with('{') {
        return parse_json(text);
    }
    let lines: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let fields = l
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            (i, fields)
        })
        .collect();
    let Some((_, first)) = lines.first() else {
        bail!("input is empty");
    };

    let has_header = first
        .iter()
        .any(|f| f.chars().any(|c| c.is_ascii_alphabetic()));
    if !has_header {
        return match first.len() {
            3 => parse_units(&lines, [0, 1, 2]),
            4 => parse_cells(&lines, Columns::positional(), Value4::Count),
            n => bail!(
                "line {}: expected 3 (z,x,y) or 4 (z,x,y,count) fields, found {n}",
                lines[0].0
            ),
        };
    }

    let header: Vec<String> = first.iter().map(|h| h.to_ascii_lowercase()).collect();
    let find = |name: &str| header.iter().position(|h| h == name);
    let z = find("z").ok_or_else(|| anyhow!("line {}: header lacks column 'z'", lines[0].0))?;
    let x = find("x").ok_or_else(|| anyhow!("line {}: header lacks column 'x'", lines[0].0))?;
    let y = find("y").ok_or_else(|| anyhow!("line {}: header lacks column 'y'", lines[0].0))?;
    let body = &lines[1..];
    if let Some(count) = find("count").or_else(|| find("n")) {
        parse_cells(
            body,
            Columns {
                z,
                x,
                y,
                value: count,
                width: header.len(),
            },
            Value4::Count,
        )
    } else if let Some(p) = find("p").or_else(|| find("prob")) {
        parse_cells(
            body,
            Columns {
                z,
                x,
                y,
                value: p,
                width: header.len(),
            },
            Value4::Prob,
        )
    } else if header.len() == 3 {
        parse_units(body, [z, x, y])
    } else {
        bail!(
            "line {}: header must name z, x, y and optionally count or p",
            lines[0].0
        )
    }
}

struct Columns {
    z: usize,
    x: usize,
    y: usize,
    value: usize,
    width: usize,
}

impl Columns {
    fn positional() -> Self {
        Columns {
            z: 0,
            x: 1,
            y: 2,
            value: 3,
            width: 4,
        }
    }
}

#[derive(Clone, Copy)]
enum Value4 {
    Count,
    Prob,
}

fn level(field: &str, line: usize, name: &str) -> Result<u8> {
    match field {
        "0" => Ok(0),
        "1" => Ok(1),
        other => bail!("line {line}: field '{name}' must be 0 or 1, got '{other}'"),
    }
}

fn parse_units(lines: &[(usize, Vec<&str>)], [z, x, y]: [usize; 3]) -> Result<Input> {
    let units = lines
        .iter()
        .map(|(line, fields)| {
            if fields.len() != 3 {
                bail!("line {line}: expected 3 fields, found {}", fields.len());
            }
            Ok((
                level(fields[z], *line, "z")?,
                level(fields[x], *line, "x")?,
                level(fields[y], *line, "y")?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Input::Counts(TrialCounts::from_units(units)?))
}

fn parse_cells(lines: &[(usize, Vec<&str>)], cols: Columns, kind: Value4) -> Result<Input> {
    let mut counts: CellTable<Option<u64>> = Default::default();
    let mut probs: CellTable<Option<f64>> = Default::default();
    for (line, fields) in lines {
        if fields.len() != cols.width {
            bail!(
                "line {line}: expected {} fields, found {}",
                cols.width,
                fields.len()
            );
        }
        let z = level(fields[cols.z], *line, "z")? as usize;
        let x = level(fields[cols.x], *line, "x")? as usize;
        let y = level(fields[cols.y], *line, "y")? as usize;
        let raw = fields[cols.value];
        let duplicate = match kind {
            Value4::Count => {
                let v: u64 = raw.parse().map_err(|_| {
                    anyhow!("line {line}: field 'count' must be a nonnegative integer, got '{raw}'")
                })?;
                counts[z][x][y].replace(v).is_some()
            }
            Value4::Prob => {
                let v: f64 = raw
                    .parse()
                    .map_err(|_| anyhow!("line {line}: field 'p' must be a number, got '{raw}'"))?;
                probs[z][x][y].replace(v).is_some()
            }
        };
        if duplicate {
            bail!("line {line}: cell z={z}, x={x}, y={y} appears twice");
        }
    }
    let mut missing = Vec::new();
    for z in 0..2 {
        for x in 0..2 {
            for y in 0..2 {
                let present = match kind {
                    Value4::Count => counts[z][x][y].is_some(),
                    Value4::Prob => probs[z][x][y].is_some(),
                };
                if !present {
                    missing.push(format!("({z},{x},{y})"));
                }
            }
        }
    }
    if !missing.is_empty() {
        bail!(
            "missing cells (z,x,y): {}; all 8 cells are required",
            missing.join(", ")
        );
    }
    Ok(match kind {
        Value4::Count => Input::Counts(TrialCounts::new(
            counts.map(|a| a.map(|b| b.map(|v| v.unwrap()))),
        )?),
        Value4::Prob => Input::Law(ObservedLaw::new(
            probs.map(|a| a.map(|b| b.map(|v| v.unwrap()))),
        )?),
    })
}

fn parse_json(text: &str) -> Result<Input> {
    let doc: Value = serde_json::from_str(text).context("invalid JSON")?;
    let pick = |key: &str| {
        doc.get(key)
            .or_else(|| doc.get("inputs").and_then(|i| i.get(key)))
            .filter(|v| !v.is_null())
    };
    if let Some(counts) = pick("counts") {
        let cells: CellTable<u64> = serde_json::from_value(counts.clone())
            .context("member 'counts' is not a 2x2x2 table of counts")?;
        return Ok(Input::Counts(TrialCounts::new(cells)?));
    }
    if let Some(law) = pick("law") {
        let cells: CellTable<f64> = serde_json::from_value(law.clone())
            .context("member 'law' is not a 2x2x2 table of probabilities")?;
        return Ok(Input::Law(ObservedLaw::new(cells)?));
    }
    bail!("JSON input has no 'counts' or 'law' member")
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLU: &str = "z,x,y,count\n0,0,0,1027\n0,0,1,99\n0,1,0,233\n0,1,1,30\n\
                       1,0,0,935\n1,0,1,84\n1,1,0,422\n1,1,1,31\n";

    #[test]
    fn aggregated_counts() {
        let Input::Counts(c) = parse_input(FLU).unwrap() else {
            panic!("expected counts")
        };
        assert_eq!(c.get(1, 1, 1), 31);
        assert_eq!(c.total(), 2861);
    }

    #[test]
    fn header_order_and_separators_are_flexible() {
        let text = "# reordered\ncount\ty\tx\tz\n1027 0 0 0\n99 1 0 0\n233 0 1 0\n30 1 1 0\n\
                    935 0 0 1\n84 1 0 1\n422 0 1 1\n31 1 1 1\n";
        let Input::Counts(c) = parse_input(text).unwrap() else {
            panic!("expected counts")
        };
        assert_eq!(c.get(0, 1, 1), 30);
        assert_eq!(c.get(1, 0, 1), 84);
    }

    #[test]
    fn unit_records_with_and_without_header() {
        let Input::Counts(a) = parse_input("0,0,1\n1,1,0\n1,1,1\n").unwrap() else {
            panic!()
        };
        let Input::Counts(b) = parse_input("z,x,y\n0,0,1\n1,1,0\n1,1,1\n").unwrap() else {
            panic!()
        };
        assert_eq!(a, b);
        assert_eq!(a.get(1, 1, 0), 1);
    }

    #[test]
    fn probability_table() {
        let text = "z,x,y,p\n0,0,0,0.25\n0,0,1,0.25\n0,1,0,0.25\n0,1,1,0.25\n\
                    1,0,0,0.1\n1,0,1,0.2\n1,1,0,0.3\n1,1,1,0.4\n";
        let Input::Law(l) = parse_input(text).unwrap() else {
            panic!()
        };
        assert_eq!(l.prob(1, 1, 1), 0.4);
    }

    #[test]
    fn truncated_counts_name_the_missing_cells() {
        let truncated: String = FLU.lines().take(6).map(|l| format!("{l}\n")).collect();
        let err = parse_input(&truncated).unwrap_err().to_string();
        assert!(err.contains("(1,1,0)") && err.contains("(1,1,1)"), "{err}");
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let bad = FLU.replace("0,1,1,30", "0,1,1,thirty");
        let err = parse_input(&bad).unwrap_err().to_string();
        assert!(err.contains("line 5") && err.contains("count"), "{err}");
        let bad = FLU.replace("1,1,1,31", "1,2,1,31");
        assert!(parse_input(&bad)
            .unwrap_err()
            .to_string()
            .contains("line 9"));
        let dup = format!("{FLU}0,0,0,5\n");
        assert!(parse_input(&dup).unwrap_err().to_string().contains("twice"));
        assert!(parse_input("").is_err());
    }

    #[test]
    fn json_documents() {
        let doc = r#"{"inputs": {"counts": [[[1,2],[3,4]],[[5,6],[7,8]]], "law": null}}"#;
        assert!(matches!(parse_input(doc).unwrap(), Input::Counts(_)));
        let doc = r#"{"law": [[[0.25,0.25],[0.25,0.25]],[[0.1,0.2],[0.3,0.4]]]}"#;
        assert!(matches!(parse_input(doc).unwrap(), Input::Law(_)));
        assert!(parse_input(r#"{"other": 1}"#).is_err());
    }
}
