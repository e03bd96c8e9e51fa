//! Reader and writer for a subset of the MPS format.
//!
//! Fields are whitespace separated, so names must not contain spaces. Supported
//! sections: `NAME`, `OBJSENSE`, `ROWS`, `COLUMNS` (with `MARKER` integer blocks), `RHS`,
//! `BOUNDS` (`UP LO FX FR MI PL BV LI UI`) and `ENDATA`. Integer columns without explicit
//! bounds get `[0, ∞)`.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use super::{MiniMip, ObjSense, Row, RowSense};

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Start,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Bounds,
    End,
}

pub fn load_mps(path: impl AsRef<Path>) -> Result<MiniMip, MpsError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| MpsError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_mps(&text)
}

pub fn parse_mps(text: &str) -> Result<MiniMip, MpsError> {
    let mut name = String::new();
    let mut sense = ObjSense::Minimize;
    let mut objective_row: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<(String, RowSense)> = Vec::new();
    let mut free_rows: Vec<String> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut col_names: Vec<String> = Vec::new();
    let mut integer: Vec<bool> = Vec::new();
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut objective: Vec<f64> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut offset = 0.0;
    let mut bounds: Vec<(usize, &str, Option<f64>)> = Vec::new();
    let mut in_marker = false;
    let mut section = Section::Start;

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let err = |message: String| MpsError::Parse { line, message };
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let number = |s: &str| -> Result<f64, MpsError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| !v.is_nan())
                .ok_or_else(|| err(format!("`{s}` is not a number")))
        };
        if !raw.starts_with(char::is_whitespace) {
            section = match fields[0] {
                "NAME" => {
                    name = fields.get(1).unwrap_or(&"").to_string();
                    Section::Start
                }
                "OBJSENSE" => match fields.get(1) {
                    Some(s) => {
                        sense = parse_sense(s).ok_or_else(|| err(format!("unknown sense `{s}`")))?;
                        Section::Start
                    }
                    None => Section::ObjSense,
                },
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                "RANGES" => return Err(err("RANGES is not supported".into())),
                other => return Err(err(format!("unknown section `{other}`"))),
            };
            if section == Section::End {
                break;
            }
            continue;
        }
        match section {
            Section::Start | Section::End => {
                return Err(err("data line outside of a section".into()))
            }
            Section::ObjSense => {
                sense = parse_sense(fields[0])
                    .ok_or_else(|| err(format!("unknown sense `{}`", fields[0])))?;
                section = Section::Start;
            }
            Section::Rows => {
                let [kind, row_name] = fields[..] else {
                    return Err(err("expected `<type> <row>`".into()));
                };
                let row_sense = match kind {
                    "N" => {
                        if objective_row.is_none() {
                            objective_row = Some(row_name.to_string());
                        } else {
                            free_rows.push(row_name.to_string());
                        }
                        continue;
                    }
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    "E" => RowSense::Eq,
                    other => return Err(err(format!("unknown row type `{other}`"))),
                };
                if row_index.insert(row_name.to_string(), rows.len()).is_some() {
                    return Err(err(format!("duplicate row `{row_name}`")));
                }
                rows.push((row_name.to_string(), row_sense));
                rhs.push(0.0);
            }
            Section::Columns => {
                if fields.get(1) == Some(&"'MARKER'") {
                    match fields.get(2) {
                        Some(&"'INTORG'") => in_marker = true,
                        Some(&"'INTEND'") => in_marker = false,
                        _ => return Err(err("malformed MARKER line".into())),
                    }
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err("expected `<column> <row> <value> [<row> <value>]`".into()));
                }
                let col = match col_index.get(fields[0]) {
                    Some(&c) => c,
                    None => {
                        let c = col_names.len();
                        col_index.insert(fields[0].to_string(), c);
                        col_names.push(fields[0].to_string());
                        integer.push(in_marker);
                        objective.push(0.0);
                        c
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let value = number(pair[1])?;
                    if objective_row.as_deref() == Some(pair[0]) {
                        objective[col] += value;
                    } else if let Some(&r) = row_index.get(pair[0]) {
                        entries.push((r, col, value));
                    } else if !free_rows.iter().any(|f| f == pair[0]) {
                        return Err(err(format!("unknown row `{}`", pair[0])));
                    }
                }
            }
            Section::Rhs => {
                let pairs = if fields.len() % 2 == 1 { &fields[1..] } else { &fields[..] };
                if pairs.is_empty() || pairs.len() > 4 {
                    return Err(err("expected `[<set>] <row> <value> [<row> <value>]`".into()));
                }
                for pair in pairs.chunks(2) {
                    let value = number(pair[1])?;
                    if objective_row.as_deref() == Some(pair[0]) {
                        offset = -value;
                    } else if let Some(&r) = row_index.get(pair[0]) {
                        rhs[r] = value;
                    } else if !free_rows.iter().any(|f| f == pair[0]) {
                        return Err(err(format!("unknown row `{}`", pair[0])));
                    }
                }
            }
            Section::Bounds => {
                let kind = fields[0];
                let needs_value = !matches!(kind, "FR" | "MI" | "PL" | "BV");
                let (col_name, value) = match (needs_value, fields.len()) {
                    (true, 4) => (fields[2], Some(number(fields[3])?)),
                    (true, 3) => (fields[1], Some(number(fields[2])?)),
                    (false, 3) => (fields[2], None),
                    (false, 2) => (fields[1], None),
                    (false, 4) if kind == "BV" => (fields[2], None),
                    _ => return Err(err(format!("malformed {kind} bound"))),
                };
                let col = *col_index
                    .get(col_name)
                    .ok_or_else(|| err(format!("unknown column `{col_name}`")))?;
                if !matches!(kind, "UP" | "LO" | "FX" | "FR" | "MI" | "PL" | "BV" | "LI" | "UI") {
                    return Err(err(format!("unknown bound type `{kind}`")));
                }
                bounds.push((col, kind, value));
            }
        }
    }
    if section != Section::End {
        return Err(MpsError::Parse {
            line: text.lines().count(),
            message: "missing ENDATA".into(),
        });
    }

    let n = col_names.len();
    let mut mip = MiniMip::new(name, sense, objective);
    mip.var_names = col_names;
    mip.integer = integer;
    mip.objective_offset = offset;
    mip.rows = rows
        .into_iter()
        .zip(rhs)
        .map(|((row_name, row_sense), b)| Row {
            name: row_name,
            coeffs: vec![0.0; n],
            sense: row_sense,
            rhs: b,
        })
        .collect();
    for (r, c, v) in entries {
        mip.rows[r].coeffs[c] += v;
    }
    for (col, kind, value) in bounds {
        // the customary 1e30 stands for infinity
        let v = match value.unwrap_or(0.0) {
            v if v >= 1e30 => f64::INFINITY,
            v if v <= -1e30 => f64::NEG_INFINITY,
            v => v,
        };
        match kind {
            "UP" => mip.upper[col] = v,
            "LO" => mip.lower[col] = v,
            "FX" => mip.set_bounds(col, v, v),
            "FR" => mip.set_bounds(col, f64::NEG_INFINITY, f64::INFINITY),
            "MI" => mip.lower[col] = f64::NEG_INFINITY,
            "PL" => mip.upper[col] = f64::INFINITY,
            "BV" => mip.set_binary(col),
            "LI" => {
                mip.integer[col] = true;
                mip.lower[col] = v;
            }
            "UI" => {
                mip.integer[col] = true;
                mip.upper[col] = v;
            }
            _ => unreachable!("bound types are checked while parsing"),
        }
    }
    mip.validate().map_err(|e| MpsError::Parse {
        line: 0,
        message: e.to_string(),
    })?;
    Ok(mip)
}

fn parse_sense(s: &str) -> Option<ObjSense> {
    match s.to_ascii_uppercase().as_str() {
        "MIN" | "MINIMIZE" => Some(ObjSense::Minimize),
        "MAX" | "MAXIMIZE" => Some(ObjSense::Maximize),
        _ => None,
    }
}

pub fn write_mps<W: Write>(mut w: W, mip: &MiniMip) -> io::Result<()> {
    let name = if mip.name.is_empty() { "unnamed" } else { &mip.name };
    writeln!(w, "NAME          {name}")?;
    if mip.sense == ObjSense::Maximize {
        writeln!(w, "OBJSENSE")?;
        writeln!(w, "    MAX")?;
    }
    writeln!(w, "ROWS")?;
    writeln!(w, " N  obj")?;
    for row in &mip.rows {
        let kind = match row.sense {
            RowSense::Le => "L",
            RowSense::Ge => "G",
            RowSense::Eq => "E",
        };
        writeln!(w, " {kind}  {}", row.name)?;
    }
    writeln!(w, "COLUMNS")?;
    let mut in_marker = false;
    let mut markers = 0;
    for j in 0..mip.num_vars() {
        if mip.integer[j] != in_marker {
            let tag = if mip.integer[j] { "'INTORG'" } else { "'INTEND'" };
            writeln!(w, "    MARKER{markers:<6} 'MARKER'                 {tag}")?;
            markers += 1;
            in_marker = mip.integer[j];
        }
        let col = &mip.var_names[j];
        if mip.objective[j] != 0.0 {
            writeln!(w, "    {col:<10} {:<10} {}", "obj", mip.objective[j])?;
        }
        for row in &mip.rows {
            if row.coeffs[j] != 0.0 {
                writeln!(w, "    {col:<10} {:<10} {}", row.name, row.coeffs[j])?;
            }
        }
    }
    if in_marker {
        writeln!(w, "    MARKER{markers:<6} 'MARKER'                 'INTEND'")?;
    }
    writeln!(w, "RHS")?;
    if mip.objective_offset != 0.0 {
        writeln!(w, "    RHS        {:<10} {}", "obj", -mip.objective_offset)?;
    }
    for row in &mip.rows {
        if row.rhs != 0.0 {
            writeln!(w, "    RHS        {:<10} {}", row.name, row.rhs)?;
        }
    }
    writeln!(w, "BOUNDS")?;
    for j in 0..mip.num_vars() {
        let (l, u, col) = (mip.lower[j], mip.upper[j], &mip.var_names[j]);
        if mip.integer[j] && l == 0.0 && u == 1.0 {
            writeln!(w, " BV BND        {col}")?;
            continue;
        }
        if l == u {
            writeln!(w, " FX BND        {col:<10} {l}")?;
            continue;
        }
        match (l == f64::NEG_INFINITY, u == f64::INFINITY) {
            (true, true) => writeln!(w, " FR BND        {col}")?,
            (true, false) => {
                writeln!(w, " MI BND        {col}")?;
                writeln!(w, " UP BND        {col:<10} {u}")?;
            }
            (false, upper_free) => {
                if l != 0.0 {
                    writeln!(w, " LO BND        {col:<10} {l}")?;
                }
                if !upper_free {
                    writeln!(w, " UP BND        {col:<10} {u}")?;
                }
            }
        }
    }
    writeln!(w, "ENDATA")
}

pub fn save_mps(path: impl AsRef<Path>, mip: &MiniMip) -> Result<(), MpsError> {
    let path = path.as_ref();
    let io_err = |source| MpsError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut buf = Vec::new();
    write_mps(&mut buf, mip).map_err(io_err)?;
    fs::write(path, buf).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
* a small test problem
NAME          TESTLP
OBJSENSE
    MAX
ROWS
 N  COST
 L  LIM1
 G  LIM2
 E  MYEQN
COLUMNS
    MARKER                 'MARKER'                 'INTORG'
    X1        COST         1.0   LIM1         1.0
    X1        LIM2         1.0
    MARKER                 'MARKER'                 'INTEND'
    X2        COST         2.0   LIM1         1.0
    X2        MYEQN       -1.0
    X3        COST        -1.0   MYEQN        1.0
RHS
    RHS       COST        -3.5
    RHS       LIM1         4.0   LIM2         1.0
    RHS       MYEQN        7.0
BOUNDS
 UP BND       X1           4.0
 LO BND       X2          -1.0
 UP BND       X2           1.0
 FR BND       X3
ENDATA
";

    #[test]
    fn parses_sample() {
        let mip = parse_mps(SAMPLE).unwrap();
        assert_eq!(mip.name, "TESTLP");
        assert_eq!(mip.sense, ObjSense::Maximize);
        assert_eq!(mip.var_names, ["X1", "X2", "X3"]);
        assert_eq!(mip.objective, [1.0, 2.0, -1.0]);
        assert_eq!(mip.objective_offset, 3.5);
        assert_eq!(mip.integer, [true, false, false]);
        assert_eq!(mip.lower, [0.0, -1.0, f64::NEG_INFINITY]);
        assert_eq!(mip.upper, [4.0, 1.0, f64::INFINITY]);
        assert_eq!(mip.rows.len(), 3);
        assert_eq!(mip.rows[0].coeffs, [1.0, 1.0, 0.0]);
        assert_eq!(mip.rows[1].sense, RowSense::Ge);
        assert_eq!(mip.rows[2].coeffs, [0.0, -1.0, 1.0]);
        assert_eq!(mip.rows[2].rhs, 7.0);
    }

    #[test]
    fn round_trip() {
        let mip = parse_mps(SAMPLE).unwrap();
        let mut buf = Vec::new();
        write_mps(&mut buf, &mip).unwrap();
        let back = parse_mps(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, mip);
    }

    #[test]
    fn integer_marker_defaults_to_nonnegative() {
        let text = "NAME t\nROWS\n N obj\n L c\nCOLUMNS\n M1 'MARKER' 'INTORG'\n y obj 1 c 1\n M2 'MARKER' 'INTEND'\nRHS\n RHS c 3\nENDATA\n";
        let mip = parse_mps(text).unwrap();
        assert!(mip.integer[0]);
        assert_eq!((mip.lower[0], mip.upper[0]), (0.0, f64::INFINITY));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "NAME t\nROWS\n N obj\n L c\nCOLUMNS\n x obj 1 d 2\nENDATA\n";
        match parse_mps(text) {
            Err(MpsError::Parse { line, message }) => {
                assert_eq!(line, 6);
                assert!(message.contains("unknown row"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_mps("NAME t\nROWS\n N obj\n"),
            Err(MpsError::Parse { .. })
        ));
        assert!(matches!(
            parse_mps("NAME t\nROWS\n N obj\n L c\nCOLUMNS\n x c abc\nENDATA\n"),
            Err(MpsError::Parse { line: 6, .. })
        ));
    }
}
