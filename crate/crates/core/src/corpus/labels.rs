use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{MISINFO, RELIABLE};
use crate::finegrained::FineLabel;
use crate::{Error, Result};

/// Human-labeled cascade: `cascade_id,label[,fine_label]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub cascade_id: String,
    pub label: u8,
    pub fine_label: Option<FineLabel>,
}

fn headers<R: Read>(rdr: &mut csv::Reader<R>, context: &str, required: &[&str]) -> Result<csv::StringRecord> {
    let h = rdr.headers()?.clone();
    for col in required {
        if !h.iter().any(|c| c.trim() == *col) {
            return Err(Error::schema(context, *col, "missing column"));
        }
    }
    Ok(h)
}

fn column(h: &csv::StringRecord, name: &str) -> Option<usize> {
    h.iter().position(|c| c.trim() == name)
}

fn parse_fine(context: &str, raw: &str) -> Result<FineLabel> {
    FineLabel::parse(raw).ok_or_else(|| {
        let allowed: Vec<&str> = FineLabel::ALL.iter().map(|l| l.as_str()).collect();
        Error::schema(context, "fine_label", format!("unknown label {raw:?}; expected one of {}", allowed.join(", ")))
    })
}

/// Reads a labeled split. A `fine_label` column is optional; when only a
/// fine label is present on a row the binary label is derived from it.
pub fn read_labeled<R: Read>(reader: R, context: &str) -> Result<Vec<LabeledRow>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let h = headers(&mut rdr, context, &["cascade_id"])?;
    let id_col = column(&h, "cascade_id").expect("checked");
    let label_col = column(&h, "label");
    let fine_col = column(&h, "fine_label");
    if label_col.is_none() && fine_col.is_none() {
        return Err(Error::schema(context, "label", "missing column"));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let at = format!("{context} row {}", line + 2);
        let id = rec.get(id_col).unwrap_or("").trim();
        if id.is_empty() {
            return Err(Error::schema(&at, "cascade_id", "empty"));
        }
        let fine = match fine_col.and_then(|c| rec.get(c)).map(str::trim) {
            Some(raw) if !raw.is_empty() => Some(parse_fine(&at, raw)?),
            _ => None,
        };
        let label = match label_col.and_then(|c| rec.get(c)).map(str::trim) {
            Some("0") => RELIABLE,
            Some("1") => MISINFO,
            Some("") | None => match fine {
                Some(f) => f.binarize(),
                None => return Err(Error::schema(&at, "label", "empty")),
            },
            Some(other) => return Err(Error::schema(&at, "label", format!("expected 0 or 1, got {other:?}"))),
        };
        out.push(LabeledRow {
            cascade_id: id.to_string(),
            label,
            fine_label: fine,
        });
    }
    Ok(out)
}

pub fn write_labeled<W: Write>(writer: W, rows: &[LabeledRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cascade_id", "label", "fine_label"])?;
    for r in rows {
        w.write_record([
            r.cascade_id.as_str(),
            &r.label.to_string(),
            r.fine_label.map_or("", FineLabel::as_str),
        ])?;
    }
    w.flush().map_err(|e| Error::write("labeled split", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_binary_and_fine_columns() {
        let rows = read_labeled("cascade_id,label,fine_label\na,1,false\nb,0,\nc,,debunk\n".as_bytes(), "t").unwrap();
        assert_eq!(rows[0].fine_label, Some(FineLabel::False));
        assert_eq!(rows[1].label, 0);
        assert_eq!(rows[2].label, 0);
    }

    #[test]
    fn bad_values_name_the_field() {
        let e = read_labeled("cascade_id,label\na,2\n".as_bytes(), "t").unwrap_err();
        assert!(e.to_string().contains("label"), "{e}");
        let e = read_labeled("cascade_id,fine_label\na,satire\n".as_bytes(), "t").unwrap_err();
        assert!(e.to_string().contains("mostly_false"), "{e}");
        let e = read_labeled("id,label\na,1\n".as_bytes(), "t").unwrap_err();
        assert!(e.to_string().contains("cascade_id"), "{e}");
    }

    #[test]
    fn round_trip() {
        let rows = vec![LabeledRow {
            cascade_id: "x".into(),
            label: 1,
            fine_label: Some(FineLabel::Unproven),
        }];
        let mut buf = Vec::new();
        write_labeled(&mut buf, &rows).unwrap();
        assert_eq!(read_labeled(buf.as_slice(), "t").unwrap(), rows);
    }
}
