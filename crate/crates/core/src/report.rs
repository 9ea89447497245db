//! CSV helpers shared by every tabular output: header row, `.` decimals, LF endings.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

pub fn write_csv<T: Serialize, W: Write>(rows: impl IntoIterator<Item = T>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: f64,
        b: Option<f64>,
        ok: bool,
    }

    #[test]
    fn header_and_lf() {
        let s = csv_string([Row { a: 0.5, b: None, ok: true }, Row { a: 1e-7, b: Some(2.0), ok: false }]).unwrap();
        assert_eq!(s, "a,b,ok\n0.5,,true\n1e-7,2.0,false\n");
    }
}
