use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use lorenzfit::grouped::{read_csv, read_jsonl, write_csv, RecordResult};
use lorenzfit::{GroupedDataset, Microdata};
use serde::Serialize;

pub fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(Box::new(BufReader::new(f)))
}

pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

pub fn read_grouped(path: &Path) -> Result<Vec<RecordResult>> {
    let r = open_input(path)?;
    let recs = if is_csv(path) { read_csv(r) } else { read_jsonl(r) };
    recs.with_context(|| format!("cannot read {}", path.display()))
}

pub fn write_grouped(path: Option<&Path>, csv: bool, data: &[GroupedDataset]) -> Result<()> {
    let mut out = open_output(path)?;
    if csv {
        write_csv(&mut out, data)?;
    } else {
        write_jsonl(&mut out, data)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_jsonl<W: Write, T: Serialize>(out: &mut W, rows: &[T]) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Microdata CSV: `income` plus optional `weight` and `size` columns.
pub struct MicroRecords {
    pub income: Vec<f64>,
    pub weight: Vec<f64>,
    pub size: Option<Vec<f64>>,
}

pub fn read_microdata(path: &Path) -> Result<MicroRecords> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open_input(path)?);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let ic = col("income").context("microdata CSV needs an 'income' column")?;
    let (wc, sc) = (col("weight"), col("size"));
    let mut m = MicroRecords {
        income: Vec::new(),
        weight: Vec::new(),
        size: sc.map(|_| Vec::new()),
    };
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let num = |c: usize| -> Result<f64> {
            let v = row.get(c).unwrap_or("");
            v.parse().with_context(|| format!("row {}: '{v}' is not a number", i + 2))
        };
        m.income.push(num(ic)?);
        m.weight.push(wc.map(num).transpose()?.unwrap_or(1.0));
        if let (Some(c), Some(s)) = (sc, m.size.as_mut()) {
            s.push(num(c)?);
        }
    }
    Ok(m)
}

pub fn write_microdata_csv<W: Write>(out: W, m: &Microdata) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["income", "weight"])?;
    for (x, wt) in m.values().iter().zip(m.weights()) {
        w.write_record([x.to_string(), wt.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn num_cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}
