//! CSV ingress and egress: effect estimates, two-level designs, cutoff
//! tables, and simulation results.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};

use crate::error::{Error, Result};
use crate::model::{CutoffTable, EffectEstimates, MethodId, TestConfig};
use crate::simulation::{Metric, ResultRow};

/// A two-level orthogonal design with `±1`-coded effect columns and a response.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignData {
    factors: Vec<String>,
    columns: Vec<Vec<i8>>,
    y: Vec<f64>,
}

impl DesignData {
    /// Validates coding and orthogonality: every pair of effect columns, and
    /// each column with the all-ones column, must have zero inner product.
    pub fn new(factors: Vec<String>, columns: Vec<Vec<i8>>, y: Vec<f64>) -> Result<Self> {
        if factors.len() != columns.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} factor names for {} columns",
                factors.len(),
                columns.len()
            )));
        }
        if factors.is_empty() {
            return Err(Error::InvalidInput("design has no effect columns".into()));
        }
        let runs = y.len();
        if runs < 2 {
            return Err(Error::InvalidInput("design needs at least two runs".into()));
        }
        for (name, col) in factors.iter().zip(&columns) {
            if col.len() != runs {
                return Err(Error::DimensionMismatch(format!(
                    "column `{name}` has {} entries for {runs} runs",
                    col.len()
                )));
            }
            if let Some(v) = col.iter().find(|v| v.abs() != 1) {
                return Err(Error::InvalidInput(format!(
                    "column `{name}` has entry {v}, expected -1 or 1"
                )));
            }
        }
        if let Some(v) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "response contains non-finite value {v}"
            )));
        }
        for (i, col) in columns.iter().enumerate() {
            let balance: i64 = col.iter().map(|&v| i64::from(v)).sum();
            if balance != 0 {
                return Err(Error::NonOrthogonal {
                    first: factors[i].clone(),
                    second: "(intercept)".into(),
                    dot: balance,
                });
            }
            for j in i + 1..columns.len() {
                let dot: i64 = col
                    .iter()
                    .zip(&columns[j])
                    .map(|(&a, &b)| i64::from(a * b))
                    .sum();
                if dot != 0 {
                    return Err(Error::NonOrthogonal {
                        first: factors[i].clone(),
                        second: factors[j].clone(),
                        dot,
                    });
                }
            }
        }
        Ok(Self {
            factors,
            columns,
            y,
        })
    }

    pub fn factors(&self) -> &[String] {
        &self.factors
    }

    pub fn runs(&self) -> usize {
        self.y.len()
    }

    pub fn k(&self) -> usize {
        self.columns.len()
    }

    pub fn response(&self) -> &[f64] {
        &self.y
    }

    pub fn column(&self, j: usize) -> &[i8] {
        &self.columns[j]
    }

    /// `M = k + 1`: no degrees of freedom left for error.
    pub fn is_saturated(&self) -> bool {
        self.runs() == self.k() + 1
    }

    /// Same design with runs reordered by `perm` (run `i` of the result is
    /// run `perm[i]` of `self`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let columns = self
            .columns
            .iter()
            .map(|c| perm.iter().map(|&i| c[i]).collect())
            .collect();
        let y = perm.iter().map(|&i| self.y[i]).collect();
        Self::new(self.factors.clone(), columns, y)
    }
}

/// Least-squares effects `beta_j = <c_j, y> / M` with scales `1 / sqrt(M)`.
pub fn estimate_effects(dd: &DesignData) -> Result<EffectEstimates> {
    let runs = dd.runs() as f64;
    let values = dd
        .columns
        .iter()
        .map(|c| {
            c.iter()
                .zip(&dd.y)
                .map(|(&s, y)| f64::from(s) * y)
                .sum::<f64>()
                / runs
        })
        .collect();
    let scales = vec![1.0 / runs.sqrt(); dd.k()];
    EffectEstimates::new(dd.factors.clone(), values, Some(scales))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn parse_err(
    source: &str,
    record: &StringRecord,
    column: Option<&str>,
    message: impl Into<String>,
) -> Error {
    Error::Parse {
        path: source.to_string(),
        line: record.position().map_or(0, |p| p.line()),
        column: column.map(str::to_string),
        message: message.into(),
    }
}

fn parse_f64(source: &str, record: &StringRecord, idx: usize, column: &str) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("");
    raw.parse::<f64>().map_err(|_| {
        parse_err(
            source,
            record,
            Some(column),
            format!("`{raw}` is not a number"),
        )
    })
}

fn header_index(headers: &StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.eq_ignore_ascii_case(name))
}

/// Reads `label,estimate[,scale]`.
pub fn parse_estimates(path: &Path) -> Result<EffectEstimates> {
    parse_estimates_from(open(path)?, &path.display().to_string())
}

pub fn parse_estimates_from<R: Read>(input: R, source: &str) -> Result<EffectEstimates> {
    let mut rdr = ReaderBuilder::new().trim(Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    let header_err = |msg: &str| Error::Parse {
        path: source.to_string(),
        line: 1,
        column: None,
        message: msg.to_string(),
    };
    let label_idx =
        header_index(&headers, "label").ok_or_else(|| header_err("missing `label` column"))?;
    let est_idx = header_index(&headers, "estimate")
        .ok_or_else(|| header_err("missing `estimate` column"))?;
    let scale_idx = header_index(&headers, "scale");

    let (mut labels, mut values, mut scales) = (Vec::new(), Vec::new(), Vec::new());
    for record in rdr.records() {
        let record = record?;
        let label = record.get(label_idx).unwrap_or("").to_string();
        if label.is_empty() {
            return Err(parse_err(source, &record, Some("label"), "empty label"));
        }
        if labels.contains(&label) {
            return Err(parse_err(
                source,
                &record,
                Some("label"),
                format!("duplicate label `{label}`"),
            ));
        }
        values.push(parse_f64(source, &record, est_idx, "estimate")?);
        if let Some(i) = scale_idx {
            let a = parse_f64(source, &record, i, "scale")?;
            if !(a > 0.0 && a.is_finite()) {
                return Err(parse_err(
                    source,
                    &record,
                    Some("scale"),
                    "scale must be positive",
                ));
            }
            scales.push(a);
        }
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(header_err("no data rows"));
    }
    EffectEstimates::new(labels, values, scale_idx.map(|_| scales))
}

/// Writes `label,estimate,scale` (the scale column only when present).
pub fn write_estimates<W: Write>(est: &EffectEstimates, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if est.scales().is_some() {
        w.write_record(["label", "estimate", "scale"])?;
    } else {
        w.write_record(["label", "estimate"])?;
    }
    for (i, (label, v)) in est.labels().iter().zip(est.values()).enumerate() {
        let mut rec = vec![label.clone(), format_sig17(*v)];
        if est.scales().is_some() {
            rec.push(format_sig17(est.scale(i)));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a design whose header names the effect columns plus `y`.
pub fn parse_design(path: &Path) -> Result<DesignData> {
    parse_design_from(open(path)?, &path.display().to_string())
}

pub fn parse_design_from<R: Read>(input: R, source: &str) -> Result<DesignData> {
    let mut rdr = ReaderBuilder::new().trim(Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    let y_idx = header_index(&headers, "y").ok_or_else(|| Error::Parse {
        path: source.to_string(),
        line: 1,
        column: None,
        message: "missing response column `y`".into(),
    })?;
    let effect_idx: Vec<usize> = (0..headers.len()).filter(|&i| i != y_idx).collect();
    let factors: Vec<String> = effect_idx.iter().map(|&i| headers[i].to_string()).collect();
    let mut columns = vec![Vec::new(); factors.len()];
    let mut y = Vec::new();
    for record in rdr.records() {
        let record = record?;
        for (col, (&i, name)) in columns.iter_mut().zip(effect_idx.iter().zip(&factors)) {
            let v = match record.get(i).unwrap_or("") {
                "1" | "+1" => 1,
                "-1" => -1,
                other => {
                    return Err(parse_err(
                        source,
                        &record,
                        Some(name),
                        format!("`{other}` is not -1 or 1"),
                    ));
                }
            };
            col.push(v);
        }
        y.push(parse_f64(source, &record, y_idx, "y")?);
    }
    if y.is_empty() {
        return Err(Error::Parse {
            path: source.to_string(),
            line: 1,
            column: None,
            message: "no data rows".into(),
        });
    }
    DesignData::new(factors, columns, y)
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn format_sig17(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, v)
    } else {
        format!("{v:.16e}")
    }
}

const CUTOFF_META: [&str; 6] = ["method", "k", "nu", "alpha", "reps", "seed"];

pub fn write_cutoffs(table: &CutoffTable, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_cutoffs_to(table, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn write_cutoffs_to<W: Write>(table: &CutoffTable, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record(CUTOFF_META)?;
    w.write_record([
        table.method().tag().to_string(),
        table.k().to_string(),
        table.nu().to_string(),
        table.alpha().to_string(),
        table.reps().to_string(),
        table.seed().to_string(),
    ])?;
    w.write_record(["m", "d"])?;
    for (m, d) in table.entries() {
        w.write_record([m.to_string(), format_sig17(d)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cutoffs(path: &Path) -> Result<CutoffTable> {
    read_cutoffs_from(open(path)?, &path.display().to_string())
}

pub fn read_cutoffs_from<R: Read>(input: R, source: &str) -> Result<CutoffTable> {
    let mut rdr = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(input);
    let mut records = rdr.records();
    let mut next = |what: &str| -> Result<StringRecord> {
        records.next().transpose()?.ok_or_else(|| Error::Parse {
            path: source.to_string(),
            line: 0,
            column: None,
            message: format!("missing {what}"),
        })
    };

    let header = next("metadata header")?;
    if header
        .iter()
        .map(str::to_ascii_lowercase)
        .ne(CUTOFF_META.iter().map(|s| s.to_string()))
    {
        return Err(parse_err(
            source,
            &header,
            None,
            format!("expected header `{}`", CUTOFF_META.join(",")),
        ));
    }
    let meta = next("metadata row")?;
    if meta.len() != CUTOFF_META.len() {
        return Err(parse_err(
            source,
            &meta,
            None,
            "metadata row needs 6 fields",
        ));
    }
    let method: MethodId = meta[0].parse().map_err(|_| {
        parse_err(
            source,
            &meta,
            Some("method"),
            format!("unknown method `{}`", &meta[0]),
        )
    })?;
    let int = |idx: usize, col: &str| -> Result<u64> {
        meta[idx].parse::<u64>().map_err(|_| {
            parse_err(
                source,
                &meta,
                Some(col),
                format!("`{}` is not an integer", &meta[idx]),
            )
        })
    };
    let k = int(1, "k")? as usize;
    let nu = int(2, "nu")? as usize;
    let alpha = parse_f64(source, &meta, 3, "alpha")?;
    let reps = int(4, "reps")? as usize;
    let seed = int(5, "seed")?;
    let config =
        TestConfig::new(k, nu, alpha).map_err(|e| parse_err(source, &meta, None, e.to_string()))?;

    let sub = next("`m,d` header")?;
    if sub.len() != 2 || !sub[0].eq_ignore_ascii_case("m") || !sub[1].eq_ignore_ascii_case("d") {
        return Err(parse_err(source, &sub, None, "expected `m,d` header"));
    }
    let mut d = Vec::new();
    for (expected_m, record) in config.tested().zip(records.by_ref()) {
        let record = record?;
        if record.len() != 2 {
            return Err(parse_err(
                source,
                &record,
                None,
                "cutoff rows need exactly `m,d`",
            ));
        }
        let m: usize = record[0].parse().map_err(|_| {
            parse_err(
                source,
                &record,
                Some("m"),
                format!("`{}` is not an integer", &record[0]),
            )
        })?;
        if m != expected_m {
            return Err(parse_err(
                source,
                &record,
                Some("m"),
                format!("expected m = {expected_m}, found {m}"),
            ));
        }
        d.push(parse_f64(source, &record, 1, "d")?);
    }
    if let Some(extra) = records.next() {
        let extra = extra?;
        return Err(parse_err(
            source,
            &extra,
            None,
            format!("more than {} cutoff rows", k - nu),
        ));
    }
    CutoffTable::new(method, config, d, reps, seed).map_err(|e| Error::Parse {
        path: source.to_string(),
        line: 0,
        column: None,
        message: e.to_string(),
    })
}

const RESULT_HEADER: [&str; 7] = ["case", "s", "method", "metric", "value", "reps", "seed"];

/// Writes `case,s,method,metric,value,reps,seed`; missing values as `NA`.
pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        w.write_record([
            r.case.clone(),
            r.s.to_string(),
            r.method.clone(),
            r.metric.name().to_string(),
            r.value.map_or_else(|| "NA".to_string(), |v| v.to_string()),
            r.reps.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    read_results_from(open(path)?, &path.display().to_string())
}

pub fn read_results_from<R: Read>(input: R, source: &str) -> Result<Vec<ResultRow>> {
    let mut rdr = ReaderBuilder::new().trim(Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers
        .iter()
        .map(str::to_ascii_lowercase)
        .ne(RESULT_HEADER.iter().map(|s| s.to_string()))
    {
        return Err(Error::Parse {
            path: source.to_string(),
            line: 1,
            column: None,
            message: format!("expected header `{}`", RESULT_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let metric: Metric = record[3].parse().map_err(|_| {
            parse_err(
                source,
                &record,
                Some("metric"),
                format!("unknown metric `{}`", &record[3]),
            )
        })?;
        let value = match &record[4] {
            "NA" => None,
            _ => Some(parse_f64(source, &record, 4, "value")?),
        };
        let reps = record[5]
            .parse()
            .map_err(|_| parse_err(source, &record, Some("reps"), "not an integer"))?;
        let seed = record[6]
            .parse()
            .map_err(|_| parse_err(source, &record, Some("seed"), "not an integer"))?;
        rows.push(ResultRow {
            case: record[0].to_string(),
            s: parse_f64(source, &record, 1, "s")?,
            method: record[2].to_string(),
            metric,
            value,
            reps,
            seed,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_design() -> DesignData {
        parse_design_from(
            "A,B,AB,y\n-1,-1,1,0\n1,-1,-1,2\n-1,1,-1,0\n1,1,1,2\n".as_bytes(),
            "toy",
        )
        .unwrap()
    }

    #[test]
    fn toy_two_by_two_effects() {
        let dd = toy_design();
        assert!(dd.is_saturated());
        let est = estimate_effects(&dd).unwrap();
        assert_eq!(est.labels(), &["A", "B", "AB"]);
        assert_eq!(est.values(), &[1.0, 0.0, 0.0]);
        assert_eq!(est.scales().unwrap(), &[0.5, 0.5, 0.5]);
    }

    #[test]
    fn constant_response_gives_zero_effects() {
        let dd =
            parse_design_from("A,B,y\n-1,-1,3\n1,-1,3\n-1,1,3\n1,1,3\n".as_bytes(), "c").unwrap();
        assert!(!dd.is_saturated());
        assert!(estimate_effects(&dd)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn non_orthogonal_pair_is_named() {
        let err = parse_design_from("A,B,y\n-1,-1,1\n1,1,2\n-1,-1,3\n1,1,4\n".as_bytes(), "bad")
            .unwrap_err();
        match err {
            Error::NonOrthogonal { first, second, dot } => {
                assert_eq!((first.as_str(), second.as_str(), dot), ("A", "B", 4));
            }
            e => panic!("unexpected {e}"),
        }
        let unbalanced =
            parse_design_from("A,y\n1,1\n1,2\n-1,3\n1,4\n".as_bytes(), "u").unwrap_err();
        assert!(matches!(unbalanced, Error::NonOrthogonal { .. }));
    }

    #[test]
    fn design_entry_errors_carry_location() {
        let err = parse_design_from("A,y\n-1,1\n0,2\n".as_bytes(), "d.csv").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column.as_deref(), Some("A"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn estimates_parsing() {
        let est =
            parse_estimates_from("label,estimate\nA,21.625\nB,-3.125\n".as_bytes(), "e").unwrap();
        assert_eq!(est.values(), &[21.625, -3.125]);
        assert!(est.scales().is_none());

        let scaled =
            parse_estimates_from("label,estimate,scale\nA,1,0.5\nB,2,0.5\n".as_bytes(), "e")
                .unwrap();
        assert_eq!(scaled.scales().unwrap(), &[0.5, 0.5]);

        let empty = parse_estimates_from("label,estimate\n".as_bytes(), "e").unwrap_err();
        assert!(empty.to_string().contains("no data rows"), "{empty}");

        let dup = parse_estimates_from("label,estimate\nA,1\nA,2\n".as_bytes(), "e").unwrap_err();
        assert!(dup.to_string().contains("duplicate"), "{dup}");

        match parse_estimates_from("label,estimate\nA,1\nB,x\n".as_bytes(), "e").unwrap_err() {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column.as_deref(), Some("estimate"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn sig17_round_trips() {
        for v in [
            14.912345678901234,
            1.0 / 3.0,
            123.4,
            1e-9 / 7.0,
            6.02e23,
            1.0000000000000002,
        ] {
            let s = format_sig17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(format_sig17(14.9), "14.900000000000000");
    }

    #[test]
    fn cutoff_file_layout_and_errors() {
        let cfg = TestConfig::new(4, 2, 0.05).unwrap();
        let t = CutoffTable::new(MethodId::Sus, cfg, vec![14.9, 16.7], 500_000, 1).unwrap();
        let mut buf = Vec::new();
        write_cutoffs_to(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "method,k,nu,alpha,reps,seed\nSUS,4,2,0.05,500000,1\nm,d\n3,14.900000000000000\n4,16.699999999999999\n"
        );
        assert_eq!(read_cutoffs_from(text.as_bytes(), "t").unwrap(), t);

        let short = "method,k,nu,alpha,reps,seed\nSUS,4,2,0.05,500000,1\nm,d\n3,14.9\n";
        assert!(read_cutoffs_from(short.as_bytes(), "t").is_err());
        let wrong_m = "method,k,nu,alpha,reps,seed\nSUS,4,2,0.05,500000,1\nm,d\n3,14.9\n5,16\n";
        assert!(read_cutoffs_from(wrong_m.as_bytes(), "t").is_err());
        let bad_method =
            "method,k,nu,alpha,reps,seed\nLENTH,4,2,0.05,500000,1\nm,d\n3,14.9\n4,16\n";
        assert!(read_cutoffs_from(bad_method.as_bytes(), "t").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cutoff_tables_round_trip(d in prop::collection::vec(1.0001f64..1e6, 1..12), seed: u64, reps in 1000usize..10_000_000) {
                let k = d.len() + 3;
                let cfg = TestConfig::new(k, 3, 0.05).unwrap();
                let t = CutoffTable::new(MethodId::Susi, cfg, d, reps, seed).unwrap();
                let mut buf = Vec::new();
                write_cutoffs_to(&t, &mut buf).unwrap();
                prop_assert_eq!(read_cutoffs_from(buf.as_slice(), "p").unwrap(), t);
            }

            #[test]
            fn row_permutation_keeps_ordered_squares(seed in 0u64..1000, ys in prop::collection::vec(-100.0f64..100.0, 8)) {
                // 2^3 full factorial, all seven effect columns.
                let base: Vec<[i8; 3]> = (0..8).map(|r| [
                    if r & 1 == 1 { 1 } else { -1 },
                    if r & 2 == 2 { 1 } else { -1 },
                    if r & 4 == 4 { 1 } else { -1 },
                ]).collect();
                let masks = [1usize, 2, 3, 4, 5, 6, 7];
                let columns: Vec<Vec<i8>> = masks.iter().map(|&mask| base.iter().map(|row| {
                    (0..3).filter(|b| mask >> b & 1 == 1).map(|b| row[b]).product()
                }).collect()).collect();
                let factors = masks.iter().map(|m| format!("c{m}")).collect();
                let dd = DesignData::new(factors, columns, ys).unwrap();
                let mut perm: Vec<usize> = (0..8).collect();
                let r = (seed % 8) as usize;
                perm.rotate_left(r);
                perm.swap(0, (seed as usize / 8) % 8);
                let a = crate::model::order_squares(&estimate_effects(&dd).unwrap());
                let b = crate::model::order_squares(&estimate_effects(&dd.permuted(&perm).unwrap()).unwrap());
                for (x, y) in a.values().iter().zip(b.values()) {
                    prop_assert!((x - y).abs() <= 1e-9 * x.max(1.0));
                }
            }
        }
    }
}
