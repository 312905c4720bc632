use std::fs::File;
use std::path::Path;

use csv::{ReaderBuilder, Terminator, WriterBuilder};

use crate::error::{Error, Result};
use crate::montecarlo::{CountTrace, RngSeed, TraceMode};

pub const PHOTON_HEADER: [&str; 7] = ["bin", "time_s", "voltage_V", "psi_rad", "d1", "d2", "coinc"];
pub const CLASSICAL_HEADER: [&str; 6] = [
    "bin",
    "time_s",
    "voltage_V",
    "psi_rad",
    "i_gamma",
    "i_delta",
];

/// 17 significant digits, enough for any double to read back unchanged.
fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn count(v: f64, what: &str, bin: usize) -> Result<String> {
    if v.fract() != 0.0 || !(0.0..=9.007_199_254_740_992e15).contains(&v) {
        return Err(Error::InvalidArgument(format!(
            "bin {bin}: {what} = {v} is not a whole count"
        )));
    }
    Ok(format!("{}", v as u64))
}

fn trace_rows(trace: &CountTrace) -> Result<Vec<Vec<String>>> {
    trace.check()?;
    let mut rows = Vec::with_capacity(trace.len());
    for i in 0..trace.len() {
        let cols = [trace.time[i], trace.voltage[i], trace.psi[i]];
        if let Some(v) = cols.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bin {i}: non-finite value {v}"
            )));
        }
        let mut row = vec![trace.bin_index[i].to_string()];
        row.extend(cols.iter().map(|&v| float(v)));
        match trace.mode {
            TraceMode::PhotonCounting => {
                row.push(count(trace.singles_d1[i], "d1", i)?);
                row.push(count(trace.singles_d2[i], "d2", i)?);
                row.push(count(trace.coincidences[i], "coinc", i)?);
            }
            TraceMode::Classical => {
                row.push(float(trace.singles_d1[i]));
                row.push(float(trace.singles_d2[i]));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// CSV text of `trace`: UTF-8 with LF line endings.
///
/// Photon-counting traces use `bin,time_s,voltage_V,psi_rad,d1,d2,coinc`
/// with integer counts; classical traces use
/// `bin,time_s,voltage_V,psi_rad,i_gamma,i_delta`. Other reals are written
/// with 17 significant digits.
pub fn render_trace_csv(trace: &CountTrace) -> Result<String> {
    let rows = trace_rows(trace)?;
    let mut w = WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let header: &[&str] = match trace.mode {
        TraceMode::PhotonCounting => &PHOTON_HEADER,
        TraceMode::Classical => &CLASSICAL_HEADER,
    };
    // Writing into memory cannot fail.
    w.write_record(header).expect("in-memory write");
    for row in &rows {
        w.write_record(row).expect("in-memory write");
    }
    let bytes = w.into_inner().expect("in-memory flush");
    Ok(String::from_utf8(bytes).expect("CSV fields are ASCII"))
}

/// Writes [`render_trace_csv`] output to `path`.
pub fn write_trace_csv(trace: &CountTrace, path: &Path) -> Result<()> {
    let text = render_trace_csv(trace)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a trace written by [`write_trace_csv`]. The mode follows from the
/// header; metadata that the file does not carry is left empty.
pub fn read_trace_csv(path: &Path) -> Result<CountTrace> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = ReaderBuilder::new().has_headers(true).from_reader(file);
    let format_err = |line: u64, message: String| Error::TraceFormat {
        path: path.to_path_buf(),
        line: line as usize,
        message,
    };
    let wrap = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line());
        match e.into_kind() {
            csv::ErrorKind::Io(e) => Error::io(path, e),
            csv::ErrorKind::UnequalLengths {
                expected_len, len, ..
            } => format_err(line, format!("expected {expected_len} fields, found {len}")),
            other => format_err(line, format!("{other:?}")),
        }
    };

    let header = r.headers().map_err(wrap)?.clone();
    let mode = if header.iter().eq(PHOTON_HEADER) {
        TraceMode::PhotonCounting
    } else if header.iter().eq(CLASSICAL_HEADER) {
        TraceMode::Classical
    } else {
        return Err(format_err(
            1,
            format!(
                "unrecognized header `{}`; expected `{}` or `{}`",
                header.iter().collect::<Vec<_>>().join(","),
                PHOTON_HEADER.join(","),
                CLASSICAL_HEADER.join(",")
            ),
        ));
    };

    let mut trace = CountTrace::empty(mode, RngSeed(0));
    for rec in r.records() {
        let rec = rec.map_err(wrap)?;
        let line = rec.position().map_or(0, |p| p.line());
        let names = match mode {
            TraceMode::PhotonCounting => &PHOTON_HEADER[..],
            TraceMode::Classical => &CLASSICAL_HEADER[..],
        };
        let mut vals = Vec::with_capacity(names.len());
        for (field, name) in rec.iter().zip(names) {
            let v: f64 = field.trim().parse().map_err(|_| {
                format_err(line, format!("column `{name}`: `{field}` is not a number"))
            })?;
            if !v.is_finite() {
                return Err(format_err(line, format!("column `{name}` is not finite")));
            }
            vals.push(v);
        }
        let bin = vals[0];
        if bin < 0.0 || bin.fract() != 0.0 {
            return Err(format_err(
                line,
                format!("bin `{bin}` is not a non-negative integer"),
            ));
        }
        trace.bin_index.push(bin as u64);
        trace.time.push(vals[1]);
        trace.voltage.push(vals[2]);
        trace.psi.push(vals[3]);
        trace.singles_d1.push(vals[4]);
        trace.singles_d2.push(vals[5]);
        trace.coincidences.push(vals.get(6).copied().unwrap_or(0.0));
    }
    trace.check().map_err(|e| format_err(0, e.to_string()))?;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trace(mode: TraceMode, rows: &[[f64; 7]]) -> CountTrace {
        let mut t = CountTrace::empty(mode, RngSeed(0));
        for r in rows {
            t.bin_index.push(r[0] as u64);
            t.time.push(r[1]);
            t.voltage.push(r[2]);
            t.psi.push(r[3]);
            t.singles_d1.push(r[4]);
            t.singles_d2.push(r[5]);
            t.coincidences.push(r[6]);
        }
        t
    }

    #[test]
    fn three_bins_make_four_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let t = trace(
            TraceMode::PhotonCounting,
            &[
                [0.0, 0.0, 0.0, 0.0, 10.0, 12.0, 1.0],
                [1.0, 0.1, 0.02, 0.0013194689145077132, 8.0, 3.0, 0.0],
                [
                    2.0,
                    0.2,
                    0.04,
                    0.0026389378290154264,
                    400_000.0,
                    399_123.0,
                    4001.0,
                ],
            ],
        );
        write_trace_csv(&t, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains('\r'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "bin,time_s,voltage_V,psi_rad,d1,d2,coinc");
        assert_eq!(
            lines[2],
            "1,1.0000000000000001e-1,2.0000000000000000e-2,1.3194689145077131e-3,8,3,0"
        );
        assert_eq!(read_trace_csv(&path).unwrap(), t);
    }

    #[test]
    fn classical_uses_six_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let t = trace(
            TraceMode::Classical,
            &[
                [0.0, 0.0, 0.0, 0.0, 0.75, 0.25, 0.0],
                [1.0, 0.1, 1.0, 0.5, 1.0 / 3.0, 2.0 / 3.0, 0.0],
            ],
        );
        write_trace_csv(&t, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("bin,time_s,voltage_V,psi_rad,i_gamma,i_delta\n"));
        assert!(text.lines().skip(1).all(|l| l.split(',').count() == 6));
        assert_eq!(read_trace_csv(&path).unwrap(), t);
    }

    #[test]
    fn errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.csv");
        let e = read_trace_csv(&missing).unwrap_err();
        assert!(e.to_string().contains("nope.csv"));

        let unwritable = dir.path().join("no_dir").join("x.csv");
        let t = trace(TraceMode::Classical, &[[0.0; 7]]);
        assert!(matches!(
            write_trace_csv(&t, &unwritable),
            Err(Error::Io { .. })
        ));

        let bad = dir.path().join("bad.csv");
        std::fs::write(
            &bad,
            "bin,time_s,voltage_V,psi_rad,i_gamma,i_delta\n0,0,0,0,1,x\n",
        )
        .unwrap();
        match read_trace_csv(&bad).unwrap_err() {
            Error::TraceFormat { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("i_delta"));
            }
            other => panic!("{other}"),
        }
        std::fs::write(&bad, "a,b\n1,2\n").unwrap();
        assert!(matches!(
            read_trace_csv(&bad),
            Err(Error::TraceFormat { line: 1, .. })
        ));
        std::fs::write(
            &bad,
            "bin,time_s,voltage_V,psi_rad,i_gamma,i_delta\n0,0,0,0,1\n",
        )
        .unwrap();
        assert!(matches!(
            read_trace_csv(&bad),
            Err(Error::TraceFormat { line: 2, .. })
        ));
    }

    #[test]
    fn fractional_counts_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let t = trace(
            TraceMode::PhotonCounting,
            &[[0.0, 0.0, 0.0, 0.0, 1.5, 2.0, 0.0]],
        );
        assert!(write_trace_csv(&t, &dir.path().join("f.csv")).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn round_trip_is_bit_exact(
            rows in proptest::collection::vec(
                (proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO,
                 proptest::num::f64::ANY.prop_filter("finite", |v| v.is_finite()),
                 -1e300f64..1e300,
                 0.0f64..1e12, 0.0f64..1e12),
                1..20)
        ) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("p.csv");
            let mut t = CountTrace::empty(TraceMode::Classical, RngSeed(0));
            for (i, (a, b, c, d, e)) in rows.into_iter().enumerate() {
                t.bin_index.push(i as u64);
                t.time.push(a);
                t.voltage.push(b);
                t.psi.push(c);
                t.singles_d1.push(d);
                t.singles_d2.push(e);
                t.coincidences.push(0.0);
            }
            write_trace_csv(&t, &path).unwrap();
            let back = read_trace_csv(&path).unwrap();
            for (x, y) in t.time.iter().chain(&t.voltage).chain(&t.psi).chain(&t.singles_d1).chain(&t.singles_d2)
                .zip(back.time.iter().chain(&back.voltage).chain(&back.psi).chain(&back.singles_d1).chain(&back.singles_d2))
            {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
