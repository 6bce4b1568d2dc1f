//! CSV readers and writers for recorded streams and experiment history.
//!
//! Every reader expects a header row, comma separators and `.` decimals.
//! Errors name the offending line (the header is line 1).

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{reduce_two_sample, EffectSummary, TwoSampleSummary};
use crate::prior_em::HistoricalRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Treatment,
    Control,
}

impl Group {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "treatment" => Some(Group::Treatment),
            "control" => Some(Group::Control),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Group::Treatment => "treatment",
            Group::Control => "control",
        }
    }
}

/// One row of a two-group stream; `line` is the row's line in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitRow {
    pub line: u64,
    pub unit_id: String,
    pub group: Group,
    pub value: f64,
}

/// A recorded stream in one of the two accepted layouts.
#[derive(Debug, Clone, PartialEq)]
pub enum MonitorInput {
    /// Header `value`: standardized observations, one per row.
    OneSample(Vec<f64>),
    /// Header `unit_id,group,value`: per-unit metric values by arm.
    TwoGroup(Vec<UnitRow>),
}

impl MonitorInput {
    pub fn len(&self) -> usize {
        match self {
            MonitorInput::OneSample(v) => v.len(),
            MonitorInput::TwoGroup(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-row summaries to feed a monitor. Two-group streams are `None`
    /// until both arms have two units and a nonzero variance.
    pub fn summaries(&self) -> Result<Vec<Option<EffectSummary>>> {
        match self {
            MonitorInput::OneSample(xs) => {
                let mut sum = 0.0;
                Ok(xs
                    .iter()
                    .enumerate()
                    .map(|(i, x)| {
                        sum += x;
                        let n = (i + 1) as f64;
                        Some(EffectSummary { mean: sum / n, n })
                    })
                    .collect())
            }
            MonitorInput::TwoGroup(rows) => two_group_summaries(rows),
        }
    }
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(field: &str, line: u64, name: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("`{name}` is not a number: {field:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("`{name}` must be finite")));
    }
    Ok(v)
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input)
}

fn headers<R: Read>(rdr: &mut csv::Reader<R>) -> Result<Vec<String>> {
    let h = rdr.headers()?;
    let out: Vec<String> = h.iter().map(|s| s.trim().to_string()).collect();
    if out.is_empty() || out.iter().all(String::is_empty) {
        return Err(Error::InsufficientData("file is empty".into()));
    }
    Ok(out)
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Reads a monitor stream, detecting the layout from the header.
pub fn read_monitor_csv<R: Read>(input: R) -> Result<MonitorInput> {
    let mut rdr = reader(input);
    let head = headers(&mut rdr)?;
    let width = head.len();
    let two_group = match head.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["value"] => false,
        ["unit_id", "group", "value"] => true,
        _ => {
            return Err(parse_err(
                1,
                format!("unrecognized header {head:?}; expected `value` or `unit_id,group,value`"),
            ))
        }
    };
    let mut values = Vec::new();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != width {
            return Err(parse_err(
                line,
                format!("expected {width} fields, found {}; schemas cannot be mixed", rec.len()),
            ));
        }
        if two_group {
            let unit_id = rec[0].trim().to_string();
            if unit_id.is_empty() {
                return Err(parse_err(line, "empty unit_id"));
            }
            let group = Group::parse(&rec[1])
                .ok_or_else(|| parse_err(line, format!("group must be treatment or control, got {:?}", &rec[1])))?;
            rows.push(UnitRow {
                line,
                unit_id,
                group,
                value: parse_f64(&rec[2], line, "value")?,
            });
        } else {
            values.push(parse_f64(&rec[0], line, "value")?);
        }
    }
    let out = if two_group {
        MonitorInput::TwoGroup(rows)
    } else {
        MonitorInput::OneSample(values)
    };
    if out.is_empty() {
        return Err(Error::InsufficientData("no observations after the header".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default)]
struct Arm {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Arm {
    fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Sample variance with the `n − 1` denominator.
    fn var(&self) -> f64 {
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }
}

/// Replays a two-group stream. A unit seen again has its value added to its
/// running total; it may not change arm.
pub fn two_group_summaries(rows: &[UnitRow]) -> Result<Vec<Option<EffectSummary>>> {
    for g in [Group::Treatment, Group::Control] {
        if !rows.iter().any(|r| r.group == g) {
            return Err(Error::validation("group", format!("no rows for group `{}`", g.name())));
        }
    }
    let mut units: HashMap<&str, (Group, f64)> = HashMap::new();
    let mut arms = [Arm::default(); 2];
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        let idx = (r.group == Group::Treatment) as usize;
        let arm = &mut arms[idx];
        match units.get_mut(r.unit_id.as_str()) {
            Some((g, _)) if *g != r.group => {
                return Err(parse_err(
                    r.line,
                    format!("unit `{}` switched from {} to {}", r.unit_id, g.name(), r.group.name()),
                ))
            }
            Some((_, total)) => {
                arm.sum += r.value;
                arm.sum_sq += r.value * (2.0 * *total + r.value);
                *total += r.value;
            }
            None => {
                units.insert(&r.unit_id, (r.group, r.value));
                arm.n += 1;
                arm.sum += r.value;
                arm.sum_sq += r.value * r.value;
            }
        }
        let [c, t] = arms;
        let summary = if t.n >= 2 && c.n >= 2 {
            reduce_two_sample(&TwoSampleSummary {
                mean_t: t.mean(),
                mean_c: c.mean(),
                var_t: t.var(),
                var_c: c.var(),
                n_t: t.n,
                n_c: c.n,
            })
            .ok()
            .map(|r| r.summary())
        } else {
            None
        };
        out.push(summary);
    }
    Ok(out)
}

/// Reads `delta,n_effective` records.
pub fn read_history_csv<R: Read>(input: R) -> Result<Vec<HistoricalRecord>> {
    let mut rdr = reader(input);
    let head = headers(&mut rdr)?;
    let col = |name: &str| {
        head.iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("missing column `{name}`; expected header delta,n_effective")))
    };
    let (di, ni) = (col("delta")?, col("n_effective")?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != head.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", head.len(), rec.len()),
            ));
        }
        let r = HistoricalRecord {
            delta: parse_f64(&rec[di], line, "delta")?,
            n_e: parse_f64(&rec[ni], line, "n_effective")?,
        };
        r.validate().map_err(|e| parse_err(line, e.to_string()))?;
        out.push(r);
    }
    if out.is_empty() {
        return Err(Error::InsufficientData("no records after the header".into()));
    }
    Ok(out)
}

pub fn write_history_csv<W: Write>(records: &[HistoricalRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delta", "n_effective"])?;
    for r in records {
        w.write_record([r.delta.to_string(), r.n_e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reduce_two_sample, TwoSampleSummary};
    use proptest::prelude::*;

    #[test]
    fn one_sample_stream() {
        let input = read_monitor_csv("value\n0.5\n-1\n2.5\n".as_bytes()).unwrap();
        assert_eq!(input, MonitorInput::OneSample(vec![0.5, -1.0, 2.5]));
        let s = input.summaries().unwrap();
        assert_eq!(
            s[2],
            Some(EffectSummary {
                mean: 2.0 / 3.0,
                n: 3.0
            })
        );
    }

    #[test]
    fn malformed_rows_report_lines() {
        match read_monitor_csv("value\n1\nabc\n".as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e:?}"),
        }
        match read_monitor_csv("value\n1\n2,treatment\n".as_bytes()).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("mixed"));
            }
            e => panic!("{e:?}"),
        }
        assert!(matches!(
            read_monitor_csv("x,y\n1,2\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_inputs_are_insufficient() {
        assert!(matches!(
            read_monitor_csv("".as_bytes()),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            read_monitor_csv("value\n".as_bytes()),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            read_history_csv("delta,n_effective\n".as_bytes()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn missing_group_names_it() {
        let input = read_monitor_csv("unit_id,group,value\na,treatment,1\nb,treatment,2\n".as_bytes()).unwrap();
        match input.summaries().unwrap_err() {
            Error::Validation { field, message } => {
                assert_eq!(field, "group");
                assert!(message.contains("control"));
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn units_cannot_switch_groups() {
        let csv = "unit_id,group,value\na,treatment,1\nb,control,2\na,control,3\n";
        let input = read_monitor_csv(csv.as_bytes()).unwrap();
        assert!(matches!(input.summaries(), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn two_group_matches_direct_reduction() {
        let csv =
            "unit_id,group,value\n1,treatment,3\n2,control,1\n3,treatment,5\n4,control,2\n5,Control,4\n1,treatment,1\n";
        let s = read_monitor_csv(csv.as_bytes()).unwrap().summaries().unwrap();
        assert_eq!(s[..3], [None, None, None]);
        // unit 1 totals 4; treatment {4, 5}, control {1, 2, 4}
        let direct = reduce_two_sample(&TwoSampleSummary {
            mean_t: 4.5,
            mean_c: 7.0 / 3.0,
            var_t: 0.5,
            var_c: 7.0 / 3.0,
            n_t: 2,
            n_c: 3,
        })
        .unwrap()
        .summary();
        let got = s[5].unwrap();
        assert!((got.mean - direct.mean).abs() < 1e-12);
        assert_eq!(got.n, direct.n);
    }

    #[test]
    fn history_round_trip_and_errors() {
        let recs = vec![
            HistoricalRecord { delta: 0.1, n_e: 500.0 },
            HistoricalRecord {
                delta: -0.0123456789012345,
                n_e: 1234.5,
            },
        ];
        let mut buf = Vec::new();
        write_history_csv(&recs, &mut buf).unwrap();
        assert_eq!(read_history_csv(buf.as_slice()).unwrap(), recs);
        assert!(matches!(
            read_history_csv("delta,n_effective\n0.1,100\n0.2,-5\n".as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            read_history_csv("delta\n0.1\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    proptest! {
        #[test]
        fn history_csv_round_trips(rows in prop::collection::vec((-1.0f64..1.0, 1.0f64..1e6), 1..50)) {
            let recs: Vec<_> = rows.into_iter().map(|(delta, n_e)| HistoricalRecord { delta, n_e }).collect();
            let mut buf = Vec::new();
            write_history_csv(&recs, &mut buf).unwrap();
            prop_assert_eq!(read_history_csv(buf.as_slice()).unwrap(), recs);
        }
    }
}
