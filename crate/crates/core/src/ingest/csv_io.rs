use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::model::{
    CountsByCategory, Direction, HourKey, RoadTag, RoutingReportObservation, TollboothObservation, VehicleCategory,
};

use super::IngestError;

pub const TOLLBOOTH_HEADER: [&str; 10] = [
    "timestamp",
    "station",
    "direction",
    "c_under5_6",
    "c_5_6_7_6",
    "c_7_6_12_5",
    "c_12_5_16_0",
    "c_16_0_24_0",
    "c_over24_0",
    "total",
];

pub const ROUTING_HEADER: [&str; 4] = ["timestamp", "node", "people_flow", "road_tag"];

/// Default marker for a people_flow value suppressed below the privacy threshold.
pub const DEFAULT_CENSOR_SENTINEL: &str = "<T";

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })
}

fn create(path: &Path) -> Result<File, IngestError> {
    File::create(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<(), IngestError> {
    let found: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if found.iter().map(String::as_str).ne(expected.iter().copied()) {
        return Err(IngestError::Header { expected: expected.join(","), found: found.join(",") });
    }
    Ok(())
}

fn field_error(row: usize, field: &str, message: impl Into<String>) -> IngestError {
    IngestError::Field { row, field: field.to_string(), message: message.into() }
}

fn parse_count(raw: &str, row: usize, field: &str) -> Result<f64, IngestError> {
    let raw = raw.trim();
    if let Ok(v) = raw.parse::<i64>() {
        if v < 0 {
            return Err(field_error(row, field, "negative count"));
        }
        return Ok(v as f64);
    }
    match raw.parse::<f64>() {
        Ok(v) if v < 0.0 => Err(field_error(row, field, "negative count")),
        Ok(v) if v.is_finite() => Err(field_error(row, field, format!("non-integer count `{v}`"))),
        _ => Err(field_error(row, field, format!("unparseable count `{raw}`"))),
    }
}

fn parse_hour(raw: &str, row: usize) -> Result<HourKey, IngestError> {
    HourKey::parse(raw).map_err(|e| field_error(row, "timestamp", e.to_string()))
}

/// Parse tollbooth records. Row numbers in errors count data rows from 1.
pub fn parse_tollbooth_csv(input: impl Read) -> Result<Vec<TollboothObservation>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    check_header(&mut reader, &TOLLBOOTH_HEADER)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        if record.len() != TOLLBOOTH_HEADER.len() {
            return Err(field_error(row, "*", format!("expected 10 fields, found {}", record.len())));
        }
        let hour = parse_hour(&record[0], row)?;
        let station = record[1].trim().to_string();
        if station.is_empty() {
            return Err(field_error(row, "station", "empty station name"));
        }
        let direction: Direction =
            record[2].parse().map_err(|e: crate::model::ModelError| field_error(row, "direction", e.to_string()))?;
        let mut counts = [0.0; VehicleCategory::COUNT];
        for (k, c) in VehicleCategory::ALL.iter().enumerate() {
            counts[k] = parse_count(&record[3 + k], row, c.column())?;
        }
        let total = parse_count(&record[9], row, "total")?;
        let counts = CountsByCategory::with_reported_total(counts, total);
        let flagged = !counts.total_consistent();
        if flagged {
            log::warn!(
                "row {row}: reported total {total} differs from category sum {} by more than 1%",
                counts.category_sum()
            );
        }
        out.push(TollboothObservation { station, direction, hour, counts, flagged });
    }
    Ok(out)
}

pub fn read_tollbooth_csv(path: impl AsRef<Path>) -> Result<Vec<TollboothObservation>, IngestError> {
    parse_tollbooth_csv(open(path.as_ref())?)
}

/// Parse routing-report records; `sentinel` marks a censored flow.
pub fn parse_routing_csv(input: impl Read, sentinel: &str) -> Result<Vec<RoutingReportObservation>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    check_header(&mut reader, &ROUTING_HEADER)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        if record.len() != ROUTING_HEADER.len() {
            return Err(field_error(row, "*", format!("expected 4 fields, found {}", record.len())));
        }
        let hour = parse_hour(&record[0], row)?;
        let node = record[1].trim().to_string();
        if node.is_empty() {
            return Err(field_error(row, "node", "empty node name"));
        }
        let raw_flow = record[2].trim();
        let (people_flow, censored) =
            if raw_flow == sentinel { (0.0, true) } else { (parse_count(raw_flow, row, "people_flow")?, false) };
        let road_tag: RoadTag =
            record[3].parse().map_err(|e: crate::model::ModelError| field_error(row, "road_tag", e.to_string()))?;
        out.push(RoutingReportObservation { node, hour, people_flow, road_tag, censored });
    }
    Ok(out)
}

pub fn read_routing_csv(path: impl AsRef<Path>) -> Result<Vec<RoutingReportObservation>, IngestError> {
    read_routing_csv_with(path, DEFAULT_CENSOR_SENTINEL)
}

pub fn read_routing_csv_with(
    path: impl AsRef<Path>,
    sentinel: &str,
) -> Result<Vec<RoutingReportObservation>, IngestError> {
    parse_routing_csv(open(path.as_ref())?, sentinel)
}

/// Integral values print without a fractional part.
pub(crate) fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

pub fn write_tollbooth(out: impl Write, rows: &[TollboothObservation]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TOLLBOOTH_HEADER)?;
    for r in rows {
        let mut rec = vec![r.hour.to_string(), r.station.clone(), r.direction.to_string()];
        rec.extend(r.counts.counts.iter().map(|&c| fmt_num(c)));
        rec.push(fmt_num(r.counts.total));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_tollbooth_csv(path: impl AsRef<Path>, rows: &[TollboothObservation]) -> Result<(), IngestError> {
    write_tollbooth(create(path.as_ref())?, rows)
}

pub fn write_routing(out: impl Write, rows: &[RoutingReportObservation], sentinel: &str) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROUTING_HEADER)?;
    for r in rows {
        let flow = if r.censored { sentinel.to_string() } else { fmt_num(r.people_flow) };
        w.write_record([r.hour.to_string(), r.node.clone(), flow, r.road_tag.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_routing_csv(path: impl AsRef<Path>, rows: &[RoutingReportObservation]) -> Result<(), IngestError> {
    write_routing(create(path.as_ref())?, rows, DEFAULT_CENSOR_SENTINEL)
}
