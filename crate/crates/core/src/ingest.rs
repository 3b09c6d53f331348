//! Trip-record ingestion: CSV parsing, per-location daily pickup counts,
//! high-demand location selection and date-based train/test splits.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{NaiveDate, NaiveDateTime};

use crate::error::{Error, Result};
use crate::ZoneId;

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";
pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TripRecord {
    pub pickup: NaiveDateTime,
    pub pickup_location: ZoneId,
    /// Parsed for completeness; demand is counted at the pickup zone only.
    pub dropoff_location: ZoneId,
}

/// Names of the consumed columns. Everything else in the file is ignored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripColumns {
    pub pickup_datetime: String,
    pub pickup_location: String,
    pub dropoff_location: String,
}

impl Default for TripColumns {
    fn default() -> Self {
        TripColumns {
            pickup_datetime: "lpep_pickup_datetime".into(),
            pickup_location: "PULocationID".into(),
            dropoff_location: "DOLocationID".into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParsedTrips {
    pub records: Vec<TripRecord>,
    /// Rows dropped for a bad timestamp, location id or field count.
    pub skipped: usize,
}

pub fn parse_trips<R: Read>(reader: R, columns: &TripColumns) -> Result<ParsedTrips> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let ts_col = find(&columns.pickup_datetime)?;
    let pu_col = find(&columns.pickup_location)?;
    let do_col = find(&columns.dropoff_location)?;

    let mut out = ParsedTrips::default();
    let mut rec = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut rec) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => {
                out.skipped += 1;
                continue;
            }
        }
        let parsed = (|| {
            let pickup = NaiveDateTime::parse_from_str(rec.get(ts_col)?.trim(), TIMESTAMP_FORMAT).ok()?;
            let pickup_location = parse_zone(rec.get(pu_col)?)?;
            let dropoff_location = parse_zone(rec.get(do_col)?)?;
            Some(TripRecord {
                pickup,
                pickup_location,
                dropoff_location,
            })
        })();
        match parsed {
            Some(r) => out.records.push(r),
            None => out.skipped += 1,
        }
    }
    Ok(out)
}

fn parse_zone(field: &str) -> Option<ZoneId> {
    field.trim().parse::<ZoneId>().ok().filter(|&z| z >= 1)
}

/// Daily pickup counts of one location over a contiguous date range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandSeries {
    location: ZoneId,
    dates: Vec<NaiveDate>,
    counts: Vec<u64>,
}

impl DemandSeries {
    pub fn new(location: ZoneId, dates: Vec<NaiveDate>, counts: Vec<u64>) -> Result<Self> {
        if dates.len() != counts.len() {
            return Err(Error::Dimension(format!(
                "{} dates but {} counts",
                dates.len(),
                counts.len()
            )));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "dates of location {location} are not strictly increasing"
            )));
        }
        Ok(DemandSeries {
            location,
            dates,
            counts,
        })
    }

    pub fn location(&self) -> ZoneId {
        self.location
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts as reals, for density fitting.
    pub fn samples(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    pub fn count_on(&self, date: NaiveDate) -> Option<u64> {
        self.dates
            .binary_search(&date)
            .ok()
            .map(|k| self.counts[k])
    }
}

/// Pickups per location per calendar day. Days inside a location's
/// first..last pickup range with no pickups are filled with 0.
pub fn aggregate_daily_demand(records: &[TripRecord]) -> Result<BTreeMap<ZoneId, DemandSeries>> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no trip records to aggregate".into()));
    }
    let mut buckets: BTreeMap<ZoneId, BTreeMap<NaiveDate, u64>> = BTreeMap::new();
    for r in records {
        *buckets
            .entry(r.pickup_location)
            .or_default()
            .entry(r.pickup.date())
            .or_default() += 1;
    }
    buckets
        .into_iter()
        .map(|(loc, days)| {
            let first = *days.keys().next().expect("bucket has a day");
            let last = *days.keys().next_back().expect("bucket has a day");
            let dates: Vec<NaiveDate> = first.iter_days().take_while(|d| *d <= last).collect();
            let counts = dates.iter().map(|d| days.get(d).copied().unwrap_or(0)).collect();
            Ok((loc, DemandSeries::new(loc, dates, counts)?))
        })
        .collect()
}

/// The `k` locations with the largest totals, descending; ties go to the
/// smaller zone id.
pub fn top_k_locations(series: &BTreeMap<ZoneId, DemandSeries>, k: usize) -> Result<Vec<ZoneId>> {
    if k == 0 || k > series.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} but {} locations are present",
            series.len()
        )));
    }
    let mut totals: Vec<(ZoneId, u64)> = series.iter().map(|(&l, s)| (l, s.total())).collect();
    totals.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(totals.into_iter().take(k).map(|(l, _)| l).collect())
}

/// Train gets the days strictly before `cutoff`, test the rest. Both parts
/// must be nonempty.
pub fn split_train_test(series: &DemandSeries, cutoff: NaiveDate) -> Result<(DemandSeries, DemandSeries)> {
    let k = series.dates.partition_point(|d| *d < cutoff);
    if k == 0 || k == series.len() {
        return Err(Error::InvalidInput(format!(
            "cutoff {cutoff} leaves an empty {} set for location {}",
            if k == 0 { "training" } else { "test" },
            series.location
        )));
    }
    let train = DemandSeries {
        location: series.location,
        dates: series.dates[..k].to_vec(),
        counts: series.counts[..k].to_vec(),
    };
    let test = DemandSeries {
        location: series.location,
        dates: series.dates[k..].to_vec(),
        counts: series.counts[k..].to_vec(),
    };
    Ok((train, test))
}

/// Day-by-location demand matrix over the union of the series' dates; a
/// location without an entry on a date counts 0 there.
pub fn align(
    series: &BTreeMap<ZoneId, DemandSeries>,
    locations: &[ZoneId],
) -> Result<(Vec<NaiveDate>, Vec<Vec<u64>>)> {
    let picked = locations
        .iter()
        .map(|l| {
            series
                .get(l)
                .ok_or_else(|| Error::InvalidInput(format!("no demand series for location {l}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut dates: Vec<NaiveDate> = picked.iter().flat_map(|s| s.dates.iter().copied()).collect();
    dates.sort_unstable();
    dates.dedup();
    let rows = dates
        .iter()
        .map(|&d| picked.iter().map(|s| s.count_on(d).unwrap_or(0)).collect())
        .collect();
    Ok((dates, rows))
}

/// Writes `location,date,count` rows.
pub fn write_series_csv<'a, W, I>(series: I, writer: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a DemandSeries>,
{
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["location", "date", "count"])?;
    for s in series {
        for (d, c) in s.dates.iter().zip(&s.counts) {
            w.write_record([
                s.location.to_string(),
                d.format(DATE_FORMAT).to_string(),
                c.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_series_csv<R: Read>(reader: R) -> Result<BTreeMap<ZoneId, DemandSeries>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (lc, dc, cc) = (col("location")?, col("date")?, col("count")?);
    let mut raw: BTreeMap<ZoneId, Vec<(NaiveDate, u64)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let bad = || Error::Format(format!("bad demand row {:?}", rec.as_slice()));
        let loc: ZoneId = rec.get(lc).and_then(|v| v.trim().parse().ok()).ok_or_else(bad)?;
        let date = rec
            .get(dc)
            .and_then(|v| NaiveDate::parse_from_str(v.trim(), DATE_FORMAT).ok())
            .ok_or_else(bad)?;
        let count: u64 = rec.get(cc).and_then(|v| v.trim().parse().ok()).ok_or_else(bad)?;
        raw.entry(loc).or_default().push((date, count));
    }
    raw.into_iter()
        .map(|(loc, mut rows)| {
            rows.sort_by_key(|r| r.0);
            let (dates, counts) = rows.into_iter().unzip();
            Ok((loc, DemandSeries::new(loc, dates, counts)?))
        })
        .collect()
}
