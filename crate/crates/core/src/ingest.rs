//! Streaming ingestion of event-mention records.
//!
//! Rows are parsed one at a time from a (possibly gzip-compressed) delimited
//! stream, resolved to a country through the source-country map and folded
//! into per-event bucket/country-set traces. Nothing proportional to the
//! number of rows is retained.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::{Country, Error, Result};

/// Width of one mention bucket in seconds.
pub const BUCKET_SECONDS: i64 = 15 * 60;

/// Column layout of a mentions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MentionFormat {
    pub delimiter: char,
    pub event_column: usize,
    pub timestamp_column: usize,
    pub domain_column: usize,
    pub has_header: bool,
}

impl Default for MentionFormat {
    fn default() -> Self {
        MentionFormat {
            delimiter: '\t',
            event_column: 0,
            timestamp_column: 1,
            domain_column: 2,
            has_header: false,
        }
    }
}

impl MentionFormat {
    /// Layout of GDELT 2.0 Mentions exports: GlobalEventID, EventTimeDate,
    /// MentionTimeDate, MentionType, MentionSourceName, ...
    pub fn gdelt_mentions() -> Self {
        MentionFormat {
            timestamp_column: 2,
            domain_column: 4,
            ..Self::default()
        }
    }

    fn delimiter_byte(&self) -> Result<u8> {
        u8::try_from(self.delimiter)
            .ok()
            .filter(u8::is_ascii)
            .ok_or_else(|| Error::Config(format!("delimiter {:?} is not ASCII", self.delimiter)))
    }
}

/// Half-open `[start, end)` time window; mentions outside it are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisWindow {
    start: i64,
    end: i64,
}

impl AnalysisWindow {
    /// Both bounds in `YYYYMMDDHHMMSS` form.
    pub fn new(start: &str, end: &str) -> Result<Self> {
        let parse = |s: &str| {
            parse_timestamp(s.as_bytes())
                .ok_or_else(|| Error::Config(format!("bad window timestamp {s:?}")))
        };
        let (start, end) = (parse(start)?, parse(end)?);
        if start >= end {
            return Err(Error::Config("window start must precede window end".into()));
        }
        Ok(AnalysisWindow { start, end })
    }

    /// The calendar year `year`, UTC.
    pub fn year(year: i32) -> Result<Self> {
        Self::new(&format!("{year:04}0101000000"), &format!("{:04}0101000000", year + 1))
    }

    pub fn contains(&self, epoch_seconds: i64) -> bool {
        (self.start..self.end).contains(&epoch_seconds)
    }
}

/// Seconds since the Unix epoch for a `YYYYMMDDHHMMSS` timestamp. Pre-1970
/// timestamps are rejected so buckets stay non-negative.
pub fn parse_timestamp(raw: &[u8]) -> Option<i64> {
    if raw.len() != 14 || !raw.iter().all(u8::is_ascii_digit) {
        return None;
    }
    let num = |r: std::ops::Range<usize>| {
        raw[r].iter().fold(0u32, |acc, &d| acc * 10 + u32::from(d - b'0'))
    };
    let date = NaiveDate::from_ymd_opt(num(0..4) as i32, num(4..6), num(6..8))?;
    let time = date.and_hms_opt(num(8..10), num(10..12), num(12..14))?;
    let secs = NaiveDateTime::and_utc(&time).timestamp();
    (secs >= 0).then_some(secs)
}

/// 15-minute bucket of an epoch timestamp (floor).
pub fn bucket_of(epoch_seconds: i64) -> u64 {
    epoch_seconds.div_euclid(BUCKET_SECONDS) as u64
}

/// Lower-cases a source name and strips any scheme, path, query, fragment,
/// port and leading `www.` label.
pub fn normalize_domain(raw: &str) -> Option<String> {
    let mut d = raw.trim();
    if let Some(pos) = d.find("://") {
        d = &d[pos + 3..];
    }
    if let Some(pos) = d.find(['/', '?', '#', ':']) {
        d = &d[..pos];
    }
    let d = d.trim_end_matches('.').to_ascii_lowercase();
    let d = d.strip_prefix("www.").unwrap_or(&d);
    if d.is_empty() || d.contains(char::is_whitespace) {
        return None;
    }
    Some(d.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionRecord {
    pub event_id: String,
    pub bucket: u64,
    pub domain: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    MissingColumn,
    InvalidUtf8,
    EmptyEventId,
    BadTimestamp,
    EmptyDomain,
    OutOfWindow,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::MissingColumn => "missing_column",
            RejectReason::InvalidUtf8 => "invalid_utf8",
            RejectReason::EmptyEventId => "empty_event_id",
            RejectReason::BadTimestamp => "bad_timestamp",
            RejectReason::EmptyDomain => "empty_domain",
            RejectReason::OutOfWindow => "out_of_window",
        }
    }
}

/// Counters for every ingestion stage. Stats from independent shards combine
/// with [`merge`](Self::merge), which is associative and commutative.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub rows_read: u64,
    pub records_emitted: u64,
    pub rejected: BTreeMap<RejectReason, u64>,
    pub source_rows: u64,
    pub source_entries: u64,
    pub source_duplicate_domains: u64,
    pub source_rejected_unknown_code: u64,
    pub source_rejected_malformed: u64,
    pub mentions_resolved: u64,
    pub mentions_unmapped: u64,
    pub events_emitted: u64,
    pub events_unresolved: u64,
}

impl IngestStats {
    pub fn rejected_total(&self) -> u64 {
        self.rejected.values().sum()
    }

    fn reject(&mut self, reason: RejectReason) {
        *self.rejected.entry(reason).or_default() += 1;
    }

    pub fn merge(&mut self, other: &IngestStats) {
        self.rows_read += other.rows_read;
        self.records_emitted += other.records_emitted;
        for (&reason, &n) in &other.rejected {
            *self.rejected.entry(reason).or_default() += n;
        }
        self.source_rows += other.source_rows;
        self.source_entries += other.source_entries;
        self.source_duplicate_domains += other.source_duplicate_domains;
        self.source_rejected_unknown_code += other.source_rejected_unknown_code;
        self.source_rejected_malformed += other.source_rejected_malformed;
        self.mentions_resolved += other.mentions_resolved;
        self.mentions_unmapped += other.mentions_unmapped;
        self.events_emitted += other.events_emitted;
        self.events_unresolved += other.events_unresolved;
    }

    /// Flat `key -> count` view, in a fixed order.
    pub fn counts(&self) -> Vec<(String, u64)> {
        let mut out = vec![
            ("rows_read".to_string(), self.rows_read),
            ("records_emitted".to_string(), self.records_emitted),
            ("rejected_total".to_string(), self.rejected_total()),
        ];
        for (reason, &n) in &self.rejected {
            out.push((format!("rejected.{}", reason.as_str()), n));
        }
        out.extend([
            ("source_rows".to_string(), self.source_rows),
            ("source_entries".to_string(), self.source_entries),
            ("source_duplicate_domains".to_string(), self.source_duplicate_domains),
            ("source_rejected_unknown_code".to_string(), self.source_rejected_unknown_code),
            ("source_rejected_malformed".to_string(), self.source_rejected_malformed),
            ("mentions_resolved".to_string(), self.mentions_resolved),
            ("mentions_unmapped".to_string(), self.mentions_unmapped),
            ("events_emitted".to_string(), self.events_emitted),
            ("events_unresolved".to_string(), self.events_unresolved),
        ]);
        out
    }
}

impl fmt::Display for IngestStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let counts = self.counts();
        let width = counts.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in counts {
            writeln!(f, "{k:<width$}  {v}")?;
        }
        Ok(())
    }
}

/// Opens a file for streaming, transparently decompressing gzip input.
pub fn open_input(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::with_capacity(1 << 20, file);
    let is_gzip = reader.fill_buf().map_err(|e| Error::io(path, e))?.starts_with(&[0x1f, 0x8b]);
    if is_gzip {
        let decoder = flate2::read::MultiGzDecoder::new(reader);
        Ok(Box::new(BufReader::with_capacity(1 << 20, decoder)))
    } else {
        Ok(Box::new(reader))
    }
}

/// Single-pass iterator over the well-formed rows of a mentions stream.
///
/// Malformed and out-of-window rows are counted in [`stats`](Self::stats) and
/// skipped; only a read failure ends the stream with an error.
pub struct MentionStream<R> {
    reader: R,
    delimiter: u8,
    format: MentionFormat,
    window: AnalysisWindow,
    line: Vec<u8>,
    skip_header: bool,
    stats: IngestStats,
    failed: bool,
}

pub fn parse_mentions<R: BufRead>(
    reader: R,
    format: &MentionFormat,
    window: AnalysisWindow,
) -> Result<MentionStream<R>> {
    Ok(MentionStream {
        reader,
        delimiter: format.delimiter_byte()?,
        format: format.clone(),
        window,
        line: Vec::with_capacity(256),
        skip_header: format.has_header,
        stats: IngestStats::default(),
        failed: false,
    })
}

impl<R: BufRead> MentionStream<R> {
    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }

    pub fn into_stats(self) -> IngestStats {
        self.stats
    }

    fn parse_line(&self, line: &[u8]) -> std::result::Result<MentionRecord, RejectReason> {
        let f = &self.format;
        let (mut event, mut ts, mut domain) = (None, None, None);
        for (idx, field) in line.split(|&b| b == self.delimiter).enumerate() {
            if idx == f.event_column {
                event = Some(field);
            }
            if idx == f.timestamp_column {
                ts = Some(field);
            }
            if idx == f.domain_column {
                domain = Some(field);
            }
        }
        let (Some(event), Some(ts), Some(domain)) = (event, ts, domain) else {
            return Err(RejectReason::MissingColumn);
        };
        let event = std::str::from_utf8(event).map_err(|_| RejectReason::InvalidUtf8)?.trim();
        if event.is_empty() {
            return Err(RejectReason::EmptyEventId);
        }
        let secs = parse_timestamp(trim_ascii(ts)).ok_or(RejectReason::BadTimestamp)?;
        let domain = std::str::from_utf8(domain).map_err(|_| RejectReason::InvalidUtf8)?;
        let domain = normalize_domain(domain).ok_or(RejectReason::EmptyDomain)?;
        if !self.window.contains(secs) {
            return Err(RejectReason::OutOfWindow);
        }
        Ok(MentionRecord {
            event_id: event.to_string(),
            bucket: bucket_of(secs),
            domain,
        })
    }
}

fn trim_ascii(mut s: &[u8]) -> &[u8] {
    while let [first, rest @ ..] = s {
        if !first.is_ascii_whitespace() {
            break;
        }
        s = rest;
    }
    while let [rest @ .., last] = s {
        if !last.is_ascii_whitespace() {
            break;
        }
        s = rest;
    }
    s
}

impl<R: BufRead> Iterator for MentionStream<R> {
    type Item = Result<MentionRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            self.line.clear();
            match self.reader.read_until(b'\n', &mut self.line) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    self.failed = true;
                    return Some(Err(Error::Stream(e)));
                }
            }
            let mut end = self.line.len();
            while end > 0 && matches!(self.line[end - 1], b'\n' | b'\r') {
                end -= 1;
            }
            if end == 0 {
                continue;
            }
            if self.skip_header {
                self.skip_header = false;
                continue;
            }
            self.stats.rows_read += 1;
            match self.parse_line(&self.line[..end]) {
                Ok(record) => {
                    self.stats.records_emitted += 1;
                    return Some(Ok(record));
                }
                Err(reason) => self.stats.reject(reason),
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct DomainEntry {
    id: u32,
    country: u16,
}

/// Outlet domain → country lookup with a closed list of valid codes.
#[derive(Debug, Clone)]
pub struct SourceCountryMap {
    codes: Vec<Country>,
    domains: FxHashMap<String, DomainEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SourceFormat {
    pub delimiter: char,
    pub has_header: bool,
}

impl Default for SourceFormat {
    fn default() -> Self {
        SourceFormat {
            delimiter: '\t',
            has_header: false,
        }
    }
}

impl SourceCountryMap {
    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    /// The validated code list, sorted.
    pub fn codes(&self) -> &[Country] {
        &self.codes
    }

    pub fn country_of(&self, domain: &str) -> Option<&Country> {
        self.domains.get(domain).map(|e| &self.codes[e.country as usize])
    }

    fn entry(&self, domain: &str) -> Option<DomainEntry> {
        self.domains.get(domain).copied()
    }
}

/// Loads a two-column `domain, country` file.
///
/// When `valid_codes` is `None` the code list is whatever the file contains.
/// Duplicate domains keep their first mapping and are counted as warnings in
/// the returned stats.
pub fn load_source_country(
    reader: impl BufRead,
    format: &SourceFormat,
    valid_codes: Option<&BTreeSet<Country>>,
) -> Result<(SourceCountryMap, IngestStats)> {
    let delim = u8::try_from(format.delimiter)
        .map_err(|_| Error::Config("source delimiter must be ASCII".into()))?;
    let mut stats = IngestStats::default();
    let mut rows: Vec<(String, Country)> = Vec::new();
    let mut skip_header = format.has_header;
    for line in reader.split(b'\n') {
        let line = line?;
        let line = trim_ascii(&line);
        if line.is_empty() || line.starts_with(b"#") {
            continue;
        }
        if skip_header {
            skip_header = false;
            continue;
        }
        stats.source_rows += 1;
        let mut fields = line.split(|&b| b == delim);
        let parsed = match (fields.next(), fields.next()) {
            (Some(d), Some(c)) => std::str::from_utf8(d)
                .ok()
                .and_then(normalize_domain)
                .zip(std::str::from_utf8(c).ok().and_then(Country::parse)),
            _ => None,
        };
        match parsed {
            Some((domain, code)) => rows.push((domain, code)),
            None => stats.source_rejected_malformed += 1,
        }
    }
    if stats.source_rows == 0 {
        return Err(Error::EmptyInput("source-country file has no rows".into()));
    }

    let codes: Vec<Country> = match valid_codes {
        Some(list) => list.iter().cloned().collect(),
        None => rows.iter().map(|(_, c)| c.clone()).collect::<BTreeSet<_>>().into_iter().collect(),
    };
    if codes.len() > usize::from(u16::MAX) {
        return Err(Error::Config("too many country codes".into()));
    }
    let code_index: HashMap<&Country, u16> =
        codes.iter().enumerate().map(|(i, c)| (c, i as u16)).collect();

    let mut domains = FxHashMap::with_capacity_and_hasher(rows.len(), Default::default());
    for (domain, code) in &rows {
        let Some(&country) = code_index.get(code) else {
            stats.source_rejected_unknown_code += 1;
            continue;
        };
        if domains.contains_key(domain) {
            stats.source_duplicate_domains += 1;
            continue;
        }
        let id = domains.len() as u32;
        domains.insert(domain.clone(), DomainEntry { id, country });
    }
    stats.source_entries = domains.len() as u64;
    if domains.is_empty() {
        return Err(Error::EmptyInput("source-country file has no valid entries".into()));
    }
    Ok((SourceCountryMap { codes, domains }, stats))
}

/// One event's mentions grouped into 15-minute buckets.
///
/// Buckets are strictly increasing and each carries a non-empty set of the
/// countries that mentioned the event in that bucket. The number of listed
/// buckets is the event's lifespan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventTrace {
    event_id: String,
    buckets: Vec<(u64, BTreeSet<Country>)>,
}

impl EventTrace {
    pub fn new(event_id: impl Into<String>, buckets: Vec<(u64, BTreeSet<Country>)>) -> Result<Self> {
        let event_id = event_id.into();
        if buckets.is_empty() {
            return Err(Error::Malformed(format!("event {event_id} has no buckets")));
        }
        if buckets.iter().any(|(_, set)| set.is_empty()) {
            return Err(Error::Malformed(format!("event {event_id} has an empty country set")));
        }
        if buckets.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Malformed(format!(
                "event {event_id} buckets are not strictly increasing"
            )));
        }
        Ok(EventTrace { event_id, buckets })
    }

    pub fn event_id(&self) -> &str {
        &self.event_id
    }

    pub fn buckets(&self) -> &[(u64, BTreeSet<Country>)] {
        &self.buckets
    }

    pub fn lifespan(&self) -> usize {
        self.buckets.len()
    }
}

/// Per-country outlet and article counts among resolved mentions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryActivity {
    pub country: Country,
    pub outlets: u64,
    pub articles: u64,
}

/// Incremental resolver/grouper. Feed records with [`push`](Self::push);
/// builders over disjoint shards of the input combine with
/// [`merge`](Self::merge) in any order.
pub struct TraceBuilder<'m> {
    map: &'m SourceCountryMap,
    events: FxHashMap<String, BTreeMap<u64, Vec<u16>>>,
    /// Events seen with an unmapped mention; those never resolved are
    /// counted in `finish`.
    unmapped_events: FxHashSet<String>,
    articles: Vec<u64>,
    outlet_seen: Vec<bool>,
    stats: IngestStats,
}

impl<'m> TraceBuilder<'m> {
    pub fn new(map: &'m SourceCountryMap) -> Self {
        TraceBuilder {
            map,
            events: FxHashMap::default(),
            unmapped_events: FxHashSet::default(),
            articles: vec![0; map.codes.len()],
            outlet_seen: vec![false; map.domains.len()],
            stats: IngestStats::default(),
        }
    }

    pub fn push(&mut self, record: MentionRecord) {
        let Some(entry) = self.map.entry(&record.domain) else {
            self.stats.mentions_unmapped += 1;
            self.unmapped_events.insert(record.event_id);
            return;
        };
        self.stats.mentions_resolved += 1;
        self.articles[entry.country as usize] += 1;
        self.outlet_seen[entry.id as usize] = true;
        let buckets = match self.events.get_mut(&record.event_id) {
            Some(b) => b,
            None => self.events.entry(record.event_id).or_default(),
        };
        let set = buckets.entry(record.bucket).or_default();
        if let Err(pos) = set.binary_search(&entry.country) {
            set.insert(pos, entry.country);
        }
    }

    pub fn merge(&mut self, other: TraceBuilder<'m>) {
        assert!(std::ptr::eq(self.map, other.map), "merging builders over different maps");
        self.stats.merge(&other.stats);
        for (a, b) in self.articles.iter_mut().zip(&other.articles) {
            *a += b;
        }
        for (a, &b) in self.outlet_seen.iter_mut().zip(&other.outlet_seen) {
            *a |= b;
        }
        for (event, buckets) in other.events {
            let mine = self.events.entry(event).or_default();
            for (bucket, set) in buckets {
                let target = mine.entry(bucket).or_default();
                target.extend(set);
                target.sort_unstable();
                target.dedup();
            }
        }
        self.unmapped_events.extend(other.unmapped_events);
    }

    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }

    /// Traces sorted by event id, resolution stats and per-country activity.
    pub fn finish(self) -> (Vec<EventTrace>, IngestStats, Vec<CountryActivity>) {
        let codes = &self.map.codes;
        let events_unresolved =
            self.unmapped_events.iter().filter(|e| !self.events.contains_key(*e)).count() as u64;
        drop(self.unmapped_events);
        let mut traces: Vec<EventTrace> = self
            .events
            .into_iter()
            .map(|(event_id, buckets)| EventTrace {
                event_id,
                buckets: buckets
                    .into_iter()
                    .map(|(b, set)| (b, set.into_iter().map(|c| codes[c as usize].clone()).collect()))
                    .collect(),
            })
            .collect();
        traces.sort_unstable_by(|a, b| a.event_id.cmp(&b.event_id));

        let mut outlets = vec![0u64; codes.len()];
        for entry in self.map.domains.values() {
            if self.outlet_seen[entry.id as usize] {
                outlets[entry.country as usize] += 1;
            }
        }
        let activity = codes
            .iter()
            .enumerate()
            .filter(|&(i, _)| self.articles[i] > 0)
            .map(|(i, c)| CountryActivity {
                country: c.clone(),
                outlets: outlets[i],
                articles: self.articles[i],
            })
            .collect();

        let mut stats = self.stats;
        stats.events_emitted = traces.len() as u64;
        stats.events_unresolved = events_unresolved;
        (traces, stats, activity)
    }
}

/// Resolves records to countries and groups them into per-event traces.
/// Records may arrive in any order.
pub fn resolve_and_group(
    records: impl IntoIterator<Item = MentionRecord>,
    map: &SourceCountryMap,
) -> (Vec<EventTrace>, IngestStats) {
    let mut builder = TraceBuilder::new(map);
    for r in records {
        builder.push(r);
    }
    let (traces, stats, _) = builder.finish();
    (traces, stats)
}

/// Convenience for the whole stage: read a mentions stream and fold it
/// straight into traces without materializing the records.
pub fn ingest_stream<R: BufRead>(
    reader: R,
    format: &MentionFormat,
    window: AnalysisWindow,
    map: &SourceCountryMap,
) -> Result<(Vec<EventTrace>, IngestStats, Vec<CountryActivity>)> {
    let mut stream = parse_mentions(reader, format, window)?;
    let mut builder = TraceBuilder::new(map);
    for record in &mut stream {
        builder.push(record?);
    }
    let parse_stats = stream.into_stats();
    let (traces, mut stats, activity) = builder.finish();
    stats.merge(&parse_stats);
    Ok((traces, stats, activity))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window_2022() -> AnalysisWindow {
        AnalysisWindow::year(2022).unwrap()
    }

    fn parse_all(text: &str) -> (Vec<MentionRecord>, IngestStats) {
        let mut s = parse_mentions(text.as_bytes(), &MentionFormat::default(), window_2022()).unwrap();
        let recs: Vec<_> = (&mut s).map(|r| r.unwrap()).collect();
        (recs, s.into_stats())
    }

    #[test]
    fn domains_normalize() {
        for raw in ["bbc.co.uk", "https://www.BBC.co.uk/news?x=1", "http://bbc.co.uk:8080/", " bbc.co.uk. "] {
            assert_eq!(normalize_domain(raw).as_deref(), Some("bbc.co.uk"), "{raw}");
        }
        assert_eq!(normalize_domain("https:///path"), None);
        assert_eq!(normalize_domain("www.cnn.com.").as_deref(), Some("cnn.com"));
    }

    fn map(text: &str) -> SourceCountryMap {
        load_source_country(text.as_bytes(), &SourceFormat::default(), None).unwrap().0
    }

    fn rec(e: &str, bucket: u64, d: &str) -> MentionRecord {
        MentionRecord { event_id: e.into(), bucket, domain: d.into() }
    }

    fn set(codes: &[&str]) -> BTreeSet<Country> {
        codes.iter().map(|&c| Country::from(c)).collect()
    }

    #[test]
    fn maps_row_fields_directly() {
        let (recs, stats) = parse_all("E1\t20220101000000\tbbc.co.uk\n");
        let expected = bucket_of(parse_timestamp(b"20220101000000").unwrap());
        assert_eq!(expected, 1_640_995_200 / 900);
        assert_eq!(recs, vec![rec("E1", expected, "bbc.co.uk")]);
        assert_eq!(stats.rows_read, 1);
    }

    #[test]
    fn rejects_rows_outside_window() {
        let (recs, stats) = parse_all("E1\t20211231235900\tbbc.co.uk\n");
        assert!(recs.is_empty());
        assert_eq!(stats.rejected[&RejectReason::OutOfWindow], 1);
    }

    #[test]
    fn buckets_floor_to_quarter_hours() {
        let b = |ts: &str| bucket_of(parse_timestamp(ts.as_bytes()).unwrap());
        assert_eq!(b("20220101001459"), b("20220101000000"));
        assert_eq!(b("20220101001500"), b("20220101000000") + 1);
        assert_eq!(parse_timestamp(b"20220230000000"), None);
        assert_eq!(parse_timestamp(b"2022010100000"), None);
        assert_eq!(parse_timestamp(b"19691231235959"), None);
    }

    #[test]
    fn counts_each_rejection_reason() {
        let text = "E1\t20220101000000\n\
                    \t20220101000000\tx.com\n\
                    E2\t2022-01-01\tx.com\n\
                    E3\t20220101000000\t  \n\
                    E4\t20220101000000\tHTTPS://News.Example.com/a/b\r\n\
                    \n";
        let (recs, stats) = parse_all(text);
        assert_eq!(recs, vec![rec("E4", bucket_of(1_640_995_200), "news.example.com")]);
        assert_eq!(stats.rows_read, 5);
        assert_eq!(stats.rejected[&RejectReason::MissingColumn], 1);
        assert_eq!(stats.rejected[&RejectReason::EmptyEventId], 1);
        assert_eq!(stats.rejected[&RejectReason::BadTimestamp], 1);
        assert_eq!(stats.rejected[&RejectReason::EmptyDomain], 1);
        assert_eq!(stats.rows_read, stats.records_emitted + stats.rejected_total());
    }

    #[test]
    fn gdelt_layout_and_header() {
        let format = MentionFormat { has_header: true, ..MentionFormat::gdelt_mentions() };
        let text = "id\tevt\tmention\ttype\tsource\n1001\t20211231000000\t20220105101500\t1\tlemonde.fr\turl\n";
        let recs: Vec<_> = parse_mentions(text.as_bytes(), &format, window_2022())
            .unwrap()
            .map(Result::unwrap)
            .collect();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].domain, "lemonde.fr");
        assert_eq!(recs[0].bucket, bucket_of(parse_timestamp(b"20220105101500").unwrap()));
    }

    #[test]
    fn source_map_first_wins_on_duplicates() {
        let (m, stats) =
            load_source_country("x.com\tUS\nx.com\tGB\n".as_bytes(), &SourceFormat::default(), None).unwrap();
        assert_eq!(m.country_of("x.com"), Some(&Country::from("US")));
        assert_eq!(stats.source_duplicate_domains, 1);
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn source_map_validates_codes() {
        let valid: BTreeSet<Country> = ["UK", "US"].into_iter().map(Country::from).collect();
        let (m, stats) = load_source_country(
            "bbc.co.uk\tUK\ncnn.com\tUS\nfoo.zz\tZZ\n".as_bytes(),
            &SourceFormat::default(),
            Some(&valid),
        )
        .unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.country_of("bbc.co.uk"), Some(&Country::from("UK")));
        assert_eq!(stats.source_rejected_unknown_code, 1);
    }

    #[test]
    fn empty_source_file_is_fatal() {
        let err = load_source_country("\n\n".as_bytes(), &SourceFormat::default(), None);
        assert!(matches!(err, Err(Error::EmptyInput(_))));
    }

    #[test]
    fn same_bucket_mentions_share_one_set() {
        let m = map("bbc.co.uk\tUK\ncnn.com\tUS\n");
        let (traces, _) = resolve_and_group([rec("E1", 5, "bbc.co.uk"), rec("E1", 5, "cnn.com")], &m);
        assert_eq!(traces.len(), 1);
        assert_eq!(traces[0].buckets(), &[(5, set(&["UK", "US"]))]);
    }

    #[test]
    fn unmapped_only_event_is_dropped() {
        let m = map("bbc.co.uk\tUK\n");
        let (traces, stats) = resolve_and_group([rec("E2", 5, "unknown.org")], &m);
        assert!(traces.is_empty());
        assert_eq!(stats.mentions_unmapped, 1);
        assert_eq!(stats.events_unresolved, 1);
    }

    #[test]
    fn groups_unsorted_buckets_and_collapses_duplicates() {
        let m = map("bbc.co.uk\tUK\ntheguardian.com\tUK\nlemonde.fr\tFR\n");
        let (traces, stats) = resolve_and_group(
            [rec("E3", 12, "lemonde.fr"), rec("E3", 10, "bbc.co.uk"), rec("E3", 10, "theguardian.com")],
            &m,
        );
        assert_eq!(traces[0].buckets(), &[(10, set(&["UK"])), (12, set(&["FR"]))]);
        assert_eq!(stats.mentions_resolved, 3);
    }

    #[test]
    fn shard_merge_matches_single_pass() {
        let m = map("a.com\tAA\nb.com\tBB\nc.com\tCC\n");
        let recs: Vec<_> = (0..60)
            .map(|i| rec(&format!("E{}", i % 7), (i % 5) as u64, ["a.com", "b.com", "c.com", "z.com"][i % 4]))
            .collect();
        let mut whole = TraceBuilder::new(&m);
        recs.iter().cloned().for_each(|r| whole.push(r));
        let whole = whole.finish();
        for split in [1, 17, 59] {
            let (left, right) = recs.split_at(split);
            let mut a = TraceBuilder::new(&m);
            let mut b = TraceBuilder::new(&m);
            left.iter().cloned().for_each(|r| a.push(r));
            right.iter().cloned().for_each(|r| b.push(r));
            b.merge(a);
            assert_eq!(b.finish(), whole);
        }
    }

    #[test]
    fn rejects_invalid_traces() {
        assert!(EventTrace::new("E", vec![]).is_err());
        assert!(EventTrace::new("E", vec![(1, set(&["UK"])), (1, set(&["US"]))]).is_err());
        assert!(EventTrace::new("E", vec![(1, BTreeSet::new())]).is_err());
    }
}
