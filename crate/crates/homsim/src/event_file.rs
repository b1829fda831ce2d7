//! Line-delimited event files.
//!
//! ```text
//! #homsim-events	version=1	pairs=3	pair_rate_hz=10	pair_count=3	...
//! 104882021	A	1.765600	1
//! 104882021	B	3.531200	2
//! ```
//!
//! The header carries the format version, the number of pairs generated and
//! every field of the [`RunConfig`], so a file is enough to replay its run.
//! Records are `t_ns`, detector, energy in eV with six decimals and the
//! inferred photon number, separated by tabs. Files may omit the header, in
//! which case the pair count and run parameters are unknown.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use homsim_core::acquisition::{EventStream, RunConfig, RunLength};
use homsim_core::biphoton::CrystalConfig;
use homsim_core::detector::{DetectorId, DetectorModel, EventRecord};
use homsim_core::interference::ExchangeSign;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MAGIC: &str = "#homsim-events";

/// Contents of an event file.
#[derive(Debug, Clone, PartialEq)]
pub struct EventFile {
    /// Run parameters and pair count, when the file has a header.
    pub header: Option<(RunConfig, u64)>,
    pub events: Vec<EventRecord>,
}

impl EventFile {
    /// The file as a stream, if the header says how it was made.
    pub fn into_stream(self) -> Option<EventStream> {
        self.header.map(|(config, pairs)| EventStream {
            config,
            pairs,
            events: self.events,
        })
    }
}

impl From<EventStream> for EventFile {
    fn from(s: EventStream) -> Self {
        EventFile {
            header: Some((s.config, s.pairs)),
            events: s.events,
        }
    }
}

fn header_fields(config: &RunConfig, pairs: u64) -> Vec<(&'static str, String)> {
    let mut f = vec![
        ("version", FORMAT_VERSION.to_string()),
        ("pairs", pairs.to_string()),
        ("pair_rate_hz", config.pair_rate_hz.to_string()),
    ];
    match config.length {
        RunLength::PairCount(n) => f.push(("pair_count", n.to_string())),
        RunLength::DurationSeconds(d) => f.push(("duration_s", d.to_string())),
    }
    f.extend([
        ("tau_fs", config.tau_fs.to_string()),
        ("crystal_length_mm", config.crystal.length_mm().to_string()),
        ("dvg_fs_per_mm", config.crystal.dvg_fs_per_mm().to_string()),
        ("pump_nm", config.crystal.pump_wavelength_nm().to_string()),
        ("sign", config.sign.as_str().to_string()),
        ("visibility", config.visibility.to_string()),
        ("seed", config.seed.to_string()),
    ]);
    for (d, keys) in config.detectors.iter().zip([DETECTOR_KEYS_A, DETECTOR_KEYS_B]) {
        f.extend([
            (keys[0], d.eta().to_string()),
            (keys[1], d.photon_energy_ev().to_string()),
            (keys[2], d.energy_fwhm_ev().to_string()),
            (keys[3], d.relax_window_us().to_string()),
        ]);
    }
    f
}

const DETECTOR_KEYS_A: [&str; 4] = ["eta_a", "photon_energy_a_ev", "fwhm_a_ev", "relax_window_a_us"];
const DETECTOR_KEYS_B: [&str; 4] = ["eta_b", "photon_energy_b_ev", "fwhm_b_ev", "relax_window_b_us"];

/// Writes the header line.
pub fn write_header<W: Write>(config: &RunConfig, pairs: u64, w: &mut W) -> std::io::Result<()> {
    write!(w, "{MAGIC}")?;
    for (k, v) in header_fields(config, pairs) {
        write!(w, "\t{k}={v}")?;
    }
    writeln!(w)
}

pub fn write_record<W: Write>(e: &EventRecord, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{}\t{}\t{:.6}\t{}", e.t_ns, e.det.as_char(), e.energy_ev, e.n_inferred)
}

/// Serialises a stream: header, then one record per line.
pub fn write_stream<W: Write>(stream: &EventStream, w: &mut W) -> std::io::Result<()> {
    write_header(&stream.config, stream.pairs, w)?;
    stream.events.iter().try_for_each(|e| write_record(e, w))
}

pub fn to_bytes(stream: &EventStream) -> Vec<u8> {
    let mut out = Vec::new();
    write_stream(stream, &mut out).expect("writing to memory");
    out
}

struct HeaderFields {
    line: usize,
    map: BTreeMap<String, String>,
}

impl HeaderFields {
    fn take(&mut self, key: &str) -> Result<String> {
        self.map
            .remove(key)
            .ok_or_else(|| Error::parse(self.line, format!("header is missing `{key}`")))
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let raw = self.take(key)?;
        raw.parse()
            .map_err(|_| Error::parse(self.line, format!("bad value for `{key}`: {raw:?}")))
    }
}

fn parse_header(text: &str, line: usize) -> Result<(RunConfig, u64)> {
    let mut parts = text.split('\t');
    if parts.next() != Some(MAGIC) {
        return Err(Error::parse(line, "header must start with #homsim-events"));
    }
    let mut map = BTreeMap::new();
    for part in parts {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("header field {part:?} is not key=value")))?;
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::parse(line, format!("header repeats `{k}`")));
        }
    }
    let mut h = HeaderFields { line, map };
    let version = h.take("version")?;
    if version != FORMAT_VERSION.to_string() {
        return Err(Error::Version {
            what: "event file",
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let pairs: u64 = h.take_parsed("pairs")?;
    let pair_rate_hz = h.take_parsed("pair_rate_hz")?;
    let length = match (h.map.contains_key("pair_count"), h.map.contains_key("duration_s")) {
        (true, false) => RunLength::PairCount(h.take_parsed("pair_count")?),
        (false, true) => RunLength::DurationSeconds(h.take_parsed("duration_s")?),
        _ => return Err(Error::parse(line, "header needs exactly one of `pair_count` and `duration_s`")),
    };
    let tau_fs = h.take_parsed("tau_fs")?;
    let crystal = CrystalConfig::new(
        h.take_parsed("crystal_length_mm")?,
        h.take_parsed("dvg_fs_per_mm")?,
        h.take_parsed("pump_nm")?,
    )
    .map_err(|e| Error::parse(line, e.to_string()))?;
    let sign: ExchangeSign = h.take_parsed("sign")?;
    let visibility = h.take_parsed("visibility")?;
    let seed = h.take_parsed("seed")?;
    let mut detector = |id, keys: [&str; 4]| -> Result<DetectorModel> {
        DetectorModel::new(
            id,
            h.take_parsed(keys[0])?,
            h.take_parsed(keys[1])?,
            h.take_parsed(keys[2])?,
            h.take_parsed(keys[3])?,
        )
        .map_err(|e| Error::parse(line, e.to_string()))
    };
    let detectors = [
        detector(DetectorId::A, DETECTOR_KEYS_A)?,
        detector(DetectorId::B, DETECTOR_KEYS_B)?,
    ];
    if let Some(k) = h.map.keys().next() {
        return Err(Error::parse(line, format!("unknown header field `{k}`")));
    }
    let config = RunConfig {
        pair_rate_hz,
        length,
        tau_fs,
        crystal,
        sign,
        visibility,
        detectors,
        seed,
    };
    config.validate().map_err(|e| Error::parse(line, e.to_string()))?;
    Ok((config, pairs))
}

fn parse_record(text: &str, line: usize) -> Result<EventRecord> {
    let fields: Vec<&str> = text.split('\t').collect();
    if fields.len() != 4 {
        return Err(Error::parse(
            line,
            format!("expected 4 tab-separated fields, found {}", fields.len()),
        ));
    }
    if fields[0].starts_with('-') {
        return Err(Error::parse(line, format!("negative timestamp {}", fields[0])));
    }
    let t_ns = fields[0]
        .parse()
        .map_err(|_| Error::parse(line, format!("bad timestamp {:?}", fields[0])))?;
    let det = match fields[1] {
        "A" => DetectorId::A,
        "B" => DetectorId::B,
        other => return Err(Error::parse(line, format!("unknown detector {other:?}"))),
    };
    let energy_ev: f64 = fields[2]
        .parse()
        .map_err(|_| Error::parse(line, format!("bad energy {:?}", fields[2])))?;
    if !(energy_ev.is_finite() && energy_ev >= 0.0) {
        return Err(Error::parse(line, format!("energy must be finite and non-negative, got {}", fields[2])));
    }
    let n_inferred = fields[3]
        .parse()
        .map_err(|_| Error::parse(line, format!("bad photon number {:?}", fields[3])))?;
    Ok(EventRecord {
        t_ns,
        det,
        energy_ev,
        n_inferred,
    })
}

/// Parses an event file. Errors carry the 1-based line number.
pub fn read<R: BufRead>(reader: R) -> Result<EventFile> {
    let mut header = None;
    let mut events: Vec<EventRecord> = Vec::new();
    for (i, line) in reader.split(b'\n').enumerate() {
        let n = i + 1;
        let bytes = line.map_err(|e| Error::parse(n, e.to_string()))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| Error::parse(n, "not valid UTF-8"))?;
        if text.ends_with('\r') {
            return Err(Error::parse(n, "CR line ending; files use LF"));
        }
        if n == 1 && text.starts_with('#') {
            header = Some(parse_header(text, n)?);
            continue;
        }
        if text.is_empty() {
            return Err(Error::parse(n, "empty line"));
        }
        let record = parse_record(text, n)?;
        if events.last().is_some_and(|last| record.t_ns < last.t_ns) {
            return Err(Error::parse(n, "timestamp earlier than the previous record"));
        }
        events.push(record);
    }
    Ok(EventFile { header, events })
}

pub fn from_bytes(bytes: &[u8]) -> Result<EventFile> {
    read(bytes)
}
