//! CSV datasets of per-country emissions and population.
//!
//! ```text
//! country,emissions_prev,emissions_curr,population
//! Canada,"544,172","544,091","33,311,400"
//! ```
//!
//! Numbers may carry thousands separators, which only survive CSV splitting
//! when the field is quoted. Emissions are in 1000 metric tons.

use std::collections::HashSet;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{cap_from_reduction, Agent, AllocationProblem, FairShareAgent, PotentialSpec};

pub const HEADER: [&str; 4] = ["country", "emissions_prev", "emissions_curr", "population"];

/// Name of the bundled eight-country fixture.
pub const TABLE2_FIXTURE: &str = "table2_8countries";

const TABLE2_CSV: &str = include_str!("../data/table2_8countries.csv");
const TABLE2_PROVENANCE: &str = "CO2 emissions 2007/2008: UN Millennium Development Goals \
     Database; population 2008: World Bank World Development Indicators";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub country: String,
    pub emissions_prev: f64,
    pub emissions_curr: f64,
    pub population: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<DatasetRecord>,
    pub provenance: String,
}

/// How the total cap is set when turning a dataset into a problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapMode {
    Explicit(f64),
    /// Fraction below the summed `emissions_prev`.
    Reduction(f64),
}

/// Parse a number, allowing `1,234,567`-style grouping.
fn parse_quantity(raw: &str) -> Option<f64> {
    let s = raw.trim();
    let plain = if s.contains(',') {
        let (int_part, frac) = match s.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (s, None),
        };
        let mut groups = int_part.split(',');
        let head = groups.next()?;
        let head_ok = (1..=3).contains(&head.len()) && head.bytes().all(|b| b.is_ascii_digit());
        let rest_ok = groups
            .clone()
            .all(|g| g.len() == 3 && g.bytes().all(|b| b.is_ascii_digit()));
        if !(head_ok && rest_ok) {
            return None;
        }
        let mut joined: String = int_part.chars().filter(|&c| c != ',').collect();
        if let Some(f) = frac {
            joined.push('.');
            joined.push_str(f);
        }
        joined
    } else {
        s.to_string()
    };
    plain.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn header_diff(found: &[String]) -> String {
    let found_set: HashSet<&str> = found.iter().map(String::as_str).collect();
    let missing: Vec<&str> = HEADER
        .iter()
        .copied()
        .filter(|h| !found_set.contains(h))
        .collect();
    let unknown: Vec<&str> = found
        .iter()
        .map(String::as_str)
        .filter(|h| !HEADER.contains(h))
        .collect();
    format!(
        "expected header `{}`, found `{}` (missing: [{}], unknown: [{}])",
        HEADER.join(","),
        found.join(","),
        missing.join(", "),
        unknown.join(", ")
    )
}

/// Parse a dataset from CSV. Rows are returned in file order.
pub fn parse_dataset<R: Read>(source: R, provenance: impl Into<String>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);
    let mut rows = reader.records();

    let header: Vec<String> = match rows.next() {
        Some(h) => h?.iter().map(str::to_string).collect(),
        None => return Err(Error::Format(header_diff(&[]))),
    };
    let mut columns = [usize::MAX; 4];
    for (slot, want) in columns.iter_mut().zip(HEADER) {
        if let Some(pos) = header.iter().position(|h| h == want) {
            *slot = pos;
        }
    }
    if header.len() != HEADER.len() || columns.contains(&usize::MAX) {
        return Err(Error::Format(header_diff(&header)));
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for row in rows {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        if row.len() != HEADER.len() {
            return Err(Error::Row {
                line,
                message: format!("expected {} fields, found {}", HEADER.len(), row.len()),
            });
        }
        let country = row[columns[0]].to_string();
        if country.is_empty() {
            return Err(Error::Row {
                line,
                message: "country name is empty".into(),
            });
        }
        let mut numbers = [0.0; 3];
        for (value, (&col, name)) in numbers
            .iter_mut()
            .zip(columns[1..].iter().zip(&HEADER[1..]))
        {
            let raw = &row[col];
            *value = parse_quantity(raw).ok_or_else(|| Error::Row {
                line,
                message: format!("{name}: `{raw}` is not a number"),
            })?;
            if *value < 0.0 {
                return Err(Error::Row {
                    line,
                    message: format!("{name} must be nonnegative, got {raw}"),
                });
            }
        }
        let [emissions_prev, emissions_curr, population] = numbers;
        if population <= 0.0 {
            return Err(Error::Row {
                line,
                message: format!("population must be positive, got {}", &row[columns[3]]),
            });
        }
        if !seen.insert(country.clone()) {
            return Err(Error::Validation(format!(
                "duplicate country `{country}` (line {line})"
            )));
        }
        records.push(DatasetRecord {
            country,
            emissions_prev,
            emissions_curr,
            population,
        });
    }
    if records.is_empty() {
        return Err(Error::Validation("dataset has no records".into()));
    }
    Ok(Dataset {
        records,
        provenance: provenance.into(),
    })
}

/// Parse fair-division players from CSV with header `name,weight,potential`.
pub fn parse_players<R: Read>(source: R) -> Result<Vec<FairShareAgent>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut players = Vec::new();
    for row in reader.deserialize::<FairShareAgent>() {
        players.push(row?);
    }
    if players.is_empty() {
        return Err(Error::Validation("no players given".into()));
    }
    Ok(players)
}

/// Parse an inline `name:weight:potential` triple.
pub fn parse_player_triple(s: &str) -> Result<FairShareAgent> {
    let bad = || Error::Format(format!("expected name:weight:potential, got `{s}`"));
    let mut parts = s.rsplitn(3, ':');
    let potential = parts.next().ok_or_else(bad)?;
    let weight = parts.next().ok_or_else(bad)?;
    let name = parts.next().ok_or_else(bad)?;
    if name.trim().is_empty() {
        return Err(bad());
    }
    let num = |v: &str| v.trim().parse::<f64>().ok().filter(|x| x.is_finite());
    Ok(FairShareAgent::new(
        name.trim(),
        num(weight).ok_or_else(bad)?,
        num(potential).ok_or_else(bad)?,
    ))
}

impl Dataset {
    /// The bundled fixture with the given name, if any.
    pub fn bundled(name: &str) -> Option<Dataset> {
        match name {
            TABLE2_FIXTURE | "table2" => Some(Self::table2()),
            _ => None,
        }
    }

    /// Eight countries, 2007/2008 CO2 emissions and 2008 population.
    pub fn table2() -> Dataset {
        parse_dataset(TABLE2_CSV.as_bytes(), TABLE2_PROVENANCE).expect("bundled fixture is valid")
    }

    /// Load from a path, or a bundled fixture when `spec` names one.
    pub fn load(spec: &str) -> Result<Dataset> {
        if let Some(ds) = Self::bundled(spec) {
            return Ok(ds);
        }
        let file = std::fs::File::open(spec)?;
        parse_dataset(file, format!("file: {spec}"))
    }

    /// Serialize back to CSV with the canonical header. Numbers use the
    /// shortest representation that round-trips.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(HEADER)?;
        for r in &self.records {
            w.write_record([
                r.country.clone(),
                r.emissions_prev.to_string(),
                r.emissions_curr.to_string(),
                r.population.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
    }

    pub fn totals(&self) -> (f64, f64, f64) {
        self.records.iter().fold((0.0, 0.0, 0.0), |(p, c, n), r| {
            (p + r.emissions_prev, c + r.emissions_curr, n + r.population)
        })
    }

    pub fn agents(&self) -> Vec<Agent> {
        self.records
            .iter()
            .map(|r| {
                Agent::new(r.country.clone(), r.population, r.emissions_curr)
                    .with_baseline(r.emissions_prev)
            })
            .collect()
    }

    /// Build an allocation problem: demand is current emissions, baseline is
    /// previous emissions.
    pub fn to_problem(&self, cap: CapMode, potential: PotentialSpec) -> Result<AllocationProblem> {
        let agents = self.agents();
        let total = match cap {
            CapMode::Explicit(q) => q,
            CapMode::Reduction(f) => cap_from_reduction(&agents, f)?,
        };
        AllocationProblem::new(agents, total, potential)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Dataset> {
        parse_dataset(s.as_bytes(), "test")
    }

    #[test]
    fn fixture_totals() {
        let ds = Dataset::table2();
        assert_eq!(ds.records.len(), 8);
        assert_eq!(ds.totals(), (17_612_510.0, 17_708_472.0, 2_135_331_237.0));
        let names: Vec<&str> = ds.records.iter().map(|r| r.country.as_str()).collect();
        assert_eq!(
            names,
            ["Canada", "China", "Germany", "Italy", "Japan", "Russia", "UK", "US"]
        );
    }

    #[test]
    fn fixture_problem() {
        let ds = Dataset::table2();
        let p = ds
            .to_problem(CapMode::Reduction(0.03), PotentialSpec::default())
            .unwrap();
        assert_eq!(p.total_permits(), 17_084_135.0);
        let p0 = ds
            .to_problem(CapMode::Reduction(0.0), PotentialSpec::default())
            .unwrap();
        assert_eq!(p0.total_permits(), 17_612_510.0);
        let px = ds
            .to_problem(CapMode::Explicit(17_708_472.0), PotentialSpec::default())
            .unwrap();
        assert_eq!(px.total_permits(), 17_708_472.0);
    }

    #[test]
    fn thousands_separators() {
        assert_eq!(parse_quantity("1,234,567"), Some(1_234_567.0));
        assert_eq!(parse_quantity("12,345.5"), Some(12_345.5));
        assert_eq!(parse_quantity(" 42 "), Some(42.0));
        assert_eq!(parse_quantity("1,23"), None);
        assert_eq!(parse_quantity("1234,567"), None);
        assert_eq!(parse_quantity(",123"), None);
        assert_eq!(parse_quantity("abc"), None);
        assert_eq!(parse_quantity("NaN"), None);
        assert_eq!(parse_quantity("inf"), None);
    }

    #[test]
    fn unquoted_separator_is_a_row_error() {
        let err =
            parse("country,emissions_prev,emissions_curr,population\nX,1,000,5,7\n").unwrap_err();
        assert!(matches!(err, Error::Row { line: 2, .. }), "{err}");
    }

    #[test]
    fn header_errors() {
        let err = parse("").unwrap_err();
        assert!(matches!(err, Error::Format(_)));
        let err = parse("country,prev,emissions_curr,population\n").unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("missing: [emissions_prev]") && msg.contains("unknown: [prev]"),
            "{msg}"
        );
    }

    #[test]
    fn header_only_is_empty() {
        let err = parse("country,emissions_prev,emissions_curr,population\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn row_errors() {
        let h = "country,emissions_prev,emissions_curr,population\n";
        let err = parse(&format!("{h}X,100,100,0\n")).unwrap_err();
        assert!(
            matches!(err, Error::Row { line: 2, ref message } if message.contains("population must be positive")),
            "{err}"
        );
        let err = parse(&format!("{h}A,1,1,1\nB,1,-3,1\n")).unwrap_err();
        assert!(matches!(err, Error::Row { line: 3, .. }), "{err}");
        let err = parse(&format!("{h}A,1,x,1\n")).unwrap_err();
        assert!(matches!(err, Error::Row { line: 2, .. }), "{err}");
        let err = parse(&format!("{h}A,1,1,1\nA,2,2,2\n")).unwrap_err();
        assert!(
            matches!(err, Error::Validation(ref m) if m.contains("`A`")),
            "{err}"
        );
    }

    #[test]
    fn crlf_whitespace_and_column_order() {
        let ds =
            parse("population, country ,emissions_curr,emissions_prev\r\n 10 , A , 2.5 , 3\r\n")
                .unwrap();
        assert_eq!(
            ds.records,
            vec![DatasetRecord {
                country: "A".into(),
                emissions_prev: 3.0,
                emissions_curr: 2.5,
                population: 10.0,
            }]
        );
    }

    #[test]
    fn fixture_round_trip() {
        let ds = Dataset::table2();
        let again = parse(&ds.to_csv().unwrap()).unwrap();
        assert_eq!(ds.records, again.records);
    }

    #[test]
    fn player_inputs() {
        let p = parse_player_triple("adult:100:-2.5").unwrap();
        assert_eq!(p, FairShareAgent::new("adult", 100.0, -2.5));
        assert!(parse_player_triple("adult:100").is_err());
        assert!(parse_player_triple(":1:1").is_err());
        assert!(parse_player_triple("a:x:1").is_err());

        let players =
            parse_players("name,weight,potential\na,100,-2\nb, 55 ,-1.8\n".as_bytes()).unwrap();
        assert_eq!(players[1], FairShareAgent::new("b", 55.0, -1.8));
        assert!(parse_players("name,weight,potential\n".as_bytes()).is_err());
        assert!(parse_players("name,weight\na,1\n".as_bytes()).is_err());
    }

    #[test]
    fn load_unknown_path() {
        assert!(matches!(
            Dataset::load("/nonexistent/x.csv"),
            Err(Error::Io(_))
        ));
    }
}
