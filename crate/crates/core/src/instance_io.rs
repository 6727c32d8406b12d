//! Instance files.
//!
//! Two text formats are read. The canonical one is line-oriented:
//!
//! ```text
//! # comment
//! NAME c50
//! CAPACITY 160
//! SPEED 1
//! WORKDAY 480
//! CUTOFF 240
//! VEHICLES 50
//! BOUNDS 0 0 100 100
//! DEPOT 30 40
//! REQUEST 1 37 52 7 10 0
//! ```
//!
//! with `REQUEST <id> <x> <y> <volume> <service> <arrival>`. `SPEED`,
//! `CUTOFF`, `VEHICLES` and `BOUNDS` are optional.
//!
//! The second is a TSPLIB-style CVRP listing (`NODE_COORD_SECTION`,
//! `DEMAND_SECTION`, `DEPOT_SECTION`) extended by a `WORKDAY` header and an
//! `ARRIVAL_SECTION` of `<node id> <arrival> <service>` rows. Nodes missing
//! from the arrival section are known at the start of the day and take no
//! service time. The format is picked by looking for `NODE_COORD_SECTION`.

use std::fmt::Write as _;
use std::path::Path;

use crate::domain::{Bounds, InstanceBuilder, Point, ProblemInstance, Request, RequestId};
use crate::error::{DvrpError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstanceFormat {
    Canonical,
    CvrpWithArrivals,
}

/// A file's content together with its detected format.
#[derive(Clone, Debug)]
pub struct RawInstanceFile {
    pub source: String,
    pub format: InstanceFormat,
    pub content: String,
}

impl RawInstanceFile {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path)?;
        Ok(RawInstanceFile {
            source: path.display().to_string(),
            format: detect_format(&content),
            content,
        })
    }

    pub fn parse(&self) -> Result<ProblemInstance> {
        match self.format {
            InstanceFormat::Canonical => parse_canonical(&self.content),
            InstanceFormat::CvrpWithArrivals => parse_cvrp(&self.content),
        }
    }
}

pub fn detect_format(content: &str) -> InstanceFormat {
    let tsplib = content
        .lines()
        .any(|l| l.trim().eq_ignore_ascii_case("NODE_COORD_SECTION"));
    if tsplib {
        InstanceFormat::CvrpWithArrivals
    } else {
        InstanceFormat::Canonical
    }
}

pub fn parse_instance(content: &str) -> Result<ProblemInstance> {
    match detect_format(content) {
        InstanceFormat::Canonical => parse_canonical(content),
        InstanceFormat::CvrpWithArrivals => parse_cvrp(content),
    }
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    RawInstanceFile::read(path)?.parse()
}

/// Lines with comments and surrounding whitespace removed, numbered from 1.
fn content_lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn real(line: usize, token: Option<&str>, what: &str) -> Result<f64> {
    let token = token.ok_or_else(|| DvrpError::parse(line, format!("missing {what}")))?;
    let value: f64 = token
        .parse()
        .map_err(|_| DvrpError::parse(line, format!("{what}: '{token}' is not a number")))?;
    if !value.is_finite() {
        return Err(DvrpError::parse(line, format!("{what} is not finite")));
    }
    Ok(value)
}

fn integer<T: std::str::FromStr>(line: usize, token: Option<&str>, what: &str) -> Result<T> {
    let token = token.ok_or_else(|| DvrpError::parse(line, format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| DvrpError::parse(line, format!("{what}: '{token}' is not an integer")))
}

fn no_more<'a>(line: usize, mut tokens: impl Iterator<Item = &'a str>) -> Result<()> {
    match tokens.next() {
        None => Ok(()),
        Some(t) => Err(DvrpError::parse(line, format!("unexpected token '{t}'"))),
    }
}

fn parse_canonical(content: &str) -> Result<ProblemInstance> {
    let mut name = None;
    let mut capacity = None;
    let mut workday = None;
    let mut depot = None;
    let mut speed = 1.0;
    let mut cutoff = None;
    let mut vehicles = None;
    let mut bounds = None;
    let mut requests = Vec::new();
    let mut last_line = 0;

    for (n, line) in content_lines(content) {
        last_line = n;
        let mut tokens = line.split_whitespace();
        let key = tokens.next().expect("non-empty line");
        match key.to_ascii_uppercase().as_str() {
            "NAME" => {
                let rest: Vec<&str> = tokens.collect();
                if rest.is_empty() {
                    return Err(DvrpError::parse(n, "missing name"));
                }
                name = Some(rest.join(" "));
                continue;
            }
            "CAPACITY" => capacity = Some(real(n, tokens.next(), "capacity")?),
            "SPEED" => speed = real(n, tokens.next(), "speed")?,
            "WORKDAY" => workday = Some(real(n, tokens.next(), "workday")?),
            "CUTOFF" => cutoff = Some(real(n, tokens.next(), "cutoff")?),
            "VEHICLES" => vehicles = Some(integer::<usize>(n, tokens.next(), "vehicle count")?),
            "BOUNDS" => {
                let min = Point::new(
                    real(n, tokens.next(), "xmin")?,
                    real(n, tokens.next(), "ymin")?,
                );
                let max = Point::new(
                    real(n, tokens.next(), "xmax")?,
                    real(n, tokens.next(), "ymax")?,
                );
                if min.x > max.x || min.y > max.y {
                    return Err(DvrpError::parse(n, "bounds minimum exceeds maximum"));
                }
                bounds = Some(Bounds { min, max });
            }
            "DEPOT" => {
                depot = Some(Point::new(
                    real(n, tokens.next(), "depot x")?,
                    real(n, tokens.next(), "depot y")?,
                ));
            }
            "REQUEST" => {
                let id = RequestId(integer(n, tokens.next(), "request id")?);
                let location =
                    Point::new(real(n, tokens.next(), "x")?, real(n, tokens.next(), "y")?);
                let volume = real(n, tokens.next(), "volume")?;
                let service_time = real(n, tokens.next(), "service time")?;
                let arrival_time = real(n, tokens.next(), "arrival time")?;
                if volume < 0.0 {
                    return Err(DvrpError::InvalidInstance(format!(
                        "line {n}: request {id} has negative volume {volume}"
                    )));
                }
                requests.push(Request {
                    id,
                    location,
                    volume,
                    service_time,
                    arrival_time,
                });
            }
            other => return Err(DvrpError::parse(n, format!("unknown keyword '{other}'"))),
        }
        no_more(n, tokens)?;
    }

    let missing = |what: &str| DvrpError::parse(last_line.max(1), format!("missing {what} line"));
    let mut builder = InstanceBuilder::new(
        name.ok_or_else(|| missing("NAME"))?,
        depot.ok_or_else(|| missing("DEPOT"))?,
        capacity.ok_or_else(|| missing("CAPACITY"))?,
        workday.ok_or_else(|| missing("WORKDAY"))?,
    )
    .speed(speed)
    .requests(requests);
    builder.cutoff_time = cutoff;
    builder.vehicle_count = vehicles;
    builder.bounds = bounds;
    builder.build()
}

#[derive(PartialEq, Eq, Clone, Copy)]
enum Section {
    Header,
    Coords,
    Demands,
    Depots,
    Arrivals,
}

fn parse_cvrp(content: &str) -> Result<ProblemInstance> {
    let mut name = None;
    let mut capacity = None;
    let mut dimension: Option<usize> = None;
    let mut workday = None;
    let mut speed = 1.0;
    let mut cutoff = None;
    let mut vehicles = None;
    let mut coords: Vec<(u32, Point, usize)> = Vec::new();
    let mut demands: std::collections::HashMap<u32, f64> = Default::default();
    let mut depots: Vec<u32> = Vec::new();
    let mut arrivals: std::collections::HashMap<u32, (f64, f64)> = Default::default();
    let mut section = Section::Header;
    let mut last_line = 0;

    for (n, line) in content_lines(content) {
        last_line = n;
        let upper = line.to_ascii_uppercase();
        let next = match upper.as_str() {
            "NODE_COORD_SECTION" => Some(Section::Coords),
            "DEMAND_SECTION" => Some(Section::Demands),
            "DEPOT_SECTION" => Some(Section::Depots),
            "ARRIVAL_SECTION" => Some(Section::Arrivals),
            "EOF" => break,
            _ => None,
        };
        if let Some(s) = next {
            section = s;
            continue;
        }
        let mut tokens = line.split_whitespace();
        match section {
            Section::Header => {
                let (key, value) = match line.split_once(':') {
                    Some((k, v)) => (k.trim(), v.trim()),
                    None => line
                        .split_once(char::is_whitespace)
                        .map_or((line, ""), |(k, v)| (k.trim(), v.trim())),
                };
                match key.to_ascii_uppercase().as_str() {
                    "NAME" => name = Some(value.to_string()),
                    "COMMENT" | "TYPE" | "EDGE_WEIGHT_TYPE" => {}
                    "CAPACITY" => capacity = Some(real(n, Some(value), "capacity")?),
                    "DIMENSION" => dimension = Some(integer(n, Some(value), "dimension")?),
                    "VEHICLES" => {
                        vehicles = Some(integer::<usize>(n, Some(value), "vehicle count")?)
                    }
                    "SPEED" => speed = real(n, Some(value), "speed")?,
                    "WORKDAY" => workday = Some(real(n, Some(value), "workday")?),
                    "CUTOFF" => cutoff = Some(real(n, Some(value), "cutoff")?),
                    other => return Err(DvrpError::parse(n, format!("unknown header '{other}'"))),
                }
            }
            Section::Coords => {
                let id = integer(n, tokens.next(), "node id")?;
                let p = Point::new(real(n, tokens.next(), "x")?, real(n, tokens.next(), "y")?);
                no_more(n, tokens)?;
                coords.push((id, p, n));
            }
            Section::Demands => {
                let id = integer(n, tokens.next(), "node id")?;
                let q = real(n, tokens.next(), "demand")?;
                no_more(n, tokens)?;
                if q < 0.0 {
                    return Err(DvrpError::InvalidInstance(format!(
                        "line {n}: node {id} has negative demand {q}"
                    )));
                }
                if demands.insert(id, q).is_some() {
                    return Err(DvrpError::parse(
                        n,
                        format!("duplicate demand for node {id}"),
                    ));
                }
            }
            Section::Depots => {
                let id: i64 = integer(n, tokens.next(), "depot id")?;
                no_more(n, tokens)?;
                if id >= 0 {
                    depots.push(
                        u32::try_from(id)
                            .map_err(|_| DvrpError::parse(n, "depot id out of range"))?,
                    );
                }
            }
            Section::Arrivals => {
                let id = integer(n, tokens.next(), "node id")?;
                let arrival = real(n, tokens.next(), "arrival time")?;
                let service = real(n, tokens.next(), "service time")?;
                no_more(n, tokens)?;
                if arrivals.insert(id, (arrival, service)).is_some() {
                    return Err(DvrpError::parse(
                        n,
                        format!("duplicate arrival row for node {id}"),
                    ));
                }
            }
        }
    }

    let missing = |what: &str| DvrpError::parse(last_line.max(1), format!("missing {what}"));
    if let Some(d) = dimension {
        if d != coords.len() {
            return Err(DvrpError::parse(
                last_line.max(1),
                format!("DIMENSION {d} but {} coordinates", coords.len()),
            ));
        }
    }
    let depot_id = match depots.as_slice() {
        [id] => *id,
        [] => return Err(missing("DEPOT_SECTION entry")),
        _ => return Err(DvrpError::InvalidInstance("more than one depot".into())),
    };
    let mut depot = None;
    let mut requests = Vec::with_capacity(coords.len().saturating_sub(1));
    let mut seen = std::collections::HashSet::new();
    for (id, location, line) in coords {
        if !seen.insert(id) {
            return Err(DvrpError::parse(line, format!("duplicate node id {id}")));
        }
        if id == depot_id {
            depot = Some(location);
            continue;
        }
        let volume = *demands
            .get(&id)
            .ok_or_else(|| DvrpError::parse(line, format!("node {id} has no demand")))?;
        let (arrival_time, service_time) = arrivals.get(&id).copied().unwrap_or((0.0, 0.0));
        requests.push(Request {
            id: RequestId(id),
            location,
            volume,
            service_time,
            arrival_time,
        });
    }
    if let Some(id) = arrivals.keys().find(|id| !seen.contains(id)) {
        return Err(DvrpError::InvalidInstance(format!(
            "arrival row for unknown node {id}"
        )));
    }
    let mut builder = InstanceBuilder::new(
        name.ok_or_else(|| missing("NAME header"))?,
        depot.ok_or_else(|| missing("depot coordinates"))?,
        capacity.ok_or_else(|| missing("CAPACITY header"))?,
        workday.ok_or_else(|| missing("WORKDAY header"))?,
    )
    .speed(speed)
    .requests(requests);
    builder.cutoff_time = cutoff;
    builder.vehicle_count = vehicles;
    builder.build()
}

/// Canonical text for `instance`: fixed field order, reals with six decimals.
pub fn serialize_instance(instance: &ProblemInstance) -> String {
    let mut out = String::new();
    let fleet = instance.fleet();
    let _ = writeln!(out, "NAME {}", instance.name());
    let _ = writeln!(out, "CAPACITY {:.6}", fleet.capacity);
    let _ = writeln!(out, "SPEED {:.6}", fleet.speed);
    let _ = writeln!(out, "WORKDAY {:.6}", instance.workday_end());
    let _ = writeln!(out, "CUTOFF {:.6}", instance.cutoff_time());
    let _ = writeln!(out, "VEHICLES {}", fleet.vehicle_count);
    if let Some(b) = instance.bounds() {
        let _ = writeln!(
            out,
            "BOUNDS {:.6} {:.6} {:.6} {:.6}",
            b.min.x, b.min.y, b.max.x, b.max.y
        );
    }
    let d = instance.depot();
    let _ = writeln!(out, "DEPOT {:.6} {:.6}", d.x, d.y);
    for r in instance.requests() {
        let _ = writeln!(
            out,
            "REQUEST {} {:.6} {:.6} {:.6} {:.6} {:.6}",
            r.id, r.location.x, r.location.y, r.volume, r.service_time, r.arrival_time
        );
    }
    out
}

pub fn write_instance(instance: &ProblemInstance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, serialize_instance(instance))?;
    Ok(())
}
