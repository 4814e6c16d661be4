use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Letter,
    Sound,
    Movement,
    Selection,
    LevelStart,
    LevelEnd,
    /// Symbols appear at the entrance of a maze tunnel.
    Tunnel,
}

impl EventKind {
    pub const ALL: [EventKind; 7] = [
        EventKind::Letter,
        EventKind::Sound,
        EventKind::Movement,
        EventKind::Selection,
        EventKind::LevelStart,
        EventKind::LevelEnd,
        EventKind::Tunnel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Letter => "letter",
            EventKind::Sound => "sound",
            EventKind::Movement => "movement",
            EventKind::Selection => "selection",
            EventKind::LevelStart => "level_start",
            EventKind::LevelEnd => "level_end",
            EventKind::Tunnel => "tunnel",
        }
    }

    fn required(self) -> &'static [(&'static str, AttrType)] {
        use AttrType::*;
        match self {
            EventKind::Letter => &[("letter", Str), ("label", Str), ("is_target", Bool)],
            EventKind::Sound => &[("is_target", Bool)],
            EventKind::Movement => &[("is_error", Bool)],
            EventKind::Selection => &[("correct", Bool)],
            EventKind::LevelStart | EventKind::LevelEnd => {
                &[("difficulty", Str), ("technique", Str)]
            }
            EventKind::Tunnel => &[("deadline_sec", Num)],
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid("event kind", format!("unknown kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy)]
enum AttrType {
    Bool,
    Num,
    Str,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl Scalar {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Scalar::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Scalar::Int(i) => Some(*i as f64),
            Scalar::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Scalar::Str(s) => Some(s),
            _ => None,
        }
    }

    fn matches(&self, ty: AttrType) -> bool {
        matches!(
            (self, ty),
            (Scalar::Bool(_), AttrType::Bool)
                | (Scalar::Int(_) | Scalar::Float(_), AttrType::Num)
                | (Scalar::Str(_), AttrType::Str)
        )
    }

    fn to_json(&self) -> Value {
        match self {
            Scalar::Bool(b) => Value::Bool(*b),
            Scalar::Int(i) => Value::from(*i),
            Scalar::Float(f) => Value::from(*f),
            Scalar::Str(s) => Value::String(s.clone()),
        }
    }

    fn from_json(v: &Value) -> Option<Scalar> {
        match v {
            Value::Bool(b) => Some(Scalar::Bool(*b)),
            Value::Number(n) => n
                .as_i64()
                .map(Scalar::Int)
                .or_else(|| n.as_f64().map(Scalar::Float)),
            Value::String(s) => Some(Scalar::Str(s.clone())),
            _ => None,
        }
    }
}

impl From<bool> for Scalar {
    fn from(v: bool) -> Self {
        Scalar::Bool(v)
    }
}
impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int(v)
    }
}
impl From<usize> for Scalar {
    fn from(v: usize) -> Self {
        Scalar::Int(v as i64)
    }
}
impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Float(v)
    }
}
impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::Str(v.to_owned())
    }
}
impl From<String> for Scalar {
    fn from(v: String) -> Self {
        Scalar::Str(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t_sec: f64,
    pub kind: EventKind,
    pub attrs: BTreeMap<String, Scalar>,
}

impl Event {
    pub fn new(t_sec: f64, kind: EventKind) -> Self {
        Self {
            t_sec,
            kind,
            attrs: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Scalar>) -> Self {
        self.attrs.insert(key.to_owned(), value.into());
        self
    }

    pub fn sound(t_sec: f64, is_target: bool) -> Self {
        Event::new(t_sec, EventKind::Sound).with("is_target", is_target)
    }

    pub fn bool_attr(&self, key: &str) -> Option<bool> {
        self.attrs.get(key).and_then(Scalar::as_bool)
    }

    pub fn num_attr(&self, key: &str) -> Option<f64> {
        self.attrs.get(key).and_then(Scalar::as_f64)
    }

    pub fn str_attr(&self, key: &str) -> Option<&str> {
        self.attrs.get(key).and_then(Scalar::as_str)
    }

    fn check_schema(&self) -> std::result::Result<(), String> {
        if !(self.t_sec.is_finite() && self.t_sec >= 0.0) {
            return Err(format!("invalid timestamp {}", self.t_sec));
        }
        for (key, ty) in self.kind.required() {
            match self.attrs.get(*key) {
                None => return Err(format!("{} event lacks required attr {key:?}", self.kind)),
                Some(v) if !v.matches(*ty) => {
                    return Err(format!("{} event attr {key:?} has wrong type", self.kind))
                }
                Some(_) => {}
            }
        }
        if self.kind == EventKind::Letter {
            let label = self.str_attr("label").unwrap_or_default();
            if label != "low" && label != "high" {
                return Err(format!("letter label must be low or high, got {label:?}"));
            }
        }
        Ok(())
    }

    fn to_json_line(&self) -> String {
        let mut s = String::with_capacity(64);
        s.push_str("{\"t\":");
        s.push_str(&Value::from(self.t_sec).to_string());
        s.push_str(",\"kind\":\"");
        s.push_str(self.kind.as_str());
        s.push('"');
        for (k, v) in &self.attrs {
            s.push(',');
            s.push_str(&Value::String(k.clone()).to_string());
            s.push(':');
            s.push_str(&v.to_json().to_string());
        }
        s.push('}');
        s
    }
}

/// Time-ordered, schema-checked list of protocol events.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new(events: Vec<Event>) -> Result<Self> {
        for (i, ev) in events.iter().enumerate() {
            ev.check_schema()
                .map_err(|m| Error::invalid("event log", format!("event {i}: {m}")))?;
            if i > 0 && ev.t_sec < events[i - 1].t_sec {
                return Err(Error::invalid(
                    "event log",
                    format!(
                        "event {i} at {} s precedes event {} at {} s",
                        ev.t_sec,
                        i - 1,
                        events[i - 1].t_sec
                    ),
                ));
            }
        }
        Ok(Self { events })
    }

    /// Stable-merges events from several logs by time.
    pub fn merged(logs: &[&EventLog]) -> Self {
        let mut events: Vec<Event> = logs.iter().flat_map(|l| l.events.iter().cloned()).collect();
        events.sort_by(|a, b| a.t_sec.total_cmp(&b.t_sec));
        Self { events }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = (usize, &Event)> {
        self.events.iter().enumerate().filter(move |(_, e)| e.kind == kind)
    }

    pub fn last_time(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.t_sec)
    }

    /// Pairs each `level_start` with the next `level_end`.
    pub fn level_spans(&self) -> Vec<LevelSpan> {
        let mut spans = Vec::new();
        let mut open: Option<&Event> = None;
        for ev in &self.events {
            match ev.kind {
                EventKind::LevelStart => open = Some(ev),
                EventKind::LevelEnd => {
                    if let Some(start) = open.take() {
                        spans.push(LevelSpan {
                            start_sec: start.t_sec,
                            end_sec: ev.t_sec,
                            difficulty: start.str_attr("difficulty").unwrap_or_default().to_owned(),
                            technique: start.str_attr("technique").unwrap_or_default().to_owned(),
                        });
                    }
                }
                _ => {}
            }
        }
        spans
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSpan {
    pub start_sec: f64,
    pub end_sec: f64,
    pub difficulty: String,
    pub technique: String,
}

impl LevelSpan {
    pub fn contains(&self, t_sec: f64) -> bool {
        t_sec >= self.start_sec && t_sec < self.end_sec
    }
}

pub fn load_events(path: impl AsRef<Path>) -> Result<EventLog> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut events = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(&line).map_err(|e| parse_err(line_no, e.to_string()))?;
        let Value::Object(map) = value else {
            return Err(parse_err(line_no, "event is not a JSON object".into()));
        };
        let t = map
            .get("t")
            .and_then(Value::as_f64)
            .ok_or_else(|| parse_err(line_no, "missing numeric \"t\"".into()))?;
        let kind: EventKind = map
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| parse_err(line_no, "missing string \"kind\"".into()))?
            .parse()
            .map_err(|e: Error| parse_err(line_no, e.to_string()))?;
        let mut ev = Event::new(t, kind);
        for (k, v) in map.iter().filter(|(k, _)| *k != "t" && *k != "kind") {
            let s = Scalar::from_json(v)
                .ok_or_else(|| parse_err(line_no, format!("attr {k:?} is not a scalar")))?;
            ev.attrs.insert(k.clone(), s);
        }
        ev.check_schema().map_err(|m| parse_err(line_no, m))?;
        if let Some(prev) = events.last() {
            let prev: &Event = prev;
            if ev.t_sec < prev.t_sec {
                return Err(parse_err(
                    line_no,
                    format!("timestamp {} precedes previous {}", ev.t_sec, prev.t_sec),
                ));
            }
        }
        events.push(ev);
    }
    EventLog::new(events)
}

pub fn save_events(log: &EventLog, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for ev in &log.events {
        writeln!(w, "{}", ev.to_json_line()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sound_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.jsonl");
        std::fs::write(&p, "{\"t\":1.0,\"kind\":\"sound\",\"is_target\":true}\n").unwrap();
        let log = load_events(&p).unwrap();
        assert_eq!(log.len(), 1);
        let ev = &log.events()[0];
        assert_eq!(ev.kind, EventKind::Sound);
        assert_eq!(ev.t_sec, 1.0);
        assert_eq!(ev.bool_attr("is_target"), Some(true));
    }

    #[test]
    fn unsorted_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.jsonl");
        std::fs::write(
            &p,
            "{\"t\":2.0,\"kind\":\"sound\",\"is_target\":true}\n{\"t\":1.0,\"kind\":\"sound\",\"is_target\":false}\n",
        )
        .unwrap();
        assert!(matches!(load_events(&p), Err(Error::Parse { line: 2, .. })));
        assert!(EventLog::new(vec![Event::sound(2.0, true), Event::sound(1.0, true)]).is_err());
    }

    #[test]
    fn schema_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.jsonl");
        std::fs::write(&p, "{\"t\":0.5,\"kind\":\"beep\"}\n").unwrap();
        assert!(load_events(&p).unwrap_err().to_string().contains("unknown kind"));
        std::fs::write(&p, "{\"t\":0.5,\"kind\":\"movement\"}\n").unwrap();
        assert!(load_events(&p).unwrap_err().to_string().contains("is_error"));
        std::fs::write(&p, "{\"t\":0.5,\"kind\":\"sound\",\"is_target\":\"yes\"}\n").unwrap();
        assert!(load_events(&p).unwrap_err().to_string().contains("wrong type"));
        std::fs::write(&p, "{\"t\":0.5,\"kind\":\"sound\",\"is_target\":true,\"x\":[1]}\n").unwrap();
        assert!(load_events(&p).is_err());
    }

    #[test]
    fn level_spans_pair_up() {
        let log = EventLog::new(vec![
            Event::new(0.0, EventKind::LevelStart)
                .with("difficulty", "EASY")
                .with("technique", "keyboard"),
            Event::sound(1.0, false),
            Event::new(5.0, EventKind::LevelEnd)
                .with("difficulty", "EASY")
                .with("technique", "keyboard"),
        ])
        .unwrap();
        let spans = log.level_spans();
        assert_eq!(spans.len(), 1);
        assert!(spans[0].contains(1.0));
        assert!(!spans[0].contains(5.0));
        assert_eq!(spans[0].difficulty, "EASY");
    }

    proptest::proptest! {
        #[test]
        fn events_round_trip_exactly(
            ts in proptest::collection::vec(0.0f64..1e4, 0..30),
            flags in proptest::collection::vec(proptest::prelude::any::<bool>(), 30),
            ints in proptest::collection::vec(-1000i64..1000, 30),
        ) {
            let mut ts = ts;
            ts.sort_by(f64::total_cmp);
            let events: Vec<Event> = ts
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    Event::sound(t, flags[i])
                        .with("n", ints[i])
                        .with("x", t * 0.37)
                        .with("name", format!("s\"{i}"))
                })
                .collect();
            let log = EventLog::new(events).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("e.jsonl");
            save_events(&log, &p).unwrap();
            let back = load_events(&p).unwrap();
            proptest::prop_assert_eq!(back.len(), log.len());
            proptest::prop_assert_eq!(back, log);
        }
    }
}
