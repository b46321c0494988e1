//! NDJSON interchange format, one trace per line:
//!
//! ```text
//! {"trace_id":"t1","use_case":"Checkout","events":[{"type":"use_case_start","ts":0,"id":0,"name":"Checkout"},...]}
//! ```

use std::borrow::Cow;
use std::collections::HashSet;
use std::io::{self, BufRead, Write};

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use super::validate::{validate_trace, ValidationError};
use super::{Demarcation, EntityRef, EventKind, EventTrace, Name, TraceEvent};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("line {line}: {error}")]
    Validation { line: usize, error: ValidationError },
}

impl Serialize for TraceEvent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        map.serialize_entry("type", self.kind.type_name())?;
        map.serialize_entry("ts", &self.ts)?;
        map.serialize_entry("id", &self.id)?;
        match &self.kind {
            EventKind::UseCaseStart { name } | EventKind::UseCaseEnd { name } => {
                map.serialize_entry("name", &**name)?;
            }
            EventKind::Invocation { candidate } | EventKind::Exit { candidate } | EventKind::Return { candidate } => {
                map.serialize_entry("candidate", &**candidate)?;
            }
            EventKind::Entry { candidate, tx_started } => {
                map.serialize_entry("candidate", &**candidate)?;
                map.serialize_entry("tx_started", tx_started)?;
            }
            EventKind::TxStart { tx_id, demarcation } => {
                map.serialize_entry("tx_id", tx_id)?;
                map.serialize_entry("demarcation", demarcation.as_str())?;
            }
            EventKind::TxCommit { tx_id } => {
                map.serialize_entry("tx_id", tx_id)?;
            }
            EventKind::TxAbort { tx_id, cause } => {
                map.serialize_entry("tx_id", tx_id)?;
                map.serialize_entry("cause", &**cause)?;
            }
            EventKind::EntityRead { entity } | EventKind::EntityWrite { entity } => {
                map.serialize_entry("entity_type", &*entity.entity_type)?;
                map.serialize_entry("entity_id", &*entity.entity_id)?;
            }
        }
        map.end()
    }
}

impl Serialize for EventTrace {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("EventTrace", 3)?;
        s.serialize_field("trace_id", &self.trace_id)?;
        s.serialize_field("use_case", &*self.use_case)?;
        s.serialize_field("events", &self.events)?;
        s.end()
    }
}

#[derive(Deserialize)]
struct RawTrace<'a> {
    #[serde(borrow)]
    trace_id: Cow<'a, str>,
    #[serde(borrow)]
    use_case: Cow<'a, str>,
    #[serde(borrow)]
    events: Vec<RawEvent<'a>>,
}

#[derive(Deserialize)]
struct RawEvent<'a> {
    #[serde(rename = "type", borrow)]
    ty: Cow<'a, str>,
    ts: i64,
    id: u64,
    #[serde(borrow, default)]
    name: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    candidate: Option<Cow<'a, str>>,
    #[serde(default)]
    tx_started: Option<bool>,
    #[serde(default)]
    tx_id: Option<u64>,
    #[serde(borrow, default)]
    demarcation: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    cause: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    entity_type: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    entity_id: Option<Cow<'a, str>>,
}

/// Deduplicates names so equal strings share one allocation.
#[derive(Debug, Default)]
pub struct NameInterner {
    names: HashSet<Name>,
}

impl NameInterner {
    pub fn intern(&mut self, s: &str) -> Name {
        if let Some(n) = self.names.get(s) {
            return n.clone();
        }
        let n: Name = s.into();
        self.names.insert(n.clone());
        n
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

const MAX_INTERNED: usize = 1 << 16;

fn convert(raw: RawEvent<'_>, names: &mut NameInterner) -> Result<TraceEvent, String> {
    fn need<T>(field: Option<T>, name: &str, ty: &str) -> Result<T, String> {
        field.ok_or_else(|| format!("`{ty}` event is missing field `{name}`"))
    }
    let ty = raw.ty.as_ref();
    let mut name_of = |field: Option<Cow<'_, str>>, key: &str| -> Result<Name, String> {
        need(field, key, ty).map(|s| names.intern(&s))
    };
    let kind = match ty {
        "use_case_start" => EventKind::UseCaseStart {
            name: name_of(raw.name, "name")?,
        },
        "use_case_end" => EventKind::UseCaseEnd {
            name: name_of(raw.name, "name")?,
        },
        "invocation" => EventKind::Invocation {
            candidate: name_of(raw.candidate, "candidate")?,
        },
        "entry" => EventKind::Entry {
            candidate: name_of(raw.candidate, "candidate")?,
            tx_started: need(raw.tx_started, "tx_started", ty)?,
        },
        "exit" => EventKind::Exit {
            candidate: name_of(raw.candidate, "candidate")?,
        },
        "return" => EventKind::Return {
            candidate: name_of(raw.candidate, "candidate")?,
        },
        "tx_start" => EventKind::TxStart {
            tx_id: need(raw.tx_id, "tx_id", ty)?,
            demarcation: match need(raw.demarcation, "demarcation", ty)?.as_ref() {
                "EXPLICIT" => Demarcation::Explicit,
                "IMPLICIT" => Demarcation::Implicit,
                other => return Err(format!("unknown demarcation `{other}`")),
            },
        },
        "tx_commit" => EventKind::TxCommit {
            tx_id: need(raw.tx_id, "tx_id", ty)?,
        },
        "tx_abort" => EventKind::TxAbort {
            tx_id: need(raw.tx_id, "tx_id", ty)?,
            cause: name_of(raw.cause, "cause")?,
        },
        "entity_read" | "entity_write" => {
            let entity_type = name_of(raw.entity_type, "entity_type")?;
            let entity_id: Name = need(raw.entity_id, "entity_id", ty)?.as_ref().into();
            let entity = EntityRef { entity_type, entity_id };
            if ty == "entity_read" {
                EventKind::EntityRead { entity }
            } else {
                EventKind::EntityWrite { entity }
            }
        }
        other => return Err(format!("unknown event type `{other}`")),
    };
    Ok(TraceEvent {
        ts: raw.ts,
        id: raw.id,
        kind,
    })
}

/// Decodes one NDJSON line without validating it.
pub fn trace_from_json(line: &str, names: &mut NameInterner) -> Result<EventTrace, String> {
    let raw: RawTrace<'_> = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if names.len() > MAX_INTERNED {
        *names = NameInterner::default();
    }
    let events = raw
        .events
        .into_iter()
        .map(|e| convert(e, names))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EventTrace {
        trace_id: raw.trace_id.into_owned(),
        use_case: names.intern(&raw.use_case),
        events,
    })
}

pub fn trace_to_json(trace: &EventTrace) -> String {
    serde_json::to_string(trace).expect("trace serialization cannot fail")
}

/// Lazily decodes and validates traces, one per non-empty line.
pub struct TraceReader<R> {
    reader: R,
    line: usize,
    buf: String,
    names: NameInterner,
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = Result<EventTrace, TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line += 1;
            let text = self.buf.trim_end_matches(['\n', '\r']);
            if text.trim().is_empty() {
                continue;
            }
            let line = self.line;
            let trace = match trace_from_json(text, &mut self.names) {
                Ok(t) => t,
                Err(message) => return Some(Err(FormatError { line, message }.into())),
            };
            return Some(match validate_trace(&trace) {
                Ok(()) => Ok(trace),
                Err(error) => Err(TraceError::Validation { line, error }),
            });
        }
    }
}

pub fn read_traces<R: BufRead>(reader: R) -> TraceReader<R> {
    TraceReader {
        reader,
        line: 0,
        buf: String::new(),
        names: NameInterner::default(),
    }
}

pub fn write_traces<'a, W: Write>(mut out: W, traces: impl IntoIterator<Item = &'a EventTrace>) -> io::Result<()> {
    for trace in traces {
        serde_json::to_writer(&mut out, trace)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
