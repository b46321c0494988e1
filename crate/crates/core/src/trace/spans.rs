use std::collections::HashMap;

use serde::Serialize;

use super::{EventKind, EventTrace, Name, TxId};
use crate::tx::{TxAnnotations, TxPhase};

/// One candidate execution. The span interval runs from entry to exit; the
/// invocation and return events belong to the span as well, and the gaps
/// to them are the overheads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Span {
    pub id: usize,
    /// `None` for the synthetic use-case root.
    pub candidate: Option<Name>,
    pub start_ts: i64,
    pub end_ts: i64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub event_ids: Vec<u64>,
    pub overhead_before: i64,
    pub overhead_after: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpanTree {
    /// `spans[0]` is the use-case root; the rest follow invocation order.
    pub spans: Vec<Span>,
    #[serde(skip)]
    owner: HashMap<u64, usize>,
}

impl SpanTree {
    pub fn root(&self) -> &Span {
        &self.spans[0]
    }

    pub fn span_of(&self, event_id: u64) -> Option<usize> {
        self.owner.get(&event_id).copied()
    }

    pub fn depth(&self) -> usize {
        let mut depths = vec![0usize; self.spans.len()];
        for span in &self.spans[1..] {
            depths[span.id] = depths[span.parent.expect("non-root")] + 1;
        }
        depths.into_iter().max().unwrap_or(0)
    }

    pub fn total_overhead(&self) -> i64 {
        self.spans.iter().map(|s| s.overhead_before + s.overhead_after).sum()
    }
}

/// Arranges a valid trace into a span hierarchy.
pub fn build_span_tree(trace: &EventTrace) -> SpanTree {
    let (first, last) = match (trace.events.first(), trace.events.last()) {
        (Some(f), Some(l)) => (f.ts, l.ts),
        _ => (0, 0),
    };
    let mut spans = vec![Span {
        id: 0,
        candidate: None,
        start_ts: first,
        end_ts: last,
        parent: None,
        children: Vec::new(),
        event_ids: Vec::new(),
        overhead_before: 0,
        overhead_after: 0,
    }];
    let mut owner = HashMap::with_capacity(trace.events.len());
    let mut stack = vec![0usize];
    let mut boundary_ts = 0;
    for event in &trace.events {
        let top = *stack.last().expect("root");
        let span = match &event.kind {
            EventKind::Invocation { candidate } => {
                let id = spans.len();
                spans.push(Span {
                    id,
                    candidate: Some(candidate.clone()),
                    start_ts: event.ts,
                    end_ts: event.ts,
                    parent: Some(top),
                    children: Vec::new(),
                    event_ids: Vec::new(),
                    overhead_before: 0,
                    overhead_after: 0,
                });
                spans[top].children.push(id);
                stack.push(id);
                boundary_ts = event.ts;
                id
            }
            EventKind::Entry { .. } => {
                spans[top].start_ts = event.ts;
                spans[top].end_ts = event.ts;
                spans[top].overhead_before = event.ts - boundary_ts;
                top
            }
            EventKind::Exit { .. } => {
                spans[top].end_ts = event.ts;
                boundary_ts = event.ts;
                top
            }
            EventKind::Return { .. } => {
                spans[top].overhead_after = event.ts - boundary_ts;
                if stack.len() > 1 {
                    stack.pop();
                }
                top
            }
            _ => top,
        };
        spans[span].event_ids.push(event.id);
        owner.insert(event.id, span);
    }
    SpanTree { spans, owner }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OverlayKind {
    TransactionState,
    Overhead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OverlayState {
    Clean,
    Dirty,
    Suspended,
}

/// An interval drawn alongside a span. Transaction overlays belong to the
/// span that started the transaction and may outlast it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpanOverlay {
    pub span: usize,
    pub kind: OverlayKind,
    pub start_ts: i64,
    pub end_ts: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<OverlayState>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_id: Option<TxId>,
}

/// Overhead whiskers for every invocation plus one transaction-state
/// segment per timeline transition.
pub fn build_overlays(trace: &EventTrace, tree: &SpanTree, annotations: &TxAnnotations) -> Vec<SpanOverlay> {
    let ts_of: HashMap<u64, i64> = trace.events.iter().map(|e| (e.id, e.ts)).collect();
    let mut overlays = Vec::new();
    for span in &tree.spans[1..] {
        let before_start = span.event_ids.first().and_then(|id| ts_of.get(id)).copied();
        let after_end = span.event_ids.last().and_then(|id| ts_of.get(id)).copied();
        if let (Some(start), Some(end)) = (before_start, after_end) {
            overlays.push(SpanOverlay {
                span: span.id,
                kind: OverlayKind::Overhead,
                start_ts: start,
                end_ts: span.start_ts,
                state: None,
                tx_id: None,
            });
            overlays.push(SpanOverlay {
                span: span.id,
                kind: OverlayKind::Overhead,
                start_ts: span.end_ts,
                end_ts: end,
                state: None,
                tx_id: None,
            });
        }
    }

    let mut by_tx: Vec<(TxId, Vec<usize>)> = Vec::new();
    let mut slot: HashMap<TxId, usize> = HashMap::new();
    for (i, entry) in annotations.timeline.iter().enumerate() {
        let k = *slot.entry(entry.tx_id).or_insert_with(|| {
            by_tx.push((entry.tx_id, Vec::new()));
            by_tx.len() - 1
        });
        by_tx[k].1.push(i);
    }
    let started: HashMap<TxId, u64> = annotations
        .transactions
        .iter()
        .map(|t| (t.tx_id, t.started_at_event_id))
        .collect();
    for (tx_id, entries) in by_tx {
        let span = started.get(&tx_id).and_then(|id| tree.span_of(*id)).unwrap_or(0);
        for pair in entries.windows(2) {
            let (from, to) = (&annotations.timeline[pair[0]], &annotations.timeline[pair[1]]);
            let state = match from.phase {
                TxPhase::Clean => OverlayState::Clean,
                TxPhase::Dirty => OverlayState::Dirty,
                TxPhase::Suspended => OverlayState::Suspended,
                TxPhase::Committed | TxPhase::Aborted => continue,
            };
            overlays.push(SpanOverlay {
                span,
                kind: OverlayKind::TransactionState,
                start_ts: from.ts,
                end_ts: to.ts,
                state: Some(state),
                tx_id: Some(tx_id),
            });
        }
    }
    overlays
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TraceBuilder;

    fn chain() -> EventTrace {
        let mut b = TraceBuilder::new("t", "U", 0);
        b.invoke(100, 110, "a");
        b.invoke(111, 111, "b");
        b.invoke(112, 115, "c");
        b.leave(116, 116, "c");
        b.leave(117, 117, "b");
        b.leave(118, 120, "a");
        b.finish(121)
    }

    #[test]
    fn nested_calls_form_a_chain() {
        let tree = build_span_tree(&chain());
        assert_eq!(tree.spans.len(), 4);
        assert_eq!(tree.depth(), 3);
        assert_eq!(tree.spans[1].overhead_before, 10);
        assert_eq!(tree.spans[1].overhead_after, 2);
        assert_eq!(tree.spans[3].parent, Some(2));
        assert_eq!(tree.total_overhead(), chain().observed_overhead());
    }

    #[test]
    fn every_event_has_one_span() {
        let trace = chain();
        let tree = build_span_tree(&trace);
        let total: usize = tree.spans.iter().map(|s| s.event_ids.len()).sum();
        assert_eq!(total, trace.events.len());
        assert!(trace.events.iter().all(|e| tree.span_of(e.id).is_some()));
    }
}
