//! Minimal syntax trees built by `{ e }`, `$(e)` and `#Tag`.
//!
//! During a parse the engine only appends [`TreeEvent`]s to a log; rollback
//! truncates the log and memoized calls replay slices of it. The tree is
//! assembled once, after the parse.

use std::fmt::Write;
use std::sync::Arc;

use serde::Serialize;

pub const DEFAULT_TAG: &str = "token";

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SyntaxTree {
    pub tag: String,
    pub start: usize,
    pub end: usize,
    pub children: Vec<SyntaxTree>,
}

impl SyntaxTree {
    /// `(#tag start:end child...)`
    pub fn to_sexpr(&self) -> String {
        let mut out = String::new();
        self.write_sexpr(&mut out);
        out
    }

    fn write_sexpr(&self, out: &mut String) {
        let _ = write!(out, "(#{} {}:{}", self.tag, self.start, self.end);
        for child in &self.children {
            out.push(' ');
            child.write_sexpr(out);
        }
        out.push(')');
    }

    /// `{"tag":..,"start":..,"end":..,"children":[..]}`
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serialization cannot fail")
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(SyntaxTree::node_count).sum::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeEvent {
    Open(usize),
    Close(usize),
    Tag(Arc<str>),
    LinkBegin,
    LinkEnd,
}

struct Frame {
    start: usize,
    tag: Option<Arc<str>>,
    children: Vec<SyntaxTree>,
    last: Option<SyntaxTree>,
}

impl Frame {
    fn new(start: usize) -> Frame {
        Frame { start, tag: None, children: Vec::new(), last: None }
    }
}

/// Interprets an event log. `end` is the root span's end when the root has
/// to be synthesized from top-level links or a top-level tag.
pub fn assemble(events: &[TreeEvent], end: usize) -> Option<SyntaxTree> {
    let mut frames = vec![Frame::new(0)];
    let mut saved: Vec<Option<SyntaxTree>> = Vec::new();
    for ev in events {
        match ev {
            TreeEvent::Open(start) => frames.push(Frame::new(*start)),
            TreeEvent::Close(stop) => {
                let f = frames.pop().expect("balanced tree events");
                let node = SyntaxTree {
                    tag: f.tag.as_deref().unwrap_or(DEFAULT_TAG).to_string(),
                    start: f.start,
                    end: *stop,
                    children: f.children,
                };
                frames.last_mut().expect("root frame").last = Some(node);
            }
            TreeEvent::Tag(t) => frames.last_mut().expect("frame").tag = Some(t.clone()),
            TreeEvent::LinkBegin => {
                let top = frames.last_mut().expect("frame");
                saved.push(top.last.take());
            }
            TreeEvent::LinkEnd => {
                let top = frames.last_mut().expect("frame");
                if let Some(node) = top.last.take() {
                    top.children.push(node);
                }
                top.last = saved.pop().flatten();
            }
        }
    }
    let root = frames.swap_remove(0);
    if root.children.is_empty() && root.tag.is_none() {
        return root.last;
    }
    if let (true, Some(mut node)) = (root.children.is_empty(), root.last.clone()) {
        if let Some(t) = root.tag {
            node.tag = t.to_string();
        }
        return Some(node);
    }
    Some(SyntaxTree {
        tag: root.tag.as_deref().unwrap_or(DEFAULT_TAG).to_string(),
        start: root.start,
        end,
        children: root.children,
    })
}
