//! Single-tape Turing machines on a half-infinite tape.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::HarpError;

pub const BLANK: &str = "_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    L,
    R,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transition {
    pub state: String,
    pub symbol: String,
    pub mv: Move,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuringMachine {
    pub states: Vec<String>,
    /// Blank first.
    pub alphabet: Vec<String>,
    pub initial: String,
    pub halting: String,
    pub delta: BTreeMap<(String, String), Transition>,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

impl TuringMachine {
    /// Checks names, the halting convention and totality.
    pub fn validate(&self) -> Result<(), HarpError> {
        let bad = |m: String| Err(HarpError::InvalidMachine(m));
        let states: BTreeSet<&str> = self.states.iter().map(String::as_str).collect();
        let symbols: BTreeSet<&str> = self.alphabet.iter().map(String::as_str).collect();
        if states.len() != self.states.len() || symbols.len() != self.alphabet.len() {
            return bad("repeated state or symbol".into());
        }
        for n in self.states.iter().chain(&self.alphabet) {
            if !valid_name(n) {
                return bad(format!("bad name {:?}", n));
            }
        }
        if self.alphabet.first().map(String::as_str) != Some(BLANK) {
            return bad("the alphabet must contain the blank `_`".into());
        }
        for q in [&self.initial, &self.halting] {
            if !states.contains(q.as_str()) {
                return bad(format!("unknown state {}", q));
            }
        }
        for ((q, a), t) in &self.delta {
            if *q == self.halting {
                return bad(format!("halting state {} has a transition", q));
            }
            if !states.contains(q.as_str()) || !states.contains(t.state.as_str()) {
                return bad(format!("transition on {},{} names an unknown state", q, a));
            }
            if !symbols.contains(a.as_str()) || !symbols.contains(t.symbol.as_str()) {
                return bad(format!("transition on {},{} names an unknown symbol", q, a));
            }
        }
        for q in &self.states {
            if *q == self.halting {
                continue;
            }
            for a in &self.alphabet {
                if !self.delta.contains_key(&(q.clone(), a.clone())) {
                    return bad(format!("no transition for {},{}", q, a));
                }
            }
        }
        Ok(())
    }

    pub fn step(&self, q: &str, a: &str) -> Option<&Transition> {
        self.delta.get(&(q.to_string(), a.to_string()))
    }

    pub fn is_halting(&self, q: &str) -> bool {
        q == self.halting
    }

    /// Non-halting states.
    pub fn working_states(&self) -> impl Iterator<Item = &String> {
        self.states.iter().filter(move |q| **q != self.halting)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("states {}\n", self.states.join(" "));
        out += &format!("alphabet {}\n", self.alphabet.join(" "));
        out += &format!("initial {}\nhalt {}\n", self.initial, self.halting);
        for ((q, a), t) in &self.delta {
            out += &format!("delta {},{} -> {},{},{:?}\n", q, a, t.state, t.symbol, t.mv);
        }
        out
    }
}

impl FromStr for TuringMachine {
    type Err = HarpError;

    fn from_str(text: &str) -> Result<Self, HarpError> {
        let mut states = None;
        let mut alphabet = None;
        let mut initial = None;
        let mut halting = None;
        let mut delta = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| HarpError::Parse { line: i + 1, msg: msg.to_string() };
            let (key, rest) = line.split_once(char::is_whitespace).ok_or_else(|| err("missing value"))?;
            let words: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
            match key {
                "states" => states = Some(words),
                "alphabet" => {
                    let mut w = words;
                    let pos = w.iter().position(|s| s == BLANK).ok_or_else(|| err("no blank `_`"))?;
                    let b = w.remove(pos);
                    w.insert(0, b);
                    alphabet = Some(w);
                }
                "initial" | "halt" => {
                    if words.len() != 1 {
                        return Err(err("expected one state"));
                    }
                    let slot = if key == "initial" { &mut initial } else { &mut halting };
                    *slot = Some(words[0].clone());
                }
                "delta" => {
                    let (lhs, rhs) = rest.split_once("->").ok_or_else(|| err("missing `->`"))?;
                    let lhs: Vec<&str> = lhs.trim().split(',').map(str::trim).collect();
                    let rhs: Vec<&str> = rhs.trim().split(',').map(str::trim).collect();
                    if lhs.len() != 2 || rhs.len() != 3 {
                        return Err(err("expected `q,a -> q',a',L|R`"));
                    }
                    let mv = match rhs[2] {
                        "L" => Move::L,
                        "R" => Move::R,
                        _ => return Err(err("move must be L or R")),
                    };
                    let t = Transition { state: rhs[0].into(), symbol: rhs[1].into(), mv };
                    if delta.insert((lhs[0].to_string(), lhs[1].to_string()), t).is_some() {
                        return Err(err("duplicate transition"));
                    }
                }
                _ => return Err(err("unknown keyword")),
            }
        }
        let missing = |w: &str| HarpError::InvalidMachine(format!("missing `{}` line", w));
        let m = TuringMachine {
            states: states.ok_or_else(|| missing("states"))?,
            alphabet: alphabet.ok_or_else(|| missing("alphabet"))?,
            initial: initial.ok_or_else(|| missing("initial"))?,
            halting: halting.ok_or_else(|| missing("halt"))?,
            delta,
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    /// Non-blank cells only.
    pub tape: BTreeMap<usize, String>,
    pub head: usize,
    pub state: String,
}

impl Configuration {
    pub fn initial(m: &TuringMachine) -> Configuration {
        Configuration { tape: BTreeMap::new(), head: 0, state: m.initial.clone() }
    }

    pub fn symbol(&self, i: usize) -> &str {
        self.tape.get(&i).map(String::as_str).unwrap_or(BLANK)
    }

    pub fn write(&mut self, i: usize, a: &str) {
        if a == BLANK {
            self.tape.remove(&i);
        } else {
            self.tape.insert(i, a.to_string());
        }
    }

    /// Run-length form of cells `0..=max(head, last non-blank)`, e.g. `1*3,_,0`.
    pub fn tape_rle(&self) -> String {
        let end = self.tape.keys().next_back().copied().unwrap_or(0).max(self.head);
        let mut runs: Vec<(&str, usize)> = Vec::new();
        for i in 0..=end {
            let a = self.symbol(i);
            match runs.last_mut() {
                Some((b, n)) if *b == a => *n += 1,
                _ => runs.push((a, 1)),
            }
        }
        let parts: Vec<String> = runs
            .into_iter()
            .map(|(a, n)| if n == 1 { a.to_string() } else { format!("{}*{}", a, n) })
            .collect();
        parts.join(",")
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "state={} head={} tape={}", self.state, self.head, self.tape_rle())
    }
}

/// One line per configuration: `t=<k> state=<q> head=<i> tape=<rle>`.
pub fn format_trace(trace: &[Configuration]) -> String {
    trace.iter().enumerate().map(|(t, c)| format!("t={} {}\n", t, c)).collect()
}

/// Runs `m` from the empty tape for at most `steps` steps, stopping early in
/// the halting state.
pub fn tm_run(m: &TuringMachine, steps: usize) -> Result<Vec<Configuration>, HarpError> {
    let mut cur = Configuration::initial(m);
    let mut out = vec![cur.clone()];
    for step in 1..=steps {
        if m.is_halting(&cur.state) {
            break;
        }
        let t = m.step(&cur.state, cur.symbol(cur.head)).ok_or_else(|| HarpError::MissingTransition {
            state: cur.state.clone(),
            symbol: cur.symbol(cur.head).to_string(),
        })?;
        let t = t.clone();
        let h = cur.head;
        cur.write(h, &t.symbol);
        cur.head = match t.mv {
            Move::R => h + 1,
            Move::L => h.checked_sub(1).ok_or(HarpError::LeftEscape { step })?,
        };
        cur.state = t.state;
        out.push(cur.clone());
    }
    Ok(out)
}
