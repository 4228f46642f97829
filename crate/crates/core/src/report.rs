//! The randomness-versus-genericity interaction matrix built from run witnesses.
//!
//! Cells start out `unresolved` and only change when a completed run supplies
//! a witness. Labels are hedged: a finite run can witness or be consistent with
//! a behaviour, never prove it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Randomness {
    NRandom,
    Weakly2Random,
    DemuthRandom,
    OneRandom,
}

impl Randomness {
    pub const ALL: [Randomness; 4] = [
        Randomness::NRandom,
        Randomness::Weakly2Random,
        Randomness::DemuthRandom,
        Randomness::OneRandom,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Randomness::NRandom => "n-random (n>=2)",
            Randomness::Weakly2Random => "weakly 2-random",
            Randomness::DemuthRandom => "Demuth random",
            Randomness::OneRandom => "1-random",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Randomness::NRandom => "n-random",
            Randomness::Weakly2Random => "weakly-2-random",
            Randomness::DemuthRandom => "demuth-random",
            Randomness::OneRandom => "1-random",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Genericity {
    NGeneric,
    Weakly2Generic,
    PbGeneric,
    OneGeneric,
}

impl Genericity {
    pub const ALL: [Genericity; 4] = [
        Genericity::NGeneric,
        Genericity::Weakly2Generic,
        Genericity::PbGeneric,
        Genericity::OneGeneric,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Genericity::NGeneric => "n-generic (n>=2)",
            Genericity::Weakly2Generic => "weakly 2-generic",
            Genericity::PbGeneric => "pb-generic",
            Genericity::OneGeneric => "1-generic",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Genericity::NGeneric => "n-generic",
            Genericity::Weakly2Generic => "weakly-2-generic",
            Genericity::PbGeneric => "pb-generic",
            Genericity::OneGeneric => "1-generic",
        }
    }
}

impl FromStr for Genericity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Genericity::ALL
            .into_iter()
            .find(|g| g.key() == s)
            .ok_or_else(|| Error::UnknownName(format!("genericity notion '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellKind {
    MinPair,
    MayCompute,
    Computes,
}

impl CellKind {
    pub fn label(self) -> &'static str {
        match self {
            CellKind::MinPair => "min-pair (consistent-with)",
            CellKind::MayCompute => "may-compute (witnessed)",
            CellKind::Computes => "computes (consistent-with)",
        }
    }
}

pub const UNRESOLVED: &str = "unresolved";

/// One run's evidence for one cell, with the artifact that shows it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Witness {
    pub row: Randomness,
    pub col: Genericity,
    pub kind: CellKind,
    pub artifact: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cell {
    pub kinds: BTreeSet<CellKind>,
    pub citations: Vec<String>,
}

impl Cell {
    pub fn is_unresolved(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn label(&self) -> String {
        if self.kinds.is_empty() {
            return UNRESOLVED.to_string();
        }
        self.kinds
            .iter()
            .map(|k| k.label())
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InteractionReport {
    cells: BTreeMap<(Randomness, Genericity), Cell>,
}

/// Folds witnesses into the matrix in the given order.
pub fn emit_interaction_report<'a, I>(witnesses: I) -> InteractionReport
where
    I: IntoIterator<Item = &'a Witness>,
{
    let mut report = InteractionReport::default();
    for w in witnesses {
        let cell = report.cells.entry((w.row, w.col)).or_default();
        cell.kinds.insert(w.kind);
        if !cell.citations.contains(&w.artifact) {
            cell.citations.push(w.artifact.clone());
        }
    }
    report
}

impl InteractionReport {
    pub fn cell(&self, row: Randomness, col: Genericity) -> Cell {
        self.cells.get(&(row, col)).cloned().unwrap_or_default()
    }

    pub fn all_unresolved(&self) -> bool {
        self.cells.values().all(Cell::is_unresolved)
    }

    /// Columns: `randomness,genericity,cell,artifacts` with artifacts joined by `;`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("randomness,genericity,cell,artifacts\n");
        for r in Randomness::ALL {
            for g in Genericity::ALL {
                let c = self.cell(r, g);
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    r.key(),
                    g.key(),
                    c.label(),
                    c.citations.join(";")
                ));
            }
        }
        out
    }
}

impl fmt::Display for InteractionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = "";
        let mut rows = vec![std::iter::once(head.to_string())
            .chain(Genericity::ALL.iter().map(|g| g.label().to_string()))
            .collect::<Vec<_>>()];
        let mut notes = Vec::new();
        for r in Randomness::ALL {
            let mut row = vec![r.label().to_string()];
            for g in Genericity::ALL {
                let c = self.cell(r, g);
                if c.is_unresolved() {
                    row.push(UNRESOLVED.to_string());
                } else {
                    notes.push((r, g, c.citations.clone()));
                    row.push(format!("{} [{}]", c.label(), notes.len()));
                }
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..5)
            .map(|i| rows.iter().map(|row| row[i].chars().count()).max().unwrap_or(0))
            .collect();
        for row in &rows {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            writeln!(f, "{}", line.join(" | ").trim_end())?;
        }
        for (i, (r, g, cites)) in notes.iter().enumerate() {
            writeln!(f, "[{}] {} x {}: {}", i + 1, r.label(), g.label(), cites.join(", "))?;
        }
        Ok(())
    }
}
