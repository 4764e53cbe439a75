//! The evolving Herbrand base.
//!
//! Every atom carries the generation in which it was committed. The store
//! keeps a boundary generation; atoms stamped at or after it form the *new*
//! view, the rest the *old* view. Atoms derived during the current step are
//! staged and stay invisible to all views until [`AtomStore::commit`].

use std::collections::HashMap;

use indexmap::IndexMap;

use crate::ast::{Signature, Substitution, SymbolicAtom, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum View {
    New,
    Old,
    All,
}

#[derive(Clone, Debug)]
struct Entry {
    args: Vec<Term>,
    stamp: u32,
    fact: bool,
}

#[derive(Clone, Debug, Default)]
struct Table {
    entries: Vec<Entry>,
    position: HashMap<Vec<Term>, usize>,
    by_first: HashMap<Term, Vec<usize>>,
}

impl Table {
    fn push(&mut self, args: Vec<Term>, stamp: u32, fact: bool) {
        let at = self.entries.len();
        if let Some(first) = args.first() {
            self.by_first.entry(first.clone()).or_default().push(at);
        }
        self.position.insert(args.clone(), at);
        self.entries.push(Entry { args, stamp, fact });
    }
}

#[derive(Clone, Debug, Default)]
pub struct AtomStore {
    tables: HashMap<Signature, Table>,
    /// Signatures in first-insertion order, for deterministic iteration.
    signatures: Vec<Signature>,
    generation: u32,
    boundary: u32,
    staged: IndexMap<SymbolicAtom, bool>,
    len: usize,
}

impl AtomStore {
    pub fn new() -> AtomStore {
        AtomStore::default()
    }

    fn entry(&self, atom: &SymbolicAtom) -> Option<&Entry> {
        let table = self.tables.get(&atom.signature())?;
        table.position.get(&atom.args).map(|&i| &table.entries[i])
    }

    fn entry_mut(&mut self, atom: &SymbolicAtom) -> Option<&mut Entry> {
        let table = self.tables.get_mut(&atom.signature())?;
        let i = *table.position.get(&atom.args)?;
        Some(&mut table.entries[i])
    }

    fn visible(&self, entry: &Entry, view: View) -> bool {
        match view {
            View::New => entry.stamp >= self.boundary,
            View::Old => entry.stamp < self.boundary,
            View::All => true,
        }
    }

    /// Adds a committed atom in the current generation. Returns whether it
    /// was new; an existing atom may be upgraded to a fact but never
    /// downgraded.
    pub fn insert(&mut self, atom: SymbolicAtom, fact: bool) -> bool {
        assert!(atom.is_ground(), "inserting non-ground atom {atom}");
        if let Some(entry) = self.entry_mut(&atom) {
            entry.fact |= fact;
            return false;
        }
        let sig = atom.signature();
        if !self.tables.contains_key(&sig) {
            self.signatures.push(sig);
        }
        self.tables
            .entry(sig)
            .or_default()
            .push(atom.args, self.generation, fact);
        self.len += 1;
        true
    }

    /// Records an atom derived in the current step. Atoms already present
    /// only have their fact flag upgraded. Returns whether the atom is new
    /// to the store and to the staging area.
    pub fn stage(&mut self, atom: SymbolicAtom, fact: bool) -> bool {
        assert!(atom.is_ground(), "staging non-ground atom {atom}");
        if let Some(entry) = self.entry_mut(&atom) {
            entry.fact |= fact;
            return false;
        }
        match self.staged.get_mut(&atom) {
            Some(flag) => {
                *flag |= fact;
                false
            }
            None => {
                self.staged.insert(atom, fact);
                true
            }
        }
    }

    pub fn has_staged(&self) -> bool {
        !self.staged.is_empty()
    }

    pub fn staged(&self) -> impl Iterator<Item = &SymbolicAtom> {
        self.staged.keys()
    }

    /// Starts a new generation holding exactly the staged atoms, which
    /// become the new view. Returns how many atoms were added.
    pub fn commit(&mut self) -> usize {
        self.advance_generation();
        let staged = std::mem::take(&mut self.staged);
        let count = staged.len();
        for (atom, fact) in staged {
            self.insert(atom, fact);
        }
        count
    }

    /// Moves the old/new boundary to a fresh generation; atoms inserted
    /// afterwards form the new view.
    pub fn advance_generation(&mut self) -> u32 {
        self.generation += 1;
        self.boundary = self.generation;
        self.generation
    }

    /// Makes every committed atom new and none old.
    pub fn mark_all_new(&mut self) {
        self.boundary = 0;
    }

    pub fn contains(&self, atom: &SymbolicAtom) -> bool {
        self.entry(atom).is_some()
    }

    /// Whether the atom is committed or staged as a fact.
    pub fn is_fact(&self, atom: &SymbolicAtom) -> bool {
        self.entry(atom).is_some_and(|e| e.fact) || self.staged.get(atom) == Some(&true)
    }

    /// Number of committed atoms.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Committed atoms grouped by signature, in insertion order within each.
    pub fn atoms(&self) -> impl Iterator<Item = (SymbolicAtom, bool)> + '_ {
        self.signatures.iter().flat_map(move |sig| {
            self.tables[sig].entries.iter().map(move |e| {
                (
                    SymbolicAtom {
                        predicate: sig.name,
                        args: e.args.clone(),
                    },
                    e.fact,
                )
            })
        })
    }

    /// Committed atoms of one signature in the given view.
    pub fn atoms_of(&self, sig: Signature, view: View) -> Vec<(SymbolicAtom, bool)> {
        let Some(table) = self.tables.get(&sig) else {
            return Vec::new();
        };
        table
            .entries
            .iter()
            .filter(|e| self.visible(e, view))
            .map(|e| {
                (
                    SymbolicAtom {
                        predicate: sig.name,
                        args: e.args.clone(),
                    },
                    e.fact,
                )
            })
            .collect()
    }

    /// All minimal extensions of `sigma` that map `atom` onto an atom of
    /// the view, in insertion order.
    pub fn matches(
        &self,
        atom: &SymbolicAtom,
        sigma: &Substitution,
        view: View,
    ) -> Vec<Substitution> {
        let Some(table) = self.tables.get(&atom.signature()) else {
            return Vec::new();
        };
        let pattern = atom.apply(sigma);
        let try_entry = |entry: &Entry| -> Option<Substitution> {
            if !self.visible(entry, view) {
                return None;
            }
            let mut extended = sigma.clone();
            extended
                .match_args(&pattern.args, &entry.args)
                .then_some(extended)
        };
        if pattern.is_ground() {
            return table
                .position
                .get(&pattern.args)
                .and_then(|&i| try_entry(&table.entries[i]))
                .into_iter()
                .collect();
        }
        match pattern.args.first() {
            Some(first) if first.is_ground() => table
                .by_first
                .get(first)
                .into_iter()
                .flatten()
                .filter_map(|&i| try_entry(&table.entries[i]))
                .collect(),
            _ => table.entries.iter().filter_map(try_entry).collect(),
        }
    }
}
