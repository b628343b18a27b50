use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

/// Index of a sort inside its [`Signature`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SortId(pub u32);

impl SortId {
    /// The built-in boolean sort, present in every signature.
    pub const BOOL: SortId = SortId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Background theory attached to a sort.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Theory {
    /// Pure equality, decided internally by finite search.
    Empty,
    Lia,
    Lra,
    Nra,
    /// Any other theory id; decided by an external solver with logic `ALL`.
    Other(Arc<str>),
}

impl Theory {
    pub fn from_id(id: &str) -> Theory {
        match id {
            "empty" | "uf" => Theory::Empty,
            "lia" => Theory::Lia,
            "lra" => Theory::Lra,
            "nra" => Theory::Nra,
            other => Theory::Other(other.into()),
        }
    }

    pub fn id(&self) -> &str {
        match self {
            Theory::Empty => "empty",
            Theory::Lia => "lia",
            Theory::Lra => "lra",
            Theory::Nra => "nra",
            Theory::Other(s) => s,
        }
    }

    /// SMT-LIB logic string used for external queries.
    pub fn logic(&self) -> &str {
        match self {
            Theory::Empty => "UF",
            Theory::Lia => "LIA",
            Theory::Lra => "LRA",
            Theory::Nra => "NRA",
            Theory::Other(_) => "ALL",
        }
    }

    /// Whether the built-in arithmetic symbols (`+ - * < <= > >=`) are available.
    pub fn is_arithmetic(&self) -> bool {
        matches!(self, Theory::Lia | Theory::Lra | Theory::Nra)
    }

    /// SMT-LIB sort name for arithmetic theories.
    pub fn smt_sort(&self) -> Option<&'static str> {
        match self {
            Theory::Lia => Some("Int"),
            Theory::Lra | Theory::Nra => Some("Real"),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SortKind {
    Foreground,
    Bool,
    Background(Theory),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sort {
    pub name: Arc<str>,
    pub kind: SortKind,
}

impl Sort {
    /// Universes of foreground, boolean and empty-theory sorts can be enumerated.
    pub fn is_finite(&self) -> bool {
        matches!(
            self.kind,
            SortKind::Foreground | SortKind::Bool | SortKind::Background(Theory::Empty)
        )
    }

    /// Sorts decided by equality reasoning over a variable-size universe.
    pub fn is_uninterpreted(&self) -> bool {
        matches!(self.kind, SortKind::Foreground | SortKind::Background(Theory::Empty))
    }

    pub fn theory(&self) -> Option<&Theory> {
        match &self.kind {
            SortKind::Background(t) => Some(t),
            _ => None,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunDecl {
    pub name: Arc<str>,
    pub args: Vec<SortId>,
    pub result: SortId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelDecl {
    pub name: Arc<str>,
    pub args: Vec<SortId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SigError {
    #[error("duplicate sort `{0}`")]
    DuplicateSort(String),
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("a foreground sort is already declared (`{0}`)")]
    SecondForeground(String),
    #[error("the boolean sort `Bool` is built in")]
    BoolBuiltin,
}

/// Sorted vocabulary: sorts plus declared function and relation symbols.
///
/// The boolean sort `Bool` is always present as [`SortId::BOOL`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    sorts: Vec<Sort>,
    funs: IndexMap<Arc<str>, FunDecl>,
    rels: IndexMap<Arc<str>, RelDecl>,
}

impl Default for Signature {
    fn default() -> Self {
        Self::new()
    }
}

impl Signature {
    pub fn new() -> Self {
        Signature {
            sorts: vec![Sort {
                name: "Bool".into(),
                kind: SortKind::Bool,
            }],
            funs: IndexMap::new(),
            rels: IndexMap::new(),
        }
    }

    /// Signature with a foreground sort named `FG` already declared.
    pub fn with_foreground() -> (Self, SortId) {
        let mut sig = Self::new();
        let fg = sig.add_sort("FG", SortKind::Foreground).unwrap();
        (sig, fg)
    }

    pub fn add_sort(&mut self, name: &str, kind: SortKind) -> Result<SortId, SigError> {
        if kind == SortKind::Bool {
            return Err(SigError::BoolBuiltin);
        }
        if self.sort_by_name(name).is_some() {
            return Err(SigError::DuplicateSort(name.to_string()));
        }
        if kind == SortKind::Foreground {
            if let Some(fg) = self.foreground() {
                return Err(SigError::SecondForeground(self.sort(fg).name.to_string()));
            }
        }
        self.sorts.push(Sort {
            name: name.into(),
            kind,
        });
        Ok(SortId(self.sorts.len() as u32 - 1))
    }

    pub fn add_fun(&mut self, name: &str, args: Vec<SortId>, result: SortId) -> Result<(), SigError> {
        if self.funs.contains_key(name) || self.rels.contains_key(name) {
            return Err(SigError::DuplicateSymbol(name.to_string()));
        }
        let name: Arc<str> = name.into();
        self.funs.insert(name.clone(), FunDecl { name, args, result });
        Ok(())
    }

    pub fn add_rel(&mut self, name: &str, args: Vec<SortId>) -> Result<(), SigError> {
        if self.funs.contains_key(name) || self.rels.contains_key(name) {
            return Err(SigError::DuplicateSymbol(name.to_string()));
        }
        let name: Arc<str> = name.into();
        self.rels.insert(name.clone(), RelDecl { name, args });
        Ok(())
    }

    pub fn sort(&self, id: SortId) -> &Sort {
        &self.sorts[id.index()]
    }

    pub fn sort_name(&self, id: SortId) -> &str {
        &self.sorts[id.index()].name
    }

    pub fn sort_by_name(&self, name: &str) -> Option<SortId> {
        self.sorts
            .iter()
            .position(|s| &*s.name == name)
            .map(|i| SortId(i as u32))
    }

    pub fn sort_ids(&self) -> impl Iterator<Item = SortId> + '_ {
        (0..self.sorts.len() as u32).map(SortId)
    }

    pub fn num_sorts(&self) -> usize {
        self.sorts.len()
    }

    pub fn foreground(&self) -> Option<SortId> {
        self.sort_ids().find(|&id| self.sort(id).kind == SortKind::Foreground)
    }

    pub fn is_finite(&self, id: SortId) -> bool {
        self.sort(id).is_finite()
    }

    pub fn theory(&self, id: SortId) -> Option<&Theory> {
        self.sort(id).theory()
    }

    pub fn is_arithmetic(&self, id: SortId) -> bool {
        self.theory(id).is_some_and(Theory::is_arithmetic)
    }

    pub fn fun(&self, name: &str) -> Option<&FunDecl> {
        self.funs.get(name)
    }

    pub fn rel(&self, name: &str) -> Option<&RelDecl> {
        self.rels.get(name)
    }

    pub fn funs(&self) -> impl Iterator<Item = &FunDecl> {
        self.funs.values()
    }

    pub fn rels(&self) -> impl Iterator<Item = &RelDecl> {
        self.rels.values()
    }

    /// Whether any user symbol lives in sort `id`.
    pub fn has_symbols_in(&self, id: SortId) -> bool {
        self.funs.values().any(|f| f.result == id) || self.rels.values().any(|r| r.args.contains(&id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bool_is_builtin() {
        let mut sig = Signature::new();
        assert_eq!(sig.sort_by_name("Bool"), Some(SortId::BOOL));
        assert_eq!(sig.add_sort("B", SortKind::Bool), Err(SigError::BoolBuiltin));
    }

    #[test]
    fn single_foreground() {
        let (mut sig, fg) = Signature::with_foreground();
        assert_eq!(sig.foreground(), Some(fg));
        assert!(matches!(
            sig.add_sort("G", SortKind::Foreground),
            Err(SigError::SecondForeground(_))
        ));
    }

    #[test]
    fn duplicate_names_rejected() {
        let (mut sig, _) = Signature::with_foreground();
        let int = sig.add_sort("Int", SortKind::Background(Theory::Lia)).unwrap();
        assert!(sig.add_sort("Int", SortKind::Background(Theory::Lra)).is_err());
        sig.add_fun("f", vec![int], int).unwrap();
        assert!(sig.add_rel("f", vec![int]).is_err());
    }

    #[test]
    fn theory_logic_strings() {
        assert_eq!(Theory::from_id("lia").logic(), "LIA");
        assert_eq!(Theory::from_id("lra").logic(), "LRA");
        assert_eq!(Theory::from_id("nra").logic(), "NRA");
        assert_eq!(Theory::from_id("bv").logic(), "ALL");
    }
}
