//! Runtime values of the assertion language.

use std::fmt;
use std::hash::{Hash, Hasher};

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

/// A set element: an integer or a pair of integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Elem {
    Int(i64),
    Pair(i64, i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ElemKind {
    Int,
    Pair,
}

impl Elem {
    fn kind(self) -> ElemKind {
        match self {
            Elem::Int(_) => ElemKind::Int,
            Elem::Pair(..) => ElemKind::Pair,
        }
    }

    /// Bit position in the dense part of a [`FiniteSet`], if it has one.
    fn bit(self) -> Option<u32> {
        match self {
            Elem::Int(v) if (0..64).contains(&v) => Some(v as u32),
            Elem::Pair(a, b) if (0..8).contains(&a) && (0..8).contains(&b) => Some((a * 8 + b) as u32),
            _ => None,
        }
    }

    fn from_bit(kind: ElemKind, bit: u32) -> Elem {
        match kind {
            ElemKind::Int => Elem::Int(i64::from(bit)),
            ElemKind::Pair => Elem::Pair(i64::from(bit / 8), i64::from(bit % 8)),
        }
    }

    pub fn to_value(self) -> Value {
        match self {
            Elem::Int(v) => Value::Int(v),
            Elem::Pair(a, b) => Value::pair(Value::Int(a), Value::Int(b)),
        }
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Elem::Int(v) => write!(f, "{v}"),
            Elem::Pair(a, b) => write!(f, "({a}, {b})"),
        }
    }
}

/// A finite set of homogeneous elements.
///
/// Small non-negative integers (< 64) and pairs of integers in `0..8` live in
/// a bitmask; everything else spills into a sorted vector. Equality is
/// extensional.
#[derive(Debug, Clone, Default)]
pub struct FiniteSet {
    bits: u64,
    spill: Vec<Elem>,
    kind: Option<ElemKind>,
}

impl FiniteSet {
    pub fn new() -> FiniteSet {
        FiniteSet::default()
    }

    pub fn from_elems<I: IntoIterator<Item = Elem>>(elems: I) -> FiniteSet {
        let mut s = FiniteSet::new();
        for e in elems {
            s.insert(e);
        }
        s
    }

    pub fn contains(&self, e: &Elem) -> bool {
        match e.bit() {
            Some(b) => self.bits & (1u64 << b) != 0 && self.kind == Some(e.kind()),
            None => self.spill.binary_search(e).is_ok(),
        }
    }

    pub fn insert(&mut self, e: Elem) {
        self.kind = Some(e.kind());
        match e.bit() {
            Some(b) => self.bits |= 1u64 << b,
            None => {
                if let Err(pos) = self.spill.binary_search(&e) {
                    self.spill.insert(pos, e);
                }
            }
        }
    }

    pub fn remove(&mut self, e: &Elem) {
        match e.bit() {
            Some(b) => {
                if self.kind == Some(e.kind()) {
                    self.bits &= !(1u64 << b);
                }
            }
            None => {
                if let Ok(pos) = self.spill.binary_search(e) {
                    self.spill.remove(pos);
                }
            }
        }
    }

    pub fn with(&self, e: Elem) -> FiniteSet {
        let mut s = self.clone();
        s.insert(e);
        s
    }

    pub fn without(&self, e: &Elem) -> FiniteSet {
        let mut s = self.clone();
        s.remove(e);
        s
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0 && self.spill.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize + self.spill.len()
    }

    pub fn union(&self, other: &FiniteSet) -> FiniteSet {
        let mut s = self.clone();
        for e in other.elems() {
            s.insert(e);
        }
        s
    }

    pub fn is_subset(&self, other: &FiniteSet) -> bool {
        self.elems().iter().all(|e| other.contains(e))
    }

    /// Whether `f` holds for every element, in no particular order.
    pub fn all(&self, mut f: impl FnMut(Elem) -> bool) -> bool {
        if let Some(kind) = self.kind {
            let mut bits = self.bits;
            while bits != 0 {
                if !f(Elem::from_bit(kind, bits.trailing_zeros())) {
                    return false;
                }
                bits &= bits - 1;
            }
        }
        self.spill.iter().all(|e| f(*e))
    }

    /// Elements in ascending order.
    pub fn elems(&self) -> Vec<Elem> {
        let mut out = Vec::with_capacity(self.len());
        if let Some(kind) = self.kind {
            let mut bits = self.bits;
            while bits != 0 {
                let b = bits.trailing_zeros();
                out.push(Elem::from_bit(kind, b));
                bits &= bits - 1;
            }
        }
        out.extend(self.spill.iter().copied());
        out.sort();
        out
    }
}

impl PartialEq for FiniteSet {
    fn eq(&self, other: &FiniteSet) -> bool {
        self.bits == other.bits && self.spill == other.spill
    }
}

impl Eq for FiniteSet {}

impl Hash for FiniteSet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.bits.hash(state);
        self.spill.hash(state);
    }
}

impl FromIterator<Elem> for FiniteSet {
    fn from_iter<I: IntoIterator<Item = Elem>>(iter: I) -> FiniteSet {
        FiniteSet::from_elems(iter)
    }
}

impl fmt::Display for FiniteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, e) in self.elems().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for FiniteSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let elems = self.elems();
        let mut seq = serializer.serialize_seq(Some(elems.len()))?;
        for e in elems {
            seq.serialize_element(&e.to_value())?;
        }
        seq.end()
    }
}

/// Value of a remove-wins set: both components only ever grow.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct RwSetValue {
    pub adds: FiniteSet,
    pub removes: FiniteSet,
}

impl RwSetValue {
    pub fn contains(&self, e: &Elem) -> bool {
        self.adds.contains(e) && !self.removes.contains(e)
    }
}

/// Field values of the state record, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateValue(pub Vec<Value>);

impl StateValue {
    pub fn fields(&self) -> &[Value] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Pair(Box<(Value, Value)>),
    Set(FiniteSet),
    RwSet(RwSetValue),
    State(StateValue),
}

impl Value {
    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Box::new((a, b)))
    }

    pub fn set_of_ints<I: IntoIterator<Item = i64>>(items: I) -> Value {
        Value::Set(items.into_iter().map(Elem::Int).collect())
    }

    pub fn set_of_pairs<I: IntoIterator<Item = (i64, i64)>>(items: I) -> Value {
        Value::Set(items.into_iter().map(|(a, b)| Elem::Pair(a, b)).collect())
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<&FiniteSet> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_state(&self) -> Option<&StateValue> {
        match self {
            Value::State(s) => Some(s),
            _ => None,
        }
    }

    /// The set element this value denotes, if it is an integer or a pair of
    /// integers.
    pub fn to_elem(&self) -> Option<Elem> {
        match self {
            Value::Int(v) => Some(Elem::Int(*v)),
            Value::Pair(p) => match (&p.0, &p.1) {
                (Value::Int(a), Value::Int(b)) => Some(Elem::Pair(*a, *b)),
                _ => None,
            },
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Pair(p) => write!(f, "({}, {})", p.0, p.1),
            Value::Set(s) => write!(f, "{s}"),
            Value::RwSet(s) => write!(f, "{{adds = {}; removes = {}}}", s.adds, s.removes),
            Value::State(s) => {
                f.write_str("<")?;
                for (i, v) in s.0.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(">")
            }
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Int(v) => serializer.serialize_i64(*v),
            Value::Bool(b) => serializer.serialize_bool(*b),
            Value::Pair(p) => {
                let mut seq = serializer.serialize_seq(Some(2))?;
                seq.serialize_element(&p.0)?;
                seq.serialize_element(&p.1)?;
                seq.end()
            }
            Value::Set(s) => s.serialize(serializer),
            Value::RwSet(s) => {
                let mut map = serializer.serialize_map(Some(2))?;
                map.serialize_entry("adds", &s.adds)?;
                map.serialize_entry("removes", &s.removes)?;
                map.end()
            }
            Value::State(s) => {
                let mut seq = serializer.serialize_seq(Some(s.0.len()))?;
                for v in &s.0 {
                    seq.serialize_element(v)?;
                }
                seq.end()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_spilled_elements_behave_alike() {
        let mut s = FiniteSet::new();
        s.insert(Elem::Int(3));
        s.insert(Elem::Int(-2));
        s.insert(Elem::Int(100));
        assert!(s.contains(&Elem::Int(3)));
        assert!(s.contains(&Elem::Int(-2)));
        assert!(s.contains(&Elem::Int(100)));
        assert!(!s.contains(&Elem::Int(4)));
        assert_eq!(s.elems(), vec![Elem::Int(-2), Elem::Int(3), Elem::Int(100)]);
        s.remove(&Elem::Int(100));
        s.remove(&Elem::Int(3));
        assert_eq!(s.elems(), vec![Elem::Int(-2)]);
    }

    #[test]
    fn pairs_do_not_alias_ints() {
        let ints = FiniteSet::from_elems([Elem::Int(9)]);
        assert!(!ints.contains(&Elem::Pair(1, 1)));
        let pairs = FiniteSet::from_elems([Elem::Pair(1, 1), Elem::Pair(9, 0)]);
        assert!(pairs.contains(&Elem::Pair(1, 1)));
        assert!(!pairs.contains(&Elem::Int(9)));
        assert_eq!(pairs.to_string(), "{(1, 1), (9, 0)}");
    }

    #[test]
    fn emptied_sets_equal_fresh_ones() {
        let mut s = FiniteSet::from_elems([Elem::Pair(0, 1)]);
        s.remove(&Elem::Pair(0, 1));
        assert_eq!(s, FiniteSet::new());
        assert!(s.is_empty());
    }
}
