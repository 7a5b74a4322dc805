//! Global string interner. Labels, words and POS tags are stored once and
//! referred to by integer id everywhere else, so equality and hashing of
//! grammar objects never touch string data.

use std::collections::HashMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

/// Interned string id. Ids are only meaningful within one process.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(u32);

struct Interner {
    by_str: HashMap<&'static str, u32>,
    by_id: Vec<&'static str>,
}

fn table() -> &'static RwLock<Interner> {
    static TABLE: OnceLock<RwLock<Interner>> = OnceLock::new();
    TABLE.get_or_init(|| {
        RwLock::new(Interner {
            by_str: HashMap::new(),
            by_id: Vec::new(),
        })
    })
}

/// Interns `s`, returning its id. Reads are concurrent; the write lock is
/// only taken for strings not seen before.
pub fn intern(s: &str) -> Sym {
    if let Some(&id) = table().read().unwrap().by_str.get(s) {
        return Sym(id);
    }
    let mut t = table().write().unwrap();
    if let Some(&id) = t.by_str.get(s) {
        return Sym(id);
    }
    // The table is append-only and lives for the whole process, so leaking
    // gives out 'static references without a second hash lookup on resolve.
    let owned: &'static str = Box::leak(s.to_owned().into_boxed_str());
    let id = t.by_id.len() as u32;
    t.by_id.push(owned);
    t.by_str.insert(owned, id);
    Sym(id)
}

impl Sym {
    pub fn as_str(self) -> &'static str {
        table().read().unwrap().by_id[self.0 as usize]
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_str())
    }
}
