//! Text grammar for map definitions and the corpus file format.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' ['+' | '-'] digits)*
//! primary := number | 'z' | 'i' | '(' expr ')'
//!          | 'sqrt' '(' expr ')' | 'neg' '(' expr ')'
//!          | 'compose' '(' expr ',' expr ')'
//!          | ('cayley' | 'icayley') '(' 'tau' '=' expr ',' 'to' '=' ('H' | 'RH') ')'
//! number  := digits ['.' digits] [('e' | 'E') ['+' | '-'] digits] ['i']
//! ```

mod corpus;
mod format;
mod parser;

pub use corpus::{load_corpus, parse_corpus, CorpusEntry, Expected, SlcPartner, StepLabel, TypeLabel};
pub use format::{format_constant, format_map};
pub use parser::{parse_constant, parse_map, parse_map_bytes, MAX_DEPTH};
