//! The bundled example programs under `corpus/`.

use std::path::PathBuf;

/// (name, file) of each bundled program.
pub const PROGRAMS: [(&str, &str); 8] = [
    ("P_ID", "id.pceks"),
    ("P_SPAWNJOIN", "spawnjoin.pceks"),
    ("P_PAR", "par.pceks"),
    ("P_CAS", "cas.pceks"),
    ("P_REPL", "repl.pceks"),
    ("P_POOL", "pool.pceks"),
    ("P_FUT", "fut.pceks"),
    ("P_BARRIER", "barrier.pceks"),
];

pub fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn path(name: &str) -> Option<PathBuf> {
    PROGRAMS.iter().find(|(n, _)| *n == name).map(|(_, f)| dir().join(f))
}
