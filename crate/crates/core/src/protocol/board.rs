use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line of the board: a watermark hash and who posted it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoardRecord {
    /// UTC seconds, strictly increasing down the file.
    pub ts: u64,
    pub hash: String,
    pub who: String,
}

/// Append-only JSONL log. Writers take an exclusive advisory lock, readers a
/// shared one; nothing ever rewrites an existing line.
#[derive(Clone, Debug)]
pub struct BulletinBoard {
    path: PathBuf,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn is_sha256_hex(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

fn parse(text: &str) -> Result<Vec<BoardRecord>> {
    let mut out: Vec<BoardRecord> = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: BoardRecord = serde_json::from_str(line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        if !is_sha256_hex(&rec.hash) {
            return Err(Error::Parse { line: i + 1, message: format!("hash {:?} is not 64 lowercase hex digits", rec.hash) });
        }
        if out.last().is_some_and(|last| last.ts >= rec.ts) {
            return Err(Error::Parse { line: i + 1, message: "timestamps not strictly increasing".into() });
        }
        out.push(rec);
    }
    Ok(out)
}

impl BulletinBoard {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        BulletinBoard { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// All records; a board that does not exist yet is empty.
    pub fn records(&self) -> Result<Vec<BoardRecord>> {
        let mut file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(&self.path, e)),
        };
        file.lock_shared().map_err(|e| Error::io(&self.path, e))?;
        let mut text = String::new();
        file.read_to_string(&mut text).map_err(|e| Error::io(&self.path, e))?;
        parse(&text)
    }

    /// Appends `hash` for `who`. The timestamp is the wall clock, bumped past
    /// the last record when two posts land in the same second.
    pub fn append(&self, hash: &str, who: &str) -> Result<BoardRecord> {
        if !is_sha256_hex(hash) {
            return Err(Error::InvalidArgument(format!("hash {hash:?} is not 64 lowercase hex digits")));
        }
        let io = |e| Error::io(&self.path, e);
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(&self.path).map_err(io)?;
        file.lock().map_err(io)?;
        let mut text = String::new();
        file.seek(SeekFrom::Start(0)).map_err(io)?;
        file.read_to_string(&mut text).map_err(io)?;
        let existing = parse(&text)?;
        let ts = existing.last().map_or(now(), |last| now().max(last.ts + 1));
        let rec = BoardRecord { ts, hash: hash.to_owned(), who: who.to_owned() };
        let mut line = serde_json::to_string(&rec)?;
        if !text.is_empty() && !text.ends_with('\n') {
            line.insert(0, '\n');
        }
        line.push('\n');
        file.write_all(line.as_bytes()).map_err(io)?;
        file.sync_data().map_err(io)?;
        Ok(rec)
    }
}
