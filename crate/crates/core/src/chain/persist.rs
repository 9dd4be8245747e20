//! Chain file: one block per line, each line the compact JSON encoding of a
//! [`Block`] followed by `\n`. Genesis is the first line.
//!
//! Lines must be byte-for-byte canonical: `load` re-encodes every parsed
//! block and rejects the record if the bytes differ, so any edit to the file
//! either fails to parse, fails the canonical check, or changes a hashed
//! value.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::{transactions_root, Block, Ledger};

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("corrupt record {record}: {reason}")]
    CorruptRecord { record: usize, reason: String },
    #[error("i/o failure: {0}")]
    IoFailure(#[from] io::Error),
}

pub fn block_line(block: &Block) -> String {
    serde_json::to_string(block).expect("blocks always serialize")
}

/// Writes the whole ledger to `path`, replacing any previous file.
pub fn persist(ledger: &Ledger, path: &Path) -> Result<(), PersistError> {
    let tmp = path.with_extension("tmp");
    {
        let mut out = BufWriter::new(File::create(&tmp)?);
        for block in &ledger.blocks {
            out.write_all(block_line(block).as_bytes())?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        out.get_ref().sync_all()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

/// Appends records to an existing chain file (creating it if needed).
pub fn append_blocks(blocks: &[Block], path: &Path) -> Result<(), PersistError> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut out = BufWriter::new(file);
    for block in blocks {
        out.write_all(block_line(block).as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a chain file. Each record is checked in isolation (canonical
/// encoding, transaction ids, transaction root, block hash); cross-block
/// rules and state replay are left to [`super::verify_chain`].
pub fn load(path: &Path) -> Result<Ledger, PersistError> {
    let bytes = fs::read(path)?;
    let mut blocks = Vec::new();
    let mut rest = bytes.as_slice();
    let mut record = 0usize;
    while !rest.is_empty() {
        let corrupt = |reason: String| PersistError::CorruptRecord { record, reason };
        let Some(end) = rest.iter().position(|&b| b == b'\n') else {
            return Err(corrupt("record is not newline-terminated (truncated file?)".into()));
        };
        let line = std::str::from_utf8(&rest[..end]).map_err(|e| corrupt(e.to_string()))?;
        let block: Block = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
        if block_line(&block) != line {
            return Err(corrupt("record is not in canonical encoding".into()));
        }
        if let Some(tx) = block.transactions.iter().find(|tx| !tx.id_is_valid()) {
            return Err(corrupt(format!("tx_id {} does not match its fields", tx.tx_id)));
        }
        if block.header.tx_root != transactions_root(&block.transactions) {
            return Err(corrupt("tx_root does not match transactions".into()));
        }
        if !block.hash_is_valid() {
            return Err(corrupt("block_hash does not match header".into()));
        }
        blocks.push(block);
        rest = &rest[end + 1..];
        record += 1;
    }
    Ok(Ledger { blocks })
}
