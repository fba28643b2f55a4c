//! Text checkpoints of network parameters.
//!
//! ```text
//! NHPINN-CKPT v1
//! 2 64 64 64 1
//! <layer 0 weights, row-major> <layer 0 biases>
//! ...
//! ```
//!
//! Every float is written with 17 significant digits, which round-trips `f64`
//! bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use nhpinn_core::diffnet::NetworkParams;

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub const CHECKPOINT_MAGIC: &str = "NHPINN-CKPT v1";

pub fn encode_checkpoint(params: &NetworkParams) -> String {
    let mut out = String::new();
    out.push_str(CHECKPOINT_MAGIC);
    out.push('\n');
    let dims: Vec<String> = params.dims().iter().map(|d| d.to_string()).collect();
    out.push_str(&dims.join(" "));
    out.push('\n');
    for l in 0..params.num_layers() {
        let mut first = true;
        for v in params.weights(l).iter().chain(params.biases(l)) {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn decode_checkpoint(text: &str) -> Result<NetworkParams> {
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l.trim_end() == CHECKPOINT_MAGIC => {}
        other => return Err(Error::format(format!("bad checkpoint header {other:?}"))),
    }
    let dims = lines
        .next()
        .ok_or_else(|| Error::format("checkpoint lacks the dims line"))?
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| Error::format(format!("dim {t:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if dims.len() < 2 {
        return Err(Error::format("checkpoint needs at least two layer widths"));
    }
    let mut weights = Vec::with_capacity(dims.len() - 1);
    let mut biases = Vec::with_capacity(dims.len() - 1);
    for l in 0..dims.len() - 1 {
        let line = lines
            .next()
            .ok_or_else(|| Error::format(format!("checkpoint lacks layer {l}")))?;
        let vals = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::format(format!("layer {l} value {t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let nw = dims[l] * dims[l + 1];
        if vals.len() != nw + dims[l + 1] {
            return Err(Error::format(format!(
                "layer {l} holds {} values, expected {}",
                vals.len(),
                nw + dims[l + 1]
            )));
        }
        biases.push(vals[nw..].to_vec());
        weights.push(vals[..nw].to_vec());
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(Error::format("trailing data after the last layer"));
    }
    Ok(NetworkParams::from_layers(&dims, &weights, &biases)?)
}

pub fn save_checkpoint(params: &NetworkParams, path: &Path) -> Result<()> {
    write_atomic(path, encode_checkpoint(params).as_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<NetworkParams> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&text)
}
