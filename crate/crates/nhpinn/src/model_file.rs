//! Text form of homogenized models.
//!
//! ```text
//! NHPINN-HOMOG v1
//! kind tensor|field|reaction
//! provenance neural|reference|exact
//! <payload lines>
//! ```
//!
//! Payloads: `tensor a11 a12 a21 a22`; one `sample x a*(x)` line per field node;
//! `reaction D r*`.

use std::fmt::Write as _;

use nhpinn_core::homogenize::{HomogenizedModel, HomogenizedPayload, Provenance};

use crate::error::{Error, Result};

pub const MODEL_MAGIC: &str = "NHPINN-HOMOG v1";

fn kind_tag(payload: &HomogenizedPayload) -> &'static str {
    match payload {
        HomogenizedPayload::Tensor(_) => "tensor",
        HomogenizedPayload::Field { .. } => "field",
        HomogenizedPayload::Reaction { .. } => "reaction",
    }
}

pub fn encode_model(model: &HomogenizedModel) -> String {
    let mut out = format!(
        "{MODEL_MAGIC}\nkind {}\nprovenance {}\n",
        kind_tag(&model.payload),
        model.provenance.name()
    );
    match &model.payload {
        HomogenizedPayload::Tensor(t) => {
            let _ = writeln!(out, "tensor {:.16e} {:.16e} {:.16e} {:.16e}", t[0][0], t[0][1], t[1][0], t[1][1]);
        }
        HomogenizedPayload::Field { xs, values } => {
            for (x, v) in xs.iter().zip(values) {
                let _ = writeln!(out, "sample {x:.16e} {v:.16e}");
            }
        }
        HomogenizedPayload::Reaction { diffusivity, r_star } => {
            let _ = writeln!(out, "reaction {diffusivity:.16e} {r_star:.16e}");
        }
    }
    out
}

fn floats(fields: &[&str], n: usize, what: &str) -> Result<Vec<f64>> {
    if fields.len() != n {
        return Err(Error::format(format!("{what} needs {n} values, found {}", fields.len())));
    }
    fields
        .iter()
        .map(|t| t.parse::<f64>().map_err(|e| Error::format(format!("{what} value {t:?}: {e}"))))
        .collect()
}

fn tagged<'a>(line: Option<&'a str>, tag: &str) -> Result<&'a str> {
    line.and_then(|l| l.strip_prefix(tag))
        .and_then(|rest| rest.strip_prefix(' '))
        .map(str::trim)
        .ok_or_else(|| Error::format(format!("expected a `{tag}` line")))
}

pub fn decode_model(text: &str) -> Result<HomogenizedModel> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim_end) != Some(MODEL_MAGIC) {
        return Err(Error::format("bad homogenized model header"));
    }
    let kind = tagged(lines.next(), "kind")?.to_string();
    let provenance = Provenance::parse(tagged(lines.next(), "provenance")?)?;
    let body: Vec<Vec<&str>> = lines.map(|l| l.split_whitespace().collect()).collect();
    let model = match kind.as_str() {
        "tensor" => {
            let [line] = body.as_slice() else {
                return Err(Error::format("tensor model takes exactly one payload line"));
            };
            if line.first() != Some(&"tensor") {
                return Err(Error::format("expected a `tensor` line"));
            }
            let v = floats(&line[1..], 4, "tensor")?;
            HomogenizedModel::tensor([[v[0], v[1]], [v[2], v[3]]], provenance)?
        }
        "field" => {
            let mut xs = Vec::with_capacity(body.len());
            let mut values = Vec::with_capacity(body.len());
            for line in &body {
                if line.first() != Some(&"sample") {
                    return Err(Error::format("expected `sample` lines"));
                }
                let v = floats(&line[1..], 2, "sample")?;
                xs.push(v[0]);
                values.push(v[1]);
            }
            HomogenizedModel::field(xs, values, provenance)?
        }
        "reaction" => {
            let [line] = body.as_slice() else {
                return Err(Error::format("reaction model takes exactly one payload line"));
            };
            if line.first() != Some(&"reaction") {
                return Err(Error::format("expected a `reaction` line"));
            }
            let v = floats(&line[1..], 2, "reaction")?;
            HomogenizedModel::reaction(v[0], v[1], provenance)?
        }
        other => return Err(Error::format(format!("unknown model kind {other:?}"))),
    };
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn each_kind_round_trips() {
        let models = [
            HomogenizedModel::tensor([[1.9, 0.0], [0.0, 1.9]], Provenance::Neural).unwrap(),
            HomogenizedModel::field(vec![0.0, 1.0, 2.0, 3.0], vec![2.0, 2.5, 2.4, 2.1], Provenance::Exact).unwrap(),
            HomogenizedModel::reaction(2.0, -0.25, Provenance::Reference).unwrap(),
        ];
        for m in models {
            let text = encode_model(&m);
            assert!(text.starts_with("NHPINN-HOMOG v1\nkind "));
            assert_eq!(decode_model(&text).unwrap(), m);
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(decode_model("NHPINN-HOMOG v1\nkind tensor\nprovenance neural\ntensor 1 0 0\n").is_err());
        assert!(decode_model("NHPINN-HOMOG v1\nkind blob\nprovenance neural\n").is_err());
        assert!(decode_model("NHPINN-HOMOG v1\nkind reaction\nprovenance guess\nreaction 2 0\n").is_err());
        // not positive definite
        assert!(decode_model("NHPINN-HOMOG v1\nkind tensor\nprovenance neural\ntensor 1 0 0 -1\n").is_err());
    }
}
