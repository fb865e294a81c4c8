//! Line-oriented model file format:
//!
//! ```text
//! name <IDENT>
//! generator <IDENT> <DEGREE> [domain] [stage=K]
//! d <IDENT> = <lie-expr>       # omitted means zero differential
//! # comment
//! ```
//!
//! `domain` marks the generator as part of the map model's domain V;
//! unmarked generators are relative (W). Serialization followed by parsing
//! is the identity on models, including generator order and stage tags.

use crate::dgl::Dgl;
use crate::error::{Error, Result};
use crate::lie::{lie_string, GenInfo, GenSet, Tensor};
use crate::parser::{parse, valid_ident};

/// Parses a model file.
pub fn parse_model(text: &str) -> Result<Dgl> {
    let mut name = "model".to_string();
    let mut gens = GenSet::new();
    let mut d_lines: Vec<(usize, String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::ModelFile {
            line: lineno,
            msg: msg.to_string(),
        };
        if let Some(rest) = line.strip_prefix("name ") {
            name = rest.trim().to_string();
        } else if let Some(rest) = line.strip_prefix("generator ") {
            let mut toks = rest.split_whitespace();
            let id = toks.next().ok_or_else(|| bad("missing generator name"))?;
            if !valid_ident(id) {
                return Err(bad(&format!("invalid generator name `{}`", id)));
            }
            let degree: usize = toks
                .next()
                .ok_or_else(|| bad("missing degree"))?
                .parse()
                .map_err(|_| bad("degree must be a non-negative integer"))?;
            let mut info = GenInfo::new(id, degree);
            for t in toks {
                if t == "domain" {
                    info = info.domain();
                } else if let Some(k) = t.strip_prefix("stage=") {
                    let s: usize = k
                        .parse()
                        .map_err(|_| bad("stage must be a non-negative integer"))?;
                    info.stage = Some(s);
                } else {
                    return Err(bad(&format!("unknown generator attribute `{}`", t)));
                }
            }
            gens.push(info).map_err(|e| Error::ModelFile {
                line: lineno,
                msg: e.to_string(),
            })?;
        } else if let Some(rest) = line.strip_prefix("d ") {
            let (id, expr) = rest
                .split_once('=')
                .ok_or_else(|| bad("expected `d <IDENT> = <expr>`"))?;
            d_lines.push((lineno, id.trim().to_string(), expr.trim().to_string()));
        } else {
            return Err(bad(&format!("unrecognized line `{}`", line)));
        }
    }
    let mut diffs = vec![Tensor::zero(); gens.len()];
    for (lineno, id, expr) in d_lines {
        let g = gens.idx(&id).ok_or_else(|| Error::ModelFile {
            line: lineno,
            msg: format!("differential of undeclared generator `{}`", id),
        })?;
        let e = parse(&expr, &gens).map_err(|e| Error::ModelFile {
            line: lineno,
            msg: e.to_string(),
        })?;
        diffs[g as usize] = e.expand(&gens).map_err(|e| Error::ModelFile {
            line: lineno,
            msg: e.to_string(),
        })?;
    }
    Dgl::new(&name, gens, diffs)
}

/// Serializes a model; `parse_model` of the output reproduces the model
/// exactly (generator order, differentials, domain flags, stage tags).
pub fn serialize_model(dgl: &Dgl) -> String {
    let mut out = String::new();
    out.push_str(&format!("name {}\n", dgl.name));
    for (_, g) in dgl.gens().iter() {
        out.push_str(&format!("generator {} {}", g.id, g.degree));
        if g.domain {
            out.push_str(" domain");
        }
        if let Some(s) = g.stage {
            out.push_str(&format!(" stage={}", s));
        }
        out.push('\n');
    }
    for (i, g) in dgl.gens().iter() {
        let diff = dgl.diff(i);
        if !diff.is_zero() {
            let s = lie_string(diff, dgl.gens())
                .expect("differential is a Lie element");
            out.push_str(&format!("d {} = {}\n", g.id, s));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{binary_product, power_model};

    fn cp2_text() -> &'static str {
        "# the rational model of the projective plane\n\
         name CP2\n\
         generator x 1\n\
         generator y 3\n\
         d y = [x,x]\n"
    }

    #[test]
    fn parse_basic_model() {
        let m = parse_model(cp2_text()).unwrap();
        assert_eq!(m.name, "CP2");
        assert_eq!(m.gens().len(), 2);
        assert_eq!(m.gens().degree(1), 3);
        assert!(!m.diff(1).is_zero());
        assert!(m.diff(0).is_zero());
    }

    #[test]
    fn round_trip_basic() {
        let m = parse_model(cp2_text()).unwrap();
        let s = serialize_model(&m);
        assert_eq!(parse_model(&s).unwrap(), m);
    }

    #[test]
    fn round_trip_attributes() {
        let text = "name M\n\
                    generator v 2 domain stage=1\n\
                    generator w 2\n";
        let m = parse_model(text).unwrap();
        assert!(m.gens().info(0).domain);
        assert_eq!(m.gens().info(0).stage, Some(1));
        assert!(!m.gens().info(1).domain);
        let s = serialize_model(&m);
        assert_eq!(parse_model(&s).unwrap(), m);
    }

    #[test]
    fn round_trip_constructed_models() {
        let cp2 = parse_model(cp2_text()).unwrap();
        let s3 = parse_model("name S3\ngenerator w 2\n").unwrap();
        let prod = binary_product(&cp2, &s3, 8).unwrap().dgl;
        assert_eq!(parse_model(&serialize_model(&prod)).unwrap(), prod);
        let pow = power_model(&cp2, 3, 8).unwrap().dgl;
        assert_eq!(parse_model(&serialize_model(&pow)).unwrap(), pow);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_model("generator x 1\nd z = x\n").unwrap_err();
        match e {
            Error::ModelFile { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let e = parse_model("generator 1x 1\n").unwrap_err();
        assert!(matches!(e, Error::ModelFile { line: 1, .. }));
        let e = parse_model("nonsense\n").unwrap_err();
        assert!(matches!(e, Error::ModelFile { line: 1, .. }));
    }

    #[test]
    fn bad_differential_degree_rejected() {
        let e = parse_model("generator x 1\ngenerator y 2\nd y = [x,x]\n");
        assert!(e.is_err());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let m = parse_model("\n# leading comment\nname A # trailing\ngenerator x 1 # deg 1\n").unwrap();
        assert_eq!(m.name, "A");
        assert_eq!(m.gens().len(), 1);
    }
}
