//! Line-oriented text formats for trees and generator configurations.
//!
//! Tree files:
//!
//! ```text
//! # comment
//! root o
//! edge o a J=1.0
//! edge o b theta=0.5
//! ```
//!
//! Labels containing `~` mark vertices introduced by subdivision.

use std::fmt::Write as _;

use super::{DegreeRule, EdgeParam, EdgeRule, RootedTree, SphericalConfig, TreeBuilder};
use crate::error::{Error, Result};

pub fn parse_tree(text: &str) -> Result<RootedTree> {
    let mut builder: Option<TreeBuilder> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        match (fields[0], builder.as_mut()) {
            ("root", None) => {
                if fields.len() != 2 {
                    return Err(parse_err(line, "expected `root <token>`"));
                }
                builder = Some(TreeBuilder::new(fields[1]));
            }
            ("root", Some(_)) => return Err(parse_err(line, "second `root` declaration")),
            ("edge", None) => return Err(Error::MissingRoot),
            ("edge", Some(b)) => {
                if fields.len() != 4 {
                    return Err(parse_err(
                        line,
                        "expected `edge <parent> <child> J=<x>` or `theta=<x>`",
                    ));
                }
                let param = parse_param(fields[3], line)?;
                let synthetic = fields[2].contains('~');
                b.edge_at(fields[1], fields[2], param, synthetic, line);
            }
            (other, _) => return Err(parse_err(line, &format!("unknown directive `{other}`"))),
        }
    }
    builder.ok_or(Error::MissingRoot)?.build()
}

fn parse_param(field: &str, line: usize) -> Result<EdgeParam> {
    let (key, value) = field
        .split_once('=')
        .ok_or_else(|| parse_err(line, "expected `J=<x>` or `theta=<x>`"))?;
    let value: f64 = value
        .parse()
        .map_err(|_| parse_err(line, &format!("bad number `{value}`")))?;
    match key {
        "J" => Ok(EdgeParam::Coupling(value)),
        "theta" => Ok(EdgeParam::Bias(value)),
        _ => Err(parse_err(line, &format!("unknown edge key `{key}`"))),
    }
}

fn parse_err(line: usize, message: &str) -> Error {
    Error::Parse {
        line,
        message: message.to_string(),
    }
}

/// Canonical text form: edges in child-index order.
pub fn serialize_tree(tree: &RootedTree) -> String {
    let mut out = String::new();
    writeln!(out, "root {}", tree.label(0)).unwrap();
    for v in 1..tree.len() {
        let p = tree.parent(v).expect("non-root");
        let param = match tree.edge_param(v).expect("non-root") {
            EdgeParam::Coupling(j) => format!("J={j}"),
            EdgeParam::Bias(t) => format!("theta={t}"),
        };
        writeln!(out, "edge {} {} {}", tree.label(p), tree.label(v), param).unwrap();
    }
    out
}

/// Parses `key=value` pairs separated by newlines or `;`.
///
/// Keys: `kind` (`spherical` | `power`), `depth` (or `N`), `degrees` (or `d`,
/// a comma-separated list or a single value repeated at every level), `b`,
/// `alpha`, `theta`, `J`, `beta`, `budget`.
pub fn parse_generator_config(text: &str) -> Result<SphericalConfig> {
    let mut kind = None;
    let mut depth = None;
    let mut degrees: Option<Vec<u64>> = None;
    let (mut base, mut alpha) = (None, None);
    let (mut theta, mut coupling, mut beta) = (None, None, None);
    let mut budget = None;
    for (i, raw) in text.split(['\n', ';']).enumerate() {
        let item = raw.trim();
        if item.is_empty() || item.starts_with('#') {
            continue;
        }
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| parse_err(i + 1, &format!("expected key=value, got `{item}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let num = |v: &str| -> Result<f64> {
            v.parse()
                .map_err(|_| parse_err(i + 1, &format!("bad number `{v}` for `{key}`")))
        };
        let int = |v: &str| -> Result<u64> {
            v.parse()
                .map_err(|_| parse_err(i + 1, &format!("bad integer `{v}` for `{key}`")))
        };
        match key {
            "kind" => kind = Some(value.to_string()),
            "depth" | "N" => depth = Some(int(value)? as usize),
            "degrees" | "d" => {
                degrees = Some(
                    value
                        .split(',')
                        .map(|s| int(s.trim()))
                        .collect::<Result<_>>()?,
                )
            }
            "b" => base = Some(num(value)?),
            "alpha" => alpha = Some(num(value)?),
            "theta" => theta = Some(num(value)?),
            "J" => coupling = Some(num(value)?),
            "beta" => beta = Some(num(value)?),
            "budget" => budget = Some(int(value)?),
            _ => return Err(parse_err(i + 1, &format!("unknown key `{key}`"))),
        }
    }

    let edge = match (theta, coupling, beta) {
        (Some(t), None, _) => EdgeRule::Bias(t),
        (None, Some(j), Some(b)) => EdgeRule::Coupling { j, beta: b },
        (Some(t), Some(j), Some(b)) => {
            let derived = (b * j).tanh();
            if (derived - t).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "theta={t} disagrees with tanh(beta*J)={derived}"
                )));
            }
            EdgeRule::Bias(t)
        }
        (None, Some(_), None) => {
            return Err(Error::InvalidParameter("J given without beta".into()))
        }
        _ => return Err(Error::InvalidParameter("need theta, or J and beta".into())),
    };

    let kind = kind.unwrap_or_else(|| {
        if base.is_some() {
            "power".into()
        } else {
            "spherical".into()
        }
    });
    let degrees = match kind.as_str() {
        "spherical" => match degrees {
            Some(d) if d.len() == 1 => DegreeRule::Regular(d[0]),
            Some(d) => DegreeRule::Explicit(d),
            None => return Err(Error::InvalidParameter("spherical config needs degrees".into())),
        },
        "power" => DegreeRule::PowerLaw {
            base: base.ok_or_else(|| Error::InvalidParameter("power config needs b".into()))?,
            alpha: alpha.unwrap_or(0.0),
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown kind `{other}`"
            )))
        }
    };
    let depth = match (&degrees, depth) {
        (_, Some(n)) => n,
        (DegreeRule::Explicit(d), None) => d.len(),
        _ => return Err(Error::InvalidParameter("config needs depth".into())),
    };
    let mut config = SphericalConfig::new(depth, degrees, edge)?;
    if let Some(b) = budget {
        config = config.with_degree_budget(b);
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_tree() {
        let t = parse_tree("root o\nedge o a J=1.0\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.depth(1), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_tree("root o\nedge o a J=1.0\nedge a o J=1.0\n").unwrap_err();
        assert!(matches!(err, Error::Cycle { line: 3, .. }), "{err:?}");

        let err = parse_tree("# c\nroot o\nedge o a J=1\nedge o a J=2\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateChild { line: 4, .. }), "{err:?}");

        let err = parse_tree("root o\nedge o a J=-1\n").unwrap_err();
        assert!(matches!(err, Error::NonPositiveCoupling { line: 2, .. }));

        let err = parse_tree("root o\nedge o a J=1\nedge x y J=1\n").unwrap_err();
        assert!(matches!(err, Error::Unreachable { line: 3, .. }));

        assert_eq!(parse_tree("edge o a J=1\n"), Err(Error::MissingRoot));
        assert_eq!(parse_tree("# nothing\n"), Err(Error::MissingRoot));
        assert!(matches!(
            parse_tree("root o\nedge o a K=1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn three_level_binary_file() {
        let text = "root o\n\
            edge o a theta=0.5\nedge o b theta=0.5\n\
            edge a a0 theta=0.5\nedge a a1 theta=0.5\n\
            edge b b0 theta=0.5\nedge b b1 theta=0.5\n";
        let t = parse_tree(text).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(t.leaves().filter(|&v| t.depth(v) == 2).count(), 4);
        assert_eq!(serialize_tree(&t), text);
    }

    #[test]
    fn generator_config_forms() {
        let c = parse_generator_config("d=2;theta=0.5;depth=3").unwrap();
        assert_eq!(c.profile().degrees(), &[2, 2, 2]);
        let c = parse_generator_config("kind=power\ndepth=4\nb=2\nalpha=1\nJ=0.5\nbeta=1.0986").unwrap();
        assert_eq!(c.profile().len(), 4);
        assert!(parse_generator_config("d=2;theta=0.5").is_err());
        assert!(parse_generator_config("d=2;depth=2;theta=0.5;J=1;beta=1").is_err());
    }
}
