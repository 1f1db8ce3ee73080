//! Line-oriented setup description format.
//!
//! A setup file starts with a structured header comment declaring the mode
//! space, followed by one element per line in beam order:
//!
//! ```text
//! # space lmin=-8 lmax=8 paths=a,b pol=off
//! spp a charge=+1
//! oambs a b
//! mirror b
//! oambs a b
//! ```
//!
//! Element lines: `spp <path> charge=<±int>` | `mirror <path>` |
//! `dove <path> angle_deg=<num>` | `bs <path> <path>` | `oambs <path> <path>`
//! | `hwp <path> angle_deg=<num>` | `qwp <path> angle_deg=<num>` |
//! `pbs <path> <path>`. Other `#` lines are comments. Angles are degrees in
//! files and radians in the API. Parsing reports every error in one pass.

use crate::elements::{Circuit, Element};
use crate::error::Error;
use crate::space::ModeSpace;
use std::fmt;

/// One diagnostic pointing into the source text (1-based line and column).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub token: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.token.is_empty() {
            write!(f, "{}:{}: {}", self.line, self.column, self.message)
        } else {
            write!(f, "{}:{}: {} (`{}`)", self.line, self.column, self.message, self.token)
        }
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token { text: &line[s..i], column: s + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token { text: &line[s..], column: s + 1 });
    }
    out
}

struct LineParser<'a> {
    line_no: usize,
    tokens: Vec<Token<'a>>,
    errors: Vec<ParseError>,
}

impl<'a> LineParser<'a> {
    fn error_at(&mut self, column: usize, message: impl Into<String>, token: &str) {
        self.errors.push(ParseError {
            line: self.line_no,
            column,
            message: message.into(),
            token: token.to_string(),
        });
    }

    fn expect_arity(&mut self, args: usize) -> bool {
        // tokens[0] is the keyword
        if self.tokens.len() != args + 1 {
            let keyword = self.tokens[0].text.to_string();
            self.error_at(
                self.tokens[0].column,
                format!("`{}` takes {} argument(s), got {}", keyword, args, self.tokens.len() - 1),
                &keyword,
            );
            false
        } else {
            true
        }
    }

    fn key_value(&mut self, index: usize, key: &str) -> Option<&'a str> {
        let tok = &self.tokens[index];
        match tok.text.split_once('=') {
            Some((k, v)) if k == key => Some(v),
            _ => {
                let (col, text) = (tok.column, tok.text.to_string());
                self.error_at(col, format!("expected `{key}=<value>`"), &text);
                None
            }
        }
    }

    fn charge(&mut self, index: usize) -> Option<i32> {
        let raw = self.key_value(index, "charge")?;
        let col = self.tokens[index].column;
        match raw.parse::<i32>() {
            Ok(0) => {
                self.error_at(col, "spiral phase charge must be nonzero", raw);
                None
            }
            Ok(c) => Some(c),
            Err(_) => {
                self.error_at(col, "charge must be an integer", raw);
                None
            }
        }
    }

    fn angle_deg(&mut self, index: usize) -> Option<f64> {
        let raw = self.key_value(index, "angle_deg")?;
        let col = self.tokens[index].column;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.error_at(col, "angle_deg must be a finite number", raw);
                None
            }
        }
    }
}

fn parse_header(line_no: usize, tokens: &[Token<'_>], errors: &mut Vec<ParseError>) -> Option<ModeSpace> {
    // caller guarantees tokens[0] == "#" and tokens[1] == "space"
    let mut lmin = None;
    let mut lmax = None;
    let mut paths: Option<Vec<String>> = None;
    let mut pol = None;
    let mut bad = false;
    let fail = |errors: &mut Vec<ParseError>, col: usize, msg: String, tok: &str| {
        errors.push(ParseError { line: line_no, column: col, message: msg, token: tok.to_string() });
    };
    for tok in &tokens[2..] {
        match tok.text.split_once('=') {
            Some(("lmin", v)) => match v.parse::<i32>() {
                Ok(x) => lmin = Some(x),
                Err(_) => {
                    fail(errors, tok.column, "lmin must be an integer".into(), v);
                    bad = true;
                }
            },
            Some(("lmax", v)) => match v.parse::<i32>() {
                Ok(x) => lmax = Some(x),
                Err(_) => {
                    fail(errors, tok.column, "lmax must be an integer".into(), v);
                    bad = true;
                }
            },
            Some(("paths", v)) => {
                paths = Some(v.split(',').map(|s| s.trim().to_string()).collect());
            }
            Some(("pol", "on")) => pol = Some(true),
            Some(("pol", "off")) => pol = Some(false),
            Some(("pol", v)) => {
                fail(errors, tok.column, "pol must be `on` or `off`".into(), v);
                bad = true;
            }
            _ => {
                fail(errors, tok.column, "unknown header field".into(), tok.text);
                bad = true;
            }
        }
    }
    let column = tokens[0].column;
    let (lmin, lmax, paths, pol) = match (lmin, lmax, paths, pol) {
        (Some(a), Some(b), Some(p), Some(q)) => (a, b, p, q),
        _ => {
            if !bad {
                fail(
                    errors,
                    column,
                    "header needs lmin=, lmax=, paths= and pol= fields".into(),
                    "space",
                );
            }
            return None;
        }
    };
    match ModeSpace::new(lmin, lmax, &paths, pol) {
        Ok(space) => Some(space),
        Err(e) => {
            fail(errors, column, e.to_string(), "space");
            None
        }
    }
}

fn is_header(tokens: &[Token<'_>]) -> bool {
    tokens.len() >= 2 && tokens[0].text == "#" && tokens[1].text == "space"
}

/// Parses setup text into a circuit, reporting every error in one pass.
pub fn parse_setup(text: &str) -> Result<Circuit, Vec<ParseError>> {
    let mut errors: Vec<ParseError> = Vec::new();
    let mut space: Option<ModeSpace> = None;
    let mut header_seen = false;
    let mut elements: Vec<(usize, usize, Element)> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let tokens = tokenize(raw_line);
        if tokens.is_empty() {
            continue;
        }
        if tokens[0].text.starts_with('#') {
            if is_header(&tokens) {
                if header_seen {
                    errors.push(ParseError {
                        line: line_no,
                        column: tokens[0].column,
                        message: "duplicate space declaration".into(),
                        token: "space".into(),
                    });
                } else {
                    header_seen = true;
                    space = parse_header(line_no, &tokens, &mut errors);
                }
            }
            continue;
        }
        if !header_seen {
            errors.push(ParseError {
                line: line_no,
                column: tokens[0].column,
                message: "missing `# space ...` header before the first element".into(),
                token: tokens[0].text.to_string(),
            });
            header_seen = true; // report once
        }

        let mut lp = LineParser { line_no, tokens, errors: Vec::new() };
        let keyword = lp.tokens[0].text;
        let column = lp.tokens[0].column;
        let element = match keyword {
            "spp" => lp.expect_arity(2).then(|| {
                let path = lp.tokens[1].text.to_string();
                lp.charge(2).map(|charge| Element::SpiralPhase { path, charge })
            }),
            "mirror" => lp
                .expect_arity(1)
                .then(|| Some(Element::Mirror { path: lp.tokens[1].text.to_string() })),
            "dove" => lp.expect_arity(2).then(|| {
                let path = lp.tokens[1].text.to_string();
                lp.angle_deg(2).map(|deg| Element::DovePrism { path, beta: deg.to_radians() })
            }),
            "bs" => lp.expect_arity(2).then(|| {
                Some(Element::BeamSplitter {
                    a: lp.tokens[1].text.to_string(),
                    b: lp.tokens[2].text.to_string(),
                })
            }),
            "oambs" => lp.expect_arity(2).then(|| {
                Some(Element::OamBeamSplitter {
                    a: lp.tokens[1].text.to_string(),
                    b: lp.tokens[2].text.to_string(),
                })
            }),
            "hwp" => lp.expect_arity(2).then(|| {
                let path = lp.tokens[1].text.to_string();
                lp.angle_deg(2).map(|deg| Element::HalfWavePlate { path, angle: deg.to_radians() })
            }),
            "qwp" => lp.expect_arity(2).then(|| {
                let path = lp.tokens[1].text.to_string();
                lp.angle_deg(2)
                    .map(|deg| Element::QuarterWavePlate { path, angle: deg.to_radians() })
            }),
            "pbs" => lp.expect_arity(2).then(|| {
                Some(Element::PolarizingBeamSplitter {
                    a: lp.tokens[1].text.to_string(),
                    b: lp.tokens[2].text.to_string(),
                })
            }),
            _ => {
                lp.error_at(column, "unknown keyword", keyword);
                None
            }
        }
        .flatten();

        if let Some(element) = element {
            // path / polarization validity against the declared space
            if let Some(space) = &space {
                match element.validate(space) {
                    Ok(()) => elements.push((line_no, column, element)),
                    Err(e) => lp.error_at(column, e.to_string(), keyword),
                }
            }
        }
        errors.extend(lp.errors);
    }

    if !header_seen {
        errors.push(ParseError {
            line: 1,
            column: 1,
            message: "missing `# space ...` header".into(),
            token: String::new(),
        });
    }
    match (space, errors.is_empty()) {
        (Some(space), true) => {
            let elements = elements.into_iter().map(|(_, _, e)| e).collect();
            Circuit::new(space, elements).map_err(|e: Error| {
                vec![ParseError { line: 1, column: 1, message: e.to_string(), token: String::new() }]
            })
        }
        _ => Err(errors),
    }
}

/// Formats `x` with six significant digits.
fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{:.*}", decimals, x)
}

/// Canonical text for a circuit: header plus one lowercase element line per
/// element, parameters in fixed order, angles in degrees with six
/// significant digits.
pub fn serialize_setup(circuit: &Circuit) -> String {
    let space = circuit.space();
    let mut out = format!(
        "# space lmin={} lmax={} paths={} pol={}\n",
        space.l_min(),
        space.l_max(),
        space.paths().join(","),
        if space.pol_enabled() { "on" } else { "off" }
    );
    for e in circuit.elements() {
        let line = match e {
            Element::SpiralPhase { path, charge } => format!("spp {} charge={:+}", path, charge),
            Element::Mirror { path } => format!("mirror {}", path),
            Element::DovePrism { path, beta } => {
                format!("dove {} angle_deg={}", path, sig6(beta.to_degrees()))
            }
            Element::BeamSplitter { a, b } => format!("bs {} {}", a, b),
            Element::OamBeamSplitter { a, b } => format!("oambs {} {}", a, b),
            Element::HalfWavePlate { path, angle } => {
                format!("hwp {} angle_deg={}", path, sig6(angle.to_degrees()))
            }
            Element::QuarterWavePlate { path, angle } => {
                format!("qwp {} angle_deg={}", path, sig6(angle.to_degrees()))
            }
            Element::PolarizingBeamSplitter { a, b } => format!("pbs {} {}", a, b),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Canonical file for the built-in four-fold cycle setup over the default
/// window.
pub fn builtin_cycle_setup_text() -> String {
    "# space lmin=-8 lmax=8 paths=a,b pol=off\n\
     spp a charge=+1\n\
     oambs a b\n\
     mirror b\n\
     oambs a b\n"
        .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::four_fold_cycle_circuit;
    use crate::space::ModeSpace;

    #[test]
    fn parses_the_builtin_setup_file() {
        let circuit = parse_setup(&builtin_cycle_setup_text()).unwrap();
        assert_eq!(circuit.len(), 4);
        let expected = four_fold_cycle_circuit(&ModeSpace::default_window(&["a", "b"], false).unwrap()).unwrap();
        assert_eq!(circuit, expected);
    }

    #[test]
    fn zero_charge_is_rejected() {
        let text = "# space lmin=-2 lmax=2 paths=a pol=off\nspp a charge=0\n";
        let errors = parse_setup(text).unwrap_err();
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].line, 2);
        assert!(errors[0].message.contains("nonzero"));
    }

    #[test]
    fn empty_file_with_header_gives_empty_circuit() {
        let text = "# space lmin=-8 lmax=8 paths=a,b pol=off\n\n# a comment\n";
        let circuit = parse_setup(text).unwrap();
        assert!(circuit.is_empty());
    }

    #[test]
    fn each_malformed_line_yields_an_error() {
        let text = "\
# space lmin=-8 lmax=8 paths=a,b pol=off
spp a charge=x
frobnicate a
mirror a b
dove a angle_deg=nope
spp c charge=+1
hwp a angle_deg=10
";
        let errors = parse_setup(text).unwrap_err();
        // five malformed lines: bad charge, unknown keyword, bad arity,
        // bad angle, unknown path, plus hwp in a pol=off space
        assert!(errors.len() >= 6, "got {errors:#?}");
        let lines: Vec<usize> = errors.iter().map(|e| e.line).collect();
        for line in [2, 3, 4, 5, 6, 7] {
            assert!(lines.contains(&line), "no error for line {line}: {errors:#?}");
        }
        for e in &errors {
            assert!(e.column >= 1);
        }
    }

    #[test]
    fn duplicate_header_is_reported() {
        let text = "\
# space lmin=-8 lmax=8 paths=a,b pol=off
mirror a
# space lmin=-2 lmax=2 paths=a pol=off
";
        let errors = parse_setup(text).unwrap_err();
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].line, 3);
        assert!(errors[0].message.contains("duplicate"));
    }

    #[test]
    fn missing_header_is_reported() {
        let errors = parse_setup("mirror a\n").unwrap_err();
        assert!(errors[0].message.contains("header"));
        let errors = parse_setup("").unwrap_err();
        assert!(errors[0].message.contains("header"));
    }

    #[test]
    fn serialization_is_canonical() {
        let circuit = parse_setup(&builtin_cycle_setup_text()).unwrap();
        assert_eq!(serialize_setup(&circuit), builtin_cycle_setup_text());
    }

    #[test]
    fn angle_formatting_examples() {
        assert_eq!(sig6(22.5), "22.5000");
        assert_eq!(sig6(157.5), "157.500");
        assert_eq!(sig6(0.0), "0.00000");
        assert_eq!(sig6(-67.5), "-67.5000");
    }

    #[test]
    fn angles_round_trip_exactly_on_the_grid() {
        let space = ModeSpace::default_window(&["a", "b"], false).unwrap();
        for k in 0..8 {
            let beta = (k as f64 * 22.5).to_radians();
            let circuit = Circuit::new(
                space.clone(),
                vec![Element::DovePrism { path: "a".into(), beta }],
            )
            .unwrap();
            let text = serialize_setup(&circuit);
            let back = parse_setup(&text).unwrap();
            assert_eq!(back, circuit, "k={k}: {text}");
        }
    }
}
