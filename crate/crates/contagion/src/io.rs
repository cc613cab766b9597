//! Textual instance format, a bank-table loader, and results emission.
//!
//! The instance format is line-oriented and self-describing:
//!
//! ```text
//! contagion-instance v1
//! # free-form provenance
//! n 2
//! budget 1
//! shock point 1 0
//! nodes id c b L
//! 0 1.5 0.5 1
//! 1 0 1 1
//! edges
//! 0 1 1
//! end
//! ```
//!
//! `shock` is one of `zero`, `uniform`, `full`, `beta <alpha> <beta>`, or
//! `point <x_0> … <x_{n−1}>`. The `L` and `q` node columns and the `budget`
//! and `shock` directives are optional. Numbers are written in shortest
//! round-trip form, so save → load reproduces every value bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::network::{FinancialNetwork, NetworkError};
use crate::shocks::{ShockError, ShockKind};

pub const FORMAT_HEADER: &str = "contagion-instance v1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing required column '{0}'")]
    MissingColumn(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Shock(#[from] ShockError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Everything an instance file can carry.
#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub net: FinancialNetwork,
    pub stimulus: Option<Vec<f64>>,
    pub budget: Option<f64>,
    pub shock: Option<ShockKind>,
    pub q: Option<Vec<f64>>,
    pub provenance: String,
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<LoadedInstance, IoError> {
    let text = std::fs::read_to_string(path)?;
    parse_instance(&text)
}

pub fn parse_instance(text: &str) -> Result<LoadedInstance, IoError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty file"))?;
    if header != FORMAT_HEADER {
        return Err(parse_err(
            line_no,
            format!("expected header '{FORMAT_HEADER}', found '{header}'"),
        ));
    }

    let mut n: Option<usize> = None;
    let mut budget = None;
    let mut shock_words: Option<(usize, Vec<String>)> = None;
    let mut provenance = String::new();
    let mut node_columns: Vec<String> = Vec::new();
    let mut nodes_line = 0;

    // Header directives until the node table starts.
    for (no, line) in lines.by_ref() {
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if !provenance.is_empty() {
                provenance.push('\n');
            }
            provenance.push_str(comment.trim());
            continue;
        }
        let mut words = line.split_whitespace();
        match words.next() {
            Some("n") => {
                let w = words
                    .next()
                    .ok_or_else(|| parse_err(no, "'n' needs a value"))?;
                n = Some(
                    w.parse()
                        .map_err(|_| parse_err(no, format!("bad node count '{w}'")))?,
                );
            }
            Some("budget") => {
                let w = words
                    .next()
                    .ok_or_else(|| parse_err(no, "'budget' needs a value"))?;
                budget = Some(parse_float(no, w)?);
            }
            Some("shock") => {
                shock_words = Some((no, words.map(str::to_owned).collect()));
            }
            Some("nodes") => {
                node_columns = words.map(str::to_owned).collect();
                nodes_line = no;
                break;
            }
            Some(other) => {
                return Err(parse_err(no, format!("unknown directive '{other}'")));
            }
            None => unreachable!("line is nonempty"),
        }
    }
    let n = n.ok_or_else(|| parse_err(nodes_line, "missing 'n' before node table"))?;
    if node_columns.first().map(String::as_str) != Some("id") {
        return Err(parse_err(nodes_line, "node table must start with column 'id'"));
    }
    let col = |name: &str| node_columns.iter().position(|c| c == name);
    let (ci, bi) = match (col("c"), col("b")) {
        (Some(ci), Some(bi)) => (ci, bi),
        _ => return Err(parse_err(nodes_line, "node table needs columns 'c' and 'b'")),
    };
    let li = col("L");
    let qi = col("q");

    let mut c = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut stimulus = li.map(|_| vec![0.0; n]);
    let mut q = qi.map(|_| vec![0.0; n]);
    let mut seen = vec![false; n];
    let mut rows = 0usize;
    let mut in_edges = false;
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut finished = false;

    for (no, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if finished {
            return Err(parse_err(no, "content after 'end'"));
        }
        if !in_edges {
            if line == "edges" {
                if rows != n {
                    return Err(parse_err(no, format!("expected {n} node rows, found {rows}")));
                }
                in_edges = true;
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != node_columns.len() {
                return Err(parse_err(
                    no,
                    format!(
                        "node row has {} fields, header lists {}",
                        fields.len(),
                        node_columns.len()
                    ),
                ));
            }
            let id: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(no, format!("bad node id '{}'", fields[0])))?;
            if id >= n {
                return Err(parse_err(no, format!("node id {id} out of range")));
            }
            if seen[id] {
                return Err(parse_err(no, format!("duplicate node id {id}")));
            }
            seen[id] = true;
            c[id] = parse_float(no, fields[ci])?;
            b[id] = parse_float(no, fields[bi])?;
            if let (Some(li), Some(st)) = (li, stimulus.as_mut()) {
                st[id] = parse_float(no, fields[li])?;
            }
            if let (Some(qi), Some(qv)) = (qi, q.as_mut()) {
                qv[id] = parse_float(no, fields[qi])?;
            }
            rows += 1;
        } else if line == "end" {
            finished = true;
        } else {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_err(no, "edge rows are 'from to liability'"));
            }
            let from: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(no, format!("bad node id '{}'", fields[0])))?;
            let to: usize = fields[1]
                .parse()
                .map_err(|_| parse_err(no, format!("bad node id '{}'", fields[1])))?;
            edges.push((from, to, parse_float(no, fields[2])?));
        }
    }
    if !finished {
        return Err(parse_err(0, "missing 'end'"));
    }

    let net = FinancialNetwork::from_edges(n, &edges, &b, &c)?;
    let shock = match shock_words {
        None => None,
        Some((no, words)) => Some(parse_shock(no, &words, &c)?),
    };
    if let Some(ShockKind::PointMass(x)) = &shock {
        // Surface support violations at load time rather than at clearing.
        crate::shocks::ShockDistribution::new(ShockKind::PointMass(x.clone()), &c)?;
    }
    Ok(LoadedInstance {
        net,
        stimulus,
        budget,
        shock,
        q,
        provenance,
    })
}

fn parse_float(line: usize, w: &str) -> Result<f64, IoError> {
    w.parse()
        .map_err(|_| parse_err(line, format!("bad number '{w}'")))
}

fn parse_shock(line: usize, words: &[String], c: &[f64]) -> Result<ShockKind, IoError> {
    match words.first().map(String::as_str) {
        Some("zero") => Ok(ShockKind::Zero),
        Some("uniform") => Ok(ShockKind::Uniform),
        Some("full") => Ok(ShockKind::PointMass(c.to_vec())),
        Some("beta") => {
            if words.len() != 3 {
                return Err(parse_err(line, "'shock beta' needs two parameters"));
            }
            Ok(ShockKind::ScaledBeta {
                alpha: parse_float(line, &words[1])?,
                beta: parse_float(line, &words[2])?,
            })
        }
        Some("point") => {
            let xs: Result<Vec<f64>, _> =
                words[1..].iter().map(|w| parse_float(line, w)).collect();
            let xs = xs?;
            if xs.len() != c.len() {
                return Err(parse_err(
                    line,
                    format!("'shock point' lists {} values, n = {}", xs.len(), c.len()),
                ));
            }
            Ok(ShockKind::PointMass(xs))
        }
        _ => Err(parse_err(line, "unknown shock kind")),
    }
}

pub fn save_instance(
    net: &FinancialNetwork,
    stimulus: Option<&[f64]>,
    budget: Option<f64>,
    shock: Option<&ShockKind>,
    q: Option<&[f64]>,
    provenance: &str,
    path: impl AsRef<Path>,
) -> Result<(), IoError> {
    std::fs::write(path, render_instance(net, stimulus, budget, shock, q, provenance))?;
    Ok(())
}

pub fn render_instance(
    net: &FinancialNetwork,
    stimulus: Option<&[f64]>,
    budget: Option<f64>,
    shock: Option<&ShockKind>,
    q: Option<&[f64]>,
    provenance: &str,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_HEADER}");
    for line in provenance.lines().filter(|l| !l.is_empty()) {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "n {}", net.len());
    if let Some(budget) = budget {
        let _ = writeln!(out, "budget {budget}");
    }
    match shock {
        None => {}
        Some(ShockKind::Zero) => {
            let _ = writeln!(out, "shock zero");
        }
        Some(ShockKind::Uniform) => {
            let _ = writeln!(out, "shock uniform");
        }
        Some(ShockKind::ScaledBeta { alpha, beta }) => {
            let _ = writeln!(out, "shock beta {alpha} {beta}");
        }
        Some(ShockKind::PointMass(x)) => {
            let words: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "shock point {}", words.join(" "));
        }
    }
    let mut header = String::from("nodes id c b");
    if stimulus.is_some() {
        header.push_str(" L");
    }
    if q.is_some() {
        header.push_str(" q");
    }
    let _ = writeln!(out, "{header}");
    for j in 0..net.len() {
        let _ = write!(
            out,
            "{j} {} {}",
            net.external_assets()[j],
            net.external_liabilities()[j]
        );
        if let Some(st) = stimulus {
            let _ = write!(out, " {}", st[j]);
        }
        if let Some(qv) = q {
            let _ = write!(out, " {}", qv[j]);
        }
        out.push('\n');
    }
    let _ = writeln!(out, "edges");
    for (j, i, w, _) in net.edges() {
        let _ = writeln!(out, "{j} {i} {w}");
    }
    let _ = writeln!(out, "end");
    out
}

/// Column layout of a bank table: external assets and liabilities columns
/// by name, then an `interbank` liability matrix.
#[derive(Debug, Clone)]
pub struct BankTableSchema {
    pub assets_col: String,
    pub liabilities_col: String,
    /// Optional floor applied to external liabilities on load.
    pub liability_floor: Option<f64>,
}

impl Default for BankTableSchema {
    fn default() -> Self {
        Self {
            assets_col: "assets".into(),
            liabilities_col: "liabilities".into(),
            liability_floor: None,
        }
    }
}

#[derive(Debug)]
pub struct LoadedBankTable {
    pub net: FinancialNetwork,
    pub names: Vec<String>,
    pub warnings: Vec<String>,
}

/// Loads a whitespace bank table:
///
/// ```text
/// banks name assets liabilities
/// A 100 80
/// B 50 40
/// interbank
/// 0 5
/// 5 0
/// end
/// ```
pub fn load_bank_table(
    path: impl AsRef<Path>,
    schema: &BankTableSchema,
) -> Result<LoadedBankTable, IoError> {
    let text = std::fs::read_to_string(path)?;
    parse_bank_table(&text, schema)
}

pub fn parse_bank_table(
    text: &str,
    schema: &BankTableSchema,
) -> Result<LoadedBankTable, IoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (no, header) = lines.next().ok_or_else(|| parse_err(0, "empty file"))?;
    let mut words = header.split_whitespace();
    if words.next() != Some("banks") {
        return Err(parse_err(no, "bank table must start with 'banks <columns>'"));
    }
    let columns: Vec<&str> = words.collect();
    if columns.first() != Some(&"name") {
        return Err(parse_err(no, "first bank column must be 'name'"));
    }
    let col = |name: &str| columns.iter().position(|c| *c == name);
    let ai = col(&schema.assets_col)
        .ok_or_else(|| IoError::MissingColumn(schema.assets_col.clone()))?;
    let bi = col(&schema.liabilities_col)
        .ok_or_else(|| IoError::MissingColumn(schema.liabilities_col.clone()))?;
    let mut warnings = Vec::new();
    for (idx, cname) in columns.iter().enumerate() {
        if idx != 0 && idx != ai && idx != bi {
            warnings.push(format!("ignoring column '{cname}'"));
        }
    }

    let mut names = Vec::new();
    let mut c = Vec::new();
    let mut b = Vec::new();
    let mut matrix_lines: Vec<(usize, String)> = Vec::new();
    let mut in_matrix = false;
    for (no, line) in lines {
        if !in_matrix {
            if line == "interbank" {
                in_matrix = true;
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != columns.len() {
                return Err(parse_err(
                    no,
                    format!(
                        "bank row has {} fields, header lists {}",
                        fields.len(),
                        columns.len()
                    ),
                ));
            }
            names.push(fields[0].to_string());
            c.push(parse_float(no, fields[ai])?);
            let mut liab = parse_float(no, fields[bi])?;
            if let Some(floor) = schema.liability_floor {
                liab = liab.max(floor);
            }
            b.push(liab);
        } else if line == "end" {
            let n = names.len();
            if matrix_lines.len() != n {
                return Err(parse_err(
                    no,
                    format!("interbank matrix has {} rows, expected {n}", matrix_lines.len()),
                ));
            }
            let mut edges = Vec::new();
            for (row_idx, (row_no, row)) in matrix_lines.iter().enumerate() {
                let fields: Vec<&str> = row.split_whitespace().collect();
                if fields.len() != n {
                    return Err(parse_err(
                        *row_no,
                        format!("matrix row has {} entries, expected {n}", fields.len()),
                    ));
                }
                for (col_idx, f) in fields.iter().enumerate() {
                    let w = parse_float(*row_no, f)?;
                    if row_idx == col_idx {
                        if w != 0.0 {
                            return Err(parse_err(*row_no, "nonzero diagonal entry"));
                        }
                        continue;
                    }
                    if w != 0.0 {
                        edges.push((row_idx, col_idx, w));
                    }
                }
            }
            let net = FinancialNetwork::from_edges(n, &edges, &b, &c)?;
            return Ok(LoadedBankTable {
                net,
                names,
                warnings,
            });
        } else {
            matrix_lines.push((no, line.to_string()));
        }
    }
    Err(parse_err(0, "missing 'interbank' section or 'end'"))
}

/// One results row; optional metrics render as empty fields.
#[derive(Debug, Clone, Default)]
pub struct ResultsRow {
    pub algorithm: String,
    /// Budget step, fairness bound, or another sweep coordinate.
    pub level: String,
    pub seed: u64,
    pub mean: f64,
    pub std: f64,
    pub opt_r: Option<f64>,
    pub gc: Option<f64>,
    pub pgc: Option<f64>,
    pub sgc: Option<f64>,
    pub wall_ms: f64,
    pub note: String,
}

#[derive(Debug, Clone, Default)]
pub struct ResultsTable {
    pub rows: Vec<ResultsRow>,
}

pub const RESULTS_COLUMNS: &str = "algorithm,level,seed,mean,std,opt_r,gc,pgc,sgc,wall_ms,note";

impl ResultsTable {
    pub fn push(&mut self, row: ResultsRow) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::from(RESULTS_COLUMNS);
        out.push('\n');
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.algorithm,
                r.level,
                r.seed,
                r.mean,
                r.std,
                opt(r.opt_r),
                opt(r.gc),
                opt(r.pgc),
                opt(r.sgc),
                r.wall_ms,
                r.note
            );
        }
        out
    }
}

/// Writes the table as delimiter-separated values with a header row.
pub fn emit_results(table: &ResultsTable, path: impl AsRef<Path>) -> Result<(), IoError> {
    std::fs::write(path, table.render())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node() -> FinancialNetwork {
        FinancialNetwork::from_edges(2, &[(0, 1, 1.0)], &[0.5, 1.0], &[1.5, 0.0]).unwrap()
    }

    #[test]
    fn round_trip_preserves_everything() {
        let net = two_node();
        let stim = [1.0, 0.125];
        let q = [0.3, 0.7];
        let shock = ShockKind::PointMass(vec![1.0, 0.0]);
        let text = render_instance(
            &net,
            Some(&stim),
            Some(1.0),
            Some(&shock),
            Some(&q),
            "demo instance",
        );
        let loaded = parse_instance(&text).unwrap();
        assert_eq!(loaded.net.external_assets(), net.external_assets());
        assert_eq!(loaded.net.external_liabilities(), net.external_liabilities());
        assert_eq!(loaded.net.total_liabilities(), net.total_liabilities());
        assert_eq!(loaded.stimulus.as_deref(), Some(&stim[..]));
        assert_eq!(loaded.budget, Some(1.0));
        assert_eq!(loaded.shock, Some(shock));
        assert_eq!(loaded.q.as_deref(), Some(&q[..]));
        assert_eq!(loaded.provenance, "demo instance");
        // Serialization is deterministic: a second render matches.
        let again = render_instance(
            &loaded.net,
            loaded.stimulus.as_deref(),
            loaded.budget,
            loaded.shock.as_ref(),
            loaded.q.as_deref(),
            &loaded.provenance,
        );
        assert_eq!(text, again);
    }

    #[test]
    fn awkward_floats_survive_round_trip() {
        let b = [0.1, 1.0 / 3.0];
        let c = [f64::MIN_POSITIVE, 1.2345678901234567e300];
        let net = FinancialNetwork::from_edges(2, &[(0, 1, 0.2)], &b, &c).unwrap();
        let text = render_instance(&net, None, None, None, None, "");
        let loaded = parse_instance(&text).unwrap();
        assert_eq!(loaded.net.external_assets(), &c);
        assert_eq!(loaded.net.external_liabilities(), &b);
    }

    #[test]
    fn empty_edge_table_is_valid() {
        let text = "contagion-instance v1\nn 2\nnodes id c b\n0 1 1\n1 0 2\nedges\nend\n";
        let loaded = parse_instance(text).unwrap();
        assert_eq!(loaded.net.edge_count(), 0);
    }

    #[test]
    fn malformed_number_reports_line() {
        let text = "contagion-instance v1\nn 2\nnodes id c b\n0 1 oops\n1 0 2\nedges\nend\n";
        match parse_instance(text).unwrap_err() {
            IoError::Parse { line, msg } => {
                assert_eq!(line, 4);
                assert!(msg.contains("oops"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn invalid_network_is_rejected_on_load() {
        // Node 1 has no liabilities at all.
        let text = "contagion-instance v1\nn 2\nnodes id c b\n0 1 1\n1 0 0\nedges\nend\n";
        assert!(matches!(
            parse_instance(text).unwrap_err(),
            IoError::Network(NetworkError::IsolatedNode(1))
        ));
    }

    #[test]
    fn bank_table_loads_and_warns_on_extra_columns() {
        let text = "banks name assets liabilities region\nA 10 8 north\nB 5 4 south\n\
                    C 2 3 east\ninterbank\n0 0.5 1\n0.5 0 0\n1 0 0\nend\n";
        let table = parse_bank_table(text, &BankTableSchema::default()).unwrap();
        assert_eq!(table.names, vec!["A", "B", "C"]);
        assert_eq!(table.net.len(), 3);
        assert_eq!(table.warnings.len(), 1);
        assert!(table.warnings[0].contains("region"));
    }

    #[test]
    fn bank_without_external_liabilities_surfaces_build_error() {
        // Bank B has zero liabilities everywhere.
        let text = "banks name assets liabilities\nA 10 8\nB 5 0\ninterbank\n0 1\n0 0\nend\n";
        assert!(matches!(
            parse_bank_table(text, &BankTableSchema::default()).unwrap_err(),
            IoError::Network(NetworkError::IsolatedNode(1))
        ));
    }

    #[test]
    fn liability_floor_applies() {
        let text = "banks name assets liabilities\nA 10 8\nB 5 0\ninterbank\n0 1\n0 0\nend\n";
        let schema = BankTableSchema {
            liability_floor: Some(0.5),
            ..Default::default()
        };
        let table = parse_bank_table(text, &schema).unwrap();
        assert_eq!(table.net.external_liabilities()[1], 0.5);
    }

    #[test]
    fn results_table_renders_deterministically() {
        let mut table = ResultsTable::default();
        assert_eq!(table.render().lines().count(), 1);
        table.push(ResultsRow {
            algorithm: "greedy".into(),
            level: "k=2".into(),
            seed: 7,
            mean: 1.5,
            std: 0.25,
            opt_r: Some(2.0),
            wall_ms: 3.5,
            ..Default::default()
        });
        table.push(ResultsRow {
            algorithm: "wealth".into(),
            level: "k=2".into(),
            seed: 7,
            mean: 1.0,
            std: 0.5,
            ..Default::default()
        });
        let text = table.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], RESULTS_COLUMNS);
        assert!(lines[1].starts_with("greedy,k=2,7,1.5,0.25,2,"));
        assert!(lines[2].contains(",,,,"));
    }
}
