//! Dataset ingestion: CSV loading, schema-driven cleaning, round
//! averaging, and reproducible train/test splits.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One parsed CSV cell. Blank cells and the markers `NaN`/`NA`
/// (case-insensitive) become `Missing`.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Missing,
    Num(f64),
    Text(String),
}

impl Cell {
    fn parse(raw: &str) -> Cell {
        let t = raw.trim();
        if t.is_empty() || t.eq_ignore_ascii_case("nan") || t.eq_ignore_ascii_case("na") {
            return Cell::Missing;
        }
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Cell::Num(v),
            _ => Cell::Text(t.to_string()),
        }
    }
}

/// Raw tabular data straight from the CSV: named columns of optional
/// numeric-or-text cells, all of equal length.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub columns: Vec<(String, Vec<Cell>)>,
    pub n_rows: usize,
}

impl RawTable {
    pub fn column(&self, name: &str) -> Option<&[Cell]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
    }
}

/// Role of a column, assigned by the schema file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Role {
    /// `"feature"`, `"categorical"`, `"target"`, or `"ignore"`.
    Named(String),
    /// Member of a measurement-round group averaged into one column.
    Round { round_group: String },
}

/// Column-role mapping, loaded from JSON. Columns absent from `columns`
/// take `default_role`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Schema {
    pub target: String,
    #[serde(default)]
    pub columns: BTreeMap<String, Role>,
    #[serde(default = "default_role")]
    pub default_role: String,
}

fn default_role() -> String {
    "feature".to_string()
}

impl Schema {
    pub fn from_json(text: &str) -> Result<Schema> {
        let s: Schema = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Schema> {
        Schema::from_json(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        for (name, role) in &self.columns {
            if let Role::Named(r) = role {
                match r.as_str() {
                    "feature" | "categorical" | "target" | "ignore" => {}
                    other => {
                        return Err(Error::config(format!(
                            "column {name}: unknown role {other:?}"
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn role_of(&self, column: &str) -> Role {
        if column == self.target {
            return Role::Named("target".into());
        }
        self.columns
            .get(column)
            .cloned()
            .unwrap_or(Role::Named(self.default_role.clone()))
    }

    /// Round groups present in the schema: base name -> ordered members.
    pub fn round_groups(&self) -> Vec<(String, Vec<String>)> {
        let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (name, role) in &self.columns {
            if let Role::Round { round_group } = role {
                groups.entry(round_group.clone()).or_default().push(name.clone());
            }
        }
        groups.into_iter().collect()
    }

    /// Default schema for the thermography release: per-site round columns
    /// `<site>_r1..4`, categorical Gender/Age/Ethnicity, target `aveOralM`.
    pub fn default_thermography() -> Schema {
        let mut columns = BTreeMap::new();
        for cat in ["Gender", "Age", "Ethnicity"] {
            columns.insert(cat.to_string(), Role::Named("categorical".into()));
        }
        columns.insert("aveOralF".to_string(), Role::Named("ignore".into()));
        for site in ROUND_SITES {
            for r in 1..=4 {
                columns.insert(
                    format!("{site}_r{r}"),
                    Role::Round {
                        round_group: site.to_string(),
                    },
                );
            }
        }
        Schema {
            target: "aveOralM".to_string(),
            columns,
            default_role: "feature".to_string(),
        }
    }
}

/// Temperature sites measured over four rounds in the thermography release.
pub const ROUND_SITES: &[&str] = &[
    "T_Max_1",
    "canthi4Max_1",
    "canthiMax_1",
    "Max1R13_1",
    "Max1L13_1",
    "aveAllL13_1",
    "aveAllR13_1",
    "T_RC_1",
    "T_RC_Dry_1",
    "T_RC_Wet_1",
    "T_RC_Max_1",
    "T_LC_1",
    "T_LC_Dry_1",
    "T_LC_Wet_1",
    "T_LC_Max_1",
    "T_FHC_Max_1",
    "T_FH_Max_1",
    "T_FHRC_1",
    "T_FHLC_1",
    "T_FHBC_1",
    "T_FHTC_1",
    "T_FH_Dry_1",
    "T_FH_Wet_1",
    "T_OR_1",
    "T_OR_Max_1",
];

/// A fully clean dataset: no missing cells, finite target everywhere.
/// Column order follows the source table.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanDataset {
    pub numeric: Vec<(String, Vec<f64>)>,
    pub categorical: Vec<(String, Vec<String>)>,
    pub target_name: String,
    pub target: Vec<f64>,
}

impl CleanDataset {
    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn numeric_column(&self, name: &str) -> Option<&[f64]> {
        self.numeric
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn categorical_column(&self, name: &str) -> Option<&[String]> {
        self.categorical
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    fn take_rows(&self, idx: &[usize]) -> CleanDataset {
        CleanDataset {
            numeric: self
                .numeric
                .iter()
                .map(|(n, v)| (n.clone(), idx.iter().map(|&i| v[i]).collect()))
                .collect(),
            categorical: self
                .categorical
                .iter()
                .map(|(n, v)| (n.clone(), idx.iter().map(|&i| v[i].clone()).collect()))
                .collect(),
            target_name: self.target_name.clone(),
            target: idx.iter().map(|&i| self.target[i]).collect(),
        }
    }
}

/// Train/test split request. `test_fraction` in (0,1); the split is
/// deterministic for a fixed seed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    #[serde(default)]
    pub stratify: bool,
}

impl SplitSpec {
    pub fn new(test_fraction: f64, seed: u64) -> SplitSpec {
        SplitSpec {
            test_fraction,
            seed,
            stratify: false,
        }
    }
}

/// Load a CSV file into a `RawTable`. One header row is required; cells
/// parse as numeric where possible, otherwise text; blanks become missing.
pub fn load_csv(path: &Path) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.clone()) {
            return Err(Error::data(format!("duplicate header name {h:?}")));
        }
    }
    let mut columns: Vec<(String, Vec<Cell>)> =
        headers.into_iter().map(|h| (h, Vec::new())).collect();
    let mut n_rows = 0usize;
    for record in reader.records() {
        let record = record?;
        if record.len() != columns.len() {
            return Err(Error::data(format!(
                "row {} has {} fields, expected {}",
                n_rows + 2,
                record.len(),
                columns.len()
            )));
        }
        for (col, raw) in columns.iter_mut().zip(record.iter()) {
            col.1.push(Cell::parse(raw));
        }
        n_rows += 1;
    }
    Ok(RawTable { columns, n_rows })
}

/// Clean a raw table: drop ignored and completely-empty columns first,
/// then drop every row that still contains a missing cell.
pub fn clean(table: &RawTable, schema: &Schema) -> Result<CleanDataset> {
    // Columns first, then rows; completely empty columns must not cause
    // row drops.
    let mut kept: Vec<(&String, &Vec<Cell>, Role)> = Vec::new();
    let mut target_col: Option<&Vec<Cell>> = None;
    for (name, cells) in &table.columns {
        let role = schema.role_of(name);
        if role == Role::Named("ignore".into()) {
            continue;
        }
        if cells.iter().all(|c| matches!(c, Cell::Missing)) {
            continue;
        }
        if role == Role::Named("target".into()) {
            target_col = Some(cells);
            continue;
        }
        kept.push((name, cells, role));
    }
    let target_col = target_col
        .ok_or_else(|| Error::data(format!("target column {:?} missing", schema.target)))?;

    let row_ok = |i: usize| -> bool {
        if !matches!(target_col[i], Cell::Num(_)) {
            return false;
        }
        kept.iter().all(|(_, cells, role)| match &cells[i] {
            Cell::Missing => false,
            Cell::Num(_) => true,
            // Stray text in a numeric column counts as missing.
            Cell::Text(_) => matches!(role, Role::Named(r) if r == "categorical"),
        })
    };
    let rows: Vec<usize> = (0..table.n_rows).filter(|&i| row_ok(i)).collect();
    if rows.is_empty() {
        return Err(Error::data("all rows dropped during cleaning"));
    }

    let mut numeric = Vec::new();
    let mut categorical = Vec::new();
    for (name, cells, role) in kept {
        match role {
            Role::Named(r) if r == "categorical" => {
                let vals = rows
                    .iter()
                    .map(|&i| match &cells[i] {
                        Cell::Text(t) => t.clone(),
                        Cell::Num(v) => format!("{v}"),
                        Cell::Missing => unreachable!(),
                    })
                    .collect();
                categorical.push((name.clone(), vals));
            }
            _ => {
                let vals = rows
                    .iter()
                    .map(|&i| match cells[i] {
                        Cell::Num(v) => v,
                        _ => unreachable!(),
                    })
                    .collect();
                numeric.push((name.clone(), vals));
            }
        }
    }
    let target = rows
        .iter()
        .map(|&i| match target_col[i] {
            Cell::Num(v) => v,
            _ => unreachable!(),
        })
        .collect();
    Ok(CleanDataset {
        numeric,
        categorical,
        target_name: schema.target.clone(),
        target,
    })
}

/// Replace each group of round columns by their per-row arithmetic mean,
/// named by the group's base name. Non-grouped columns are untouched.
pub fn average_rounds(
    ds: &CleanDataset,
    groups: &[(String, Vec<String>)],
) -> Result<CleanDataset> {
    let mut claimed: HashSet<&str> = HashSet::new();
    for (base, members) in groups {
        if members.is_empty() {
            return Err(Error::config(format!("round group {base:?} is empty")));
        }
        for m in members {
            if ds.categorical_column(m).is_some() {
                return Err(Error::data(format!(
                    "round group {base:?} references categorical column {m:?}"
                )));
            }
            if ds.numeric_column(m).is_none() {
                return Err(Error::data(format!(
                    "round group {base:?} references unknown column {m:?}"
                )));
            }
            if !claimed.insert(m.as_str()) {
                return Err(Error::data(format!(
                    "column {m:?} appears in more than one round group"
                )));
            }
        }
    }

    let n = ds.n_rows();
    let mut numeric: Vec<(String, Vec<f64>)> = Vec::new();
    let mut emitted: HashSet<&str> = HashSet::new();
    for (name, values) in &ds.numeric {
        if let Some((base, members)) = groups
            .iter()
            .find(|(_, members)| members.iter().any(|m| m == name))
        {
            if emitted.insert(base.as_str()) {
                let cols: Vec<&[f64]> = members
                    .iter()
                    .map(|m| ds.numeric_column(m).unwrap())
                    .collect();
                let mean: Vec<f64> = (0..n)
                    .map(|i| cols.iter().map(|c| c[i]).sum::<f64>() / cols.len() as f64)
                    .collect();
                numeric.push((base.clone(), mean));
            }
        } else {
            numeric.push((name.clone(), values.clone()));
        }
    }
    Ok(CleanDataset {
        numeric,
        categorical: ds.categorical.clone(),
        target_name: ds.target_name.clone(),
        target: ds.target.clone(),
    })
}

/// Deterministic train/test split. Train size is `round(n * (1 - f))`;
/// the remainder goes to test.
pub fn split(ds: &CleanDataset, spec: &SplitSpec) -> Result<(CleanDataset, CleanDataset)> {
    let n = ds.n_rows();
    if n < 2 {
        return Err(Error::data("need at least 2 rows to split"));
    }
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::config("test_fraction must be in (0, 1)"));
    }
    let train_n = ((n as f64) * (1.0 - spec.test_fraction)).round() as usize;
    let train_n = train_n.clamp(1, n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut idx: Vec<usize> = (0..n).collect();
    if spec.stratify {
        // Stratify on target quartiles: shuffle within each stratum and
        // allocate proportionally.
        let mut sorted: Vec<usize> = idx.clone();
        sorted.sort_by(|&a, &b| ds.target[a].total_cmp(&ds.target[b]));
        let mut train_idx = Vec::new();
        let mut test_idx = Vec::new();
        for chunk in sorted.chunks(n.div_ceil(4)) {
            let mut c = chunk.to_vec();
            c.shuffle(&mut rng);
            let t = ((c.len() as f64) * (1.0 - spec.test_fraction)).round() as usize;
            train_idx.extend_from_slice(&c[..t]);
            test_idx.extend_from_slice(&c[t..]);
        }
        train_idx.sort_unstable();
        test_idx.sort_unstable();
        return Ok((ds.take_rows(&train_idx), ds.take_rows(&test_idx)));
    }

    idx.shuffle(&mut rng);
    let mut train_idx = idx[..train_n].to_vec();
    let mut test_idx = idx[train_n..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((ds.take_rows(&train_idx), ds.take_rows(&test_idx)))
}

/// Write a clean dataset back to CSV. Floats use the shortest
/// representation that round-trips bit-identically.
pub fn write_csv(ds: &CleanDataset, w: &mut dyn Write) -> Result<()> {
    let mut header: Vec<&str> = Vec::new();
    header.extend(ds.numeric.iter().map(|(n, _)| n.as_str()));
    header.extend(ds.categorical.iter().map(|(n, _)| n.as_str()));
    header.push(&ds.target_name);
    writeln!(w, "{}", header.join(","))?;
    for i in 0..ds.n_rows() {
        let mut fields: Vec<String> = Vec::with_capacity(header.len());
        fields.extend(ds.numeric.iter().map(|(_, v)| format!("{}", v[i])));
        fields.extend(ds.categorical.iter().map(|(_, v)| v[i].clone()));
        fields.push(format!("{}", ds.target[i]));
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn tiny_schema() -> Schema {
        Schema::from_json(r#"{"target": "y", "columns": {"g": "categorical"}}"#).unwrap()
    }

    #[test]
    fn load_minimal_csv() {
        let f = write_temp("a,b\n1,2\n3,x\n");
        let t = load_csv(f.path()).unwrap();
        assert_eq!(t.n_rows, 2);
        assert_eq!(t.columns.len(), 2);
        assert_eq!(t.column("a").unwrap(), &[Cell::Num(1.0), Cell::Num(3.0)]);
        assert_eq!(
            t.column("b").unwrap(),
            &[Cell::Num(2.0), Cell::Text("x".into())]
        );
    }

    #[test]
    fn load_header_only() {
        let f = write_temp("a,b\n");
        let t = load_csv(f.path()).unwrap();
        assert_eq!(t.n_rows, 0);
    }

    #[test]
    fn load_rejects_duplicate_headers() {
        let f = write_temp("a,a\n1,2\n");
        assert!(load_csv(f.path()).is_err());
    }

    #[test]
    fn load_rejects_ragged_rows() {
        let f = write_temp("a,b\n1\n");
        assert!(load_csv(f.path()).is_err());
    }

    #[test]
    fn missing_markers() {
        for raw in ["", "NaN", "nan", "NA", "na"] {
            assert_eq!(Cell::parse(raw), Cell::Missing);
        }
    }

    #[test]
    fn clean_drops_empty_column_then_rows() {
        let f = write_temp("x,e,g,y\n1,,F,36.5\n2,,M,36.7\n,,F,36.9\n");
        let t = load_csv(f.path()).unwrap();
        let ds = clean(&t, &tiny_schema()).unwrap();
        // Column e is entirely empty: dropped, so only the third row (missing
        // x) is removed.
        assert_eq!(ds.n_rows(), 2);
        assert!(ds.numeric_column("e").is_none());
        assert_eq!(ds.numeric_column("x").unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn clean_requires_target() {
        let f = write_temp("x\n1\n");
        let t = load_csv(f.path()).unwrap();
        assert!(matches!(clean(&t, &tiny_schema()), Err(Error::Data(_))));
    }

    #[test]
    fn clean_errors_when_all_rows_dropped() {
        // Each row is missing a different cell, so neither column is
        // all-empty and every row gets dropped.
        let f = write_temp("x,y\n,36.5\n1,\n");
        let t = load_csv(f.path()).unwrap();
        assert!(clean(&t, &tiny_schema()).is_err());
    }

    #[test]
    fn clean_is_idempotent_through_roundtrip() {
        let f = write_temp("x,g,y\n1.25,F,36.5\n2.5,M,36.75\n,F,37\n");
        let t = load_csv(f.path()).unwrap();
        let ds = clean(&t, &tiny_schema()).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let f2 = write_temp(std::str::from_utf8(&buf).unwrap());
        let ds2 = clean(&load_csv(f2.path()).unwrap(), &tiny_schema()).unwrap();
        assert_eq!(ds, ds2);
        // And the emitted CSV itself round-trips byte-identically.
        let mut buf2 = Vec::new();
        write_csv(&ds2, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    fn four_round_ds() -> CleanDataset {
        CleanDataset {
            numeric: vec![
                ("s_r1".into(), vec![36.0, 36.5]),
                ("s_r2".into(), vec![36.4, 36.5]),
                ("s_r3".into(), vec![36.8, 36.5]),
                ("s_r4".into(), vec![37.2, 36.5]),
                ("other".into(), vec![1.0, 2.0]),
            ],
            categorical: vec![],
            target_name: "y".into(),
            target: vec![36.6, 36.9],
        }
    }

    #[test]
    fn average_rounds_means() {
        let ds = four_round_ds();
        let groups = vec![(
            "s".to_string(),
            vec!["s_r1".into(), "s_r2".into(), "s_r3".into(), "s_r4".into()],
        )];
        let out = average_rounds(&ds, &groups).unwrap();
        assert_eq!(out.n_rows(), 2);
        assert_eq!(out.numeric.len(), 2);
        let s = out.numeric_column("s").unwrap();
        assert!((s[0] - 36.6).abs() < 1e-12);
        assert!((s[1] - 36.5).abs() < 1e-12);
        assert_eq!(out.numeric_column("other").unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn average_rounds_rejects_overlap() {
        let ds = four_round_ds();
        let groups = vec![
            ("a".to_string(), vec!["s_r1".into(), "s_r2".into()]),
            ("b".to_string(), vec!["s_r2".into(), "s_r3".into()]),
        ];
        assert!(average_rounds(&ds, &groups).is_err());
    }

    fn n_row_ds(n: usize) -> CleanDataset {
        CleanDataset {
            numeric: vec![("x".into(), (0..n).map(|i| i as f64).collect())],
            categorical: vec![],
            target_name: "y".into(),
            target: (0..n).map(|i| 36.0 + i as f64 * 0.01).collect(),
        }
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = n_row_ds(10);
        let spec = SplitSpec::new(0.3, 0);
        let (tr, te) = split(&ds, &spec).unwrap();
        assert_eq!(tr.n_rows(), 7);
        assert_eq!(te.n_rows(), 3);
        let (tr2, te2) = split(&ds, &spec).unwrap();
        assert_eq!(tr, tr2);
        assert_eq!(te, te2);
        // Disjoint cover.
        let mut all: Vec<f64> = tr
            .numeric_column("x")
            .unwrap()
            .iter()
            .chain(te.numeric_column("x").unwrap())
            .cloned()
            .collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..10).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn split_benchmark_sizes() {
        let ds = n_row_ds(959);
        let (tr, te) = split(&ds, &SplitSpec::new(290.0 / 959.0, 42)).unwrap();
        assert_eq!(tr.n_rows(), 669);
        assert_eq!(te.n_rows(), 290);
    }

    #[test]
    fn split_rejects_tiny_input() {
        let ds = n_row_ds(1);
        assert!(split(&ds, &SplitSpec::new(0.5, 0)).is_err());
    }
}
