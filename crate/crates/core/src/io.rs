//! CSV ingestion with label remapping and jitter, canonical JSON/CSV reports,
//! edge lists, and exact permutation-oracle output.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Covariates, Dataset};
use crate::error::{Error, Result};
use crate::htest::{GraphCache, TestReport};
use crate::nngraph::KnnBackend;
use crate::numerics::RandomStream;
use crate::paths::PathMethod;
use crate::sim::PowerTable;
use crate::stats::{permutation_null, NullMode, NullStatistic, StatKind};

/// Stream id under the run seed for jitter noise; column c uses substream c.
const JITTER_STREAM: u64 = 0x717E;

/// Jitter relative to the column range when no scale is given.
pub const DEFAULT_JITTER_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JitterSpec {
    pub column: String,
    /// Width of the uniform noise; `None` means 1e-6 of the column's range.
    pub scale: Option<f64>,
}

impl std::str::FromStr for JitterSpec {
    type Err = Error;

    /// `name` or `name=scale`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('=') {
            None => Ok(JitterSpec {
                column: s.to_string(),
                scale: None,
            }),
            Some((c, v)) => {
                let scale = v
                    .parse()
                    .map_err(|_| Error::Config(format!("bad jitter scale in `{s}`")))?;
                Ok(JitterSpec {
                    column: c.to_string(),
                    scale: Some(scale),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub group_column: String,
    /// Empty means every column other than the group column.
    pub covariate_columns: Vec<String>,
    pub jitter: Vec<JitterSpec>,
    pub delimiter: u8,
}

impl CsvSchema {
    pub fn new(group_column: impl Into<String>) -> Self {
        Self {
            group_column: group_column.into(),
            covariate_columns: Vec::new(),
            jitter: Vec::new(),
            delimiter: b',',
        }
    }

    fn validate(&self) -> Result<()> {
        if self.covariate_columns.contains(&self.group_column) {
            return Err(Error::Config(format!(
                "`{}` is both the group column and a covariate",
                self.group_column
            )));
        }
        for j in &self.jitter {
            if let Some(s) = j.scale {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::Config(format!(
                        "jitter scale for `{}` must be positive, got {s}",
                        j.column
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A dataset read from CSV, with the original label of every group.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    /// `label_mapping[g]` is the file's label for group g + 1.
    pub label_mapping: Vec<String>,
    pub covariate_names: Vec<String>,
}

pub fn read_csv_dataset(
    path: impl AsRef<Path>,
    schema: &CsvSchema,
    seed: u64,
) -> Result<LoadedDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, schema, seed)
}

/// Labels are numbered by first appearance; jitter columns get uniform noise
/// on (−scale/2, scale/2) from a stream keyed by `seed` and the column position.
pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema, seed: u64) -> Result<LoadedDataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let group_idx = find(&schema.group_column)?;
    let covariate_names: Vec<String> = if schema.covariate_columns.is_empty() {
        headers
            .iter()
            .filter(|h| **h != schema.group_column)
            .cloned()
            .collect()
    } else {
        schema.covariate_columns.clone()
    };
    if covariate_names.is_empty() {
        return Err(Error::Config("no covariate columns".into()));
    }
    let cov_idx = covariate_names
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;
    let jitter_cols = schema
        .jitter
        .iter()
        .map(|j| {
            covariate_names
                .iter()
                .position(|c| *c == j.column)
                .map(|p| (p, j.scale))
                .ok_or_else(|| Error::MissingColumn(j.column.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut mapping: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups = Vec::new();
    let mut values = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based data row, header excluded
        let row = r + 1;
        let label = record.get(group_idx).unwrap_or("").to_string();
        let next = index.len();
        let g = *index.entry(label.clone()).or_insert_with(|| {
            mapping.push(label);
            next
        });
        groups.push(g);
        for (&c, name) in cov_idx.iter().zip(&covariate_names) {
            let cell = record.get(c).unwrap_or("");
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row,
                    column: name.clone(),
                    value: cell.to_string(),
                })?;
            values.push(v);
        }
    }
    if mapping.len() < 2 {
        return Err(Error::Labels(format!(
            "column `{}` has {} distinct label(s); at least 2 groups are needed",
            schema.group_column,
            mapping.len()
        )));
    }
    let n = groups.len();
    let d = covariate_names.len();
    for &(col, scale) in &jitter_cols {
        let column = (0..n).map(|i| values[i * d + col]);
        let range =
            column.clone().fold(f64::NEG_INFINITY, f64::max) - column.fold(f64::INFINITY, f64::min);
        let width = scale.unwrap_or(DEFAULT_JITTER_FRACTION * range);
        if width == 0.0 {
            continue;
        }
        let mut rng = RandomStream::new(seed, JITTER_STREAM).substream(col as u64);
        for i in 0..n {
            values[i * d + col] += (rng.uniform() - 0.5) * width;
        }
    }
    let dataset = Dataset::from_groups(Covariates::new(values, n, d)?, groups)?;
    Ok(LoadedDataset {
        dataset,
        label_mapping: mapping,
        covariate_names,
    })
}

/// Pretty JSON with object keys sorted and shortest round-trip floats.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // serde_json::Value keeps maps in a BTreeMap, which sorts the keys
    let tree = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&tree)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::Config(format!("unknown format `{s}` (json, csv)"))),
        }
    }
}

/// Anything the CLI writes as a report.
#[derive(Debug, Clone, Copy)]
pub enum Report<'a> {
    Test(&'a TestReport),
    Power(&'a PowerTable),
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One-row CSV of a test report; vectors are space-separated.
fn test_report_csv<W: Write>(r: &TestReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "statistic_kind",
        "test_form",
        "statistic",
        "dof",
        "p_value",
        "mc_se",
        "moment_source",
        "components",
        "null_mean",
        "standardized",
        "continuity_correction",
        "graph",
        "k",
        "n",
        "group_sizes",
        "seed",
        "dropped_unit",
        "metric",
    ])?;
    let m = &r.graph_meta;
    w.write_record([
        r.method.name().to_string(),
        r.statistic_kind.name().to_string(),
        r.test_form.name().to_string(),
        r.statistic.to_string(),
        opt(r.dof),
        r.p_value.to_string(),
        opt(r.mc_se),
        serde_json::to_value(r.moment_source)?
            .as_str()
            .unwrap_or_default()
            .to_string(),
        join(&r.components),
        join(&r.null_mean),
        r.standardized.as_deref().map(join).unwrap_or_default(),
        r.continuity_correction.to_string(),
        m.graph.clone(),
        opt(m.k),
        m.n.to_string(),
        m.group_sizes
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(" "),
        m.seed.to_string(),
        opt(m.dropped_unit),
        m.metric.name().to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn write_report_to<W: Write>(
    report: Report<'_>,
    format: ReportFormat,
    mut out: W,
) -> Result<()> {
    match (report, format) {
        (Report::Test(r), ReportFormat::Json) => out.write_all(to_canonical_json(r)?.as_bytes())?,
        (Report::Power(t), ReportFormat::Json) => {
            out.write_all(to_canonical_json(t)?.as_bytes())?
        }
        (Report::Test(r), ReportFormat::Csv) => test_report_csv(r, out)?,
        (Report::Power(t), ReportFormat::Csv) => t.write_csv(out)?,
    }
    Ok(())
}

pub fn write_report(
    report: Report<'_>,
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    write_report_to(report, format, &mut out)?;
    out.flush().map_err(io_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Knn,
    Nbm,
    Path,
}

impl std::str::FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knn" => Ok(GraphKind::Knn),
            "nbm" | "matching" => Ok(GraphKind::Nbm),
            "path" => Ok(GraphKind::Path),
            _ => Err(Error::Config(format!(
                "unknown graph `{s}` (knn, nbm, path)"
            ))),
        }
    }
}

/// Weighted edges (0-based row indices, distance) of the chosen graph: kNN
/// arcs unit → neighbour, matched pairs, or consecutive path units.
pub fn graph_edges(
    cache: &mut GraphCache<'_>,
    kind: GraphKind,
    k: usize,
    backend: KnnBackend,
    path_method: PathMethod,
) -> Result<Vec<(usize, usize, f64)>> {
    let pairs: Vec<(usize, usize)> = match kind {
        GraphKind::Knn => cache.knn(k, backend)?.edges().collect(),
        GraphKind::Nbm => cache.matching()?.pairs().to_vec(),
        GraphKind::Path => cache.path(path_method)?.edges().collect(),
    };
    let d = cache.distances()?;
    Ok(pairs
        .into_iter()
        .map(|(i, j)| (i, j, d.get(i, j)))
        .collect())
}

/// Edge list CSV with header `src,dst,weight`.
pub fn write_edge_list<W: Write>(edges: &[(usize, usize, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["src", "dst", "weight"])?;
    for &(i, j, d) in edges {
        w.write_record([i.to_string(), j.to_string(), d.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Exact permutation moments of a statistic on a fixed graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub statistic_kind: StatKind,
    pub group_sizes: Vec<usize>,
    pub labelings: usize,
    pub observed: Vec<f64>,
    pub mean: Vec<f64>,
    /// Row-major G×G (1×1 for the rank statistic) population covariance.
    pub covariance: Vec<Vec<f64>>,
}

pub fn permutation_oracle(statistic: NullStatistic<'_>, dataset: &Dataset) -> Result<OracleReport> {
    let sizes = dataset.group_sizes().to_vec();
    let null = permutation_null(
        statistic,
        &sizes,
        NullMode::Exhaustive,
        &RandomStream::new(0, 0),
    )?;
    let cov = &null.moments.covariance;
    Ok(OracleReport {
        statistic_kind: statistic.kind(),
        observed: statistic.evaluate(dataset.groups(), dataset.num_groups())?,
        group_sizes: sizes,
        labelings: null.draws,
        mean: null.moments.mean.iter().copied().collect(),
        covariance: (0..cov.nrows())
            .map(|i| cov.row(i).iter().copied().collect())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::htest::{balance_test, BalanceConfig, Method, TestForm};

    const SIX: &str =
        "id,grp,x,y\n1,A,0.5,1\n2,A,1.5,2\n3,B,2.5,0\n4,C,3.5,1\n5,C,4.5,3\n6,C,5.5,2\n";

    fn schema() -> CsvSchema {
        CsvSchema {
            covariate_columns: vec!["x".into(), "y".into()],
            ..CsvSchema::new("grp")
        }
    }

    #[test]
    fn labels_follow_first_appearance() {
        let l = read_csv(SIX.as_bytes(), &schema(), 0).unwrap();
        assert_eq!(l.dataset.num_groups(), 3);
        assert_eq!(l.dataset.group_sizes(), &[2, 1, 3]);
        assert_eq!(l.label_mapping, ["A", "B", "C"]);
        assert_eq!(l.dataset.covariates().row(3), &[3.5, 1.0]);
        let reordered = "grp,x\nz,1\na,2\nz,3\n";
        let l = read_csv(reordered.as_bytes(), &CsvSchema::new("grp"), 0).unwrap();
        assert_eq!(l.label_mapping, ["z", "a"]);
        assert_eq!(l.dataset.labels(), vec![1, 2, 1]);
    }

    #[test]
    fn default_covariates_and_delimiter() {
        let text = SIX.replace(',', ";");
        let s = CsvSchema {
            delimiter: b';',
            ..CsvSchema::new("grp")
        };
        let l = read_csv(text.as_bytes(), &s, 0).unwrap();
        assert_eq!(l.covariate_names, ["id", "x", "y"]);
        assert_eq!(l.dataset.dim(), 3);
    }

    #[test]
    fn schema_errors() {
        let r = read_csv(SIX.as_bytes(), &CsvSchema::new("arm"), 0);
        assert!(matches!(r, Err(Error::MissingColumn(ref c)) if c == "arm"));
        let bad = "grp,x\nA,1\nB,oops\n";
        match read_csv(bad.as_bytes(), &CsvSchema::new("grp"), 0) {
            Err(Error::Parse { row, column, value }) => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "x", "oops"))
            }
            other => panic!("{other:?}"),
        }
        let one = "grp,x\nA,1\nA,2\n";
        assert!(matches!(
            read_csv(one.as_bytes(), &CsvSchema::new("grp"), 0),
            Err(Error::Labels(_))
        ));
        let mut s = schema();
        s.covariate_columns.push("grp".into());
        assert!(read_csv(SIX.as_bytes(), &s, 0).is_err());
        let mut s = schema();
        s.jitter = vec!["x=0".parse().unwrap()];
        assert!(read_csv(SIX.as_bytes(), &s, 0).is_err());
    }

    #[test]
    fn jitter() {
        let plain = read_csv(SIX.as_bytes(), &schema(), 7).unwrap();
        let mut s = schema();
        s.jitter = vec!["y".parse().unwrap()];
        let a = read_csv(SIX.as_bytes(), &s, 7).unwrap();
        let b = read_csv(SIX.as_bytes(), &s, 7).unwrap();
        assert_eq!(a.dataset.covariates(), b.dataset.covariates());
        for i in 0..6 {
            let (p, q) = (
                plain.dataset.covariates().row(i),
                a.dataset.covariates().row(i),
            );
            assert_eq!(p[0], q[0]);
            // range of y is 3, so noise stays within 1.5e-6
            assert!((p[1] - q[1]).abs() < 1.5e-6 && p[1] != q[1]);
        }
        // a constant column has zero range, so the default jitter is a no-op
        let flat = "grp,x\nA,1\nA,1\nB,1\n";
        let mut s = CsvSchema::new("grp");
        let before = read_csv(flat.as_bytes(), &s, 1).unwrap();
        s.jitter = vec!["x".parse().unwrap()];
        let after = read_csv(flat.as_bytes(), &s, 1).unwrap();
        assert_eq!(before.dataset.covariates(), after.dataset.covariates());
        let mut s = schema();
        s.jitter = vec!["x=0.5".parse().unwrap()];
        let wide = read_csv(SIX.as_bytes(), &s, 7).unwrap();
        for i in 0..6 {
            assert!(
                (wide.dataset.covariates().row(i)[0] - plain.dataset.covariates().row(i)[0]).abs()
                    < 0.25
            );
        }
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        // kNN moments need every group to have at least 2 units
        let text = format!("{SIX}7,B,0.1,0.4\n8,A,2.2,2.8\n");
        let l = read_csv(text.as_bytes(), &schema(), 0).unwrap();
        let cfg = BalanceConfig { n_mc: 1000, ..BalanceConfig::default() };
        for method in Method::ALL {
            let mut report = balance_test(&l.dataset, method, TestForm::Wald, &cfg).unwrap();
            report.label_mapping = Some(l.label_mapping.clone());
            let json = to_canonical_json(&report).unwrap();
            let back: TestReport = serde_json::from_str(&json).unwrap();
            assert_eq!(back, report);
            assert_eq!(to_canonical_json(&back).unwrap(), json);
            for key in [
                "\"graph_meta\"",
                "\"seed\"",
                "\"moment_source\"",
                "\"mc_se\"",
                "\"p_value\"",
            ] {
                assert!(json.contains(key), "{key} missing");
            }
        }
    }

    #[test]
    fn unit_p_value_is_exact() {
        #[derive(Serialize)]
        struct P {
            p_value: f64,
        }
        assert_eq!(
            to_canonical_json(&P { p_value: 1.0 }).unwrap(),
            "{\n  \"p_value\": 1.0\n}\n"
        );
        let v: f64 = serde_json::from_str("0.30000000000000004").unwrap();
        assert_eq!(serde_json::to_string(&v).unwrap(), "0.30000000000000004");
    }

    #[test]
    fn report_csv_and_edge_list() {
        let l = read_csv(SIX.as_bytes(), &schema(), 0).unwrap();
        let report = balance_test(
            &l.dataset,
            Method::Runs,
            TestForm::Wald,
            &BalanceConfig::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_report_to(Report::Test(&report), ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("method,statistic_kind,test_form,"));

        let mut cache = GraphCache::new(&l.dataset, Default::default());
        let edges = graph_edges(
            &mut cache,
            GraphKind::Nbm,
            1,
            KnnBackend::KdTree,
            PathMethod::GreedyEdge,
        )
        .unwrap();
        assert_eq!(edges.len(), 3);
        let path = graph_edges(
            &mut cache,
            GraphKind::Path,
            1,
            KnnBackend::KdTree,
            PathMethod::GreedyEdge,
        )
        .unwrap();
        assert_eq!(path.len(), 5);
        let knn = graph_edges(
            &mut cache,
            GraphKind::Knn,
            2,
            KnnBackend::KdTree,
            PathMethod::GreedyEdge,
        )
        .unwrap();
        assert_eq!(knn.len(), 12);
        let mut buf = Vec::new();
        write_edge_list(&edges, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("src,dst,weight\n"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn oracle_matches_closed_form_runs_moments() {
        let l = read_csv(SIX.as_bytes(), &schema(), 0).unwrap();
        let mut cache = GraphCache::new(&l.dataset, Default::default());
        let path = cache.path(PathMethod::GreedyEdge).unwrap().clone();
        let o = permutation_oracle(NullStatistic::Runs(&path), &l.dataset).unwrap();
        assert_eq!(o.labelings, 60);
        let closed = crate::stats::run_moments(6, &[2, 1, 3]).unwrap();
        for g in 0..3 {
            assert!((o.mean[g] - closed.mean[g]).abs() < 1e-12);
            for h in 0..3 {
                assert!((o.covariance[g][h] - closed.covariance[(g, h)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unwritable_path() {
        let t = PowerTable::default();
        let r = write_report(
            Report::Power(&t),
            ReportFormat::Csv,
            "/nonexistent-dir/x.csv",
        );
        assert!(matches!(r, Err(Error::Io { .. })));
    }
}
