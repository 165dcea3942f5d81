//! Multivariate series, group partitions, forecast windows and per-variable
//! standardization.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, PartitionViolation, Result};

/// A `T × N` matrix of observations, rows are time steps and columns are
/// variables. Stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateSeries {
    values: Vec<f64>,
    len: usize,
    names: Vec<String>,
    dt: String,
}

impl MultivariateSeries {
    /// Builds a series from row-major `values` of shape `len × names.len()`.
    pub fn new(values: Vec<f64>, names: Vec<String>) -> Result<Self> {
        let n = names.len();
        if n < 2 {
            return Err(Error::InvalidSeries(format!(
                "need at least 2 variables, got {n}"
            )));
        }
        if values.is_empty() || !values.len().is_multiple_of(n) {
            return Err(Error::InvalidSeries(format!(
                "{} values cannot form rows of {n} variables",
                values.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidSeries(format!(
                    "duplicate variable name {name:?}"
                )));
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value at row {}, variable {:?}",
                pos / n,
                names[pos % n]
            )));
        }
        let len = values.len() / n;
        Ok(Self {
            values,
            len,
            names,
            dt: String::new(),
        })
    }

    /// Builds a series from rows, naming the variables `Z1..ZN`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::RaggedRow {
                row: bad + 1,
                expected: n,
                found: rows[bad].len(),
            });
        }
        Self::new(rows.concat(), default_names(n))
    }

    /// Builds a series from columns, naming the variables `Z1..ZN`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.len();
        let len = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidSeries("columns differ in length".into()));
        }
        let mut values = Vec::with_capacity(n * len);
        for t in 0..len {
            values.extend(columns.iter().map(|c| c[t]));
        }
        Self::new(values, default_names(n))
    }

    pub fn with_dt(mut self, dt: impl Into<String>) -> Self {
        self.dt = dt.into();
        self
    }

    /// Number of time steps `T`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of variables `N`.
    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dt(&self) -> &str {
        &self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, t: usize, j: usize) -> f64 {
        self.values[t * self.n_vars() + j]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let n = self.n_vars();
        &self.values[t * n..(t + 1) * n]
    }

    /// Rows `range` as a contiguous row-major slice.
    pub fn rows(&self, range: Range<usize>) -> &[f64] {
        let n = self.n_vars();
        &self.values[range.start * n..range.end * n]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.len).map(|t| self.get(t, j)).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Replaces the values, keeping names and metadata. `values` must have the
    /// same shape.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::Shape(format!(
                "expected {} values, got {}",
                self.values.len(),
                values.len()
            )));
        }
        let mut out = Self::new(values, self.names.clone())?;
        out.dt.clone_from(&self.dt);
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names)?;
        for t in 0..self.len {
            w.write_record(self.row(t).iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("Z{i}")).collect()
}

/// Reads a comma-separated file, one row per time step and one column per
/// variable. Without a header the variables are named `Z1..ZN`.
pub fn load_csv(path: impl AsRef<Path>, header: bool) -> Result<MultivariateSeries> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(Error::EmptyFile { path: path.into() });
    }
    parse_csv(bytes.as_slice(), header)
}

/// Parses CSV from any reader. Row numbers in errors are 1-based lines of
/// the input, counting the header.
pub fn parse_csv<R: Read>(reader: R, header: bool) -> Result<MultivariateSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut names = None;
    let mut width = None;
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow {
                row,
                expected,
                found: record.len(),
            });
        }
        if header && names.is_none() {
            names = Some(record.iter().map(str::to_owned).collect::<Vec<_>>());
            continue;
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::BadCell {
                row,
                col: c + 1,
                value: cell.to_owned(),
            })?;
            values.push(v);
        }
    }
    let Some(width) = width else {
        return Err(Error::EmptyFile {
            path: "<input>".into(),
        });
    };
    if values.is_empty() {
        return Err(Error::InvalidSeries("no data rows".into()));
    }
    MultivariateSeries::new(values, names.unwrap_or_else(|| default_names(width)))
}

/// A named set of variable indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub name: String,
    pub members: Vec<usize>,
}

/// Disjoint, covering assignment of variables to groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupPartition {
    groups: Vec<Group>,
}

impl GroupPartition {
    /// Builds a partition and checks it against `n_vars`.
    pub fn new(groups: Vec<Group>, n_vars: usize) -> Result<Self> {
        let p = Self { groups };
        validate_partition(&p, n_vars)?;
        Ok(p)
    }

    /// Unchecked constructor; pair with [`validate_partition`].
    pub fn from_groups(groups: Vec<Group>) -> Self {
        Self { groups }
    }

    /// Consecutive groups `G1, G2, ...` of the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let mut start = 0;
        let groups = sizes
            .iter()
            .enumerate()
            .map(|(i, &size)| {
                let g = Group {
                    name: format!("G{}", i + 1),
                    members: (start..start + size).collect(),
                };
                start += size;
                g
            })
            .collect();
        Self::new(groups, start)
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn members(&self, g: usize) -> &[usize] {
        &self.groups[g].members
    }

    pub fn name(&self, g: usize) -> &str {
        &self.groups[g].name
    }

    pub fn n_vars(&self) -> usize {
        self.groups.iter().map(|g| g.members.len()).sum()
    }

    /// Group index of every variable.
    pub fn group_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_vars()];
        for (g, group) in self.groups.iter().enumerate() {
            for &v in &group.members {
                out[v] = g;
            }
        }
        out
    }
}

/// Returns the first violated partition invariant, checked in the order:
/// group count, empty group, duplicate name, index range, overlap, gap.
pub fn validate_partition(
    partition: &GroupPartition,
    n_vars: usize,
) -> Result<(), PartitionViolation> {
    let groups = partition.groups();
    if groups.len() < 2 {
        return Err(PartitionViolation::TooFewGroups(groups.len()));
    }
    let mut names = HashSet::new();
    for g in groups {
        if g.members.is_empty() {
            return Err(PartitionViolation::EmptyGroup(g.name.clone()));
        }
        if !names.insert(g.name.as_str()) {
            return Err(PartitionViolation::DuplicateName(g.name.clone()));
        }
    }
    let mut seen = vec![false; n_vars];
    for g in groups {
        for &index in &g.members {
            if index >= n_vars {
                return Err(PartitionViolation::OutOfRange { index, n_vars });
            }
            if std::mem::replace(&mut seen[index], true) {
                return Err(PartitionViolation::Overlap(index));
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(gap) => Err(PartitionViolation::Gap(gap)),
        None => Ok(()),
    }
}

/// One forecast window: context rows `t0 - context .. t0`, target rows
/// `t0 .. t0 + horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub t0: usize,
    pub context: usize,
    pub horizon: usize,
}

impl Window {
    pub fn context_range(&self) -> Range<usize> {
        self.t0 - self.context..self.t0
    }

    pub fn target_range(&self) -> Range<usize> {
        self.t0..self.t0 + self.horizon
    }

    /// Context and target rows together.
    pub fn full_range(&self) -> Range<usize> {
        self.t0 - self.context..self.t0 + self.horizon
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSet {
    windows: Vec<Window>,
    pub context: usize,
    pub horizon: usize,
    pub stride: usize,
}

impl WindowSet {
    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Window> {
        self.windows.iter()
    }
}

/// Enumerates windows left to right; the first target starts at `context`,
/// and a trailing partial window is dropped.
pub fn make_windows(
    series_length: usize,
    context: usize,
    horizon: usize,
    stride: usize,
) -> Result<WindowSet> {
    if context == 0 || horizon == 0 || stride == 0 {
        return Err(Error::Config(
            "context, horizon and stride must all be at least 1".into(),
        ));
    }
    if context + horizon > series_length {
        return Err(Error::WindowTooLong {
            length: series_length,
            context,
            horizon,
        });
    }
    let windows = (context..=series_length - horizon)
        .step_by(stride)
        .map(|t0| Window {
            t0,
            context,
            horizon,
        })
        .collect();
    Ok(WindowSet {
        windows,
        context,
        horizon,
        stride,
    })
}

/// Per-variable affine map to zero mean and unit standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

const MIN_STD: f64 = 1e-12;

impl Standardizer {
    /// Estimates mean and (population) standard deviation over `fit_range`.
    pub fn fit(series: &MultivariateSeries, fit_range: Range<usize>) -> Result<Self> {
        if fit_range.is_empty() || fit_range.end > series.len() {
            return Err(Error::Config(format!(
                "fit range {fit_range:?} is empty or exceeds series length {}",
                series.len()
            )));
        }
        let count = fit_range.len() as f64;
        let n = series.n_vars();
        let mut mean = vec![0.0; n];
        let mut std = vec![0.0; n];
        for j in 0..n {
            let m = fit_range.clone().map(|t| series.get(t, j)).sum::<f64>() / count;
            let var = fit_range
                .clone()
                .map(|t| (series.get(t, j) - m).powi(2))
                .sum::<f64>()
                / count;
            let s = var.sqrt();
            if !(s >= MIN_STD) {
                return Err(Error::ConstantVariable {
                    name: series.names()[j].clone(),
                });
            }
            mean[j] = m;
            std[j] = s;
        }
        Ok(Self { mean, std })
    }

    pub fn transform(&self, series: &MultivariateSeries) -> Result<MultivariateSeries> {
        self.apply(series, |v, m, s| (v - m) / s)
    }

    pub fn inverse_transform(&self, series: &MultivariateSeries) -> Result<MultivariateSeries> {
        self.apply(series, |v, m, s| v * s + m)
    }

    fn apply(
        &self,
        series: &MultivariateSeries,
        f: impl Fn(f64, f64, f64) -> f64,
    ) -> Result<MultivariateSeries> {
        let n = series.n_vars();
        if n != self.mean.len() {
            return Err(Error::Shape(format!(
                "standardizer has {} variables, series has {n}",
                self.mean.len()
            )));
        }
        let values = series
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| f(v, self.mean[i % n], self.std[i % n]))
            .collect();
        series.with_values(values)
    }
}

/// Fits a [`Standardizer`] on `fit_range` and applies it to the whole series.
pub fn standardize(
    series: &MultivariateSeries,
    fit_range: Range<usize>,
) -> Result<(MultivariateSeries, Standardizer)> {
    let st = Standardizer::fit(series, fit_range)?;
    Ok((st.transform(series)?, st))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_without_header() {
        let s = parse_csv("1,2\n3,4\n5,6".as_bytes(), false).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.n_vars(), 2);
        assert_eq!(s.values(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(s.names(), &["Z1", "Z2"]);
    }

    #[test]
    fn csv_with_header() {
        let s = parse_csv("a,b\n1,2\n".as_bytes(), true).unwrap();
        assert_eq!(s.names(), &["a", "b"]);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn csv_bad_cell_reports_coordinates() {
        match parse_csv("1,x".as_bytes(), false) {
            Err(Error::BadCell { row: 1, col: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_ragged_row() {
        match parse_csv("1,2\n3\n".as_bytes(), false) {
            Err(Error::RaggedRow {
                row: 2,
                expected: 2,
                found: 1,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        std::fs::write(&path, "").unwrap();
        assert!(matches!(
            load_csv(&path, false),
            Err(Error::EmptyFile { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = MultivariateSeries::from_rows(&[vec![0.1, -2.5e-7], vec![1.0 / 3.0, 4.0]]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = parse_csv(buf.as_slice(), true).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn series_rejects_non_finite_and_single_variable() {
        assert!(MultivariateSeries::from_rows(&[vec![1.0, f64::NAN]]).is_err());
        assert!(MultivariateSeries::from_rows(&[vec![1.0]]).is_err());
    }

    #[test]
    fn standardize_two_points() {
        let s = MultivariateSeries::from_columns(&[vec![0.0, 2.0], vec![1.0, 5.0]]).unwrap();
        let (z, st) = standardize(&s, 0..2).unwrap();
        assert_eq!(st.mean[0], 1.0);
        assert_eq!(st.std[0], 1.0);
        assert_eq!(z.column(0), vec![-1.0, 1.0]);
    }

    #[test]
    fn standardize_is_idempotent_on_normalized_input() {
        let s = MultivariateSeries::from_columns(&[
            vec![-1.0, 1.0, -1.0, 1.0],
            vec![1.0, -1.0, 1.0, -1.0],
        ])
        .unwrap();
        let (z, _) = standardize(&s, 0..4).unwrap();
        for (a, b) in z.values().iter().zip(s.values()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn standardize_rejects_constant_column() {
        let s =
            MultivariateSeries::from_columns(&[vec![5.0, 5.0, 5.0], vec![1.0, 2.0, 3.0]]).unwrap();
        match standardize(&s, 0..3) {
            Err(Error::ConstantVariable { name }) => assert_eq!(name, "Z1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn windows_at_stride_two() {
        let w = make_windows(10, 4, 2, 2).unwrap();
        let starts: Vec<_> = w.iter().map(|w| w.t0).collect();
        assert_eq!(starts, vec![4, 6, 8]);
    }

    #[test]
    fn windows_single_fit() {
        let w = make_windows(6, 4, 2, 1).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.windows()[0].t0, 4);
    }

    #[test]
    fn windows_too_long() {
        assert!(matches!(
            make_windows(5, 4, 2, 1),
            Err(Error::WindowTooLong { .. })
        ));
    }

    fn partition(groups: &[(&str, &[usize])]) -> GroupPartition {
        GroupPartition::from_groups(
            groups
                .iter()
                .map(|(n, m)| Group {
                    name: n.to_string(),
                    members: m.to_vec(),
                })
                .collect(),
        )
    }

    #[test]
    fn partition_checks() {
        assert_eq!(
            validate_partition(&partition(&[("A", &[0, 1]), ("B", &[2, 3])]), 4),
            Ok(())
        );
        assert_eq!(
            validate_partition(&partition(&[("A", &[0, 1]), ("B", &[1, 2])]), 3),
            Err(PartitionViolation::Overlap(1))
        );
        assert_eq!(
            validate_partition(&partition(&[("A", &[0]), ("B", &[2])]), 3),
            Err(PartitionViolation::Gap(1))
        );
        assert_eq!(
            validate_partition(&partition(&[("A", &[0, 1])]), 2),
            Err(PartitionViolation::TooFewGroups(1))
        );
        assert_eq!(
            validate_partition(&partition(&[("A", &[0, 1]), ("B", &[])]), 2),
            Err(PartitionViolation::EmptyGroup("B".into()))
        );
    }

    proptest! {
        #[test]
        fn standardize_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 2..40)) {
            let s = MultivariateSeries::from_rows(&rows).unwrap();
            if let Ok((z, st)) = standardize(&s, 0..s.len()) {
                let back = st.inverse_transform(&z).unwrap();
                for (a, b) in back.values().iter().zip(s.values()) {
                    prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(st.std.iter().cloned().fold(0.0, f64::max)));
                }
            }
        }

        #[test]
        fn windows_in_bounds_and_adjacent(len in 2usize..300, context in 1usize..40, horizon in 1usize..20, stride in 1usize..15) {
            prop_assume!(context + horizon <= len);
            let ws = make_windows(len, context, horizon, stride).unwrap();
            prop_assert_eq!(ws.len(), (len - context - horizon) / stride + 1);
            for w in ws.iter() {
                prop_assert_eq!(w.context_range().end, w.target_range().start);
                prop_assert_eq!(w.context_range().len(), context);
                prop_assert!(w.target_range().end <= len);
            }
        }

        #[test]
        fn partition_valid_iff_sorted_indices_are_identity(
            assign in prop::collection::vec(prop::collection::vec(0usize..8, 0..5), 2..4),
            n in 1usize..8,
        ) {
            let p = GroupPartition::from_groups(assign.iter().enumerate().map(|(i, m)| Group {
                name: format!("G{i}"),
                members: m.clone(),
            }).collect());
            let mut all: Vec<usize> = assign.concat();
            all.sort_unstable();
            let identity = all == (0..n).collect::<Vec<_>>();
            let non_empty = assign.iter().all(|m| !m.is_empty());
            prop_assert_eq!(validate_partition(&p, n).is_ok(), identity && non_empty);
        }
    }
}
