//! The tabular feature container and its CSV form.
//!
//! On disk a table is a CSV whose first column is `id`, whose last column
//! is `label` when labels are present, and whose middle columns are the
//! features. Floats are written with shortest round-trip formatting, so a
//! parse-write cycle is byte-stable.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::FeatError;
use crate::geodata::GeoError;

/// A feature matrix keyed by school id.
///
/// Invariants: every column has one value per id, column names are unique
/// and never `id`/`label`, all values are finite, and the label vector
/// (when present) matches the id count with values in {0, 1} where 1 means
/// connected.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    ids: Vec<String>,
    columns: Vec<(String, Vec<f64>)>,
    labels: Option<Vec<u8>>,
}

impl FeatureTable {
    pub fn new(
        ids: Vec<String>,
        columns: Vec<(String, Vec<f64>)>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self, FeatError> {
        for (i, (name, _)) in columns.iter().enumerate() {
            if name == "id" || name == "label" || columns[..i].iter().any(|(n, _)| n == name) {
                return Err(FeatError::DuplicateColumn(name.clone()));
            }
        }
        for (name, values) in &columns {
            if values.len() != ids.len() {
                return Err(FeatError::ColumnLength {
                    column: name.clone(),
                    expected: ids.len(),
                    found: values.len(),
                });
            }
            if let Some(row) = values.iter().position(|v| !v.is_finite()) {
                return Err(FeatError::NonFinite {
                    column: name.clone(),
                    row,
                });
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != ids.len() {
                return Err(FeatError::ColumnLength {
                    column: "label".to_string(),
                    expected: ids.len(),
                    found: labels.len(),
                });
            }
            debug_assert!(labels.iter().all(|&l| l <= 1), "labels are binary");
        }
        Ok(Self { ids, columns, labels })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn columns(&self) -> &[(String, Vec<f64>)] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// Feature values of row `i`, in column order.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|(_, v)| v[i]).collect()
    }

    /// New table holding the given rows, in the given order. Indices out
    /// of range panic; callers produce them from this table's length.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureTable {
        FeatureTable {
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            columns: self
                .columns
                .iter()
                .map(|(n, v)| (n.clone(), idx.iter().map(|&i| v[i]).collect()))
                .collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| idx.iter().map(|&i| l[i]).collect()),
        }
    }

    /// New table keeping only the named columns, in the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<FeatureTable, FeatError> {
        let mut columns = Vec::with_capacity(names.len());
        for name in names {
            let values = self
                .column(name)
                .ok_or_else(|| FeatError::UnknownColumn(name.clone()))?;
            columns.push((name.clone(), values.to_vec()));
        }
        FeatureTable::new(self.ids.clone(), columns, self.labels.clone())
    }

    /// Appends one column, enforcing the table invariants.
    pub fn add_column(&mut self, name: String, values: Vec<f64>) -> Result<(), FeatError> {
        let mut columns = std::mem::take(&mut self.columns);
        columns.push((name, values));
        *self = FeatureTable::new(std::mem::take(&mut self.ids), columns, self.labels.take())?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = vec!["id"];
        header.extend(self.columns.iter().map(|(n, _)| n.as_str()));
        if self.labels.is_some() {
            header.push("label");
        }
        writer.write_record(&header).expect("csv write to memory");
        for i in 0..self.ids.len() {
            let mut row = vec![self.ids[i].clone()];
            row.extend(self.columns.iter().map(|(_, v)| format!("{}", v[i])));
            if let Some(labels) = &self.labels {
                row.push(if labels[i] == 1 { "yes" } else { "no" }.to_string());
            }
            writer.write_record(&row).expect("csv write to memory");
        }
        String::from_utf8(writer.into_inner().expect("csv flush")).expect("csv output is utf8")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), FeatError> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|e| GeoError::io(path.display().to_string(), e).into())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<FeatureTable, FeatError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| GeoError::io(path.display().to_string(), e))?;
        Self::from_csv_str(&text, &path.display().to_string())
    }

    pub fn from_csv_str(text: &str, origin: &str) -> Result<FeatureTable, FeatError> {
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| GeoError::parse(origin, 1, e.to_string()))?
            .clone();
        if headers.get(0) != Some("id") {
            return Err(GeoError::MissingColumn("id".to_string()).into());
        }
        let labeled = headers.iter().last() == Some("label") && headers.len() > 1;
        let feature_names: Vec<String> = headers
            .iter()
            .skip(1)
            .take(headers.len() - 1 - usize::from(labeled))
            .map(str::to_string)
            .collect();

        let mut ids = Vec::new();
        let mut labels: Vec<u8> = Vec::new();
        let mut columns: Vec<(String, Vec<f64>)> =
            feature_names.into_iter().map(|n| (n, Vec::new())).collect();
        for (idx, record) in reader.records().enumerate() {
            let line = idx + 2;
            let record = record.map_err(|e| GeoError::parse(origin, line, e.to_string()))?;
            ids.push(record.get(0).unwrap_or("").to_string());
            for (j, (_, values)) in columns.iter_mut().enumerate() {
                let raw = record.get(j + 1).unwrap_or("");
                let v: f64 = raw
                    .parse()
                    .map_err(|_| GeoError::parse(origin, line, format!("bad numeric value '{raw}'")))?;
                values.push(v);
            }
            if labeled {
                match record.get(headers.len() - 1).unwrap_or("") {
                    "yes" => labels.push(1),
                    "no" => labels.push(0),
                    other => {
                        return Err(GeoError::parse(
                            origin,
                            line,
                            format!("label must be 'yes' or 'no', found '{other}'"),
                        )
                        .into())
                    }
                }
            }
        }
        FeatureTable::new(ids, columns, labeled.then_some(labels))
    }
}

/// Appends embedding columns `emb_0..emb_{d-1}` from a CSV keyed by id.
///
/// The file's first column must be `id`; the remaining columns form the
/// embedding, with the width fixed across rows. Every table id must appear.
pub fn merge_embeddings(table: &FeatureTable, path: impl AsRef<Path>) -> Result<FeatureTable, FeatError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| GeoError::io(path.display().to_string(), e))?;
    merge_embeddings_from_str(table, &text, &path.display().to_string())
}

pub(crate) fn merge_embeddings_from_str(
    table: &FeatureTable,
    text: &str,
    origin: &str,
) -> Result<FeatureTable, FeatError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| GeoError::parse(origin, 1, e.to_string()))?
        .clone();
    if headers.get(0) != Some("id") {
        return Err(GeoError::MissingColumn("id".to_string()).into());
    }
    let dim = headers.len() - 1;

    let mut rows: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| GeoError::parse(origin, line, e.to_string()))?;
        if record.len() != dim + 1 {
            return Err(FeatError::EmbeddingDimension {
                expected: dim,
                found: record.len() - 1,
            });
        }
        let id = record.get(0).unwrap_or("").to_string();
        let mut values = Vec::with_capacity(dim);
        for j in 0..dim {
            let raw = record.get(j + 1).unwrap_or("");
            let v: f64 = raw
                .parse()
                .map_err(|_| GeoError::parse(origin, line, format!("bad numeric value '{raw}'")))?;
            values.push(v);
        }
        rows.insert(id, values);
    }

    let mut merged = table.clone();
    let mut emb_columns: Vec<Vec<f64>> = vec![Vec::with_capacity(table.n_rows()); dim];
    for id in table.ids() {
        let row = rows
            .get(id)
            .ok_or_else(|| FeatError::MissingEmbedding(id.clone()))?;
        for (j, &v) in row.iter().enumerate() {
            emb_columns[j].push(v);
        }
    }
    for (j, values) in emb_columns.into_iter().enumerate() {
        merged.add_column(format!("emb_{j}"), values)?;
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FeatureTable {
        FeatureTable::new(
            vec!["s1".to_string(), "s2".to_string(), "s3".to_string()],
            vec![
                ("pop.mean".to_string(), vec![10.0, 20.5, 30.0]),
                ("grid.distance".to_string(), vec![100.0, 250.0, 75.5]),
            ],
            Some(vec![1, 0, 1]),
        )
        .unwrap()
    }

    #[test]
    fn construction_enforces_invariants() {
        let ids = vec!["a".to_string(), "b".to_string()];
        assert!(matches!(
            FeatureTable::new(
                ids.clone(),
                vec![("x".to_string(), vec![1.0, 2.0]), ("x".to_string(), vec![3.0, 4.0])],
                None
            ),
            Err(FeatError::DuplicateColumn(_))
        ));
        assert!(matches!(
            FeatureTable::new(ids.clone(), vec![("label".to_string(), vec![1.0, 2.0])], None),
            Err(FeatError::DuplicateColumn(_))
        ));
        assert!(matches!(
            FeatureTable::new(ids.clone(), vec![("x".to_string(), vec![1.0])], None),
            Err(FeatError::ColumnLength { .. })
        ));
        assert!(matches!(
            FeatureTable::new(ids.clone(), vec![("x".to_string(), vec![1.0, f64::NAN])], None),
            Err(FeatError::NonFinite { row: 1, .. })
        ));
        assert!(matches!(
            FeatureTable::new(ids, vec![("x".to_string(), vec![1.0, 2.0])], Some(vec![1])),
            Err(FeatError::ColumnLength { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_byte_stable() {
        let table = sample();
        let text = table.to_csv_string();
        assert!(text.starts_with("id,pop.mean,grid.distance,label\n"));
        let back = FeatureTable::from_csv_str(&text, "<mem>").unwrap();
        assert_eq!(back, table);
        assert_eq!(back.to_csv_string(), text);
    }

    #[test]
    fn unlabeled_table_has_no_label_column() {
        let table = FeatureTable::new(
            vec!["s1".to_string()],
            vec![("x".to_string(), vec![0.25])],
            None,
        )
        .unwrap();
        let text = table.to_csv_string();
        assert_eq!(text, "id,x\ns1,0.25\n");
        assert!(FeatureTable::from_csv_str(&text, "<mem>").unwrap().labels().is_none());
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(
            FeatureTable::from_csv_str("name,x\na,1\n", "<mem>"),
            Err(FeatError::Geo(GeoError::MissingColumn(_)))
        ));
        assert!(matches!(
            FeatureTable::from_csv_str("id,x,label\na,1,maybe\n", "<mem>"),
            Err(FeatError::Geo(GeoError::Parse { line: 2, .. }))
        ));
        assert!(matches!(
            FeatureTable::from_csv_str("id,x\na,oops\n", "<mem>"),
            Err(FeatError::Geo(GeoError::Parse { line: 2, .. }))
        ));
        assert!(matches!(
            FeatureTable::from_csv_str("id,x\na,inf\n", "<mem>"),
            Err(FeatError::NonFinite { .. })
        ));
    }

    #[test]
    fn row_and_selection() {
        let table = sample();
        assert_eq!(table.row(1), vec![20.5, 250.0]);

        let subset = table.select_rows(&[2, 0]);
        assert_eq!(subset.ids(), &["s3".to_string(), "s1".to_string()]);
        assert_eq!(subset.column("pop.mean").unwrap(), &[30.0, 10.0]);
        assert_eq!(subset.labels().unwrap(), &[1, 1]);

        let cols = table.select_columns(&["grid.distance".to_string()]).unwrap();
        assert_eq!(cols.n_cols(), 1);
        assert_eq!(cols.column("grid.distance").unwrap(), &[100.0, 250.0, 75.5]);
        assert!(matches!(
            table.select_columns(&["nope".to_string()]),
            Err(FeatError::UnknownColumn(_))
        ));
    }

    #[test]
    fn merges_embeddings_by_id() {
        let table = sample();
        // File order differs from table order on purpose.
        let text = "id,a,b,c,d\ns3,30,31,32,33\ns1,10,11,12,13\ns2,20,21,22,23\n";
        let merged = merge_embeddings_from_str(&table, text, "<mem>").unwrap();
        assert_eq!(merged.n_cols(), 6);
        assert_eq!(merged.column("emb_0").unwrap(), &[10.0, 20.0, 30.0]);
        assert_eq!(merged.column("emb_3").unwrap(), &[13.0, 23.0, 33.0]);
        assert_eq!(merged.labels(), table.labels());
    }

    #[test]
    fn missing_embedding_names_the_id() {
        let table = sample();
        let text = "id,a,b\ns1,1,2\ns2,3,4\n";
        assert!(matches!(
            merge_embeddings_from_str(&table, text, "<mem>"),
            Err(FeatError::MissingEmbedding(id)) if id == "s3"
        ));
    }

    #[test]
    fn ragged_embedding_rows_rejected() {
        let table = sample();
        let text = "id,a,b\ns1,1,2\ns2,3\ns3,5,6\n";
        assert!(matches!(
            merge_embeddings_from_str(&table, text, "<mem>"),
            Err(FeatError::EmbeddingDimension { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn wide_embeddings_add_wide_block() {
        let ids = vec!["s1".to_string()];
        let table = FeatureTable::new(ids, vec![("x".to_string(), vec![1.0])], None).unwrap();
        let mut text = String::from("id");
        for j in 0..256 {
            text.push_str(&format!(",c{j}"));
        }
        text.push_str("\ns1");
        for j in 0..256 {
            text.push_str(&format!(",{}", j as f64 * 0.5));
        }
        text.push('\n');
        let merged = merge_embeddings_from_str(&table, &text, "<mem>").unwrap();
        assert_eq!(merged.n_cols(), 257);
        assert_eq!(merged.column("emb_255").unwrap(), &[127.5]);
    }
}
