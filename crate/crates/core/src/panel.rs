//! Long-format CSV ingestion for interval-valued panel data.
//!
//! Expected header: `entity,time,variable,lower,upper`. The panel must be
//! rectangular (every entity observed for every variable at every time) with
//! `lower <= upper` in every row; violations are reported with the CSV line
//! number.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::basis::BasisSpec;
use crate::error::Error;
use crate::interval::IntervalFunctionalDataset;
use crate::Result;

/// A rectangular panel of interval observations: per entity and variable,
/// lower/upper values over a shared ascending time grid.
#[derive(Debug, Clone)]
pub struct PanelDataset {
    entities: Vec<String>,
    grid: Vec<f64>,
    variables: Vec<String>,
    // per variable, entities x times
    lower: Vec<DMatrix<f64>>,
    upper: Vec<DMatrix<f64>>,
}

impl PanelDataset {
    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn lower_values(&self, variable: usize) -> &DMatrix<f64> {
        &self.lower[variable]
    }

    pub fn upper_values(&self, variable: usize) -> &DMatrix<f64> {
        &self.upper[variable]
    }

    /// Builds a panel from in-memory matrices (entities x times per variable).
    pub fn from_parts(
        entities: Vec<String>,
        grid: Vec<f64>,
        variables: Vec<String>,
        lower: Vec<DMatrix<f64>>,
        upper: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        if variables.len() != lower.len() || variables.len() != upper.len() {
            return Err(Error::Panel("one matrix pair per variable required".into()));
        }
        for (v, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.shape() != (entities.len(), grid.len()) || hi.shape() != lo.shape() {
                return Err(Error::Panel(format!(
                    "matrices for variable '{}' do not match the panel shape",
                    variables[v]
                )));
            }
            for i in 0..lo.nrows() {
                for j in 0..lo.ncols() {
                    if lo[(i, j)] > hi[(i, j)] {
                        return Err(Error::Panel(format!(
                            "variable '{}', entity '{}', time {}: lower {} > upper {}",
                            variables[v],
                            entities[i],
                            grid[j],
                            lo[(i, j)],
                            hi[(i, j)]
                        )));
                    }
                }
            }
        }
        Ok(Self {
            entities,
            grid,
            variables,
            lower,
            upper,
        })
    }

    /// Smooths one variable of the panel onto a basis.
    pub fn to_interval_dataset(
        &self,
        variable: &str,
        spec: &BasisSpec,
    ) -> Result<IntervalFunctionalDataset> {
        let v = self
            .variable_index(variable)
            .ok_or_else(|| Error::Panel(format!("variable '{variable}' not in panel")))?;
        IntervalFunctionalDataset::from_discrete(&self.lower[v], &self.upper[v], &self.grid, spec)
    }

    /// Panel restricted to the given entity rows, in order.
    pub fn subset_entities(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let take = |m: &DMatrix<f64>| {
            let mut out = DMatrix::zeros(indices.len(), m.ncols());
            for (r, &i) in indices.iter().enumerate() {
                out.row_mut(r).copy_from(&m.row(i));
            }
            out
        };
        Ok(Self {
            entities: indices.iter().map(|&i| self.entities[i].clone()).collect(),
            grid: self.grid.clone(),
            variables: self.variables.clone(),
            lower: self.lower.iter().map(take).collect(),
            upper: self.upper.iter().map(take).collect(),
        })
    }

    /// Serializes the panel as long-format CSV, rows sorted by
    /// (entity, time, variable).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("entity,time,variable,lower,upper\n");
        for (i, entity) in self.entities.iter().enumerate() {
            for (j, t) in self.grid.iter().enumerate() {
                for (v, var) in self.variables.iter().enumerate() {
                    out.push_str(&format!(
                        "{entity},{t},{var},{},{}\n",
                        self.lower[v][(i, j)],
                        self.upper[v][(i, j)]
                    ));
                }
            }
        }
        out
    }

    /// Writes the panel atomically (temp file then rename).
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string().as_bytes())?;
        Ok(())
    }
}

/// Writes bytes to `path` via a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension()
            .map(|e| e.to_string_lossy().into_owned())
            .unwrap_or_default()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Loads and validates a long-format CSV panel.
pub fn load_panel(path: &Path) -> Result<PanelDataset> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    {
        let headers = reader.headers()?;
        let expected = ["entity", "time", "variable", "lower", "upper"];
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(Error::Panel(format!(
                "expected header {expected:?}, found {got:?}"
            )));
        }
    }

    struct Row {
        entity: String,
        time: f64,
        variable: String,
        lower: f64,
        upper: f64,
        line: u64,
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 5 {
            return Err(Error::Panel(format!(
                "row {line}: expected 5 fields, found {}",
                record.len()
            )));
        }
        let parse = |idx: usize, name: &str| -> Result<f64> {
            record[idx].parse::<f64>().map_err(|_| {
                Error::Panel(format!(
                    "row {line}: cannot parse {name} value '{}'",
                    &record[idx]
                ))
            })
        };
        let row = Row {
            entity: record[0].to_string(),
            time: parse(1, "time")?,
            variable: record[2].to_string(),
            lower: parse(3, "lower")?,
            upper: parse(4, "upper")?,
            line,
        };
        if row.entity.is_empty() || row.variable.is_empty() {
            return Err(Error::Panel(format!(
                "row {line}: empty entity or variable name"
            )));
        }
        if row.lower > row.upper {
            return Err(Error::Panel(format!(
                "row {}: lower {} > upper {} for entity '{}', variable '{}'",
                row.line, row.lower, row.upper, row.entity, row.variable
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Panel("panel file contains no data rows".into()));
    }

    let mut entities: Vec<String> = rows.iter().map(|r| r.entity.clone()).collect();
    entities.sort();
    entities.dedup();
    let mut variables: Vec<String> = rows.iter().map(|r| r.variable.clone()).collect();
    variables.sort();
    variables.dedup();
    let mut grid: Vec<f64> = rows.iter().map(|r| r.time).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let entity_idx: BTreeMap<&str, usize> = entities
        .iter()
        .enumerate()
        .map(|(i, e)| (e.as_str(), i))
        .collect();
    let variable_idx: BTreeMap<&str, usize> = variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();

    let mut lower = vec![DMatrix::from_element(entities.len(), grid.len(), f64::NAN); variables.len()];
    let mut upper = lower.clone();
    let mut seen = vec![vec![0u64; entities.len() * grid.len()]; variables.len()];
    for row in &rows {
        let e = entity_idx[row.entity.as_str()];
        let v = variable_idx[row.variable.as_str()];
        let j = grid
            .binary_search_by(|g| g.total_cmp(&row.time))
            .expect("time came from this set");
        let flat = e * grid.len() + j;
        if seen[v][flat] != 0 {
            return Err(Error::Panel(format!(
                "row {}: duplicate observation for entity '{}', time {}, variable '{}' (first at row {})",
                row.line, row.entity, row.time, row.variable, seen[v][flat]
            )));
        }
        seen[v][flat] = row.line;
        lower[v][(e, j)] = row.lower;
        upper[v][(e, j)] = row.upper;
    }

    for (v, grid_seen) in seen.iter().enumerate() {
        if let Some(flat) = grid_seen.iter().position(|&s| s == 0) {
            let e = flat / grid.len();
            let j = flat % grid.len();
            return Err(Error::Panel(format!(
                "ragged panel: entity '{}' has no observation for variable '{}' at time {}",
                entities[e], variables[v], grid[j]
            )));
        }
    }

    PanelDataset::from_parts(entities, grid, variables, lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir();
        let path = dir.join(format!(
            "ifr-panel-test-{}-{}.csv",
            std::process::id(),
            rand::random::<u64>()
        ));
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_a_well_formed_panel() {
        let path = write_temp(
            "entity,time,variable,lower,upper\n\
             a,1,y,0.0,1.0\n\
             a,2,y,0.5,1.5\n\
             a,3,y,1.0,2.0\n\
             b,1,y,0.1,0.2\n\
             b,2,y,0.2,0.3\n\
             b,3,y,0.3,0.4\n",
        );
        let panel = load_panel(&path).unwrap();
        fs::remove_file(&path).ok();
        assert_eq!(panel.entities(), ["a", "b"]);
        assert_eq!(panel.grid().len(), 3);
        assert_eq!(panel.variables(), ["y"]);
        assert_eq!(panel.lower_values(0)[(0, 1)], 0.5);
        assert_eq!(panel.upper_values(0)[(1, 2)], 0.4);
    }

    #[test]
    fn inverted_interval_is_reported_with_its_row() {
        let path = write_temp(
            "entity,time,variable,lower,upper\n\
             a,1,y,0.0,1.0\n\
             a,2,y,2.0,1.5\n",
        );
        let err = load_panel(&path).unwrap_err();
        fs::remove_file(&path).ok();
        let msg = err.to_string();
        assert!(msg.contains("row 3"), "message was: {msg}");
        assert!(msg.contains("lower 2 > upper 1.5"), "message was: {msg}");
    }

    #[test]
    fn duplicates_and_ragged_panels_are_rejected() {
        let dup = write_temp(
            "entity,time,variable,lower,upper\n\
             a,1,y,0.0,1.0\n\
             a,1,y,0.0,1.0\n",
        );
        let err = load_panel(&dup).unwrap_err();
        fs::remove_file(&dup).ok();
        assert!(err.to_string().contains("duplicate"));

        let ragged = write_temp(
            "entity,time,variable,lower,upper\n\
             a,1,y,0.0,1.0\n\
             a,2,y,0.0,1.0\n\
             b,1,y,0.0,1.0\n",
        );
        let err = load_panel(&ragged).unwrap_err();
        fs::remove_file(&ragged).ok();
        assert!(err.to_string().contains("ragged"), "{err}");
    }

    #[test]
    fn save_then_load_is_identity() {
        let entities = vec!["s1".to_string(), "s2".to_string()];
        let grid = vec![1.0, 2.0, 3.0, 4.0];
        let variables = vec!["x".to_string(), "y".to_string()];
        let lower = vec![
            DMatrix::from_fn(2, 4, |i, j| (i + j) as f64 * 0.25 - 1.0),
            DMatrix::from_fn(2, 4, |i, j| (i as f64) - (j as f64) / 3.0),
        ];
        let upper = vec![
            lower[0].map(|v| v + 0.5),
            lower[1].map(|v| v + 1.25),
        ];
        let panel =
            PanelDataset::from_parts(entities, grid, variables, lower, upper).unwrap();
        let path = std::env::temp_dir().join(format!(
            "ifr-panel-roundtrip-{}-{}.csv",
            std::process::id(),
            rand::random::<u64>()
        ));
        panel.save(&path).unwrap();
        let back = load_panel(&path).unwrap();
        fs::remove_file(&path).ok();
        assert_eq!(back.entities(), panel.entities());
        assert_eq!(back.variables(), panel.variables());
        for v in 0..2 {
            assert!((back.lower_values(v) - panel.lower_values(v)).amax() < 1e-12);
            assert!((back.upper_values(v) - panel.upper_values(v)).amax() < 1e-12);
        }
    }

    #[test]
    fn smooths_a_variable_onto_a_basis() {
        let entities = vec!["a".into(), "b".into(), "c".into()];
        let grid: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let lower = vec![DMatrix::from_fn(3, 12, |i, j| (i * j) as f64 * 0.1)];
        let upper = vec![lower[0].map(|v| v + 1.0)];
        let panel = PanelDataset::from_parts(
            entities,
            grid,
            vec!["temp".into()],
            lower,
            upper,
        )
        .unwrap();
        let spec = BasisSpec::cubic(6, 0.0, 11.0).unwrap();
        let ds = panel.to_interval_dataset("temp", &spec).unwrap();
        assert_eq!(ds.n_samples(), 3);
        assert!(panel.to_interval_dataset("missing", &spec).is_err());
    }
}
