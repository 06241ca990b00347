use super::{DataError, Quarter, Result, Role, Speed, VariableSpec};
use crate::artifact::{Array, Artifact};
use crate::numeric::stats::column_moments;
use crate::numeric::{Matrix, Vector};
use serde_json::json;
use std::io::Write;

/// Transformed, aligned and standardized panel. Holds both the observable
/// block and the high-dimensional block in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    /// `T×N` standardized values.
    pub values: Matrix,
    /// `T×N` transformed values before standardization.
    pub transformed: Matrix,
    pub specs: Vec<VariableSpec>,
    pub dates: Vec<Quarter>,
    pub means: Vector,
    pub stds: Vector,
}

impl Panel {
    pub fn from_transformed(transformed: Matrix, specs: Vec<VariableSpec>, dates: Vec<Quarter>) -> Result<Self> {
        let (t, n) = transformed.shape();
        if specs.len() != n || dates.len() != t {
            return Err(DataError::InvalidSpec(format!(
                "panel is {t}x{n} but has {} specs and {} dates",
                specs.len(),
                dates.len()
            )));
        }
        if t == 0 {
            return Err(DataError::WindowTooShort { len: 0, min: 1 });
        }
        crate::numeric::ensure_finite(&transformed, "panel")?;
        let (means, stds) = column_moments(&transformed);
        for j in 0..n {
            if !(stds[j] > 1e-12 * means[j].abs().max(1.0)) {
                return Err(DataError::ConstantColumn(specs[j].name.clone()));
            }
        }
        let values = Matrix::from_fn(t, n, |r, c| (transformed[(r, c)] - means[c]) / stds[c]);
        Ok(Self { values, transformed, specs, dates, means, stds })
    }

    pub fn t(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_vars(&self) -> usize {
        self.values.ncols()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    fn indices(&self, keep: impl Fn(&VariableSpec) -> bool) -> Vec<usize> {
        self.specs.iter().enumerate().filter(|(_, s)| keep(s)).map(|(i, _)| i).collect()
    }

    pub fn x_indices(&self) -> Vec<usize> {
        self.indices(|s| s.role == Role::PanelX)
    }

    pub fn y_indices(&self) -> Vec<usize> {
        self.indices(|s| s.role == Role::ObservableY)
    }

    pub fn slow_x_indices(&self) -> Vec<usize> {
        self.indices(|s| s.role == Role::PanelX && s.speed == Speed::Slow)
    }

    pub fn columns(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(self.t(), idx.len(), |r, c| self.values[(r, idx[c])])
    }

    pub fn x_matrix(&self) -> Matrix {
        self.columns(&self.x_indices())
    }

    pub fn y_matrix(&self) -> Matrix {
        self.columns(&self.y_indices())
    }

    pub fn x_names(&self) -> Vec<String> {
        self.x_indices().into_iter().map(|i| self.specs[i].name.clone()).collect()
    }

    pub fn y_names(&self) -> Vec<String> {
        self.y_indices().into_iter().map(|i| self.specs[i].name.clone()).collect()
    }

    /// Group id of every panel_x column, in column order.
    pub fn x_groups(&self) -> Vec<u8> {
        self.x_indices().into_iter().map(|i| self.specs[i].group.unwrap_or(0)).collect()
    }

    pub fn destandardize(&self, col: usize, standardized: &[f64]) -> Vec<f64> {
        standardized.iter().map(|v| v * self.stds[col] + self.means[col]).collect()
    }

    /// The first `len` quarters, re-standardized with their own moments.
    pub fn window(&self, len: usize) -> Result<Panel> {
        if len == 0 || len > self.t() {
            return Err(DataError::InvalidSpec(format!("window of {len} quarters from a panel of {}", self.t())));
        }
        Panel::from_transformed(
            self.transformed.rows(0, len).into_owned(),
            self.specs.clone(),
            self.dates[..len].to_vec(),
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| DataError::Csv(e.to_string());
        let mut header = vec!["date".to_string()];
        header.extend(self.specs.iter().map(|s| s.name.clone()));
        w.write_record(&header).map_err(csv_err)?;
        for r in 0..self.t() {
            let mut row = vec![self.dates[r].to_string()];
            row.extend((0..self.n_vars()).map(|c| format!("{:e}", self.values[(r, c)])));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| DataError::Csv(e.to_string()))?;
        Ok(())
    }

    /// One row per variable: its manifest entry and standardization moments.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| DataError::Csv(e.to_string());
        w.write_record(["variable", "group", "tcode", "speed", "role", "mean", "std"]).map_err(csv_err)?;
        for (j, s) in self.specs.iter().enumerate() {
            let speed = match s.speed {
                Speed::Slow => "slow",
                Speed::Fast => "fast",
            };
            let role = match s.role {
                Role::ObservableY => "observable_y",
                Role::PanelX => "panel_x",
            };
            w.write_record([
                s.name.clone(),
                s.group.map(|g| g.to_string()).unwrap_or_default(),
                s.tcode.code().to_string(),
                speed.to_string(),
                role.to_string(),
                format!("{:e}", self.means[j]),
                format!("{:e}", self.stds[j]),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| DataError::Csv(e.to_string()))?;
        Ok(())
    }

    /// Stores the transformed values; standardization is recomputed on load.
    pub fn to_artifact(&self) -> Artifact {
        let mut a = Artifact::new(json!({ "kind": "panel", "specs": self.specs, "dates": self.dates }));
        a.push(Array::from_matrix("transformed", &self.transformed));
        a
    }

    pub fn from_artifact(a: &Artifact) -> Result<Self> {
        let kind: String = a.meta_field("kind")?;
        if kind != "panel" {
            return Err(DataError::InvalidSpec(format!("artifact holds '{kind}', not a panel")));
        }
        Panel::from_transformed(a.matrix("transformed")?, a.meta_field("specs")?, a.meta_field("dates")?)
    }
}

/// Maps panel group ids onto contiguous decoder group indices, with the
/// anchor groups first so that anchor `k` sits in row `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupLayout {
    /// Group id for each row of the SSL matrix.
    pub group_ids: Vec<u8>,
    /// Row of the SSL matrix used by each panel_x column.
    pub var_group: Vec<usize>,
    /// Number of anchor groups (equals the factor count).
    pub n_anchors: usize,
}

impl GroupLayout {
    pub fn new(x_groups: &[u8], anchor_ids: &[u8]) -> Result<Self> {
        let mut group_ids: Vec<u8> = Vec::new();
        for &a in anchor_ids {
            if group_ids.contains(&a) {
                return Err(DataError::InvalidSpec(format!("anchor group {a} listed twice")));
            }
            if !x_groups.contains(&a) {
                return Err(DataError::InvalidSpec(format!("anchor group {a} has no panel variables")));
            }
            group_ids.push(a);
        }
        let mut rest: Vec<u8> = x_groups.iter().copied().filter(|g| !anchor_ids.contains(g)).collect();
        rest.sort_unstable();
        rest.dedup();
        group_ids.extend(rest);
        let var_group = x_groups
            .iter()
            .map(|g| group_ids.iter().position(|id| id == g).expect("every group was registered"))
            .collect();
        Ok(Self { group_ids, var_group, n_anchors: anchor_ids.len() })
    }

    pub fn n_groups(&self) -> usize {
        self.group_ids.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TransformCode;

    fn spec(name: &str, group: Option<u8>, role: Role) -> VariableSpec {
        VariableSpec { name: name.into(), group, tcode: TransformCode::Level, speed: Speed::Slow, role }
    }

    fn toy() -> Panel {
        let t = 10;
        let m = Matrix::from_fn(t, 3, |r, c| (r as f64 + 1.0).powi(c as i32 + 1));
        let dates = (0..t).map(|i| Quarter::new(2000, 1).unwrap().offset(i as i64)).collect();
        Panel::from_transformed(
            m,
            vec![
                spec("a", Some(1), Role::PanelX),
                spec("b", Some(2), Role::PanelX),
                spec("y", None, Role::ObservableY),
            ],
            dates,
        )
        .unwrap()
    }

    #[test]
    fn standardized_columns() {
        let p = toy();
        let (m, s) = column_moments(&p.values);
        assert!(m.amax() < 1e-12);
        assert!((s.add_scalar(-1.0)).amax() < 1e-12);
    }

    #[test]
    fn destandardize_round_trip() {
        let p = toy();
        for c in 0..3 {
            let col: Vec<f64> = p.values.column(c).iter().copied().collect();
            let back = p.destandardize(c, &col);
            for (r, v) in back.iter().enumerate() {
                assert!((v - p.transformed[(r, c)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn window_restandardizes() {
        let p = toy();
        let w = p.window(5).unwrap();
        assert_eq!(w.t(), 5);
        assert!(column_moments(&w.values).0.amax() < 1e-12);
        assert_eq!(w.transformed, p.transformed.rows(0, 5).into_owned());
    }

    #[test]
    fn constant_column_rejected() {
        let m = Matrix::from_element(5, 1, 2.0);
        let dates = (0..5).map(|i| Quarter::new(2000, 1).unwrap().offset(i)).collect();
        assert!(matches!(
            Panel::from_transformed(m, vec![spec("c", Some(1), Role::PanelX)], dates),
            Err(DataError::ConstantColumn(_))
        ));
    }

    #[test]
    fn layout_puts_anchors_first() {
        let l = GroupLayout::new(&[3, 1, 2, 3, 5], &[5, 2]).unwrap();
        assert_eq!(l.group_ids, vec![5, 2, 1, 3]);
        assert_eq!(l.var_group, vec![3, 2, 1, 3, 0]);
        assert!(GroupLayout::new(&[1, 2], &[4]).is_err());
        assert!(GroupLayout::new(&[1, 2], &[1, 1]).is_err());
    }
}
