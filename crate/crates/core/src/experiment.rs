//! Convergence studies on the structured unit-square meshes and table
//! output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::analysis::{error_norms, ConvergenceRow, ConvergenceTable, ExactSolution, RowStatus};
use crate::dpg::{solve_dpg, ElementKernel, LoadRule, SolverOptions};
use crate::error::{DpgError, Result};
use crate::mesh::unit_square_mesh;
use crate::spaces::{build_spaces, case_degrees, Case, CaseConfig};

/// Default cap on trial unknowns per mesh.
pub const DEFAULT_DOF_BUDGET: usize = 300_000;

/// Which degree triple to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseSpec {
    Standard { case: Case, k: usize },
    Custom(CaseConfig),
}

impl CaseSpec {
    pub fn config(&self) -> Result<CaseConfig> {
        match *self {
            CaseSpec::Standard { case, k } => case_degrees(case, k),
            CaseSpec::Custom(cfg) => Ok(cfg),
        }
    }

    pub fn label(&self) -> Result<String> {
        let cfg = self.config()?;
        Ok(match self {
            CaseSpec::Standard { case, k } => {
                format!("Case {}, k = {k}: (k_u, k_q, k_v) = {cfg}", case.number())
            }
            CaseSpec::Custom(_) => format!("(k_u, k_q, k_v) = {cfg}"),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = DpgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            other => Err(DpgError::InvalidParameter(format!(
                "unknown output format '{other}'"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub case: CaseSpec,
    pub n_list: Vec<usize>,
    pub quad_degree: Option<usize>,
    pub load: LoadRule,
    pub tol: f64,
    pub dof_budget: usize,
}

impl RunSpec {
    pub fn new(case: CaseSpec) -> Self {
        RunSpec {
            case,
            n_list: vec![2, 4, 8, 16, 32, 64],
            quad_degree: None,
            load: LoadRule::Quadrature,
            tol: SolverOptions::default().tol,
            dof_budget: DEFAULT_DOF_BUDGET,
        }
    }

    pub fn with_n_list(mut self, n_list: Vec<usize>) -> Self {
        self.n_list = n_list;
        self
    }

    pub fn with_load(mut self, load: LoadRule) -> Self {
        self.load = load;
        self
    }

    /// Checks the mesh sequence: positive, each entry twice the previous.
    pub fn validate(&self) -> Result<()> {
        self.case.config()?;
        if self.n_list.is_empty() {
            return Err(DpgError::InvalidParameter("empty mesh sequence".into()));
        }
        if self.n_list[0] == 0 {
            return Err(DpgError::InvalidParameter(
                "mesh subdivision must be positive".into(),
            ));
        }
        if let Some(w) = self.n_list.windows(2).find(|w| w[1] != 2 * w[0]) {
            return Err(DpgError::InvalidParameter(format!(
                "mesh sequence must double at each step ({} then {})",
                w[0], w[1]
            )));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(DpgError::InvalidParameter(format!(
                "tolerance {} outside (0, 1)",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Trial unknowns of one configuration on the `n × n` mesh.
pub fn trial_dofs(cfg: &CaseConfig, n: usize) -> usize {
    let interior = (cfg.k_u * n).saturating_sub(1).pow(2);
    interior + (3 * n * n + 2 * n) * (cfg.k_q + 1)
}

/// Runs the sine manufactured problem over the mesh sequence.
pub fn run_case(spec: &RunSpec) -> Result<ConvergenceTable> {
    run_case_with(spec, &ExactSolution::sine(), |_| {})
}

/// Runs an arbitrary manufactured problem, reporting each row as soon as
/// it is computed.
pub fn run_case_with<C: FnMut(&ConvergenceRow)>(
    spec: &RunSpec,
    exact: &ExactSolution,
    mut on_row: C,
) -> Result<ConvergenceTable> {
    spec.validate()?;
    let cfg = spec.case.config()?;
    let kernel = ElementKernel::new(cfg, spec.quad_degree)?.with_load_rule(spec.load)?;
    let opts = SolverOptions {
        tol: spec.tol,
        ..SolverOptions::default()
    };
    let f = exact.load();
    let mut rows = Vec::new();
    for &n in &spec.n_list {
        if trial_dofs(&cfg, n) > spec.dof_budget {
            break;
        }
        let mesh = unit_square_mesh(n)?;
        let spaces = build_spaces(&mesh, cfg);
        let row = match solve_dpg(&kernel, &mesh, &spaces, &f, &opts) {
            Ok(sol) => {
                let (l2, h1) = error_norms(&mesh, &spaces, &sol.u_coeffs, exact)?;
                ConvergenceRow {
                    n,
                    status: RowStatus::Solved {
                        h1_error: h1,
                        l2_error: l2,
                        estimator: sol.estimator(),
                        iterations: sol.stats.iterations,
                    },
                    h1_rate: None,
                    l2_rate: None,
                }
            }
            Err(e) if e.is_singular() => ConvergenceRow::singular(n),
            Err(e) => return Err(e),
        };
        on_row(&row);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DpgError::InvalidParameter(format!(
            "first mesh already exceeds the budget of {} unknowns",
            spec.dof_budget
        )));
    }
    Ok(ConvergenceTable::new(spec.case.label()?, rows))
}

/// C-style `%.*e`: mantissa with `digits` decimals, signed two-digit exponent.
pub fn format_sci(value: f64, digits: usize, upper: bool) -> String {
    let s = format!("{value:.digits$e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let e = if upper { 'E' } else { 'e' };
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}{e}{sign}{:02}", exp.abs())
}

fn opt_cell(v: Option<f64>, fmt: impl Fn(f64) -> String) -> String {
    v.map(fmt).unwrap_or_default()
}

/// CSV columns `n,h1_error,h1_rate,l2_error,l2_rate,estimator`.
pub fn table_to_csv(table: &ConvergenceTable) -> String {
    let sci = |v: f64| format_sci(v, 6, false);
    let mut out = String::from("n,h1_error,h1_rate,l2_error,l2_rate,estimator\n");
    for row in &table.rows {
        if row.is_singular() {
            let _ = writeln!(out, "{},SINGULAR,,SINGULAR,,", row.n);
            continue;
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.n,
            opt_cell(row.h1_error(), sci),
            opt_cell(row.h1_rate, sci),
            opt_cell(row.l2_error(), sci),
            opt_cell(row.l2_rate, sci),
            opt_cell(row.estimator(), sci),
        );
    }
    out
}

/// Markdown table laid out like a printed convergence table, with the
/// estimator as an extra column.
pub fn table_to_markdown(table: &ConvergenceTable) -> String {
    let sci = |v: f64| format_sci(v, 2, true);
    let fixed = |v: f64| format!("{v:.2}");
    let mut out = String::new();
    let _ = writeln!(out, "**{}**\n", table.label);
    let _ = writeln!(
        out,
        "| n | ‖u−u_h‖_H¹ | rate | ‖u−u_h‖_L² | rate | ‖ε^r‖_Y |"
    );
    let _ = writeln!(out, "|---:|---:|---:|---:|---:|---:|");
    for row in &table.rows {
        if row.is_singular() {
            let _ = writeln!(out, "| {} | SINGULAR | | SINGULAR | | |", row.n);
            continue;
        }
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} |",
            row.n,
            opt_cell(row.h1_error(), sci),
            opt_cell(row.h1_rate, fixed),
            opt_cell(row.l2_error(), sci),
            opt_cell(row.l2_rate, fixed),
            opt_cell(row.estimator(), sci),
        );
    }
    out
}

pub fn render_table(table: &ConvergenceTable, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => table_to_csv(table),
        OutputFormat::Markdown => table_to_markdown(table),
    }
}

/// Writes the rendered table to `path`, or returns it for stdout when
/// `path` is `None`.
pub fn emit_table(
    table: &ConvergenceTable,
    format: OutputFormat,
    path: Option<&Path>,
) -> Result<String> {
    if table.rows.is_empty() {
        return Err(DpgError::InvalidParameter(
            "cannot emit an empty table".into(),
        ));
    }
    let text = render_table(table, format);
    if let Some(path) = path {
        fs::write(path, &text)?;
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci_format() {
        assert_eq!(format_sci(1.53, 6, false), "1.530000e+00");
        assert_eq!(format_sci(0.000357, 2, true), "3.57E-04");
        assert_eq!(format_sci(-2.5e12, 1, false), "-2.5e+12");
    }

    #[test]
    fn csv_single_and_double_rows() {
        let one = ConvergenceTable::new("x", vec![ConvergenceRow::solved(2, 1.0, 0.5, 0.1)]);
        let csv = table_to_csv(&one);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,h1_error,h1_rate,l2_error,l2_rate,estimator");
        assert_eq!(lines[1], "2,1.000000e+00,,5.000000e-01,,1.000000e-01");

        let two = ConvergenceTable::new(
            "x",
            vec![
                ConvergenceRow::solved(2, 1.0, 0.5, 0.1),
                ConvergenceRow::solved(4, 0.25, 0.125, 0.05),
            ],
        );
        let csv = table_to_csv(&two);
        let cells: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(cells[2].parse::<f64>().unwrap(), 2.0);
        assert_eq!(cells[4].parse::<f64>().unwrap(), 2.0);
    }

    #[test]
    fn markdown_layout() {
        let rows = (0..6)
            .map(|i| ConvergenceRow::solved(2 << i, 0.5f64.powi(i), 0.25f64.powi(i), 1.0))
            .collect();
        let md = table_to_markdown(&ConvergenceTable::new("Case 1, k = 2", rows));
        let data: Vec<&str> = md
            .lines()
            .filter(|l| l.starts_with("| ") && !l.starts_with("| n "))
            .collect();
        assert_eq!(data.len(), 6);
        assert!(data[0].contains("| 1.00 |") && data[0].contains("| 2.00 |"));
        assert!(data[5].contains("|  |"));
    }

    #[test]
    fn spec_validation() {
        let spec = RunSpec::new(CaseSpec::Standard {
            case: Case::One,
            k: 1,
        });
        assert!(spec.validate().is_ok());
        assert!(spec.clone().with_n_list(vec![2, 6]).validate().is_err());
        assert!(spec.clone().with_n_list(vec![]).validate().is_err());
        assert!(RunSpec::new(CaseSpec::Standard {
            case: Case::Two,
            k: 1
        })
        .validate()
        .is_err());
    }

    #[test]
    fn dof_counts() {
        let cfg = CaseConfig::new(1, 0, 2).unwrap();
        assert_eq!(trial_dofs(&cfg, 1), 5);
        assert_eq!(trial_dofs(&cfg, 2), 1 + 16);
    }

    #[test]
    fn empty_table_is_rejected() {
        let t = ConvergenceTable::default();
        assert!(emit_table(&t, OutputFormat::Csv, None).is_err());
    }
}
