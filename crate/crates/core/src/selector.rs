//! Linear model predicting the MEMSO / 2MPSO average-cost ratio from
//! instance features, with backward AIC elimination.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{DvrpError, Result};
use crate::features::FeatureVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "memso")]
    Memso,
    #[serde(rename = "2mpso")]
    TwoMpso,
}

impl Algorithm {
    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Memso => "memso",
            Algorithm::TwoMpso => "2mpso",
        }
    }

    pub fn other(self) -> Algorithm {
        match self {
            Algorithm::Memso => Algorithm::TwoMpso,
            Algorithm::TwoMpso => Algorithm::Memso,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Memso => "MEMSO",
            Algorithm::TwoMpso => "2MPSO",
        })
    }
}

impl FromStr for Algorithm {
    type Err = DvrpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "memso" => Ok(Algorithm::Memso),
            "2mpso" => Ok(Algorithm::TwoMpso),
            _ => Err(DvrpError::Config(format!(
                "unknown algorithm '{s}' (memso or 2mpso)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingRow {
    pub name: String,
    pub features: FeatureVector,
    /// Average MEMSO cost over average 2MPSO cost.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectorModel {
    pub features: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub rss: f64,
    pub aic: f64,
    pub observations: usize,
    /// Standard error per term, intercept first.
    pub std_errors: Vec<f64>,
    /// Two-sided p-value per term, intercept first.
    pub p_values: Vec<f64>,
}

/// Householder QR of a column-major `rows × cols` matrix (`rows > cols`).
/// Reflector `j` is `I − β_j w wᵀ` with `w_j = 1` implied and the rest of
/// `w` stored below the diagonal.
struct Qr {
    rows: usize,
    cols: usize,
    /// Column-major; upper triangle holds R, below it the reflectors.
    a: Vec<f64>,
    betas: Vec<f64>,
    dependent: Vec<bool>,
}

impl Qr {
    fn new(mut a: Vec<f64>, rows: usize, cols: usize) -> Self {
        let mut betas = vec![0.0; cols];
        let mut dependent = vec![false; cols];
        let norms: Vec<f64> = (0..cols)
            .map(|j| {
                a[j * rows..(j + 1) * rows]
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        for j in 0..cols {
            let col = j * rows;
            let sigma: f64 = a[col + j..col + rows]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            // What is left of the column after projecting out earlier ones.
            if sigma <= 1e-10 * norms[j].max(f64::MIN_POSITIVE) {
                dependent[j] = true;
                continue;
            }
            let alpha = if a[col + j] > 0.0 { -sigma } else { sigma };
            let v0 = a[col + j] - alpha;
            a[col + j] = v0;
            let vnorm2: f64 = a[col + j..col + rows].iter().map(|v| v * v).sum();
            let beta = 2.0 / vnorm2;
            for k in (j + 1)..cols {
                let other = k * rows;
                let dot: f64 = (j..rows).map(|i| a[col + i] * a[other + i]).sum();
                let f = beta * dot;
                for i in j..rows {
                    a[other + i] -= f * a[col + i];
                }
            }
            for i in (j + 1)..rows {
                a[col + i] /= v0;
            }
            betas[j] = beta * v0 * v0;
            a[col + j] = alpha;
        }
        Qr {
            rows,
            cols,
            a,
            betas,
            dependent,
        }
    }

    /// `Qᵀ y`.
    fn qt(&self, y: &[f64]) -> Vec<f64> {
        let mut y = y.to_vec();
        for j in 0..self.cols {
            if self.dependent[j] {
                continue;
            }
            let col = j * self.rows;
            let mut dot = y[j];
            for i in (j + 1)..self.rows {
                dot += self.a[col + i] * y[i];
            }
            let f = self.betas[j] * dot;
            y[j] -= f;
            for i in (j + 1)..self.rows {
                y[i] -= f * self.a[col + i];
            }
        }
        y
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.a[j * self.rows + i]
    }

    /// Solves `R x = b` for the leading `cols` entries.
    fn solve_r(&self, b: &[f64]) -> Vec<f64> {
        let n = self.cols;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.r(i, k) * x[k];
            }
            x[i] = s / self.r(i, i);
        }
        x
    }

    /// Diagonal of `(RᵀR)⁻¹`.
    fn inverse_gram_diagonal(&self) -> Vec<f64> {
        let n = self.cols;
        // R⁻¹ column by column; (RᵀR)⁻¹ = R⁻¹ R⁻ᵀ, so diag = row norms² of R⁻¹.
        let mut rinv = vec![0.0; n * n];
        for c in 0..n {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            let x = self.solve_r(&e);
            for r in 0..n {
                rinv[r * n + c] = x[r];
            }
        }
        (0..n)
            .map(|r| rinv[r * n..(r + 1) * n].iter().map(|v| v * v).sum())
            .collect()
    }
}

fn column(rows: &[TrainingRow], name: &str) -> Result<Vec<f64>> {
    rows.iter()
        .map(|r| {
            r.features
                .get(name)
                .ok_or_else(|| DvrpError::Config(format!("unknown feature '{name}'")))
        })
        .collect()
}

/// Akaike criterion without constants: `n ln(RSS / n) + 2 (p + 1)`.
pub fn aic(rss: f64, observations: usize, terms: usize) -> f64 {
    let n = observations as f64;
    n * (rss / n).ln() + 2.0 * terms as f64
}

/// Least squares of the ratio on an intercept plus `subset`.
pub fn fit_ols(rows: &[TrainingRow], subset: &[&str]) -> Result<SelectorModel> {
    let n = rows.len();
    let p = subset.len();
    if n < p + 1 {
        return Err(DvrpError::InsufficientData(format!(
            "{n} rows cannot fit an intercept and {p} features"
        )));
    }
    let mut a = vec![1.0; n];
    for name in subset {
        a.extend(column(rows, name)?);
    }
    let y: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(DvrpError::InvalidInstance(
            "non-finite training ratio".into(),
        ));
    }
    let qr = Qr::new(a.clone(), n, p + 1);
    if qr.dependent.iter().any(|&d| d) {
        let names = qr
            .dependent
            .iter()
            .enumerate()
            .filter(|(_, &d)| d)
            .map(|(j, _)| {
                if j == 0 {
                    "(intercept)".to_string()
                } else {
                    subset[j - 1].to_string()
                }
            })
            .collect();
        return Err(DvrpError::RankDeficient(names));
    }
    let qty = qr.qt(&y);
    let beta = qr.solve_r(&qty);
    let rss: f64 = (0..n)
        .map(|i| {
            let fitted: f64 = (0..=p).map(|j| a[j * n + i] * beta[j]).sum();
            (y[i] - fitted).powi(2)
        })
        .sum();
    // A saturated fit (n = p + 1) has no residual degrees of freedom;
    // its standard errors and p-values are NaN.
    let df = (n - p - 1) as f64;
    let sigma2 = rss / df;
    let std_errors: Vec<f64> = qr
        .inverse_gram_diagonal()
        .into_iter()
        .map(|d| {
            if df > 0.0 {
                (sigma2 * d).sqrt()
            } else {
                f64::NAN
            }
        })
        .collect();
    let p_values = if df > 0.0 {
        let t_dist = StudentsT::new(0.0, 1.0, df).map_err(|e| DvrpError::Solver(e.to_string()))?;
        beta.iter()
            .zip(&std_errors)
            .map(|(b, se)| {
                let t = (b / se).abs();
                if t.is_nan() {
                    1.0
                } else {
                    2.0 * (1.0 - t_dist.cdf(t))
                }
            })
            .collect()
    } else {
        vec![f64::NAN; p + 1]
    };
    Ok(SelectorModel {
        features: subset.iter().map(|s| s.to_string()).collect(),
        intercept: beta[0],
        coefficients: beta[1..].to_vec(),
        rss,
        aic: aic(rss, n, p + 1),
        observations: n,
        std_errors,
        p_values,
    })
}

/// One step of the elimination path.
#[derive(Clone, Debug, PartialEq)]
pub struct EliminationStep {
    /// Feature removed at this step (`None` for the starting model).
    pub dropped: Option<String>,
    pub aic: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepwiseFit {
    pub model: SelectorModel,
    pub path: Vec<EliminationStep>,
}

/// Backward elimination from all ten features: repeatedly drop the
/// feature whose removal lowers AIC the most, ties going to the
/// alphabetically first name, until no removal lowers it.
pub fn stepwise_aic(rows: &[TrainingRow]) -> Result<StepwiseFit> {
    stepwise_aic_from(rows, &FeatureVector::NAMES)
}

/// [`stepwise_aic`] starting from `start` instead of the full set.
pub fn stepwise_aic_from(rows: &[TrainingRow], start: &[&str]) -> Result<StepwiseFit> {
    let mut current: Vec<&str> = start.to_vec();
    let mut model = fit_ols(rows, &current)?;
    let mut path = vec![EliminationStep {
        dropped: None,
        aic: model.aic,
    }];
    loop {
        let mut order: Vec<usize> = (0..current.len()).collect();
        order.sort_by_key(|&i| current[i]);
        let mut best: Option<(usize, SelectorModel)> = None;
        for i in order {
            let mut subset = current.clone();
            subset.remove(i);
            let candidate = fit_ols(rows, &subset)?;
            let bar = best.as_ref().map_or(model.aic, |b| b.1.aic);
            if candidate.aic < bar {
                best = Some((i, candidate));
            }
        }
        let Some((i, next)) = best else { break };
        let name = current.remove(i);
        path.push(EliminationStep {
            dropped: Some(name.to_string()),
            aic: next.aic,
        });
        model = next;
    }
    Ok(StepwiseFit { model, path })
}

impl SelectorModel {
    pub fn predict(&self, features: &FeatureVector) -> f64 {
        let mut r = self.intercept;
        for (name, c) in self.features.iter().zip(&self.coefficients) {
            r += c * features.get(name).unwrap_or(0.0);
        }
        r
    }

    /// Text form that reloads to a model with bit-identical predictions.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# ratio model: memso average / 2mpso average\n");
        let _ = writeln!(out, "observations {}", self.observations);
        let _ = writeln!(
            out,
            "intercept {:e} {:e} {:e}",
            self.intercept, self.std_errors[0], self.p_values[0]
        );
        for (j, name) in self.features.iter().enumerate() {
            let _ = writeln!(
                out,
                "coef {name} {:e} {:e} {:e}",
                self.coefficients[j],
                self.std_errors[j + 1],
                self.p_values[j + 1]
            );
        }
        let _ = writeln!(out, "rss {:e}", self.rss);
        let _ = writeln!(out, "aic {:e}", self.aic);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut m = SelectorModel {
            features: Vec::new(),
            intercept: f64::NAN,
            coefficients: Vec::new(),
            rss: f64::NAN,
            aic: f64::NAN,
            observations: 0,
            std_errors: Vec::new(),
            p_values: Vec::new(),
        };
        let mut have_intercept = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let n = i + 1;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let num = |k: usize| -> Result<f64> {
                tokens
                    .get(k)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| DvrpError::parse(n, "expected a number"))
            };
            match tokens[0] {
                "observations" => {
                    m.observations = tokens
                        .get(1)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| DvrpError::parse(n, "expected a count"))?;
                }
                "intercept" => {
                    m.intercept = num(1)?;
                    m.std_errors.insert(0, num(2)?);
                    m.p_values.insert(0, num(3)?);
                    have_intercept = true;
                }
                "coef" => {
                    let name = *tokens
                        .get(1)
                        .ok_or_else(|| DvrpError::parse(n, "missing feature"))?;
                    if !FeatureVector::NAMES.contains(&name) {
                        return Err(DvrpError::parse(n, format!("unknown feature '{name}'")));
                    }
                    m.features.push(name.to_string());
                    m.coefficients.push(num(2)?);
                    m.std_errors.push(num(3)?);
                    m.p_values.push(num(4)?);
                }
                "rss" => m.rss = num(1)?,
                "aic" => m.aic = num(1)?,
                other => return Err(DvrpError::parse(n, format!("unknown key '{other}'"))),
            }
        }
        if !have_intercept {
            return Err(DvrpError::parse(
                text.lines().count().max(1),
                "missing intercept",
            ));
        }
        Ok(m)
    }
}

/// Predicted ratio below 1 picks MEMSO, anything else 2MPSO.
pub fn choose_solver(model: &SelectorModel, features: &FeatureVector) -> (Algorithm, f64) {
    let r = model.predict(features);
    (decide(r), r)
}

pub fn decide(predicted_ratio: f64) -> Algorithm {
    if predicted_ratio < 1.0 {
        Algorithm::Memso
    } else {
        Algorithm::TwoMpso
    }
}
