use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use hermite_psido::algebra::{beals_test, BealsReport, NamedOperator};
use hermite_psido::hermite::QuadratureRule;
use hermite_psido::matrix::{
    classify, counterexample_2d, emit_plot_series, ClassifierConfig, ClassifierReport,
    OperatorMatrix,
};
use hermite_psido::quantizer::{dequantize_symbol, quantize, QuantizationConfig, Quantized};
use hermite_psido::Symbol;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, JobConfig};

/// The pipeline step a failure belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Symbol,
    Operator,
    Quantize,
    Classify,
    Beals,
    Roundtrip,
    Demo2d,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        write!(f, "{}", s.as_ref().and_then(Value::as_str).unwrap_or("unknown"))
    }
}

#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub error: anyhow::Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {:#}", self.stage, self.error)
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, StageError>;
}

impl<T, E: Into<anyhow::Error>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|e| StageError {
            stage,
            error: e.into(),
        })
    }
}

fn fail<T>(stage: Stage, msg: String) -> Result<T, StageError> {
    Err(StageError {
        stage,
        error: anyhow::anyhow!(msg),
    })
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub status: &'static str,
    pub command: &'static str,
    pub scalars: BTreeMap<String, Value>,
    pub files: Vec<String>,
}

struct Job<'a> {
    cfg: &'a JobConfig,
    out: &'a Path,
    scalars: BTreeMap<String, Value>,
    files: Vec<String>,
}

impl Job<'_> {
    fn scalar(&mut self, key: &str, value: Value) {
        self.scalars.insert(key.to_string(), value);
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, StageError> {
        let path: PathBuf = self.out.join(name);
        let file = File::create(&path).at(Stage::Output)?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), StageError> {
        let w = self.create(name)?;
        serde_json::to_writer_pretty(w, value).at(Stage::Output)
    }

    fn rows(&self) -> usize {
        self.cfg.truncation.rows
    }

    fn cols(&self) -> usize {
        self.cfg.truncation.cols.unwrap_or(self.cfg.truncation.rows)
    }

    fn symbol(&self) -> Result<Symbol, StageError> {
        match &self.cfg.operator.symbol {
            Some(src) => Symbol::parse(src, self.cfg.operator.order).at(Stage::Symbol),
            None => fail(Stage::Symbol, "this command needs operator.symbol".into()),
        }
    }

    fn quantization_config(&self, max_index: usize) -> QuantizationConfig {
        let q = &self.cfg.quantization;
        let mut c = QuantizationConfig::for_size(max_index).with_tolerance(q.tolerance);
        if let Some(l) = q.half_width {
            c.half_width = l;
            c.panels = (2.0 * l).ceil() as usize;
        }
        if let Some(p) = q.panels {
            c.panels = p;
        }
        if let Some(o) = q.order_per_panel {
            c.order_per_panel = o;
        }
        c
    }

    fn quantize_symbol(&mut self, sym: &Symbol, rows: usize, cols: usize) -> Result<Quantized, StageError> {
        let qcfg = self.quantization_config(rows.max(cols) - 1);
        let q = quantize(sym, rows, cols, &qcfg).at(Stage::Quantize)?;
        let w = self.create("convergence.csv")?;
        q.write_convergence_csv(w).at(Stage::Output)?;
        self.scalar("max_node_doubling_delta", json!(q.max_delta()));
        self.scalar("nonconverged_fraction", json!(q.nonconverged_fraction()));
        let limit = self.cfg.quantization.max_nonconverged_fraction;
        if q.nonconverged_fraction() > limit {
            return fail(
                Stage::Quantize,
                format!(
                    "{} of {} entries changed by more than {:e} under node doubling (allowed fraction {limit})",
                    q.nonconverged(),
                    q.convergence.len(),
                    q.tolerance
                ),
            );
        }
        Ok(q)
    }

    /// The operator's matrix with the configured pad, written to
    /// `matrix.json`.
    fn matrix(&mut self) -> Result<OperatorMatrix, StageError> {
        let op = &self.cfg.operator;
        let given = [op.name.is_some(), op.symbol.is_some(), op.matrix_file.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        if given != 1 {
            return fail(
                Stage::Config,
                "exactly one of operator.name, operator.symbol, operator.matrix_file is required".into(),
            );
        }
        let pad = self.cfg.truncation.pad;
        let (rows, cols) = (self.rows() + pad, self.cols() + pad);
        let k = if let Some(name) = &op.name {
            NamedOperator::from_name(name, op.param)
                .and_then(|o| o.matrix_of(rows, cols))
                .at(Stage::Operator)?
                .with_pad(pad)
        } else if let Some(path) = &op.matrix_file {
            let file = File::open(path)
                .map_err(anyhow::Error::from)
                .map_err(|e| e.context(format!("opening {}", path.display())))
                .at(Stage::Operator)?;
            OperatorMatrix::read_json(std::io::BufReader::new(file)).at(Stage::Operator)?
        } else {
            let sym = self.symbol()?;
            self.quantize_symbol(&sym, rows, cols)?.matrix.with_pad(pad)
        };
        self.scalar("rows", json!(k.rows()));
        self.scalar("cols", json!(k.cols()));
        self.scalar("pad", json!(k.pad()));
        let w = self.create("matrix.json")?;
        k.write_json(w).at(Stage::Output)?;
        Ok(k)
    }

    fn classify(&mut self, k: &OperatorMatrix) -> Result<ClassifierReport, StageError> {
        let c = &self.cfg.classify;
        let config = ClassifierConfig::new(c.r, c.alpha_max, c.n_max).with_floor(c.floor);
        let rep = classify(k, &config).at(Stage::Classify)?;
        let w = self.create("classifier.csv")?;
        rep.write_csv(w).at(Stage::Output)?;
        let w = self.create("classifier_constants.csv")?;
        rep.write_constants_csv(w).at(Stage::Output)?;
        let series = emit_plot_series(&rep);
        let w = self.create("plot_series.csv")?;
        series.write_csv(w).at(Stage::Output)?;
        if let Some(note) = &series.note {
            self.scalar("plot_note", json!(note));
        }
        self.scalar("classify_r", json!(c.r));
        self.scalar("classify_pass", json!(rep.pass));
        self.scalar("diagonal_slopes", json!(rep.diagonal_slopes));
        self.scalar("classify_failures", json!(rep.failures));
        Ok(rep)
    }

    fn beals(&mut self, k: &OperatorMatrix) -> Result<BealsReport, StageError> {
        let b = &self.cfg.beals;
        let rep = beals_test(k, b.r, b.alpha_max, b.beta_max, &b.s_list).at(Stage::Beals)?;
        let w = self.create("beals.csv")?;
        rep.write_csv(w).at(Stage::Output)?;
        self.scalar("beals_r", json!(b.r));
        self.scalar("beals_pass", json!(rep.pass));
        if rep.pad_exhausted() {
            return fail(
                Stage::Beals,
                format!(
                    "pad {} exhausted; beta_max {} needs at least that many extra rows",
                    k.pad(),
                    b.beta_max
                ),
            );
        }
        Ok(rep)
    }

    fn roundtrip(&mut self) -> Result<(), StageError> {
        let sym = self.symbol()?;
        let (rows, cols) = (self.rows(), self.cols());
        let k = self.quantize_symbol(&sym, rows, cols)?.matrix;
        let rt = &self.cfg.roundtrip;
        if rt.points < 2 || !(rt.half_width > 0.0) {
            return fail(Stage::Roundtrip, "roundtrip grid needs points >= 2 and half_width > 0".into());
        }
        let grid: Vec<f64> = (0..rt.points)
            .map(|i| -rt.half_width + 2.0 * rt.half_width * i as f64 / (rt.points - 1) as f64)
            .collect();
        let a = dequantize_symbol(&k, &grid, &grid, &QuadratureRule::for_products(rows.max(cols)));
        let mut w = csv::Writer::from_writer(self.create("roundtrip.csv")?);
        w.write_record(["x", "xi", "exact_re", "exact_im", "recovered_re", "recovered_im", "rel_error"])
            .at(Stage::Output)?;
        let mut worst: f64 = 0.0;
        for (i, &x) in grid.iter().enumerate() {
            for (j, &xi) in grid.iter().enumerate() {
                let want = sym.eval(x, xi);
                let got = a[i][j];
                let rel = (got - want).norm() / want.norm().max(f64::MIN_POSITIVE);
                worst = worst.max(rel);
                w.write_record([
                    format!("{x}"),
                    format!("{xi}"),
                    format!("{:.12e}", want.re),
                    format!("{:.12e}", want.im),
                    format!("{:.12e}", got.re),
                    format!("{:.12e}", got.im),
                    format!("{rel:.6e}"),
                ])
                .at(Stage::Output)?;
            }
        }
        w.flush().at(Stage::Output)?;
        self.scalar("max_relative_error", json!(worst));
        Ok(())
    }

    fn demo2d(&mut self) -> Result<(), StageError> {
        let rep = counterexample_2d().at(Stage::Demo2d)?;
        self.write_json("counterexample.json", &rep)?;
        self.scalar("max_abs_slope_in_n2", json!(rep.max_abs_slope_in_n2));
        self.scalar("box_constant", json!(rep.box_constant));
        self.scalar("stated_form_error", json!(rep.stated_form_error));
        self.scalar("closed_form_error", json!(rep.closed_form_error));
        self.scalar("one_d_bound_growth", json!(rep.one_d_bound_full / rep.one_d_bound_half));
        Ok(())
    }
}

pub fn run(cfg: &JobConfig, out: &Path, metadata: bool) -> Result<Summary, StageError> {
    fs::create_dir_all(out).at(Stage::Output)?;
    let mut job = Job {
        cfg,
        out,
        scalars: BTreeMap::new(),
        files: Vec::new(),
    };
    match cfg.command {
        Command::Quantize => {
            job.matrix()?;
        }
        Command::Classify => {
            let k = job.matrix()?;
            job.classify(&k)?;
        }
        Command::Beals => {
            let k = job.matrix()?;
            job.beals(&k)?;
        }
        Command::Roundtrip => job.roundtrip()?,
        Command::Demo2d => job.demo2d()?,
        Command::Report => {
            let k = job.matrix()?;
            let c = job.classify(&k)?;
            let b = job.beals(&k)?;
            job.scalar("concordant", json!(c.pass == b.pass));
        }
    }
    if metadata {
        let stamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let meta = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": cfg.command.name(),
            "unix_time": stamp,
            "threads": rayon::current_num_threads(),
        });
        job.write_json("metadata.json", &meta)?;
    }
    Ok(Summary {
        status: "ok",
        command: cfg.command.name(),
        scalars: job.scalars,
        files: job.files,
    })
}
