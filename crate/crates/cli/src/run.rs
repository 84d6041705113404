//! Turns a [`RunSpec`] into library calls and CSV rows.

use std::fs::File;
use std::io::BufReader;

use bicm::{
    read_alphabet, Alphabet64, Backend, ChannelKind, Constellation, Engine, EngineConfig, ExtrinsicModel,
    GallagerFamily, Labeling, MetricKind, MetricSpec64, RandomCodeExperiment, SMode, Scenario64,
};

use crate::config::{Command, RunSpec};
use crate::CliError;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn constellation(name: &str) -> Result<Constellation<f64>, CliError> {
    let order = |digits: &str| digits.parse::<usize>().map_err(|_| usage(format!("unknown constellation {name:?}")));
    let built = match name {
        "bpsk" => Constellation::psk(2),
        "qpsk" => Constellation::qam(4),
        _ => {
            if let Some(m) = name.strip_prefix("psk") {
                Constellation::psk(order(m)?)
            } else if let Some(m) = name.strip_prefix("qam") {
                Constellation::qam(order(m)?)
            } else {
                return Err(usage(format!("unknown constellation {name:?}")));
            }
        }
    };
    built.map_err(|e| usage(e.to_string()))
}

/// Labeled constellation named by `spec`.
pub fn alphabet(name: &str, labeling: &str) -> Result<Alphabet64, CliError> {
    if let Some(path) = name.strip_prefix("file:") {
        let file = File::open(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
        let (alphabet, _scale) = read_alphabet(path, BufReader::new(file)).map_err(|e| match e {
            bicm::Error::Parse { line, message } => CliError::Config { line, message: format!("{path}: {message}") },
            other => usage(format!("{path}: {other}")),
        })?;
        return Ok(alphabet);
    }
    let c = constellation(name)?;
    let built = match labeling {
        "brgc" => Alphabet64::gray(c),
        "natural" => Labeling::natural(c.bits()).and_then(|l| Alphabet64::new(c, l)),
        other => return Err(usage(format!("unknown labeling {other:?}"))),
    };
    built.map_err(|e| usage(e.to_string()))
}

fn metric(name: &str, extrinsic: &ExtrinsicModel<f64>) -> Result<MetricSpec64, CliError> {
    let kind: MetricKind<f64> = name.parse().map_err(|e: bicm::Error| usage(e.to_string()))?;
    Ok(MetricSpec64::with_extrinsic(kind, extrinsic.clone()))
}

/// `cm`, `ind`, `<metric>`, `<metric>-coupled` or `<metric>@<s>`.
fn family(name: &str, extrinsic: &ExtrinsicModel<f64>) -> Result<GallagerFamily<f64>, CliError> {
    Ok(match name {
        "cm" => GallagerFamily::Cm,
        "ind" => GallagerFamily::Ind,
        _ => {
            if let Some(base) = name.strip_suffix("-coupled") {
                GallagerFamily::mismatched(metric(base, extrinsic)?, SMode::Coupled)
            } else if let Some((base, s)) = name.split_once('@') {
                let s: f64 = s.parse().ok().filter(|s: &f64| *s > 0.0 && s.is_finite()).ok_or_else(|| {
                    usage(format!("family {name:?}: s must be a positive number"))
                })?;
                GallagerFamily::mismatched(metric(base, extrinsic)?, SMode::Fixed(s))
            } else {
                GallagerFamily::mismatched(metric(name, extrinsic)?, SMode::Optimize)
            }
        }
    })
}

/// Typed objects behind a [`RunSpec`].
pub struct Plan {
    pub alphabet: Alphabet64,
    pub channel: ChannelKind,
    pub engine: Engine,
    pub metrics: Vec<MetricSpec64>,
    pub families: Vec<GallagerFamily<f64>>,
}

impl Plan {
    pub fn build(spec: &RunSpec) -> Result<Plan, CliError> {
        let alphabet = alphabet(&spec.constellation, &spec.labeling)?;
        let channel: ChannelKind = spec.channel.parse().map_err(|e: bicm::Error| usage(e.to_string()))?;
        let backend: Backend = spec.backend.parse().map_err(|e: bicm::Error| usage(e.to_string()))?;
        if backend == Backend::GaussHermite && channel == ChannelKind::Rayleigh {
            return Err(usage("the gauss_hermite backend supports awgn only"));
        }
        let engine = Engine::new(EngineConfig {
            backend,
            samples: spec.samples,
            nodes_per_axis: spec.nodes,
            seed: spec.seed,
        })
        .map_err(|e| usage(e.to_string()))?;
        let extrinsic: ExtrinsicModel<f64> = spec.extrinsic.parse().map_err(|e: bicm::Error| usage(e.to_string()))?;
        let mut metrics = Vec::new();
        let mut families = Vec::new();
        match spec.command {
            Command::Capacity => {
                if let Some(bad) = spec.metrics.iter().find(|m| !matches!(m.as_str(), "cm" | "bicm")) {
                    return Err(usage(format!("unknown measure {bad:?}; expected cm or bicm")));
                }
            }
            Command::Gmi | Command::Cutoff | Command::Validate => {
                metrics = spec.metrics.iter().map(|m| metric(m, &extrinsic)).collect::<Result<_, _>>()?;
            }
            Command::Exponent => {
                families = spec.metrics.iter().map(|m| family(m, &extrinsic)).collect::<Result<_, _>>()?;
            }
        }
        Ok(Plan { alphabet, channel, engine, metrics, families })
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

struct Table {
    writer: csv::Writer<Vec<u8>>,
    spec_columns: Vec<String>,
    engine_columns: Vec<String>,
}

impl Table {
    fn new(spec: &RunSpec, columns: &[&str]) -> Result<Table, CliError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["constellation", "labeling", "channel", "snr_db"];
        header.extend_from_slice(columns);
        header.extend_from_slice(&["backend", "samples", "nodes", "seed"]);
        writer.write_record(&header)?;
        Ok(Table {
            writer,
            spec_columns: vec![spec.constellation.clone(), spec.labeling.clone(), spec.channel.clone()],
            engine_columns: vec![spec.backend.clone(), spec.samples.to_string(), spec.nodes.to_string(), spec.seed.to_string()],
        })
    }

    fn row(&mut self, snr_db: f64, values: Vec<String>) -> Result<(), CliError> {
        let mut record = self.spec_columns.clone();
        record.push(num(snr_db));
        record.extend(values);
        record.extend(self.engine_columns.iter().cloned());
        self.writer.write_record(&record)?;
        Ok(())
    }

    fn finish(self) -> Result<String, CliError> {
        let bytes = self.writer.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

const MEASURE_COLUMNS: &[&str] =
    &["measure", "value_bits", "std_error", "s_opt", "per_bit", "pseudo", "converged"];

fn measure_row(name: String, r: &bicm::MeasureResult<f64>) -> Vec<String> {
    let per_bit = r.per_bit.as_ref().map(|v| v.iter().map(|b| num(*b)).collect::<Vec<_>>().join(";"));
    vec![
        name,
        num(r.value),
        num(r.std_error),
        opt(r.s_opt),
        per_bit.unwrap_or_default(),
        r.pseudo.to_string(),
        r.converged.to_string(),
    ]
}

/// Executes `spec` and returns the CSV text, header included.
pub fn execute(spec: &RunSpec) -> Result<String, CliError> {
    let plan = Plan::build(spec)?;
    let scenario = |snr_db: f64| -> Result<Scenario64, CliError> {
        let channel = bicm::Channel64::from_db(plan.channel, snr_db)?;
        Ok(Scenario64::new(channel, plan.alphabet.clone(), plan.engine)?)
    };
    let mut table = match spec.command {
        Command::Capacity | Command::Gmi => Table::new(spec, MEASURE_COLUMNS)?,
        Command::Exponent => Table::new(
            spec,
            &["family", "R_bits", "Er_nats", "rho_opt", "s_opt", "std_error", "converged"],
        )?,
        Command::Cutoff => Table::new(spec, &["quantity", "value_nats", "std_error", "s_opt"])?,
        Command::Validate => Table::new(
            spec,
            &[
                "N", "R_bits", "metric", "trials", "codewords", "errors", "Pe_hat", "ci_halfwidth", "bound",
                "rho_opt", "s_opt", "within_bound",
            ],
        )?,
    };
    for &snr_db in &spec.snr_db {
        let sc = scenario(snr_db)?;
        match spec.command {
            Command::Capacity => {
                for name in &spec.metrics {
                    let r = if name == "cm" { sc.cm_capacity()? } else { sc.bicm_capacity()? };
                    table.row(snr_db, measure_row(name.clone(), &r))?;
                }
            }
            Command::Gmi => {
                for m in &plan.metrics {
                    let r = if m.kind == MetricKind::ExtrinsicTx {
                        sc.pseudo_gmi_extrinsic_tx(&m.extrinsic)?
                    } else if m.kind.is_bitwise() {
                        sc.gmi_per_bit(m, spec.s)?
                    } else {
                        match spec.s {
                            Some(s) => sc.gmi_at_s(m, s)?,
                            None => sc.gmi(m)?,
                        }
                    };
                    table.row(snr_db, measure_row(format!("gmi:{m}"), &r))?;
                }
            }
            Command::Exponent => {
                for (name, family) in spec.metrics.iter().zip(&plan.families) {
                    for &rate in &spec.rates {
                        let p = sc.random_coding_exponent(family, rate)?;
                        table.row(
                            snr_db,
                            vec![
                                name.clone(),
                                num(rate),
                                num(p.exponent),
                                num(p.rho_opt),
                                opt(p.s_opt),
                                num(p.std_error),
                                p.converged.to_string(),
                            ],
                        )?;
                    }
                }
            }
            Command::Cutoff => {
                let mut shared = None;
                for m in &plan.metrics {
                    let r0 = sc.cutoff_rates(m)?;
                    if shared.is_none() {
                        table.row(snr_db, vec!["r0_cm".into(), num(r0.r0_cm.mean), num(r0.r0_cm.std_error), String::new()])?;
                        table.row(snr_db, vec!["r0_ind".into(), num(r0.r0_ind.mean), num(r0.r0_ind.std_error), String::new()])?;
                        table.row(snr_db, vec!["r0_av".into(), num(r0.r0_av.mean), num(r0.r0_av.std_error), String::new()])?;
                        shared = Some(());
                    }
                    table.row(snr_db, vec![format!("r0_q:{m}"), num(r0.r0_q.mean), num(r0.r0_q.std_error), num(r0.s_q)])?;
                }
            }
            Command::Validate => {
                let m = &plan.metrics[0];
                let n = spec.block_length.expect("validate spec has N");
                let rate = spec.rate.expect("validate spec has a rate");
                let trials = spec.trials.expect("validate spec has trials");
                let r = RandomCodeExperiment::new(n, rate, trials, m.kind, spec.seed).run_in(&sc)?;
                table.row(
                    snr_db,
                    vec![
                        n.to_string(),
                        num(rate),
                        m.to_string(),
                        trials.to_string(),
                        r.codewords.to_string(),
                        r.errors.to_string(),
                        num(r.error_rate),
                        num(r.ci_halfwidth),
                        num(r.bound),
                        num(r.exponent.rho_opt),
                        opt(r.exponent.s_opt),
                        r.respects_bound().to_string(),
                    ],
                )?;
            }
        }
    }
    Ok(spec.header() + &table.finish()?)
}
